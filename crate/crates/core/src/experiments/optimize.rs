//! Gradient descent on signed, weighted combinations of diagram losses,
//! rebuilding the filtration from the current parameters at every step.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::backprop::{diagram_to_simplex_grad, simplex_to_point_grad, simplex_to_vertex_grad};
use crate::complex::SimplicialComplex;
use crate::diagram::{polynomial_loss, LossSpec};
use crate::error::{Result, TopoError};
use crate::filtration::{
    lower_star_with, rips_filtration_with, weak_alpha_filtration_with, Direction, Filtration,
    PointCloud, ScalarField, TieBreak,
};
use crate::persistence::{pd0_union_find, reduce, PersistenceDiagram};

/// One term of an objective: `sign · weight · E(spec)`, minimized. A
/// positive sign decreases the loss term, a negative sign increases it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedLoss {
    pub spec: LossSpec,
    pub sign: f64,
    pub weight: f64,
}

impl WeightedLoss {
    pub fn decrease(spec: LossSpec) -> Self {
        Self {
            spec,
            sign: 1.0,
            weight: 1.0,
        }
    }

    pub fn increase(spec: LossSpec) -> Self {
        Self {
            spec,
            sign: -1.0,
            weight: 1.0,
        }
    }
}

impl fmt::Display for WeightedLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.sign < 0.0 { "-" } else { "+" }, self.spec)?;
        if self.weight != 1.0 {
            write!(f, "*{}", self.weight)?;
        }
        Ok(())
    }
}

impl FromStr for WeightedLoss {
    type Err = TopoError;

    /// Loss notation with an optional sign and weight:
    /// `-E(2,1,1;PD1)*0.5` means "increase E(2,1,1;PD1), weight 0.5".
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, rest) = match s.strip_prefix('-') {
            Some(r) => (-1.0, r),
            None => (1.0, s.strip_prefix('+').unwrap_or(s)),
        };
        let (spec_str, weight) = match rest.rsplit_once('*') {
            Some((l, w)) => (
                l,
                w.trim().parse::<f64>().map_err(|_| {
                    TopoError::InvalidInput(format!("bad loss weight in '{s}'"))
                })?,
            ),
            None => (rest, 1.0),
        };
        if !weight.is_finite() {
            return Err(TopoError::InvalidInput(format!("bad loss weight in '{s}'")));
        }
        Ok(WeightedLoss {
            spec: spec_str.parse()?,
            sign,
            weight,
        })
    }
}

/// Which filtration the optimization differentiates through.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FiltrationKind {
    LowerStar {
        direction: Direction,
    },
    Rips {
        max_hom_dim: usize,
        /// Edge-length cutoff; `None` uses the current point-set diameter.
        threshold: Option<f64>,
    },
    WeakAlpha,
}

#[derive(Clone, Debug)]
pub struct OptimizationConfig {
    pub losses: Vec<WeightedLoss>,
    pub kind: FiltrationKind,
    pub step_size: f64,
    pub steps: usize,
    pub seed: u64,
    pub tie_break: TieBreak,
    /// Halve the step until the objective does not increase.
    pub backtracking: bool,
    /// Record a snapshot every this many steps (0: first and last only).
    pub snapshot_every: usize,
}

impl OptimizationConfig {
    pub fn new(losses: Vec<WeightedLoss>, kind: FiltrationKind) -> Self {
        let step_size = match kind {
            FiltrationKind::LowerStar { .. } => 1e-1,
            _ => 1e-2,
        };
        Self {
            losses,
            kind,
            step_size,
            steps: 100,
            seed: 0,
            tie_break: TieBreak::Deterministic,
            backtracking: false,
            snapshot_every: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.losses.is_empty() {
            return Err(TopoError::InvalidInput("no loss terms".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(TopoError::InvalidInput("step size must be positive".into()));
        }
        if let FiltrationKind::Rips { max_hom_dim, .. } = self.kind {
            let needed = self.losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
            if max_hom_dim < needed {
                return Err(TopoError::InvalidInput(format!(
                    "Rips max_hom_dim {max_hom_dim} below the largest loss dimension {needed}"
                )));
            }
        }
        Ok(())
    }

    fn max_loss_dim(&self) -> usize {
        self.losses.iter().map(|l| l.spec.k).max().unwrap_or(0)
    }
}

/// States visited by an optimization run.
pub struct Trajectory<T> {
    /// Objective value before each step plus the final value
    /// (`steps + 1` entries).
    pub losses: Vec<f64>,
    pub snapshots: Vec<(usize, T)>,
    pub final_state: T,
    /// Zero-length controller edges encountered across the run.
    pub degenerate_edge_events: usize,
}

fn diagram_for(
    filtration: &Filtration,
    max_dim: usize,
) -> Result<PersistenceDiagram> {
    if max_dim == 0 {
        pd0_union_find(filtration)
    } else {
        reduce(filtration, max_dim)
    }
}

fn combined_loss(
    diagram: &PersistenceDiagram,
    losses: &[WeightedLoss],
    n_simplices: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut total = 0.0;
    let mut sg = vec![0.0f64; n_simplices];
    for wl in losses {
        let (e, dg) = polynomial_loss(diagram, &wl.spec)?;
        let scale = wl.sign * wl.weight;
        total += scale * e;
        let part = diagram_to_simplex_grad(diagram, &dg)?;
        for (acc, g) in sg.iter_mut().zip(&part) {
            *acc += scale * g;
        }
    }
    Ok((total, sg))
}

fn build_cloud_filtration(
    cloud: &PointCloud,
    kind: &FiltrationKind,
    tie: TieBreak,
) -> Result<Filtration> {
    match *kind {
        FiltrationKind::Rips {
            max_hom_dim,
            threshold,
        } => {
            let t = match threshold {
                Some(t) => t,
                None => cloud.diameter().max(f64::MIN_POSITIVE),
            };
            rips_filtration_with(cloud, max_hom_dim, t, tie)
        }
        FiltrationKind::WeakAlpha => weak_alpha_filtration_with(cloud, tie),
        FiltrationKind::LowerStar { .. } => Err(TopoError::InvalidInput(
            "lower-star filtrations do not apply to point clouds".into(),
        )),
    }
}

/// Objective, coordinate gradient and degenerate-edge count for a point
/// cloud under the given filtration kind.
pub fn cloud_loss_and_grad(
    cloud: &PointCloud,
    losses: &[WeightedLoss],
    kind: &FiltrationKind,
    tie: TieBreak,
) -> Result<(f64, Vec<f64>, usize)> {
    let filtration = build_cloud_filtration(cloud, kind, tie)?;
    let max_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let diagram = diagram_for(&filtration, max_dim)?;
    let (total, sg) = combined_loss(&diagram, losses, filtration.len())?;
    let pg = simplex_to_point_grad(&filtration, cloud, &sg)?;
    Ok((total, pg.grad, pg.degenerate_edges))
}

/// Objective and per-vertex gradient for a scalar field under a lower-star
/// filtration on the given complex.
pub fn field_loss_and_grad(
    field: &ScalarField,
    complex: &Arc<SimplicialComplex>,
    losses: &[WeightedLoss],
    direction: Direction,
    tie: TieBreak,
) -> Result<(f64, Vec<f64>)> {
    let filtration = lower_star_with(Arc::clone(complex), field, direction, tie)?;
    let max_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let diagram = diagram_for(&filtration, max_dim.min(complex.max_dimension()))?;
    let (total, sg) = combined_loss(&diagram, losses, filtration.len())?;
    let vg = simplex_to_vertex_grad(&filtration, &sg)?;
    Ok((total, vg))
}

fn with_step_context<T>(step: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        TopoError::Degenerate(m) => TopoError::Degenerate(format!("step {step}: {m}")),
        other => other,
    })
}

/// Fixed-step (optionally backtracking) gradient descent on the point
/// coordinates, rebuilding the complex every step.
pub fn optimize_point_cloud(
    cloud: &PointCloud,
    cfg: &OptimizationConfig,
) -> Result<Trajectory<PointCloud>> {
    cfg.validate()?;
    let mut state = cloud.clone();
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut snapshots = vec![(0usize, state.clone())];
    let mut degenerate = 0usize;

    let eval = |c: &PointCloud, step: usize| {
        with_step_context(step, cloud_loss_and_grad(c, &cfg.losses, &cfg.kind, cfg.tie_break))
    };
    let (mut current, mut grad, mut dg) = eval(&state, 0)?;
    degenerate += dg;
    for step in 0..cfg.steps {
        losses.push(current);
        let mut lr = cfg.step_size;
        loop {
            let coords: Vec<f64> = state
                .coords()
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - lr * g)
                .collect();
            let candidate = state.with_coords(coords)?;
            let (next, next_grad, next_dg) = eval(&candidate, step + 1)?;
            if cfg.backtracking && next > current && lr > cfg.step_size * 2f64.powi(-40) {
                lr *= 0.5;
                continue;
            }
            state = candidate;
            current = next;
            grad = next_grad;
            dg = next_dg;
            break;
        }
        degenerate += dg;
        if cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0 {
            snapshots.push((step + 1, state.clone()));
        }
    }
    losses.push(current);
    if snapshots.last().map(|s| s.0) != Some(cfg.steps) {
        snapshots.push((cfg.steps, state.clone()));
    }
    Ok(Trajectory {
        losses,
        snapshots,
        final_state: state,
        degenerate_edge_events: degenerate,
    })
}

/// Gradient descent on the values of a scalar field under a lower-star
/// filtration of its grid (or line) complex.
pub fn optimize_scalar_field(
    field: &ScalarField,
    cfg: &OptimizationConfig,
) -> Result<Trajectory<ScalarField>> {
    cfg.validate()?;
    let FiltrationKind::LowerStar { direction } = cfg.kind else {
        return Err(TopoError::InvalidInput(
            "scalar-field optimization needs a lower-star filtration".into(),
        ));
    };
    if cfg.max_loss_dim() > 2 {
        return Err(TopoError::InvalidInput(
            "grid complexes support homology dimensions 0 and 1 only".into(),
        ));
    }
    let complex = Arc::new(field.complex()?);
    let mut state = field.clone();
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut snapshots = vec![(0usize, state.clone())];

    let (mut current, mut grad) =
        field_loss_and_grad(&state, &complex, &cfg.losses, direction, cfg.tie_break)?;
    for step in 0..cfg.steps {
        losses.push(current);
        let mut lr = cfg.step_size;
        loop {
            let values: Vec<f64> = state
                .values()
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - lr * g)
                .collect();
            let candidate = state.with_values(values)?;
            let (next, next_grad) = with_step_context(
                step + 1,
                field_loss_and_grad(&candidate, &complex, &cfg.losses, direction, cfg.tie_break),
            )?;
            if cfg.backtracking && next > current && lr > cfg.step_size * 2f64.powi(-40) {
                lr *= 0.5;
                continue;
            }
            state = candidate;
            current = next;
            grad = next_grad;
            break;
        }
        if cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0 {
            snapshots.push((step + 1, state.clone()));
        }
    }
    losses.push(current);
    if snapshots.last().map(|s| s.0) != Some(cfg.steps) {
        snapshots.push((cfg.steps, state.clone()));
    }
    Ok(Trajectory {
        losses,
        snapshots,
        final_state: state,
        degenerate_edge_events: 0,
    })
}
