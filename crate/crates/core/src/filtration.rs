//! Filtrations: per-simplex entry values extended from vertex functions
//! (lower-star) or edge lengths (flag), a strict total order on simplices,
//! and a record of which parameter controls each simplex's value.
//!
//! Internally every filtration is stored in ascending (sublevel) form;
//! superlevel filtrations negate the vertex values on the way in and report
//! diagram coordinates back in the original scale. The strict order sorts
//! by `(value, dimension, vertex tuple)`, or by a seeded permutation on
//! ties, which always places faces before cofaces.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::complex::{freudenthal_grid, Simplex, SimplicialComplex};
use crate::delaunay::delaunay_2d;
use crate::error::{Result, TopoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sublevel,
    Superlevel,
}

impl Direction {
    /// Map an original value onto the internal ascending scale.
    pub fn internalize(self, x: f64) -> f64 {
        match self {
            Direction::Sublevel => x,
            Direction::Superlevel => -x,
        }
    }

    /// Map an internal value back onto the original scale (involution).
    pub fn report(self, x: f64) -> f64 {
        self.internalize(x)
    }
}

/// How equal filtration values are turned into a strict order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    /// Sort ties by `(dimension, vertex tuple)`.
    Deterministic,
    /// Sort ties by a seeded random priority; different seeds sample
    /// different subgradient elements at tie points.
    Seeded(u64),
}

/// The parameter that controls a simplex's filtration value: the argmax
/// vertex (lower-star), the argmax edge (flag), or nothing for simplices
/// entering at a fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Controller {
    Constant,
    Vertex(u32),
    Edge(u32, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ExtensionKind {
    LowerStar,
    Flag,
    /// Values assigned directly to simplices; no parameter controls them.
    Raw,
}

/// Shape metadata for a scalar field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldShape {
    Grid { rows: usize, cols: usize },
    Line { len: usize },
}

impl FieldShape {
    pub fn len(&self) -> usize {
        match *self {
            FieldShape::Grid { rows, cols } => rows * cols,
            FieldShape::Line { len } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A real value per grid vertex (image) or per index (line topology).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: FieldShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn grid(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(TopoError::InvalidInput(format!(
                "expected {}×{} = {} values, got {}",
                rows,
                cols,
                rows * cols,
                values.len()
            )));
        }
        Self::checked(FieldShape::Grid { rows, cols }, values)
    }

    pub fn line(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::checked(FieldShape::Line { len }, values)
    }

    fn checked(shape: FieldShape, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(TopoError::InvalidInput("empty scalar field".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TopoError::InvalidInput("non-finite field value".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> FieldShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.shape {
            FieldShape::Grid { cols, .. } => self.values[i * cols + j],
            FieldShape::Line { .. } => {
                debug_assert_eq!(i, 0);
                self.values[j]
            }
        }
    }

    /// Same shape, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(TopoError::InvalidInput("shape mismatch".into()));
        }
        Self::checked(self.shape, values)
    }

    /// The Freudenthal triangulation underlying this field: pixel grid for
    /// images, path graph for line topology.
    pub fn complex(&self) -> Result<SimplicialComplex> {
        match self.shape {
            FieldShape::Grid { rows, cols } => freudenthal_grid(rows, cols),
            FieldShape::Line { len } => freudenthal_grid(1, len),
        }
    }
}

/// An `n × d` point set, `d ∈ {2, 3}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(TopoError::InvalidInput(format!(
                "point dimension must be 2 or 3, got {dim}"
            )));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(TopoError::InvalidInput(format!(
                "coordinate array of length {} is not a multiple of {}",
                coords.len(),
                dim
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(TopoError::InvalidInput("non-finite coordinate".into()));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_xy(points: &[[f64; 2]]) -> Result<Self> {
        Self::from_flat(points.iter().flatten().copied().collect(), 2)
    }

    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_2d(&self) -> Result<Vec<[f64; 2]>> {
        if self.dim != 2 {
            return Err(TopoError::InvalidInput(
                "operation requires 2D points".into(),
            ));
        }
        Ok((0..self.n_points())
            .map(|i| [self.coords[2 * i], self.coords[2 * i + 1]])
            .collect())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn diameter(&self) -> f64 {
        let n = self.n_points();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(self.distance(i, j));
            }
        }
        best
    }

    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.coords.len() {
            return Err(TopoError::InvalidInput("shape mismatch".into()));
        }
        Self::from_flat(coords, self.dim)
    }
}

/// A simplicial complex together with per-simplex entry values, a strict
/// total order, and per-simplex controllers for gradient routing.
pub struct Filtration {
    complex: Arc<SimplicialComplex>,
    /// Internal (ascending) filtration values per simplex id.
    values: Vec<f64>,
    /// Strict order: `order[p]` is the simplex id at position `p`.
    order: Vec<usize>,
    /// Inverse of `order`.
    position: Vec<usize>,
    controller: Vec<Controller>,
    direction: Direction,
    tie_break: TieBreak,
    kind: ExtensionKind,
}

impl Filtration {
    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn complex_arc(&self) -> Arc<SimplicialComplex> {
        Arc::clone(&self.complex)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Internal (ascending-scale) value of a simplex.
    pub fn value(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// Value of a simplex in the original coordinates of the input.
    pub fn reported_value(&self, id: usize) -> f64 {
        self.direction.report(self.values[id])
    }

    /// The strict total order as a permutation: position → simplex id.
    pub fn strict_order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, id: usize) -> usize {
        self.position[id]
    }

    pub fn controller(&self, id: usize) -> Controller {
        self.controller[id]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    /// Rebuild the strict order (and the tie-dependent controllers) under a
    /// different tie-break rule.
    pub fn reorder(&self, tie_break: TieBreak) -> Filtration {
        build_filtration(
            Arc::clone(&self.complex),
            self.values.clone(),
            self.direction,
            tie_break,
            self.kind,
        )
    }

    /// The subcomplex of simplices with internal value ≤ `alpha`
    /// (face-closed by monotonicity). Oracle helper for small instances.
    pub fn sublevel_subcomplex(&self, alpha: f64) -> Result<SimplicialComplex> {
        let sims: Vec<Simplex> = self
            .complex
            .iter()
            .filter(|&(id, _)| self.values[id] <= alpha)
            .map(|(_, s)| s.clone())
            .collect();
        crate::complex::from_closed_set(sims)
    }

    /// Check that every face enters no later than its cofaces.
    pub fn is_monotone(&self) -> bool {
        self.complex.iter().all(|(id, _)| {
            self.complex
                .faces_of(id)
                .iter()
                .all(|&f| self.values[f] <= self.values[id])
        })
    }

    /// Build a filtration from explicit per-simplex values in the original
    /// coordinates of `direction`. Every controller is `Constant`, so no
    /// gradient flows out of such a filtration; meant for tests and for
    /// driving the reduction on ad-hoc orderings.
    #[doc(hidden)]
    pub fn from_monotone_values(
        complex: Arc<SimplicialComplex>,
        values: Vec<f64>,
        direction: Direction,
        tie_break: TieBreak,
    ) -> Result<Filtration> {
        if values.len() != complex.simplex_count() {
            return Err(TopoError::InvalidInput(format!(
                "expected {} simplex values, got {}",
                complex.simplex_count(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(TopoError::InvalidInput("empty filtration".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TopoError::InvalidInput("non-finite filtration value".into()));
        }
        let internal: Vec<f64> = values.iter().map(|&v| direction.internalize(v)).collect();
        let f = build_filtration(complex, internal, direction, tie_break, ExtensionKind::Raw);
        if !f.is_monotone() {
            return Err(TopoError::InvalidInput(
                "values are not monotone: a face enters after its coface".into(),
            ));
        }
        Ok(f)
    }
}

fn tie_perm(n: usize, seed: u64) -> Vec<u64> {
    let mut idx: Vec<u64> = (0..n as u64).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Assemble a filtration from internal values: pick the strict order and
/// the argmax controllers consistent with it.
fn build_filtration(
    complex: Arc<SimplicialComplex>,
    values: Vec<f64>,
    direction: Direction,
    tie_break: TieBreak,
    kind: ExtensionKind,
) -> Filtration {
    let n = values.len();
    let perm = match tie_break {
        TieBreak::Deterministic => None,
        TieBreak::Seeded(seed) => Some(tie_perm(n, seed)),
    };
    let key = |id: usize| -> u64 {
        match &perm {
            None => id as u64,
            Some(p) => p[id],
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("finite filtration values")
            .then(complex.dim_of(a).cmp(&complex.dim_of(b)))
            .then(key(a).cmp(&key(b)))
    });
    let mut position = vec![0usize; n];
    for (p, &id) in order.iter().enumerate() {
        position[id] = p;
    }

    // Controller = the argmax parameter that enters last in the strict
    // order, i.e. max by (value, tie key) among the vertices (lower-star)
    // or edges (flag) of the simplex.
    let mut controller = vec![Controller::Constant; n];
    for (id, s) in complex.iter() {
        match kind {
            ExtensionKind::Raw => {}
            ExtensionKind::LowerStar => {
                let best = s
                    .vertices()
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        let (a, b) = (a as usize, b as usize);
                        values[a]
                            .partial_cmp(&values[b])
                            .unwrap()
                            .then(key(a).cmp(&key(b)))
                    })
                    .expect("non-empty simplex");
                controller[id] = Controller::Vertex(best);
            }
            ExtensionKind::Flag => {
                if s.dim() == 0 {
                    controller[id] = Controller::Constant;
                } else if s.dim() == 1 {
                    let vs = s.vertices();
                    controller[id] = Controller::Edge(vs[0], vs[1]);
                } else {
                    let vs = s.vertices();
                    let mut best: Option<usize> = None;
                    for i in 0..vs.len() {
                        for j in i + 1..vs.len() {
                            let eid = complex
                                .index_of(&[vs[i], vs[j]])
                                .expect("flag complex contains all edges of its simplices");
                            best = Some(match best {
                                None => eid,
                                Some(cur) => {
                                    let newer = values[eid]
                                        .partial_cmp(&values[cur])
                                        .unwrap()
                                        .then(key(eid).cmp(&key(cur)))
                                        .is_gt();
                                    if newer {
                                        eid
                                    } else {
                                        cur
                                    }
                                }
                            });
                        }
                    }
                    let evs = complex.simplex(best.unwrap()).vertices();
                    controller[id] = Controller::Edge(evs[0], evs[1]);
                }
            }
        }
    }

    Filtration {
        complex,
        values,
        order,
        position,
        controller,
        direction,
        tie_break,
        kind,
    }
}

/// Lower-star extension of a vertex function: every simplex enters at the
/// extremal value over its vertices, and that vertex controls it.
pub fn lower_star(
    complex: Arc<SimplicialComplex>,
    field: &ScalarField,
    direction: Direction,
) -> Result<Filtration> {
    lower_star_with(complex, field, direction, TieBreak::Deterministic)
}

pub fn lower_star_with(
    complex: Arc<SimplicialComplex>,
    field: &ScalarField,
    direction: Direction,
    tie_break: TieBreak,
) -> Result<Filtration> {
    if field.len() != complex.vertex_count() {
        return Err(TopoError::InvalidInput(format!(
            "field has {} values but the complex has {} vertices",
            field.len(),
            complex.vertex_count()
        )));
    }
    let w: Vec<f64> = field
        .values()
        .iter()
        .map(|&x| direction.internalize(x))
        .collect();
    let values: Vec<f64> = complex
        .iter()
        .map(|(_, s)| {
            s.vertices()
                .iter()
                .map(|&v| w[v as usize])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(build_filtration(
        complex,
        values,
        direction,
        tie_break,
        ExtensionKind::LowerStar,
    ))
}

/// Flag extension of edge values: vertices enter at `vertex_value`, higher
/// simplices at the maximum over their edges. `edge_values` is aligned with
/// the complex's dimension-1 id range.
pub fn flag(
    complex: Arc<SimplicialComplex>,
    edge_values: &[f64],
    vertex_value: f64,
) -> Result<Filtration> {
    flag_with(complex, edge_values, vertex_value, TieBreak::Deterministic)
}

pub fn flag_with(
    complex: Arc<SimplicialComplex>,
    edge_values: &[f64],
    vertex_value: f64,
    tie_break: TieBreak,
) -> Result<Filtration> {
    let edges = complex.ids_of_dim(1);
    if edge_values.len() != edges.len() {
        return Err(TopoError::InvalidInput(format!(
            "missing edge value: complex has {} edges, got {}",
            edges.len(),
            edge_values.len()
        )));
    }
    if edge_values.iter().any(|v| !v.is_finite()) {
        return Err(TopoError::InvalidInput("non-finite edge value".into()));
    }
    if edge_values.iter().any(|&v| v < vertex_value) {
        return Err(TopoError::InvalidInput(
            "edge value below the vertex entry value breaks monotonicity".into(),
        ));
    }
    let edge_base = edges.start;
    let mut values = vec![0.0f64; complex.simplex_count()];
    for (id, s) in complex.iter() {
        values[id] = match s.dim() {
            0 => vertex_value,
            1 => edge_values[id - edge_base],
            _ => {
                let vs = s.vertices();
                let mut m = f64::NEG_INFINITY;
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        let eid = complex.index_of(&[vs[i], vs[j]]).ok_or_else(|| {
                            TopoError::InvalidInput(format!(
                                "complex is missing edge ({},{}) of simplex {}",
                                vs[i],
                                vs[j],
                                s
                            ))
                        })?;
                        m = m.max(edge_values[eid - edge_base]);
                    }
                }
                m
            }
        };
    }
    Ok(build_filtration(
        complex,
        values,
        Direction::Sublevel,
        tie_break,
        ExtensionKind::Flag,
    ))
}

/// Vietoris–Rips filtration: the clique complex over edges no longer than
/// `threshold`, truncated at simplex dimension `max_hom_dim + 1`, with the
/// flag extension of pairwise Euclidean distances.
pub fn rips_filtration(
    cloud: &PointCloud,
    max_hom_dim: usize,
    threshold: f64,
) -> Result<Filtration> {
    rips_filtration_with(cloud, max_hom_dim, threshold, TieBreak::Deterministic)
}

pub fn rips_filtration_with(
    cloud: &PointCloud,
    max_hom_dim: usize,
    threshold: f64,
    tie_break: TieBreak,
) -> Result<Filtration> {
    if !(threshold > 0.0) {
        return Err(TopoError::InvalidInput(format!(
            "Rips threshold must be positive, got {threshold}"
        )));
    }
    let n = cloud.n_points();
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if cloud.distance(i, j) <= threshold {
                neighbors[i].push(j as u32);
                neighbors[j].push(i as u32);
            }
        }
    }
    for l in &mut neighbors {
        l.sort_unstable();
    }

    let max_simplex_dim = (max_hom_dim + 1).min(n.saturating_sub(1));
    let mut builder = SimplicialComplex::builder(n);
    // Enumerate cliques by extending with common neighbors above the last
    // vertex; every clique of each size is emitted once.
    let mut stack: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    for i in 0..n as u32 {
        let cands: Vec<u32> = neighbors[i as usize]
            .iter()
            .copied()
            .filter(|&j| j > i)
            .collect();
        stack.push((vec![i], cands));
    }
    while let Some((clique, cands)) = stack.pop() {
        if clique.len() >= 2 {
            builder.add(Simplex::from_sorted(clique.clone()));
        }
        if clique.len() == max_simplex_dim + 1 {
            continue;
        }
        for (pos, &v) in cands.iter().enumerate() {
            let mut next = clique.clone();
            next.push(v);
            let next_cands: Vec<u32> = cands[pos + 1..]
                .iter()
                .copied()
                .filter(|w| neighbors[v as usize].binary_search(w).is_ok())
                .collect();
            stack.push((next, next_cands));
        }
    }
    let complex = Arc::new(builder.build()?);

    let edge_values: Vec<f64> = complex
        .ids_of_dim(1)
        .map(|id| {
            let vs = complex.simplex(id).vertices();
            cloud.distance(vs[0] as usize, vs[1] as usize)
        })
        .collect();
    flag_with(complex, &edge_values, 0.0, tie_break)
}

/// Weak Alpha filtration: flag extension of edge lengths over the Delaunay
/// triangulation of a planar point set.
pub fn weak_alpha_filtration(cloud: &PointCloud) -> Result<Filtration> {
    weak_alpha_filtration_with(cloud, TieBreak::Deterministic)
}

pub fn weak_alpha_filtration_with(cloud: &PointCloud, tie_break: TieBreak) -> Result<Filtration> {
    let pts = cloud.points_2d()?;
    let complex = Arc::new(delaunay_2d(&pts)?);
    let edge_values: Vec<f64> = complex
        .ids_of_dim(1)
        .map(|id| {
            let vs = complex.simplex(id).vertices();
            cloud.distance(vs[0] as usize, vs[1] as usize)
        })
        .collect();
    flag_with(complex, &edge_values, 0.0, tie_break)
}

/// One directional superlevel filtration of an image: the lower-star
/// filtration of `I ⊙ mask`, keeping the mask for the chain rule
/// `∂f/∂I = mask`.
pub struct DirectionalFiltration {
    pub filtration: Filtration,
    pub mask: Vec<f64>,
    pub theta: f64,
}

/// The 8 directional superlevel filtrations of an image: the products of
/// the image with the linear ramps `cos(θ)·x + sin(θ)·y`, θ = 0, π/4, …,
/// 7π/4, each ramp rescaled to range over [0, 1] on the image rectangle.
pub fn directional_filtrations(image: &ScalarField) -> Result<Vec<DirectionalFiltration>> {
    let FieldShape::Grid { rows, cols } = image.shape() else {
        return Err(TopoError::InvalidInput(
            "directional filtrations need a grid image".into(),
        ));
    };
    let complex = Arc::new(freudenthal_grid(rows, cols)?);
    let mut out = Vec::with_capacity(8);
    for d in 0..8 {
        let theta = d as f64 * std::f64::consts::FRAC_PI_4;
        let (ct, st) = (theta.cos(), theta.sin());
        // x runs along columns, y along rows; the extrema of a linear
        // function over the rectangle sit at its corners.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for y in [0.0, (rows - 1) as f64] {
            for x in [0.0, (cols - 1) as f64] {
                let g = ct * x + st * y;
                lo = lo.min(g);
                hi = hi.max(g);
            }
        }
        let scale = hi - lo;
        let mut mask = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let g = ct * j as f64 + st * i as f64;
                mask.push(if scale > 0.0 { (g - lo) / scale } else { 1.0 });
            }
        }
        let product: Vec<f64> = image
            .values()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let field = ScalarField::grid(rows, cols, product)?;
        let filtration = lower_star(Arc::clone(&complex), &field, Direction::Superlevel)?;
        out.push(DirectionalFiltration {
            filtration,
            mask,
            theta,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3(values: [f64; 3]) -> Filtration {
        let complex = Arc::new(freudenthal_grid(1, 3).unwrap());
        let field = ScalarField::line(values.to_vec()).unwrap();
        lower_star(complex, &field, Direction::Sublevel).unwrap()
    }

    #[test]
    fn lower_star_path_values_and_controllers() {
        let f = path3([0.0, 2.0, 1.0]);
        let c = f.complex();
        assert_eq!(f.value(c.index_of(&[0]).unwrap()), 0.0);
        assert_eq!(f.value(c.index_of(&[1]).unwrap()), 2.0);
        assert_eq!(f.value(c.index_of(&[2]).unwrap()), 1.0);
        let e01 = c.index_of(&[0, 1]).unwrap();
        let e12 = c.index_of(&[1, 2]).unwrap();
        assert_eq!(f.value(e01), 2.0);
        assert_eq!(f.value(e12), 2.0);
        assert_eq!(f.controller(e01), Controller::Vertex(1));
        assert_eq!(f.controller(e12), Controller::Vertex(1));
        assert!(f.is_monotone());
    }

    #[test]
    fn constant_field_enters_everywhere_at_once() {
        let complex = Arc::new(freudenthal_grid(3, 3).unwrap());
        let field = ScalarField::grid(3, 3, vec![0.7; 9]).unwrap();
        let f = lower_star(complex, &field, Direction::Sublevel).unwrap();
        assert!((0..f.len()).all(|id| f.value(id) == 0.7));
        // One essential class per Betti number of the full complex (the
        // grid is a disk: β0 = 1, β1 = 0), born at the constant.
        let d = crate::persistence::reduce(&f, 2).unwrap();
        assert_eq!(d.essential_count(0), 1);
        assert_eq!(d.essential_count(1), 0);
        let essential = d.pairs_of_dim(0).find(|p| p.is_essential()).unwrap();
        assert_eq!(essential.birth, 0.7);
    }

    #[test]
    fn lower_star_rejects_length_mismatch() {
        let complex = Arc::new(freudenthal_grid(2, 2).unwrap());
        let field = ScalarField::line(vec![1.0, 2.0]).unwrap();
        assert!(lower_star(complex, &field, Direction::Sublevel).is_err());
    }

    #[test]
    fn superlevel_internalizes_by_negation() {
        let f = {
            let complex = Arc::new(freudenthal_grid(1, 2).unwrap());
            let field = ScalarField::line(vec![0.25, 0.75]).unwrap();
            lower_star(complex, &field, Direction::Superlevel).unwrap()
        };
        let c = f.complex();
        let v1 = c.index_of(&[1]).unwrap();
        assert_eq!(f.value(v1), -0.75);
        assert_eq!(f.reported_value(v1), 0.75);
        // The edge enters with the smaller original value.
        let e = c.index_of(&[0, 1]).unwrap();
        assert_eq!(f.reported_value(e), 0.25);
        assert_eq!(f.controller(e), Controller::Vertex(0));
    }

    #[test]
    fn flag_triangle_controller_is_longest_edge() {
        let mut b = SimplicialComplex::builder(3);
        b.add(Simplex::new(vec![0, 1, 2]).unwrap());
        let complex = Arc::new(b.build().unwrap());
        // Edge ids in (dim, lex) order: (0,1), (0,2), (1,2).
        let f = flag(Arc::clone(&complex), &[1.0, 2.0, 3.0], 0.0).unwrap();
        let t = complex.index_of(&[0, 1, 2]).unwrap();
        assert_eq!(f.value(t), 3.0);
        assert_eq!(f.controller(t), Controller::Edge(1, 2));
    }

    #[test]
    fn flag_equal_edges_tie_break_is_deterministic() {
        let mut b = SimplicialComplex::builder(3);
        b.add(Simplex::new(vec![0, 1, 2]).unwrap());
        let complex = Arc::new(b.build().unwrap());
        let f1 = flag(Arc::clone(&complex), &[5.0, 5.0, 5.0], 0.0).unwrap();
        let f2 = flag(Arc::clone(&complex), &[5.0, 5.0, 5.0], 0.0).unwrap();
        let t = complex.index_of(&[0, 1, 2]).unwrap();
        assert_eq!(f1.controller(t), f2.controller(t));
        // Latest edge in (value, lex) order is (1,2).
        assert_eq!(f1.controller(t), Controller::Edge(1, 2));
    }

    #[test]
    fn flag_missing_edge_value_is_an_error() {
        let mut b = SimplicialComplex::builder(3);
        b.add(Simplex::new(vec![0, 1, 2]).unwrap());
        let complex = Arc::new(b.build().unwrap());
        assert!(flag(complex, &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn rips_two_points() {
        let cloud = PointCloud::from_xy(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        let f = rips_filtration(&cloud, 0, 2.0).unwrap();
        assert_eq!(f.complex().count_of_dim(1), 1);
        let e = f.complex().index_of(&[0, 1]).unwrap();
        assert_eq!(f.value(e), 1.0);
    }

    #[test]
    fn rips_threshold_prunes_edges_and_cliques() {
        // Unit square corners: sides 1, diagonals √2.
        let cloud = PointCloud::from_xy(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
        ])
        .unwrap();
        let f = rips_filtration(&cloud, 1, 2.0).unwrap();
        assert_eq!(f.complex().count_of_dim(1), 6);
        assert_eq!(f.complex().count_of_dim(2), 4);
        let f = rips_filtration(&cloud, 1, 1.2).unwrap();
        assert_eq!(f.complex().count_of_dim(1), 4);
        assert_eq!(f.complex().count_of_dim(2), 0);
        // Below the minimum pairwise distance every point is its own
        // essential class.
        let f = rips_filtration(&cloud, 1, 0.5).unwrap();
        assert_eq!(f.complex().count_of_dim(1), 0);
        let d = crate::persistence::pd0_union_find(&f).unwrap();
        assert_eq!(d.essential_count(0), 4);
    }

    #[test]
    fn strict_order_places_faces_before_cofaces() {
        let f = path3([1.0, 1.0, 1.0]);
        let order = f.strict_order();
        // All values equal: vertices (dim 0) must precede edges (dim 1),
        // and lexicographic order applies within a dimension.
        let dims: Vec<usize> = order.iter().map(|&id| f.complex().dim_of(id)).collect();
        assert_eq!(dims, vec![0, 0, 0, 1, 1]);
        assert!(order[0] < order[1] && order[1] < order[2]);
        for tie in [TieBreak::Deterministic, TieBreak::Seeded(3)] {
            let g = f.reorder(tie);
            for (id, _) in g.complex().iter() {
                for &face in g.complex().faces_of(id) {
                    assert!(g.position(face) < g.position(id));
                }
            }
        }
    }

    #[test]
    fn controller_reproduces_simplex_value_exactly() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows = rng.random_range(2..5);
            let cols = rng.random_range(2..5);
            let complex = Arc::new(freudenthal_grid(rows, cols).unwrap());
            // Coarse values so ties actually occur.
            let values: Vec<f64> = (0..rows * cols)
                .map(|_| (rng.random_range(0..4) as f64) / 4.0)
                .collect();
            let field = ScalarField::grid(rows, cols, values.clone()).unwrap();
            for tie in [TieBreak::Deterministic, TieBreak::Seeded(rng.random())] {
                let f =
                    lower_star_with(Arc::clone(&complex), &field, Direction::Sublevel, tie)
                        .unwrap();
                assert!(f.is_monotone());
                for (id, _) in complex.iter() {
                    match f.controller(id) {
                        Controller::Vertex(v) => assert_eq!(f.value(id), values[v as usize]),
                        _ => panic!("lower-star controller must be a vertex"),
                    }
                }
            }
        }
    }

    #[test]
    fn directional_masks_scale_to_unit_range() {
        let image = ScalarField::grid(4, 6, vec![1.0; 24]).unwrap();
        let dirs = directional_filtrations(&image).unwrap();
        assert_eq!(dirs.len(), 8);
        for d in &dirs {
            let lo = d.mask.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = d.mask.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
            // With a constant image the filtration values equal the mask.
            for v in 0..24usize {
                assert_eq!(d.filtration.reported_value(v), d.mask[v]);
            }
        }
        let zero = ScalarField::grid(4, 6, vec![0.0; 24]).unwrap();
        for d in directional_filtrations(&zero).unwrap() {
            assert!((0..d.filtration.len()).all(|id| d.filtration.reported_value(id) == 0.0));
        }
    }
}
