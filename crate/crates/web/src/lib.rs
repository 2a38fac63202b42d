//! Browser bindings: persistence diagrams of a drawn point cloud,
//! interactive point-cloud shaping, and level-set image denoising. All
//! interfaces stick to flat `f64` buffers and strings so the page needs no
//! framework or serializer.
//!
//! The `*_impl` functions carry the logic and run on any target; the
//! `#[wasm_bindgen]` wrappers only translate errors for JavaScript.

use wasm_bindgen::prelude::*;

use topograd::experiments::{
    bump_image, cloud_loss_and_grad, optimize_point_cloud, optimize_scalar_field, FiltrationKind,
    OptimizationConfig, WeightedLoss,
};
use topograd::{
    pd0_union_find, reduce, rips_filtration, weak_alpha_filtration, Direction, PointCloud,
    Result, ScalarField, TieBreak, TopoError,
};

fn parse_filtration(name: &str, max_hom_dim: usize) -> Result<FiltrationKind> {
    match name {
        "rips" => Ok(FiltrationKind::Rips {
            max_hom_dim,
            threshold: None,
        }),
        "weak-alpha" => Ok(FiltrationKind::WeakAlpha),
        other => Err(TopoError::InvalidInput(format!(
            "unknown filtration '{other}'"
        ))),
    }
}

fn parse_losses(spec: &str) -> Result<Vec<WeightedLoss>> {
    spec.split('|')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse::<WeightedLoss>)
        .collect()
}

fn diagram_json_impl(points: &[f64], filtration: &str, max_dim: usize) -> Result<String> {
    let cloud = PointCloud::from_flat(points.to_vec(), 2)?;
    let filt = match filtration {
        "rips" => rips_filtration(&cloud, max_dim, cloud.diameter().max(1e-12))?,
        "weak-alpha" => weak_alpha_filtration(&cloud)?,
        other => {
            return Err(TopoError::InvalidInput(format!(
                "unknown filtration '{other}'"
            )))
        }
    };
    let k = max_dim.min(filt.complex().max_dimension());
    let diagram = if k == 0 {
        pd0_union_find(&filt)?
    } else {
        reduce(&filt, k)?
    };
    let mut parts = Vec::new();
    for dim in 0..=diagram.max_dim() {
        for p in diagram.pairs_of_dim(dim) {
            if p.is_zero_persistence() {
                continue;
            }
            let death = if p.is_essential() {
                "null".to_string()
            } else {
                format!("{}", p.death)
            };
            parts.push(format!(
                "{{\"dim\":{},\"birth\":{},\"death\":{}}}",
                p.dim, p.birth, death
            ));
        }
    }
    Ok(format!("{{\"pairs\":[{}]}}", parts.join(",")))
}

fn point_cloud_loss_impl(points: &[f64], losses: &str, filtration: &str) -> Result<f64> {
    let cloud = PointCloud::from_flat(points.to_vec(), 2)?;
    let losses = parse_losses(losses)?;
    let max_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let kind = parse_filtration(filtration, max_dim)?;
    let (value, _, _) = cloud_loss_and_grad(&cloud, &losses, &kind, TieBreak::Deterministic)?;
    Ok(value)
}

fn optimize_points_impl(
    points: &[f64],
    losses: &str,
    filtration: &str,
    steps: usize,
    step_size: f64,
) -> Result<Vec<f64>> {
    let cloud = PointCloud::from_flat(points.to_vec(), 2)?;
    let losses = parse_losses(losses)?;
    let max_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let mut cfg = OptimizationConfig::new(losses, parse_filtration(filtration, max_dim)?);
    cfg.steps = steps;
    cfg.step_size = step_size;
    let t = optimize_point_cloud(&cloud, &cfg)?;
    Ok(t.final_state.coords().to_vec())
}

fn optimize_points_curve_impl(
    points: &[f64],
    losses: &str,
    filtration: &str,
    steps: usize,
    step_size: f64,
) -> Result<Vec<f64>> {
    let cloud = PointCloud::from_flat(points.to_vec(), 2)?;
    let losses = parse_losses(losses)?;
    let max_dim = losses.iter().map(|l| l.spec.k).max().unwrap_or(0);
    let mut cfg = OptimizationConfig::new(losses, parse_filtration(filtration, max_dim)?);
    cfg.steps = steps;
    cfg.step_size = step_size;
    let t = optimize_point_cloud(&cloud, &cfg)?;
    Ok(t.losses)
}

fn denoise_field_impl(
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    losses: &str,
    steps: usize,
    step_size: f64,
) -> Result<Vec<f64>> {
    let field = ScalarField::grid(rows, cols, values)?;
    let losses = parse_losses(losses)?;
    let mut cfg = OptimizationConfig::new(
        losses,
        FiltrationKind::LowerStar {
            direction: Direction::Superlevel,
        },
    );
    cfg.steps = steps;
    cfg.step_size = step_size;
    let t = optimize_scalar_field(&field, &cfg)?;
    Ok(t.final_state.values().to_vec())
}

fn count_prominent_peaks_impl(
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    min_lifetime: f64,
) -> Result<usize> {
    let field = ScalarField::grid(rows, cols, values)?;
    let complex = std::sync::Arc::new(field.complex()?);
    let filt = topograd::lower_star(complex, &field, Direction::Superlevel)?;
    let d = pd0_union_find(&filt)?;
    Ok(d.pairs_of_dim(0)
        .filter(|p| p.lifetime() > min_lifetime)
        .count())
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Persistence diagram of a 2D point cloud as JSON:
/// `{"pairs":[{"dim":k,"birth":b,"death":d},...]}` with `null` deaths for
/// essential classes. `filtration` is "rips" or "weak-alpha".
#[wasm_bindgen]
pub fn diagram_json(
    points: Vec<f64>,
    filtration: String,
    max_dim: usize,
) -> std::result::Result<String, JsError> {
    js(diagram_json_impl(&points, &filtration, max_dim))
}

/// Current value of a signed weighted loss combination ("|"-separated,
/// sign and weight optional) on a 2D point cloud.
#[wasm_bindgen]
pub fn point_cloud_loss(
    points: Vec<f64>,
    losses: String,
    filtration: String,
) -> std::result::Result<f64, JsError> {
    js(point_cloud_loss_impl(&points, &losses, &filtration))
}

/// Run `steps` gradient-descent steps on the points and return the moved
/// coordinates (x0,y0,x1,y1,...). Call repeatedly for animation.
#[wasm_bindgen]
pub fn optimize_points(
    points: Vec<f64>,
    losses: String,
    filtration: String,
    steps: usize,
    step_size: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(optimize_points_impl(
        &points, &losses, &filtration, steps, step_size,
    ))
}

/// Objective value before each step plus the final value.
#[wasm_bindgen]
pub fn optimize_points_curve(
    points: Vec<f64>,
    losses: String,
    filtration: String,
    steps: usize,
    step_size: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(optimize_points_curve_impl(
        &points, &losses, &filtration, steps, step_size,
    ))
}

/// Run `steps` of superlevel level-set denoising on a grid image and
/// return the new pixel values.
#[wasm_bindgen]
pub fn denoise_field(
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    losses: String,
    steps: usize,
    step_size: f64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(denoise_field_impl(
        values, rows, cols, &losses, steps, step_size,
    ))
}

/// Number of dimension-0 classes of the superlevel filtration with
/// lifetime above the threshold; drives the "peak counter" readout.
#[wasm_bindgen]
pub fn count_prominent_peaks(
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    min_lifetime: f64,
) -> std::result::Result<usize, JsError> {
    js(count_prominent_peaks_impl(values, rows, cols, min_lifetime))
}

/// A noisy Gaussian bump test image for the denoising demo.
#[wasm_bindgen]
pub fn demo_bump_image(
    rows: usize,
    cols: usize,
    amplitude: f64,
    noise: f64,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    js(bump_image(rows, cols, amplitude, noise, seed).map(|f| f.values().to_vec()))
}
