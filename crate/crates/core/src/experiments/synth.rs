//! Reproducible synthetic inputs for the experiments: ground-truth weight
//! vectors, regression data, and test images. Everything is keyed by an
//! explicit seed through a ChaCha stream so runs are bit-identical.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TopoError};
use crate::filtration::ScalarField;

/// Ground-truth weight structure for the regression studies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaKind {
    /// Entries drawn i.i.d. uniformly from three values.
    ThreeValues([f64; 3]),
    /// Three piecewise-linear sawteeth over the index line.
    Sawtooth,
    /// Three piecewise-constant boxcars over the index line.
    Boxcar,
    /// A soft annulus image, flattened row-major.
    CircleImage { rows: usize, cols: usize },
}

pub fn synth_beta(kind: BetaKind, p: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        BetaKind::ThreeValues(vals) => Ok((0..p)
            .map(|_| vals[rng.random_range(0..3)])
            .collect()),
        BetaKind::Sawtooth => {
            // Three ramps rising 0 → 1, each ending in a drop.
            let tooth = p.div_ceil(3).max(2);
            Ok((0..p)
                .map(|j| (j % tooth) as f64 / (tooth - 1) as f64)
                .collect())
        }
        BetaKind::Boxcar => {
            let mut beta = vec![0.0; p];
            for (lo, hi) in [(1, 2), (4, 5), (8, 9)] {
                let (a, b) = (p * lo / 10, p * hi / 10);
                for v in beta.iter_mut().take(b).skip(a) {
                    *v = 1.0;
                }
            }
            Ok(beta)
        }
        BetaKind::CircleImage { rows, cols } => {
            if rows * cols != p {
                return Err(TopoError::InvalidInput(format!(
                    "image shape {rows}×{cols} does not match p = {p}"
                )));
            }
            Ok(annulus_image(rows, cols, 0.0, seed)?.values().to_vec())
        }
    }
}

/// Regression inputs `y = Xβ* + ε` with standard normal design rows.
#[derive(Clone, Debug)]
pub struct RegressionData {
    /// Row-major `n × p` design matrix.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub beta_star: Vec<f64>,
    pub noise_sigma: f64,
}

pub fn synth_regression(
    kind: BetaKind,
    n: usize,
    p: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<RegressionData> {
    if n == 0 || p == 0 {
        return Err(TopoError::InvalidInput("empty regression problem".into()));
    }
    let beta_star = synth_beta(kind, p, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut x = vec![0.0f64; n * p];
    for v in x.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let row = &x[i * p..(i + 1) * p];
            let noise: f64 = rng.sample(StandardNormal);
            dot(row, &beta_star) + noise_sigma * noise
        })
        .collect();
    Ok(RegressionData {
        x,
        y,
        n,
        p,
        beta_star,
        noise_sigma,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A Gaussian bump of the given amplitude centered in the image, plus
/// i.i.d. Gaussian pixel noise.
pub fn bump_image(
    rows: usize,
    cols: usize,
    amplitude: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, cx) = ((rows - 1) as f64 / 2.0, (cols - 1) as f64 / 2.0);
    let spread = rows.min(cols) as f64 / 5.0;
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let d2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
            let noise: f64 = rng.sample(StandardNormal);
            values.push(amplitude * (-d2 / (2.0 * spread * spread)).exp() + noise_sigma * noise);
        }
    }
    ScalarField::grid(rows, cols, values)
}

/// A soft annulus (bright ring on dark background) with values in [0, 1],
/// plus optional clamped noise.
pub fn annulus_image(
    rows: usize,
    cols: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cy, cx) = ((rows - 1) as f64 / 2.0, (cols - 1) as f64 / 2.0);
    let outer = rows.min(cols) as f64 * 0.34;
    let inner = rows.min(cols) as f64 * 0.17;
    let edge = 1.0_f64.max(rows.min(cols) as f64 * 0.06);
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let r = ((i as f64 - cy).powi(2) + (j as f64 - cx).powi(2)).sqrt();
            let ring = smoothstep((outer - r) / edge) * smoothstep((r - inner) / edge);
            let noise: f64 = rng.sample(StandardNormal);
            values.push((ring + noise_sigma * noise).clamp(0.0, 1.0));
        }
    }
    ScalarField::grid(rows, cols, values)
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_values_stay_in_the_alphabet() {
        let beta = synth_beta(BetaKind::ThreeValues([-1.0, 0.0, 1.0]), 100, 7).unwrap();
        assert_eq!(beta.len(), 100);
        assert!(beta.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
        // Seeded determinism.
        let again = synth_beta(BetaKind::ThreeValues([-1.0, 0.0, 1.0]), 100, 7).unwrap();
        assert_eq!(beta, again);
    }

    #[test]
    fn boxcar_has_three_plateaus() {
        let beta = synth_beta(BetaKind::Boxcar, 100, 0).unwrap();
        let mut runs = 0;
        let mut prev = 0.0;
        for &v in &beta {
            assert!(v == 0.0 || v == 1.0);
            if v == 1.0 && prev == 0.0 {
                runs += 1;
            }
            prev = v;
        }
        assert_eq!(runs, 3);
    }

    #[test]
    fn sawtooth_is_piecewise_linear_with_three_maxima() {
        let beta = synth_beta(BetaKind::Sawtooth, 100, 0).unwrap();
        let peaks = beta
            .windows(2)
            .filter(|w| w[1] < w[0] - 0.5)
            .count();
        // Two interior drops plus the final peak at the boundary.
        assert!(peaks >= 2);
        assert!((beta.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regression_shapes_and_determinism() {
        let d = synth_regression(BetaKind::Boxcar, 60, 100, 0.05, 3).unwrap();
        assert_eq!((d.n, d.p, d.x.len(), d.y.len()), (60, 100, 6000, 60));
        let d2 = synth_regression(BetaKind::Boxcar, 60, 100, 0.05, 3).unwrap();
        assert_eq!(d.x, d2.x);
        assert_eq!(d.y, d2.y);
    }

    #[test]
    fn circle_image_regression_has_half_as_many_rows() {
        let d = synth_regression(
            BetaKind::CircleImage { rows: 16, cols: 16 },
            128,
            256,
            0.05,
            0,
        )
        .unwrap();
        assert_eq!((d.n, d.p), (128, 256));
        assert!(d.beta_star.iter().any(|&v| v > 0.5));
    }

    #[test]
    fn images_are_finite_and_in_range() {
        let b = bump_image(28, 28, 1.0, 0.1, 0).unwrap();
        assert_eq!(b.len(), 784);
        let a = annulus_image(16, 16, 0.02, 1).unwrap();
        assert!(a.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
