//! A linear softmax classifier over the 400 directional persistence
//! features, a synthetic shape dataset it can separate topologically, and
//! iterated signed-gradient attacks that backpropagate from the class
//! logits through the features to the pixels.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, TopoError};
use crate::experiments::features::{topo_features, topo_features_backward, FEATURE_COUNT};
use crate::filtration::ScalarField;
use crate::util::map_parallel;

/// Topologically distinct image classes: one component without a hole, one
/// component with a hole, two components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeClass {
    Disk,
    Annulus,
    TwoDisks,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 3] = [ShapeClass::Disk, ShapeClass::Annulus, ShapeClass::TwoDisks];

    pub fn label(self) -> usize {
        match self {
            ShapeClass::Disk => 0,
            ShapeClass::Annulus => 1,
            ShapeClass::TwoDisks => 2,
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// One randomized shape image with values in [0, 1]: jittered position,
/// size and brightness plus light pixel noise.
pub fn shape_image(class: ShapeClass, rows: usize, cols: usize, seed: u64) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = rows.min(cols) as f64;
    let jitter = |rng: &mut ChaCha8Rng, scale: f64| (rng.random::<f64>() - 0.5) * scale;
    let (cy, cx) = (
        (rows - 1) as f64 / 2.0 + jitter(&mut rng, side * 0.12),
        (cols - 1) as f64 / 2.0 + jitter(&mut rng, side * 0.12),
    );
    let bright = 0.85 + rng.random::<f64>() * 0.15;
    let edge = (side * 0.08).max(0.8);
    let mut values = vec![0.0f64; rows * cols];

    let stamp_disk = |values: &mut [f64], y0: f64, x0: f64, r: f64| {
        for i in 0..rows {
            for j in 0..cols {
                let d = ((i as f64 - y0).powi(2) + (j as f64 - x0).powi(2)).sqrt();
                values[i * cols + j] += bright * smoothstep((r - d) / edge);
            }
        }
    };

    match class {
        ShapeClass::Disk => {
            let r = side * (0.26 + 0.05 * rng.random::<f64>());
            stamp_disk(&mut values, cy, cx, r);
        }
        ShapeClass::Annulus => {
            let outer = side * (0.30 + 0.05 * rng.random::<f64>());
            let inner = outer * (0.45 + 0.1 * rng.random::<f64>());
            for i in 0..rows {
                for j in 0..cols {
                    let d = ((i as f64 - cy).powi(2) + (j as f64 - cx).powi(2)).sqrt();
                    values[i * cols + j] +=
                        bright * smoothstep((outer - d) / edge) * smoothstep((d - inner) / edge);
                }
            }
        }
        ShapeClass::TwoDisks => {
            let r = side * (0.13 + 0.03 * rng.random::<f64>());
            let off = side * 0.22;
            stamp_disk(&mut values, cy - off, cx - off, r);
            stamp_disk(&mut values, cy + off, cx + off, r);
        }
    }

    let noise = 0.015;
    for v in values.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v = (*v + noise * e).clamp(0.0, 1.0);
    }
    ScalarField::grid(rows, cols, values)
}

/// A balanced labelled set: `per_class` images of each of the three
/// classes, in class-major order.
pub fn shape_dataset(
    per_class: usize,
    rows: usize,
    cols: usize,
    seed: u64,
) -> Result<(Vec<ScalarField>, Vec<usize>)> {
    let mut images = Vec::with_capacity(3 * per_class);
    let mut labels = Vec::with_capacity(3 * per_class);
    for class in ShapeClass::ALL {
        for i in 0..per_class {
            let s = seed ^ (class.label() as u64) << 32 ^ i as u64;
            images.push(shape_image(class, rows, cols, s)?);
            labels.push(class.label());
        }
    }
    Ok((images, labels))
}

/// Softmax regression over standardized topological features.
#[derive(Clone, Debug)]
pub struct LinearClassifier {
    pub n_classes: usize,
    /// `n_classes × FEATURE_COUNT`, applied to standardized features.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
}

impl LinearClassifier {
    fn standardize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(&self.feat_mean)
            .zip(&self.feat_std)
            .map(|((f, m), s)| (f - m) / s)
            .collect()
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let z = self.standardize(features);
        (0..self.n_classes)
            .map(|c| {
                self.bias[c]
                    + z.iter()
                        .zip(&self.weights[c * FEATURE_COUNT..(c + 1) * FEATURE_COUNT])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        argmax(&self.logits(features))
    }

    /// Cross-entropy of the target class and its gradient with respect to
    /// the raw (unstandardized) features.
    pub fn target_loss_grad(&self, features: &[f64], target: usize) -> (f64, Vec<f64>) {
        let logits = self.logits(features);
        let probs = softmax(&logits);
        let loss = -probs[target].max(1e-300).ln();
        let mut grad = vec![0.0f64; FEATURE_COUNT];
        for c in 0..self.n_classes {
            let coeff = probs[c] - if c == target { 1.0 } else { 0.0 };
            if coeff == 0.0 {
                continue;
            }
            let row = &self.weights[c * FEATURE_COUNT..(c + 1) * FEATURE_COUNT];
            for ((g, w), s) in grad.iter_mut().zip(row).zip(&self.feat_std) {
                *g += coeff * w / s;
            }
        }
        (loss, grad)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Feature extraction for a batch of images (parallel when enabled).
pub fn extract_features(images: &[ScalarField]) -> Result<Vec<Vec<f64>>> {
    let results = map_parallel(images.to_vec(), |img| topo_features(&img));
    results.into_iter().collect()
}

/// Train softmax regression by full-batch gradient descent on standardized
/// features with a small ridge term. Deterministic (zero init, fixed
/// schedule).
pub fn train_classifier(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    epochs: usize,
    lr: f64,
) -> Result<LinearClassifier> {
    let n = features.len();
    if n == 0 || labels.len() != n {
        return Err(TopoError::InvalidInput("empty or mismatched training set".into()));
    }
    if features.iter().any(|f| f.len() != FEATURE_COUNT) {
        return Err(TopoError::InvalidInput("feature length mismatch".into()));
    }
    let mut feat_mean = vec![0.0f64; FEATURE_COUNT];
    for f in features {
        for (m, v) in feat_mean.iter_mut().zip(f) {
            *m += v / n as f64;
        }
    }
    let mut feat_std = vec![0.0f64; FEATURE_COUNT];
    for f in features {
        for ((s, v), m) in feat_std.iter_mut().zip(f).zip(&feat_mean) {
            *s += (v - m).powi(2) / n as f64;
        }
    }
    for s in feat_std.iter_mut() {
        *s = s.sqrt().max(1e-8);
    }
    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            f.iter()
                .zip(&feat_mean)
                .zip(&feat_std)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();

    let ridge = 1e-4;
    let mut weights = vec![0.0f64; n_classes * FEATURE_COUNT];
    let mut bias = vec![0.0f64; n_classes];
    for _ in 0..epochs {
        let mut gw = vec![0.0f64; n_classes * FEATURE_COUNT];
        let mut gb = vec![0.0f64; n_classes];
        for (z, &label) in standardized.iter().zip(labels) {
            let logits: Vec<f64> = (0..n_classes)
                .map(|c| {
                    bias[c]
                        + z.iter()
                            .zip(&weights[c * FEATURE_COUNT..(c + 1) * FEATURE_COUNT])
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                })
                .collect();
            let probs = softmax(&logits);
            for c in 0..n_classes {
                let coeff = (probs[c] - if c == label { 1.0 } else { 0.0 }) / n as f64;
                gb[c] += coeff;
                for (g, v) in gw[c * FEATURE_COUNT..(c + 1) * FEATURE_COUNT]
                    .iter_mut()
                    .zip(z)
                {
                    *g += coeff * v;
                }
            }
        }
        for (w, g) in weights.iter_mut().zip(&gw) {
            *w -= lr * (g + ridge * *w);
        }
        for (b, g) in bias.iter_mut().zip(&gb) {
            *b -= lr * g;
        }
    }
    Ok(LinearClassifier {
        n_classes,
        weights,
        bias,
        feat_mean,
        feat_std,
    })
}

#[derive(Clone, Debug)]
pub struct AttackResult {
    pub image: ScalarField,
    pub success: bool,
    pub steps_taken: usize,
    /// Target-class cross-entropy before each step taken.
    pub losses: Vec<f64>,
    pub final_prediction: usize,
}

/// Iterated signed-gradient attack on the target-class cross-entropy,
/// backpropagated through the feature layer to the pixels, clamping to
/// [0, 1]. Stops as soon as the prediction flips to the target.
pub fn gradient_attack(
    model: &LinearClassifier,
    image: &ScalarField,
    target: usize,
    step_size: f64,
    steps: usize,
) -> Result<AttackResult> {
    if target >= model.n_classes {
        return Err(TopoError::InvalidInput(format!(
            "target class {target} out of range"
        )));
    }
    let mut current = image.clone();
    let mut losses = Vec::new();
    for step in 0..=steps {
        let features = topo_features(&current)?;
        let prediction = model.predict(&features);
        if prediction == target {
            return Ok(AttackResult {
                image: current,
                success: true,
                steps_taken: step,
                losses,
                final_prediction: prediction,
            });
        }
        if step == steps || step_size == 0.0 {
            return Ok(AttackResult {
                image: current,
                success: false,
                steps_taken: step,
                losses,
                final_prediction: prediction,
            });
        }
        let (loss, feature_grad) = model.target_loss_grad(&features, target);
        losses.push(loss);
        let pixel_grad = topo_features_backward(&current, &feature_grad)?;
        let values: Vec<f64> = current
            .values()
            .iter()
            .zip(&pixel_grad)
            .map(|(v, g)| (v - step_size * g.signum()).clamp(0.0, 1.0))
            .collect();
        current = current.with_values(values)?;
    }
    unreachable!("loop returns from within");
}
