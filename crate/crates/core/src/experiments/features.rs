//! Directional persistence features: for each of the 8 directional
//! superlevel filtrations of an image and each homology dimension
//! k ∈ {0, 1}, the 25 polynomial losses `E(p, q, 1; PD_k)` with p, q
//! ranging over 0..=4: 400 features in direction-major, then dimension,
//! then p-major order. Essential classes are capped at the
//! end-of-filtration value so every feature is finite and differentiable
//! with respect to the image.

use crate::backprop::{diagram_to_simplex_grad, simplex_to_vertex_grad};
use crate::diagram::{polynomial_loss_with, LossOpts, LossSpec};
use crate::error::{Result, TopoError};
use crate::filtration::{directional_filtrations, FieldShape, ScalarField};
use crate::persistence::{reduce, EssentialMode};

pub const N_DIRECTIONS: usize = 8;
pub const N_HOM_DIMS: usize = 2;
pub const PQ_RANGE: usize = 5;
pub const FEATURE_COUNT: usize = N_DIRECTIONS * N_HOM_DIMS * PQ_RANGE * PQ_RANGE;

/// Flat index of feature `(direction, k, p, q)`.
pub fn feature_index(dir: usize, k: usize, p: usize, q: usize) -> usize {
    ((dir * N_HOM_DIMS + k) * PQ_RANGE + p) * PQ_RANGE + q
}

fn loss_opts() -> LossOpts {
    LossOpts {
        include_zero_persistence: false,
        essential: EssentialMode::Cap,
    }
}

fn check_image(image: &ScalarField) -> Result<()> {
    match image.shape() {
        FieldShape::Grid { .. } => Ok(()),
        FieldShape::Line { .. } => Err(TopoError::InvalidInput(
            "topological features need a grid image".into(),
        )),
    }
}

/// The 400-dimensional feature vector of an image.
pub fn topo_features(image: &ScalarField) -> Result<Vec<f64>> {
    check_image(image)?;
    let mut out = vec![0.0f64; FEATURE_COUNT];
    for (dir, df) in directional_filtrations(image)?.iter().enumerate() {
        let diagram = reduce(&df.filtration, 1)?;
        for k in 0..N_HOM_DIMS {
            for p in 0..PQ_RANGE {
                for q in 0..PQ_RANGE {
                    let spec = LossSpec::new(p as f64, q as f64, 1, k)?;
                    let (value, _) = polynomial_loss_with(&diagram, &spec, loss_opts())?;
                    out[feature_index(dir, k, p, q)] = value;
                }
            }
        }
    }
    Ok(out)
}

/// Vector-Jacobian product: `Σ_f cotangent[f] · ∂feature_f/∂pixel` for all
/// pixels at once. One reduction per direction regardless of how many
/// cotangents are nonzero.
pub fn topo_features_backward(image: &ScalarField, cotangent: &[f64]) -> Result<Vec<f64>> {
    check_image(image)?;
    if cotangent.len() != FEATURE_COUNT {
        return Err(TopoError::InvalidInput(format!(
            "expected {FEATURE_COUNT} cotangents, got {}",
            cotangent.len()
        )));
    }
    let mut grad = vec![0.0f64; image.len()];
    for (dir, df) in directional_filtrations(image)?.iter().enumerate() {
        let block = &cotangent
            [dir * N_HOM_DIMS * PQ_RANGE * PQ_RANGE..(dir + 1) * N_HOM_DIMS * PQ_RANGE * PQ_RANGE];
        if block.iter().all(|&c| c == 0.0) {
            continue;
        }
        let diagram = reduce(&df.filtration, 1)?;
        let mut simplex_grads = vec![0.0f64; df.filtration.len()];
        for k in 0..N_HOM_DIMS {
            for p in 0..PQ_RANGE {
                for q in 0..PQ_RANGE {
                    let c = cotangent[feature_index(dir, k, p, q)];
                    if c == 0.0 {
                        continue;
                    }
                    let spec = LossSpec::new(p as f64, q as f64, 1, k)?;
                    let (_, dg) = polynomial_loss_with(&diagram, &spec, loss_opts())?;
                    for (acc, g) in simplex_grads
                        .iter_mut()
                        .zip(diagram_to_simplex_grad(&diagram, &dg)?)
                    {
                        *acc += c * g;
                    }
                }
            }
        }
        let vertex = simplex_to_vertex_grad(&df.filtration, &simplex_grads)?;
        // Chain through the fixed directional mask: f = I ⊙ mask.
        for ((acc, v), m) in grad.iter_mut().zip(&vertex).zip(&df.mask) {
            *acc += v * m;
        }
    }
    Ok(grad)
}

/// Pairing hash across all 8 directional diagrams; used to flag
/// tie-unstable samples in finite-difference checks.
pub fn features_fingerprint(image: &ScalarField) -> Result<u64> {
    check_image(image)?;
    let mut h = 0xdead_beefu64;
    for df in directional_filtrations(image)? {
        let d = reduce(&df.filtration, 1)?;
        h = h
            .rotate_left(11)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(d.pairing_fingerprint());
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backprop::finite_difference_check;
    use rand::prelude::*;

    #[test]
    fn feature_vector_has_exactly_400_entries() {
        let image = ScalarField::grid(8, 8, vec![0.3; 64]).unwrap();
        let f = topo_features(&image).unwrap();
        assert_eq!(f.len(), FEATURE_COUNT);
        assert_eq!(FEATURE_COUNT, 400);
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_image_only_counts_the_essential_component() {
        let image = ScalarField::grid(6, 6, vec![0.0; 36]).unwrap();
        let f = topo_features(&image).unwrap();
        for dir in 0..N_DIRECTIONS {
            for k in 0..N_HOM_DIMS {
                for p in 0..PQ_RANGE {
                    for q in 0..PQ_RANGE {
                        let v = f[feature_index(dir, k, p, q)];
                        // The single essential component is capped to the
                        // point (0,0); with p = q = 0 it counts as 1.
                        let expect = if k == 0 && p == 0 && q == 0 { 1.0 } else { 0.0 };
                        assert_eq!(v, expect, "dir={dir} k={k} p={p} q={q}");
                    }
                }
            }
        }
    }

    #[test]
    fn single_bright_pixel_keeps_one_essential_class_per_direction() {
        let mut values = vec![0.0; 49];
        values[3 * 7 + 2] = 1.0;
        let image = ScalarField::grid(7, 7, values).unwrap();
        for df in crate::filtration::directional_filtrations(&image).unwrap() {
            let d = crate::persistence::pd0_union_find(&df.filtration).unwrap();
            assert_eq!(d.essential_count(0), 1);
        }
    }

    #[test]
    fn rotating_the_image_permutes_the_direction_blocks() {
        // 90° clockwise rotation shifts the 8 directions by two slots.
        // Exact on inputs whose persistence does not touch the grid
        // diagonal (a smooth off-center bump).
        let n = 9;
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d2 = (i as f64 - 2.3).powi(2) + (j as f64 - 4.9).powi(2);
                vals[i * n + j] = (-d2 / 6.0).exp();
            }
        }
        let base = ScalarField::grid(n, n, vals).unwrap();
        let mut rot = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rot[i * n + j] = base.get(n - 1 - j, i);
            }
        }
        let rot = ScalarField::grid(n, n, rot).unwrap();
        let fa = topo_features(&base).unwrap();
        let fb = topo_features(&rot).unwrap();
        for d in 0..N_DIRECTIONS {
            let d_orig = (d + 6) % 8;
            for rest in 0..50 {
                let a = fa[d_orig * 50 + rest];
                let b = fb[d * 50 + rest];
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "block {d} ↦ {d_orig}, offset {rest}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn feature_gradients_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let values: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
        let image = ScalarField::grid(8, 8, values.clone()).unwrap();
        // Probe a handful of (feature, pixel) pairs through the VJP.
        for _ in 0..6 {
            let fi = rng.random_range(0..FEATURE_COUNT);
            let mut cot = vec![0.0; FEATURE_COUNT];
            cot[fi] = 1.0;
            let analytic = topo_features_backward(&image, &cot).unwrap();
            let out = finite_difference_check(
                &values,
                &analytic,
                1e-4,
                3,
                rng.random(),
                |v| {
                    let img = ScalarField::grid(8, 8, v.to_vec()).unwrap();
                    topo_features(&img).unwrap()[fi]
                },
                |v| {
                    let img = ScalarField::grid(8, 8, v.to_vec()).unwrap();
                    features_fingerprint(&img).unwrap()
                },
            );
            assert!(
                out.max_rel_err <= 1e-5,
                "feature {fi}: err {}",
                out.max_rel_err
            );
        }
    }
}
