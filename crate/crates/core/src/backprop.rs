//! Gradient routing from diagrams back to filtration parameters.
//!
//! A diagram coordinate is the reported filtration value of its creator or
//! destroyer simplex, and a simplex's reported value equals the original
//! value of its controlling parameter (the argmax vertex for lower-star,
//! the argmax edge for flag). Routing is therefore two sparse scatters:
//! pair cotangents onto simplices, then simplex cotangents onto the
//! controller's parameters. At a filtration-value tie the controller is
//! the strict-order argmax, which selects one element of the subgradient.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::diagram::DiagramGradient;
use crate::error::{Result, TopoError};
use crate::filtration::{Controller, Filtration, PointCloud};
use crate::persistence::PersistenceDiagram;

/// Scatter pair cotangents onto the creator and destroyer simplices
/// (the inverse map). Returns one gradient entry per simplex.
pub fn diagram_to_simplex_grad(
    diagram: &PersistenceDiagram,
    grad: &DiagramGradient,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; diagram.n_simplices()];
    let (cap_simplex, _) = diagram.cap();
    for slot in 0..diagram.pair_count(grad.k) {
        let pair = diagram.pair_at(grad.k, slot);
        let db = grad.d_birth[slot];
        let dd = grad.d_death[slot];
        if db != 0.0 {
            out[pair.creator] += db;
        }
        if dd != 0.0 {
            match pair.destroyer {
                Some(d) => out[d] += dd,
                None if grad.essential_death_to_cap => out[cap_simplex] += dd,
                None => {
                    return Err(TopoError::InvalidInput(
                        "gradient on an essential death with no destroyer".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

/// Route simplex cotangents through a lower-star extension: each simplex's
/// gradient lands entirely on its controlling vertex. Returns one entry
/// per vertex, in the shape of the source field.
pub fn simplex_to_vertex_grad(
    filtration: &Filtration,
    simplex_grads: &[f64],
) -> Result<Vec<f64>> {
    if simplex_grads.len() != filtration.len() {
        return Err(TopoError::InvalidInput(
            "simplex gradient length does not match the filtration".into(),
        ));
    }
    let mut out = vec![0.0f64; filtration.complex().vertex_count()];
    for (id, &g) in simplex_grads.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        match filtration.controller(id) {
            Controller::Vertex(v) => out[v as usize] += g,
            // Constant-entry simplices contribute nothing.
            Controller::Constant => {}
            Controller::Edge(..) => {
                return Err(TopoError::InvalidInput(
                    "edge-controlled filtration passed to vertex routing".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Point-coordinate gradients plus a count of zero-length controller edges
/// that had to be skipped (their direction is undefined).
pub struct PointGradient {
    pub grad: Vec<f64>,
    pub degenerate_edges: usize,
}

/// Route simplex cotangents through a flag extension over a point cloud:
/// each simplex's gradient lands on its controlling edge `(u, v)` and then
/// distributes onto coordinates via `∂‖x_u − x_v‖/∂x_u = (x_u − x_v)/‖·‖`.
pub fn simplex_to_point_grad(
    filtration: &Filtration,
    cloud: &PointCloud,
    simplex_grads: &[f64],
) -> Result<PointGradient> {
    if simplex_grads.len() != filtration.len() {
        return Err(TopoError::InvalidInput(
            "simplex gradient length does not match the filtration".into(),
        ));
    }
    let dim = cloud.dim();
    let mut grad = vec![0.0f64; cloud.n_points() * dim];
    let mut degenerate = 0usize;
    for (id, &g) in simplex_grads.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        match filtration.controller(id) {
            Controller::Edge(u, v) => {
                let (u, v) = (u as usize, v as usize);
                let len = cloud.distance(u, v);
                if len == 0.0 {
                    degenerate += 1;
                    continue;
                }
                for c in 0..dim {
                    let dir = (cloud.point(u)[c] - cloud.point(v)[c]) / len;
                    grad[u * dim + c] += g * dir;
                    grad[v * dim + c] -= g * dir;
                }
            }
            Controller::Constant => {}
            Controller::Vertex(_) => {
                return Err(TopoError::InvalidInput(
                    "vertex-controlled filtration passed to point routing".into(),
                ))
            }
        }
    }
    Ok(PointGradient {
        grad,
        degenerate_edges: degenerate,
    })
}

/// Outcome of a finite-difference sweep: worst relative error over the
/// sampled coordinates whose pairing stayed stable, plus how many samples
/// were flagged as tie-unstable and skipped.
#[derive(Clone, Copy, Debug)]
pub struct FdOutcome {
    pub max_rel_err: f64,
    pub used: usize,
    pub flagged: usize,
}

/// Central finite differences on randomly sampled coordinates against an
/// analytic gradient. `fingerprint` hashes the pairing structure at a
/// parameter configuration; a sample whose fingerprint differs between the
/// two probe points straddles a tie, where the loss is only
/// subdifferentiable, and is flagged instead of failing.
pub fn finite_difference_check<F, G>(
    params: &[f64],
    analytic: &[f64],
    h: f64,
    samples: usize,
    seed: u64,
    eval: F,
    fingerprint: G,
) -> FdOutcome
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> u64,
{
    assert_eq!(params.len(), analytic.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: Vec<usize> = (0..params.len()).collect();
    if samples < coords.len() {
        coords.shuffle(&mut rng);
        coords.truncate(samples);
    }

    let mut out = FdOutcome {
        max_rel_err: 0.0,
        used: 0,
        flagged: 0,
    };
    let mut work = params.to_vec();
    for &c in &coords {
        work[c] = params[c] + h;
        let (f_plus, fp_plus) = (eval(&work), fingerprint(&work));
        work[c] = params[c] - h;
        let (f_minus, fp_minus) = (eval(&work), fingerprint(&work));
        work[c] = params[c];
        if fp_plus != fp_minus {
            out.flagged += 1;
            continue;
        }
        let fd = (f_plus - f_minus) / (2.0 * h);
        let an = analytic[c];
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1.0);
        out.max_rel_err = out.max_rel_err.max(rel);
        out.used += 1;
    }
    out
}
