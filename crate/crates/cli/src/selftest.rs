//! Built-in oracle suites: Betti-number consistency of the reduction,
//! union-find versus reduction in dimension 0, end-to-end finite
//! differences, and Wasserstein against brute-force matching. Exits
//! nonzero on any failure.

use std::sync::Arc;

use anyhow::{bail, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use topograd::backprop::{
    diagram_to_simplex_grad, finite_difference_check, simplex_to_point_grad,
    simplex_to_vertex_grad,
};
use topograd::diagram::{
    polynomial_loss, wasserstein_brute_force, GroundMetric, LossSpec,
};
use topograd::persistence::PersistenceDiagram;
use topograd::{
    freudenthal_grid, lower_star, pd0_union_find, reduce, rips_filtration, Direction, PointCloud,
    ScalarField,
};

struct Suite {
    failures: usize,
}

impl Suite {
    fn report(&mut self, name: &str, outcome: Result<String>) {
        match outcome {
            Ok(detail) => println!("selftest {name}: PASS ({detail})"),
            Err(e) => {
                println!("selftest {name}: FAIL ({e})");
                self.failures += 1;
            }
        }
    }
}

pub fn run(seed: u64, quick: bool) -> Result<()> {
    let scale = if quick { 1 } else { 4 };
    let mut suite = Suite { failures: 0 };
    suite.report("betti-consistency", betti_consistency(seed, 10 * scale));
    suite.report("union-find-vs-reduce", union_find_vs_reduce(seed, 15 * scale));
    suite.report("finite-difference", finite_difference(seed));
    suite.report("wasserstein-brute-force", wasserstein_oracle(seed, 10 * scale));
    if suite.failures > 0 {
        bail!("{} selftest suite(s) failed", suite.failures);
    }
    Ok(())
}

fn random_field_filtration(
    rng: &mut ChaCha8Rng,
) -> Result<(topograd::Filtration, Vec<f64>)> {
    let rows = rng.random_range(2..5);
    let cols = rng.random_range(2..5);
    let complex = Arc::new(freudenthal_grid(rows, cols)?);
    // Coarse values so ties occur regularly.
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| (rng.random_range(0..6) as f64) / 6.0)
        .collect();
    let field = ScalarField::grid(rows, cols, values.clone())?;
    let dir = if rng.random_bool(0.5) {
        Direction::Sublevel
    } else {
        Direction::Superlevel
    };
    Ok((lower_star(complex, &field, dir)?, values))
}

fn betti_consistency(seed: u64, trials: usize) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe771);
    let mut checks = 0usize;
    for t in 0..trials {
        let (f, _) = random_field_filtration(&mut rng)?;
        let d = reduce(&f, f.complex().max_dimension())?;
        let mut alphas: Vec<f64> = (0..f.len()).map(|id| f.value(id)).collect();
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        alphas.dedup();
        for &alpha in &alphas {
            let sub = f.sublevel_subcomplex(alpha)?;
            for k in 0..=f.complex().max_dimension() {
                let alive = d.alive_count(k, f.direction().report(alpha));
                let betti = sub.betti(k);
                if alive != betti {
                    bail!("trial {t}: dim {k} at α={alpha}: {alive} alive vs Betti {betti}");
                }
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} Betti comparisons"))
}

fn union_find_vs_reduce(seed: u64, trials: usize) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0f0f);
    for t in 0..trials {
        let (f, _) = random_field_filtration(&mut rng)?;
        let uf = pd0_union_find(&f)?;
        let red = reduce(&f, f.complex().max_dimension())?;
        let key = |d: &PersistenceDiagram| {
            let mut v: Vec<(usize, Option<usize>)> = d
                .pairs_of_dim(0)
                .map(|p| (p.creator, p.destroyer))
                .collect();
            v.sort_unstable();
            v
        };
        if key(&uf) != key(&red) {
            bail!("trial {t}: dimension-0 pairings differ");
        }
    }
    Ok(format!("{trials} filtrations"))
}

fn finite_difference(seed: u64) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfd);
    let mut worst: f64 = 0.0;

    // Lower-star superlevel loss on a random image.
    let values: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
    let spec = LossSpec::new(1.0, 0.0, 2, 0).map_err(anyhow::Error::from)?;
    let complex = Arc::new(freudenthal_grid(8, 8)?);
    let eval = |v: &[f64]| -> f64 {
        let field = ScalarField::grid(8, 8, v.to_vec()).unwrap();
        let f = lower_star(Arc::clone(&complex), &field, Direction::Superlevel).unwrap();
        let d = pd0_union_find(&f).unwrap();
        polynomial_loss(&d, &spec).unwrap().0
    };
    let fingerprint = |v: &[f64]| -> u64 {
        let field = ScalarField::grid(8, 8, v.to_vec()).unwrap();
        let f = lower_star(Arc::clone(&complex), &field, Direction::Superlevel).unwrap();
        reduce(&f, 2).unwrap().pairing_fingerprint()
    };
    let analytic = {
        let field = ScalarField::grid(8, 8, values.clone())?;
        let f = lower_star(Arc::clone(&complex), &field, Direction::Superlevel)?;
        let d = pd0_union_find(&f)?;
        let (_, dg) = polynomial_loss(&d, &spec)?;
        let sg = diagram_to_simplex_grad(&d, &dg)?;
        simplex_to_vertex_grad(&f, &sg)?
    };
    let out = finite_difference_check(&values, &analytic, 1e-4, 16, seed, eval, fingerprint);
    if out.max_rel_err > 1e-5 {
        bail!("lower-star gradient error {}", out.max_rel_err);
    }
    worst = worst.max(out.max_rel_err);

    // Rips loss on random points.
    let coords: Vec<f64> = (0..24).map(|_| rng.random::<f64>()).collect();
    let spec = LossSpec::new(2.0, 0.0, 2, 0).map_err(anyhow::Error::from)?;
    let eval = |x: &[f64]| -> f64 {
        let cloud = PointCloud::from_flat(x.to_vec(), 2).unwrap();
        let f = rips_filtration(&cloud, 0, 10.0).unwrap();
        let d = pd0_union_find(&f).unwrap();
        polynomial_loss(&d, &spec).unwrap().0
    };
    let fingerprint = |x: &[f64]| -> u64 {
        let cloud = PointCloud::from_flat(x.to_vec(), 2).unwrap();
        let f = rips_filtration(&cloud, 0, 10.0).unwrap();
        pd0_union_find(&f).unwrap().pairing_fingerprint()
    };
    let analytic = {
        let cloud = PointCloud::from_flat(coords.clone(), 2)?;
        let f = rips_filtration(&cloud, 0, 10.0)?;
        let d = pd0_union_find(&f)?;
        let (_, dg) = polynomial_loss(&d, &spec)?;
        let sg = diagram_to_simplex_grad(&d, &dg)?;
        simplex_to_point_grad(&f, &cloud, &sg)?.grad
    };
    let out = finite_difference_check(&coords, &analytic, 1e-4, 16, seed ^ 1, eval, fingerprint);
    if out.max_rel_err > 1e-5 {
        bail!("Rips gradient error {}", out.max_rel_err);
    }
    worst = worst.max(out.max_rel_err);
    Ok(format!("max relative error {worst:.2e}"))
}

fn wasserstein_oracle(seed: u64, trials: usize) -> Result<String> {
    use topograd::persistence::PersistencePair;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3a55);
    for t in 0..trials {
        let make = |rng: &mut ChaCha8Rng| -> (Vec<(f64, f64)>, PersistenceDiagram) {
            let n = rng.random_range(0..=4);
            let pts: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    let b = rng.random::<f64>();
                    (b, b + rng.random::<f64>() + 1e-6)
                })
                .collect();
            let pairs: Vec<PersistencePair> = pts
                .iter()
                .enumerate()
                .map(|(i, &(b, d))| PersistencePair {
                    dim: 0,
                    birth: b,
                    death: d,
                    creator: 2 * i,
                    destroyer: Some(2 * i + 1),
                })
                .collect();
            let d =
                PersistenceDiagram::from_raw_parts(pairs, 0, Direction::Sublevel, 2 * n + 1, 0, 1.0);
            (pts, d)
        };
        let (pa, da) = make(&mut rng);
        let (pb, db) = make(&mut rng);
        for p in [1.0, 2.0] {
            let got = topograd::diagram::wasserstein(&da, &db, 0, p)?;
            let want = wasserstein_brute_force(&pa, &pb, p, GroundMetric::Euclidean);
            if (got - want).abs() > 1e-9 {
                bail!("trial {t} p={p}: {got} vs brute force {want}");
            }
        }
    }
    Ok(format!("{trials} diagram pairs, p ∈ {{1, 2}}"))
}
