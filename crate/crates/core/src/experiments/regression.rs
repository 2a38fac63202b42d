//! Regularized least squares with classical and topological penalties:
//! `argmin_β Σ_i (y_i − X_i β)² + λ P(β)` by full-batch (sub)gradient
//! descent, λ selected by k-fold cross-validation over a log grid.
//!
//! The weight-cluster penalties are polynomial losses on the dimension-0
//! diagram of a distance filtration on the weight values. Points on a line
//! have PD_0 deaths equal to the consecutive sorted gaps, so that penalty
//! reduces exactly to "sum of all gaps except the largest few" (the fast
//! path below). The level-set penalties run the full superlevel
//! lower-star machinery on the index line.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::backprop::{diagram_to_simplex_grad, simplex_to_vertex_grad};
use crate::complex::{freudenthal_grid, SimplicialComplex};
use crate::diagram::{polynomial_loss, LossSpec};
use crate::error::{Result, TopoError};
use crate::experiments::synth::{dot, RegressionData};
use crate::filtration::{lower_star, Direction, ScalarField};
use crate::persistence::{pd0_union_find, reduce};
use crate::util::map_parallel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Penalty {
    /// `‖β‖₁`
    L1,
    /// `‖β‖₂`
    L2,
    /// `Σ |β_{i+1} − β_i|`
    Tv,
    /// `(Σ |β_{i+1} − β_i|²)^{1/2}`
    Tv2,
    /// `E(1,0,2;PD0)` of the distance filtration on the weight values:
    /// zero only when all weights coincide.
    Top1,
    /// `E(1,0,4;PD0)` of the same filtration: zero for up to three
    /// clusters.
    Top2,
    /// `E(1,0,2;PD0)` of the superlevel filtration on the index line:
    /// penalizes extra local maxima.
    Top1Level,
    /// `E(1,0,4;PD0)` on the index line: allows three local maxima.
    Top2Level,
    /// `E(1,0,2;PD0) + E(1,0,2;PD1)` of the superlevel filtration on an
    /// image grid: promotes one maximum and one hole.
    ImageTopo { rows: usize, cols: usize },
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
            Penalty::Tv => "tv",
            Penalty::Tv2 => "tv2",
            Penalty::Top1 => "top1",
            Penalty::Top2 => "top2",
            Penalty::Top1Level => "top1-level",
            Penalty::Top2Level => "top2-level",
            Penalty::ImageTopo { .. } => "image-topo",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Penalty {
    type Err = TopoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Penalty::L1),
            "l2" => Ok(Penalty::L2),
            "tv" => Ok(Penalty::Tv),
            "tv2" => Ok(Penalty::Tv2),
            "top1" => Ok(Penalty::Top1),
            "top2" => Ok(Penalty::Top2),
            "top1-level" => Ok(Penalty::Top1Level),
            "top2-level" => Ok(Penalty::Top2Level),
            other => Err(TopoError::InvalidInput(format!(
                "unknown penalty '{other}' (image-topo is constructed from the problem shape)"
            ))),
        }
    }
}

/// A penalty bound to a fixed weight count, with any underlying complex
/// built once.
pub struct PenaltyEval {
    penalty: Penalty,
    p: usize,
    complex: Option<Arc<SimplicialComplex>>,
}

impl Penalty {
    pub fn evaluator(&self, p: usize) -> Result<PenaltyEval> {
        let complex = match *self {
            Penalty::Top1Level | Penalty::Top2Level => {
                Some(Arc::new(freudenthal_grid(1, p)?))
            }
            Penalty::ImageTopo { rows, cols } => {
                if rows * cols != p {
                    return Err(TopoError::InvalidInput(format!(
                        "image penalty shape {rows}×{cols} does not match p = {p}"
                    )));
                }
                Some(Arc::new(freudenthal_grid(rows, cols)?))
            }
            _ => None,
        };
        Ok(PenaltyEval {
            penalty: *self,
            p,
            complex,
        })
    }
}

impl PenaltyEval {
    /// Penalty value and a subgradient at `beta`.
    pub fn value_grad(&self, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if beta.len() != self.p {
            return Err(TopoError::InvalidInput("weight length mismatch".into()));
        }
        match self.penalty {
            Penalty::L1 => {
                let v = beta.iter().map(|b| b.abs()).sum();
                let g = beta
                    .iter()
                    .map(|&b| if b == 0.0 { 0.0 } else { b.signum() })
                    .collect();
                Ok((v, g))
            }
            Penalty::L2 => {
                let v = dot(beta, beta).sqrt();
                let g = if v == 0.0 {
                    vec![0.0; beta.len()]
                } else {
                    beta.iter().map(|b| b / v).collect()
                };
                Ok((v, g))
            }
            Penalty::Tv => {
                let mut v = 0.0;
                let mut g = vec![0.0; beta.len()];
                for i in 0..beta.len() - 1 {
                    let d = beta[i + 1] - beta[i];
                    v += d.abs();
                    let s = if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    g[i + 1] += s;
                    g[i] -= s;
                }
                Ok((v, g))
            }
            Penalty::Tv2 => {
                let mut ss = 0.0;
                for w in beta.windows(2) {
                    ss += (w[1] - w[0]).powi(2);
                }
                let v = ss.sqrt();
                let mut g = vec![0.0; beta.len()];
                if v > 0.0 {
                    for i in 0..beta.len() - 1 {
                        let d = (beta[i + 1] - beta[i]) / v;
                        g[i + 1] += d;
                        g[i] -= d;
                    }
                }
                Ok((v, g))
            }
            Penalty::Top1 => Ok(cluster_gap_penalty(beta, 0)),
            Penalty::Top2 => Ok(cluster_gap_penalty(beta, 2)),
            Penalty::Top1Level => self.level_set_penalty(beta, 2),
            Penalty::Top2Level => self.level_set_penalty(beta, 4),
            Penalty::ImageTopo { .. } => self.image_topo_penalty(beta),
        }
    }

    fn level_set_penalty(&self, beta: &[f64], i0: usize) -> Result<(f64, Vec<f64>)> {
        let complex = self.complex.as_ref().expect("complex built at construction");
        let field = ScalarField::line(beta.to_vec())?;
        let filtration = lower_star(Arc::clone(complex), &field, Direction::Superlevel)?;
        let diagram = pd0_union_find(&filtration)?;
        let spec = LossSpec::new(1.0, 0.0, i0, 0)?;
        let (v, dg) = polynomial_loss(&diagram, &spec)?;
        let sg = diagram_to_simplex_grad(&diagram, &dg)?;
        Ok((v, simplex_to_vertex_grad(&filtration, &sg)?))
    }

    fn image_topo_penalty(&self, beta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let complex = self.complex.as_ref().expect("complex built at construction");
        let Penalty::ImageTopo { rows, cols } = self.penalty else {
            unreachable!()
        };
        let field = ScalarField::grid(rows, cols, beta.to_vec())?;
        let filtration = lower_star(Arc::clone(complex), &field, Direction::Superlevel)?;
        let diagram = reduce(&filtration, 1)?;
        let mut total = 0.0;
        let mut grad = vec![0.0; beta.len()];
        for k in 0..=1 {
            let spec = LossSpec::new(1.0, 0.0, 2, k)?;
            let (v, dg) = polynomial_loss(&diagram, &spec)?;
            total += v;
            let sg = diagram_to_simplex_grad(&diagram, &dg)?;
            for (a, b) in grad.iter_mut().zip(simplex_to_vertex_grad(&filtration, &sg)?) {
                *a += b;
            }
        }
        Ok((total, grad))
    }
}

/// Convenience wrapper when the penalty is evaluated once.
pub fn penalty_value_grad(beta: &[f64], penalty: &Penalty) -> Result<(f64, Vec<f64>)> {
    penalty.evaluator(beta.len())?.value_grad(beta)
}

/// Dimension-0 persistence of points on a line reduces to sorted
/// consecutive gaps; the penalty is the sum of all positive gaps except
/// the `skip_largest` biggest, with ±1 subgradients on the order
/// statistics bounding each counted gap.
fn cluster_gap_penalty(beta: &[f64], skip_largest: usize) -> (f64, Vec<f64>) {
    let p = beta.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| beta[a].partial_cmp(&beta[b]).unwrap().then(a.cmp(&b)));
    let mut gaps: Vec<(f64, usize)> = Vec::with_capacity(p.saturating_sub(1));
    for j in 0..p.saturating_sub(1) {
        let gap = beta[order[j + 1]] - beta[order[j]];
        if gap > 0.0 {
            gaps.push((gap, j));
        }
    }
    gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut value = 0.0;
    let mut grad = vec![0.0; p];
    for &(gap, j) in gaps.iter().skip(skip_largest) {
        value += gap;
        grad[order[j + 1]] += 1.0;
        grad[order[j]] -= 1.0;
    }
    (value, grad)
}

/// 16 logarithmically spaced λ values on [1e-4, 1e1].
pub fn default_lambda_grid() -> Vec<f64> {
    let (lo, hi, n) = (1e-4f64, 1e1f64, 16);
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            10f64.powf(lo.log10() + t * (hi.log10() - lo.log10()))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct RegressionProblem {
    pub data: RegressionData,
    pub penalty: Penalty,
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
    pub gd_iters: usize,
    pub seed: u64,
}

impl RegressionProblem {
    pub fn new(data: RegressionData, penalty: Penalty, seed: u64) -> Self {
        Self {
            data,
            penalty,
            lambda_grid: default_lambda_grid(),
            folds: 5,
            gd_iters: 400,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegressionResult {
    pub cv_lambda: f64,
    pub beta_hat: Vec<f64>,
    /// `‖β̂ − β*‖² / p`
    pub mse_beta: f64,
    /// Mean squared prediction error on a fresh test set.
    pub mse_pred: f64,
    /// `(λ, cross-validated prediction MSE)` per grid point, λ ascending.
    pub cv_table: Vec<(f64, f64)>,
}

fn matvec(x: &[f64], beta: &[f64], n: usize, p: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&x[i * p..(i + 1) * p], beta)).collect()
}

fn mat_t_vec(x: &[f64], r: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for i in 0..n {
        let row = &x[i * p..(i + 1) * p];
        let ri = r[i];
        for (o, v) in out.iter_mut().zip(row) {
            *o += ri * v;
        }
    }
    out
}

/// Largest eigenvalue of XᵀX by power iteration (i.e. σ_max(X)²).
fn spectral_norm_sq(x: &[f64], n: usize, p: usize) -> f64 {
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 1.0f64;
    for _ in 0..40 {
        let u = matvec(x, &v, n, p);
        let w = mat_t_vec(x, &u, n, p);
        lambda = dot(&w, &v).abs();
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 1.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    lambda.max(f64::MIN_POSITIVE)
}

/// Full-batch (sub)gradient descent on `Σ(y − Xβ)² + λP(β)`.
fn fit(
    x: &[f64],
    y: &[f64],
    n: usize,
    p: usize,
    eval: &PenaltyEval,
    lambda: f64,
    iters: usize,
    lr: f64,
    init: &[f64],
) -> Result<Vec<f64>> {
    let mut beta = init.to_vec();
    for _ in 0..iters {
        let pred = matvec(x, &beta, n, p);
        let residual: Vec<f64> = pred.iter().zip(y).map(|(f, y)| f - y).collect();
        let mut grad = mat_t_vec(x, &residual, n, p);
        for g in grad.iter_mut() {
            *g *= 2.0;
        }
        if lambda > 0.0 {
            let (_, pg) = eval.value_grad(&beta)?;
            for (g, s) in grad.iter_mut().zip(&pg) {
                *g += lambda * s;
            }
        }
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= lr * g;
        }
    }
    Ok(beta)
}

fn prediction_mse(x: &[f64], y: &[f64], n: usize, p: usize, beta: &[f64]) -> f64 {
    let pred = matvec(x, beta, n, p);
    pred.iter().zip(y).map(|(f, y)| (f - y).powi(2)).sum::<f64>() / n as f64
}

/// Minimum-norm least squares: normal equations when `n ≥ p`, the dual
/// system `β = Xᵀ(XXᵀ)⁻¹ y` otherwise. Oracle-grade, dense.
pub fn min_norm_least_squares(x: &[f64], y: &[f64], n: usize, p: usize) -> Result<Vec<f64>> {
    if n >= p {
        let mut gram = vec![0.0; p * p];
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            for a in 0..p {
                for b in 0..p {
                    gram[a * p + b] += row[a] * row[b];
                }
            }
        }
        let rhs = mat_t_vec(x, y, n, p);
        solve_dense(&mut gram, rhs, p)
    } else {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = dot(&x[i * p..(i + 1) * p], &x[j * p..(j + 1) * p]);
            }
        }
        let alpha = solve_dense(&mut gram, y.to_vec(), n)?;
        Ok(mat_t_vec(x, &alpha, n, p))
    }
}

/// Gaussian elimination with partial pivoting; consumes the matrix.
fn solve_dense(a: &mut [f64], mut b: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if a[pivot * n + col].abs() < 1e-12 {
            return Err(TopoError::Degenerate(
                "singular system in least-squares solve".into(),
            ));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * out[k];
        }
        out[row] = acc / a[row * n + row];
    }
    Ok(out)
}

/// Cross-validate λ, refit on the full data and report error metrics.
pub fn regularized_regression(problem: &RegressionProblem) -> Result<RegressionResult> {
    let d = &problem.data;
    let (n, p) = (d.n, d.p);
    let folds = problem.folds.clamp(2, n);
    let eval = problem.penalty.evaluator(p)?;

    let mut grid = problem.lambda_grid.clone();
    if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0)) {
        return Err(TopoError::InvalidInput("λ grid must be positive".into()));
    }
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap()); // descending for warm starts

    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(problem.seed ^ 0xc001_d00d));

    let fold_results: Vec<Vec<f64>> = map_parallel((0..folds).collect(), |f| {
        let test: Vec<usize> = idx
            .iter()
            .copied()
            .skip(f * n / folds)
            .take((f + 1) * n / folds - f * n / folds)
            .collect();
        let train: Vec<usize> = idx.iter().copied().filter(|i| !test.contains(i)).collect();
        let gather = |rows: &[usize]| -> (Vec<f64>, Vec<f64>) {
            let mut xs = Vec::with_capacity(rows.len() * p);
            let mut ys = Vec::with_capacity(rows.len());
            for &r in rows {
                xs.extend_from_slice(&d.x[r * p..(r + 1) * p]);
                ys.push(d.y[r]);
            }
            (xs, ys)
        };
        let (xt, yt) = gather(&train);
        let (xv, yv) = gather(&test);
        let lr = 0.9 / (2.0 * spectral_norm_sq(&xt, train.len(), p));
        let eval = problem.penalty.evaluator(p).expect("validated above");
        let mut beta = vec![0.0; p];
        let mut errs = Vec::with_capacity(grid.len());
        for &lambda in &grid {
            beta = fit(
                &xt,
                &yt,
                train.len(),
                p,
                &eval,
                lambda,
                problem.gd_iters,
                lr,
                &beta,
            )
            .expect("penalty evaluation failed during CV");
            errs.push(prediction_mse(&xv, &yv, test.len(), p, &beta));
        }
        errs
    });

    let mut cv_err = vec![0.0; grid.len()];
    for fold in &fold_results {
        for (acc, e) in cv_err.iter_mut().zip(fold) {
            *acc += e / folds as f64;
        }
    }
    let best = cv_err
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let cv_lambda = grid[best];

    // Refit on everything, warm-starting down the grid to the winner.
    let lr = 0.9 / (2.0 * spectral_norm_sq(&d.x, n, p));
    let mut beta = vec![0.0; p];
    for &lambda in grid.iter().take(best + 1) {
        beta = fit(&d.x, &d.y, n, p, &eval, lambda, problem.gd_iters, lr, &beta)?;
    }

    let mse_beta = beta
        .iter()
        .zip(&d.beta_star)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / p as f64;

    // Fresh test set from the same generator family.
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed ^ 0x7e57_da7a);
    let n_test = 512;
    let mut xt = vec![0.0f64; n_test * p];
    for v in xt.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let yt: Vec<f64> = (0..n_test)
        .map(|i| {
            let noise: f64 = rng.sample(StandardNormal);
            dot(&xt[i * p..(i + 1) * p], &d.beta_star) + d.noise_sigma * noise
        })
        .collect();
    let mse_pred = prediction_mse(&xt, &yt, n_test, p, &beta);

    let mut cv_table: Vec<(f64, f64)> = grid.iter().copied().zip(cv_err).collect();
    cv_table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    Ok(RegressionResult {
        cv_lambda,
        beta_hat: beta,
        mse_beta,
        mse_pred,
        cv_table,
    })
}
