//! 2D Delaunay triangulation by Bowyer–Watson insertion.
//!
//! Orientation and in-circle signs come from the adaptive exact predicates
//! in the `robust` crate, so the combinatorics never depend on rounding.
//! Exact cocircular ties are resolved symbolically: the lifted weight of
//! point `i` is perturbed by `(i+1)·ε` and the in-circle determinant, which
//! is linear in the weights, is re-signed by its first-order term. This
//! keeps the triangulation deterministic on grid-like inputs.
//!
//! The triangulation is seeded with a finite enclosing triangle. Its
//! circumcircles can interfere with skinny hull triangles, so after removal
//! the covered area is compared against the convex hull and construction is
//! retried with a larger enclosure before giving up.

use robust::{incircle, orient2d, Coord};

use crate::complex::{Simplex, SimplicialComplex};
use crate::error::{Result, TopoError};

fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Strict "d inside circumcircle of ccw triangle (a,b,c)" with symbolic
/// perturbation on ties. Indices are the perturbation order.
fn in_circle_strict(pts: &[[f64; 2]], a: usize, b: usize, c: usize, d: usize) -> bool {
    let s = incircle(coord(pts[a]), coord(pts[b]), coord(pts[c]), coord(pts[d]));
    if s != 0.0 {
        return s > 0.0;
    }
    // Cocircular: the determinant is linear in the lifted weights, so the
    // sign under w_i = (i+1)·ε is the sign of the first-order term.
    let minor_a = orient2d(coord(pts[d]), coord(pts[b]), coord(pts[c]));
    let minor_b = orient2d(coord(pts[d]), coord(pts[a]), coord(pts[c]));
    let minor_c = orient2d(coord(pts[d]), coord(pts[a]), coord(pts[b]));
    let dw_a = -minor_a;
    let dw_b = minor_b;
    let dw_c = -minor_c;
    let dw_d = -(dw_a + dw_b + dw_c);
    let t = (a as f64 + 1.0) * dw_a
        + (b as f64 + 1.0) * dw_b
        + (c as f64 + 1.0) * dw_c
        + (d as f64 + 1.0) * dw_d;
    t > 0.0
}

fn triangle_area2(pts: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let [a, b, c] = t;
    (pts[b][0] - pts[a][0]) * (pts[c][1] - pts[a][1])
        - (pts[b][1] - pts[a][1]) * (pts[c][0] - pts[a][0])
}

fn convex_hull_area2(points: &[[f64; 2]]) -> f64 {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .partial_cmp(&points[j])
            .expect("finite coordinates")
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return 0.0;
    }
    let turn = |o: usize, p: usize, q: usize| {
        orient2d(coord(points[o]), coord(points[p]), coord(points[q]))
    };
    // Monotone chain: lower hull on the forward sweep, upper hull on the
    // reverse one, never popping into the previous half.
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let base = hull.len();
        let sweep: Vec<usize> = if pass == 0 {
            idx.clone()
        } else {
            idx.iter().rev().copied().collect()
        };
        for i in sweep {
            while hull.len() >= base + 2
                && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    let mut area2 = 0.0;
    for w in 0..hull.len() {
        let p = points[hull[w]];
        let q = points[hull[(w + 1) % hull.len()]];
        area2 += p[0] * q[1] - p[1] * q[0];
    }
    area2.abs()
}

/// One Bowyer–Watson pass with an enclosing triangle of the given radius
/// around the centroid. Returns the finite ccw triangles.
fn bowyer_watson(points: &[[f64; 2]], radius: f64) -> Vec<[usize; 3]> {
    let n = points.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in points {
        cx += p[0];
        cy += p[1];
    }
    cx /= n as f64;
    cy /= n as f64;
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    // Counterclockwise enclosing triangle; indices n, n+1, n+2.
    pts.push([cx + radius, cy]);
    pts.push([cx - 0.5 * radius, cy + 0.866 * radius]);
    pts.push([cx - 0.5 * radius, cy - 0.866 * radius]);
    let mut triangles: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];

    for p in 0..n {
        let mut cavity: Vec<[usize; 3]> = Vec::new();
        let mut kept: Vec<[usize; 3]> = Vec::new();
        for &t in &triangles {
            if in_circle_strict(&pts, t[0], t[1], t[2], p) {
                cavity.push(t);
            } else {
                kept.push(t);
            }
        }
        // Directed boundary edges of the cavity appear exactly once.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for t in &cavity {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if let Some(pos) = edges.iter().position(|&(u, v)| (v, u) == e) {
                    edges.swap_remove(pos);
                } else {
                    edges.push(e);
                }
            }
        }
        for (u, v) in edges {
            kept.push([u, v, p]);
        }
        triangles = kept;
    }

    triangles
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .collect()
}

/// Delaunay triangulation of a planar point set as a 2-dimensional
/// simplicial complex. Rejects fewer than 3 points, duplicate points and
/// fully collinear input.
pub fn delaunay_2d(points: &[[f64; 2]]) -> Result<SimplicialComplex> {
    let n = points.len();
    if n < 3 {
        return Err(TopoError::Degenerate(format!(
            "Delaunay needs at least 3 points, got {n}"
        )));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(TopoError::InvalidInput("non-finite coordinate".into()));
    }
    {
        let mut sorted: Vec<&[f64; 2]> = points.iter().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(TopoError::Degenerate("duplicate points".into()));
        }
    }
    if all_collinear(points) {
        return Err(TopoError::Degenerate("all points are collinear".into()));
    }

    let mut span: f64 = 0.0;
    for p in points {
        span = span.max(p[0].abs()).max(p[1].abs());
    }
    let hull_area2 = convex_hull_area2(points);
    for magnify in [1e4, 1e8, 1e12] {
        let triangles = bowyer_watson(points, magnify * (span + 1.0));
        let mut area2 = 0.0;
        let mut incident = vec![false; n];
        for &t in &triangles {
            area2 += triangle_area2(points, t);
            for &v in &t {
                incident[v] = true;
            }
        }
        let covered = (area2 - hull_area2).abs() <= 1e-9 * hull_area2.max(f64::MIN_POSITIVE);
        if covered && incident.iter().all(|&b| b) {
            let mut builder = SimplicialComplex::builder(n);
            for t in triangles {
                let mut vs = [t[0] as u32, t[1] as u32, t[2] as u32];
                vs.sort_unstable();
                builder.add(Simplex::from_sorted(vs.to_vec()));
            }
            return builder.build();
        }
    }
    Err(TopoError::Degenerate(
        "could not build a hull-covering Delaunay triangulation".into(),
    ))
}

fn all_collinear(points: &[[f64; 2]]) -> bool {
    let a = points[0];
    let Some(b) = points[1..].iter().find(|&&p| p != a) else {
        return true;
    };
    points
        .iter()
        .all(|&p| orient2d(coord(a), coord(*b), coord(p)) == 0.0)
}
