//! Straight-line dense reimplementations of the kernels, used as oracles for
//! the sparse, factorized production code.

use std::f64::consts::PI;

use gk_core::nalgebra::DMatrix;
use gk_core::Graph;

use super::dense_adjacency;

pub fn dense_normalized(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let a = dense_adjacency(g) + DMatrix::identity(n, n);
    let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt())
}

pub fn power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Clamped correlation; values within 64 ulp of `±1` count as exactly parallel.
fn correlation(sij: f64, norm: f64) -> f64 {
    let lambda = (sij / norm).clamp(-1.0, 1.0);
    if 1.0 - lambda.abs() <= 64.0 * f64::EPSILON {
        lambda.signum()
    } else {
        lambda
    }
}

fn relu_value(sii: f64, sjj: f64, sij: f64) -> f64 {
    let norm = (sii * sjj).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let theta = correlation(sij, norm).acos();
    norm / (2.0 * PI) * (theta.sin() + (PI - theta) * theta.cos())
}

fn relu_deriv(sii: f64, sjj: f64, sij: f64) -> f64 {
    let norm = (sii * sjj).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let theta = correlation(sij, norm).acos();
    (PI - theta) / (2.0 * PI)
}

/// Covariance route: aggregate `X₁X₂ᵀ` with dense `Â^K` on both sides.
pub fn dense_sgtk(g1: &Graph, g2: &Graph, k: usize, beta: f64) -> DMatrix<f64> {
    let (p1, p2) = (power(&dense_normalized(g1), k), power(&dense_normalized(g2), k));
    let (x1, x2) = (g1.features(), g2.features());
    let d = x1.ncols() as f64;
    let b2 = beta * beta;
    let cross = &p1 * (x1 * x2.transpose()) * p2.transpose();
    let self1 = &p1 * (x1 * x1.transpose()) * p1.transpose();
    let self2 = &p2 * (x2 * x2.transpose()) * p2.transpose();
    DMatrix::from_fn(cross.nrows(), cross.ncols(), |i, j| {
        let s = cross[(i, j)] / d + b2;
        let sii = self1[(i, i)] / d + b2;
        let sjj = self2[(j, j)] / d + b2;
        s * relu_deriv(sii, sjj, s) + relu_value(sii, sjj, s) + b2
    })
}

pub fn dense_sgnk(g1: &Graph, g2: &Graph, k: usize, sigma_b: f64) -> DMatrix<f64> {
    let x1 = power(&dense_normalized(g1), k) * g1.features();
    let x2 = power(&dense_normalized(g2), k) * g2.features();
    let b2 = sigma_b * sigma_b;
    DMatrix::from_fn(x1.nrows(), x2.nrows(), |i, j| {
        let (xi, xj) = (x1.row(i), x2.row(j));
        let num = 2.0 * (xi.dot(&xj) + b2);
        let di = 1.0 + 2.0 * (xi.dot(&xi) + b2);
        let dj = 1.0 + 2.0 * (xj.dot(&xj) + b2);
        2.0 / PI * (num / (di * dj).sqrt()).asin()
    })
}

/// Sum of products evaluated as if in twice the working precision (Ogita,
/// Rump and Oishi's `Dot2`). Aggregated covariances cancel heavily, and plain
/// sums would leave the oracle itself too noisy near parallel pairs.
fn dot2(terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in terms {
        let p = x * y;
        let p_err = x.mul_add(y, -p);
        let t = s + p;
        let z = t - s;
        c += ((s - (t - z)) + (p - z)) + p_err;
        s = t;
    }
    s + c
}

/// `cᵢ cⱼ Σₖₗ L[i,k] R[j,l] m(k, l)`, one `dot2` per entry; `m(k, l)` is itself
/// given as a list of factor pairs.
fn aggregate(
    l: &DMatrix<f64>,
    cl: &[f64],
    r: &DMatrix<f64>,
    cr: &[f64],
    m: impl Fn(usize, usize) -> Vec<(f64, f64)>,
) -> DMatrix<f64> {
    DMatrix::from_fn(l.nrows(), r.nrows(), |i, j| {
        let mut terms = Vec::new();
        for k in (0..l.ncols()).filter(|&k| l[(i, k)] != 0.0) {
            for q in (0..r.ncols()).filter(|&q| r[(j, q)] != 0.0) {
                let w = l[(i, k)] * r[(j, q)];
                terms.extend(m(k, q).into_iter().map(|(a, b)| (w * a, b)));
            }
        }
        dot2(terms.into_iter()) * cl[i] * cr[j]
    })
}

/// Block recursion with the covariance route throughout: block one aggregates
/// `X₁X₂ᵀ`, later blocks aggregate the previous ReLU expectations.
pub fn dense_gntk(g1: &Graph, g2: &Graph, blocks: usize) -> DMatrix<f64> {
    let side = |g: &Graph| {
        let n = g.num_nodes();
        let a = dense_adjacency(g) + DMatrix::identity(n, n);
        let x = g.features();
        let c: Vec<f64> = (0..n)
            .map(|i| {
                let sq = aggregate(&a.rows(i, 1).into_owned(), &[1.0], &a.rows(i, 1).into_owned(), &[1.0], |k, q| {
                    (0..x.ncols()).map(|f| (x[(k, f)], x[(q, f)])).collect()
                })[(0, 0)];
                let norm = sq.max(0.0).sqrt();
                if norm > 1e-150 {
                    1.0 / norm
                } else {
                    1.0
                }
            })
            .collect();
        (a, c)
    };
    let ((a1, c1), (a2, c2)) = (side(g1), side(g2));
    let (x1, x2) = (g1.features(), g2.features());
    let features = |xa: &DMatrix<f64>, xb: &DMatrix<f64>| {
        let (xa, xb) = (xa.clone(), xb.clone());
        move |k: usize, q: usize| (0..xa.ncols()).map(|f| (xa[(k, f)], xb[(q, f)])).collect::<Vec<_>>()
    };
    let value = |m: &DMatrix<f64>| {
        let m = m.clone();
        move |k: usize, q: usize| vec![(m[(k, q)], 1.0)]
    };
    let mut s12 = aggregate(&a1, &c1, &a2, &c2, features(x1, x2));
    let mut s11 = aggregate(&a1, &c1, &a1, &c1, features(x1, x1));
    let mut s22 = aggregate(&a2, &c2, &a2, &c2, features(x2, x2));
    let mut theta = s12.clone();
    for b in 0..blocks {
        if b > 0 {
            s12 = aggregate(&a1, &c1, &a2, &c2, value(&s12));
            s11 = aggregate(&a1, &c1, &a1, &c1, value(&s11));
            s22 = aggregate(&a2, &c2, &a2, &c2, value(&s22));
            theta = aggregate(&a1, &c1, &a2, &c2, value(&theta));
        }
        let (n1, n2) = (s12.nrows(), s12.ncols());
        let next12 = DMatrix::from_fn(n1, n2, |i, j| relu_value(s11[(i, i)], s22[(j, j)], s12[(i, j)]));
        theta = DMatrix::from_fn(n1, n2, |i, j| {
            theta[(i, j)] * relu_deriv(s11[(i, i)], s22[(j, j)], s12[(i, j)]) + next12[(i, j)]
        });
        let next11 = DMatrix::from_fn(n1, n1, |i, j| relu_value(s11[(i, i)], s11[(j, j)], s11[(i, j)]));
        let next22 = DMatrix::from_fn(n2, n2, |i, j| relu_value(s22[(i, i)], s22[(j, j)], s22[(i, j)]));
        s12 = next12;
        s11 = next11;
        s22 = next22;
    }
    theta
}
