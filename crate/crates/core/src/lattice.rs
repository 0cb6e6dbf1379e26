//! Short vectors of positive definite rational quadratic forms: LLL reduction of the Gram
//! matrix in floating point, Fincke-Pohst enumeration, exact verification of every candidate.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::embed::to_f64;
use crate::error::{Error, Result};
use crate::linalg::QMat;
use crate::Rational;

/// Default number of enumeration nodes before giving up; `CMREFLEX_BUDGET` overrides it.
pub const DEFAULT_BUDGET: u64 = 5_000_000;

pub fn budget() -> u64 {
    std::env::var("CMREFLEX_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

fn gram_of(g: &[Vec<f64>], u: &[Vec<i128>]) -> Vec<Vec<f64>> {
    let n = g.len();
    // u[j] is the j-th new basis vector in old coordinates
    let gu: Vec<Vec<f64>> = u
        .iter()
        .map(|col| (0..n).map(|r| (0..n).map(|k| g[r][k] * col[k] as f64).sum()).collect())
        .collect();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|r| u[i][r] as f64 * gu[j][r]).sum()).collect()).collect()
}

fn gram_schmidt(g: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = g.len();
    let mut mu = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= mu[j][k] * mu[i][k] * b[k];
            }
            mu[i][j] = s / b[j];
        }
        let mut s = g[i][i];
        for k in 0..i {
            s -= mu[i][k] * mu[i][k] * b[k];
        }
        b[i] = s;
        mu[i][i] = 1.0;
    }
    (mu, b)
}

/// LLL-reduce a positive definite Gram matrix; returns the unimodular change of basis
/// (new basis vectors as columns in old coordinates).
pub fn lll(gram: &[Vec<f64>]) -> Vec<Vec<i128>> {
    let n = gram.len();
    let mut u: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    let mut k = 1;
    let mut steps = 0;
    while k < n && steps < 100_000 {
        steps += 1;
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&gram_of(gram, &u));
            let q = mu[k][j].round();
            if q != 0.0 && q.is_finite() {
                let q = q as i128;
                let bj = u[j].clone();
                for (x, y) in u[k].iter_mut().zip(&bj) {
                    *x -= q * y;
                }
            }
        }
        let (mu, b) = gram_schmidt(&gram_of(gram, &u));
        if b[k] < (0.99 - mu[k][k - 1] * mu[k][k - 1]) * b[k - 1] {
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        } else {
            k += 1;
        }
    }
    u
}

/// All nonzero integer vectors x (up to sign) with x^T G x <= bound, where G is a positive
/// definite rational Gram matrix.  Vectors are normalized so that their last nonzero entry
/// is positive, and returned sorted by norm and then lexicographically.
pub fn short_vectors(gram: &QMat, bound: &Rational, cap: u64) -> Result<Vec<(Rational, Vec<BigInt>)>> {
    let n = gram.len();
    let gf: Vec<Vec<f64>> = gram.iter().map(|r| r.iter().map(to_f64).collect()).collect();
    let u = lll(&gf);
    // exact reduced Gram
    let uq: Vec<Vec<Rational>> =
        u.iter().map(|c| c.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect()).collect();
    let red: QMat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = Rational::zero();
                    for r in 0..n {
                        if uq[i][r].is_zero() {
                            continue;
                        }
                        for c in 0..n {
                            if !uq[j][c].is_zero() {
                                s += &uq[i][r] * &gram[r][c] * &uq[j][c];
                            }
                        }
                    }
                    s
                })
                .collect()
        })
        .collect();
    let rf: Vec<Vec<f64>> = red.iter().map(|r| r.iter().map(to_f64).collect()).collect();
    // Cholesky-style decomposition q(x) = sum_i q_ii (x_i + sum_{j>i} q_ij x_j)^2
    let mut q = rf.clone();
    for i in 0..n {
        for j in i + 1..n {
            q[j][i] = q[i][j];
            q[i][j] /= q[i][i];
        }
        for k in i + 1..n {
            for l in k..n {
                q[k][l] -= q[k][i] * q[i][l];
            }
        }
    }
    let bf = to_f64(bound);
    let c = bf * (1.0 + 1e-9) + 1e-9;
    let mut found: Vec<Vec<i64>> = vec![];
    let mut x = vec![0i64; n];
    let mut nodes = 0u64;
    enumerate(&q, n, n, c, &mut x, &mut nodes, cap, &mut found).map_err(|_| Error::EnumerationBoundExceeded {
        bound: bound.to_string(),
        budget: cap.to_string(),
    })?;
    let mut out = vec![];
    for y in found {
        if y.iter().all(|&v| v == 0) {
            continue;
        }
        let v: Vec<BigInt> = (0..n)
            .map(|r| (0..n).fold(BigInt::zero(), |s, j| s + BigInt::from(u[j][r]) * BigInt::from(y[j])))
            .collect();
        let val = qform(gram, &v);
        if &val <= bound {
            let v = normalize_sign(v);
            out.push((val, v));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn normalize_sign(v: Vec<BigInt>) -> Vec<BigInt> {
    match v.iter().rev().find(|x| !x.is_zero()) {
        Some(x) if x < &BigInt::zero() => v.into_iter().map(|x| -x).collect(),
        _ => v,
    }
}

pub fn qform(gram: &QMat, v: &[BigInt]) -> Rational {
    let n = v.len();
    let mut s = Rational::zero();
    for i in 0..n {
        if v[i].is_zero() {
            continue;
        }
        for j in 0..n {
            if !v[j].is_zero() {
                s += &gram[i][j] * Rational::from_integer(&v[i] * &v[j]);
            }
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    q: &[Vec<f64>],
    n: usize,
    level: usize,
    remaining: f64,
    x: &mut Vec<i64>,
    nodes: &mut u64,
    cap: u64,
    out: &mut Vec<Vec<i64>>,
) -> Result<()> {
    if level == 0 {
        // keep one of each ±pair: last nonzero coordinate positive
        if let Some(&last) = x.iter().rev().find(|&&v| v != 0) {
            if last > 0 {
                out.push(x.clone());
            }
        }
        return Ok(());
    }
    let i = level - 1;
    let mut centre = 0.0;
    for j in i + 1..n {
        centre -= q[i][j] * x[j] as f64;
    }
    let r = (remaining.max(0.0) / q[i][i]).sqrt();
    let lo = (centre - r - 1e-9).ceil();
    let hi = (centre + r + 1e-9).floor();
    if !lo.is_finite() || !hi.is_finite() || hi - lo > 1e7 {
        return Err(Error::EnumerationBoundExceeded { bound: format!("{remaining:.3e}"), budget: cap.to_string() });
    }
    let (lo, hi) = (lo as i64, hi as i64);
    for v in lo..=hi {
        *nodes += 1;
        if *nodes > cap {
            return Err(Error::EnumerationBoundExceeded { bound: format!("{remaining:.3e}"), budget: cap.to_string() });
        }
        let d = v as f64 - centre;
        let rest = remaining - q[i][i] * d * d;
        if rest < -1e-9 * (1.0 + remaining.abs()) {
            continue;
        }
        x[i] = v;
        enumerate(q, n, level - 1, rest, x, nodes, cap, out)?;
    }
    x[i] = 0;
    Ok(())
}

/// Smallest value of the form on nonzero vectors, by doubling the bound from a basis vector.
pub fn minimum(gram: &QMat, cap: u64) -> Result<(Rational, Vec<BigInt>)> {
    let n = gram.len();
    let mut bound = (0..n).map(|i| gram[i][i].clone()).min().expect("nonempty");
    loop {
        let v = short_vectors(gram, &bound, cap)?;
        if let Some(first) = v.into_iter().next() {
            return Ok(first);
        }
        bound = bound * Rational::from_integer(BigInt::from(2));
    }
}

pub fn to_i64_vec(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(|x| x.to_i64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rint;

    #[test]
    fn counts_on_z2() {
        let g: QMat = vec![vec![rint(1), rint(0)], vec![rint(0), rint(1)]];
        let v = short_vectors(&g, &rint(2), 1000).unwrap();
        // (1,0),(0,1),(1,1),(-1,1) up to sign
        assert_eq!(v.len(), 4);
        let v = short_vectors(&g, &rint(5), 1000).unwrap();
        // brute force oracle
        let mut count = 0;
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                if (a, b) != (0, 0) && a * a + b * b <= 5 {
                    count += 1;
                }
            }
        }
        assert_eq!(v.len() * 2, count);
    }

    #[test]
    fn skewed_form_brute_force() {
        // a badly conditioned form with exact oracle
        let g: QMat = vec![
            vec![rint(101), rint(99), rint(7)],
            vec![rint(99), rint(98), rint(6)],
            vec![rint(7), rint(6), rint(3)],
        ];
        let bound = rint(20);
        let v = short_vectors(&g, &bound, 100_000).unwrap();
        // |x_i| <= sqrt(bound * (G^-1)_ii)
        let inv = crate::linalg::q_inverse(&g).unwrap();
        let r: Vec<i64> = (0..3).map(|i| (to_f64(&(&inv[i][i] * &bound))).sqrt().ceil() as i64).collect();
        let mut count = 0;
        for a in -r[0]..=r[0] {
            for b in -r[1]..=r[1] {
                for c in -r[2]..=r[2] {
                    let x = [a, b, c];
                    let mut s = 0i64;
                    for i in 0..3 {
                        for j in 0..3 {
                            s += x[i] * x[j] * [[101, 99, 7], [99, 98, 6], [7, 6, 3]][i][j];
                        }
                    }
                    if s <= 20 && x != [0, 0, 0] {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(v.len() * 2, count);
    }
}
