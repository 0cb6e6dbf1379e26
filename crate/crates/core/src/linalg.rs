//! Exact linear algebra over Q and Z: elimination, kernels, Hermite and Smith normal forms.
//!
//! Rational matrices are row-major `Vec<Vec<Rational>>`.  Integer lattices are given as lists
//! of column vectors; a Hermite basis is returned as `n` columns, column `j` supported on rows
//! `0..=j` with positive diagonal and entries right of the diagonal reduced into `[0, h_ii)`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::Rational;

pub type QMat = Vec<Vec<Rational>>;
pub type ZCols = Vec<Vec<BigInt>>;

pub fn q_identity(n: usize) -> QMat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

pub fn q_mul(a: &QMat, b: &QMat) -> QMat {
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    let mut s = Rational::zero();
                    for t in 0..k {
                        if !row[t].is_zero() && !b[t][j].is_zero() {
                            s += &row[t] * &b[t][j];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn q_mul_vec(a: &QMat, v: &[Rational]) -> Vec<Rational> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
        })
        .collect()
}

pub fn q_transpose(a: &QMat) -> QMat {
    if a.is_empty() {
        return vec![];
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn q_rref(m: &mut QMat) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = vec![];
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        let inv = Rational::one() / &m[r][c];
        for j in c..cols {
            if !m[r][j].is_zero() {
                m[r][j] = &m[r][j] * &inv;
            }
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..cols {
                    if !m[r][j].is_zero() {
                        let d = &f * &m[r][j];
                        m[i][j] -= d;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn q_rank(m: &QMat) -> usize {
    let mut a = m.clone();
    q_rref(&mut a).len()
}

/// Basis of {v : m v = 0}.
pub fn q_kernel(m: &QMat, cols: usize) -> Vec<Vec<Rational>> {
    let mut a = m.clone();
    let pivots = q_rref(&mut a);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

pub fn q_det(m: &QMat) -> Rational {
    let n = m.len();
    let mut a = m.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Rational::zero();
        };
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        det *= &a[c][c];
        let inv = Rational::one() / &a[c][c];
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = &a[i][c] * &inv;
            for j in c..n {
                if !a[c][j].is_zero() {
                    let d = &f * &a[c][j];
                    a[i][j] -= d;
                }
            }
        }
    }
    det
}

pub fn q_inverse(m: &QMat) -> Option<QMat> {
    let n = m.len();
    let mut a: QMat = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let piv = q_rref(&mut a);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Solve m x = b for square invertible m.
pub fn q_solve(m: &QMat, b: &[Rational]) -> Option<Vec<Rational>> {
    let n = m.len();
    let mut a: QMat = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let piv = q_rref(&mut a);
    let cols = m.first().map_or(0, |r| r.len());
    if piv.contains(&cols) {
        return None;
    }
    let mut x = vec![Rational::zero(); cols];
    for (r, &pc) in piv.iter().enumerate() {
        x[pc] = a[r][cols].clone();
    }
    let _ = n;
    Some(x)
}

fn reduce_mod(v: &mut [BigInt], upto: usize, d: &BigInt) {
    for x in v.iter_mut().take(upto + 1) {
        *x = x.mod_floor(d);
    }
}

/// Hermite basis of the full-rank lattice spanned by `gens` in Z^n.  When `modulus` is given,
/// it must be a positive integer D with D*Z^n contained in the lattice.
/// Returns `None` if the generators do not span a rank-n lattice.
pub fn hnf(gens: &[Vec<BigInt>], n: usize, modulus: Option<&BigInt>) -> Option<ZCols> {
    let mut work: Vec<Vec<BigInt>> = gens
        .iter()
        .filter(|v| v.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let mut basis: Vec<Option<Vec<BigInt>>> = vec![None; n];
    for i in (0..n).rev() {
        if let Some(d) = modulus {
            for v in work.iter_mut() {
                reduce_mod(v, i, d);
            }
            work.retain(|v| v.iter().any(|x| !x.is_zero()));
            let mut e = vec![BigInt::zero(); n];
            e[i] = d.clone();
            work.push(e);
        }
        let mut pivot: Option<Vec<BigInt>> = None;
        let mut rest = Vec::with_capacity(work.len());
        for v in work.drain(..) {
            if v[i].is_zero() {
                rest.push(v);
                continue;
            }
            match pivot.take() {
                None => pivot = Some(v),
                Some(p) => {
                    let eg = p[i].extended_gcd(&v[i]);
                    let (a, b) = (eg.x, eg.y);
                    let pv = &p[i] / &eg.gcd;
                    let vv = &v[i] / &eg.gcd;
                    let newp: Vec<BigInt> =
                        (0..n).map(|k| &a * &p[k] + &b * &v[k]).collect();
                    let other: Vec<BigInt> =
                        (0..n).map(|k| &pv * &v[k] - &vv * &p[k]).collect();
                    if other.iter().any(|x| !x.is_zero()) {
                        rest.push(other);
                    }
                    pivot = Some(newp);
                }
            }
        }
        let mut p = pivot?;
        if p[i].is_negative() {
            for x in p.iter_mut() {
                *x = -x.clone();
            }
        }
        if let Some(d) = modulus {
            for v in rest.iter_mut() {
                reduce_mod(v, i, d);
            }
            for x in p.iter_mut().take(i) {
                *x = x.mod_floor(d);
            }
            rest.retain(|v| v.iter().any(|x| !x.is_zero()));
        }
        basis[i] = Some(p);
        work = rest;
    }
    let mut h: ZCols = basis.into_iter().map(|c| c.unwrap()).collect();
    // reduce entries to the right of the diagonal
    for j in 1..n {
        for i in (0..j).rev() {
            let q = h[j][i].div_floor(&h[i][i]);
            if !q.is_zero() {
                for k in 0..=i {
                    let d = &q * &h[i][k];
                    h[j][k] -= d;
                }
            }
        }
    }
    Some(h)
}

/// Determinant of an upper-triangular basis.
pub fn hnf_det(h: &ZCols) -> BigInt {
    h.iter().enumerate().fold(BigInt::one(), |acc, (i, c)| acc * &c[i])
}

/// Coordinates of an integer vector in a Hermite basis (back substitution); `None` if the
/// vector is not in the lattice.
pub fn hnf_coords(h: &ZCols, v: &[BigInt]) -> Option<Vec<BigInt>> {
    let n = h.len();
    let mut r = v.to_vec();
    let mut x = vec![BigInt::zero(); n];
    for i in (0..n).rev() {
        let (q, rem) = r[i].div_rem(&h[i][i]);
        if !rem.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for k in 0..=i {
                let d = &q * &h[i][k];
                r[k] -= d;
            }
        }
        x[i] = q;
    }
    Some(x)
}

/// Lattice {z in Z^n : b z = 0 mod d} for an m x n integer matrix b (rows) and d > 0.
pub fn congruence_kernel(b: &[Vec<BigInt>], n: usize, d: &BigInt) -> ZCols {
    let mut basis: ZCols = (0..n)
        .map(|j| {
            let mut e = vec![BigInt::zero(); n];
            e[j] = BigInt::one();
            e
        })
        .collect();
    for row in b {
        // one congruence at a time; the residue is appended as a last coordinate
        let vals: Vec<BigInt> = basis
            .iter()
            .map(|c| row.iter().zip(c).fold(BigInt::zero(), |s, (r, x)| s + r * x).mod_floor(d))
            .collect();
        if vals.iter().all(|v| v.is_zero()) {
            continue;
        }
        let gens: Vec<Vec<BigInt>> = basis
            .iter()
            .zip(&vals)
            .map(|(c, v)| {
                let mut g = c.clone();
                g.push(v.clone());
                g
            })
            .collect();
        let h = hnf(&gens, n + 1, Some(d)).expect("full rank");
        basis = h[..n].iter().map(|c| c[..n].to_vec()).collect();
    }
    hnf(&basis, n, Some(d)).expect("kernel has full rank")
}

/// An integer solution y of m y = b (m given by rows), if one exists.
pub fn solve_int(m: &[Vec<BigInt>], b: &[BigInt]) -> Option<Vec<BigInt>> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let (diag, u, v) = smith(m);
    let ub: Vec<BigInt> =
        (0..rows).map(|i| u[i].iter().zip(b).fold(BigInt::zero(), |s, (x, y)| s + x * y)).collect();
    let mut z = vec![BigInt::zero(); cols];
    for i in 0..rows {
        let d = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
        if d.is_zero() {
            if !ub[i].is_zero() {
                return None;
            }
        } else {
            let (q, r) = ub[i].div_rem(&d);
            if !r.is_zero() {
                return None;
            }
            z[i] = q;
        }
    }
    Some((0..cols).map(|i| v[i].iter().zip(&z).fold(BigInt::zero(), |s, (x, y)| s + x * y)).collect())
}

/// Smith normal form of an integer matrix (rows x cols, row-major).  Returns
/// (diagonal, U, V) with U * a * V = diag, U and V unimodular.
pub fn smith(a: &[Vec<BigInt>]) -> (Vec<BigInt>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let ident = |k: usize| -> Vec<Vec<BigInt>> {
        (0..k)
            .map(|i| (0..k).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect()
    };
    let mut u = ident(rows);
    let mut v = ident(cols);
    let t = rows.min(cols);
    for k in 0..t {
        loop {
            // pick smallest nonzero in submatrix
            let mut best: Option<(usize, usize)> = None;
            for i in k..rows {
                for j in k..cols {
                    if !m[i][j].is_zero()
                        && best.is_none_or(|(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                let diag = (0..t).map(|i| m[i][i].abs()).collect();
                return (diag, u, v);
            };
            m.swap(k, bi);
            u.swap(k, bi);
            for r in m.iter_mut() {
                r.swap(k, bj);
            }
            for r in v.iter_mut() {
                r.swap(k, bj);
            }
            let mut clean = true;
            for i in k + 1..rows {
                let q = m[i][k].div_floor(&m[k][k]);
                if !q.is_zero() {
                    for j in 0..cols {
                        let d = &q * &m[k][j];
                        m[i][j] -= d;
                    }
                    for j in 0..rows {
                        let d = &q * &u[k][j];
                        u[i][j] -= d;
                    }
                }
                if !m[i][k].is_zero() {
                    clean = false;
                }
            }
            for j in k + 1..cols {
                let q = m[k][j].div_floor(&m[k][k]);
                if !q.is_zero() {
                    for i in 0..rows {
                        let d = &q * &m[i][k];
                        m[i][j] -= d;
                    }
                    for i in 0..cols {
                        let d = &q * &v[i][k];
                        v[i][j] -= d;
                    }
                }
                if !m[k][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility condition
            let mut bad = None;
            'outer: for i in k + 1..rows {
                for j in k + 1..cols {
                    if !(&m[i][j] % &m[k][k]).is_zero() {
                        bad = Some(i);
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(i) => {
                    for j in 0..cols {
                        let x = m[i][j].clone();
                        m[k][j] += x;
                    }
                    for j in 0..rows {
                        let x = u[i][j].clone();
                        u[k][j] += x;
                    }
                }
                None => break,
            }
        }
        if m[k][k].is_negative() {
            for j in 0..cols {
                m[k][j] = -m[k][j].clone();
            }
            for j in 0..rows {
                u[k][j] = -u[k][j].clone();
            }
        }
    }
    let diag = (0..t).map(|i| m[i][i].abs()).collect();
    (diag, u, v)
}

pub fn rat_vec_denominator(v: &[Rational]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rint;

    fn zc(cols: &[&[i64]]) -> ZCols {
        cols.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn hnf_simple() {
        // lattice spanned by (2,0),(1,1) ... columns
        let h = hnf(&zc(&[&[2, 0], &[1, 1], &[3, 1]]), 2, None).unwrap();
        assert_eq!(h, zc(&[&[2, 0], &[1, 1]]));
        assert_eq!(hnf_det(&h), BigInt::from(2));
        let h2 = hnf(&zc(&[&[4, 0], &[0, 6], &[2, 3]]), 2, Some(&BigInt::from(12))).unwrap();
        let h3 = hnf(&zc(&[&[4, 0], &[0, 6], &[2, 3]]), 2, None).unwrap();
        assert_eq!(h2, h3);
        assert_eq!(hnf_det(&h3), BigInt::from(12));
    }

    #[test]
    fn hnf_is_canonical() {
        let a = hnf(&zc(&[&[3, 0, 0], &[1, 2, 0], &[5, 7, 4]]), 3, None).unwrap();
        let b = hnf(&zc(&[&[3 + 1, 2, 0], &[1, 2, 0], &[5 + 3, 7, 4]]), 3, None).unwrap();
        assert_eq!(a, b);
        for j in 0..3 {
            for i in 0..j {
                assert!(a[j][i] >= BigInt::zero() && a[j][i] < a[i][i]);
            }
            for i in j + 1..3 {
                assert!(a[j][i].is_zero());
            }
        }
    }

    #[test]
    fn congruence_kernel_small() {
        // z1 + 2 z2 = 0 mod 4
        let k = congruence_kernel(&[vec![BigInt::from(1), BigInt::from(2)]], 2, &BigInt::from(4));
        assert_eq!(hnf_det(&k), BigInt::from(4));
        for c in &k {
            let s: BigInt = &c[0] + &c[1] * BigInt::from(2);
            assert!((s % BigInt::from(4)).is_zero());
        }
    }

    #[test]
    fn smith_diag() {
        let a: Vec<Vec<BigInt>> = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let (d, u, v) = smith(&a);
        assert_eq!(d, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
        let mul = |x: &Vec<Vec<BigInt>>, y: &Vec<Vec<BigInt>>| -> Vec<Vec<BigInt>> {
            x.iter()
                .map(|r| (0..y[0].len()).map(|j| r.iter().zip(y).map(|(a, row)| a * &row[j]).sum()).collect())
                .collect()
        };
        let p = mul(&mul(&u, &a), &v);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(p[i][j].is_zero());
                } else {
                    assert_eq!(p[i][i].abs(), d[i]);
                }
            }
        }
    }

    #[test]
    fn integer_solutions() {
        let z = |r: &[i64]| r.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        let m = vec![z(&[6, 10, 15]), z(&[0, 2, 4])];
        let b = z(&[1, 2]);
        let y = solve_int(&m, &b).unwrap();
        for (row, t) in m.iter().zip(&b) {
            assert_eq!(row.iter().zip(&y).map(|(a, x)| a * x).sum::<BigInt>(), *t);
        }
        assert!(solve_int(&[z(&[2, 4])], &z(&[1])).is_none());
    }

    #[test]
    fn rational_inverse_det() {
        let m: QMat = vec![vec![rint(2), rint(1)], vec![rint(1), rint(1)]];
        assert_eq!(q_det(&m), rint(1));
        let inv = q_inverse(&m).unwrap();
        assert_eq!(q_mul(&m, &inv), q_identity(2));
        assert_eq!(q_solve(&m, &[rint(3), rint(2)]).unwrap(), vec![rint(1), rint(1)]);
    }
}
