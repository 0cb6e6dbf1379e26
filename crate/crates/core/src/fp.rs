//! Polynomials and linear algebra over prime fields F_p.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::arith::{inv_mod, mul_mod, pow_mod};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FpPoly {
    pub p: u64,
    c: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, mut c: Vec<u64>) -> Self {
        for a in c.iter_mut() {
            *a %= p;
        }
        while c.last() == Some(&0) {
            c.pop();
        }
        FpPoly { p, c }
    }

    pub fn from_i64(p: u64, c: &[i64]) -> Self {
        Self::new(p, c.iter().map(|&a| a.rem_euclid(p as i64) as u64).collect())
    }

    pub fn zero(p: u64) -> Self {
        FpPoly { p, c: vec![] }
    }

    pub fn one(p: u64) -> Self {
        Self::new(p, vec![1])
    }

    pub fn x(p: u64) -> Self {
        Self::new(p, vec![0, 1])
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c == [1]
    }

    pub fn deg(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn lead(&self) -> u64 {
        *self.c.last().unwrap_or(&0)
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0;
        for &a in self.c.iter().rev() {
            acc = (mul_mod(acc, x, self.p) + a) % self.p;
        }
        acc
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let v = (0..n)
            .map(|i| (self.c.get(i).unwrap_or(&0) + o.c.get(i).unwrap_or(&0)) % self.p)
            .collect();
        Self::new(self.p, v)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.c.len().max(o.c.len());
        let p = self.p;
        let v = (0..n)
            .map(|i| (self.c.get(i).unwrap_or(&0) + p - o.c.get(i).unwrap_or(&0)) % p)
            .collect();
        Self::new(p, v)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let p = self.p;
        let mut v = vec![0u128; self.c.len() + o.c.len() - 1];
        let pp = p as u128;
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                v[i + j] = (v[i + j] + a as u128 * b as u128) % pp;
            }
        }
        Self::new(p, v.into_iter().map(|a| a as u64).collect())
    }

    pub fn scale(&self, s: u64) -> Self {
        Self::new(self.p, self.c.iter().map(|&a| mul_mod(a, s, self.p)).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(inv_mod(self.lead(), self.p).expect("nonzero lead"))
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero());
        let p = self.p;
        let dd = d.deg();
        if self.c.len() <= dd {
            return (Self::zero(p), self.clone());
        }
        let inv = inv_mod(d.lead(), p).unwrap();
        let mut r = self.c.clone();
        let mut q = vec![0u64; r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = mul_mod(r[i + dd], inv, p);
            if c != 0 {
                for j in 0..=dd {
                    r[i + j] = (r[i + j] + p - mul_mod(c, d.c[j], p)) % p;
                }
            }
            q[i] = c;
        }
        r.truncate(dd);
        (Self::new(p, q), Self::new(p, r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// (g, s, t) with s*self + t*o = g monic.
    pub fn ext_gcd(&self, o: &Self) -> (Self, Self, Self) {
        let p = self.p;
        let (mut r0, mut r1) = (self.clone(), o.clone());
        let (mut s0, mut s1) = (Self::one(p), Self::zero(p));
        let (mut t0, mut t1) = (Self::zero(p), Self::one(p));
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1);
            r0 = r1;
            r1 = r;
            let s = s0.sub(&q.mul(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub(&q.mul(&t1));
            t0 = t1;
            t1 = t;
        }
        let inv = inv_mod(r0.lead(), p).unwrap_or(1);
        (r0.scale(inv), s0.scale(inv), t0.scale(inv))
    }

    pub fn derivative(&self) -> Self {
        let p = self.p;
        Self::new(
            p,
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| mul_mod(a, i as u64 % p, p))
                .collect(),
        )
    }

    pub fn pow_mod(&self, mut e: u128, m: &Self) -> Self {
        let mut base = self.rem(m);
        let mut acc = Self::one(self.p).rem(m);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        acc
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.p);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Squarefree decomposition: pairs (squarefree factor, multiplicity), monic.
    pub fn squarefree_decomposition(&self) -> Vec<(FpPoly, u32)> {
        let f = self.monic();
        let mut out = Vec::new();
        sff(&f, 1, &mut out);
        out.retain(|(g, _)| g.deg() > 0);
        out
    }

    /// Full factorization into monic irreducibles with multiplicities, sorted.
    pub fn factor(&self, seed: u64) -> Vec<(FpPoly, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for (g, m) in self.squarefree_decomposition() {
            for (h, d) in distinct_degree(&g) {
                for irr in equal_degree(&h, d, &mut rng) {
                    out.push((irr, m));
                }
            }
        }
        // merge equal factors (can arise when sff splits a factor across levels)
        out.sort_by(|a, b| (a.0.deg(), &a.0.c).cmp(&(b.0.deg(), &b.0.c)));
        let mut merged: Vec<(FpPoly, u32)> = Vec::new();
        for (g, m) in out {
            match merged.last_mut() {
                Some((h, k)) if *h == g => *k += m,
                _ => merged.push((g, m)),
            }
        }
        merged
    }

    /// Distinct irreducible factors of a squarefree monic polynomial.
    pub fn factor_squarefree(&self, rng: &mut ChaCha8Rng) -> Vec<FpPoly> {
        let mut out = vec![];
        for (h, d) in distinct_degree(&self.monic()) {
            out.extend(equal_degree(&h, d, rng));
        }
        out.sort_by(|a, b| (a.deg(), &a.c).cmp(&(b.deg(), &b.c)));
        out
    }

    pub fn is_irreducible(&self) -> bool {
        if self.deg() == 0 {
            return false;
        }
        let f = self.monic();
        if !f.derivative().is_zero() && f.gcd(&f.derivative()).deg() > 0 {
            return false;
        }
        if f.derivative().is_zero() {
            return false;
        }
        let dd = distinct_degree(&f);
        dd.len() == 1 && dd[0].1 == f.deg()
    }
}

fn sff(f: &FpPoly, mult: u32, out: &mut Vec<(FpPoly, u32)>) {
    let p = f.p;
    if f.deg() == 0 {
        return;
    }
    let g = f.derivative();
    if g.is_zero() {
        sff(&pth_root(f), mult * p as u32, out);
        return;
    }
    let mut c = f.gcd(&g);
    let mut w = f.div_rem(&c).0;
    let mut i = 1;
    while w.deg() > 0 {
        let y = w.gcd(&c);
        let fac = w.div_rem(&y).0;
        if fac.deg() > 0 {
            out.push((fac.monic(), i * mult));
        }
        i += 1;
        w = y;
        c = c.div_rem(&w).0;
    }
    if c.deg() > 0 {
        sff(&pth_root(&c), mult * p as u32, out);
    }
}

fn pth_root(f: &FpPoly) -> FpPoly {
    let p = f.p as usize;
    FpPoly::new(f.p, f.c.iter().step_by(p).cloned().collect())
}

fn distinct_degree(f: &FpPoly) -> Vec<(FpPoly, usize)> {
    let p = f.p;
    let mut out = vec![];
    let mut f = f.monic();
    let x = FpPoly::x(p);
    let mut h = x.rem(&f);
    let mut i = 1;
    while f.deg() >= 2 * i {
        h = h.pow_mod(p as u128, &f);
        let g = h.sub(&x).gcd(&f);
        if g.deg() > 0 {
            out.push((g.clone(), i));
            f = f.div_rem(&g).0;
            h = h.rem(&f);
        }
        i += 1;
    }
    if f.deg() > 0 {
        let d = f.deg();
        out.push((f, d));
    }
    out
}

fn equal_degree(f: &FpPoly, d: usize, rng: &mut ChaCha8Rng) -> Vec<FpPoly> {
    let p = f.p;
    let n = f.deg();
    if n == d {
        return vec![f.monic()];
    }
    loop {
        let a = FpPoly::new(p, (0..n).map(|_| rng.gen_range(0..p)).collect());
        if a.deg() == 0 {
            continue;
        }
        let b = if p == 2 {
            // absolute trace F_{2^d} -> F_2
            let mut t = a.rem(f);
            let mut acc = t.clone();
            for _ in 1..d {
                t = t.mul(&t).rem(f);
                acc = acc.add(&t);
            }
            acc
        } else {
            // norm to F_p, then quadratic character
            let mut t = a.rem(f);
            let mut nrm = t.clone();
            for _ in 1..d {
                t = t.pow_mod(p as u128, f);
                nrm = nrm.mul(&t).rem(f);
            }
            nrm.pow_mod(((p - 1) / 2) as u128, f).sub(&FpPoly::one(p))
        };
        let g = b.gcd(f);
        if g.deg() > 0 && g.deg() < n {
            let h = f.div_rem(&g).0;
            let mut out = equal_degree(&g, d, rng);
            out.extend(equal_degree(&h, d, rng));
            return out;
        }
    }
}

/// Row-reduce a matrix over F_p in place; returns pivot columns.
pub fn row_reduce(m: &mut [Vec<u64>], p: u64) -> Vec<usize> {
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
        let Some(piv) = (r..rows).find(|&i| m[i][c] % p != 0) else {
            continue;
        };
        m.swap(r, piv);
        let inv = inv_mod(m[r][c], p).unwrap();
        for j in 0..cols {
            m[r][j] = mul_mod(m[r][j], inv, p);
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p - mul_mod(f, m[r][j], p)) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right kernel {v : M v = 0} of a rows x cols matrix over F_p.
pub fn kernel(m: &[Vec<u64>], cols: usize, p: u64) -> Vec<Vec<u64>> {
    let mut a: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let pivots = row_reduce(&mut a, p);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - a[r][f]) % p;
            }
            v
        })
        .collect()
}

pub fn rank(m: &[Vec<u64>], p: u64) -> usize {
    let mut a = m.to_vec();
    row_reduce(&mut a, p).len()
}

pub fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(fs: &[(FpPoly, u32)], p: u64) -> FpPoly {
        fs.iter().fold(FpPoly::one(p), |acc, (g, m)| acc.mul(&g.pow(*m)))
    }

    #[test]
    fn factor_x2_plus_1() {
        let f = FpPoly::from_i64(5, &[1, 0, 1]);
        let fs = f.factor(1);
        assert_eq!(fs.len(), 2);
        assert_eq!(product(&fs, 5), f);
        let f2 = FpPoly::from_i64(2, &[1, 0, 1]);
        assert_eq!(f2.factor(1), vec![(FpPoly::from_i64(2, &[1, 1]), 2)]);
        let f7 = FpPoly::from_i64(7, &[1, 0, 1]);
        assert_eq!(f7.factor(1), vec![(f7.clone(), 1)]);
    }

    #[test]
    fn factor_with_pth_powers() {
        // (x+1)^3 (x^2+x+2) over F_3
        let p = 3;
        let f = FpPoly::from_i64(p, &[1, 1]).pow(3).mul(&FpPoly::from_i64(p, &[2, 1, 1]));
        let fs = f.factor(7);
        assert_eq!(product(&fs, p), f.monic());
        for (g, _) in &fs {
            assert!(g.is_irreducible());
        }
    }

    #[test]
    fn cyclotomic_mod_2_is_irreducible() {
        assert!(FpPoly::from_i64(2, &[1, 1, 1, 1, 1]).is_irreducible());
        assert!(!FpPoly::from_i64(11, &[1, 1, 1, 1, 1]).is_irreducible());
        let fs = FpPoly::from_i64(11, &[1, 1, 1, 1, 1]).factor(3);
        assert_eq!(fs.len(), 4);
    }

    #[test]
    fn kernel_dimension() {
        let m = vec![vec![1, 2, 3], vec![2, 4, 6]];
        let k = kernel(&m, 3, 7);
        assert_eq!(k.len(), 2);
        for v in k {
            for row in &m {
                let s: u64 = row.iter().zip(&v).map(|(a, b)| a * b).sum::<u64>() % 7;
                assert_eq!(s, 0);
            }
        }
    }
}
