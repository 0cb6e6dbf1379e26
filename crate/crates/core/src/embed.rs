//! Certified isolation of the complex roots of a squarefree rational polynomial.
//!
//! Roots are approximated in double precision (Aberth iteration), polished by Newton steps
//! in exact dyadic arithmetic, and certified with the inclusion radius `n |p(z)| / |p'(z)|`:
//! when the `n` discs are pairwise disjoint each one holds exactly one root.  Real roots get
//! real centres and non-real roots come in exactly conjugate pairs, so reality and pairing
//! are certified by symmetry.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{abs_rat, sqrt_upper};
use crate::{QPoly, Rational};

/// A closed complex disc with rational centre and rational radius.
#[derive(Clone, Debug, PartialEq)]
pub struct CDisc {
    pub re: Rational,
    pub im: Rational,
    pub rad: Rational,
}

impl CDisc {
    pub fn point(re: Rational, im: Rational) -> Self {
        CDisc { re, im, rad: Rational::zero() }
    }

    pub fn approx(&self) -> Complex<f64> {
        Complex::new(to_f64(&self.re), to_f64(&self.im))
    }

    pub fn conj(&self) -> Self {
        CDisc { re: self.re.clone(), im: -self.im.clone(), rad: self.rad.clone() }
    }

    pub fn disjoint(&self, o: &CDisc) -> bool {
        let dr = &self.re - &o.re;
        let di = &self.im - &o.im;
        let s = &self.rad + &o.rad;
        &dr * &dr + &di * &di > &s * &s
    }

    /// `Some(sign)` of the imaginary part when the disc certifies it.
    pub fn im_sign(&self) -> Option<i32> {
        if self.im > self.rad {
            Some(1)
        } else if -self.im.clone() > self.rad {
            Some(-1)
        } else {
            None
        }
    }

    pub fn re_sign(&self) -> Option<i32> {
        if self.re > self.rad {
            Some(1)
        } else if -self.re.clone() > self.rad {
            Some(-1)
        } else {
            None
        }
    }

    fn re_overlaps(&self, o: &CDisc) -> bool {
        abs_rat(&(&self.re - &o.re)) <= &self.rad + &o.rad
    }
}

/// One complex root of a defining polynomial, in canonical position `index`.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub index: usize,
    pub disc: CDisc,
    /// Index of the complex-conjugate root (itself for real roots).
    pub conj: usize,
    pub real: bool,
}

pub fn to_f64(q: &Rational) -> f64 {
    let (n, d) = (q.numer(), q.denom());
    let shift = (n.bits() as i64 - 60).max(0).max(d.bits() as i64 - 60);
    let nn = (n >> shift as usize).to_f64().unwrap_or(f64::NAN);
    let dd = (d >> shift as usize).to_f64().unwrap_or(f64::NAN);
    if dd == 0.0 {
        // denominator far larger than numerator
        return q.numer().to_f64().unwrap_or(0.0) / q.denom().to_f64().unwrap_or(f64::INFINITY);
    }
    nn / dd
}

fn dyadic(x: f64, bits: u32) -> Rational {
    let scaled = x * 2f64.powi(bits.min(1000) as i32);
    let n = BigInt::from(scaled.round() as i128);
    Rational::new(n, BigInt::one() << bits)
}

fn round_to(q: &Rational, bits: u32) -> Rational {
    let scaled = q * Rational::from_integer(BigInt::one() << bits);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    Rational::new((scaled + half).floor().to_integer(), BigInt::one() << bits)
}

type GQ = (Rational, Rational);

fn g_mul(a: &GQ, b: &GQ) -> GQ {
    (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
}

fn g_abs2(a: &GQ) -> Rational {
    &a.0 * &a.0 + &a.1 * &a.1
}

fn g_div(a: &GQ, b: &GQ) -> GQ {
    let d = g_abs2(b);
    let num = g_mul(a, &(b.0.clone(), -b.1.clone()));
    (num.0 / &d, num.1 / d)
}

/// p(z) and p'(z) by Horner.
fn eval_pair(f: &QPoly, z: &GQ) -> (GQ, GQ) {
    let mut p: GQ = (Rational::zero(), Rational::zero());
    let mut dp: GQ = (Rational::zero(), Rational::zero());
    for c in f.coeffs().iter().rev() {
        dp = g_mul(&dp, z);
        dp.0 += &p.0;
        dp.1 += &p.1;
        p = g_mul(&p, z);
        p.0 += c;
    }
    (p, dp)
}

pub fn eval_exact(f: &QPoly, z: &GQ) -> GQ {
    let mut p: GQ = (Rational::zero(), Rational::zero());
    for c in f.coeffs().iter().rev() {
        p = g_mul(&p, z);
        p.0 += c;
    }
    p
}

fn aberth_f64(f: &QPoly) -> Vec<Complex<f64>> {
    let n = f.deg();
    let c: Vec<f64> = f.coeffs().iter().map(to_f64).collect();
    let lead = c[n];
    let bound = 1.0 + c[..n].iter().map(|a| (a / lead).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex<f64>> = (0..n)
        .map(|k| Complex::from_polar(bound, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    let eval = |x: Complex<f64>| {
        let mut p = Complex::new(0.0, 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for a in c.iter().rev() {
            dp = dp * x + p;
            p = p * x + a;
        }
        (p, dp)
    };
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let w = p / dp;
            let s: Complex<f64> = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = w / (Complex::new(1.0, 0.0) - w * s);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Inclusion radius `n |p(z)| / |p'(z)|`, or `None` when p'(z) = 0.
fn inclusion_radius(f: &QPoly, z: &GQ) -> Option<Rational> {
    let (p, dp) = eval_pair(f, z);
    let d2 = g_abs2(&dp);
    if d2.is_zero() {
        return None;
    }
    let n = Rational::from_integer(BigInt::from(f.deg()));
    Some(sqrt_upper(&(&n * &n * g_abs2(&p) / d2)))
}

fn newton(f: &QPoly, z: &GQ, real: bool, bits: u32) -> GQ {
    let (p, dp) = eval_pair(f, z);
    if g_abs2(&dp).is_zero() || (p.0.is_zero() && p.1.is_zero()) {
        return z.clone();
    }
    let w = g_div(&p, &dp);
    let re = round_to(&(&z.0 - &w.0), bits);
    let im = if real { Rational::zero() } else { round_to(&(&z.1 - &w.1), bits) };
    (re, im)
}

/// Certified discs around all roots of `f` (squarefree, degree >= 1), in canonical order:
/// sorted by real part, roots whose real parts cannot be separated grouped together and
/// ordered by imaginary part.
pub fn isolate_roots(f: &QPoly, bits: u32) -> Vec<Embedding> {
    let n = f.deg();
    assert!(n >= 1, "constant polynomial has no roots");
    let bits = bits.max(64);
    let nreal = f.count_real_roots();
    let mut approx = aberth_f64(f);
    approx.sort_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).unwrap_or(Ordering::Equal));
    let reals: Vec<f64> = approx[..nreal].iter().map(|z| z.re).collect();
    let mut uppers: Vec<Complex<f64>> = approx[nreal..].to_vec();
    uppers.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal));
    uppers.truncate((n - nreal) / 2);

    let mut prec = bits + 16;
    let mut reals_q: Vec<GQ> = reals.iter().map(|&x| (dyadic(x, 52), Rational::zero())).collect();
    let mut uppers_q: Vec<GQ> = uppers.iter().map(|z| (dyadic(z.re, 52), dyadic(z.im.abs(), 52))).collect();
    loop {
        let iters = 4 + (prec as f64 / 40.0).log2().ceil().max(0.0) as usize;
        for _ in 0..iters {
            reals_q = reals_q.iter().map(|z| newton(f, z, true, prec)).collect();
            uppers_q = uppers_q.iter().map(|z| newton(f, z, false, prec)).collect();
        }
        if let Some(discs) = certify(f, &reals_q, &uppers_q) {
            return canonical(discs);
        }
        assert!(prec < 1 << 14, "root isolation failed to certify");
        prec *= 2;
    }
}

fn certify(f: &QPoly, reals: &[GQ], uppers: &[GQ]) -> Option<Vec<(CDisc, bool)>> {
    let mut discs: Vec<(CDisc, bool)> = Vec::new();
    for z in reals {
        let rad = inclusion_radius(f, z)?;
        discs.push((CDisc { re: z.0.clone(), im: Rational::zero(), rad }, true));
    }
    for z in uppers {
        if !z.1.is_positive() {
            return None;
        }
        let rad = inclusion_radius(f, z)?;
        let d = CDisc { re: z.0.clone(), im: z.1.clone(), rad };
        if d.im <= d.rad {
            return None;
        }
        discs.push((d.conj(), false));
        discs.push((d, false));
    }
    if discs.len() != f.deg() {
        return None;
    }
    for i in 0..discs.len() {
        for j in 0..i {
            if !discs[i].0.disjoint(&discs[j].0) {
                return None;
            }
        }
    }
    Some(discs)
}

fn canonical(mut discs: Vec<(CDisc, bool)>) -> Vec<Embedding> {
    discs.sort_by(|a, b| a.0.re.cmp(&b.0.re));
    let mut ordered: Vec<(CDisc, bool)> = Vec::with_capacity(discs.len());
    let mut cluster: Vec<(CDisc, bool)> = Vec::new();
    for d in discs {
        if let Some(last) = cluster.last() {
            if !last.0.re_overlaps(&d.0) {
                cluster.sort_by(|a, b| a.0.im.cmp(&b.0.im));
                ordered.append(&mut cluster);
            }
        }
        cluster.push(d);
    }
    cluster.sort_by(|a, b| a.0.im.cmp(&b.0.im));
    ordered.append(&mut cluster);
    let mut out: Vec<Embedding> = ordered
        .into_iter()
        .enumerate()
        .map(|(i, (disc, real))| Embedding { index: i, disc, conj: i, real })
        .collect();
    for i in 0..out.len() {
        if out[i].real {
            continue;
        }
        let c = out[i].disc.conj();
        let j = out.iter().position(|e| e.disc == c).expect("conjugate disc present");
        out[i].conj = j;
    }
    out
}

/// Disc containing `a(z)` for every `z` in `d`.
pub fn eval_disc(a: &QPoly, d: &CDisc, bits: u32) -> CDisc {
    let z: GQ = (d.re.clone(), d.im.clone());
    let c = eval_exact(a, &z);
    let m = abs_rat(&d.re) + abs_rat(&d.im);
    let mr = &m + &d.rad;
    let mut bound = Rational::zero();
    if !d.rad.is_zero() {
        let mut pm = Rational::one();
        let mut pmr = Rational::one();
        for coef in a.coeffs().iter().skip(1) {
            pm *= &m;
            pmr *= &mr;
            if !coef.is_zero() {
                bound += abs_rat(coef) * (&pmr - &pm);
            }
        }
    }
    let re = round_to(&c.0, bits);
    let im = round_to(&c.1, bits);
    let slack = if re == c.0 && im == c.1 {
        Rational::zero()
    } else {
        Rational::new(BigInt::from(2), BigInt::one() << bits)
    };
    CDisc { re, im, rad: bound + slack }
}

/// The unique root disc meeting `d`, if exactly one does.
pub fn locate(d: &CDisc, roots: &[Embedding]) -> Option<usize> {
    let hits: Vec<usize> = roots.iter().filter(|e| !e.disc.disjoint(d)).map(|e| e.index).collect();
    if hits.len() == 1 {
        Some(hits[0])
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn p(c: &[i64]) -> QPoly {
        QPoly::from_ints(c)
    }

    #[test]
    fn gaussian_roots_are_exact() {
        let e = isolate_roots(&p(&[1, 0, 1]), 64);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].disc.im, rat(-1, 1));
        assert_eq!(e[1].disc.im, rat(1, 1));
        assert!(e[0].disc.rad < Rational::new(BigInt::one(), BigInt::one() << 60));
        assert_eq!(e[0].conj, 1);
        assert!(!e[0].real);
    }

    #[test]
    fn real_quadratic() {
        let e = isolate_roots(&p(&[-2, 0, 1]), 64);
        assert!(e[0].real && e[1].real);
        assert!((to_f64(&e[1].disc.re) - 2f64.sqrt()).abs() < 1e-15);
        assert!(e[0].disc.re.is_negative());
    }

    #[test]
    fn quartic_cm_roots_are_imaginary_pairs() {
        let e = isolate_roots(&p(&[3, 0, 6, 0, 1]), 64);
        assert_eq!(e.len(), 4);
        for r in &e {
            assert!(r.disc.re.is_zero());
            assert_ne!(r.conj, r.index);
            assert_eq!(e[r.conj].conj, r.index);
        }
        let ims: Vec<f64> = e.iter().map(|r| to_f64(&r.disc.im)).collect();
        assert!(ims.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cyclotomic_and_refinement() {
        let f = p(&[1, 1, 1, 1, 1]);
        let lo = isolate_roots(&f, 64);
        let hi = isolate_roots(&f, 256);
        for (a, b) in lo.iter().zip(&hi) {
            assert!(!a.disc.disjoint(&b.disc));
            assert!(b.disc.rad < Rational::new(BigInt::one(), BigInt::one() << 250));
        }
    }

    #[test]
    fn evaluation_lands_in_root() {
        // x -> x^2 maps roots of x^4+x^3+x^2+x+1 to roots
        let f = p(&[1, 1, 1, 1, 1]);
        let e = isolate_roots(&f, 128);
        let sq = p(&[0, 0, 1]);
        let images: Vec<usize> = e
            .iter()
            .map(|r| locate(&eval_disc(&sq, &r.disc, 128), &e).unwrap())
            .collect();
        let mut sorted = images.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }
}
