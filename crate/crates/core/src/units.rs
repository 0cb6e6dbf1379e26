//! Unit groups of fields of unit rank at most one that carry a complex conjugation
//! automorphism: imaginary quadratic, real quadratic and quartic CM fields.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::squarefree_part;
use crate::error::{Error, Result};
use crate::lattice::{budget, short_vectors};
use crate::linalg::QMat;
use crate::nf::{complex_conjugation, FieldMorphism, NfElem, NumberField};
use crate::order::Order;
use crate::Rational;

#[derive(Clone, Debug)]
pub struct UnitGroup {
    pub field: NumberField,
    /// Generator of the roots of unity and its order.
    pub torsion: NfElem,
    pub torsion_order: usize,
    /// Fundamental units (empty for rank 0).
    pub fundamental: Vec<NfElem>,
}

impl UnitGroup {
    pub fn rank(&self) -> usize {
        self.fundamental.len()
    }

    /// All roots of unity, as powers of the torsion generator.
    pub fn roots_of_unity(&self) -> Vec<NfElem> {
        let mut out = vec![self.field.one()];
        for _ in 1..self.torsion_order {
            let next = out.last().unwrap() * &self.torsion;
            out.push(next);
        }
        out
    }
}

/// Gram matrix of x -> Tr(x * conj(x)) on the given Z-basis.
pub fn trace_gram(basis: &[NfElem], conj: &FieldMorphism) -> QMat {
    let cb: Vec<NfElem> = basis.iter().map(|b| conj.apply(b)).collect();
    let n = basis.len();
    let mut g = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let t = (&basis[i] * &cb[j]).trace();
            g[i][j] = t.clone();
            g[j][i] = t;
        }
    }
    g
}

pub fn t2(a: &NfElem, conj: &FieldMorphism) -> Rational {
    (a * &conj.apply(a)).trace()
}

fn cache() -> &'static Mutex<HashMap<Vec<Rational>, Arc<UnitGroup>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<Rational>, Arc<UnitGroup>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The unit group, when the field has a complex conjugation automorphism and unit rank <= 1.
pub fn unit_group(k: &NumberField) -> Result<Arc<UnitGroup>> {
    let key = k.min_poly().coeffs().to_vec();
    if let Some(u) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(u.clone());
    }
    let u = Arc::new(compute(k)?);
    cache().lock().unwrap_or_else(|e| e.into_inner()).insert(key, u.clone());
    Ok(u)
}

fn element_order(x: &NfElem, max: usize) -> Option<usize> {
    let mut p = x.clone();
    for k in 1..=max {
        if p.is_one() {
            return Some(k);
        }
        p = &p * x;
    }
    None
}

fn compute(k: &NumberField) -> Result<UnitGroup> {
    let n = k.degree();
    if n == 1 {
        return Ok(UnitGroup { field: k.clone(), torsion: k.from_int(-1), torsion_order: 2, fundamental: vec![] });
    }
    let conj = complex_conjugation(k).ok_or(Error::UnitsUnavailable)?;
    let real = k.is_totally_real();
    let rank = if real { n - 1 } else { n / 2 - 1 };
    if rank > 1 {
        return Err(Error::UnitsUnavailable);
    }
    let o = Order::maximal(k);
    let basis: Vec<NfElem> = (0..n).map(|j| o.basis_elem(j)).collect();
    let gram = trace_gram(&basis, &conj);
    let nq = Rational::from_integer(BigInt::from(n));
    // integral x with Tr(x conj x) = n are exactly the roots of unity
    let mut roots: Vec<NfElem> = vec![];
    for (v, c) in short_vectors(&gram, &nq, budget())? {
        if v == nq {
            let x = o.elem_from_coords(&c);
            roots.push(x.clone());
            roots.push(-x);
        }
    }
    let w = roots.len();
    let torsion = roots
        .iter()
        .find(|x| element_order(x, w) == Some(w))
        .cloned()
        .expect("the roots of unity form a cyclic group");
    let mut fundamental = vec![];
    if rank == 1 {
        let eps = real_quadratic_unit_in(k, &conj)?;
        let eta = if n == 2 { eps } else { shortest_unit(&o, &gram, &conj, &eps)? };
        fundamental.push(eta);
    }
    Ok(UnitGroup { field: k.clone(), torsion, torsion_order: w, fundamental })
}

/// The unit of infinite order with the smallest trace form among units up to T2(eps).
/// Since every unit is a root of unity times a power of a fundamental unit and T2 grows with
/// the exponent, this is a fundamental unit.
fn shortest_unit(o: &Order, gram: &QMat, conj: &FieldMorphism, eps: &NfElem) -> Result<NfElem> {
    let n = Rational::from_integer(BigInt::from(o.degree()));
    let bound = t2(eps, conj);
    for (v, c) in short_vectors(gram, &bound, budget())? {
        if v == n {
            continue;
        }
        let x = o.elem_from_coords(&c);
        if x.norm().abs().is_one() {
            return Ok(x);
        }
    }
    unreachable!("eps itself is within the bound")
}

/// Fundamental unit of the real quadratic field inside k (k itself, or the fixed field of
/// complex conjugation in a quartic CM field).
fn real_quadratic_unit_in(k: &NumberField, conj: &FieldMorphism) -> Result<NfElem> {
    let n = k.degree();
    let mut beta = None;
    let mut x = k.gen();
    for _ in 0..n {
        let cand = if n == 2 { x.clone() } else { &x + &conj.apply(&x) };
        let mp = cand.min_poly();
        if mp.deg() == 2 {
            beta = Some((cand, mp));
            break;
        }
        x = &x * &k.gen();
    }
    let (beta, mp) = beta.ok_or(Error::UnitsUnavailable)?;
    // beta^2 + p beta + q = 0, (2 beta + p)^2 = p^2 - 4q
    let p = mp.coeff(1);
    let q = mp.coeff(0);
    let delta = &p * &p - Rational::from_integer(BigInt::from(4)) * &q;
    let dd = delta.numer() * delta.denom();
    let (d, s) = squarefree_part(&dd);
    // sqrt(d) = (2 beta + p) * den / s
    let root = (&beta * &k.from_int(2) + k.from_rational(p.clone()))
        .scale(&Rational::new(delta.denom().clone(), s.clone()));
    debug_assert_eq!(&root * &root, k.from_rational(Rational::from_integer(d.clone())));
    let (a, b, half) = fundamental_unit_real_quadratic(&d);
    let den = if half { 2 } else { 1 };
    let eps = (k.from_rational(Rational::from_integer(a)) + &root * &k.from_rational(Rational::from_integer(b)))
        .scale(&Rational::new(BigInt::one(), BigInt::from(den)));
    debug_assert!(eps.norm().abs().is_one());
    Ok(eps)
}

/// Fundamental unit (a + b sqrt(d)) / (2 if `half` else 1), a, b > 0, of the maximal order of
/// Q(sqrt(d)) for squarefree d > 1, from the period of the continued fraction of the ring
/// generator.
pub fn fundamental_unit_real_quadratic(d: &BigInt) -> (BigInt, BigInt, bool) {
    assert!(d > &BigInt::one());
    let one = BigInt::one();
    let four = BigInt::from(4);
    let disc = if d.mod_floor(&four) == one { d.clone() } else { d * &four };
    let b0 = if disc.is_odd() { one.clone() } else { BigInt::zero() };
    let sq = disc.sqrt();
    // alpha_k = (P + sqrt(disc)) / Q, starting from omega = (b0 + sqrt(disc)) / 2
    let (mut pk, mut qk) = (b0.clone(), BigInt::from(2));
    let (mut h1, mut h2) = (one.clone(), BigInt::zero());
    let (mut k1, mut k2) = (BigInt::zero(), one.clone());
    // x + y*omega with norm x^2 + b0 x y + y^2 (b0^2 - disc)/4
    let c = (&b0 * &b0 - &disc) / &four;
    let norm = |x: &BigInt, y: &BigInt| x * x + &b0 * x * y + y * y * &c;
    loop {
        let a = (&pk + &sq).div_floor(&qk);
        let h = &a * &h1 + &h2;
        let kk = &a * &k1 + &k2;
        h2 = std::mem::replace(&mut h1, h.clone());
        k2 = std::mem::replace(&mut k1, kk.clone());
        pk = &a * &qk - &pk;
        qk = (&disc - &pk * &pk) / &qk;
        // h - kk*omega is small; its norm is +-1 exactly at the end of the first period
        let y = -&kk;
        if norm(&h, &y).abs().is_one() {
            // h - kk*omega = (2h - kk*b0 - kk*sqrt(disc)) / 2
            let a2 = (&h * BigInt::from(2) - &kk * &b0).abs();
            return if disc == *d { (a2, kk, true) } else { (a2 / 2, kk, false) };
        }
    }
}

/// Is `a` a unit of the maximal order?
pub fn is_unit(a: &NfElem) -> bool {
    let o = Order::maximal(a.field());
    !a.is_zero() && o.contains(a) && a.norm().abs().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_quadratic_units() {
        let check = |d: i64, a: i64, b: i64, half: bool| {
            let (x, y, h) = fundamental_unit_real_quadratic(&BigInt::from(d));
            assert_eq!((x, y, h), (BigInt::from(a), BigInt::from(b), half), "d = {d}");
        };
        check(2, 1, 1, false);
        check(3, 2, 1, false);
        check(5, 1, 1, true);
        check(6, 5, 2, false);
        check(13, 3, 1, true);
        check(7, 8, 3, false);
        check(94, 2143295, 221064, false);
    }

    #[test]
    fn corpus_unit_groups() {
        let gi = unit_group(&NumberField::from_ints(&[1, 0, 1]).unwrap()).unwrap();
        assert_eq!((gi.torsion_order, gi.rank()), (4, 0));
        let g3 = unit_group(&NumberField::from_ints(&[1, 1, 1]).unwrap()).unwrap();
        assert_eq!((g3.torsion_order, g3.rank()), (6, 0));
        let z5 = unit_group(&NumberField::from_ints(&[1, 1, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!((z5.torsion_order, z5.rank()), (10, 1));
        assert!(is_unit(&z5.fundamental[0]));
        let q = unit_group(&NumberField::from_ints(&[3, 0, 6, 0, 1]).unwrap()).unwrap();
        assert_eq!((q.torsion_order, q.rank()), (2, 1));
        assert!(is_unit(&q.fundamental[0]));
        assert!(matches!(unit_group(&NumberField::from_ints(&[-2, 0, 0, 1]).unwrap()), Err(Error::UnitsUnavailable)));
    }
}
