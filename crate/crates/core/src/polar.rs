//! Riemann form elements and type quadruples (E, Phi; a, t) of polarized CM abelian
//! varieties, with validity and equivalence testing.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::classgroup::is_principal;
use crate::cm::CMType;
use crate::error::{Error, Result};
use crate::ideal::FracIdeal;
use crate::nf::{im_sign, real_sign, NfElem};
use crate::order::Order;
use crate::units::unit_group;

/// Largest coordinate box searched for the sign correction.
pub const SIGN_SEARCH_CAP: u64 = 40;

/// An element alpha of E with iota(alpha) = -alpha and Im phi(alpha) > 0 on Phi.
#[derive(Clone, Debug)]
pub struct RiemannElement {
    pub cm_type: CMType,
    pub alpha: NfElem,
}

/// Sign of Im phi_j(a) for a purely imaginary element.
fn im_signs(t: &CMType, a: &NfElem) -> Vec<i32> {
    t.phi.iter().map(|&j| im_sign(a, j)).collect()
}

fn is_imaginary(t: &CMType, a: &NfElem) -> bool {
    t.cm.conj.apply(a) == -a.clone()
}

/// All integer vectors with max norm exactly r.
fn box_shell(n: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![];
    let mut v = vec![-r; n];
    loop {
        if v.iter().any(|x| x.abs() == r) {
            out.push(v.clone());
        }
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            if v[i] < r {
                v[i] += 1;
                break;
            }
            v[i] = -r;
            i += 1;
        }
    }
}

pub fn find_riemann_element(t: &CMType) -> Result<RiemannElement> {
    let cm = &t.cm;
    let e = &cm.field;
    let x = e.gen();
    let cx = cm.conj.apply(&x);
    let alpha0 = if cx == -x.clone() { x } else { &x - &cx };
    let target = im_signs(t, &alpha0);
    if target.iter().all(|&s| s > 0) {
        return Ok(RiemannElement { cm_type: t.clone(), alpha: alpha0 });
    }
    let of = Order::maximal(&cm.real_subfield);
    let nf = of.degree();
    for r in 1..=SIGN_SEARCH_CAP as i64 {
        for c in box_shell(nf, r) {
            let coords: Vec<BigInt> = c.iter().map(|&v| BigInt::from(v)).collect();
            let a = cm.real_embed.apply(&of.elem_from_coords(&coords));
            if t.phi.iter().zip(&target).all(|(&j, &s)| real_sign(&a, j) == s) {
                return Ok(RiemannElement { cm_type: t.clone(), alpha: &a * &alpha0 });
            }
        }
    }
    Err(Error::SearchExhausted(SIGN_SEARCH_CAP))
}

/// (E, Phi; a, t): a fractional ideal and an element t with iota(t) = -t and
/// Im phi(t) > 0 on Phi.
#[derive(Clone, Debug)]
pub struct TypeQuadruple {
    pub cm_type: CMType,
    pub ideal: FracIdeal,
    pub t: NfElem,
}

/// Validity with the list of violated conditions.
pub fn validate_quadruple(q: &TypeQuadruple) -> (bool, Vec<String>) {
    let mut problems = vec![];
    if q.ideal.field() != q.cm_type.field() || q.t.field() != q.cm_type.field() {
        problems.push("ideal or t lies in a different field".to_string());
        return (false, problems);
    }
    if q.t.is_zero() {
        problems.push("t is zero".to_string());
        return (false, problems);
    }
    if !is_imaginary(&q.cm_type, &q.t) {
        problems.push("iota(t) != -t".to_string());
    } else {
        for (&j, s) in q.cm_type.phi.iter().zip(im_signs(&q.cm_type, &q.t)) {
            if s <= 0 {
                problems.push(format!("Im phi_{j}(t) < 0"));
            }
        }
    }
    (problems.is_empty(), problems)
}

/// A witness a with a2 = a a1 and t2 = t1 / (a iota(a)), or `None` when the quadruples are
/// inequivalent.  Decided exactly whenever the unit group is known.
pub fn quadruples_equivalent(q1: &TypeQuadruple, q2: &TypeQuadruple) -> Result<Option<NfElem>> {
    if q1.cm_type != q2.cm_type {
        return Err(Error::PairMismatch);
    }
    let conj = &q1.cm_type.cm.conj;
    let c = q2.ideal.mul(&q1.ideal.inverse()?)?;
    let g = if c.is_one() {
        c.field().one()
    } else {
        match is_principal(&c)? {
            Some(g) => g,
            None => return Ok(None),
        }
    };
    // need a unit u with u iota(u) = r
    let r = &(&q1.t * &(&q2.t * &(&g * &conj.apply(&g))).inv()?);
    let witness = |u: &NfElem| -> NfElem { &g * u };
    let e = q1.cm_type.field();
    if r.is_one() {
        return Ok(Some(witness(&e.one())));
    }
    let units = match unit_group(e) {
        Ok(u) => u,
        Err(Error::UnitsUnavailable) => return Err(Error::UnitSearchInconclusive),
        Err(err) => return Err(err),
    };
    if units.rank() == 0 {
        return Ok(None);
    }
    if units.rank() > 1 {
        return Err(Error::UnitSearchInconclusive);
    }
    // u = zeta eta^k and u iota(u) = nu^k with nu = eta iota(eta) totally positive
    let eta = &units.fundamental[0];
    let nu = eta * &conj.apply(eta);
    if nu.is_one() {
        return Ok(None);
    }
    if !r.norm().abs().is_one() || !crate::units::is_unit(r) {
        return Ok(None);
    }
    let lr = r.embed_f64(0).norm().ln();
    let ln = nu.embed_f64(0).norm().ln();
    let k = (lr / ln).round().to_i64().unwrap_or(0);
    let u = eta.pow(k)?;
    if (&u * &conj.apply(&u)) == *r {
        Ok(Some(witness(&u)))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{cm_check, enumerate_cm_types};
    use crate::nf::NumberField;
    use std::sync::Arc;

    fn types(c: &[i64]) -> Vec<CMType> {
        enumerate_cm_types(&Arc::new(cm_check(&NumberField::from_ints(c).unwrap()).unwrap()))
    }

    #[test]
    fn riemann_elements_exist() {
        for c in [&[1i64, 0, 1][..], &[5, 0, 1], &[1, 1, 1], &[1, 1, 1, 1, 1], &[3, 0, 6, 0, 1]] {
            for t in types(c) {
                let r = find_riemann_element(&t).unwrap();
                let o = Order::maximal(t.field());
                let q = TypeQuadruple { cm_type: t.clone(), ideal: FracIdeal::unit(&o), t: r.alpha };
                assert!(validate_quadruple(&q).0, "{c:?} {:?}", t.phi);
            }
        }
    }

    #[test]
    fn gaussian_quadruples() {
        let ts = types(&[1, 0, 1]);
        let k = ts[0].field().clone();
        let o = Order::maximal(&k);
        let one = FracIdeal::unit(&o);
        // type 0 contains embedding 0, i -> -i, so -i is the positive choice there
        let t0 = ts.iter().find(|t| t.phi == vec![1]).unwrap().clone();
        let i = k.gen();
        let q = |t: NfElem| TypeQuadruple { cm_type: t0.clone(), ideal: one.clone(), t };
        assert!(validate_quadruple(&q(i.clone())).0);
        assert!(!validate_quadruple(&q(-i.clone())).0);
        assert!(!validate_quadruple(&q(k.one())).0);
        let q1 = q(i.clone());
        assert_eq!(quadruples_equivalent(&q1, &q1).unwrap(), Some(k.one()));
        let q2 = q(&i * &k.from_int(2));
        assert_eq!(quadruples_equivalent(&q1, &q2).unwrap(), None);
        let a = k.elem_ints(&[1, 1]);
        let q3 = TypeQuadruple {
            cm_type: t0.clone(),
            ideal: one.scale(&a).unwrap(),
            t: &i * &(&a * &t0.cm.conj.apply(&a)).inv().unwrap(),
        };
        let w = quadruples_equivalent(&q1, &q3).unwrap().unwrap();
        assert_eq!(one.scale(&w).unwrap(), q3.ideal);
    }

    #[test]
    fn quartic_unit_twist() {
        let t = types(&[3, 0, 6, 0, 1]).remove(0);
        let k = t.field().clone();
        let o = Order::maximal(&k);
        let alpha = find_riemann_element(&t).unwrap().alpha;
        let q1 = TypeQuadruple { cm_type: t.clone(), ideal: FracIdeal::unit(&o), t: alpha.clone() };
        let eta = unit_group(&k).unwrap().fundamental[0].clone();
        let a = &eta.pow(3).unwrap() * &k.elem_ints(&[1, 1, 0, 0]);
        let t2 = &alpha * &(&a * &t.cm.conj.apply(&a)).inv().unwrap();
        let q2 = TypeQuadruple { cm_type: t.clone(), ideal: FracIdeal::unit(&o).scale(&a).unwrap(), t: t2.clone() };
        let w = quadruples_equivalent(&q1, &q2).unwrap().unwrap();
        assert_eq!(FracIdeal::unit(&o).scale(&w).unwrap(), q2.ideal);
        assert_eq!(&alpha * &(&w * &t.cm.conj.apply(&w)).inv().unwrap(), t2);
    }
}
