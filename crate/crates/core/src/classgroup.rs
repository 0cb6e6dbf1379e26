//! Principality testing by short-vector enumeration on the trace form, and ideal class
//! groups from the ideals below the Minkowski bound.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{primes_up_to, sqrt_upper};
use crate::error::{Error, Result};
use crate::ideal::{prime_split, FracIdeal};
use crate::lattice::{budget, short_vectors};
use crate::nf::{complex_conjugation, NfElem};
use crate::order::Order;
use crate::units::{trace_gram, unit_group};
use crate::Rational;

fn rat_from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite bound")
}

/// Bound B such that, if the ideal (of norm N) is principal, some generator x has
/// Tr(x conj x) <= B.
fn generator_bound(order: &Order, norm: &Rational) -> Result<Rational> {
    let k = order.field();
    let n = k.degree();
    let units = unit_group(k)?;
    let real = k.is_totally_real();
    match (n, units.rank()) {
        // imaginary quadratic: every generator has |x|^2 = N
        (2, 0) => Ok(norm * Rational::from_integer(BigInt::from(2))),
        (_, 1) => {
            let eta = &units.fundamental[0];
            let m = (0..n).map(|j| eta.embed_f64(j).norm()).fold(1.0f64, f64::max);
            let spread = (m + 1.0 / m) * 1.001 + 1e-9;
            if real {
                // x1^2 x2^2 = N^2, T2 <= N (M + 1/M)
                Ok(norm * rat_from_f64(spread))
            } else {
                // |x1|^2 |x2|^2 = N, T2 <= 2 sqrt(N) (M + 1/M)
                Ok(sqrt_upper(norm) * rat_from_f64(2.0 * spread))
            }
        }
        _ => Err(Error::UnitsUnavailable),
    }
}

/// A generator of the ideal, or `None` if it is not principal.
pub fn is_principal(ideal: &FracIdeal) -> Result<Option<NfElem>> {
    let order = ideal.order();
    let k = order.field();
    if k.degree() == 1 {
        return Ok(Some(ideal.basis()[0].clone()));
    }
    let conj = complex_conjugation(k).ok_or(Error::UnitsUnavailable)?;
    let num = ideal.numerator();
    let nn = num.norm();
    let bound = generator_bound(order, &nn)?;
    let basis = num.basis();
    let gram = trace_gram(&basis, &conj);
    let target = nn.to_integer();
    for (_, c) in short_vectors(&gram, &bound, budget())? {
        let x = c
            .iter()
            .zip(&basis)
            .filter(|(a, _)| !a.is_zero())
            .fold(k.zero(), |acc, (a, b)| acc + b * &k.from_rational(Rational::from_integer(a.clone())));
        if x.norm().abs().to_integer() == target {
            let d = Rational::new(BigInt::one(), ideal.den().clone());
            return Ok(Some(x.scale(&d)));
        }
    }
    Ok(None)
}

/// Minkowski bound (4/pi)^r2 n!/n^n sqrt|disc|, rounded up.
pub fn minkowski_bound(order: &Order) -> u64 {
    let k = order.field();
    let n = k.degree();
    let r2 = (n - k.min_poly().count_real_roots()) / 2;
    let mut b = (4.0 / std::f64::consts::PI).powi(r2 as i32);
    for i in 1..=n {
        b *= i as f64 / n as f64;
    }
    b *= order.disc().abs().to_f64().expect("finite").sqrt();
    (b * 1.000001).floor() as u64
}

/// All integral ideals of norm at most `bound`, sorted by norm and then by Hermite basis.
pub fn ideals_up_to(order: &Order, bound: u64) -> Result<Vec<FracIdeal>> {
    let mut primes = vec![];
    for p in primes_up_to(bound) {
        for q in prime_split(order, &BigInt::from(p))? {
            if q.norm() <= BigInt::from(bound) {
                primes.push(q);
            }
        }
    }
    let mut out = vec![(BigInt::one(), FracIdeal::unit(order))];
    let bb = BigInt::from(bound);
    for q in &primes {
        let mut next = vec![];
        for (nm, id) in &out {
            let mut nm = nm * q.norm();
            let mut cur = id.clone();
            while nm <= bb {
                cur = cur.mul(&q.ideal)?;
                next.push((nm.clone(), cur.clone()));
                nm *= q.norm();
            }
        }
        out.extend(next);
    }
    out.sort_by(|a, b| (&a.0, a.1.hnf()).cmp(&(&b.0, b.1.hnf())));
    Ok(out.into_iter().map(|(_, i)| i).collect())
}

/// The ideal class group: one integral representative per class (the unit ideal first) and
/// the multiplication table of the classes.
#[derive(Debug)]
pub struct ClassGroup {
    pub order: Order,
    pub reps: Vec<FracIdeal>,
    pub table: Vec<Vec<usize>>,
    rep_inv: Vec<FracIdeal>,
}

impl ClassGroup {
    pub fn class_number(&self) -> usize {
        self.reps.len()
    }

    /// Index of the class containing `a`.
    pub fn class_of(&self, a: &FracIdeal) -> Result<usize> {
        for (j, inv) in self.rep_inv.iter().enumerate() {
            if is_principal(&a.mul(inv)?)?.is_some() {
                return Ok(j);
            }
        }
        unreachable!("class representatives cover the class group")
    }

    /// A generator of a * reps[class]^{-1}.
    pub fn reduce(&self, a: &FracIdeal) -> Result<(usize, NfElem)> {
        for (j, inv) in self.rep_inv.iter().enumerate() {
            if let Some(g) = is_principal(&a.mul(inv)?)? {
                return Ok((j, g));
            }
        }
        unreachable!("class representatives cover the class group")
    }
}

fn cache() -> &'static Mutex<HashMap<Vec<Rational>, Arc<ClassGroup>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<Rational>, Arc<ClassGroup>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn class_group(order: &Order) -> Result<Arc<ClassGroup>> {
    let key = order.field().min_poly().coeffs().to_vec();
    if let Some(c) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(c.clone());
    }
    let bound = minkowski_bound(order);
    let mut reps: Vec<FracIdeal> = vec![];
    let mut rep_inv: Vec<FracIdeal> = vec![];
    for id in ideals_up_to(order, bound)? {
        let mut known = false;
        for inv in &rep_inv {
            if is_principal(&id.mul(inv)?)?.is_some() {
                known = true;
                break;
            }
        }
        if !known {
            rep_inv.push(id.inverse()?);
            reps.push(id);
        }
    }
    let h = reps.len();
    let mut cg = ClassGroup { order: order.clone(), reps, table: vec![], rep_inv };
    let mut table = vec![vec![0; h]; h];
    for i in 0..h {
        for j in i..h {
            let c = cg.class_of(&cg.reps[i].mul(&cg.reps[j])?)?;
            table[i][j] = c;
            table[j][i] = c;
        }
    }
    cg.table = table;
    let cg = Arc::new(cg);
    cache().lock().unwrap_or_else(|e| e.into_inner()).insert(key, cg.clone());
    Ok(cg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nf::NumberField;

    fn order(c: &[i64]) -> Order {
        Order::maximal(&NumberField::from_ints(c).unwrap())
    }

    #[test]
    fn principal_examples() {
        let o = order(&[5, 0, 1]);
        let k = o.field().clone();
        let p2 = FracIdeal::from_gens(&o, &[k.from_int(2), k.elem_ints(&[1, 1])]).unwrap();
        assert!(is_principal(&p2).unwrap().is_none());
        let p3 = FracIdeal::from_gens(&o, &[k.from_int(3), k.elem_ints(&[1, 1])]).unwrap();
        let p3b = FracIdeal::from_gens(&o, &[k.from_int(3), k.elem_ints(&[1, -1])]).unwrap();
        let g = is_principal(&p3.mul(&p3b).unwrap()).unwrap().unwrap();
        assert_eq!(g.norm().abs(), Rational::from_integer(9.into()));
        let gi = order(&[1, 0, 1]);
        let two = FracIdeal::from_int(&gi, &BigInt::from(2)).unwrap();
        let g = is_principal(&two).unwrap().unwrap();
        assert_eq!(FracIdeal::principal(&gi, &g).unwrap(), two);
    }

    #[test]
    fn small_class_numbers() {
        for (c, h) in [(&[1i64, 0, 1][..], 1), (&[5, 0, 1], 2), (&[6, -1, 1], 3), (&[1, 1, 1, 1, 1], 1), (&[3, 0, 6, 0, 1], 2)] {
            let o = order(c);
            assert_eq!(class_group(&o).unwrap().class_number(), h, "{c:?}");
        }
    }

    #[test]
    fn quartic_principal_with_units() {
        let o = order(&[3, 0, 6, 0, 1]);
        let k = o.field().clone();
        // a large principal ideal is recognised despite the unit ambiguity
        let u = &unit_group(&k).unwrap().fundamental[0];
        let a = &k.elem_ints(&[3, 1, 1, 0]) * &u.pow(7).unwrap();
        let id = FracIdeal::principal(&o, &a).unwrap();
        let g = is_principal(&id).unwrap().unwrap();
        assert_eq!(FracIdeal::principal(&o, &g).unwrap(), id);
    }
}
