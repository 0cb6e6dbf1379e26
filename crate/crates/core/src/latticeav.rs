//! Lattice models C^Phi / Phi(a) of CM abelian varieties and the calculus of
//! a-multiplications between them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::classgroup::{class_group, is_principal};
use crate::cm::CMType;
use crate::error::{Error, Result};
use crate::ideal::FracIdeal;
use crate::lattice::{budget, minimum};
use crate::linalg::{q_det, q_inverse, q_mul_vec, QMat};
use crate::nf::{complex_conjugation, NfElem};
use crate::order::Order;
use crate::units::trace_gram;
use crate::Rational;

/// A CM abelian variety C^Phi / Phi(lattice) with lattice a fractional ideal of O_E.
#[derive(Clone, Debug)]
pub struct LatticeAV {
    pub cm_type: CMType,
    pub lattice: FracIdeal,
}

impl PartialEq for LatticeAV {
    fn eq(&self, other: &Self) -> bool {
        self.cm_type == other.cm_type && self.lattice == other.lattice
    }
}

impl LatticeAV {
    pub fn new(cm_type: &CMType, lattice: FracIdeal) -> Result<LatticeAV> {
        if lattice.field() != cm_type.field() {
            return Err(Error::OrderMismatch);
        }
        Ok(LatticeAV { cm_type: cm_type.clone(), lattice })
    }

    pub fn dimension(&self) -> usize {
        self.cm_type.phi.len()
    }

    pub fn order(&self) -> &Order {
        self.lattice.order()
    }
}

/// The a-multiplication A -> A^a, the identity on E, with A^a = C^Phi / Phi(a^{-1} lattice).
#[derive(Clone, Debug)]
pub struct AMult {
    pub source: LatticeAV,
    pub target: LatticeAV,
    pub ideal: FracIdeal,
}

pub fn amul(a: &LatticeAV, ideal: &FracIdeal) -> Result<AMult> {
    if ideal.order() != a.order() {
        return Err(Error::OrderMismatch);
    }
    if !ideal.is_integral() {
        return Err(Error::NonIntegralIdeal);
    }
    let target = LatticeAV { cm_type: a.cm_type.clone(), lattice: ideal.inverse()?.mul(&a.lattice)? };
    Ok(AMult { source: a.clone(), target, ideal: ideal.clone() })
}

/// (outer : inner) for lattices inner inside outer.
pub fn lattice_index(outer: &FracIdeal, inner: &FracIdeal) -> Rational {
    inner.norm() / outer.norm()
}

/// deg = (O_E : a).
pub fn amul_degree(l: &AMult) -> BigInt {
    l.ideal.norm().to_integer()
}

/// Degree of the endomorphism "multiply by alpha", (O_E : alpha O_E) = |Nm(alpha)|.
pub fn elem_degree(a: &LatticeAV, alpha: &NfElem) -> Result<BigInt> {
    if alpha.is_zero() {
        return Err(Error::ZeroElement);
    }
    if !a.order().contains(alpha) {
        return Err(Error::InvalidInput("endomorphisms come from integral elements".into()));
    }
    Ok(alpha.norm().abs().to_integer())
}

/// mu after lambda.
pub fn compose(l: &AMult, mu: &AMult) -> Result<AMult> {
    if l.target != mu.source {
        return Err(Error::CompositionMismatch);
    }
    Ok(AMult { source: l.source.clone(), target: mu.target.clone(), ideal: mu.ideal.mul(&l.ideal)? })
}

/// {a in E : a lattice_A in lattice_B} = lattice_A^{-1} lattice_B; each nonzero a gives an
/// isogeny A -> B.
pub fn hom_ideal(a: &LatticeAV, b: &LatticeAV) -> Result<FracIdeal> {
    if a.cm_type != b.cm_type {
        return Err(Error::PairMismatch);
    }
    a.lattice.inverse()?.mul(&b.lattice)
}

/// Degree of "multiply by x": A -> B, (lattice_B : x lattice_A).
pub fn multiplier_degree(a: &LatticeAV, b: &LatticeAV, x: &NfElem) -> Result<BigInt> {
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    let img = a.lattice.scale(x)?;
    if !b.lattice.contains_ideal(&img) {
        return Err(Error::InvalidInput("multiplier does not map A into B".into()));
    }
    Ok(lattice_index(&b.lattice, &img).to_integer())
}

/// Smallest degree of an isogeny A -> B given by a multiplier, with that multiplier.  Exact
/// for imaginary quadratic fields, where the degree is proportional to the trace form.
pub fn min_isogeny(a: &LatticeAV, b: &LatticeAV) -> Result<(BigInt, NfElem)> {
    let k = a.cm_type.field();
    if k.degree() != 2 {
        return Err(Error::InvalidInput("minimal isogenies are computed for imaginary quadratic fields".into()));
    }
    let h = hom_ideal(a, b)?;
    let basis = h.basis();
    let conj = complex_conjugation(k).expect("CM field");
    let (_, c) = minimum(&trace_gram(&basis, &conj), budget())?;
    let x = c
        .iter()
        .zip(&basis)
        .fold(k.zero(), |s, (ci, bi)| s + bi * &k.from_rational(Rational::from_integer(ci.clone())));
    Ok((multiplier_degree(a, b, &x)?, x))
}

/// Does A ~ B?  Returns x with x lattice_A = lattice_B.
pub fn isomorphism(a: &LatticeAV, b: &LatticeAV) -> Result<Option<NfElem>> {
    is_principal(&hom_ideal(a, b)?)
}

/// lambda = lambda' factors through lambda (common source) iff a contains a'.
pub fn factor_through(l: &AMult, mu: &AMult) -> Result<bool> {
    if l.source != mu.source {
        return Err(Error::SourceMismatch);
    }
    Ok(l.ideal.contains_ideal(&mu.ideal))
}

/// One lattice model per ideal class; two models are isomorphic exactly when their lattices
/// lie in the same class.
pub fn isogeny_classes(t: &CMType) -> Result<Vec<LatticeAV>> {
    let o = Order::maximal(t.field());
    let cg = class_group(&o)?;
    Ok(cg.reps.iter().map(|r| LatticeAV { cm_type: t.clone(), lattice: r.clone() }).collect())
}

type ZMat = Vec<Vec<i64>>;

/// A_m = (1/m) lattice / lattice, in coordinates on the lattice basis, with the matrices of
/// multiplication by the integral basis of O_E.
#[derive(Clone, Debug)]
pub struct TorsionModule {
    pub av: LatticeAV,
    pub m: u64,
    /// action[k][r][c]: coefficient of basis r in omega_k * basis c.
    pub action: Vec<ZMat>,
    pub generator: Vec<i64>,
}

fn mat_vec(a: &ZMat, v: &[i64], m: i64) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum::<i64>().rem_euclid(m)).collect()
}

fn det_mod(a: &ZMat, m: i64) -> i64 {
    let q: QMat = a.iter().map(|r| r.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect()).collect();
    let d = q_det(&q);
    d.to_integer().mod_floor(&BigInt::from(m)).to_i64().expect("small")
}

/// Matrix of multiplication by x on the lattice basis: column c holds the coordinates of
/// x * basis[c].
fn action_matrix(l: &FracIdeal, x: &NfElem) -> ZMat {
    let basis = l.basis();
    let inv = q_inverse(&basis_matrix(&basis)).expect("basis");
    let n = basis.len();
    let cols: Vec<Vec<i64>> = basis
        .iter()
        .map(|b| q_mul_vec(&inv, (x * b).coords()).iter().map(|v| v.to_integer().to_i64().expect("small action")).collect())
        .collect();
    (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
}

fn basis_matrix(basis: &[NfElem]) -> QMat {
    let n = basis.len();
    (0..n).map(|r| (0..n).map(|c| basis[c].coords()[r].clone()).collect()).collect()
}

pub fn torsion(a: &LatticeAV, m: u64) -> Result<TorsionModule> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    let o = a.order();
    let n = o.degree();
    let action: Vec<ZMat> = (0..n).map(|k| action_matrix(&a.lattice, &o.basis_elem(k))).collect();
    let mi = m as i64;
    let generates = |v: &[i64]| {
        let cols: Vec<Vec<i64>> = action.iter().map(|ak| mat_vec(ak, v, mi)).collect();
        let mat: ZMat = (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect();
        m == 1 || det_mod(&mat, mi).gcd(&mi) == 1
    };
    let mut v = vec![0i64; n];
    v[0] = 1 % mi;
    let generator = if generates(&v) {
        v
    } else {
        let total = (m as u128).pow(n as u32);
        let mut found = None;
        for idx in 0..total {
            let mut x = idx;
            let cand: Vec<i64> = (0..n)
                .map(|_| {
                    let d = (x % m as u128) as i64;
                    x /= m as u128;
                    d
                })
                .collect();
            if generates(&cand) {
                found = Some(cand);
                break;
            }
        }
        found.expect("A_m is cyclic over O_E / m for a maximal order")
    };
    Ok(TorsionModule { av: a.clone(), m, action, generator })
}

impl TorsionModule {
    pub fn cardinality(&self) -> BigInt {
        BigInt::from(self.m).pow(self.action.len() as u32)
    }

    /// All elements, as coordinate vectors mod m.
    pub fn elements(&self) -> Vec<Vec<i64>> {
        let n = self.action.len();
        let m = self.m as i64;
        let mut out = vec![vec![0i64; n]];
        for i in 0..n {
            let mut next = vec![];
            for v in &out {
                for d in 0..m {
                    let mut w = v.clone();
                    w[i] = d;
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// The element x of E represented by coordinates v.
    pub fn to_element(&self, v: &[i64]) -> NfElem {
        let basis = self.av.lattice.basis();
        let k = self.av.cm_type.field();
        let s = Rational::new(BigInt::one(), BigInt::from(self.m));
        v.iter()
            .zip(&basis)
            .fold(k.zero(), |acc, (c, b)| acc + b.scale(&(s.clone() * Rational::from_integer(BigInt::from(*c)))))
    }

    /// Matrix mod m of multiplication by x in O_E.
    pub fn mult_by(&self, coords: &[i64]) -> ZMat {
        let n = self.action.len();
        let m = self.m as i64;
        (0..n)
            .map(|r| (0..n).map(|c| (0..n).map(|k| coords[k] * self.action[k][r][c]).sum::<i64>().rem_euclid(m)).collect())
            .collect()
    }

    /// Z/m-linear endomorphisms commuting with O_E (exhaustive, small m and degree only).
    pub fn commutant(&self) -> Vec<ZMat> {
        let n = self.action.len();
        let m = self.m as i64;
        let entries = n * n;
        let total = (m as u64).pow(entries as u32);
        let mut out = vec![];
        for idx in 0..total {
            let mut x = idx;
            let mat: ZMat = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let d = (x % m as u64) as i64;
                            x /= m as u64;
                            d
                        })
                        .collect()
                })
                .collect();
            let commutes = self.action.iter().all(|a| mat_mul(&mat, a, m) == mat_mul(a, &mat, m));
            if commutes {
                out.push(mat);
            }
        }
        out
    }

    /// Coordinates (on the basis of O_E, mod m) of an element acting by `mat`, if any.
    pub fn as_multiplication(&self, mat: &ZMat) -> Option<Vec<i64>> {
        // multiplication by x is determined by its value on the generator
        let n = self.action.len();
        let m = self.m as i64;
        let target = mat_vec(mat, &self.generator, m);
        let total = (m as u64).pow(n as u32);
        for idx in 0..total {
            let mut x = idx;
            let c: Vec<i64> = (0..n)
                .map(|_| {
                    let d = (x % m as u64) as i64;
                    x /= m as u64;
                    d
                })
                .collect();
            let mx = self.mult_by(&c);
            if mat_vec(&mx, &self.generator, m) == target && mx == reduce(mat, m) {
                return Some(c);
            }
        }
        None
    }
}

fn reduce(a: &ZMat, m: i64) -> ZMat {
    a.iter().map(|r| r.iter().map(|x| x.rem_euclid(m)).collect()).collect()
}

fn mat_mul(a: &ZMat, b: &ZMat, m: i64) -> ZMat {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum::<i64>().rem_euclid(m)).collect()).collect()
}

/// The map A_m -> (A^a)_m induced by an a-multiplication, as a matrix mod m between the
/// lattice bases.
pub fn induced_torsion_map(l: &AMult, m: u64) -> Result<ZMat> {
    let src = l.source.lattice.basis();
    let tgt = l.target.lattice.basis();
    let inv = q_inverse(&basis_matrix(&tgt)).expect("basis");
    let n = src.len();
    let cols: Vec<Vec<i64>> = src
        .iter()
        .map(|b| {
            q_mul_vec(&inv, b.coords())
                .iter()
                .map(|v| {
                    assert!(v.is_integer(), "source lattice lies in the target lattice");
                    v.to_integer().mod_floor(&BigInt::from(m)).to_i64().expect("small")
                })
                .collect()
        })
        .collect();
    Ok((0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect())
}

/// Is the induced map on m-torsion a bijection?  Checked on every element.
pub fn induced_map_is_bijective(l: &AMult, m: u64) -> Result<bool> {
    let t = torsion(&l.source, m)?;
    let map = induced_torsion_map(l, m)?;
    let mut images: Vec<Vec<i64>> = t.elements().iter().map(|v| mat_vec(&map, v, m as i64)).collect();
    images.sort();
    images.dedup();
    Ok(images.len() as u128 == (m as u128).pow(map.len() as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{cm_check, enumerate_cm_types};
    use crate::nf::NumberField;
    use std::sync::Arc;

    fn av(c: &[i64]) -> LatticeAV {
        let t = enumerate_cm_types(&Arc::new(cm_check(&NumberField::from_ints(c).unwrap()).unwrap())).remove(0);
        let o = Order::maximal(t.field());
        LatticeAV::new(&t, FracIdeal::unit(&o)).unwrap()
    }

    #[test]
    fn sqrt_minus_five_examples() {
        let a = av(&[5, 0, 1]);
        let k = a.cm_type.field().clone();
        let o = a.order().clone();
        let p = FracIdeal::from_gens(&o, &[k.from_int(2), k.elem_ints(&[1, 1])]).unwrap();
        let l = amul(&a, &p).unwrap();
        assert_eq!(amul_degree(&l), BigInt::from(2));
        assert_eq!(lattice_index(&l.target.lattice, &a.lattice), Rational::from_integer(2.into()));
        assert!(isomorphism(&a, &l.target).unwrap().is_none());
        let l2 = amul(&l.target, &p).unwrap();
        let c = compose(&l, &l2).unwrap();
        assert_eq!(c.ideal, FracIdeal::from_int(&o, &BigInt::from(2)).unwrap());
        assert_eq!(amul_degree(&c), BigInt::from(4));
        let two = amul(&a, &FracIdeal::from_int(&o, &BigInt::from(2)).unwrap()).unwrap();
        assert!(factor_through(&l, &two).unwrap());
        let (d, _) = min_isogeny(&a, &l.target).unwrap();
        assert_eq!(d, BigInt::from(2));
        assert_eq!(isogeny_classes(&a.cm_type).unwrap().len(), 2);
    }

    #[test]
    fn torsion_modules() {
        let a = av(&[1, 0, 1]);
        let t = torsion(&a, 2).unwrap();
        assert_eq!(t.cardinality(), BigInt::from(4));
        assert_eq!(torsion(&a, 1).unwrap().elements().len(), 1);
        let z = av(&[1, 1, 1, 1, 1]);
        let t = torsion(&z, 2).unwrap();
        assert_eq!(t.elements().len(), 16);
        for m in 2..=4 {
            let t = torsion(&av(&[5, 0, 1]), m).unwrap();
            for mat in t.commutant() {
                assert!(t.as_multiplication(&mat).is_some());
            }
        }
    }

    #[test]
    fn isogenies_prime_to_m_are_bijective_on_torsion() {
        let a = av(&[1, 0, 1]);
        let k = a.cm_type.field().clone();
        let o = a.order().clone();
        let l = amul(&a, &FracIdeal::principal(&o, &k.elem_ints(&[1, 1])).unwrap()).unwrap();
        assert!(induced_map_is_bijective(&l, 3).unwrap());
        assert!(!induced_map_is_bijective(&l, 2).unwrap());
    }
}
