//! Fractional ideals of a maximal order, stored as a denominator and a column Hermite basis
//! in order coordinates.  Equal ideals have identical representations.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{factor_integer, is_probable_prime, valuation};
use crate::error::{Error, Result};
use crate::fp::{self, FpPoly};
use crate::linalg::{congruence_kernel, hnf, hnf_coords, hnf_det, q_inverse, QMat, ZCols};
use crate::nf::{FieldMorphism, NfElem, NumberField};
use crate::order::Order;
use crate::Rational;

#[derive(Clone)]
pub struct FracIdeal {
    order: Order,
    den: BigInt,
    hnf: ZCols,
}

impl PartialEq for FracIdeal {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.den == other.den && self.hnf == other.hnf
    }
}

impl Eq for FracIdeal {}

impl std::hash::Hash for FracIdeal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.den.hash(state);
        self.hnf.hash(state);
    }
}

impl fmt::Debug for FracIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<String> = self
            .hnf
            .iter()
            .map(|c| format!("[{}]", c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        if self.den.is_one() {
            write!(f, "Ideal({})", cols.join(" "))
        } else {
            write!(f, "Ideal(1/{} * {})", self.den, cols.join(" "))
        }
    }
}

fn unit_cols(n: usize, d: &BigInt) -> ZCols {
    (0..n)
        .map(|j| {
            let mut e = vec![BigInt::zero(); n];
            e[j] = d.clone();
            e
        })
        .collect()
}

impl FracIdeal {
    /// Normalize generators (integer order coordinates, scaled by `den`); `modulus`, when
    /// given, must lie in the lattice they span.
    fn normalize(order: &Order, den: BigInt, cols: &[Vec<BigInt>], modulus: Option<&BigInt>) -> FracIdeal {
        let n = order.degree();
        let h = hnf(cols, n, modulus).expect("ideal lattice has full rank");
        let g = h.iter().flatten().fold(den.clone(), |acc, x| acc.gcd(x));
        let (den, hnf) = if g.is_one() {
            (den, h)
        } else {
            (&den / &g, h.into_iter().map(|c| c.into_iter().map(|x| x / &g).collect()).collect())
        };
        FracIdeal { order: order.clone(), den, hnf }
    }

    /// Ideal from a denominator and a Hermite basis, validated (wire format input).
    pub fn from_parts(order: &Order, den: BigInt, cols: ZCols) -> Result<FracIdeal> {
        let n = order.degree();
        if !den.is_positive() || cols.len() != n || cols.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("ideal must have a positive denominator and n columns of length n".into()));
        }
        let Some(h) = hnf(&cols, n, None) else {
            return Err(Error::ZeroIdeal);
        };
        let out = Self::normalize(order, den, &h, None);
        for c in &out.hnf {
            for j in 0..n {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::one();
                if hnf_coords(&out.hnf, &order.mul_coords(c, &e)).is_none() {
                    return Err(Error::InvalidInput("lattice is not closed under the order".into()));
                }
            }
        }
        Ok(out)
    }

    pub fn unit(order: &Order) -> FracIdeal {
        let n = order.degree();
        FracIdeal { order: order.clone(), den: BigInt::one(), hnf: unit_cols(n, &BigInt::one()) }
    }

    pub fn from_int(order: &Order, m: &BigInt) -> Result<FracIdeal> {
        if m.is_zero() {
            return Err(Error::ZeroIdeal);
        }
        Ok(FracIdeal { order: order.clone(), den: BigInt::one(), hnf: unit_cols(order.degree(), &m.abs()) })
    }

    pub fn from_rational(order: &Order, q: &Rational) -> Result<FracIdeal> {
        let mut i = Self::from_int(order, q.numer())?;
        i.den = q.denom().clone();
        Ok(Self::normalize(order, i.den.clone(), &i.hnf.clone(), None))
    }

    /// The ideal generated by the given elements.
    pub fn from_gens(order: &Order, gens: &[NfElem]) -> Result<FracIdeal> {
        let gens: Vec<&NfElem> = gens.iter().filter(|g| !g.is_zero()).collect();
        if gens.is_empty() {
            return Err(Error::ZeroIdeal);
        }
        let qc: Vec<Vec<Rational>> = gens.iter().map(|g| order.coords(g)).collect();
        let den = qc.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<Vec<BigInt>> = qc
            .iter()
            .map(|v| v.iter().map(|x| (x * Rational::from_integer(den.clone())).to_integer()).collect())
            .collect();
        let n = order.degree();
        let modulus = ints
            .iter()
            .map(|v| order.elem_from_coords(v).norm().to_integer().abs())
            .min()
            .expect("nonempty");
        let mut cols = Vec::with_capacity(ints.len() * n);
        for v in &ints {
            for j in 0..n {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::one();
                cols.push(order.mul_coords(v, &e));
            }
        }
        Ok(Self::normalize(order, den, &cols, Some(&modulus)))
    }

    pub fn principal(order: &Order, a: &NfElem) -> Result<FracIdeal> {
        if a.is_zero() {
            return Err(Error::ZeroElement);
        }
        Self::from_gens(order, std::slice::from_ref(a))
    }

    pub fn order(&self) -> &Order {
        &self.order
    }

    pub fn field(&self) -> &NumberField {
        self.order.field()
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    /// Hermite basis columns (order coordinates) of den * I.
    pub fn hnf(&self) -> &ZCols {
        &self.hnf
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.hnf == unit_cols(self.order.degree(), &BigInt::one())
    }

    /// Integral ideal den * I.
    pub fn numerator(&self) -> FracIdeal {
        FracIdeal { order: self.order.clone(), den: BigInt::one(), hnf: self.hnf.clone() }
    }

    /// Generator of (den * I) ∩ Z.
    pub fn min_integer(&self) -> &BigInt {
        &self.hnf[0][0]
    }

    /// Z-basis of the ideal as field elements.
    pub fn basis(&self) -> Vec<NfElem> {
        let d = Rational::from_integer(self.den.clone());
        self.hnf
            .iter()
            .map(|c| {
                let q: Vec<Rational> = c.iter().map(|x| Rational::from_integer(x.clone()) / &d).collect();
                self.order.elem_from_qcoords(&q)
            })
            .collect()
    }

    fn check(&self, other: &FracIdeal) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch);
        }
        Ok(())
    }

    pub fn mul(&self, other: &FracIdeal) -> Result<FracIdeal> {
        self.check(other)?;
        let mut cols = Vec::with_capacity(self.hnf.len() * other.hnf.len());
        for a in &self.hnf {
            for b in &other.hnf {
                cols.push(self.order.mul_coords(a, b));
            }
        }
        let modulus = self.min_integer() * other.min_integer();
        Ok(Self::normalize(&self.order, &self.den * &other.den, &cols, Some(&modulus)))
    }

    pub fn add(&self, other: &FracIdeal) -> Result<FracIdeal> {
        self.check(other)?;
        let den = self.den.lcm(&other.den);
        let sa = &den / &self.den;
        let sb = &den / &other.den;
        let mut cols: Vec<Vec<BigInt>> = self.hnf.iter().map(|c| c.iter().map(|x| x * &sa).collect()).collect();
        cols.extend(other.hnf.iter().map(|c| c.iter().map(|x| x * &sb).collect()));
        let modulus = (self.min_integer() * &sa).gcd(&(other.min_integer() * &sb));
        Ok(Self::normalize(&self.order, den, &cols, Some(&modulus)))
    }

    pub fn inverse(&self) -> Result<FracIdeal> {
        let n = self.order.degree();
        let a = self.min_integer().clone();
        // {x in O : x H ⊆ aO}, then I^{-1} = (den / a) * that
        let mut rows = Vec::with_capacity(n * n);
        for c in &self.hnf {
            rows.extend(self.order.mult_matrix(c));
        }
        let k = congruence_kernel(&rows, n, &a);
        let cols: Vec<Vec<BigInt>> = k.iter().map(|c| c.iter().map(|x| x * &self.den).collect()).collect();
        let modulus = &a * &self.den;
        Ok(Self::normalize(&self.order, a, &cols, Some(&modulus)))
    }

    pub fn div(&self, other: &FracIdeal) -> Result<FracIdeal> {
        self.mul(&other.inverse()?)
    }

    pub fn pow(&self, e: i64) -> Result<FracIdeal> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut acc = FracIdeal::unit(&self.order);
        let mut b = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b)?;
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b)?;
            }
        }
        Ok(acc)
    }

    /// a * I.
    pub fn scale(&self, a: &NfElem) -> Result<FracIdeal> {
        FracIdeal::principal(&self.order, a)?.mul(self)
    }

    /// Numerical norm (index for integral ideals, extended multiplicatively).
    pub fn norm(&self) -> Rational {
        Rational::new(hnf_det(&self.hnf), self.den.pow(self.order.degree() as u32))
    }

    pub fn contains(&self, a: &NfElem) -> bool {
        let c = self.order.coords(a);
        let d = Rational::from_integer(self.den.clone());
        let mut v = Vec::with_capacity(c.len());
        for x in c {
            let y = x * &d;
            if !y.is_integer() {
                return false;
            }
            v.push(y.to_integer());
        }
        hnf_coords(&self.hnf, &v).is_some()
    }

    /// other ⊆ self.
    pub fn contains_ideal(&self, other: &FracIdeal) -> bool {
        if self.order != other.order {
            return false;
        }
        let (num, rem) = self.den.div_rem(&other.den);
        if rem.is_zero() {
            return other.hnf.iter().all(|c| {
                let v: Vec<BigInt> = c.iter().map(|x| x * &num).collect();
                hnf_coords(&self.hnf, &v).is_some()
            });
        }
        other.basis().iter().all(|b| self.contains(b))
    }

    /// Canonical representative of an integral coordinate vector modulo this integral ideal.
    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        debug_assert!(self.is_integral());
        let mut r = v.to_vec();
        for i in (0..r.len()).rev() {
            let q = r[i].div_floor(&self.hnf[i][i]);
            if !q.is_zero() {
                for k in 0..=i {
                    let d = &q * &self.hnf[i][k];
                    r[k] -= d;
                }
            }
        }
        r
    }

    /// Image under an automorphism of the field.
    pub fn conjugate(&self, sigma: &FieldMorphism) -> FracIdeal {
        assert!(sigma.source() == self.field() && sigma.target() == self.field());
        let cols: Vec<Vec<BigInt>> = self
            .basis()
            .iter()
            .map(|b| {
                let img = sigma.apply(b);
                self.order
                    .coords(&img)
                    .into_iter()
                    .map(|x| (x * Rational::from_integer(self.den.clone())).to_integer())
                    .collect()
            })
            .collect();
        let m = self.min_integer().clone();
        Self::normalize(&self.order, self.den.clone(), &cols, Some(&m))
    }

    /// The ideal generated by the image under phi: E -> L, in the maximal order of L.
    pub fn extend(&self, phi: &FieldMorphism) -> Result<FracIdeal> {
        if phi.source() != self.field() {
            return Err(Error::OrderMismatch);
        }
        if phi.target() == phi.source() {
            return Ok(self.conjugate(phi));
        }
        let ol = Order::maximal(phi.target());
        let gens: Vec<NfElem> = self.basis().iter().map(|b| phi.apply(b)).collect();
        FracIdeal::from_gens(&ol, &gens)
    }

    /// phi^{-1}(J) for phi: E -> L and a fractional ideal J of L.
    pub fn pullback(phi: &FieldMorphism, j: &FracIdeal) -> Result<FracIdeal> {
        if phi.target() != j.field() {
            return Err(Error::OrderMismatch);
        }
        let oe = Order::maximal(phi.source());
        let ol = j.order();
        let n = oe.degree();
        let m = ol.degree();
        // T: O_L coordinates of phi(w_j)
        let t: Vec<Vec<BigInt>> = (0..n)
            .map(|c| {
                ol.int_coords(&phi.apply(&oe.basis_elem(c))).expect("image of an integral element is integral")
            })
            .collect();
        let d = hnf_det(&j.hnf);
        let hm: QMat = (0..m).map(|r| (0..m).map(|c| Rational::from_integer(j.hnf[c][r].clone())).collect()).collect();
        let hinv = q_inverse(&hm).expect("full rank");
        let dq = Rational::from_integer(d.clone());
        let hinv_d: Vec<Vec<BigInt>> = hinv.iter().map(|r| r.iter().map(|x| (x * &dq).to_integer()).collect()).collect();
        let rows: Vec<Vec<BigInt>> = (0..m)
            .map(|r| (0..n).map(|c| (0..m).fold(BigInt::zero(), |s, k| s + &hinv_d[r][k] * &t[c][k])).collect())
            .collect();
        let k = congruence_kernel(&rows, n, &d);
        Ok(Self::normalize(&oe, j.den.clone(), &k, Some(&d)))
    }

    /// Exponent of the prime P in this ideal.
    pub fn valuation(&self, p: &PrimeIdeal) -> i64 {
        assert!(self.order == p.ideal.order);
        let den_part = p.e as i64 * valuation(&self.den, &p.p) as i64;
        let mut num = self.numerator();
        let pf = p.p.pow(p.f);
        let mut k = 0i64;
        loop {
            let nn = hnf_det(&num.hnf);
            if !(nn % &pf).is_zero() {
                break;
            }
            let next = num.mul(&p.inv).expect("same order");
            if !next.is_integral() {
                break;
            }
            num = next;
            k += 1;
        }
        k - den_part
    }

    /// Prime factorization, primes ordered by rational prime and then canonically.
    pub fn factor(&self) -> Vec<(PrimeIdeal, i64)> {
        let nn = hnf_det(&self.hnf);
        let mut ps: Vec<BigInt> = factor_integer(&nn).into_iter().map(|(p, _)| p).collect();
        if !self.den.is_one() {
            ps.extend(factor_integer(&self.den).into_iter().map(|(p, _)| p));
        }
        ps.sort();
        ps.dedup();
        let mut out = vec![];
        for p in ps {
            for pr in prime_split(&self.order, &p).expect("prime") {
                let v = self.valuation(&pr);
                if v != 0 {
                    out.push((pr, v));
                }
            }
        }
        out
    }

    /// Integral ideal test against m: norm and denominator both prime to m.
    pub fn is_coprime_to(&self, m: &BigInt) -> bool {
        let nn = hnf_det(&self.hnf);
        nn.gcd(m).is_one() && self.den.gcd(m).is_one()
    }
}

/// A prime ideal of a maximal order with its ramification data.
#[derive(Clone)]
pub struct PrimeIdeal {
    pub ideal: FracIdeal,
    pub p: BigInt,
    pub e: u32,
    pub f: u32,
    inv: FracIdeal,
}

impl PartialEq for PrimeIdeal {
    fn eq(&self, other: &Self) -> bool {
        self.ideal == other.ideal
    }
}

impl Eq for PrimeIdeal {}

impl fmt::Debug for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime(p={}, e={}, f={}, {:?})", self.p, self.e, self.f, self.ideal)
    }
}

impl PrimeIdeal {
    pub fn norm(&self) -> BigInt {
        self.p.pow(self.f)
    }

    pub fn inverse(&self) -> &FracIdeal {
        &self.inv
    }

    /// Prime data for a known prime ideal.
    pub fn from_ideal(ideal: &FracIdeal) -> Result<PrimeIdeal> {
        let nn = ideal.norm();
        if !nn.is_integer() || !ideal.is_integral() {
            return Err(Error::InvalidInput("prime ideals are integral".into()));
        }
        let fac = factor_integer(&nn.to_integer());
        if fac.len() != 1 {
            return Err(Error::InvalidInput("norm of a prime ideal is a prime power".into()));
        }
        prime_split(ideal.order(), &fac[0].0)?
            .into_iter()
            .find(|q| q.ideal == *ideal)
            .ok_or_else(|| Error::InvalidInput("ideal is not prime".into()))
    }
}

fn split_cache() -> &'static Mutex<HashMap<(Vec<Rational>, BigInt), Vec<PrimeIdeal>>> {
    static CACHE: OnceLock<Mutex<HashMap<(Vec<Rational>, BigInt), Vec<PrimeIdeal>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The primes above p, with e and f, sorted by residue degree and then by Hermite basis.
pub fn prime_split(order: &Order, p: &BigInt) -> Result<Vec<PrimeIdeal>> {
    if !p.is_positive() || !is_probable_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if order.index_in_maximal() != BigInt::one() && (order.index_in_maximal() % p).is_zero() {
        return Err(Error::IndexDivisible(p.to_string()));
    }
    let key = (order.field().min_poly().coeffs().to_vec(), p.clone());
    if let Some(v) = split_cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(v.clone());
    }
    let pu = p.to_u64().ok_or_else(|| Error::ModulusTooLarge(p.to_string()))?;
    let rad = order.radical(p);
    let mut rng = ChaCha8Rng::seed_from_u64(pu);
    let mut pieces = vec![];
    split_quotient(order, rad, pu, &mut rng, &mut pieces);
    let po = FracIdeal::from_int(order, p)?;
    let mut out = vec![];
    for h in pieces {
        let f = h.iter().enumerate().filter(|(i, c)| c[*i] == *p).count() as u32;
        let ideal = FracIdeal { order: order.clone(), den: BigInt::one(), hnf: h };
        let inv = ideal.inverse()?;
        let mut pr = PrimeIdeal { ideal, p: p.clone(), e: 0, f, inv };
        pr.e = po.valuation(&pr) as u32;
        out.push(pr);
    }
    out.sort_by(|a, b| (a.f, &a.ideal.hnf).cmp(&(b.f, &b.ideal.hnf)));
    debug_assert_eq!(out.iter().map(|q| q.e * q.f).sum::<u32>() as usize, order.degree());
    split_cache().lock().unwrap_or_else(|e| e.into_inner()).insert(key, out.clone());
    Ok(out)
}

/// Reduce a residue vector modulo an ideal I ⊇ pO (Hermite diagonal in {1, p}); returns the
/// coordinates at the positions with diagonal p.
fn reduce_mod_p(h: &ZCols, v: &[u64], p: u64) -> Vec<u64> {
    let n = v.len();
    let mut r = v.to_vec();
    for j in (0..n).rev() {
        if h[j][j].is_one() && r[j] != 0 {
            let q = r[j];
            for (k, x) in h[j].iter().enumerate().take(j + 1) {
                let xm = x.mod_floor(&BigInt::from(p)).to_u64().unwrap();
                r[k] = (r[k] + p - crate::arith::mul_mod(q, xm, p)) % p;
            }
        }
    }
    (0..n).filter(|&j| !h[j][j].is_one()).map(|j| r[j]).collect()
}

/// Split O/I (a product of finite fields) into its field factors.
fn split_quotient(order: &Order, h: ZCols, p: u64, rng: &mut ChaCha8Rng, out: &mut Vec<ZCols>) {
    let n = order.degree();
    let dim = (0..n).filter(|&j| !h[j][j].is_one()).count();
    if dim <= 1 {
        out.push(h);
        return;
    }
    let bp = BigInt::from(p);
    for attempt in 0..200 {
        let x: Vec<u64> = if attempt < n { unit_vec(n, attempt) } else { (0..n).map(|_| rng.gen_range(0..p)).collect() };
        let mut one = vec![0u64; n];
        one[0] = 1 % p;
        let mut pw = one.clone();
        let mut vecs: Vec<Vec<u64>> = vec![reduce_mod_p(&h, &pw, p)];
        let minpoly = loop {
            pw = order.mul_coords_mod(&pw, &x, p);
            vecs.push(reduce_mod_p(&h, &pw, p));
            let k = vecs.len();
            let rows: Vec<Vec<u64>> = (0..dim).map(|r| (0..k).map(|c| vecs[c][r]).collect()).collect();
            let ker = fp::kernel(&rows, k, p);
            if let Some(v) = ker.first() {
                break FpPoly::new(p, v.clone()).monic();
            }
        };
        let facs = minpoly.factor(p ^ attempt as u64);
        if facs.len() == 1 {
            if minpoly.deg() == dim {
                out.push(h);
                return;
            }
            continue;
        }
        for (g, _) in facs {
            // g(x) by Horner
            let mut acc = vec![0u64; n];
            for &c in g.coeffs().iter().rev() {
                acc = order.mul_coords_mod(&acc, &x, p);
                acc[0] = (acc[0] + c) % p;
            }
            let gx: Vec<BigInt> = acc.iter().map(|&v| BigInt::from(v)).collect();
            let mut cols = h.clone();
            for j in 0..n {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::one();
                cols.push(order.mul_coords(&gx, &e));
            }
            let sub = hnf(&cols, n, Some(&bp)).expect("contains pO");
            split_quotient(order, sub, p, rng, out);
        }
        return;
    }
    panic!("could not split residue algebra modulo {p}");
}

fn unit_vec(n: usize, i: usize) -> Vec<u64> {
    let mut e = vec![0u64; n];
    e[i] = 1;
    e
}

/// A scalar s with s*a integral and of norm prime to m: s lies in a^{-1} with exact valuation
/// at every prime dividing m (chosen per prime and combined across the primes).
pub fn coprime_scale(a: &FracIdeal, m: &BigInt) -> Result<(NfElem, FracIdeal)> {
    let order = a.order();
    let k = order.field();
    if m.is_zero() {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if a.is_integral() && a.is_coprime_to(m) {
        return Ok((k.one(), a.clone()));
    }
    let b = a.inverse()?;
    let mut primes: Vec<PrimeIdeal> = vec![];
    for (p, _) in factor_integer(m) {
        primes.extend(prime_split(order, &p)?);
    }
    let mut s = k.zero();
    for (i, pr) in primes.iter().enumerate() {
        let mut bp = b.clone();
        for (j, q) in primes.iter().enumerate() {
            if i != j {
                bp = bp.mul(&q.ideal)?;
            }
        }
        let smaller = bp.mul(&pr.ideal)?;
        let pick = bp
            .basis()
            .into_iter()
            .find(|x| !smaller.contains(x))
            .expect("B is strictly larger than B*P");
        s = &s + &pick;
    }
    if primes.is_empty() {
        s = b.basis()[0].clone();
    }
    let out = a.scale(&s)?;
    debug_assert!(out.is_integral() && out.is_coprime_to(m));
    Ok((s, out))
}
