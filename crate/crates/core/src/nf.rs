//! Number fields Q[x]/(f): exact element arithmetic, field morphisms, and factoring of
//! rational polynomials over a number field (Trager's norm method).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, Weak};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::embed::{self, CDisc, Embedding};
use crate::error::{Error, Result};
use crate::linalg::{q_solve, QMat};
use crate::qfactor::{canonical_key, factor_rational_poly, is_irreducible};
use crate::{QPoly, Rational};

/// Working precision for cached embeddings.
pub const DEFAULT_BITS: u32 = 128;

pub(crate) struct FieldData {
    poly: QPoly,
    n: usize,
    disc: Rational,
    /// x^(n+k) reduced modulo the defining polynomial, k = 0..n-1.
    red: Vec<Vec<Rational>>,
    /// Tr(x^k), k = 0..2n-2.
    psums: Vec<Rational>,
    embeddings: OnceLock<Vec<Embedding>>,
    automorphisms: OnceLock<Vec<Vec<Rational>>>,
    pub(crate) order: OnceLock<Arc<crate::order::OrderData>>,
    pub(crate) conj: OnceLock<Option<Vec<Rational>>>,
}

/// A number field given by a monic irreducible polynomial over Q.
#[derive(Clone)]
pub struct NumberField(pub(crate) Arc<FieldData>);

impl PartialEq for NumberField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.poly == other.0.poly
    }
}

impl Eq for NumberField {}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q[x]/({})", self.0.poly)
    }
}

impl NumberField {
    /// Field defined by `f`, which is made monic and must be irreducible of degree >= 1.
    pub fn new(f: &QPoly) -> Result<Self> {
        if f.is_zero() || f.deg() == 0 {
            return Err(Error::InvalidInput("defining polynomial must have degree >= 1".into()));
        }
        if !is_irreducible(f) {
            return Err(Error::InvalidInput(format!("{f} is reducible over Q")));
        }
        Ok(Self::new_unchecked(f.monic()))
    }

    pub fn from_ints(c: &[i64]) -> Result<Self> {
        Self::new(&QPoly::from_ints(c))
    }

    /// The field Q, presented as Q[x]/(x).
    pub fn rationals() -> Self {
        Self::new_unchecked(QPoly::x())
    }

    /// Fields are interned by defining polynomial so that cached data (orders, embeddings,
    /// automorphisms) is shared between equal fields.
    pub(crate) fn new_unchecked(poly: QPoly) -> Self {
        static INTERN: OnceLock<Mutex<HashMap<Vec<Rational>, Weak<FieldData>>>> = OnceLock::new();
        let table = INTERN.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = table.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(d) = guard.get(poly.coeffs()).and_then(Weak::upgrade) {
            return NumberField(d);
        }
        guard.retain(|_, w| w.strong_count() > 0);
        let k = Self::build(poly);
        guard.insert(k.0.poly.coeffs().to_vec(), Arc::downgrade(&k.0));
        k
    }

    fn build(poly: QPoly) -> Self {
        let n = poly.deg();
        let c = poly.coeffs();
        // x^n = -sum_{i<n} c_i x^i
        let mut red: Vec<Vec<Rational>> = Vec::with_capacity(n);
        let mut cur: Vec<Rational> = (0..n).map(|i| -c[i].clone()).collect();
        for _ in 0..n.saturating_sub(1).max(1) {
            red.push(cur.clone());
            // multiply by x
            let top = cur[n - 1].clone();
            let mut next = vec![Rational::zero(); n];
            for i in (1..n).rev() {
                next[i] = cur[i - 1].clone();
            }
            if !top.is_zero() {
                for i in 0..n {
                    next[i] -= &top * &c[i];
                }
            }
            cur = next;
        }
        // Newton sums
        let mut psums = vec![Rational::from_integer(BigInt::from(n))];
        for k in 1..(2 * n).max(2) - 1 {
            let mut s = Rational::zero();
            for i in 1..=k.min(n) {
                let e = &c[n - i];
                if i < k {
                    s -= e * &psums[k - i];
                } else {
                    s -= e * Rational::from_integer(BigInt::from(k));
                }
            }
            psums.push(s);
        }
        let disc = if n == 1 { Rational::one() } else { poly.discriminant() };
        NumberField(Arc::new(FieldData {
            poly,
            n,
            disc,
            red,
            psums,
            embeddings: OnceLock::new(),
            automorphisms: OnceLock::new(),
            order: OnceLock::new(),
            conj: OnceLock::new(),
        }))
    }

    pub fn degree(&self) -> usize {
        self.0.n
    }

    pub fn min_poly(&self) -> &QPoly {
        &self.0.poly
    }

    /// Discriminant of the defining polynomial.
    pub fn poly_disc(&self) -> &Rational {
        &self.0.disc
    }

    pub fn zero(&self) -> NfElem {
        NfElem { field: self.clone(), c: vec![Rational::zero(); self.0.n] }
    }

    pub fn one(&self) -> NfElem {
        self.from_rational(Rational::one())
    }

    pub fn from_int(&self, a: i64) -> NfElem {
        self.from_rational(Rational::from_integer(BigInt::from(a)))
    }

    pub fn from_rational(&self, a: Rational) -> NfElem {
        let mut e = self.zero();
        e.c[0] = a;
        e
    }

    /// The class of x.
    pub fn gen(&self) -> NfElem {
        self.from_poly(&QPoly::x())
    }

    pub fn from_poly(&self, p: &QPoly) -> NfElem {
        let n = self.0.n;
        let r = p.rem(&self.0.poly);
        let mut c = vec![Rational::zero(); n];
        for (i, a) in r.coeffs().iter().enumerate() {
            c[i] = a.clone();
        }
        NfElem { field: self.clone(), c }
    }

    pub fn elem(&self, coords: Vec<Rational>) -> NfElem {
        assert_eq!(coords.len(), self.0.n, "coordinate length must equal the degree");
        NfElem { field: self.clone(), c: coords }
    }

    pub fn elem_ints(&self, coords: &[i64]) -> NfElem {
        let mut c = vec![Rational::zero(); self.0.n];
        for (i, &a) in coords.iter().enumerate() {
            c[i] = Rational::from_integer(BigInt::from(a));
        }
        self.elem(c)
    }

    /// Tr(x^k) for 0 <= k <= 2n-2.
    pub fn power_trace(&self, k: usize) -> &Rational {
        &self.0.psums[k]
    }

    /// Certified complex embeddings at the default working precision.
    pub fn embeddings(&self) -> &[Embedding] {
        self.0.embeddings.get_or_init(|| embed::isolate_roots(&self.0.poly, DEFAULT_BITS))
    }

    pub fn is_totally_real(&self) -> bool {
        self.0.poly.count_real_roots() == self.0.n
    }

    pub fn is_totally_imaginary(&self) -> bool {
        self.0.poly.count_real_roots() == 0
    }

    pub fn same(&self, other: &NumberField) -> bool {
        self == other
    }
}

/// Certified embeddings at a caller-chosen precision (at least 64 bits).
pub fn certified_embeddings(k: &NumberField, bits: u32) -> Vec<Embedding> {
    embed::isolate_roots(k.min_poly(), bits)
}

/// Element of a number field, as coordinates in the power basis.
#[derive(Clone)]
pub struct NfElem {
    field: NumberField,
    c: Vec<Rational>,
}

impl PartialEq for NfElem {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c && self.field == other.field
    }
}

impl Eq for NfElem {}

impl fmt::Debug for NfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_poly())
    }
}

impl fmt::Display for NfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_poly())
    }
}

impl NfElem {
    pub fn field(&self) -> &NumberField {
        &self.field
    }

    pub fn coords(&self) -> &[Rational] {
        &self.c
    }

    pub fn into_coords(self) -> Vec<Rational> {
        self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|a| a.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.c[0].is_one() && self.c[1..].iter().all(|a| a.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        self.c[1..].iter().all(|a| a.is_zero()).then(|| self.c[0].clone())
    }

    pub fn as_poly(&self) -> QPoly {
        QPoly::new(self.c.clone())
    }

    /// Least common denominator of the coordinates.
    pub fn denominator(&self) -> BigInt {
        self.c.iter().fold(BigInt::one(), |acc, a| acc.lcm(a.denom()))
    }

    pub fn scale(&self, s: &Rational) -> NfElem {
        NfElem { field: self.field.clone(), c: self.c.iter().map(|a| a * s).collect() }
    }

    fn check(&self, o: &NfElem) {
        assert!(self.field == o.field, "elements of different fields");
    }

    fn mul_impl(&self, o: &NfElem) -> NfElem {
        self.check(o);
        let n = self.field.0.n;
        let mut prod = vec![Rational::zero(); 2 * n - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut c: Vec<Rational> = prod[..n].to_vec();
        for k in 0..n - 1 {
            let t = &prod[n + k];
            if t.is_zero() {
                continue;
            }
            for (i, r) in self.field.0.red[k].iter().enumerate() {
                if !r.is_zero() {
                    c[i] += t * r;
                }
            }
        }
        NfElem { field: self.field.clone(), c }
    }

    pub fn inv(&self) -> Result<NfElem> {
        if self.is_zero() {
            return Err(Error::ZeroElement);
        }
        let u = self.as_poly().inv_mod(&self.field.0.poly).ok_or(Error::ZeroElement)?;
        Ok(self.field.from_poly(&u))
    }

    pub fn pow(&self, e: i64) -> Result<NfElem> {
        let mut base = if e < 0 { self.inv()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = self.field.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn trace(&self) -> Rational {
        self.c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .fold(Rational::zero(), |s, (i, a)| s + a * self.field.power_trace(i))
    }

    /// Absolute norm, as the resultant of the defining polynomial with the element.
    pub fn norm(&self) -> Rational {
        if self.field.0.n == 1 {
            return self.c[0].clone();
        }
        let a = self.as_poly();
        if a.is_zero() {
            return Rational::zero();
        }
        self.field.0.poly.resultant(&a)
    }

    /// Characteristic polynomial of multiplication by the element (Newton identities).
    pub fn char_poly(&self) -> QPoly {
        let n = self.field.0.n;
        let mut p = Vec::with_capacity(n);
        let mut pw = self.clone();
        for _ in 0..n {
            p.push(pw.trace());
            pw = &pw * self;
        }
        let mut e = vec![Rational::one()];
        for k in 1..=n {
            let mut s = Rational::zero();
            for i in 1..=k {
                let term = &e[k - i] * &p[i - 1];
                if i % 2 == 1 {
                    s += term;
                } else {
                    s -= term;
                }
            }
            e.push(s / Rational::from_integer(BigInt::from(k)));
        }
        let coeffs: Vec<Rational> = (0..=n)
            .map(|j| {
                let k = n - j;
                if k % 2 == 0 {
                    e[k].clone()
                } else {
                    -e[k].clone()
                }
            })
            .collect();
        QPoly::new(coeffs)
    }

    pub fn min_poly(&self) -> QPoly {
        let ch = self.char_poly();
        let g = ch.gcd(&ch.derivative());
        ch.div_rem(&g).0.monic()
    }

    /// Coordinates are all integers.
    pub fn has_integral_coords(&self) -> bool {
        self.c.iter().all(|a| a.is_integer())
    }

    /// Disc containing the image of the element under embedding `idx`.
    pub fn embed(&self, idx: usize) -> CDisc {
        let e = &self.field.embeddings()[idx];
        embed::eval_disc(&self.as_poly(), &e.disc, DEFAULT_BITS + 32)
    }

    pub fn embed_f64(&self, idx: usize) -> num_complex::Complex<f64> {
        self.embed(idx).approx()
    }
}

impl<'a> Add for &'a NfElem {
    type Output = NfElem;
    fn add(self, o: &NfElem) -> NfElem {
        self.check(o);
        NfElem { field: self.field.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub for &'a NfElem {
    type Output = NfElem;
    fn sub(self, o: &NfElem) -> NfElem {
        self.check(o);
        NfElem { field: self.field.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul for &'a NfElem {
    type Output = NfElem;
    fn mul(self, o: &NfElem) -> NfElem {
        self.mul_impl(o)
    }
}

impl<'a> Neg for &'a NfElem {
    type Output = NfElem;
    fn neg(self) -> NfElem {
        NfElem { field: self.field.clone(), c: self.c.iter().map(|a| -a).collect() }
    }
}

impl Add for NfElem {
    type Output = NfElem;
    fn add(self, o: NfElem) -> NfElem {
        &self + &o
    }
}

impl Sub for NfElem {
    type Output = NfElem;
    fn sub(self, o: NfElem) -> NfElem {
        &self - &o
    }
}

impl Mul for NfElem {
    type Output = NfElem;
    fn mul(self, o: NfElem) -> NfElem {
        &self * &o
    }
}

impl Neg for NfElem {
    type Output = NfElem;
    fn neg(self) -> NfElem {
        -&self
    }
}

/// A Q-algebra homomorphism between number fields, fixed by the image of the generator.
#[derive(Clone)]
pub struct FieldMorphism {
    source: NumberField,
    target: NumberField,
    image: NfElem,
    /// Columns are the images of 1, x, ..., x^(n-1), in target coordinates (row-major storage).
    mat: Arc<QMat>,
}

impl PartialEq for FieldMorphism {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.image == other.image
    }
}

impl fmt::Debug for FieldMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x -> {}", self.image)
    }
}

impl FieldMorphism {
    /// Morphism sending the generator of `source` to `image`; checked exactly.
    pub fn new(source: &NumberField, image: NfElem) -> Result<Self> {
        let val = eval_in(source.min_poly(), &image);
        if !val.is_zero() {
            return Err(Error::InvalidInput("image is not a root of the source polynomial".into()));
        }
        Ok(Self::new_unchecked(source, image))
    }

    pub(crate) fn new_unchecked(source: &NumberField, image: NfElem) -> Self {
        let target = image.field().clone();
        let n = source.degree();
        let m = target.degree();
        let mut cols: Vec<Vec<Rational>> = Vec::with_capacity(n);
        let mut p = target.one();
        for i in 0..n {
            cols.push(p.coords().to_vec());
            if i + 1 < n {
                p = &p * &image;
            }
        }
        let mat: QMat = (0..m).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
        FieldMorphism { source: source.clone(), target, image, mat: Arc::new(mat) }
    }

    pub fn identity(k: &NumberField) -> Self {
        Self::new_unchecked(k, k.gen())
    }

    pub fn source(&self) -> &NumberField {
        &self.source
    }

    pub fn target(&self) -> &NumberField {
        &self.target
    }

    pub fn image_of_generator(&self) -> &NfElem {
        &self.image
    }

    /// Matrix (target rows x source columns) of the underlying Q-linear map.
    pub fn matrix(&self) -> &QMat {
        &self.mat
    }

    pub fn apply(&self, a: &NfElem) -> NfElem {
        assert!(a.field() == &self.source, "element not in the source field");
        let m = self.target.degree();
        let mut c = vec![Rational::zero(); m];
        for (j, x) in a.coords().iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (r, row) in self.mat.iter().enumerate() {
                if !row[j].is_zero() {
                    c[r] += x * &row[j];
                }
            }
        }
        self.target.elem(c)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &FieldMorphism) -> Result<FieldMorphism> {
        if inner.target != self.source {
            return Err(Error::CompositionMismatch);
        }
        Ok(Self::new_unchecked(&inner.source, self.apply(&inner.image)))
    }

    /// The unique source element mapping to `b`, if `b` lies in the image.
    pub fn preimage(&self, b: &NfElem) -> Option<NfElem> {
        assert!(b.field() == &self.target);
        q_solve(&self.mat, b.coords()).map(|c| self.source.elem(c))
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.image == self.source.gen()
    }
}

/// Evaluate a rational polynomial at a field element.
pub fn eval_in(p: &QPoly, a: &NfElem) -> NfElem {
    let k = a.field();
    let mut acc = k.zero();
    for c in p.coeffs().iter().rev() {
        acc = &acc * a;
        acc.c[0] += c;
    }
    acc
}

// ---- polynomials over a number field, low degree first ----

pub type NfPoly = Vec<NfElem>;

fn np_trim(mut p: NfPoly) -> NfPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn np_from_q(k: &NumberField, f: &QPoly) -> NfPoly {
    f.coeffs().iter().map(|c| k.from_rational(c.clone())).collect()
}

fn np_monic(p: &NfPoly) -> NfPoly {
    let l = p.last().expect("nonzero polynomial").inv().expect("nonzero lead");
    p.iter().map(|c| c * &l).collect()
}

fn np_rem(a: &NfPoly, b: &NfPoly) -> NfPoly {
    let db = b.len() - 1;
    let inv = b[db].inv().expect("nonzero lead");
    let mut r = a.clone();
    while r.len() > db && !r.is_empty() {
        let top = r.len() - 1;
        let q = &r[top] * &inv;
        for i in 0..=db {
            let t = &q * &b[i];
            r[top - db + i] = &r[top - db + i] - &t;
        }
        r.pop();
        r = np_trim(r);
    }
    r
}

fn np_gcd(a: &NfPoly, b: &NfPoly) -> NfPoly {
    let (mut a, mut b) = (np_trim(a.clone()), np_trim(b.clone()));
    while !b.is_empty() {
        let r = np_rem(&a, &b);
        a = b;
        b = r;
    }
    np_monic(&a)
}

/// p(y + c)
fn np_shift(p: &NfPoly, c: &NfElem) -> NfPoly {
    let mut acc: NfPoly = vec![];
    for a in p.iter().rev() {
        // acc = acc * (y + c) + a
        let mut next: NfPoly = vec![c.field().zero(); acc.len() + 1];
        for (i, t) in acc.iter().enumerate() {
            next[i + 1] = &next[i + 1] + t;
            next[i] = &next[i] + &(t * c);
        }
        next[0] = &next[0] + a;
        acc = next;
    }
    np_trim(acc)
}

/// f(c - s*x) as a polynomial in x over the field of c.
fn np_affine_compose(f: &QPoly, c: &NfElem, s: i64) -> NfPoly {
    let k = c.field();
    let lin: NfPoly = vec![c.clone(), k.from_int(-s)];
    let mut acc: NfPoly = vec![];
    for a in f.coeffs().iter().rev() {
        let mut next: NfPoly = vec![k.zero(); acc.len() + 1];
        for (i, t) in acc.iter().enumerate() {
            next[i] = &next[i] + &(t * &lin[0]);
            next[i + 1] = &next[i + 1] + &(t * &lin[1]);
        }
        next[0].c[0] += a;
        acc = next;
    }
    np_trim(acc)
}

/// An irreducible factor over K of a rational polynomial f, with the data from the norm
/// computation: `q_factor(y)` is the minimal polynomial over Q of `beta + shift*theta`, where
/// beta is a root of the factor and theta the generator of K.
#[derive(Clone, Debug)]
pub struct KFactor {
    pub poly: NfPoly,
    pub q_factor: QPoly,
    pub shift: i64,
}

impl KFactor {
    pub fn degree(&self) -> usize {
        self.poly.len() - 1
    }
}

fn interpolate(xs: &[Rational], ys: &[Rational]) -> QPoly {
    // Newton divided differences
    let n = xs.len();
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&xs[i] - &xs[i - j]);
        }
    }
    let mut p = QPoly::constant(dd[n - 1].clone());
    for i in (0..n - 1).rev() {
        p = &p * &QPoly::new(vec![-xs[i].clone(), Rational::one()]);
        p = &p + &QPoly::constant(dd[i].clone());
    }
    p
}

/// Norm N(y) = Res_x(m_K(x), f(y - s x)) by evaluation and interpolation.
fn shifted_norm(k: &NumberField, f: &QPoly, s: i64) -> QPoly {
    let deg = k.degree() * f.deg();
    let xs: Vec<Rational> = (0..=deg).map(|j| Rational::from_integer(BigInt::from(j))).collect();
    let ys: Vec<Rational> = xs
        .iter()
        .map(|y| {
            let lin = QPoly::new(vec![y.clone(), Rational::from_integer(BigInt::from(-s))]);
            let g = f.compose(&lin);
            if k.degree() == 1 {
                g.eval(&-k.min_poly().coeff(0))
            } else {
                k.min_poly().resultant(&g)
            }
        })
        .collect();
    interpolate(&xs, &ys)
}

/// Irreducible monic factors over K of a squarefree rational polynomial, in canonical order
/// (by degree, then by the minimal polynomial of the shifted root).
pub fn factor_over(k: &NumberField, f: &QPoly) -> Vec<KFactor> {
    let f = f.monic();
    assert!(f.is_squarefree(), "factor_over expects a squarefree polynomial");
    let theta = k.gen();
    let mut shifts: Vec<i64> = vec![];
    for t in 1..=60 {
        shifts.push(t);
        shifts.push(-t);
    }
    if k.degree() == 1 {
        shifts.insert(0, 0);
    }
    for s in shifts {
        let norm = shifted_norm(k, &f, s);
        if !norm.is_squarefree() {
            continue;
        }
        let g = np_affine_compose(&f, &(&theta * &k.from_int(-s)), -1);
        let mut out = vec![];
        for (h, _) in factor_rational_poly(&norm) {
            let hk = np_from_q(k, &h);
            let d = np_gcd(&g, &hk);
            let back = np_shift(&d, &(&theta * &k.from_int(s)));
            out.push(KFactor { poly: np_monic(&back), q_factor: h, shift: s });
        }
        out.sort_by(|a, b| {
            (a.degree(), canonical_key(&a.q_factor)).cmp(&(b.degree(), canonical_key(&b.q_factor)))
        });
        return out;
    }
    panic!("no squarefree norm found for the shifted polynomial");
}

/// Roots of a rational polynomial inside K, in canonical order of their linear factors.
pub fn roots_in(k: &NumberField, f: &QPoly) -> Vec<NfElem> {
    let mut out = vec![];
    for (g, _) in crate::qfactor::squarefree_decomposition(f) {
        for fac in factor_over(k, &g) {
            if fac.degree() == 1 {
                out.push(-&fac.poly[0]);
            }
        }
    }
    out
}

/// All automorphisms of K, identity first, the rest ordered by the image of the generator.
pub fn nf_automorphisms(k: &NumberField) -> Vec<FieldMorphism> {
    let images = k.0.automorphisms.get_or_init(|| {
        let mut roots: Vec<Vec<Rational>> =
            roots_in(k, k.min_poly()).into_iter().map(|r| r.into_coords()).collect();
        let id = k.gen().into_coords();
        roots.sort_by(|a, b| (a != &id).cmp(&(b != &id)).then_with(|| a.cmp(b)));
        roots
    });
    images.iter().map(|c| FieldMorphism::new_unchecked(k, k.elem(c.clone()))).collect()
}

/// The automorphism inducing complex conjugation under every complex embedding, if one
/// exists (the identity for totally real fields).  Checked with certified root location.
pub fn complex_conjugation(k: &NumberField) -> Option<FieldMorphism> {
    let c = k.0.conj.get_or_init(|| {
        let embs = k.embeddings();
        nf_automorphisms(k).into_iter().find_map(|s| {
            let img = s.image_of_generator();
            (0..k.degree())
                .all(|j| locate_root(img, j, embs, k.min_poly()) == embs[j].conj)
                .then(|| img.coords().to_vec())
        })
    });
    c.as_ref().map(|c| FieldMorphism::new_unchecked(k, k.elem(c.clone())))
}

/// Result of adjoining a root of an irreducible factor to K.
pub struct Adjunction {
    pub field: NumberField,
    pub embed: FieldMorphism,
    pub root: NfElem,
}

/// Adjoin a root of `factor` (an irreducible factor of `f` over K from `factor_over`).
pub fn adjoin_root(k: &NumberField, f: &QPoly, factor: &KFactor) -> Adjunction {
    let m = NumberField::new_unchecked(factor.q_factor.clone());
    let z = m.gen();
    let s = factor.shift;
    let a = np_from_q(&m, k.min_poly());
    let b = np_affine_compose(&f.monic(), &z, s);
    let g = np_gcd(&a, &b);
    assert_eq!(g.len(), 2, "primitive element relation must be linear");
    let theta_m = -&g[0];
    let embed = FieldMorphism::new_unchecked(k, theta_m.clone());
    let root = &z - &(&theta_m * &m.from_int(s));
    debug_assert!(eval_in(f, &root).is_zero());
    Adjunction { field: m, embed, root }
}

/// Embedding index of `a`'s image under the embedding `idx` of its field, located among the
/// certified roots of `target_roots_of` (a polynomial with root `a`).  Escalates precision.
pub fn locate_root(a: &NfElem, idx: usize, roots: &[Embedding], poly: &QPoly) -> usize {
    let k = a.field();
    let ap = a.as_poly();
    let mut bits = DEFAULT_BITS;
    loop {
        let (src, rts) = if bits == DEFAULT_BITS {
            (k.embeddings()[idx].disc.clone(), roots.to_vec())
        } else {
            (certified_embeddings(k, bits)[idx].disc.clone(), embed::isolate_roots(poly, bits))
        };
        let d = embed::eval_disc(&ap, &src, bits + 32);
        if let Some(j) = embed::locate(&d, &rts) {
            return j;
        }
        assert!(bits < 1 << 13, "could not separate embedding images");
        bits *= 2;
    }
}

/// Certified sign of the imaginary part of a's image under embedding `idx`.
pub fn im_sign(a: &NfElem, idx: usize) -> i32 {
    let k = a.field();
    let ap = a.as_poly();
    let mut bits = DEFAULT_BITS;
    loop {
        let src = if bits == DEFAULT_BITS {
            k.embeddings()[idx].disc.clone()
        } else {
            certified_embeddings(k, bits)[idx].disc.clone()
        };
        let d = embed::eval_disc(&ap, &src, bits + 32);
        if let Some(s) = d.im_sign() {
            return s;
        }
        if a.is_zero() {
            return 0;
        }
        assert!(bits < 1 << 13, "imaginary part not separated from zero");
        bits *= 2;
    }
}

/// Certified sign of a's image under a real embedding `idx`.
pub fn real_sign(a: &NfElem, idx: usize) -> i32 {
    let k = a.field();
    let ap = a.as_poly();
    if a.is_zero() {
        return 0;
    }
    let mut bits = DEFAULT_BITS;
    loop {
        let src = if bits == DEFAULT_BITS {
            k.embeddings()[idx].disc.clone()
        } else {
            certified_embeddings(k, bits)[idx].disc.clone()
        };
        let d = embed::eval_disc(&ap, &src, bits + 32);
        if let Some(s) = d.re_sign() {
            return s;
        }
        assert!(bits < 1 << 13, "real value not separated from zero");
        bits *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(c: &[i64]) -> QPoly {
        QPoly::from_ints(c)
    }

    #[test]
    fn arithmetic_in_gaussian_field() {
        let k = NumberField::from_ints(&[1, 0, 1]).unwrap();
        let i = k.gen();
        assert_eq!(&i * &i, k.from_int(-1));
        let a = k.elem_ints(&[3, 1]);
        assert_eq!(a.norm(), Rational::from_integer(10.into()));
        assert_eq!(a.trace(), Rational::from_integer(6.into()));
        let inv = a.inv().unwrap();
        assert!((&a * &inv).is_one());
        assert_eq!(a.char_poly(), q(&[10, -6, 1]));
    }

    #[test]
    fn norm_matches_char_poly() {
        let k = NumberField::from_ints(&[3, 0, 6, 0, 1]).unwrap();
        let a = k.elem_ints(&[1, 2, -1, 3]);
        let cp = a.char_poly();
        assert_eq!(a.norm(), cp.coeff(0));
        assert!(eval_in(&cp, &a).is_zero());
    }

    #[test]
    fn automorphism_counts() {
        let k = NumberField::from_ints(&[1, 0, 1]).unwrap();
        assert_eq!(nf_automorphisms(&k).len(), 2);
        let k = NumberField::from_ints(&[-2, 0, 0, 1]).unwrap();
        assert_eq!(nf_automorphisms(&k).len(), 1);
        let k = NumberField::from_ints(&[1, 1, 1, 1, 1]).unwrap();
        let auts = nf_automorphisms(&k);
        assert_eq!(auts.len(), 4);
        assert!(auts[0].is_identity());
        for a in &auts {
            for b in &auts {
                let c = a.compose(b).unwrap();
                assert!(auts.contains(&c));
            }
        }
    }

    #[test]
    fn factoring_over_extension() {
        // x^4+6x^2+3 over itself: two linear factors and a quadratic
        let k = NumberField::from_ints(&[3, 0, 6, 0, 1]).unwrap();
        let fs = factor_over(&k, k.min_poly());
        let degs: Vec<usize> = fs.iter().map(|f| f.degree()).collect();
        assert_eq!(degs, vec![1, 1, 2]);
        let adj = adjoin_root(&k, k.min_poly(), &fs[2]);
        assert_eq!(adj.field.degree(), 8);
        assert!(eval_in(k.min_poly(), &adj.root).is_zero());
        assert!(eval_in(k.min_poly(), adj.embed.image_of_generator()).is_zero());
    }

    #[test]
    fn morphism_preimage() {
        let k = NumberField::from_ints(&[1, 0, 1]).unwrap();
        let l = NumberField::from_ints(&[1, 0, 0, 0, 1]).unwrap(); // Q(zeta_8) contains i = x^2
        let phi = FieldMorphism::new(&k, l.elem_ints(&[0, 0, 1, 0])).unwrap();
        let a = k.elem_ints(&[2, 5]);
        let b = phi.apply(&a);
        assert_eq!(phi.preimage(&b).unwrap(), a);
        assert!(phi.preimage(&l.gen()).is_none());
    }
}
