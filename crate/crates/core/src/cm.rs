//! CM fields, CM types, reflex fields and reflex norms.
//!
//! All Galois-theoretic work happens inside the Galois closure L of E, viewed as a subfield
//! of C through its first complex embedding.  E itself sits in C through its embedding 0,
//! so a CM type is a set of embedding indices and the reflex norm lands in E.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{primes_up_to, squarefree_part};
use crate::closure::{galois_closure, GaloisClosure};
use crate::error::{Error, Result};
use crate::ideal::{prime_split, FracIdeal, PrimeIdeal};
use crate::linalg::{q_inverse, q_mul_vec, q_rank, QMat};
use crate::nf::{complex_conjugation, locate_root, roots_in, FieldMorphism, NfElem, NumberField};
use crate::order::Order;
use crate::units::{is_unit, unit_group};
use crate::Rational;

/// A CM field E with its complex conjugation and totally real subfield F.
#[derive(Clone, Debug)]
pub struct CMField {
    pub field: NumberField,
    pub conj: FieldMorphism,
    pub real_subfield: NumberField,
    /// F -> E.
    pub real_embed: FieldMorphism,
    /// Conjugate pairs of embedding indices (j, conj j) with j < conj j, sorted.
    pub pairs: Vec<(usize, usize)>,
}

impl CMField {
    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    /// Number of conjugate pairs, [F:Q].
    pub fn g(&self) -> usize {
        self.pairs.len()
    }

    /// Index of the complex conjugate of embedding j.
    pub fn conj_index(&self, j: usize) -> usize {
        self.field.embeddings()[j].conj
    }
}

/// Recognise a CM field: totally imaginary of even degree with an automorphism inducing
/// complex conjugation under every embedding.  `None` when the field is not CM.
pub fn cm_check(k: &NumberField) -> Option<CMField> {
    let n = k.degree();
    if n % 2 != 0 || !k.is_totally_imaginary() {
        return None;
    }
    let conj = complex_conjugation(k)?;
    if conj.is_identity() {
        return None;
    }
    let (real_subfield, real_embed) = fixed_subfield(k, &conj);
    let embs = k.embeddings();
    let mut pairs: Vec<(usize, usize)> = (0..n).filter(|&j| j < embs[j].conj).map(|j| (j, embs[j].conj)).collect();
    pairs.sort();
    Some(CMField { field: k.clone(), conj, real_subfield, real_embed, pairs })
}

/// The subfield of elements fixed by conj (of half degree), with a simple model when it is
/// Q or quadratic.
fn fixed_subfield(k: &NumberField, conj: &FieldMorphism) -> (NumberField, FieldMorphism) {
    let g = k.degree() / 2;
    if g == 1 {
        let q = NumberField::rationals();
        let e = FieldMorphism::new_unchecked(&q, k.zero());
        return (q, e);
    }
    let mut cands = vec![];
    let mut x = k.gen();
    for _ in 1..k.degree() {
        let cx = conj.apply(&x);
        cands.push(&x + &cx);
        cands.push(&x * &cx);
        x = &x * &k.gen();
    }
    let (beta, mp) = cands
        .into_iter()
        .map(|b| {
            let mp = b.min_poly();
            (b, mp)
        })
        .find(|(_, mp)| mp.deg() == g)
        .expect("the fixed field of an involution has half degree");
    if g == 2 {
        let (root, d) = quadratic_root(k, &beta, &mp);
        let f = NumberField::from_ints(&[-d, 0, 1]).expect("irreducible");
        return (f.clone(), FieldMorphism::new_unchecked(&f, root));
    }
    let f = NumberField::new(&mp).expect("minimal polynomial is irreducible");
    (f.clone(), FieldMorphism::new_unchecked(&f, beta))
}

/// For beta of degree 2 with minimal polynomial mp, an element r in Q(beta) with r^2 = d,
/// d squarefree.
fn quadratic_root(k: &NumberField, beta: &NfElem, mp: &crate::QPoly) -> (NfElem, i64) {
    let p = mp.coeff(1);
    let q = mp.coeff(0);
    let delta = &p * &p - Rational::from_integer(BigInt::from(4)) * &q;
    let dd = delta.numer() * delta.denom();
    let (d, s) = squarefree_part(&dd);
    let root = (beta * &k.from_int(2) + k.from_rational(p)).scale(&Rational::new(delta.denom().clone(), s));
    let d: i64 = d.try_into().expect("small discriminant");
    (root, d)
}

/// A CM type: one embedding index from each conjugate pair.
#[derive(Clone, Debug)]
pub struct CMType {
    pub cm: Arc<CMField>,
    pub phi: Vec<usize>,
}

impl PartialEq for CMType {
    fn eq(&self, other: &Self) -> bool {
        self.cm.field == other.cm.field && self.phi == other.phi
    }
}

impl CMType {
    pub fn new(cm: Arc<CMField>, mut phi: Vec<usize>) -> Result<CMType> {
        phi.sort_unstable();
        phi.dedup();
        let ok = phi.len() == cm.g() && cm.pairs.iter().all(|&(a, b)| phi.contains(&a) != phi.contains(&b));
        if !ok {
            return Err(Error::InvalidInput(format!("{phi:?} is not a CM type")));
        }
        Ok(CMType { cm, phi })
    }

    pub fn field(&self) -> &NumberField {
        &self.cm.field
    }

    pub fn contains(&self, j: usize) -> bool {
        self.phi.contains(&j)
    }

    /// The conjugate type, iota composed with every member.
    pub fn conjugate(&self) -> CMType {
        let mut phi: Vec<usize> = self.phi.iter().map(|&j| self.cm.conj_index(j)).collect();
        phi.sort_unstable();
        CMType { cm: self.cm.clone(), phi }
    }
}

/// All 2^g CM types.  Type number m takes the larger index of pair i exactly when bit i of m
/// is set, so type 0 contains embedding 0.
pub fn enumerate_cm_types(cm: &Arc<CMField>) -> Vec<CMType> {
    let g = cm.g();
    (0..1usize << g)
        .map(|m| {
            let mut phi: Vec<usize> =
                cm.pairs.iter().enumerate().map(|(i, &(a, b))| if m >> i & 1 == 1 { b } else { a }).collect();
            phi.sort_unstable();
            CMType { cm: cm.clone(), phi }
        })
        .collect()
}

/// The reflex field E* of (E, Phi) inside the Galois closure L, with its reflex type.
#[derive(Clone, Debug)]
pub struct ReflexData {
    pub cm_type: CMType,
    pub closure: Arc<GaloisClosure>,
    /// Automorphisms of L (indices into closure.autos) stabilising Phi.
    pub stabilizer: Vec<usize>,
    pub field: NumberField,
    /// E* -> L.
    pub incl: FieldMorphism,
    /// Embedding index of E* that realizes E* as the subfield of C cut out by the stabilizer.
    pub base_index: usize,
    pub reflex_type: CMType,
    /// One automorphism of L per member of the reflex type, restricting to it on E*.
    psi_autos: Vec<usize>,
}

fn stabilizes(perm: &[usize], phi: &[usize]) -> bool {
    phi.iter().all(|j| phi.contains(&perm[*j]))
}

fn max_abs_coeff(p: &crate::QPoly) -> Rational {
    p.coeffs().iter().map(|c| if c < &Rational::zero() { -c.clone() } else { c.clone() }).max().unwrap_or_default()
}

pub fn reflex_field(phi: &CMType) -> Result<ReflexData> {
    let e = phi.field();
    let cl = galois_closure(e)?;
    let gsize = cl.group_order();
    let stabilizer: Vec<usize> = (0..gsize).filter(|&s| stabilizes(&cl.perms[s], &phi.phi)).collect();
    let dstar = gsize / stabilizer.len();
    let n = e.degree();
    let fixed_emb = (0..n).find(|&j| stabilizer.iter().all(|&h| cl.perms[h][j] == j));
    let (field, incl) = match fixed_emb {
        Some(j) if dstar == n => (e.clone(), cl.embeds[j].clone()),
        _ => {
            // E* is generated by traces over Phi; use the candidate with the smallest polynomial
            let trace = |a: &NfElem| {
                phi.phi.iter().fold(cl.field.zero(), |s, &j| s + cl.embeds[j].apply(a))
            };
            let mut best: Option<(Rational, NfElem, crate::QPoly)> = None;
            let mut cands = vec![];
            let mut x = e.gen();
            for _ in 1..n {
                cands.push(x.clone());
                x = &x * &e.gen();
            }
            for i in 0..n - 1 {
                for j in i + 1..n - 1 {
                    cands.push(&cands[i] + &cands[j]);
                }
            }
            for a in &cands {
                let t = trace(a);
                let mp = t.min_poly();
                if mp.deg() != dstar {
                    continue;
                }
                let h = max_abs_coeff(&mp);
                if best.as_ref().map_or(true, |b| h < b.0) {
                    best = Some((h, t, mp));
                }
            }
            let (_, t, mp) = best.expect("some trace generates the reflex field");
            if dstar == 2 {
                let (root, d) = quadratic_root(&cl.field, &t, &mp);
                let f = NumberField::from_ints(&[-d, 0, 1]).expect("irreducible");
                (f.clone(), FieldMorphism::new_unchecked(&f, root))
            } else {
                let f = NumberField::new(&mp)?;
                (f.clone(), FieldMorphism::new_unchecked(&f, t))
            }
        }
    };
    let t = incl.image_of_generator().clone();
    let base_index = locate_root(&t, 0, field.embeddings(), field.min_poly());
    // Psi: restrictions to E* of sigma^{-1} for sigma with sigma|E in Phi
    let mut psi_autos = vec![];
    let mut images: Vec<NfElem> = vec![];
    let mut psi = vec![];
    for s in 0..gsize {
        if !phi.contains(cl.perms[s][0]) {
            continue;
        }
        let si = cl.inverse(s);
        let img = cl.autos[si].apply(&t);
        if images.contains(&img) {
            continue;
        }
        psi.push(locate_root(&img, 0, field.embeddings(), field.min_poly()));
        images.push(img);
        psi_autos.push(si);
    }
    let cm_star = Arc::new(cm_check(&field).ok_or(Error::NotCM)?);
    let reflex_type = CMType::new(cm_star, psi)?;
    Ok(ReflexData { cm_type: phi.clone(), closure: cl, stabilizer, field, incl, base_index, reflex_type, psi_autos })
}

impl ReflexData {
    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    /// The reflex norm N_Phi(b) = prod over the reflex type of psi(b), for b in E*, as an
    /// element of E.
    pub fn norm(&self, b: &NfElem) -> NfElem {
        assert!(b.field() == &self.field);
        let img = self.incl.apply(b);
        let prod = self
            .psi_autos
            .iter()
            .fold(self.closure.field.one(), |acc, &s| &acc * &self.closure.autos[s].apply(&img));
        self.closure.embeds[0].preimage(&prod).expect("the reflex norm lies in E")
    }

    /// The reflex norm of a fractional ideal of E*, as the exact [L:E*]-th root of the
    /// product formula applied to its extension to L.
    pub fn norm_ideal(&self, a: &FracIdeal) -> Result<FracIdeal> {
        let amb = Ambient::closure(self);
        amb.norm_reflex_ideal(a)
    }

    /// sigma fixes E* pointwise.
    pub fn fixes_reflex(&self, s: usize) -> bool {
        self.closure.autos[s].apply(self.incl.image_of_generator()) == *self.incl.image_of_generator()
    }
}

/// A field k inside C (through its embedding `kappa`) containing all conjugates of E, with
/// the embeddings of E and of E* into it compatible with those inclusions.
#[derive(Clone, Debug)]
pub struct Ambient {
    pub reflex: ReflexData,
    pub field: NumberField,
    pub kappa: usize,
    /// embeds[j]: E -> k, realizing complex embedding j of E.
    pub embeds: Vec<FieldMorphism>,
    /// E* -> k.
    pub reflex_incl: FieldMorphism,
}

impl Ambient {
    /// k = L, the Galois closure.
    pub fn closure(r: &ReflexData) -> Ambient {
        Ambient {
            reflex: r.clone(),
            field: r.closure.field.clone(),
            kappa: 0,
            embeds: r.closure.embeds.clone(),
            reflex_incl: r.incl.clone(),
        }
    }

    pub fn new(r: &ReflexData, k: &NumberField, kappa: usize) -> Result<Ambient> {
        if k == &r.closure.field && kappa == 0 {
            return Ok(Self::closure(r));
        }
        let e = r.cm_type.field();
        let n = e.degree();
        let mut embeds: Vec<Option<FieldMorphism>> = vec![None; n];
        for root in roots_in(k, e.min_poly()) {
            let j = locate_root(&root, kappa, e.embeddings(), e.min_poly());
            embeds[j] = Some(FieldMorphism::new_unchecked(e, root));
        }
        let embeds: Vec<FieldMorphism> = embeds.into_iter().collect::<Option<_>>().ok_or(Error::ConjugatesMissing)?;
        let reflex_incl = roots_in(k, r.field.min_poly())
            .into_iter()
            .find(|root| locate_root(root, kappa, r.field.embeddings(), r.field.min_poly()) == r.base_index)
            .map(|root| FieldMorphism::new_unchecked(&r.field, root))
            .ok_or(Error::ConjugatesMissing)?;
        Ok(Ambient { reflex: r.clone(), field: k.clone(), kappa, embeds, reflex_incl })
    }

    pub fn cm_field(&self) -> &NumberField {
        self.reflex.cm_type.field()
    }

    /// [k : E*].
    pub fn reflex_index(&self) -> usize {
        self.field.degree() / self.reflex.degree()
    }

    /// N_{k,Phi}(a) = prod over Phi of phi^{-1}(Nm_{k/phi E}(a)).
    pub fn norm(&self, a: &NfElem) -> Result<NfElem> {
        if a.is_zero() {
            return Err(Error::ZeroElement);
        }
        let e = self.cm_field();
        let mut out = e.one();
        for &j in &self.reflex.cm_type.phi {
            out = &out * &relative_norm(&self.embeds[j], a)?;
        }
        Ok(out)
    }

    /// The product formula on fractional ideals of k.
    pub fn norm_ideal(&self, a: &FracIdeal) -> Result<FracIdeal> {
        if a.field() != &self.field {
            return Err(Error::OrderMismatch);
        }
        let oe = Order::maximal(self.cm_field());
        let mut out = FracIdeal::unit(&oe);
        for &j in &self.reflex.cm_type.phi {
            out = out.mul(&relative_norm_ideal(&self.embeds[j], a)?)?;
        }
        Ok(out)
    }

    /// N_Phi of a fractional ideal of E*: the [k:E*]-th root of the product formula applied
    /// to the extension of the ideal to k.
    pub fn norm_reflex_ideal(&self, a: &FracIdeal) -> Result<FracIdeal> {
        if a.field() != &self.reflex.field {
            return Err(Error::OrderMismatch);
        }
        let ext = a.extend(&self.reflex_incl)?;
        let rhs = self.norm_ideal(&ext)?;
        ideal_root(&rhs, self.reflex_index())
    }
}

/// The exact r-th root of a fractional ideal.
pub fn ideal_root(a: &FracIdeal, r: usize) -> Result<FracIdeal> {
    if r == 1 {
        return Ok(a.clone());
    }
    let mut out = FracIdeal::unit(a.order());
    for (p, v) in a.factor() {
        if v % r as i64 != 0 {
            return Err(Error::RootNotExact(r));
        }
        out = out.mul(&p.ideal.pow(v / r as i64)?)?;
    }
    Ok(out)
}

/// phi^{-1}(Nm_{k / phi E}(a)) for phi: E -> k, as the determinant of multiplication by a
/// on k viewed as a vector space over phi(E).
pub fn relative_norm(phi: &FieldMorphism, a: &NfElem) -> Result<NfElem> {
    let e = phi.source();
    let k = phi.target();
    if a.field() != k {
        return Err(Error::OrderMismatch);
    }
    let n = e.degree();
    let nk = k.degree();
    let m = nk / n;
    if m == 1 {
        return Ok(phi.preimage(a).expect("phi is onto when the degrees agree"));
    }
    let pw: Vec<NfElem> = {
        let mut v = vec![k.one()];
        for _ in 1..n {
            let next = v.last().unwrap() * phi.image_of_generator();
            v.push(next);
        }
        v
    };
    // basis b_1..b_m of k over phi(E), chosen greedily among powers of the generator
    let mut basis: Vec<NfElem> = vec![];
    let mut vecs: QMat = vec![];
    let mut x = k.one();
    while basis.len() < m {
        let cand: Vec<Vec<Rational>> = pw.iter().map(|w| (w * &x).coords().to_vec()).collect();
        let mut trial = vecs.clone();
        trial.extend(cand.iter().cloned());
        if q_rank(&trial) == vecs.len() + n {
            vecs = trial;
            basis.push(x.clone());
        }
        x = &x * &k.gen();
    }
    // columns of mat are phi(e^l) b_i, ordered (i, l)
    let mat: QMat = (0..nk).map(|r| vecs.iter().map(|v| v[r].clone()).collect()).collect();
    let inv = q_inverse(&mat).expect("basis over the subfield");
    let elem = |y: &[Rational]| e.elem(y.to_vec());
    let mut a_mat: Vec<Vec<NfElem>> = vec![vec![e.zero(); m]; m];
    for (i, b) in basis.iter().enumerate() {
        let y = q_mul_vec(&inv, (a * b).coords());
        for (r, row) in a_mat.iter_mut().enumerate() {
            row[i] = elem(&y[r * n..(r + 1) * n]);
        }
    }
    nf_det(a_mat)
}

fn nf_det(mut a: Vec<Vec<NfElem>>) -> Result<NfElem> {
    let m = a.len();
    let k = a[0][0].field().clone();
    let mut det = k.one();
    for c in 0..m {
        let Some(p) = (c..m).find(|&r| !a[r][c].is_zero()) else {
            return Ok(k.zero());
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det = &det * &piv;
        let pinv = piv.inv()?;
        for r in c + 1..m {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] * &pinv;
            for cc in c..m {
                let t = &f * &a[c][cc];
                a[r][cc] = &a[r][cc] - &t;
            }
        }
    }
    Ok(det)
}

/// phi^{-1}(Nm_{k / phi E}(A)) for a fractional ideal A of k: each prime P above the prime
/// p = phi^{-1}(P) contributes p^{f(P|p)}.
pub fn relative_norm_ideal(phi: &FieldMorphism, a: &FracIdeal) -> Result<FracIdeal> {
    let e = phi.source();
    let oe = Order::maximal(e);
    if phi.target() == e && e.degree() == a.field().degree() {
        return FracIdeal::pullback(phi, a);
    }
    let mut out = FracIdeal::unit(&oe);
    for (big, v) in a.factor() {
        let small = PrimeIdeal::from_ideal(&FracIdeal::pullback(phi, &big.ideal)?)?;
        let f = big.f / small.f;
        out = out.mul(&small.ideal.pow(v * f as i64)?)?;
    }
    Ok(out)
}

/// Outcome of one identity over all sampled inputs.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub checked: usize,
    pub failures: usize,
    /// First failing input, when there is one.
    pub witness: Option<String>,
}

impl IdentityCheck {
    fn new(name: &str) -> Self {
        IdentityCheck { identity: name.to_string(), checked: 0, failures: 0, witness: None }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }
}

/// Options for the identity suite.  `corrupt` multiplies every ideal reflex norm by an extra
/// prime before comparing, as a negative control.
#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub prime_norm_bound: u64,
    pub corrupt: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 100, seed: 0, prime_norm_bound: 200, corrupt: false }
    }
}

/// A random nonzero element of the maximal order with coordinates in [-h, h].
pub fn random_integral(o: &Order, rng: &mut ChaCha8Rng, h: i64) -> NfElem {
    loop {
        let c: Vec<BigInt> = (0..o.degree()).map(|_| BigInt::from(rng.gen_range(-h..=h))).collect();
        if c.iter().any(|x| !x.is_zero()) {
            return o.elem_from_coords(&c);
        }
    }
}

/// Prime ideals of norm below `bound`.
pub fn primes_below(o: &Order, bound: u64) -> Result<Vec<PrimeIdeal>> {
    let mut out = vec![];
    for p in primes_up_to(bound) {
        for q in prime_split(o, &BigInt::from(p))? {
            if q.norm() < BigInt::from(bound) {
                out.push(q);
            }
        }
    }
    Ok(out)
}

/// Check the reflex norm identities in the ambient field k:
/// * conjugate product: N_{k,Phi}(a) iota(N_{k,Phi}(a)) = Nm_{k/Q}(a);
/// * tower: N_{k,Phi}(a) = N_Phi(Nm_{k/E*}(a)), with N_Phi from the reflex type;
/// * product formula on ideals: the ideal formula on (a) is the ideal of the element formula;
/// * ideal root: for primes p of E*, the product formula on the extension of p to k is an
///   exact [k:E*]-th power, equal to the root computed in the Galois closure;
/// * ideal conjugate product: N_Phi(p) iota(N_Phi(p)) = (Nm p);
/// * ideal tower: for primes P of k, N_{k,Phi}(P) = N_Phi(Nm_{k/E*} P);
/// * principal: N_Phi((b)) = (N_Phi(b)) for b in E*;
/// * multiplicativity of N_Phi on pairs of primes;
/// * units: N_{k,Phi} maps units of O_k to units of O_E.
pub fn verify_reflex_identities(amb: &Ambient, opts: &VerifyOptions) -> Result<IdentityReport> {
    let r = &amb.reflex;
    let e = amb.cm_field().clone();
    let oe = Order::maximal(&e);
    let ok_ = Order::maximal(&amb.field);
    let ostar = Order::maximal(&r.field);
    let conj = &r.cm_type.cm.conj;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut conj_prod = IdentityCheck::new("conjugate product");
    let mut tower = IdentityCheck::new("tower");
    let mut formula = IdentityCheck::new("product formula on ideals");
    let mut principal = IdentityCheck::new("principal ideals");
    for _ in 0..opts.samples {
        let a = random_integral(&ok_, &mut rng, 3);
        let na = amb.norm(&a)?;
        let lhs = &na * &conj.apply(&na);
        conj_prod.record(lhs == e.from_rational(a.norm()), || format!("a = {a}"));
        let down = relative_norm(&amb.reflex_incl, &a)?;
        tower.record(r.norm(&down) == na, || format!("a = {a}"));
        let ia = FracIdeal::principal(&ok_, &a)?;
        formula.record(amb.norm_ideal(&ia)? == FracIdeal::principal(&oe, &na)?, || format!("a = {a}"));
        let b = random_integral(&ostar, &mut rng, 2);
        let nb = amb.norm_reflex_ideal(&FracIdeal::principal(&ostar, &b)?)?;
        principal.record(nb == FracIdeal::principal(&oe, &r.norm(&b))?, || format!("b = {b}"));
    }
    let mut root = IdentityCheck::new("ideal root");
    let mut iconj = IdentityCheck::new("ideal conjugate product");
    let mut mult = IdentityCheck::new("ideal multiplicativity");
    let closure_amb = Ambient::closure(r);
    let same_as_closure = amb.field == closure_amb.field && amb.kappa == 0;
    let extra = prime_split(&oe, &BigInt::from(2))?.remove(0).ideal;
    let mut prev: Option<(PrimeIdeal, FracIdeal)> = None;
    for p in primes_below(&ostar, opts.prime_norm_bound)? {
        let np = match amb.norm_reflex_ideal(&p.ideal) {
            Ok(x) => x,
            Err(Error::RootNotExact(_)) => {
                root.record(false, || format!("p = {:?}", p.ideal));
                continue;
            }
            Err(e) => return Err(e),
        };
        let np = if opts.corrupt { np.mul(&extra)? } else { np };
        let agree = same_as_closure || closure_amb.norm_reflex_ideal(&p.ideal)? == np;
        root.record(agree, || format!("p = {:?}", p.ideal));
        let nm = FracIdeal::from_int(&oe, &p.norm())?;
        iconj.record(np.mul(&np.conjugate(conj))? == nm, || format!("p = {:?}", p.ideal));
        if let Some((q, nq)) = &prev {
            let both = amb.norm_reflex_ideal(&p.ideal.mul(&q.ideal)?)?;
            mult.record(both == np.mul(nq)?, || format!("p = {:?}, q = {:?}", p.ideal, q.ideal));
        }
        prev = Some((p, np));
    }
    let mut itower = IdentityCheck::new("ideal tower");
    let bound = opts.prime_norm_bound;
    for big in primes_below(&ok_, bound)? {
        let lhs = amb.norm_ideal(&big.ideal)?;
        let down = relative_norm_ideal(&amb.reflex_incl, &big.ideal)?;
        itower.record(lhs == amb.norm_reflex_ideal(&down)?, || format!("P = {:?}", big.ideal));
    }
    let mut units = IdentityCheck::new("units");
    units.record(amb.norm_ideal(&FracIdeal::unit(&ok_))?.is_one(), || "unit ideal".into());
    if let Ok(ug) = unit_group(&amb.field) {
        for u in std::iter::once(&ug.torsion).chain(ug.fundamental.iter()) {
            units.record(is_unit(&amb.norm(u)?), || format!("u = {u}"));
        }
    }
    Ok(IdentityReport { checks: vec![conj_prod, tower, formula, principal, root, iconj, mult, itower, units] })
}

/// Does E (through embedding 0) lie in the reflex field of (E*, Psi)?
pub fn reflex_of_reflex_contains(r: &ReflexData) -> Result<bool> {
    let rr = reflex_field(&r.reflex_type)?;
    let e = r.cm_type.field();
    Ok(roots_in(&rr.field, e.min_poly())
        .iter()
        .any(|root| locate_root(root, rr.base_index, e.embeddings(), e.min_poly()) == 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmf(c: &[i64]) -> Arc<CMField> {
        Arc::new(cm_check(&NumberField::from_ints(c).unwrap()).unwrap())
    }

    #[test]
    fn recognition() {
        let qi = cmf(&[1, 0, 1]);
        assert_eq!(qi.real_subfield.degree(), 1);
        assert!(cm_check(&NumberField::from_ints(&[-2, 0, 0, 1]).unwrap()).is_none());
        assert!(cm_check(&NumberField::from_ints(&[-2, 0, 1]).unwrap()).is_none());
        let q = cmf(&[3, 0, 6, 0, 1]);
        assert_eq!(q.real_subfield, NumberField::from_ints(&[-6, 0, 1]).unwrap());
        let z5 = cmf(&[1, 1, 1, 1, 1]);
        assert_eq!(z5.real_subfield, NumberField::from_ints(&[-5, 0, 1]).unwrap());
        // F embeds into E as the fixed field of conj
        let r = z5.real_embed.image_of_generator();
        assert_eq!(&z5.conj.apply(r), r);
    }

    #[test]
    fn type_counts() {
        assert_eq!(enumerate_cm_types(&cmf(&[1, 0, 1])).len(), 2);
        let types = enumerate_cm_types(&cmf(&[1, 1, 1, 1, 1]));
        assert_eq!(types.len(), 4);
        for t in &types {
            assert!(t.contains(0) || t.contains(t.cm.conj_index(0)));
            assert_eq!(t.conjugate().conjugate(), *t);
        }
    }

    #[test]
    fn reflex_degrees() {
        for t in enumerate_cm_types(&cmf(&[1, 0, 1])) {
            let r = reflex_field(&t).unwrap();
            assert_eq!(r.field, *t.field());
            assert_eq!(r.reflex_type.phi, t.phi);
        }
        for t in enumerate_cm_types(&cmf(&[1, 1, 1, 1, 1])) {
            let r = reflex_field(&t).unwrap();
            assert_eq!(r.degree(), 4);
            assert!(r.stabilizer == vec![0]);
        }
        for t in enumerate_cm_types(&cmf(&[3, 0, 6, 0, 1])) {
            let r = reflex_field(&t).unwrap();
            assert_eq!(r.degree(), 4);
            assert_eq!(r.closure.degree(), 8);
            assert_eq!(r.reflex_type.phi.len(), 2);
            assert!(reflex_of_reflex_contains(&r).unwrap());
        }
    }

    #[test]
    fn elementary_examples() {
        let t = enumerate_cm_types(&cmf(&[1, 0, 1])).remove(0);
        let r = reflex_field(&t).unwrap();
        let k = t.field().clone();
        let amb = Ambient::new(&r, &k, 0).unwrap();
        let a = k.elem_ints(&[3, 1]);
        assert_eq!(amb.norm(&a).unwrap(), a);
        let two = k.from_int(2);
        let n = amb.norm(&two).unwrap();
        assert_eq!(&n * &t.cm.conj.apply(&n), k.from_int(4));
    }

    #[test]
    fn stabilizer_fixes_reflex() {
        for c in [&[1i64, 1, 1, 1, 1][..], &[3, 0, 6, 0, 1]] {
            for t in enumerate_cm_types(&cmf(c)) {
                let r = reflex_field(&t).unwrap();
                for s in 0..r.closure.group_order() {
                    assert_eq!(r.stabilizer.contains(&s), r.fixes_reflex(s));
                }
            }
        }
    }

    #[test]
    fn suite_small() {
        let opts = VerifyOptions { samples: 10, seed: 1, prime_norm_bound: 60, corrupt: false };
        for c in [&[1i64, 0, 1][..], &[5, 0, 1], &[1, 1, 1, 1, 1]] {
            for t in enumerate_cm_types(&cmf(c)) {
                let r = reflex_field(&t).unwrap();
                let rep = verify_reflex_identities(&Ambient::closure(&r), &opts).unwrap();
                assert!(rep.all_pass(), "{c:?} {:?}: {rep:?}", t.phi);
            }
        }
        let t = enumerate_cm_types(&cmf(&[1, 0, 1])).remove(0);
        let r = reflex_field(&t).unwrap();
        let bad = VerifyOptions { corrupt: true, ..opts };
        assert!(!verify_reflex_identities(&Ambient::closure(&r), &bad).unwrap().all_pass());
    }
}
