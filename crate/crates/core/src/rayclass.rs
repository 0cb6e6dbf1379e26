//! Ray class groups of CM fields from the sequence units -> (O/m)^* -> C_m -> Cl -> 1, and
//! the class-level behaviour of the reflex norm on ray subgroups.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::primes_up_to;
use crate::classgroup::{class_group, is_principal};
use crate::cm::{random_integral, CMField, ReflexData};
use crate::error::{Error, Result};
use crate::ideal::{coprime_scale, prime_split, FracIdeal, PrimeIdeal};
use crate::linalg::smith;
use crate::nf::NfElem;
use crate::order::Order;
use crate::units::unit_group;

/// Largest modulus norm handled by residue enumeration.
pub const MODULUS_LIMIT: u64 = 10_000;

/// An integral ideal m of a totally imaginary field, with the primes dividing it.
#[derive(Clone, Debug)]
pub struct Modulus {
    pub ideal: FracIdeal,
    primes: Vec<PrimeIdeal>,
}

impl Modulus {
    pub fn new(ideal: FracIdeal) -> Result<Modulus> {
        if !ideal.is_integral() {
            return Err(Error::NonIntegralIdeal);
        }
        let nn = ideal.norm().to_integer();
        if nn > BigInt::from(MODULUS_LIMIT) {
            return Err(Error::ModulusTooLarge(nn.to_string()));
        }
        let primes = ideal.factor().into_iter().map(|(p, _)| p).collect();
        Ok(Modulus { ideal, primes })
    }

    /// The modulus (m) for a positive integer m.
    pub fn from_int(order: &Order, m: u64) -> Result<Modulus> {
        if m == 0 {
            return Err(Error::ZeroIdeal);
        }
        Modulus::new(FracIdeal::from_int(order, &BigInt::from(m))?)
    }

    pub fn norm(&self) -> BigInt {
        self.ideal.norm().to_integer()
    }

    pub fn primes(&self) -> &[PrimeIdeal] {
        &self.primes
    }

    /// No prime of the modulus occurs in the factorization of `a`.
    pub fn is_coprime(&self, a: &FracIdeal) -> bool {
        self.primes.iter().all(|p| a.valuation(p) == 0)
    }

    /// Is the integral element a unit modulo m?
    fn is_unit_residue(&self, x: &NfElem) -> bool {
        self.primes.iter().all(|p| !p.ideal.contains(x))
    }
}

/// Generators, relations and discrete logarithms of a finite abelian group given by its
/// elements and multiplication, built one cyclic extension at a time.
struct AbelianClosure<T> {
    gens: Vec<T>,
    rels: Vec<Vec<i64>>,
    dlog: HashMap<T, Vec<i64>>,
}

fn abelian_closure<T: Clone + Eq + Hash>(
    candidates: impl IntoIterator<Item = T>,
    one: T,
    mul: impl Fn(&T, &T) -> T,
) -> AbelianClosure<T> {
    let mut gens: Vec<T> = vec![];
    let mut rels: Vec<Vec<i64>> = vec![];
    let mut dlog: HashMap<T, Vec<i64>> = HashMap::from([(one, vec![])]);
    for g in candidates {
        if dlog.contains_key(&g) {
            continue;
        }
        let k = gens.len();
        let mut x = g.clone();
        let mut e = 1i64;
        while !dlog.contains_key(&x) {
            x = mul(&x, &g);
            e += 1;
        }
        let mut rel: Vec<i64> = dlog[&x].iter().map(|v| -v).collect();
        rel.resize(k, 0);
        rel.push(e);
        rels.push(rel);
        let old: Vec<(T, Vec<i64>)> = dlog.drain().collect();
        let mut power: Option<T> = None;
        for i in 0..e {
            for (h, v) in &old {
                let elem = match &power {
                    None => h.clone(),
                    Some(gp) => mul(gp, h),
                };
                let mut w = v.clone();
                w.resize(k, 0);
                w.push(i);
                dlog.insert(elem, w);
            }
            power = Some(match power {
                None => g.clone(),
                Some(gp) => mul(&gp, &g),
            });
        }
        gens.push(g);
    }
    let n = gens.len();
    for v in dlog.values_mut() {
        v.resize(n, 0);
    }
    for r in rels.iter_mut() {
        r.resize(n, 0);
    }
    AbelianClosure { gens, rels, dlog }
}

type Residue = Vec<BigInt>;

/// (O/m)^* with discrete logarithms.
struct ResidueUnits {
    order: Order,
    modulus: Modulus,
    group: AbelianClosure<Residue>,
}

impl ResidueUnits {
    fn new(order: &Order, modulus: &Modulus) -> ResidueUnits {
        let n = order.degree();
        let h = modulus.ideal.hnf();
        let sizes: Vec<u64> = (0..n).map(|i| h[i][i].to_u64().expect("small modulus")).collect();
        let total: u64 = sizes.iter().product();
        let mut units = vec![];
        for idx in 0..total {
            let mut x = idx;
            let v: Residue = sizes
                .iter()
                .map(|&s| {
                    let d = x % s;
                    x /= s;
                    BigInt::from(d)
                })
                .collect();
            if modulus.is_unit_residue(&order.elem_from_coords(&v)) {
                units.push(v);
            }
        }
        let one = modulus.ideal.reduce(&order.int_coords(&order.field().one()).expect("integral"));
        let m = modulus.ideal.clone();
        let o = order.clone();
        let group = abelian_closure(units, one, move |a, b| m.reduce(&o.mul_coords(a, b)));
        ResidueUnits { order: order.clone(), modulus: modulus.clone(), group }
    }

    fn cardinality(&self) -> usize {
        self.group.dlog.len()
    }

    /// Discrete logarithm of an element of O_m (v >= 0 at the primes of m) that is a unit
    /// there.
    fn log(&self, g: &NfElem) -> Result<Vec<i64>> {
        let o = &self.order;
        if let Some(c) = o.int_coords(g) {
            return self.group.dlog.get(&self.modulus.ideal.reduce(&c)).cloned().ok_or(Error::NotCoprime);
        }
        // g = (r g) / r with r in O meet g^{-1} O a unit modulo m
        let unit = FracIdeal::unit(o);
        let d = unit.add(&FracIdeal::principal(o, g)?)?.inverse()?;
        let basis = d.basis();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for attempt in 0..10_000 {
            let r = if attempt < basis.len() {
                basis[attempt].clone()
            } else {
                basis.iter().fold(o.field().zero(), |s, b| s + b * &o.field().from_int(rng.gen_range(-3..=3)))
            };
            if r.is_zero() || !self.modulus.is_unit_residue(&r) {
                continue;
            }
            let a = self.log(&(g * &r))?;
            let b = self.log(&r)?;
            return Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect());
        }
        Err(Error::NotCoprime)
    }
}

/// C_m = I^{S(m)} / P_{m,1} as Z^r / relations, with the Smith form used for canonical
/// coordinates.
#[derive(Debug)]
pub struct RayClassGroup {
    pub field: Arc<CMField>,
    pub modulus: Modulus,
    /// Ideals coprime to m generating the group: residue generators (as principal ideals)
    /// followed by class group generators.
    pub generators: Vec<FracIdeal>,
    pub rel_matrix: Vec<Vec<BigInt>>,
    pub elementary_divisors: Vec<BigInt>,
    pub order: BigInt,
    /// |(O/m)^*|, |image of the units|, h.
    pub residue_units: usize,
    pub unit_image: usize,
    pub class_number: usize,
    residues: ResidueUnitsHandle,
    class_inv: Vec<FracIdeal>,
    /// Per class: its coordinates on the class generators and a generator of
    /// the j-th class representative over prod C_i^{w_i}.
    class_data: Vec<(Vec<i64>, NfElem)>,
    v: Vec<Vec<BigInt>>,
}

struct ResidueUnitsHandle(ResidueUnits);

impl std::fmt::Debug for ResidueUnitsHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ResidueUnits({})", self.0.cardinality())
    }
}

/// Element of a ray class group in Smith coordinates (one entry per nontrivial elementary
/// divisor).
pub type RayClass = Vec<BigInt>;

fn scaled_coprime(a: &FracIdeal, m: &Modulus) -> Result<FracIdeal> {
    let min = m.ideal.min_integer().clone();
    if min.is_one() {
        return Ok(a.clone());
    }
    Ok(coprime_scale(a, &min)?.1)
}

pub fn ray_class_group(k: &Arc<CMField>, modulus: &Modulus) -> Result<RayClassGroup> {
    let o = Order::maximal(&k.field);
    if modulus.ideal.order() != &o {
        return Err(Error::OrderMismatch);
    }
    let units = unit_group(&k.field)?;
    let res = ResidueUnits::new(&o, modulus);
    let cg = class_group(&o)?;
    let h = cg.class_number();
    // class group structure on the representative indices
    let table = cg.table.clone();
    let cls = abelian_closure(0..h, 0usize, move |a, b| table[*a][*b]);
    let class_ideals: Vec<FracIdeal> = cg.reps.iter().map(|r| scaled_coprime(r, modulus)).collect::<Result<_>>()?;
    let class_inv: Vec<FracIdeal> = class_ideals.iter().map(|a| a.inverse()).collect::<Result<_>>()?;
    let cgens: Vec<FracIdeal> = cls.gens.iter().map(|&j| class_ideals[j].clone()).collect();
    let l = cgens.len();
    let ku = res.group.gens.len();
    let ideal_power = |w: &[i64]| -> Result<FracIdeal> {
        let mut out = FracIdeal::unit(&o);
        for (c, &e) in cgens.iter().zip(w) {
            out = out.mul(&c.pow(e)?)?;
        }
        Ok(out)
    };
    let mut class_data = vec![];
    for j in 0..h {
        let w = cls.dlog[&j].clone();
        let q = class_ideals[j].div(&ideal_power(&w)?)?;
        let g = is_principal(&q)?.expect("same class");
        class_data.push((w, g));
    }
    let mut rels: Vec<Vec<i64>> = vec![];
    for r in &res.group.rels {
        let mut row = r.clone();
        row.resize(ku + l, 0);
        rels.push(row);
    }
    let mut unit_gens = vec![units.torsion.clone()];
    unit_gens.extend(units.fundamental.iter().cloned());
    for u in &unit_gens {
        let mut row = res.log(u)?;
        row.resize(ku + l, 0);
        rels.push(row);
    }
    for (i, r) in cls.rels.iter().enumerate() {
        // prod C^r is principal: (gamma); its residue coordinates move to the left
        let q = ideal_power(r)?;
        let gamma = is_principal(&q)?.expect("relation of the class group");
        let mut row: Vec<i64> = res.log(&gamma)?.iter().map(|x| -x).collect();
        row.extend(r.iter().copied());
        debug_assert_eq!(row[ku + i], r[i]);
        rels.push(row);
    }
    let n = ku + l;
    let rel_matrix: Vec<Vec<BigInt>> = rels.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let (diag, _, v) = if n == 0 { (vec![], vec![], vec![]) } else { smith(&rel_matrix) };
    let mut elementary_divisors: Vec<BigInt> = diag.iter().take(n).map(|d| d.abs()).collect();
    elementary_divisors.resize(n, BigInt::zero());
    if elementary_divisors.iter().any(|d| d.is_zero()) {
        return Err(Error::IdentityViolated("ray class group relations are not of full rank".into()));
    }
    let order = elementary_divisors.iter().fold(BigInt::one(), |a, b| a * b);
    let unit_image = {
        let mut seen: std::collections::HashSet<Residue> = std::collections::HashSet::new();
        for z in units.roots_of_unity() {
            let base = modulus.ideal.reduce(&o.int_coords(&z).expect("integral"));
            seen.insert(base);
        }
        if let Some(eta) = units.fundamental.first() {
            // the image is generated by the roots of unity and eta
            let mut frontier: Vec<Residue> = seen.iter().cloned().collect();
            let e = modulus.ideal.reduce(&o.int_coords(eta).expect("integral"));
            while let Some(x) = frontier.pop() {
                let y = modulus.ideal.reduce(&o.mul_coords(&x, &e));
                if seen.insert(y.clone()) {
                    frontier.push(y);
                }
            }
        }
        seen.len()
    };
    let mut generators: Vec<FracIdeal> = vec![];
    for g in &res.group.gens {
        generators.push(FracIdeal::principal(&o, &o.elem_from_coords(g))?);
    }
    generators.extend(cgens);
    Ok(RayClassGroup {
        field: k.clone(),
        modulus: modulus.clone(),
        generators,
        rel_matrix,
        elementary_divisors,
        order,
        residue_units: res.cardinality(),
        unit_image,
        class_number: h,
        residues: ResidueUnitsHandle(res),
        class_inv,
        class_data,
        v,
    })
}

impl RayClassGroup {
    /// Exponent vector on `generators`.
    pub fn log(&self, a: &FracIdeal) -> Result<Vec<i64>> {
        if !self.modulus.is_coprime(a) {
            return Err(Error::NotCoprime);
        }
        for (j, inv) in self.class_inv.iter().enumerate() {
            let Some(g) = is_principal(&a.mul(inv)?)? else { continue };
            // a = (g) class_ideals[j] = (g h_j) prod C^w
            let (w, hj) = &self.class_data[j];
            let mut out = self.residues.0.log(&(&g * hj))?;
            out.extend(w.iter().copied());
            return Ok(out);
        }
        unreachable!("class representatives cover the class group")
    }

    fn canonical(&self, x: &[i64]) -> RayClass {
        let n = x.len();
        (0..n)
            .filter(|&c| !self.elementary_divisors[c].is_one())
            .map(|c| {
                let s = (0..n).fold(BigInt::zero(), |s, r| s + BigInt::from(x[r]) * &self.v[r][c]);
                s.mod_floor(&self.elementary_divisors[c])
            })
            .collect()
    }

    /// The class of an ideal coprime to the modulus.
    pub fn ray_class(&self, a: &FracIdeal) -> Result<RayClass> {
        Ok(self.canonical(&self.log(a)?))
    }

    pub fn identity(&self) -> RayClass {
        self.elementary_divisors.iter().filter(|d| !d.is_one()).map(|_| BigInt::zero()).collect()
    }

    pub fn add(&self, a: &RayClass, b: &RayClass) -> RayClass {
        let divs: Vec<&BigInt> = self.elementary_divisors.iter().filter(|d| !d.is_one()).collect();
        a.iter().zip(b).zip(divs).map(|((x, y), d)| (x + y).mod_floor(d)).collect()
    }

    /// The nontrivial elementary divisors.
    pub fn invariants(&self) -> Vec<BigInt> {
        self.elementary_divisors.iter().filter(|d| !d.is_one()).cloned().collect()
    }

    /// |C_m| |image of units| = |(O/m)^*| h.
    pub fn sequence_holds(&self) -> bool {
        &self.order * BigInt::from(self.unit_image) == BigInt::from(self.residue_units * self.class_number)
    }

    pub fn report(&self) -> GroupReport {
        GroupReport {
            order: self.order.to_string(),
            elementary_divisors: self.invariants().iter().map(|d| d.to_string()).collect(),
            modulus: crate::wire::IdealWire::from_ideal(&self.modulus.ideal),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupReport {
    pub order: String,
    pub elementary_divisors: Vec<String>,
    pub modulus: crate::wire::IdealWire,
}

/// Outcome of the transport check on one modulus of E*.
#[derive(Clone, Debug, Serialize)]
pub struct TransportReport {
    /// Norm and Hermite basis of the modulus of E* that was finally used.
    pub modulus_used: crate::wire::IdealWire,
    pub escalations: usize,
    pub samples: usize,
    /// Sampled beta with nontrivial [N_Phi((beta))].
    pub nontrivial: usize,
    /// Classes of N_Phi on random pairs failing to multiply.
    pub multiplicativity_failures: usize,
    pub congruence: bool,
}

impl TransportReport {
    pub fn passed(&self) -> bool {
        self.nontrivial == 0 && self.multiplicativity_failures == 0
    }
}

#[derive(Clone, Debug)]
pub struct TransportOptions {
    pub samples: usize,
    pub seed: u64,
    /// Escalation steps allowed (each multiplies the modulus by the next small prime).
    pub max_escalations: usize,
    /// Sample beta with beta = 1 mod m' (false: beta merely coprime to m').
    pub congruence: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { samples: 50, seed: 0, max_escalations: 3, congruence: true }
    }
}

/// Random element of O with beta = 1 modulo the ideal (or merely prime to it).
fn sample_beta(o: &Order, m: &Modulus, rng: &mut ChaCha8Rng, congruence: bool) -> NfElem {
    loop {
        let beta = if congruence {
            let mu_basis = m.ideal.basis();
            let mu = mu_basis.iter().fold(o.field().zero(), |s, b| s + b * &o.field().from_int(rng.gen_range(-4..=4)));
            &o.field().one() + &mu
        } else {
            random_integral(o, rng, 6)
        };
        if !beta.is_zero() && m.is_unit_residue(&beta) {
            return beta;
        }
    }
}

/// A random ideal of E* of small norm coprime to m.
fn sample_ideal(o: &Order, m: &Modulus, rng: &mut ChaCha8Rng) -> Result<FracIdeal> {
    let mut primes = vec![];
    for p in primes_up_to(40) {
        for q in prime_split(o, &BigInt::from(p))? {
            if m.is_coprime(&q.ideal) {
                primes.push(q);
            }
        }
    }
    let mut out = FracIdeal::unit(o);
    for _ in 0..rng.gen_range(1..=3) {
        out = out.mul(&primes[rng.gen_range(0..primes.len())].ideal)?;
    }
    Ok(out)
}

/// b -> [N_Phi(b)] from ideals of E* prime to m' into C_m(E): the image of principal (beta)
/// with beta = 1 mod m' is trivial, and the map is multiplicative on random pairs.  The
/// modulus m' is multiplied by successive small primes until the samples pass or the
/// escalation budget runs out.
pub fn reflex_transport_check(
    r: &ReflexData,
    m: u64,
    m_reflex: &Modulus,
    opts: &TransportOptions,
) -> Result<TransportReport> {
    let e = r.cm_type.cm.clone();
    let oe = Order::maximal(&e.field);
    let os = Order::maximal(&r.field);
    if m_reflex.ideal.order() != &os {
        return Err(Error::OrderMismatch);
    }
    let g = ray_class_group(&e, &Modulus::from_int(&oe, m)?)?;
    let mut modulus = m_reflex.clone();
    let extra: Vec<u64> = primes_up_to(50).into_iter().filter(|p| m % p == 0 || p <= &7).collect();
    let mut escalations = 0;
    loop {
        let report = transport_once(r, &g, &modulus, opts, escalations)?;
        if report.passed() || !opts.congruence || escalations >= opts.max_escalations {
            return Ok(report);
        }
        let p = extra[escalations % extra.len()];
        let next = modulus.ideal.mul(&FracIdeal::from_int(&os, &BigInt::from(p))?)?;
        modulus = Modulus::new(next)?;
        escalations += 1;
    }
}

fn transport_once(
    r: &ReflexData,
    g: &RayClassGroup,
    modulus: &Modulus,
    opts: &TransportOptions,
    escalations: usize,
) -> Result<TransportReport> {
    let oe = Order::maximal(r.cm_type.field());
    let os = Order::maximal(&r.field);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let id = g.identity();
    let mut nontrivial = 0;
    for _ in 0..opts.samples {
        let beta = sample_beta(&os, modulus, &mut rng, opts.congruence);
        let img = FracIdeal::principal(&oe, &r.norm(&beta))?;
        if g.ray_class(&img)? != id {
            nontrivial += 1;
        }
    }
    let mut multiplicativity_failures = 0;
    for _ in 0..opts.samples.min(20) {
        let b1 = sample_ideal(&os, modulus, &mut rng)?;
        let b2 = sample_ideal(&os, modulus, &mut rng)?;
        let c1 = g.ray_class(&r.norm_ideal(&b1)?)?;
        let c2 = g.ray_class(&r.norm_ideal(&b2)?)?;
        let c12 = g.ray_class(&r.norm_ideal(&b1.mul(&b2)?)?)?;
        if g.add(&c1, &c2) != c12 {
            multiplicativity_failures += 1;
        }
    }
    Ok(TransportReport {
        modulus_used: crate::wire::IdealWire::from_ideal(&modulus.ideal),
        escalations,
        samples: opts.samples,
        nontrivial,
        multiplicativity_failures,
        congruence: opts.congruence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{cm_check, enumerate_cm_types, reflex_field};
    use crate::nf::NumberField;

    fn cm(c: &[i64]) -> Arc<CMField> {
        Arc::new(cm_check(&NumberField::from_ints(c).unwrap()).unwrap())
    }

    #[test]
    fn gaussian_examples() {
        let k = cm(&[1, 0, 1]);
        let o = Order::maximal(&k.field);
        let g1 = ray_class_group(&k, &Modulus::from_int(&o, 1).unwrap()).unwrap();
        assert_eq!(g1.order, BigInt::one());
        let g5 = ray_class_group(&k, &Modulus::from_int(&o, 5).unwrap()).unwrap();
        assert_eq!(g5.order, BigInt::from(4));
        assert_eq!((g5.residue_units, g5.unit_image), (16, 4));
        assert!(g5.sequence_holds());
        let seven = FracIdeal::from_int(&o, &BigInt::from(7)).unwrap();
        let c = g5.ray_class(&seven).unwrap();
        let c4 = (0..4).fold(g5.identity(), |acc, _| g5.add(&acc, &c));
        assert_eq!(c4, g5.identity());
        let a = FracIdeal::principal(&o, &k.field.elem_ints(&[1, 5])).unwrap();
        assert_eq!(g5.ray_class(&a).unwrap(), g5.identity());
        assert_eq!(g5.ray_class(&FracIdeal::unit(&o)).unwrap(), g5.identity());
        let five = FracIdeal::from_int(&o, &BigInt::from(5)).unwrap();
        assert!(matches!(g5.ray_class(&five), Err(Error::NotCoprime)));
    }

    #[test]
    fn imaginary_quadratic_with_class_group() {
        let k = cm(&[5, 0, 1]);
        let o = Order::maximal(&k.field);
        let g = ray_class_group(&k, &Modulus::from_int(&o, 1).unwrap()).unwrap();
        assert_eq!(g.order, BigInt::from(2));
        let g3 = ray_class_group(&k, &Modulus::from_int(&o, 3).unwrap()).unwrap();
        assert!(g3.sequence_holds());
        let p2 = FracIdeal::from_gens(&o, &[k.field.from_int(2), k.field.elem_ints(&[1, 1])]).unwrap();
        let p7 = prime_split(&o, &BigInt::from(7)).unwrap()[0].ideal.clone();
        let a = g3.ray_class(&p2).unwrap();
        let b = g3.ray_class(&p7).unwrap();
        assert_eq!(g3.add(&a, &b), g3.ray_class(&p2.mul(&p7).unwrap()).unwrap());
    }

    #[test]
    fn transport_on_gaussians() {
        let k = cm(&[1, 0, 1]);
        let t = enumerate_cm_types(&k).remove(0);
        let r = reflex_field(&t).unwrap();
        let os = Order::maximal(&r.field);
        let m3 = Modulus::from_int(&os, 3).unwrap();
        let rep = reflex_transport_check(&r, 3, &m3, &TransportOptions { samples: 30, ..Default::default() }).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.escalations, 0);
        let neg = reflex_transport_check(
            &r,
            3,
            &m3,
            &TransportOptions { samples: 30, congruence: false, ..Default::default() },
        )
        .unwrap();
        assert!(neg.nontrivial > 0);
    }
}
