use std::sync::{Arc, OnceLock};

use cmreflex::arith::primes_up_to;
use cmreflex::classgroup::{ideals_up_to, is_principal};
use cmreflex::cm::{cm_check, enumerate_cm_types, random_integral, reflex_field, CMField, CMType, ReflexData};
use cmreflex::embed::{eval_disc, isolate_roots, locate};
use cmreflex::ideal::{prime_split, FracIdeal};
use cmreflex::nf::{nf_automorphisms, NumberField};
use cmreflex::order::Order;
use cmreflex::polar::{find_riemann_element, quadruples_equivalent, validate_quadruple, TypeQuadruple};
use cmreflex::qfactor::factor_rational_poly;
use cmreflex::rayclass::{ray_class_group, Modulus, RayClassGroup};
use cmreflex::units::{is_unit, unit_group};
use cmreflex::{BigInt, Error, QPoly, Rational};
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CORPUS: [&[i64]; 4] = [&[1, 0, 1], &[5, 0, 1], &[1, 1, 1, 1, 1], &[3, 0, 6, 0, 1]];

fn field(c: &[i64]) -> NumberField {
    NumberField::from_ints(c).unwrap()
}

fn cm(c: &[i64]) -> Arc<CMField> {
    Arc::new(cm_check(&field(c)).unwrap())
}

fn orders() -> &'static Vec<Order> {
    static O: OnceLock<Vec<Order>> = OnceLock::new();
    O.get_or_init(|| CORPUS.iter().map(|c| Order::maximal(&field(c))).collect())
}

fn ideal_from(o: &Order, seed: u64, h: i64) -> FracIdeal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_integral(o, &mut rng, h);
    let n = o.field().from_int((seed % 11 + 1) as i64);
    FracIdeal::from_gens(o, &[x, n]).unwrap()
}

fn qpoly(c: &[i64]) -> QPoly {
    QPoly::new(c.iter().map(|&x| Rational::from_integer(x.into())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn factors_multiply_back(
        lead in 1i64..6,
        parts in prop::collection::vec(prop::collection::vec(-9i64..10, 1..5), 1..4),
    ) {
        let mut f = qpoly(&[lead]);
        for p in &parts {
            let mut c = p.clone();
            c.push(1);
            f = &f * &qpoly(&c);
        }
        let mut back = qpoly(&[1]);
        for (g, m) in factor_rational_poly(&f) {
            prop_assert!(g.is_monic());
            for _ in 0..m {
                back = &back * &g;
            }
        }
        prop_assert_eq!(back, f.monic());
    }

    #[test]
    fn ideal_norms_multiply(k in 0usize..4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let o = &orders()[k];
        let a = ideal_from(o, s1, 4);
        let b = ideal_from(o, s2, 4).inverse().unwrap();
        prop_assert_eq!(a.mul(&b).unwrap().norm(), a.norm() * b.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ideal_times_inverse_is_one(k in 0usize..4, s in any::<u64>(), e in -3i64..3) {
        let o = &orders()[k];
        let a = ideal_from(o, s, 5).pow(e).unwrap();
        prop_assert!(a.mul(&a.inverse().unwrap()).unwrap().is_one());
    }

    #[test]
    fn ray_class_is_additive(s1 in any::<u64>(), s2 in any::<u64>()) {
        static G: OnceLock<RayClassGroup> = OnceLock::new();
        let g = G.get_or_init(|| {
            let k = cm(&[5, 0, 1]);
            let o = Order::maximal(&k.field);
            ray_class_group(&k, &Modulus::from_int(&o, 12).unwrap()).unwrap()
        });
        let o = g.modulus.ideal.order();
        let pool: Vec<FracIdeal> = ideals_up_to(o, 80).unwrap().into_iter().filter(|a| g.modulus.is_coprime(a)).collect();
        let a = &pool[(s1 % pool.len() as u64) as usize];
        let b = &pool[(s2 % pool.len() as u64) as usize].inverse().unwrap();
        let ab = a.mul(b).unwrap();
        prop_assert_eq!(g.add(&g.ray_class(a).unwrap(), &g.ray_class(b).unwrap()), g.ray_class(&ab).unwrap());
    }
}

fn reflex_data() -> &'static Vec<ReflexData> {
    static R: OnceLock<Vec<ReflexData>> = OnceLock::new();
    R.get_or_init(|| {
        [&[1i64, 0, 1][..], &[5, 0, 1], &[1, 1, 1, 1, 1]]
            .iter()
            .flat_map(|c| enumerate_cm_types(&cm(c)))
            .map(|t| reflex_field(&t).unwrap())
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflex_norm_of_ideals_is_multiplicative(i in 0usize..8, s1 in any::<u64>(), s2 in any::<u64>()) {
        let r = &reflex_data()[i % reflex_data().len()];
        let o = Order::maximal(&r.field);
        let a = ideal_from(&o, s1, 3);
        let b = ideal_from(&o, s2, 3);
        let lhs = r.norm_ideal(&a.mul(&b).unwrap()).unwrap();
        prop_assert_eq!(lhs, r.norm_ideal(&a).unwrap().mul(&r.norm_ideal(&b).unwrap()).unwrap());
    }

    #[test]
    fn totally_positive_multiples_stay_valid(i in 0usize..8, x in -6i64..7, y in -6i64..7, u in -6i64..7, v in -6i64..7) {
        let types = quartic_types();
        let t = &types[i % types.len()];
        let cm = &t.cm;
        let f = &cm.real_subfield;
        // a sum of two nonzero squares in F is totally positive
        let b = f.elem_ints(&[x, y]);
        let c = f.elem_ints(&[u, v]);
        prop_assume!(!b.is_zero() && !c.is_zero());
        let a = cm.real_embed.apply(&(&(&b * &b) + &(&c * &c)));
        let alpha = find_riemann_element(t).unwrap().alpha;
        let o = Order::maximal(t.field());
        let q = TypeQuadruple { cm_type: t.clone(), ideal: FracIdeal::unit(&o), t: &a * &alpha };
        prop_assert!(validate_quadruple(&q).0);
    }

    #[test]
    fn quadruple_equivalence_is_an_equivalence(i in 0usize..6, s in any::<u64>()) {
        let types = quadratic_types();
        let t = &types[i % types.len()];
        let o = Order::maximal(t.field());
        let conj = &t.cm.conj;
        let alpha = find_riemann_element(t).unwrap().alpha;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut next = |q: &TypeQuadruple| {
            let b = random_integral(&o, &mut rng, 3);
            TypeQuadruple {
                cm_type: t.clone(),
                ideal: q.ideal.scale(&b).unwrap(),
                t: &q.t * &(&b * &conj.apply(&b)).inv().unwrap(),
            }
        };
        let q1 = TypeQuadruple { cm_type: t.clone(), ideal: ideal_from(&o, s, 3), t: alpha.clone() };
        let q2 = next(&q1);
        let q3 = next(&q2);
        prop_assert!(quadruples_equivalent(&q1, &q1).unwrap().is_some());
        let w12 = quadruples_equivalent(&q1, &q2).unwrap().unwrap();
        let w21 = quadruples_equivalent(&q2, &q1).unwrap().unwrap();
        let w23 = quadruples_equivalent(&q2, &q3).unwrap().unwrap();
        // witnesses are determined up to units with u iota(u) = 1, so compare their ideals
        prop_assert!(is_unit(&(&w12 * &w21)));
        let w13 = &w12 * &w23;
        prop_assert_eq!(q1.ideal.scale(&w13).unwrap(), q3.ideal.clone());
        prop_assert_eq!(&q1.t * &(&w13 * &conj.apply(&w13)).inv().unwrap(), q3.t.clone());
        let q4 = TypeQuadruple { t: q1.t.scale(&Rational::from_integer(2.into())), ..q1.clone() };
        prop_assert!(quadruples_equivalent(&q1, &q4).unwrap().is_none());
    }
}

fn quartic_types() -> Vec<CMType> {
    [&[1i64, 1, 1, 1, 1][..], &[3, 0, 6, 0, 1]].iter().flat_map(|c| enumerate_cm_types(&cm(c))).collect()
}

fn quadratic_types() -> Vec<CMType> {
    [&[1i64, 0, 1][..], &[5, 0, 1], &[1, 1, 1], &[14, 0, 1]].iter().flat_map(|c| enumerate_cm_types(&cm(c))).collect()
}

#[test]
fn reflex_norms_of_units_are_units() {
    for r in reflex_data() {
        let u = unit_group(&r.field).unwrap();
        for e in u.fundamental.iter().chain(std::iter::once(&u.torsion)) {
            assert!(is_unit(&r.norm(e)));
        }
        let o = Order::maximal(&r.field);
        assert!(r.norm_ideal(&FracIdeal::unit(&o)).unwrap().is_one());
    }
}

#[test]
fn automorphisms_form_a_group() {
    for c in CORPUS.iter().copied().chain([&[-2i64, 0, 0, 1][..]]) {
        let k = field(c);
        let auts = nf_automorphisms(&k);
        let gens: Vec<_> = auts.iter().map(|a| a.image_of_generator().clone()).collect();
        for s in &auts {
            assert!(auts.iter().any(|t| t.compose(s).unwrap().is_identity()));
            for t in &auts {
                assert!(gens.contains(s.compose(t).unwrap().image_of_generator()));
            }
        }
    }
}

#[test]
fn automorphisms_permute_embeddings() {
    for c in CORPUS {
        let k = field(c);
        let roots = isolate_roots(k.min_poly(), 128);
        for s in nf_automorphisms(&k) {
            let img = s.image_of_generator().as_poly();
            let mut hit: Vec<usize> =
                roots.iter().map(|r| locate(&eval_disc(&img, &r.disc, 128), &roots).expect("lands on a root")).collect();
            hit.sort();
            hit.dedup();
            assert_eq!(hit.len(), roots.len());
        }
    }
}

#[test]
fn refinement_keeps_roots() {
    for c in CORPUS.iter().copied().chain([&[-2i64, 0, 0, 1][..], &[1, 0, -10, 0, 1]]) {
        let f = field(c).min_poly().clone();
        let coarse = isolate_roots(&f, 64);
        let fine = isolate_roots(&f, 256);
        assert_eq!(coarse.len(), fine.len());
        for (j, r) in fine.iter().enumerate() {
            assert_eq!(locate(&r.disc, &coarse), Some(j));
        }
    }
}

#[test]
fn splitting_is_complete() {
    for o in orders() {
        let n = o.degree() as u32;
        for p in primes_up_to(199) {
            let pb = BigInt::from(p);
            let primes = match prime_split(o, &pb) {
                Ok(ps) => ps,
                Err(Error::IndexDivisible(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(primes.iter().map(|q| q.e * q.f).sum::<u32>(), n);
            let prod = primes.iter().fold(FracIdeal::unit(o), |acc, q| acc.mul(&q.ideal.pow(q.e as i64).unwrap()).unwrap());
            assert_eq!(prod, FracIdeal::from_int(o, &pb).unwrap());
        }
    }
}

/// Reduce a positive definite form; the ideal class is trivial exactly when the reduced form
/// represents 1.
fn reduce(mut a: i128, mut b: i128, mut c: i128) -> (i128, i128, i128) {
    loop {
        if b > a || b <= -a {
            let k = (a - b).div_euclid(2 * a);
            c += k * k * a + k * b;
            b += 2 * k * a;
        } else if c < a {
            std::mem::swap(&mut a, &mut c);
            b = -b;
        } else if a == c && b < 0 {
            b = -b;
        } else {
            return (a, b, c);
        }
    }
}

fn norm_form(a: &FracIdeal) -> (i128, i128, i128) {
    let w = a.basis();
    let n = a.norm();
    let q = |x: &cmreflex::nf::NfElem| (x.norm() / &n).to_integer().to_i128().unwrap();
    let (p, r) = (q(&w[0]), q(&w[1]));
    (p, q(&(&w[0] + &w[1])) - p - r, r)
}

#[test]
fn principality_agrees_with_forms() {
    for m in 1..100i64 {
        if (2..m).take_while(|p| p * p <= m).any(|p| m % (p * p) == 0) {
            continue;
        }
        let d = if (-m).rem_euclid(4) == 1 { -m } else { -4 * m };
        if d <= -100 {
            continue;
        }
        let o = Order::maximal(&field(&[m, 0, 1]));
        for a in ideals_up_to(&o, 50).unwrap() {
            let (x, y, z) = norm_form(&a);
            assert_eq!(y * y - 4 * x * z, d as i128);
            let reduced = reduce(x, y, z);
            assert_eq!(is_principal(&a).unwrap().is_some(), reduced.0 == 1, "m = {m}, {a:?}");
            if let Some(g) = is_principal(&a).unwrap() {
                assert_eq!(FracIdeal::principal(&o, &g).unwrap(), a);
                assert_eq!(g.norm().abs(), a.norm());
            }
        }
    }
}
