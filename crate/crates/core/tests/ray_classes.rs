use std::sync::Arc;
use std::time::Instant;

use cmreflex::classgroup::ideals_up_to;
use cmreflex::cm::{cm_check, enumerate_cm_types, random_integral, reflex_field, CMField};
use cmreflex::ideal::{coprime_scale, FracIdeal};
use cmreflex::nf::NumberField;
use cmreflex::order::Order;
use cmreflex::rayclass::*;
use cmreflex::BigInt;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cm(c: &[i64]) -> Arc<CMField> {
    Arc::new(cm_check(&NumberField::from_ints(c).unwrap()).unwrap())
}

/// |(O/m)^*| = prod N(p)^(e-1) (N(p) - 1).
fn euler_phi(m: &FracIdeal) -> usize {
    m.factor()
        .iter()
        .map(|(p, e)| {
            let q = p.norm().to_usize().unwrap();
            q.pow(*e as u32 - 1) * (q - 1)
        })
        .product()
}

#[test]
fn orders_match_the_exact_sequence() {
    for (c, h) in [(&[1i64, 0, 1][..], 1), (&[5, 0, 1], 2)] {
        let k = cm(c);
        let o = Order::maximal(&k.field);
        let ids = ideals_up_to(&o, 500).unwrap();
        for m in ids.iter().step_by(3) {
            let g = ray_class_group(&k, &Modulus::new(m.clone()).unwrap()).unwrap();
            assert_eq!(g.residue_units, euler_phi(m));
            assert_eq!(g.class_number, h);
            assert!(g.sequence_holds(), "{c:?} {m:?}");
        }
    }
}

#[test]
fn ray_class_is_a_homomorphism() {
    let k = cm(&[5, 0, 1]);
    let o = Order::maximal(&k.field);
    let m = Modulus::from_int(&o, 6).unwrap();
    let g = ray_class_group(&k, &m).unwrap();
    let pool: Vec<FracIdeal> = ideals_up_to(&o, 60).unwrap().into_iter().filter(|a| m.is_coprime(a)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = &pool[rng.gen_range(0..pool.len())];
        let ab = a.mul(b).unwrap();
        assert_eq!(g.add(&g.ray_class(a).unwrap(), &g.ray_class(b).unwrap()), g.ray_class(&ab).unwrap());
    }
    // principal ideals with a generator congruent to 1 are trivial
    for _ in 0..50 {
        let mu = random_integral(&o, &mut rng, 5);
        let alpha = &k.field.one() + &(&mu * &k.field.from_int(6));
        if alpha.is_zero() {
            continue;
        }
        let a = FracIdeal::principal(&o, &alpha).unwrap();
        assert_eq!(g.ray_class(&a).unwrap(), g.identity());
    }
}

#[test]
fn coprime_scale_lands_in_the_domain() {
    let k = cm(&[5, 0, 1]);
    let o = Order::maximal(&k.field);
    let m = Modulus::from_int(&o, 10).unwrap();
    let g = ray_class_group(&k, &m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let x = random_integral(&o, &mut rng, 8);
        let y = random_integral(&o, &mut rng, 8);
        if x.is_zero() || y.is_zero() {
            continue;
        }
        let a = FracIdeal::from_gens(&o, &[x, y]).unwrap().pow(rng.gen_range(-2..=2)).unwrap();
        let (_, b) = coprime_scale(&a, &BigInt::from(10)).unwrap();
        assert!(g.ray_class(&b).is_ok());
    }
}

#[test]
fn transport_on_the_fifth_cyclotomic_field() {
    let start = Instant::now();
    let k = cm(&[1, 1, 1, 1, 1]);
    for t in enumerate_cm_types(&k) {
        let r = reflex_field(&t).unwrap();
        let os = Order::maximal(&r.field);
        let m = Modulus::from_int(&os, 2).unwrap();
        let rep = reflex_transport_check(&r, 2, &m, &TransportOptions { samples: 50, seed: 3, ..Default::default() }).unwrap();
        assert!(rep.passed(), "{:?}", t.phi);
    }
    let o = Order::maximal(&k.field);
    let g = ray_class_group(&k, &Modulus::from_int(&o, 2).unwrap()).unwrap();
    assert!(g.sequence_holds());
    assert!(g.order >= BigInt::one());
    eprintln!("{:?}", start.elapsed());
}
