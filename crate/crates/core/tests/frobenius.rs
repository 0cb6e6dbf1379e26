use std::sync::Arc;
use std::time::Instant;

use cmreflex::arith::primes_up_to;
use cmreflex::cm::{cm_check, enumerate_cm_types, reflex_field, Ambient};
use cmreflex::ideal::{prime_split, FracIdeal};
use cmreflex::nf::NumberField;
use cmreflex::order::Order;
use cmreflex::stverify::*;
use cmreflex::{BigInt, Error, Rational};

/// Counts from a direct Legendre-symbol sum.
fn legendre_count(p: u64, a4: i64, a6: i64) -> u64 {
    let pi = p as i64;
    let mut n = 1u64;
    for x in 0..pi {
        let r = ((x * x % pi * x + a4 * x + a6) % pi + pi) % pi;
        if r == 0 {
            n += 1;
        } else if cmreflex::fp::legendre(r as u64, p) == 1 {
            n += 2;
        }
    }
    n
}

#[test]
fn counts_agree_with_legendre_sums() {
    for p in primes_up_to(400).into_iter().filter(|&p| p > 3) {
        for (a4, a6) in [(-1, 0), (0, 1), (2, 3)] {
            let Ok(c) = CurveFp::new(p, a4, a6) else { continue };
            let n = count_points(&c).unwrap();
            assert_eq!(n, legendre_count(p, a4, a6));
            let a = p as i64 + 1 - n as i64;
            assert!(a * a <= 4 * p as i64);
        }
    }
}

#[test]
fn every_ordinary_prime_below_1000() {
    let start = Instant::now();
    for curve in [CMCurveQ::x3_minus_x(), CMCurveQ::x3_plus_1()] {
        let mut ordinary = 0;
        for p in primes_up_to(1000).into_iter().filter(|&p| p >= 5) {
            match frobenius_element(&curve, p, 7) {
                Ok(f) => {
                    ordinary += 1;
                    let amb = curve.ambient();
                    assert!(st_check_ideal(&f, amb).unwrap(), "{} p={p}", curve.name);
                    assert!(st_check_valuations(&f, amb).unwrap().passed());
                    assert!(!st_check_ideal(&conjugate_swap(&curve, &f), amb).unwrap());
                    let again = frobenius_element(&curve, p, 7).unwrap();
                    assert_eq!(again.pi, f.pi);
                }
                Err(Error::Supersingular(_)) => {}
                Err(e) => panic!("{} p={p}: {e}", curve.name),
            }
        }
        assert!(ordinary > 70);
    }
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn cyclotomic_right_hand_sides() {
    let e = NumberField::from_ints(&[1, 1, 1, 1, 1]).unwrap();
    let cm = Arc::new(cm_check(&e).unwrap());
    let o = Order::maximal(&e);
    let mut tested = 0;
    for t in enumerate_cm_types(&cm) {
        let amb = Ambient::new(&reflex_field(&t).unwrap(), &e, 0).unwrap();
        for p in primes_up_to(200).into_iter().filter(|&p| p != 5).take(20) {
            for prime in prime_split(&o, &BigInt::from(p)).unwrap() {
                let rhs = st_rhs(&amb, &prime).unwrap();
                assert_eq!(rhs.norm(), Rational::from_integer(prime.norm().pow(2)));
                let r = check_valuations(&amb, &prime, &rhs).unwrap();
                assert!(r.passed() && r.rules_agree(), "p={p}");
                tested += 1;
            }
        }
    }
    assert!(tested >= 80);
    let five = prime_split(&o, &BigInt::from(5)).unwrap().remove(0);
    let t = enumerate_cm_types(&cm).remove(0);
    let amb = Ambient::new(&reflex_field(&t).unwrap(), &e, 0).unwrap();
    assert!(matches!(st_rhs(&amb, &five), Err(Error::RamifiedPrime(_))));
    // the ratio rule still holds at the ramified prime
    let rhs = amb.norm_ideal(&five.ideal).unwrap();
    assert!(check_valuations(&amb, &five, &rhs).unwrap().passed());
}

#[test]
fn cyclotomic_examples() {
    let e = NumberField::from_ints(&[1, 1, 1, 1, 1]).unwrap();
    let cm = Arc::new(cm_check(&e).unwrap());
    let o = Order::maximal(&e);
    let t = enumerate_cm_types(&cm).remove(0);
    let amb = Ambient::new(&reflex_field(&t).unwrap(), &e, 0).unwrap();
    let p11 = prime_split(&o, &BigInt::from(11)).unwrap().remove(0);
    let rhs = st_rhs(&amb, &p11).unwrap();
    assert_eq!(rhs.factor().len(), 2);
    assert_eq!(rhs.norm(), Rational::from_integer(121.into()));
    let p2 = prime_split(&o, &BigInt::from(2)).unwrap().remove(0);
    assert_eq!(p2.f, 4);
    assert_eq!(st_rhs(&amb, &p2).unwrap().norm(), Rational::from_integer(BigInt::from(16).pow(2)));
    assert_eq!(st_rhs(&amb, &p2).unwrap(), FracIdeal::from_int(&o, &BigInt::from(4)).unwrap());
}
