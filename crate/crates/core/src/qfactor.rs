//! Factorization of rational polynomials: squarefree decomposition, factorization
//! modulo a good prime, quadratic Hensel lifting and subset recombination.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arith::{is_prime_u64, primes_up_to};
use crate::fp::FpPoly;
use crate::poly::{int_exact_div, int_primitive, int_to_rat, Poly};
use crate::{QPoly, Rational, ZPoly};

/// Squarefree decomposition over Q (Yun). Factors are monic; multiplicities ascending.
pub fn squarefree_decomposition(f: &QPoly) -> Vec<(QPoly, u32)> {
    assert!(!f.is_zero());
    let f = f.monic();
    if f.deg() == 0 {
        return vec![];
    }
    let mut out = vec![];
    let fp = f.derivative();
    let a0 = f.gcd(&fp);
    let mut b = f.div_rem(&a0).0;
    let mut c = fp.div_rem(&a0).0;
    let mut d = &c - &b.derivative();
    let mut i = 1;
    loop {
        let a = b.gcd(&d);
        if a.deg() > 0 {
            out.push((a.clone(), i));
        }
        b = b.div_rem(&a).0;
        if b.deg() == 0 {
            break;
        }
        c = d.div_rem(&a).0;
        d = &c - &b.derivative();
        i += 1;
    }
    out
}

/// Factor a nonzero rational polynomial into monic irreducibles with multiplicities.
/// Output is sorted by (degree, coefficients) and ignores the leading constant.
pub fn factor_rational_poly(f: &QPoly) -> Vec<(QPoly, u32)> {
    let mut out = vec![];
    for (g, m) in squarefree_decomposition(f) {
        for h in factor_squarefree_int(&g.primitive_part()) {
            out.push((int_to_rat(&h).monic(), m));
        }
    }
    out.sort_by(|a, b| canonical_key(&a.0).cmp(&canonical_key(&b.0)));
    out
}

pub(crate) fn canonical_key(p: &QPoly) -> (usize, Vec<Rational>) {
    (p.deg(), p.coeffs().iter().rev().cloned().collect())
}

pub fn is_irreducible(f: &QPoly) -> bool {
    let fs = factor_rational_poly(f);
    fs.len() == 1 && fs[0].1 == 1
}

fn mod_sym(a: &BigInt, m: &BigInt) -> BigInt {
    let r = a.mod_floor(m);
    if &r + &r > *m {
        r - m
    } else {
        r
    }
}

fn zp_reduce(p: &ZPoly, m: &BigInt) -> ZPoly {
    p.map(|a| a.mod_floor(m))
}

fn zp_mul(a: &ZPoly, b: &ZPoly, m: &BigInt) -> ZPoly {
    zp_reduce(&(a * b), m)
}

/// Division by a monic polynomial modulo m.
fn zp_div_rem_monic(a: &ZPoly, d: &ZPoly, m: &BigInt) -> (ZPoly, ZPoly) {
    let dd = d.deg();
    let a = zp_reduce(a, m);
    if a.is_zero() || a.deg() < dd {
        return (Poly::zero(), a);
    }
    let mut r = a.coeffs().to_vec();
    let mut q = vec![BigInt::zero(); r.len() - dd];
    for i in (0..q.len()).rev() {
        let c = r[i + dd].mod_floor(m);
        if !c.is_zero() {
            for j in 0..=dd {
                r[i + j] = (&r[i + j] - &c * &d.coeffs()[j]).mod_floor(m);
            }
        }
        q[i] = c;
    }
    r.truncate(dd);
    (Poly::new(q), zp_reduce(&Poly::new(r), m))
}

fn to_fp(p: &ZPoly, q: u64) -> FpPoly {
    let qb = BigInt::from(q);
    FpPoly::new(
        q,
        p.coeffs()
            .iter()
            .map(|c| c.mod_floor(&qb).to_u64().unwrap())
            .collect(),
    )
}

fn from_fp(p: &FpPoly) -> ZPoly {
    Poly::new(p.coeffs().iter().map(|&c| BigInt::from(c)).collect())
}

/// Lift f = g*h (mod p) to modulus p^(2^j) >= bound.  h monic.
fn hensel_pair(
    f: &ZPoly,
    g: &FpPoly,
    h: &FpPoly,
    p: u64,
    target: &BigInt,
) -> (ZPoly, ZPoly, BigInt) {
    let (one, s0, t0) = g.ext_gcd(h);
    debug_assert!(one.is_one());
    let mut m = BigInt::from(p);
    let mut g = from_fp(g);
    let mut h = from_fp(h);
    let mut s = from_fp(&s0);
    let mut t = from_fp(&t0);
    while &m < target {
        let m2 = &m * &m;
        let e = zp_reduce(&(f - &(&g * &h)), &m2);
        let (q, r) = zp_div_rem_monic(&zp_mul(&s, &e, &m2), &h, &m2);
        let g_new = zp_reduce(&(&(&g + &(&t * &e)) + &(&q * &g)), &m2);
        let h_new = zp_reduce(&(&h + &r), &m2);
        let b = zp_reduce(
            &(&(&(&s * &g_new) + &(&t * &h_new)) - &Poly::one()),
            &m2,
        );
        let (c, d) = zp_div_rem_monic(&zp_mul(&s, &b, &m2), &h_new, &m2);
        s = zp_reduce(&(&s - &d), &m2);
        t = zp_reduce(&(&(&t - &(&t * &b)) - &(&c * &g_new)), &m2);
        g = g_new;
        h = h_new;
        m = m2;
    }
    (g, h, m)
}

/// Lift monic modular factors of f (mod p) to monic factors mod M >= target.
fn hensel_multi(f: &ZPoly, factors: &[FpPoly], p: u64, target: &BigInt) -> (Vec<ZPoly>, BigInt) {
    if factors.len() == 1 {
        // make f monic modulo a suitable modulus
        let mut m = BigInt::from(p);
        while &m < target {
            m = &m * &m;
        }
        let lc = f.lead();
        let inv = lc.extended_gcd(&m).x.mod_floor(&m);
        return (vec![zp_reduce(&f.map(|c| c * &inv), &m)], m);
    }
    let mid = factors.len() / 2;
    let (left, right) = factors.split_at(mid);
    let pb = BigInt::from(p);
    let lc = f.lead().mod_floor(&pb).to_u64().unwrap();
    let g = left
        .iter()
        .fold(FpPoly::new(p, vec![lc]), |acc, u| acc.mul(u));
    let h = right.iter().fold(FpPoly::one(p), |acc, u| acc.mul(u));
    let (gl, hl, m) = hensel_pair(f, &g, &h, p, target);
    let (mut a, _) = hensel_multi(&gl, left, p, &m);
    let (b, _) = hensel_multi(&hl, right, p, &m);
    a.extend(b);
    let a = a.into_iter().map(|x| zp_reduce(&x, &m)).collect();
    (a, m)
}

fn choose_prime(f: &ZPoly) -> Option<(u64, Vec<FpPoly>)> {
    let lc = f.lead();
    let mut best: Option<(u64, Vec<FpPoly>)> = None;
    let mut tried = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ca);
    for p in primes_up_to(2000).into_iter().skip(1) {
        if (&lc % BigInt::from(p)).is_zero() {
            continue;
        }
        let fp = to_fp(f, p);
        if fp.deg() != f.deg() || fp.gcd(&fp.derivative()).deg() > 0 {
            continue;
        }
        let facs = fp.factor_squarefree(&mut rng);
        if best.as_ref().is_none_or(|(_, b)| facs.len() < b.len()) {
            best = Some((p, facs));
        }
        tried += 1;
        if tried >= 8 || best.as_ref().is_some_and(|(_, b)| b.len() == 1) {
            break;
        }
    }
    best
}

/// Factor a squarefree primitive integer polynomial into primitive irreducibles.
fn factor_squarefree_int(f: &ZPoly) -> Vec<ZPoly> {
    let n = f.deg();
    if n <= 1 {
        return vec![f.clone()];
    }
    // x | f
    if f.coeff(0).is_zero() {
        let rest = Poly::new(f.coeffs()[1..].to_vec());
        let mut out = vec![Poly::new(vec![BigInt::zero(), BigInt::one()])];
        out.extend(factor_squarefree_int(&rest));
        return out;
    }
    let (p, mod_factors) = choose_prime(f).expect("no good prime below 2000");
    if mod_factors.len() == 1 {
        return vec![f.clone()];
    }
    debug_assert!(is_prime_u64(p));
    // Mignotte-type bound on coefficients of any factor, times lc
    let norm2: BigInt = f.coeffs().iter().map(|c| c * c).sum();
    let norm = num_integer::Roots::sqrt(&norm2) + 1;
    let lc = f.lead().abs();
    let bound = (BigInt::one() << n) * norm * &lc * 2 + 1;
    let (lifted, m) = hensel_multi(f, &mod_factors, p, &bound);

    let mut remaining: Vec<usize> = (0..lifted.len()).collect();
    let mut current = f.clone();
    let mut out = vec![];
    let mut s = 1;
    while 2 * s <= remaining.len() {
        let mut found = false;
        let lcc = current.lead();
        for subset in combinations(&remaining, s) {
            let mut g = Poly::constant(lcc.clone());
            for &i in &subset {
                g = zp_mul(&g, &lifted[i], &m);
            }
            let g = int_primitive(&g.map(|c| mod_sym(c, &m)));
            if let Some(q) = int_exact_div(&current, &g) {
                out.push(g);
                current = q;
                remaining.retain(|i| !subset.contains(i));
                found = true;
                break;
            }
        }
        if !found {
            s += 1;
        }
    }
    if current.deg() > 0 {
        out.push(int_primitive(&current));
    }
    out.into_iter()
        .map(|g| if g.lead().is_negative() { -&g } else { g })
        .collect()
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut idx: Vec<usize> = (0..k).collect();
    if k > items.len() {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + items.len() - k {
                break;
            }
            if i == 0 && idx[0] == items.len() - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Rational roots of f (distinct).
pub fn rational_roots(f: &QPoly) -> Vec<Rational> {
    factor_rational_poly(f)
        .into_iter()
        .filter(|(g, _)| g.deg() == 1)
        .map(|(g, _)| -g.coeff(0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn q(c: &[i64]) -> QPoly {
        QPoly::from_ints(c)
    }

    fn expand(fs: &[(QPoly, u32)]) -> QPoly {
        fs.iter().fold(QPoly::one(), |acc, (g, m)| &acc * &g.pow(*m))
    }

    #[test]
    fn named_examples() {
        assert_eq!(
            factor_rational_poly(&q(&[-1, 0, 1])),
            vec![(q(&[-1, 1]), 1), (q(&[1, 1]), 1)]
        );
        assert_eq!(factor_rational_poly(&q(&[1, 0, 1])), vec![(q(&[1, 0, 1]), 1)]);
        assert_eq!(factor_rational_poly(&q(&[3, 0, 6, 0, 1])), vec![(q(&[3, 0, 6, 0, 1]), 1)]);
    }

    #[test]
    fn eisenstein_oracle_agrees() {
        // Eisenstein at 3: 3 | 6, 3 | 3, 9 does not divide 3
        let f = q(&[3, 0, 6, 0, 1]);
        let c: Vec<i64> = vec![3, 0, 6, 0];
        assert!(c.iter().all(|a| a % 3 == 0) && 3 % 9 != 0);
        assert!(is_irreducible(&f));
    }

    #[test]
    fn swinnerton_dyer_like() {
        // x^4 - 10x^2 + 1 is irreducible but splits mod every prime
        assert!(is_irreducible(&q(&[1, 0, -10, 0, 1])));
        // x^8 - 40x^6 + 352x^4 - 960x^2 + 576 (min poly of sqrt2+sqrt3+sqrt5)
        assert!(is_irreducible(&q(&[576, 0, -960, 0, 352, 0, -40, 0, 1])));
    }

    #[test]
    fn multiplicities() {
        let f = &(&q(&[1, 1]).pow(3) * &q(&[1, 0, 1]).pow(2)) * &q(&[-2, 0, 0, 1]);
        let fs = factor_rational_poly(&f);
        assert_eq!(expand(&fs), f.monic());
        assert_eq!(fs.len(), 3);
    }

    #[test]
    fn random_products_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let k = rng.gen_range(1..4);
            let mut f = q(&[rng.gen_range(1..5)]);
            for _ in 0..k {
                let d = rng.gen_range(1..5);
                let mut c: Vec<i64> = (0..d).map(|_| rng.gen_range(-9..10)).collect();
                c.push(1);
                f = &f * &q(&c);
            }
            let fs = factor_rational_poly(&f);
            assert_eq!(expand(&fs), f.monic());
            for (g, _) in &fs {
                assert!(g.is_monic());
            }
        }
    }

    #[test]
    fn combos() {
        assert_eq!(combinations(&[1, 2, 3], 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(&[4], 1), vec![vec![4]]);
    }
}
