//! Integer and rational helpers: primality, factoring, modular arithmetic.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::Rational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin with fixed bases; deterministic below 3.3e24, probabilistic above.
pub fn is_probable_prime(n: &BigInt) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_negative() || n.is_even() {
        return false;
    }
    let one = BigInt::one();
    let nm1 = n - &one;
    let mut d = nm1.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53] {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u64))
        .collect()
}

fn pollard_brent(n: &BigInt) -> BigInt {
    let one = BigInt::one();
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let mut y = BigInt::from(2);
        let mut r: u64 = 1;
        let mut q = BigInt::one();
        let mut g = BigInt::one();
        let mut x = y.clone();
        let mut ys = y.clone();
        let m = 64;
        while g == one {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == one {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    q = (q * (&x - &y).abs()) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            r *= 2;
        }
        if &g == n {
            loop {
                ys = f(&ys);
                g = (&x - &ys).abs().gcd(n);
                if g > one {
                    break;
                }
            }
        }
        if &g != n {
            return g;
        }
        c += 1;
    }
}

/// Prime factorization of |n| with multiplicities, sorted by prime. `n` must be nonzero.
pub fn factor_integer(n: &BigInt) -> Vec<(BigInt, u32)> {
    assert!(!n.is_zero(), "factor_integer(0)");
    let mut rest = n.abs();
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    for p in primes_up_to(20_000) {
        let bp = BigInt::from(p);
        if &bp * &bp > rest {
            break;
        }
        let mut e = 0;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        if e > 0 {
            out.push((bp, e));
        }
    }
    let mut stack = vec![];
    if rest > BigInt::one() {
        stack.push(rest);
    }
    let mut big: Vec<BigInt> = vec![];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            big.push(m);
            continue;
        }
        let r = m.sqrt();
        if &r * &r == m {
            stack.push(r.clone());
            stack.push(r);
            continue;
        }
        let d = pollard_brent(&m);
        stack.push(&m / &d);
        stack.push(d);
    }
    big.sort();
    for p in big {
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some(entry) => entry.1 += 1,
            None => out.push((p, 1)),
        }
    }
    out.sort();
    out
}

pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    factor_integer(&BigInt::from(n))
        .into_iter()
        .map(|(p, e)| (p.to_u64().unwrap(), e))
        .collect()
}

/// Largest k with p^k | n (n nonzero).
pub fn valuation(n: &BigInt, p: &BigInt) -> u32 {
    let mut n = n.abs();
    let mut k = 0;
    while !n.is_zero() && (&n % p).is_zero() {
        n /= p;
        k += 1;
    }
    k
}

/// Rational upper bound for the square root of a nonnegative rational, with about 64
/// significant bits.
pub fn sqrt_upper(q: &Rational) -> Rational {
    assert!(!q.is_negative());
    if q.is_zero() {
        return Rational::zero();
    }
    let size = q.numer().bits() as i64 - q.denom().bits() as i64;
    let k = ((140 - size) / 2).max(0) as usize;
    let num = q.numer() << (2 * k);
    let s = (num / q.denom()).sqrt() + BigInt::one();
    Rational::new(s, BigInt::one() << k)
}

pub fn abs_rat(q: &Rational) -> Rational {
    if q.is_negative() {
        -q.clone()
    } else {
        q.clone()
    }
}

/// Lowest-terms integer check.
pub fn is_integral(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn sign_of(n: &BigInt) -> i32 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Squarefree kernel with sign: n = s * f^2 with s squarefree.
pub fn squarefree_part(n: &BigInt) -> (BigInt, BigInt) {
    let mut s = if n.is_negative() { -BigInt::one() } else { BigInt::one() };
    let mut f = BigInt::one();
    for (p, e) in factor_integer(n) {
        if e % 2 == 1 {
            s *= &p;
        }
        f *= p.pow(e / 2);
    }
    (s, f)
}

/// Fundamental discriminant of the quadratic field Q(sqrt(n)), n not a square.
pub fn fundamental_discriminant(n: &BigInt) -> BigInt {
    let (s, _) = squarefree_part(n);
    if s.mod_floor(&BigInt::from(4)) == BigInt::one() {
        s
    } else {
        s * 4
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        let ps = primes_up_to(30);
        assert_eq!(ps, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        for n in 0..2000u64 {
            let naive = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime_u64(n), naive, "{n}");
        }
    }

    #[test]
    fn factoring_round_trip() {
        let n: BigInt = "1208925819614629174706189".parse().unwrap(); // 2^80 + 13
        let f = factor_integer(&n);
        let prod = f.iter().fold(BigInt::one(), |acc, (p, e)| acc * p.pow(*e));
        assert_eq!(prod, n);
        for (p, _) in &f {
            assert!(is_probable_prime(p));
        }
        let sq = BigInt::from(1_000_003u64) * BigInt::from(1_000_003u64) * 12;
        assert_eq!(
            factor_integer(&sq),
            vec![(BigInt::from(2), 2), (BigInt::from(3), 1), (BigInt::from(1_000_003), 2)]
        );
    }

    #[test]
    fn discriminants() {
        assert_eq!(fundamental_discriminant(&BigInt::from(-1)), BigInt::from(-4));
        assert_eq!(fundamental_discriminant(&BigInt::from(-3)), BigInt::from(-3));
        assert_eq!(fundamental_discriminant(&BigInt::from(-20)), BigInt::from(-20));
        assert_eq!(fundamental_discriminant(&BigInt::from(-12)), BigInt::from(-3));
    }

    #[test]
    fn sqrt_upper_is_upper() {
        let q = rat(2, 1);
        let s = sqrt_upper(&q);
        assert!(&s * &s >= q);
        assert!(&s * &s - &q < rat(1, 1 << 40));
        let tiny = Rational::new(BigInt::one(), BigInt::one() << 300);
        let t = sqrt_upper(&tiny);
        assert!(&t * &t >= tiny);
        assert!(&t * &t < &tiny * rat(1_000_001, 1_000_000));
    }
}
