//! Maximal orders by the Round 2 enlargement (p-radical, ring of multipliers).
//!
//! An order is stored through an integral basis in Hermite form relative to the power basis,
//! with first basis element 1, its multiplication table and trace form.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factor_integer, mul_mod};
use crate::fp;
use crate::linalg::{congruence_kernel, hnf, hnf_det, q_det, q_inverse, q_mul_vec, rat_vec_denominator, QMat, ZCols};
use crate::nf::{NfElem, NumberField};
use crate::Rational;

pub(crate) struct OrderData {
    /// basis[j] = power-basis coordinates of the j-th basis element.
    basis: Vec<Vec<Rational>>,
    /// Row-major inverse of the basis matrix: power coordinates to order coordinates.
    inv: QMat,
    /// mult[i][j] = order coordinates of basis_i * basis_j.
    mult: Vec<Vec<Vec<BigInt>>>,
    trace: Vec<Vec<BigInt>>,
    disc: BigInt,
}

/// The maximal order of a number field, with a fixed integral basis.
#[derive(Clone)]
pub struct Order {
    field: NumberField,
    data: Arc<OrderData>,
}

impl PartialEq for Order {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && (Arc::ptr_eq(&self.data, &other.data) || self.data.basis == other.data.basis)
    }
}

impl Eq for Order {}

impl fmt::Debug for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Order({:?}, disc {})", self.field, self.data.disc)
    }
}

fn qi(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

impl Order {
    /// The maximal order of `k` (computed once per field).
    pub fn maximal(k: &NumberField) -> Order {
        let data = k.0.order.get_or_init(|| Arc::new(compute_maximal(k, None, None))).clone();
        Order { field: k.clone(), data }
    }

    /// Install the maximal order computed from a known integral ring and the primes at which
    /// it may fail to be maximal.  No effect if the order was already computed.
    pub(crate) fn install(k: &NumberField, gens: Vec<Vec<Rational>>, primes: Vec<BigInt>) {
        k.0.order.get_or_init(|| Arc::new(compute_maximal(k, Some(gens), Some(primes))));
    }

    pub fn field(&self) -> &NumberField {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    pub fn disc(&self) -> &BigInt {
        &self.data.disc
    }

    /// Index of this order in the maximal order (always 1).
    pub fn index_in_maximal(&self) -> BigInt {
        BigInt::one()
    }

    /// Power-basis coordinates of the basis elements.
    pub fn basis_coords(&self) -> &[Vec<Rational>] {
        &self.data.basis
    }

    pub fn basis_elem(&self, j: usize) -> NfElem {
        self.field.elem(self.data.basis[j].clone())
    }

    /// Order coordinates of a field element.
    pub fn coords(&self, a: &NfElem) -> Vec<Rational> {
        assert!(a.field() == &self.field, "element of another field");
        q_mul_vec(&self.data.inv, a.coords())
    }

    /// Integer order coordinates, or `None` if the element is not integral.
    pub fn int_coords(&self, a: &NfElem) -> Option<Vec<BigInt>> {
        self.coords(a).into_iter().map(|x| x.is_integer().then(|| x.to_integer())).collect()
    }

    pub fn contains(&self, a: &NfElem) -> bool {
        self.int_coords(a).is_some()
    }

    pub fn elem_from_coords(&self, c: &[BigInt]) -> NfElem {
        let q: Vec<Rational> = c.iter().map(qi).collect();
        self.elem_from_qcoords(&q)
    }

    pub fn elem_from_qcoords(&self, c: &[Rational]) -> NfElem {
        let n = self.degree();
        let mut v = vec![Rational::zero(); n];
        for (j, x) in c.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (i, b) in self.data.basis[j].iter().enumerate() {
                if !b.is_zero() {
                    v[i] += x * b;
                }
            }
        }
        self.field.elem(v)
    }

    /// Product of two integral elements in order coordinates.
    pub fn mul_coords(&self, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        let n = self.degree();
        let mut out = vec![BigInt::zero(); n];
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in y.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                for (k, m) in self.data.mult[i][j].iter().enumerate() {
                    if !m.is_zero() {
                        out[k] += &ab * m;
                    }
                }
            }
        }
        out
    }

    /// Product modulo p of order coordinates given as residues in [0, p).
    pub fn mul_coords_mod(&self, x: &[u64], y: &[u64], p: u64) -> Vec<u64> {
        let n = self.degree();
        let mut out = vec![0u64; n];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let ab = mul_mod(a, b, p);
                for (k, m) in self.data.mult[i][j].iter().enumerate() {
                    if !m.is_zero() {
                        let mm = m.mod_floor(&BigInt::from(p)).to_u64().unwrap();
                        out[k] = (out[k] + mul_mod(ab, mm, p)) % p;
                    }
                }
            }
        }
        out
    }

    /// Matrix (rows) of multiplication by an integral element, in order coordinates.
    pub fn mult_matrix(&self, x: &[BigInt]) -> Vec<Vec<BigInt>> {
        let n = self.degree();
        let cols: Vec<Vec<BigInt>> = (0..n)
            .map(|j| {
                let mut e = vec![BigInt::zero(); n];
                e[j] = BigInt::one();
                self.mul_coords(x, &e)
            })
            .collect();
        (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect()
    }

    /// Matrix (rows) of multiplication by an arbitrary field element, in order coordinates.
    pub fn mult_matrix_q(&self, a: &NfElem) -> QMat {
        let n = self.degree();
        let cols: Vec<Vec<Rational>> = (0..n).map(|j| self.coords(&(a * &self.basis_elem(j)))).collect();
        (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect()
    }

    /// Hermite basis of the p-radical of the order (the product of the primes above p).
    pub fn radical(&self, p: &BigInt) -> ZCols {
        radical(&self.data.mult, self.degree(), p)
    }

    /// Tr(w_i w_j).
    pub fn trace_matrix(&self) -> &[Vec<BigInt>] {
        &self.data.trace
    }
}

/// Column HNF basis (power coordinates) of the Z-lattice spanned by rational vectors.
fn lattice_basis(vecs: &[Vec<Rational>], n: usize) -> Vec<Vec<Rational>> {
    let d = vecs.iter().fold(BigInt::one(), |acc, v| acc.lcm(&rat_vec_denominator(v)));
    let ints: Vec<Vec<BigInt>> = vecs
        .iter()
        .map(|v| v.iter().map(|x| (x * qi(&d)).to_integer()).collect())
        .collect();
    let h = hnf(&ints, n, None).expect("lattice of full rank");
    h.into_iter()
        .map(|c| c.into_iter().map(|x| Rational::new(x, d.clone())).collect())
        .collect()
}

fn products(k: &NumberField, basis: &[Vec<Rational>], gens: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut out = basis.to_vec();
    for b in basis {
        let be = k.elem(b.clone());
        for g in gens {
            out.push((&be * &k.elem(g.clone())).into_coords());
        }
    }
    out
}

/// Smallest ring containing the given integral elements; the first generator must
/// generate the field.
fn ring_generated(k: &NumberField, gens: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = k.degree();
    let g0 = k.elem(gens[0].clone());
    let mut vecs = vec![];
    let mut pw = k.one();
    for _ in 0..n {
        vecs.push(pw.coords().to_vec());
        pw = &pw * &g0;
    }
    vecs.extend(gens.iter().cloned());
    let mut basis = lattice_basis(&vecs, n);
    loop {
        let next = lattice_basis(&products(k, &basis, gens), n);
        if next == basis {
            return basis;
        }
        basis = next;
    }
}

struct Tables {
    inv: QMat,
    mult: Vec<Vec<Vec<BigInt>>>,
}

fn tables(k: &NumberField, basis: &[Vec<Rational>]) -> Tables {
    let n = k.degree();
    let bm: QMat = (0..n).map(|i| (0..n).map(|j| basis[j][i].clone()).collect()).collect();
    let inv = q_inverse(&bm).expect("basis is invertible");
    let elems: Vec<NfElem> = basis.iter().map(|b| k.elem(b.clone())).collect();
    let mut mult = vec![vec![vec![]; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = q_mul_vec(&inv, (&elems[i] * &elems[j]).coords());
            let ci: Vec<BigInt> = c
                .iter()
                .map(|x| {
                    assert!(x.is_integer(), "lattice is not closed under multiplication");
                    x.to_integer()
                })
                .collect();
            mult[i][j] = ci.clone();
            mult[j][i] = ci;
        }
    }
    Tables { inv, mult }
}

fn frobenius_kernel(mult: &[Vec<Vec<BigInt>>], n: usize, p: u64) -> Vec<Vec<u64>> {
    // x -> x^(p^j) with p^j >= n is additive modulo p; its kernel is the p-radical mod p
    let mut q: u128 = p as u128;
    while q < n as u128 {
        q *= p as u128;
    }
    let mulm = |x: &[u64], y: &[u64]| -> Vec<u64> {
        let mut out = vec![0u64; n];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in y.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let ab = mul_mod(a, b, p);
                for (kk, m) in mult[i][j].iter().enumerate() {
                    if !m.is_zero() {
                        let mm = m.mod_floor(&BigInt::from(p)).to_u64().unwrap();
                        out[kk] = (out[kk] + mul_mod(ab, mm, p)) % p;
                    }
                }
            }
        }
        out
    };
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut base = vec![0u64; n];
        base[i] = 1;
        let mut acc = vec![0u64; n];
        acc[0] = 1;
        let mut e = q;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulm(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = mulm(&base, &base);
            }
        }
        cols.push(acc);
    }
    let rows: Vec<Vec<u64>> = (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect();
    fp::kernel(&rows, n, p)
}

/// The p-radical {x : x^k in pO for some k}, as a Hermite basis in order coordinates.
fn radical(mult: &[Vec<Vec<BigInt>>], n: usize, p: &BigInt) -> ZCols {
    let pu = p.to_u64().expect("prime fits in 64 bits");
    let ker = frobenius_kernel(mult, n, pu);
    let mut gens: Vec<Vec<BigInt>> = ker.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
    for i in 0..n {
        let mut e = vec![BigInt::zero(); n];
        e[i] = p.clone();
        gens.push(e);
    }
    hnf(&gens, n, Some(p)).expect("radical has full rank")
}

/// One Round 2 step at p: the ring of multipliers of the p-radical, in order coordinates
/// (scaled by p), or `None` if the order is already p-maximal.
fn enlarge_at(t: &Tables, n: usize, p: &BigInt) -> Option<Vec<Vec<Rational>>> {
    let rad = radical(&t.mult, n, p);
    let d = hnf_det(&rad);
    // H^{-1} scaled by d: integer matrix
    let hm: QMat = (0..n).map(|i| (0..n).map(|j| qi(&rad[j][i])).collect()).collect();
    let hinv = q_inverse(&hm).expect("invertible");
    let hinv_d: Vec<Vec<BigInt>> =
        hinv.iter().map(|r| r.iter().map(|x| (x * qi(&d)).to_integer()).collect()).collect();
    let mut cond: Vec<Vec<BigInt>> = vec![];
    for g in &rad {
        // multiplication by g: column j = g * w_j
        let mcols: Vec<Vec<BigInt>> = (0..n)
            .map(|j| {
                let mut out = vec![BigInt::zero(); n];
                for (i, a) in g.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (kk, m) in t.mult[i][j].iter().enumerate() {
                        out[kk] += a * m;
                    }
                }
                out
            })
            .collect();
        for r in 0..n {
            let row: Vec<BigInt> = (0..n)
                .map(|j| (0..n).fold(BigInt::zero(), |s, kk| s + &hinv_d[r][kk] * &mcols[j][kk]))
                .collect();
            cond.push(row);
        }
    }
    let modulus = p * &d;
    let kern = congruence_kernel(&cond, n, &modulus);
    if kern.iter().enumerate().all(|(i, c)| c[i] == *p) && hnf_det(&kern) == p.pow(n as u32) {
        return None;
    }
    Some(kern.iter().map(|c| c.iter().map(|x| Rational::new(x.clone(), p.clone())).collect()).collect())
}

fn compute_maximal(k: &NumberField, gens: Option<Vec<Vec<Rational>>>, primes: Option<Vec<BigInt>>) -> OrderData {
    let n = k.degree();
    let f = k.min_poly();
    // integral generator d*x
    let d = f.denominator();
    let theta: Vec<Rational> = {
        let mut v = vec![Rational::zero(); n];
        if n > 1 {
            v[1] = qi(&d);
        } else {
            v[0] = -f.coeff(0) * qi(&d);
        }
        v
    };
    let mut gens = gens.unwrap_or_default();
    if n > 1 {
        gens.insert(0, theta);
    }
    let mut basis = if n == 1 { vec![vec![Rational::one()]] } else { ring_generated(k, &gens) };
    let primes: Vec<BigInt> = match primes {
        Some(p) => p,
        None => {
            let disc = trace_disc(k, &basis);
            factor_integer(&disc)
                .into_iter()
                .filter(|(_, e)| *e >= 2)
                .map(|(p, _)| p)
                .collect()
        }
    };
    for p in &primes {
        loop {
            let t = tables(k, &basis);
            match enlarge_at(&t, n, p) {
                None => break,
                Some(new_coords) => {
                    // new basis vectors: sum_j c_j basis_j
                    let vecs: Vec<Vec<Rational>> = new_coords
                        .iter()
                        .map(|c| {
                            let mut v = vec![Rational::zero(); n];
                            for (j, x) in c.iter().enumerate() {
                                for i in 0..n {
                                    v[i] += x * &basis[j][i];
                                }
                            }
                            v
                        })
                        .collect();
                    basis = lattice_basis(&vecs, n);
                }
            }
        }
    }
    let t = tables(k, &basis);
    let trace: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let e = k.elem(basis[i].clone()) * k.elem(basis[j].clone());
                    let tr = e.trace();
                    assert!(tr.is_integer());
                    tr.to_integer()
                })
                .collect()
        })
        .collect();
    let tq: QMat = trace.iter().map(|r| r.iter().map(qi).collect()).collect();
    let disc = q_det(&tq).to_integer();
    OrderData { basis, inv: t.inv, mult: t.mult, trace, disc }
}

fn trace_disc(k: &NumberField, basis: &[Vec<Rational>]) -> BigInt {
    let n = k.degree();
    let elems: Vec<NfElem> = basis.iter().map(|b| k.elem(b.clone())).collect();
    let tq: QMat = (0..n).map(|i| (0..n).map(|j| (&elems[i] * &elems[j]).trace()).collect()).collect();
    q_det(&tq).to_integer().abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(c: &[i64]) -> NumberField {
        NumberField::from_ints(c).unwrap()
    }

    #[test]
    fn quadratic_orders() {
        assert_eq!(*Order::maximal(&field(&[1, 0, 1])).disc(), BigInt::from(-4));
        assert_eq!(*Order::maximal(&field(&[5, 0, 1])).disc(), BigInt::from(-20));
        // x^2 + 3: maximal order is Z[(1+sqrt(-3))/2]
        assert_eq!(*Order::maximal(&field(&[3, 0, 1])).disc(), BigInt::from(-3));
        // x^2 - 5
        assert_eq!(*Order::maximal(&field(&[-5, 0, 1])).disc(), BigInt::from(5));
        // x^2 + 36: Q(i) again
        assert_eq!(*Order::maximal(&field(&[36, 0, 1])).disc(), BigInt::from(-4));
    }

    #[test]
    fn higher_degree_orders() {
        assert_eq!(*Order::maximal(&field(&[1, 1, 1, 1, 1])).disc(), BigInt::from(125));
        assert_eq!(*Order::maximal(&field(&[3, 0, 6, 0, 1])).disc(), BigInt::from(27648));
        // x^3 - 2: disc -108
        assert_eq!(*Order::maximal(&field(&[-2, 0, 0, 1])).disc(), BigInt::from(-108));
        // x^3 - 10x - 10 ... Eisenstein; x^3 + x^2 - 2x + 8 has index 2 (Dedekind)
        assert_eq!(*Order::maximal(&field(&[8, -2, 1, 1])).disc(), BigInt::from(-503));
    }

    #[test]
    fn rational_coefficients() {
        // x^2 + 1/4 defines Q(i)
        let k = NumberField::new(&crate::QPoly::new(vec![
            Rational::new(1.into(), 4.into()),
            Rational::zero(),
            Rational::one(),
        ]))
        .unwrap();
        assert_eq!(*Order::maximal(&k).disc(), BigInt::from(-4));
    }
}
