//! Galois closures by iterated root adjunction, with the Galois group acting on the
//! embeddings of the base field.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::arith::factor_integer;
use crate::error::{Error, Result};
use crate::nf::{adjoin_root, eval_in, factor_over, locate_root, nf_automorphisms, roots_in, FieldMorphism, NfElem, NumberField};
use crate::order::Order;
use crate::{QPoly, Rational};

/// Largest closure degree that will be constructed.
pub const MAX_CLOSURE_DEGREE: usize = 16;

/// A Galois closure L of K.  Embedding `j` of K into L is normalized so that composing it
/// with the first complex embedding of L gives complex embedding `j` of K.
#[derive(Debug)]
pub struct GaloisClosure {
    pub base: NumberField,
    pub field: NumberField,
    /// embeds[j]: K -> L.
    pub embeds: Vec<FieldMorphism>,
    /// Automorphisms of L, identity first.
    pub autos: Vec<FieldMorphism>,
    /// perms[s][j] = index of autos[s] ∘ embeds[j].
    pub perms: Vec<Vec<usize>>,
    /// tau[s] = complex embedding index of L equal to (embedding 0) ∘ autos[s].
    pub tau: Vec<usize>,
    table: Vec<Vec<usize>>,
}

impl GaloisClosure {
    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    pub fn group_order(&self) -> usize {
        self.autos.len()
    }

    /// Index of autos[a] ∘ autos[b].
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.autos.len()).find(|&b| self.table[a][b] == 0).expect("group element has an inverse")
    }

    /// Automorphism index whose embedding permutation is `perm`.
    pub fn find_perm(&self, perm: &[usize]) -> Option<usize> {
        self.perms.iter().position(|p| p == perm)
    }

    /// Automorphism index with tau[s] = idx.
    pub fn by_tau(&self, idx: usize) -> usize {
        self.tau.iter().position(|&t| t == idx).expect("every embedding of L is a twist of the first")
    }

    /// Sorted cycle type of each group element on the embeddings of K.
    pub fn cycle_types(&self) -> Vec<Vec<usize>> {
        self.perms.iter().map(|p| cycle_type(p)).collect()
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.autos.len();
        (0..n).all(|a| (0..n).all(|b| self.table[a][b] == self.table[b][a]))
    }

    /// Name of the group when it is identified by order, commutativity and cycle types.
    pub fn group_name(&self) -> String {
        let n = self.group_order();
        let deg = self.base.degree();
        let max_order = (0..n).map(|a| self.element_order(a)).max().unwrap_or(1);
        let name = match (n, self.is_abelian()) {
            (1, _) => "C1".to_string(),
            (_, true) if max_order == n => format!("C{n}"),
            (4, true) => "V4".to_string(),
            (6, false) => "S3".to_string(),
            (8, false) if deg == 4 && max_order == 4 => "D4".to_string(),
            (8, false) => "Q8".to_string(),
            (12, false) if deg == 4 => "A4".to_string(),
            (_, true) => format!("abelian of order {n}"),
            _ => format!("nonabelian of order {n}"),
        };
        name
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.table[a][x];
            k += 1;
        }
        k
    }
}

fn cycle_type(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut out = vec![];
    for i in 0..p.len() {
        if seen[i] {
            continue;
        }
        let mut j = i;
        let mut len = 0;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable();
    out
}

fn cache() -> &'static Mutex<HashMap<Vec<Rational>, Arc<GaloisClosure>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<Rational>, Arc<GaloisClosure>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The Galois closure of K (computed once per field).
pub fn galois_closure(k: &NumberField) -> Result<Arc<GaloisClosure>> {
    let key = k.min_poly().coeffs().to_vec();
    if let Some(c) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(c.clone());
    }
    let c = Arc::new(build(k)?);
    cache().lock().unwrap_or_else(|e| e.into_inner()).insert(key, c.clone());
    Ok(c)
}

fn complex_roots(f: &QPoly) -> Vec<Complex<f64>> {
    crate::embed::isolate_roots(f, 64).iter().map(|e| e.disc.approx()).collect()
}

fn build(k: &NumberField) -> Result<GaloisClosure> {
    let n = k.degree();
    let f = k.min_poly().clone();
    if n > 8 {
        return Err(Error::ClosureTooLarge { degree: n, limit: 8 });
    }
    // generator of the current field as a sum of coefficient * root
    let mut field = k.clone();
    let mut parts: Vec<(i64, NfElem)> = vec![(1, k.gen())];
    loop {
        let facs = factor_over(&field, &f);
        let Some(fac) = facs.iter().find(|g| g.degree() > 1) else { break };
        let new_deg = field.degree() * fac.degree();
        if new_deg > MAX_CLOSURE_DEGREE {
            return Err(Error::ClosureTooLarge { degree: new_deg, limit: MAX_CLOSURE_DEGREE });
        }
        let adj = adjoin_root(&field, &f, fac);
        let s = fac.shift;
        parts = parts.into_iter().map(|(c, e)| (c * s, adj.embed.apply(&e))).collect();
        parts.push((1, adj.root.clone()));
        field = adj.field;
    }
    let l = field;
    let big_n = l.degree();

    // roots of f in L, each labelled by the complex root it gives under L's first embedding
    let k_roots = k.embeddings().to_vec();
    let root_elems = roots_in(&l, &f);
    assert_eq!(root_elems.len(), n, "closure must split the polynomial");
    let mut roots: Vec<Option<NfElem>> = vec![None; n];
    for r in root_elems {
        let j = locate_root(&r, 0, &k_roots, &f);
        roots[j] = Some(r);
    }
    let roots: Vec<NfElem> = roots.into_iter().map(|r| r.expect("roots are distinct")).collect();
    let embeds: Vec<FieldMorphism> = roots.iter().map(|r| FieldMorphism::new_unchecked(k, r.clone())).collect();

    install_order(k, &l, &roots);

    // generator of L as an integer combination of roots
    let mut coef = vec![0i64; n];
    for (c, e) in &parts {
        let j = roots.iter().position(|r| r == e).expect("adjoined element is a root");
        coef[j] += c;
    }
    debug_assert_eq!(
        roots.iter().zip(&coef).fold(l.zero(), |acc, (r, &c)| acc + r * &l.from_int(c)),
        l.gen()
    );

    let (autos, perms) = if big_n == n && l == *k {
        let autos = nf_automorphisms(&l);
        let perms = autos
            .iter()
            .map(|s| (0..n).map(|j| perm_image(s, &roots[j], &roots)).collect())
            .collect();
        (autos, perms)
    } else {
        automorphisms_from_roots(&l, &roots, &coef)?
    };
    if autos.len() != big_n {
        return Err(Error::InvalidInput("closure automorphism count does not match its degree".into()));
    }
    let l_roots = l.embeddings().to_vec();
    let tau: Vec<usize> = autos.iter().map(|s| locate_root(s.image_of_generator(), 0, &l_roots, l.min_poly())).collect();
    let m = autos.len();
    let mut table = vec![vec![0usize; m]; m];
    for a in 0..m {
        for b in 0..m {
            let p: Vec<usize> = (0..n).map(|j| perms[a][perms[b][j]]).collect();
            let mut idx = perms.iter().position(|q| *q == p);
            if n < big_n || idx.is_none() {
                let img = autos[a].apply(autos[b].image_of_generator());
                idx = autos.iter().position(|s| *s.image_of_generator() == img);
            }
            table[a][b] = idx.expect("automorphisms form a group");
        }
    }
    Ok(GaloisClosure { base: k.clone(), field: l, embeds, autos, perms, tau, table })
}

fn perm_image(s: &FieldMorphism, r: &NfElem, roots: &[NfElem]) -> usize {
    let img = s.apply(r);
    roots.iter().position(|x| *x == img).expect("automorphisms permute roots")
}

/// Automorphisms of L = Q(roots), found by matching images of the generator numerically and
/// verifying them exactly.
fn automorphisms_from_roots(
    l: &NumberField,
    roots: &[NfElem],
    coef: &[i64],
) -> Result<(Vec<FieldMorphism>, Vec<Vec<usize>>)> {
    let n = roots.len();
    let base_roots: Vec<Complex<f64>> = roots.iter().map(|r| r.embed_f64(0)).collect();
    let l_roots = complex_roots(l.min_poly());
    let support: Vec<usize> = (0..n).filter(|&j| coef[j] != 0).collect();
    let mut out: Vec<(FieldMorphism, Vec<usize>)> = vec![];
    let mut assign = vec![usize::MAX; support.len()];
    let mut used = vec![false; n];
    search(0, &support, &mut assign, &mut used, &mut |a: &[usize]| {
        let val: Complex<f64> =
            support.iter().zip(a).map(|(&j, &t)| base_roots[t] * coef[j] as f64).sum();
        let scale = 1.0 + val.norm();
        if !l_roots.iter().any(|z| (z - val).norm() < 1e-6 * scale) {
            return;
        }
        let img = support
            .iter()
            .zip(a)
            .fold(l.zero(), |acc, (&j, &t)| acc + &roots[t] * &l.from_int(coef[j]));
        if !eval_in(l.min_poly(), &img).is_zero() {
            return;
        }
        let s = FieldMorphism::new_unchecked(l, img);
        let perm: Vec<usize> = (0..n).map(|j| perm_image(&s, &roots[j], roots)).collect();
        out.push((s, perm));
    });
    out.sort_by(|a, b| (!a.0.is_identity()).cmp(&!b.0.is_identity()).then_with(|| a.1.cmp(&b.1)));
    Ok(out.into_iter().unzip())
}

fn search(
    i: usize,
    support: &[usize],
    assign: &mut Vec<usize>,
    used: &mut Vec<bool>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if i == support.len() {
        visit(assign);
        return;
    }
    for t in 0..used.len() {
        if used[t] {
            continue;
        }
        used[t] = true;
        assign[i] = t;
        search(i + 1, support, assign, used, visit);
        used[t] = false;
    }
}

/// The ring generated by the (scaled) roots of K's polynomial is maximal away from the
/// primes dividing that polynomial's discriminant.
fn install_order(k: &NumberField, l: &NumberField, roots: &[NfElem]) {
    let f = k.min_poly();
    let d = f.denominator();
    let dq = Rational::from_integer(d.clone());
    let gens: Vec<Vec<Rational>> = roots.iter().map(|r| r.scale(&dq).into_coords()).collect();
    // monic integral polynomial with roots d*r
    let n = f.deg();
    let g = QPoly::new(
        (0..=n)
            .map(|i| f.coeff(i) * Rational::from_integer(d.pow((n - i) as u32)))
            .collect(),
    );
    let disc = g.discriminant().to_integer();
    let mut primes: Vec<BigInt> = if disc.is_zero() {
        vec![]
    } else {
        factor_integer(&disc).into_iter().map(|(p, _)| p).collect()
    };
    if !d.is_one() {
        primes.extend(factor_integer(&d).into_iter().map(|(p, _)| p).filter(|p| !primes.contains(p)).collect::<Vec<_>>());
    }
    primes.sort();
    if l != k {
        Order::install(l, gens, primes);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closures_of_corpus_fields() {
        let gi = galois_closure(&NumberField::from_ints(&[1, 0, 1]).unwrap()).unwrap();
        assert_eq!((gi.degree(), gi.group_name().as_str()), (2, "C2"));
        let z5 = galois_closure(&NumberField::from_ints(&[1, 1, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!((z5.degree(), z5.group_name().as_str()), (4, "C4"));
        let q = galois_closure(&NumberField::from_ints(&[3, 0, 6, 0, 1]).unwrap()).unwrap();
        assert_eq!((q.degree(), q.group_name().as_str()), (8, "D4"));
        let c3 = galois_closure(&NumberField::from_ints(&[-2, 0, 0, 1]).unwrap()).unwrap();
        assert_eq!((c3.degree(), c3.group_name().as_str()), (6, "S3"));
    }

    #[test]
    fn embeddings_are_labelled_by_complex_roots() {
        let k = NumberField::from_ints(&[3, 0, 6, 0, 1]).unwrap();
        let c = galois_closure(&k).unwrap();
        for (j, e) in c.embeds.iter().enumerate() {
            let z = e.image_of_generator().embed_f64(0);
            assert!((z - k.embeddings()[j].disc.approx()).norm() < 1e-9);
        }
        // transitive action
        let orbit: std::collections::BTreeSet<usize> = c.perms.iter().map(|p| p[0]).collect();
        assert_eq!(orbit.len(), 4);
        // maximal order of L: disc must be divisible by disc(E)^2
        let o = Order::maximal(&c.field);
        assert!((o.disc() % (BigInt::from(27648) * BigInt::from(27648))).is_zero());
    }

    #[test]
    fn too_large() {
        // x^5 - x - 1 has group S5
        let k = NumberField::from_ints(&[-1, -1, 0, 0, 0, 1]).unwrap();
        assert!(matches!(galois_closure(&k), Err(Error::ClosureTooLarge { .. })));
    }
}
