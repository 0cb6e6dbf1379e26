use cmreflex::classgroup::class_group;
use cmreflex::nf::NumberField;
use cmreflex::order::Order;

/// Number of reduced primitive positive definite forms of discriminant d < 0.
fn reduced_forms(d: i64) -> usize {
    let mut h = 0;
    let mut a = 1;
    while 3 * a * a <= -d {
        for b in -a + 1..=a {
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (c == a && b < 0) {
                continue;
            }
            if gcd(gcd(a, b.abs()), c) == 1 {
                h += 1;
            }
        }
        a += 1;
    }
    h
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn squarefree(n: i64) -> bool {
    (2..).take_while(|p| p * p <= n).all(|p| n % (p * p) != 0)
}

#[test]
fn imaginary_quadratic_class_numbers_match_form_count() {
    for m in 1..=150i64 {
        if !squarefree(m) {
            continue;
        }
        let disc = if (-m).rem_euclid(4) == 1 { -m } else { -4 * m };
        let k = NumberField::from_ints(&[m, 0, 1]).unwrap();
        let o = Order::maximal(&k);
        assert_eq!(o.disc(), &disc.into());
        let cg = class_group(&o).unwrap();
        assert_eq!(cg.class_number(), reduced_forms(disc), "m = {m}");
        // the table is a group table with the unit class as identity
        let h = cg.class_number();
        for i in 0..h {
            assert_eq!(cg.table[0][i], i);
            let row: std::collections::BTreeSet<_> = cg.table[i].iter().collect();
            assert_eq!(row.len(), h);
        }
    }
}

#[test]
fn real_quadratic_class_numbers() {
    // h(Q(sqrt m)) for small m, checked against the class numbers of forms
    for (m, h) in [(2, 1), (3, 1), (5, 1), (10, 2), (15, 2), (26, 2), (30, 2), (79, 3), (82, 4), (229, 3)] {
        let k = NumberField::from_ints(&[-m, 0, 1]).unwrap();
        assert_eq!(class_group(&Order::maximal(&k)).unwrap().class_number(), h, "m = {m}");
    }
}
