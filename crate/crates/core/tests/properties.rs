mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use hypergeo::algebra::{AlgebraSystem, SolveStatus};
use hypergeo::lang::{detokenize, tokenize, FormalSystem, Term, Tokenizer};
use hypergeo::scalar::Scalar;
use hypergeo::Rational;
use proptest::prelude::*;

fn system() -> Arc<FormalSystem> {
    common::corpus().system
}

fn letters(n: usize) -> impl Strategy<Value = String> {
    prop::sample::subsequence(('A'..='L').collect::<Vec<_>>(), n).prop_shuffle().prop_map(|v| v.into_iter().collect())
}

fn relation() -> impl Strategy<Value = Term> {
    prop_oneof![
        (letters(4)).prop_map(|p| Term::app("Parallel", vec![Term::points(&p[..2]), Term::points(&p[2..])])),
        letters(3).prop_map(|p| Term::app("Triangle", vec![Term::points(p)])),
        letters(3).prop_map(|p| Term::app("RightTriangle", vec![Term::points(p)])),
        letters(3).prop_map(|p| Term::app("IsoscelesTriangle", vec![Term::points(p)])),
        letters(3).prop_map(|p| Term::app("Midpoint", vec![Term::points(&p[..1]), Term::points(&p[1..])])),
    ]
}

fn quantity() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        letters(2).prop_map(|p| Term::app("LengthOfLine", vec![Term::points(p)])),
        letters(3).prop_map(|p| Term::app("MeasureOfAngle", vec![Term::points(p)])),
        (0u32..2000, 0u32..4).prop_map(|(n, scale)| Term::num(&format!("{}", n as f64 / 10f64.powi(scale as i32)))),
        (1u32..500).prop_map(|n| Term::num(&format!("-{n}"))),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["Add", "Sub", "Mul", "Div", "Pow"]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Term::app(op, vec![a, b])),
            (prop::sample::select(vec!["Sqrt", "Sin", "Cos", "Tan"]), inner).prop_map(|(f, a)| Term::app(f, vec![a])),
        ]
    })
}

fn condition() -> impl Strategy<Value = Term> {
    prop_oneof![relation(), (quantity(), quantity()).prop_map(|(a, b)| Term::equal(a, b))]
}

proptest! {
    #[test]
    fn canonical_form_is_idempotent_and_orbit_invariant(body in relation()) {
        let sys = system();
        let c = sys.canonicalize(&body);
        prop_assert_eq!(sys.canonicalize(&c), c.clone());
        let decl = sys.decl(body.head().unwrap()).unwrap();
        for flat in sys.orbit_points(&body) {
            prop_assert_eq!(sys.canonicalize(&decl.with_points(&flat)), c.clone());
        }
        // brute-force minimum of the token lists over the orbit
        let min = sys.orbit_points(&body).into_iter().map(|f| tokenize(&decl.with_points(&f))).min().unwrap();
        prop_assert_eq!(tokenize(&c), min);
    }

    #[test]
    fn equations_canonicalize_order_free(a in quantity(), b in quantity()) {
        let sys = system();
        prop_assert_eq!(sys.canonicalize(&Term::equal(a.clone(), b.clone())), sys.canonicalize(&Term::equal(b, a)));
    }

    #[test]
    fn tokens_round_trip(body in condition(), vocab in prop::collection::btree_set("[0-9]{1,2}", 0..20)) {
        let sys = system();
        prop_assert_eq!(detokenize(&tokenize(&body), &sys).unwrap(), body.clone());
        let closed = Tokenizer::closed(vocab);
        prop_assert_eq!(detokenize(&closed.tokenize(&body), &sys).unwrap(), body.clone());
        // and through the surface syntax
        prop_assert_eq!(sys.parse_condition(&body.to_string()).unwrap(), body);
    }

    #[test]
    fn linear_systems_recover_planted_values(
        values in prop::collection::vec(-50i64..50, 2..6),
        rows in prop::collection::vec(prop::collection::vec(-4i64..=4, 6), 1..8),
    ) {
        // Sum of c_i * x_i = b with b computed from the planted values.
        let sys = system();
        let n = values.len();
        let sym = |i: usize| Term::app("LengthOfLine", vec![Term::points(format!("A{}", (b'B' + i as u8) as char))]);
        let mut alg: AlgebraSystem<Rational> = AlgebraSystem::new(sys.clone());
        let mut matrix: Vec<Vec<i64>> = Vec::new();
        for (r, coefs) in rows.iter().enumerate() {
            let coefs = &coefs[..n];
            let mut lhs: Option<Term> = None;
            for (i, &c) in coefs.iter().enumerate().filter(|(_, &c)| c != 0) {
                let t = Term::app("Mul", vec![Term::num(&c.to_string()), sym(i)]);
                lhs = Some(match lhs { None => t, Some(acc) => Term::app("Add", vec![acc, t]) });
            }
            let Some(lhs) = lhs else { continue };
            let b: i64 = coefs.iter().zip(&values).map(|(c, v)| c * v).sum();
            alg.add_equation(&Term::equal(lhs, Term::num(&b.to_string())), r).unwrap();
            matrix.push(coefs.to_vec());
        }
        for i in 0..n {
            let target = sym(i);
            if alg.lookup(&target).is_none() {
                continue;
            }
            let res = alg.solve_value(&target, Duration::from_secs(2));
            // determined iff the unit vector e_i lies in the row space
            let determined = rank(&matrix) == rank(&[matrix.clone(), vec![unit(n, i)]].concat());
            prop_assert_eq!(res.status == SolveStatus::Solved, determined);
            if determined {
                prop_assert_eq!(res.value.unwrap(), Rational::from_ratio(values[i], 1));
                let again = alg.restricted(&res.used).solve_value(&target, Duration::from_secs(2));
                prop_assert_eq!(again.value.unwrap(), Rational::from_ratio(values[i], 1));
            }
        }
    }
}

fn unit(n: usize, i: usize) -> Vec<i64> {
    (0..n).map(|j| i64::from(j == i)).collect()
}

/// Rank by fraction-free elimination over i128.
fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let (a, b) = (m[r][c], m[i][c]);
                for j in 0..cols {
                    m[i][j] = m[i][j] * a - m[r][j] * b;
                }
                let g = m[i].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
                if g > 1 {
                    m[i].iter_mut().for_each(|x| *x /= g);
                }
            }
        }
        r += 1;
    }
    r
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn symmetric_orbits_have_expected_sizes() {
    let sys = system();
    let size = |name: &str| sys.decl(name).unwrap().group.len();
    assert_eq!(size("Parallel"), 4);
    assert_eq!(size("Triangle"), 6);
    assert_eq!(size("RightTriangle"), 2);
    assert_eq!(size("IsoscelesTriangle"), 2);
    assert_eq!(size("Midpoint"), 2);
    let distinct: BTreeSet<Vec<char>> = sys.orbit_points(&sys.parse_condition("Triangle(ABC)").unwrap()).into_iter().collect();
    assert_eq!(distinct.len(), 6);
}
