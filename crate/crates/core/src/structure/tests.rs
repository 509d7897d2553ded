use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::formula::{parse_formula, Class};

fn brdg() -> Signature {
    Signature::of_class(Class::Brdg)
}

/// A chain 0 < 1 < ... < n-1.
fn chain(n: usize) -> PartialStructure {
    let mut s = PartialStructure::new(brdg(), n, 0, n - 1, None).unwrap();
    for a in 0..n {
        for b in a..n {
            s.set_leq(a, b).unwrap();
        }
    }
    s
}

/// N5 with elements 0, a, b, c, 1 and a < c, a \/ b = 1, c /\ b = 0.
fn n5() -> PartialStructure {
    let names = ["0", "a", "b", "c", "1"].map(String::from).to_vec();
    let mut s = PartialStructure::new(brdg(), 5, 0, 4, None)
        .unwrap()
        .with_names(names)
        .unwrap();
    for x in 0..5 {
        s.set_leq(0, x).unwrap();
        s.set_leq(x, 4).unwrap();
    }
    s.set_leq(1, 3).unwrap();
    s.define(Op::Join, 1, 2, 4).unwrap();
    s.define(Op::Meet, 3, 2, 0).unwrap();
    s
}

fn masks(f: &[PrimeFilter]) -> Vec<Mask> {
    f.iter().map(|p| p.0).collect()
}

/// Prime filters straight from the definition, over all subsets.
fn prime_filters_by_definition(s: &PartialStructure, props: Props) -> Vec<Mask> {
    let n = s.size();
    let mut out = Vec::new();
    for f in 0..(1u64 << n) {
        let inside = |a: usize| has(f, a);
        let mut ok = inside(s.one()) && !inside(s.zero());
        for a in 0..n {
            for b in 0..n {
                if s.leq(a, b) && inside(a) && !inside(b) {
                    ok = false;
                }
            }
        }
        for (a, b, c) in s.entries(Op::Meet) {
            ok &= !(inside(a) && inside(b)) || inside(c);
        }
        for (a, b, c) in s.entries(Op::Join) {
            ok &= inside(a) || inside(b) || !inside(c);
        }
        if props.contains(Property::P3) {
            for (a, b, c) in s.entries(Op::Prod) {
                ok &= !(inside(a) && inside(b)) || inside(c);
            }
            for (a, b, c) in s.entries(Op::Under) {
                ok &= !(inside(a) && inside(c)) || inside(b);
            }
            for (a, b, c) in s.entries(Op::Over) {
                ok &= !(inside(c) && inside(b)) || inside(a);
            }
        }
        if ok {
            out.push(f);
        }
    }
    out
}

#[test]
fn two_chain_is_a_partial_lattice() {
    assert_eq!(validate_partial_lattice(&chain(2)), Ok(()));
}

#[test]
fn wrong_meet_is_reported() {
    let mut s = chain(3)
        .with_names(["0", "a", "1"].map(String::from).to_vec())
        .unwrap();
    s.define(Op::Meet, 1, 2, 0).unwrap();
    let v = validate_partial_lattice(&s).unwrap_err();
    assert_eq!(
        v,
        LatticeViolation::MeetNotGlb {
            a: 1,
            b: 2,
            got: 0,
            expected: Some(1)
        }
    );
    assert_eq!(v.describe(&s), "glb(a,1)=a \u{2260} 0");
}

#[test]
fn n5_passes_the_lattice_check() {
    assert_eq!(validate_partial_lattice(&n5()), Ok(()));
}

#[test]
fn order_violations() {
    let mut s = PartialStructure::new(brdg(), 3, 0, 2, None).unwrap();
    s.set_leq(0, 1).unwrap();
    s.set_leq(1, 2).unwrap();
    assert_eq!(
        validate_partial_lattice(&s),
        Err(LatticeViolation::NotTransitive(0, 1, 2))
    );
    s.set_leq(0, 2).unwrap();
    s.set_leq(1, 0).unwrap();
    assert_eq!(
        validate_partial_lattice(&s),
        Err(LatticeViolation::NotAntisymmetric(0, 1))
    );
}

#[test]
fn prime_filters_of_chains() {
    assert_eq!(masks(&prime_filters(&chain(2), Props::EMPTY)), vec![0b10]);
    assert_eq!(masks(&prime_filters(&chain(3), Props::EMPTY)), vec![0b100, 0b110]);
}

#[test]
fn n5_has_no_filter_with_c_but_not_a() {
    let f = masks(&prime_filters(&n5(), Props::EMPTY));
    assert_eq!(f, vec![0b10100, 0b11010]);
    assert!(!f.iter().any(|&m| has(m, 3) && !has(m, 1)));
}

#[test]
fn accessibility_examples() {
    let top = PrimeFilter(0b10);
    let mut s = chain(2);
    s.define(Op::Prod, 1, 1, 1).unwrap();
    assert!(accessibility(&s, top, top, top, Props::EMPTY));

    let mut s = chain(2);
    s.define(Op::Prod, 1, 1, 0).unwrap();
    assert!(!accessibility(&s, top, top, top, Props::EMPTY));

    let s = chain(3);
    let p2 = Props::of(&[Property::P2]);
    for g in [PrimeFilter(0b100), PrimeFilter(0b110)] {
        assert!(!accessibility(&s, PrimeFilter(0b110), g, PrimeFilter(0b100), p2));
    }
}

#[test]
fn refine_examples() {
    let mut s = chain(2);
    s.define(Op::Prod, 1, 1, 1).unwrap();
    let f0 = prime_filters(&s, Props::EMPTY);
    assert_eq!(masks(&refine_filters(&s, &f0, Props::EMPTY)), vec![0b10]);

    let mut s = chain(2);
    s.define(Op::Under, 1, 1, 0).unwrap();
    let f0 = prime_filters(&s, Props::EMPTY);
    assert!(refine_filters(&s, &f0, Props::EMPTY).is_empty());

    let s = chain(2);
    let f0 = prime_filters(&s, Props::EMPTY);
    assert_eq!(refine_filters(&s, &f0, Props::EMPTY), f0);
}

#[test]
fn separation_examples() {
    let s = chain(2);
    assert_eq!(separation_check(&s, &[PrimeFilter(0b10)]), Ok(()));
    let s = n5();
    let f0 = prime_filters(&s, Props::EMPTY);
    assert_eq!(separation_check(&s, &f0), Err((3, 1)));
    assert_eq!(separation_check(&chain(3), &[]), Err((1, 0)));
}

#[test]
fn certify_examples() {
    let mut s = chain(2);
    s.define(Op::Prod, 1, 1, 1).unwrap();
    let cert = certify(&s, Props::EMPTY).unwrap();
    assert_eq!(masks(&cert.family), vec![0b10]);
    assert_eq!(cert.separation, vec![(1, 0, 0)]);
    assert_eq!(cert.witnesses.len(), 1);

    let mut s = chain(2);
    s.define(Op::Under, 1, 1, 0).unwrap();
    let refusal = certify(&s, Props::EMPTY).unwrap_err();
    assert_eq!(refusal, Refusal::FiltersEliminated);
    assert_eq!(refusal.to_string(), "filter elimination emptied F");

    let s = n5();
    let refusal = certify(&s, Props::EMPTY).unwrap_err();
    assert_eq!(refusal, Refusal::Separation { a: 3, b: 1 });
    assert_eq!(refusal.describe(&s), "separation (D) fails: (c,a)");
}

#[test]
fn one_element_structure_is_certified() {
    let mut s = PartialStructure::new(brdg(), 1, 0, 0, None).unwrap();
    s.define(Op::Prod, 0, 0, 0).unwrap();
    s.define(Op::Under, 0, 0, 0).unwrap();
    let cert = certify(&s, Props::of(&[Property::P1, Property::P2, Property::P3])).unwrap();
    assert!(cert.family.is_empty());
}

#[test]
fn unit_is_required_for_p4() {
    let s = chain(2);
    assert_eq!(
        certify(&s, Props::of(&[Property::P4])),
        Err(Refusal::MissingUnit)
    );
}

#[test]
fn p3_strengthens_prime_filters() {
    // 0 < a < 1 with a * a = 0: under P3 a filter containing a must contain 0.
    let mut s = chain(3);
    s.define(Op::Prod, 1, 1, 0).unwrap();
    let p3 = Props::of(&[Property::P3]);
    assert_eq!(masks(&prime_filters(&s, p3)), vec![0b100]);
    assert_eq!(masks(&prime_filters(&s, Props::EMPTY)), vec![0b100, 0b110]);
    assert!(certify(&s, p3).is_err());
}

#[test]
fn evaluation_examples() {
    let mut s = chain(2);
    s.define(Op::Prod, 1, 1, 1).unwrap();
    let phi = parse_formula("x * y <= x", brdg()).unwrap();
    assert_eq!(evaluate_formula(&s, &phi, &[1, 1]), Evaluation::Satisfied);
    match evaluate_formula(&s, &phi, &[1, 0]) {
        Evaluation::Undefined(t) => assert_eq!(phi.terms().display(t).to_string(), "x * y"),
        other => panic!("{other:?}"),
    }
    let phi = parse_formula("!(0 <= 1)", brdg()).unwrap();
    assert_eq!(evaluate_formula(&s, &phi, &[]), Evaluation::False);
}

use crate::corpus::random_structure;

fn all_prop_sets(class: Class) -> Vec<Props> {
    Props::all_subsets()
        .filter(|q| Signature::new(class, *q).is_ok())
        .collect()
}

#[test]
fn prime_filters_match_the_definition() {
    for seed in 0..300 {
        for class in [Class::Brdg, Class::Brdge] {
            let s = random_structure(seed, class);
            for q in all_prop_sets(class) {
                assert_eq!(
                    masks(&prime_filters(&s, q)),
                    prime_filters_by_definition(&s, q),
                    "seed {seed}"
                );
            }
        }
    }
}

#[test]
fn refinement_ignores_the_order_of_the_initial_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..40 {
        let s = random_structure(seed, Class::Brdg);
        let f0 = prime_filters(&s, Props::EMPTY);
        let expected = refine_filters(&s, &f0, Props::EMPTY);
        let mut shuffled = f0.clone();
        for _ in 0..100 {
            shuffled.shuffle(&mut rng);
            assert_eq!(refine_filters(&s, &shuffled, Props::EMPTY), expected);
        }
    }
}

#[test]
fn refusal_is_monotone_in_the_properties() {
    for seed in 0..300 {
        let s = random_structure(seed, Class::Brdg);
        if certify(&s, Props::EMPTY).is_err() {
            for q in all_prop_sets(Class::Brdg) {
                assert!(certify(&s, q).is_err(), "seed {seed} {q}");
            }
        }
    }
}

#[test]
fn restriction_preserves_certification() {
    for seed in 0..300 {
        for class in [Class::Brdg, Class::Brdge] {
            let s = random_structure(seed, class);
            for q in all_prop_sets(class) {
                if certify(&s, q).is_err() {
                    continue;
                }
                for (op, a, b, _) in s.all_entries() {
                    let mut smaller = s.clone();
                    smaller.undefine(op, a, b);
                    assert!(certify(&smaller, q).is_ok(), "seed {seed} {q} drop {op:?}({a},{b})");
                }
            }
        }
    }
}

#[test]
fn shrunk_certificates_still_certify() {
    for seed in 0..200 {
        let s = random_structure(seed, Class::Brdg);
        if let Ok(cert) = certify(&s, Props::EMPTY) {
            let small = shrink_certificate(&s, &cert);
            assert!(small.family.len() <= cert.family.len());
            assert!(check_certificate(&s, &small), "seed {seed}");
            assert!(check_certificate(&s, &cert), "seed {seed}");
        }
    }
}

proptest! {
    #[test]
    fn accessibility_is_monotone(seed in 0u64..5000, qbits in 0u8..8) {
        let s = random_structure(seed, Class::Brdg);
        let q = Props::all_subsets().nth(qbits as usize).unwrap();
        let f = prime_filters(&s, q);
        for &x in &f {
            for &y in &f {
                for &z in &f {
                    if !accessibility(&s, x, y, z, q) {
                        continue;
                    }
                    for &w in &f {
                        if w.0 & !x.0 == 0 {
                            prop_assert!(accessibility(&s, w, y, z, q));
                        }
                        if w.0 & !y.0 == 0 {
                            prop_assert!(accessibility(&s, x, w, z, q));
                        }
                        if z.0 & !w.0 == 0 {
                            prop_assert!(accessibility(&s, x, y, w, q));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn certificates_record_valid_witnesses(seed in 0u64..5000) {
        let s = random_structure(seed, Class::Brdge);
        let q = Props::of(&[Property::P4]);
        if let Ok(cert) = certify(&s, q) {
            let fam = &cert.family;
            let rel = |f: usize, g: usize, h: usize| accessibility(&s, fam[f], fam[g], fam[h], q);
            for w in &cert.witnesses {
                let [a, b, _] = w.entry;
                let x = w.filter;
                match w.condition {
                    Condition::Prod => prop_assert!(rel(w.first, w.second, x)
                        && fam[w.first].contains(a) && fam[w.second].contains(b)),
                    Condition::Under => prop_assert!(rel(w.first, x, w.second)
                        && fam[w.first].contains(a) && !fam[w.second].contains(b)),
                    Condition::Over => prop_assert!(rel(x, w.first, w.second)
                        && fam[w.first].contains(b) && !fam[w.second].contains(a)),
                    Condition::UnitRight => prop_assert!(rel(x, w.first, x)),
                    Condition::UnitLeft => prop_assert!(rel(w.first, x, x)),
                }
            }
        }
    }
}
