use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::oracle::{enumerate_distributive_lattices, enumerate_operators, is_member};
use crate::structure::certify;
use crate::corpus::random_structure;

fn one_point(rel: Mask) -> Frame {
    Frame::Groupoid(GroupoidFrame {
        poset: Poset::discrete(1),
        rel: vec![rel],
        units: None,
    })
}

fn chain_structure(n: usize) -> PartialStructure {
    let mut s = PartialStructure::new(Signature::of_class(Class::Brdg), n, 0, n - 1, None).unwrap();
    for a in 0..n {
        for b in a..n {
            s.set_leq(a, b).unwrap();
        }
    }
    s
}

fn oracle_algebras(max: usize) -> Vec<FiniteAlgebra> {
    let mut out = Vec::new();
    for l in enumerate_distributive_lattices(max).unwrap() {
        for class in Class::ALL {
            out.extend(enumerate_operators(&l, class, Signature::of_class(class).props()).unwrap());
        }
    }
    out
}

/// A random frame on up to `max` points, closed under the monotonicity
/// conditions.
fn random_frame(rng: &mut ChaCha8Rng, max: usize) -> GroupoidFrame {
    let n = rng.gen_range(1..=max);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|_| rng.gen_bool(0.3))
        .collect();
    let poset = Poset::from_pairs(n, &pairs).unwrap();
    let mut rel = vec![0; n * n];
    for _ in 0..rng.gen_range(0..=n * n) {
        let (x, y, z) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        for x2 in (0..n).filter(|&w| poset.leq(w, x)) {
            for y2 in (0..n).filter(|&w| poset.leq(w, y)) {
                rel[x2 * n + y2] |= poset.up(z);
            }
        }
    }
    if rng.gen_bool(0.3) {
        // Symmetric, so that commutativity shows up often enough.
        for x in 0..n {
            for y in 0..n {
                let r = rel[x * n + y] | rel[y * n + x];
                rel[x * n + y] = r;
                rel[y * n + x] = r;
            }
        }
    }
    if rng.gen_bool(0.3) {
        for x in 0..n {
            for y in 0..n {
                rel[x * n + y] &= poset.up(x) & poset.up(y);
            }
        }
    }
    let units = rng.gen_bool(0.2).then(|| bits::from_iter((0..n).filter(|_| rng.gen_bool(0.5))));
    GroupoidFrame { poset, rel, units }
}

#[test]
fn frame_check_examples() {
    for q in Props::all_subsets().filter(|q| !q.contains(Property::P4)) {
        assert_eq!(check_frame(&one_point(1), q), Ok(()));
    }
    let frame = Frame::Groupoid(GroupoidFrame {
        poset: Poset::from_pairs(2, &[(0, 1)]).unwrap(),
        rel: vec![0, 0, bit(0), 0],
        units: None,
    });
    match check_frame(&frame, Props::EMPTY) {
        Err(FrameViolation::Condition { name, .. }) => assert_eq!(name, "FR1"),
        other => panic!("{other:?}"),
    }
    assert_eq!(
        check_frame(&one_point(1), Props::of(&[Property::P4])),
        Err(FrameViolation::MissingUnits)
    );
}

#[test]
fn upsets_of_small_posets() {
    assert_eq!(Poset::discrete(2).upsets(), vec![0, 1, 2, 3]);
    let chain = Poset::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
    assert_eq!(chain.upsets(), vec![0, 0b100, 0b110, 0b111]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let p = random_frame(&mut rng, 6).poset;
        let by_subsets: Vec<Mask> = (0..1u64 << p.size()).filter(|&m| p.is_upset(m)).collect();
        let mut ups = p.upsets();
        ups.sort();
        assert_eq!(ups, by_subsets);
    }
}

#[test]
fn complex_algebra_examples() {
    let a = complex_algebra(&one_point(1)).unwrap();
    assert_eq!(a.size(), 2);
    assert_eq!(a.prod(1, 1), Some(1));
    assert_eq!(a.under(1, 1), Some(1));
    let b = complex_algebra(&one_point(0)).unwrap();
    assert_eq!(b.prod(1, 1), Some(0));

    let d = Frame::Diamond(DiamondFrame {
        poset: Poset::discrete(2),
        rel: vec![bit(1), 0],
    });
    let a = complex_algebra(&d).unwrap();
    // Upsets in order: {}, {p}, {q}, {p, q}.
    assert_eq!(a.size(), 4);
    assert_eq!(a.diamond(2), Some(1));
    assert_eq!(a.diamond(1), Some(0));
    assert!(is_member(&a, Class::Bdo, Props::EMPTY));
}

#[test]
fn complex_algebras_are_residuated() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let mut f = random_frame(&mut rng, 5);
        f.units = None;
        let a = complex_algebra(&Frame::Groupoid(f.clone())).unwrap();
        assert!(is_member(&a, Class::Brdg, Props::EMPTY), "{f:?}");
    }
}

#[test]
fn frame_conditions_give_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut seen = Props::EMPTY;
    for _ in 0..400 {
        let f = random_frame(&mut rng, 4);
        let holds = f.properties();
        let frame = Frame::Groupoid(f.clone());
        if f.units.is_some() && !holds.contains(Property::P4) {
            assert!(complex_algebra(&frame).is_err());
            continue;
        }
        let a = complex_algebra(&frame).unwrap();
        assert!(holds.is_subset(a.satisfied_properties()), "{f:?}");
        seen = seen.union(holds);
    }
    assert!(Props::of(&[Property::P1, Property::P2, Property::P3]).is_subset(seen));
}

#[test]
fn canonical_frame_examples() {
    let two = Arc::new(Lattice::of_sets(&[0, 1]).unwrap());
    let sig = Signature::of_class(Class::Brdg);
    let meet = FiniteAlgebra::new(
        sig,
        two.clone(),
        Operations {
            prod: Some(vec![0, 0, 0, 1]),
            under: Some(vec![1, 1, 0, 1]),
            over: Some(vec![1, 0, 1, 1]),
            ..Operations::default()
        },
    )
    .unwrap();
    let cf = canonical_frame(&meet).unwrap();
    assert_eq!(cf.filters, vec![0b10]);
    assert_eq!(cf.frame, one_point(1));
    let zero = FiniteAlgebra::new(
        sig,
        two,
        Operations {
            prod: Some(vec![0, 0, 0, 0]),
            under: Some(vec![1, 1, 1, 1]),
            over: Some(vec![1, 1, 1, 1]),
            ..Operations::default()
        },
    )
    .unwrap();
    assert_eq!(canonical_frame(&zero).unwrap().frame, one_point(0));

    let three = Arc::new(Lattice::of_sets(&[0, 1, 3]).unwrap());
    let bdo = FiniteAlgebra::new(
        Signature::of_class(Class::Bdo),
        three,
        Operations {
            diamond: Some(vec![0, 2, 2]),
            ..Operations::default()
        },
    )
    .unwrap();
    let cf = canonical_frame(&bdo).unwrap();
    // Points: {a, 1} then {1}.
    assert_eq!(cf.filters, vec![0b110, 0b100]);
    match cf.frame {
        Frame::Diamond(d) => assert_eq!(d.rel, vec![0b11, 0b11]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn prime_filters_match_the_definition() {
    for a in oracle_algebras(4) {
        let l = a.lattice();
        let n = l.size();
        let mut by_definition: Vec<Mask> = (0..1u64 << n)
            .filter(|&f| {
                has(f, l.one())
                    && !has(f, l.zero())
                    && (0..n).all(|x| {
                        (0..n).all(|y| {
                            (!has(f, x) || !l.leq(x, y) || has(f, y))
                                && (!(has(f, x) && has(f, y)) || has(f, l.meet(x, y)))
                                && (!has(f, l.join(x, y)) || has(f, x) || has(f, y))
                        })
                    })
            })
            .collect();
        let mut ours = algebra_prime_filters(l).unwrap();
        by_definition.sort();
        ours.sort();
        assert_eq!(ours, by_definition);
    }
}

#[test]
fn canonical_round_trip_embeds() {
    for a in oracle_algebras(4) {
        let cf = canonical_frame(&a).unwrap();
        assert_eq!(check_frame(&cf.frame, Props::EMPTY), Ok(()));
        let (complex, map) = canonical_embedding(&a).unwrap();
        assert_eq!(verify_embedding(&a.to_partial().unwrap(), &complex, &map), Ok(()));
    }
}

#[test]
fn canonical_frame_facts() {
    for a in oracle_algebras(4) {
        if a.class().is_residuated() {
            assert_eq!(relation_definitions_agree(&a).unwrap(), Ok(()));
        }
        assert_eq!(fusion_witnesses(&a).unwrap(), Ok(()));
        assert_eq!(unit_witnesses(&a).unwrap(), Ok(()));
    }
}

#[test]
fn properties_transfer_to_canonical_frames() {
    for l in enumerate_distributive_lattices(4).unwrap() {
        for class in [Class::Brdg, Class::Brdge] {
            for a in enumerate_operators(&l, class, Signature::of_class(class).props()).unwrap() {
                let Frame::Groupoid(g) = canonical_frame(&a).unwrap().frame else {
                    panic!("groupoid frame expected");
                };
                let mut holds = a.satisfied_properties();
                if class == Class::Brdg {
                    holds = holds.without(Property::P4);
                }
                assert!(holds.is_subset(g.properties()));
            }
        }
    }
}

#[test]
fn completion_examples() {
    let mut s = chain_structure(2);
    s.define(Op::Prod, 1, 1, 1).unwrap();
    let cert = certify(&s, Props::EMPTY).unwrap();
    let c = completion(&s, &cert).unwrap();
    assert_eq!(c.algebra.size(), 2);
    assert_eq!(c.algebra.prod(1, 1), Some(1));
    assert_eq!(c.algebra.prod(0, 1), Some(0));
    assert_eq!(c.map, vec![0, 1]);

    let s = chain_structure(3);
    let cert = certify(&s, Props::EMPTY).unwrap();
    assert_eq!(cert.family.len(), 2);
    let c = completion(&s, &cert).unwrap();
    assert_eq!(c.algebra.size(), 3);
    assert!(is_member(&c.algebra, Class::Brdg, Props::EMPTY));
}

#[test]
fn stale_certificates_are_rejected() {
    let mut s = chain_structure(2);
    let cert = certify(&s, Props::EMPTY).unwrap();
    s.define(Op::Under, 1, 1, 0).unwrap();
    assert_eq!(completion(&s, &cert).unwrap_err(), DualityError::StaleCertificate);
}

#[test]
fn completions_of_random_structures() {
    let mut checked = 0;
    for seed in 0..300 {
        for class in Class::ALL {
            let s = random_structure(seed, class);
            let q = s.signature().props();
            let Ok(cert) = certify(&s, q) else { continue };
            let c = completion(&s, &cert).unwrap();
            assert!(is_member(&c.algebra, class, q), "seed {seed} {class}");
            assert_eq!(verify_embedding(&s, &c.algebra, &c.map), Ok(()));
            checked += 1;
        }
    }
    assert!(checked > 100, "{checked}");
}

