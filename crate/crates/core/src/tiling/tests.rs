use super::*;

macro_rules! fixture {
    ($name:literal) => {
        serde_json::from_str::<TilingInstance>(include_str!(concat!(
            "../../../../fixtures/tiling/",
            $name,
            ".json"
        )))
        .unwrap()
    };
}

fn all_fixtures() -> Vec<(&'static str, TilingInstance, GameOutcome)> {
    use GameOutcome::*;
    vec![
        ("root_won_n1_s0", fixture!("root_won_n1_s0"), EloiseWins),
        ("eloise_first_move_n1", fixture!("eloise_first_move_n1"), EloiseWins),
        ("endless_play_n1", fixture!("endless_play_n1"), AbelardWins),
        ("eloise_stuck_n1", fixture!("eloise_stuck_n1"), AbelardWins),
        ("eloise_first_move_n2", fixture!("eloise_first_move_n2"), EloiseWins),
        ("abelard_stuck_n2", fixture!("abelard_stuck_n2"), AbelardWins),
        ("endless_play_n2", fixture!("endless_play_n2"), AbelardWins),
        ("root_won_n2", fixture!("root_won_n2"), EloiseWins),
        ("abelard_forced_s2", fixture!("abelard_forced_s2"), EloiseWins),
    ]
}

fn plain_instance(n: usize, s: usize) -> TilingInstance {
    TilingInstance {
        colors: 1,
        tiles: vec![Tile::plain(0); s + 2],
        n,
        first_row: vec![1; n],
    }
}

#[test]
fn validation() {
    let good = plain_instance(1, 0);
    assert_eq!(good.validate(), Ok(()));
    let mut bad = good.clone();
    bad.tiles[0].up = 0;
    bad.colors = 2;
    bad.tiles[0].left = 1;
    assert_eq!(bad.validate(), Err(TilingError::BoundaryTile));
    let mut bad = good.clone();
    bad.first_row = vec![0];
    assert!(matches!(bad.validate(), Err(TilingError::FirstRowTile { .. })));
    let mut bad = good.clone();
    bad.first_row = vec![1, 1];
    assert!(matches!(bad.validate(), Err(TilingError::FirstRowLength { .. })));
    let mut bad = good.clone();
    bad.tiles[1].down = 3;
    assert_eq!(bad.validate(), Err(TilingError::Colour(1)));
    let mut bad = good;
    bad.tiles.truncate(1);
    assert_eq!(bad.validate(), Err(TilingError::TooFewTiles));
}

#[test]
fn json_uses_first_row_key() {
    let t = plain_instance(2, 1);
    let text = serde_json::to_string(&t).unwrap();
    assert!(text.contains("\"firstRow\":[1,1]"), "{text}");
    assert_eq!(serde_json::from_str::<TilingInstance>(&text).unwrap(), t);
}

#[test]
fn variable_inventory() {
    let t = plain_instance(1, 0);
    assert_eq!(t.counter_bits().unwrap(), 3);
    let f = build_modal_formula(&t).unwrap();
    assert_eq!(f.formula().variables().len(), 12);
    let t = plain_instance(2, 1);
    // N = 3^4 = 81.
    assert_eq!(t.counter_bits().unwrap(), 7);
    let vars = build_modal_formula(&t).unwrap().formula().variables();
    assert_eq!(vars.len(), 2 + 4 * 3 + 2 + 7);
}

#[test]
fn formula_parts() {
    for n in 1..=3 {
        let t = plain_instance(n, 1);
        let f = build_modal_formula(&t).unwrap();
        // eloise, p1 and the n + 2 column literals.
        assert_eq!(f.init.len(), n + 4);
        assert_eq!(f.rules.len(), 9);
        let r3 = and(vec![col(0, 0), col(n + 1, 0)]).forall();
        assert_eq!(f.rules[2], r3);
        assert!(f.formula().forall_only_on_top());
    }
}

#[test]
fn kripke_examples() {
    let single = KripkeModel {
        worlds: 1,
        succ: vec![vec![]],
        valuation: HashMap::from([("p".to_string(), WorldSet::from_iter(1, [0]))]),
    };
    assert!(!kripke_check(&single, 0, &ModalFormula::Top.diamond()).unwrap());
    assert!(kripke_check(&single, 0, &ModalFormula::var("p").forall()).unwrap());
    assert!(matches!(
        kripke_check(&single, 0, &ModalFormula::var("q")),
        Err(TilingError::UnknownVariable(_))
    ));
    let two = KripkeModel {
        worlds: 2,
        succ: vec![vec![1], vec![]],
        valuation: HashMap::from([("p".to_string(), WorldSet::from_iter(2, [1]))]),
    };
    let p = ModalFormula::var("p");
    assert!(kripke_check(&two, 0, &p.clone().diamond()).unwrap());
    assert!(kripke_check(&two, 0, &p.clone().boxed()).unwrap());
    assert!(kripke_check(&two, 1, &p.clone().not().boxed()).unwrap());
    assert!(!kripke_check(&two, 0, &p.forall()).unwrap());
}

#[test]
fn game_examples() {
    assert_eq!(solve_game(&plain_instance(1, 0)).unwrap(), GameOutcome::EloiseWins);
    for (name, t, expected) in all_fixtures() {
        assert_eq!(solve_game(&t).unwrap(), expected, "{name}");
    }
}

#[test]
fn game_budget() {
    let t = plain_instance(6, 3);
    assert!(matches!(solve_game(&t), Err(TilingError::Budget(_))));
}

#[test]
fn strategy_models_satisfy_the_formula() {
    for (name, t, expected) in all_fixtures() {
        let m = strategy_model(&t).unwrap();
        assert_eq!(m.is_some(), expected == GameOutcome::EloiseWins, "{name}");
        if let Some(m) = m {
            let phi = build_modal_formula(&t).unwrap().formula();
            assert!(kripke_check(&m, 0, &phi).unwrap(), "{name}");
        }
    }
}

#[test]
fn forced_win_takes_two_moves() {
    let t = fixture!("abelard_forced_s2");
    let m = strategy_model(&t).unwrap().unwrap();
    assert!(m.worlds >= 3);
    let won = &m.valuation["c1_T3"];
    assert!(!won.contains(0));
    assert!(won.iter().count() >= 1);
}

#[test]
fn translation_fragment() {
    // [A](!e | [] !e) as in the player rule.
    let e = ModalFormula::var("e");
    let phi = or(vec![e.clone().not(), e.not().boxed()]).forall();
    let tr = translate(&phi).unwrap();
    let names: Vec<&str> = tr.fresh.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["e'", "bn_e"]);
    assert_eq!(tr.zeta_atoms, 4);
    let text = tr.formula.to_string();
    assert!(text.contains("bn_e \\/ <>e = 1"), "{text}");
    assert!(text.contains("bn_e /\\ <>e = 0"), "{text}");
    assert!(text.contains("e' \\/ bn_e = 1"), "{text}");
    // The unquantified part is empty, so chi* is 1.
    assert!(text.contains("!(1 = 0)"), "{text}");
}

#[test]
fn translation_of_top_under_diamond() {
    let phi = ModalFormula::Top.diamond();
    let tr = translate(&phi).unwrap();
    assert_eq!(tr.formula.to_string(), "!(<>1 = 0)");
}

#[test]
fn unsupported_box_is_rejected() {
    let p = ModalFormula::var("p");
    let q = ModalFormula::var("q");
    let phi = or(vec![p.clone(), q.not()]).boxed();
    assert!(matches!(translate(&phi), Err(TilingError::UnsupportedBox(_))));
    let nested = p.forall().diamond();
    assert!(matches!(translate(&nested), Err(TilingError::NestedForall(_))));
}

#[test]
fn translation_hygiene() {
    for (name, t, _) in all_fixtures() {
        let phi = build_modal_formula(&t).unwrap().formula();
        let tr = translate(&phi).unwrap();
        assert!(tr.fresh.len() <= tr.boxes + tr.modal_vars.len(), "{name}");
        assert_eq!(tr.zeta_atoms, 2 * tr.fresh.len(), "{name}");
        let kinds: std::collections::HashSet<&Fresh> = tr.fresh.iter().map(|(_, k)| k).collect();
        assert_eq!(kinds.len(), tr.fresh.len(), "{name}");
        let text = tr.formula.to_string();
        let back = QFFormula::parse(&text, Signature::of_class(Class::Bdo)).unwrap();
        assert_eq!(back.to_string(), text, "{name}");
        let Formula::And(parts) = tr.formula.body() else {
            panic!("{name}: not a conjunction")
        };
        let negated = parts.iter().filter(|p| matches!(p, Formula::Not(_))).count();
        assert_eq!(negated, 1, "{name}");
    }
}

#[test]
fn model_to_algebra_examples() {
    let p = ModalFormula::var("p");
    let phi = and(vec![p.clone(), p.clone().boxed()]);
    let tr = translate(&phi).unwrap();
    let reflexive = KripkeModel {
        worlds: 1,
        succ: vec![vec![0]],
        valuation: HashMap::from([("p".to_string(), WorldSet::from_iter(1, [0]))]),
    };
    let (a, v) = model_to_algebra(&reflexive, &tr).unwrap();
    let value = |name: &str| &v[tr.formula.var_names().iter().position(|x| x == name).unwrap()];
    assert!(value("p'").is_empty());
    assert_eq!(value("b_p"), &WorldSet::full(1));
    assert_eq!(tr.formula.evaluate(&a, &v), Evaluation::Satisfied);
    let irreflexive = KripkeModel {
        worlds: 1,
        succ: vec![vec![]],
        valuation: HashMap::from([("p".to_string(), WorldSet::empty(1))]),
    };
    let (_, v) = model_to_algebra(&irreflexive, &tr).unwrap();
    let b = &v[tr.formula.var_names().iter().position(|x| x == "b_p").unwrap()];
    assert_eq!(b, &WorldSet::full(1));
}

#[test]
fn pipeline_on_fixtures() {
    for (name, t, expected) in all_fixtures() {
        let r = round_trip(&t, 3).unwrap();
        assert_eq!(r.outcome, expected, "{name}");
        assert!(r.consistent(), "{name}: {r:?}");
    }
}

#[test]
fn bounded_search_finds_small_models() {
    let t = fixture!("eloise_first_move_n1");
    let phi = build_modal_formula(&t).unwrap().formula();
    let (m, root) = bounded_model_search(&phi, 4).expect("a model with few worlds");
    assert!(kripke_check(&m, root, &phi).unwrap());
    let p = ModalFormula::var("p");
    let contradiction = and(vec![p.clone(), p.not()]);
    assert!(bounded_model_search(&contradiction, 3).is_none());
}

#[test]
fn finite_algebra_to_model() {
    use crate::algebra::{Lattice, Operations};
    use std::sync::Arc;
    let phi = and(vec![ModalFormula::var("x"), ModalFormula::Top.diamond()]);
    let tr = translate(&phi).unwrap();
    let lattice = Arc::new(Lattice::of_order(2, vec![true, true, false, true]).unwrap());
    let ops = Operations {
        diamond: Some(vec![0, 1]),
        ..Operations::default()
    };
    let a = FiniteAlgebra::new(Signature::of_class(Class::Bdo), lattice, ops).unwrap();
    let names = tr.formula.var_names().to_vec();
    let v: Vec<usize> = names.iter().map(|n| if n == "x" { 1 } else { 0 }).collect();
    assert_eq!(tr.formula.evaluate(&a, &v), Evaluation::Satisfied);
    let (m, root) = algebra_to_model(&a, &v, &tr).unwrap();
    assert_eq!(m.worlds, 1);
    assert!(kripke_check(&m, root, &phi).unwrap());
    let v0 = vec![0; names.len()];
    assert!(matches!(algebra_to_model(&a, &v0, &tr), Err(TilingError::NoInitialWorld)));
}
