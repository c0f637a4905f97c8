mod common;

use std::collections::BTreeSet;

use common::{cycle_example, q, random_instance, reference_growth, rng, RandomSpec};
use qbdst::gen::gen_bad_example;
use qbdst::{grow_phase, solve, validate, ArcId, BucketKind, GrowthRule, Instance, Rational};

fn engine_matches_reference(inst: &Instance, rule: GrowthRule) {
    let reference = reference_growth(inst, rule);
    let trace = match rule {
        GrowthRule::Bucketed => grow_phase(inst).unwrap(),
        GrowthRule::Standard => qbdst::solve_standard_baseline(inst).unwrap().1,
    };
    let engine: Vec<(Rational, ArcId, BucketKind)> = trace
        .iterations
        .iter()
        .map(|it| (it.epsilon.clone(), it.purchased.arc, it.purchased.label))
        .collect();
    let expected: Vec<(Rational, ArcId, BucketKind)> =
        reference.steps.iter().map(|s| (s.epsilon.clone(), s.arc, s.label)).collect();
    assert_eq!(engine, expected, "{}", inst.to_text());
    let engine_duals: Vec<(BTreeSet<usize>, Rational)> =
        trace.duals.iter().map(|(k, y)| (k.to_set(), y.clone())).collect();
    let reference_duals: Vec<(BTreeSet<usize>, Rational)> = reference.duals.into_iter().collect();
    assert_eq!(engine_duals, reference_duals);
}

#[test]
fn cycle_example_trace() {
    let inst = cycle_example();
    let reference = reference_growth(&inst, GrowthRule::Bucketed);
    let steps: Vec<_> = reference.steps.iter().map(|s| (s.epsilon.clone(), s.arc, s.label)).collect();
    // a2 collects killer payments from {t2} in the first two iterations, so
    // its bucket is the first to fill in the third.
    assert_eq!(
        steps,
        vec![
            (q(1, 1), ArcId(2), BucketKind::Killer),
            (q(1, 1), ArcId(3), BucketKind::Expansion),
            (q(1, 1), ArcId(1), BucketKind::Killer),
        ]
    );
    assert_eq!(reference.dual_total(), q(4, 1));
    engine_matches_reference(&inst, GrowthRule::Bucketed);

    let (sol, _) = solve(&inst).unwrap();
    assert_eq!(sol.final_arcs, vec![ArcId(2), ArcId(1)]);
    assert_eq!(sol.total_cost, q(4, 1));
    assert_eq!(sol.lower_bound, q(2, 1));
}

#[test]
fn random_instances_match_reference() {
    let spec = RandomSpec { max_nodes: 6, max_arcs: 14, max_cost: 4, halves: true, feasible: true };
    for seed in 0..300 {
        let inst = random_instance(&mut rng(seed), &spec);
        assert!(validate(&inst).is_empty(), "seed {seed}");
        engine_matches_reference(&inst, GrowthRule::Bucketed);
        engine_matches_reference(&inst, GrowthRule::Standard);
    }
}

#[test]
fn bad_example_matches_reference() {
    for k in 2..=3 {
        let inst = gen_bad_example(k, &q(1, 100)).unwrap();
        engine_matches_reference(&inst, GrowthRule::Bucketed);
        engine_matches_reference(&inst, GrowthRule::Standard);
    }
}
