mod common;

use std::collections::BTreeMap;

use common::q;
use qbdst::audit::{audit_run, ratio_report};
use qbdst::gen::{gen_bad_example, BadExampleLayout};
use qbdst::oracle::{exact_opt_brute, exact_opt_dp};
use qbdst::{solve, solve_standard_baseline, ArcId, BucketKind, ExactInstance};

fn eps() -> qbdst::Rational {
    q(1, 100)
}

/// The cost-1 arcs leaving a top terminal: `w_1 -> v` and `w_i -> z_{i-1}`.
fn downward_arcs(inst: &ExactInstance, k: usize) -> Vec<ArcId> {
    let layout = BadExampleLayout { k };
    inst.arc_ids()
        .filter(|&id| {
            let a = inst.arc(id);
            let from_w = (1..=k).any(|i| layout.w(i) == a.tail);
            from_w && a.cost == q(1, 1)
        })
        .collect()
}

#[test]
fn downward_arcs_get_one_killer_and_the_rest_expansion() {
    for k in [3, 5, 8] {
        let inst = gen_bad_example(k, &eps()).unwrap();
        let (_, trace) = solve(&inst).unwrap();
        let labels = trace.labels();
        let down = downward_arcs(&inst, k);
        assert_eq!(down.len(), k);
        let mut counts: BTreeMap<BucketKind, usize> = BTreeMap::new();
        for a in &down {
            *counts.entry(labels[a]).or_default() += 1;
        }
        assert_eq!(counts.get(&BucketKind::Killer), Some(&1), "k={k}");
        assert_eq!(counts.get(&BucketKind::Expansion), Some(&(k - 1)), "k={k}");
    }
}

#[test]
fn optimum_needs_every_blue_arc() {
    let inst = gen_bad_example(3, &eps()).unwrap();
    let dp = exact_opt_dp(&inst).unwrap();
    let brute = exact_opt_brute(&inst).unwrap();
    assert_eq!(dp.opt_cost, q(4, 1) + q(5, 100));
    assert_eq!(brute.opt_cost, dp.opt_cost);
    for k in 2..=8 {
        let inst = gen_bad_example(k, &eps()).unwrap();
        let expected = q(k as i64 + 1, 1) + q(k as i64 + 2, 100);
        assert_eq!(exact_opt_dp(&inst).unwrap().opt_cost, expected, "k={k}");
    }
}

#[test]
fn baseline_dual_growth() {
    // All k+2 singleton moats grow by eps before every eps-arc is tight;
    // afterwards only the top and bottom moats grow, by 1 each. The
    // engine's value agrees with the brute-force reference run.
    for k in [2, 3, 5, 10, 25] {
        let inst = gen_bad_example(k, &eps()).unwrap();
        let (sol, trace) = solve_standard_baseline(&inst).unwrap();
        let expected = q(2, 1) + q(k as i64 + 2, 100);
        assert_eq!(trace.dual_total(), expected, "k={k}");
        assert!(sol.total_cost >= q(k as i64 + 1, 1));
        if k <= 3 {
            let reference = common::reference_growth(&inst, qbdst::GrowthRule::Standard);
            assert_eq!(reference.dual_total(), expected);
        }
    }
}

#[test]
fn bucketed_run_stays_within_twenty_of_its_bound() {
    let inst = gen_bad_example(10, &eps()).unwrap();
    let (sol, trace) = solve(&inst).unwrap();
    let ratio = ratio_report(&inst, &sol, None);
    assert!(!ratio.breach);
    assert!(sol.total_cost <= q(20, 1) * sol.lower_bound.clone());
    assert!(audit_run(&inst, &trace, &sol, None).all_ok());
}

#[test]
fn baseline_ratio_grows_with_k() {
    let mut last = q(0, 1);
    for k in [2, 5, 10, 30] {
        let inst = gen_bad_example(k, &eps()).unwrap();
        let (sol, _) = solve_standard_baseline(&inst).unwrap();
        let ratio = sol.total_cost.clone() / sol.lower_bound.clone();
        assert!(ratio > last);
        last = ratio;
    }
    assert!(last > q(20, 1));
}
