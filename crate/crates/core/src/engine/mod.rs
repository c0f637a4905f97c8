//! Primal-dual growth, reverse-delete pruning and alive-terminal bookkeeping.
//!
//! [`solve`] runs the bucketed growth rule; [`solve_standard_baseline`] runs
//! the plain rule with a single bucket per arc. Both record a
//! [`GrowthTrace`] that the `audit` module replays independently.

mod alive;
mod buckets;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

pub use alive::{alive_report, AliveState};
pub use buckets::{
    compute_epsilon, epsilon_for_plan, payment_plan, BucketKind, BucketPayers, BucketState,
    GrowthRule,
};
pub use trace::{trace_matches, GrowthTrace, IterationRecord, Payment, Purchase};

use crate::error::SolveError;
use crate::instance::{ArcId, ArcSet, Instance, NodeId};
use crate::moats::{active_moats, classify_arc, core_survives, EdgeRole, Moat};
use crate::scalar::{half, Cost};

/// Pruned output of a run together with its dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution<C> {
    /// Surviving arcs in purchase order.
    pub final_arcs: Vec<ArcId>,
    pub arc_labels: BTreeMap<ArcId, BucketKind>,
    pub total_cost: C,
    pub dual_total: C,
    /// `dual_total / 2`; a lower bound on the optimum.
    pub lower_bound: C,
}

impl<C: Cost> Solution<C> {
    pub fn arc_set(&self, arc_count: usize) -> ArcSet {
        ArcSet::from_ids(arc_count, self.final_arcs.iter().copied())
    }
}

/// Growth phase with the bucketed rule.
pub fn grow_phase<C: Cost>(inst: &Instance<C>) -> Result<GrowthTrace<C>, SolveError> {
    grow(inst, GrowthRule::Bucketed).map(|(trace, _)| trace)
}

/// Growth phase under `rule`, also returning the final bucket fills.
pub fn grow<C: Cost>(
    inst: &Instance<C>,
    rule: GrowthRule,
) -> Result<(GrowthTrace<C>, BucketState<C>), SolveError> {
    let mut f = inst.empty_arc_set();
    let mut buckets = BucketState::new(inst.arc_count());
    let mut alive: BTreeSet<NodeId> = inst.terminals().clone();
    let mut duals: BTreeMap<crate::moats::MoatKey, C> = BTreeMap::new();
    let mut iterations = Vec::new();

    loop {
        let moats = active_moats(inst, &f);
        if moats.is_empty() {
            break;
        }
        let index = iterations.len();
        let plan = payment_plan(inst, &f, &moats, rule);
        let (eps, tight) = epsilon_for_plan(inst, &plan, &buckets)
            .ok_or(SolveError::StalledGrowth { iteration: index })?;

        let mut payments = Vec::new();
        for bucket in &plan {
            let amount = eps.clone() * C::from_count(bucket.payers.len());
            buckets.add(bucket.arc, bucket.kind, &amount);
            for moat in &bucket.payers {
                payments.push(Payment {
                    arc: bucket.arc,
                    bucket: bucket.kind,
                    moat: moat.clone(),
                    amount: eps.clone(),
                });
            }
        }
        for &(arc, kind) in &tight {
            // Exact types already land on the cap; this only trims float drift.
            buckets.set_fill(arc, kind, inst.arc(arc).cost.clone());
        }
        for moat in &moats {
            let y = duals.entry(moat.key.clone()).or_insert_with(C::zero);
            *y = y.clone() + eps.clone();
        }

        let (arc, label) =
            buckets::choose_purchase(&tight).expect("a minimizing bucket is always tight");
        let kills = kill_terminals(inst, &f, &moats, arc, &mut alive);
        f.insert(arc);
        iterations.push(IterationRecord {
            index,
            epsilon: eps,
            moats: moats.iter().map(|m| m.key.clone()).collect(),
            payments,
            purchased: Purchase { arc, label },
            kills,
        });
    }

    let trace = GrowthTrace {
        instance_hash: inst.content_hash(),
        rule,
        terminals: inst.terminals().iter().copied().collect(),
        iterations,
        duals,
    };
    Ok((trace, buckets))
}

/// Marks dead the alive terminal of every moat that buying `arc` kills:
/// moats for which a non-antenna arc is killer, or, for an antenna arc,
/// entered moats whose core is in no active set afterwards.
fn kill_terminals<C: Cost>(
    inst: &Instance<C>,
    f: &ArcSet,
    moats: &[Moat],
    arc: ArcId,
    alive: &mut BTreeSet<NodeId>,
) -> Vec<NodeId> {
    let killed: Vec<&Moat> = if inst.is_antenna(arc) {
        let after = f.with(arc);
        moats
            .iter()
            .filter(|m| m.is_entered_by(inst, arc) && !core_survives(inst, &after, &m.core))
            .collect()
    } else {
        let roles = classify_arc(inst, f, moats, arc);
        moats
            .iter()
            .filter(|m| roles.iter().any(|(k, r)| *k == m.key && *r == EdgeRole::Killer))
            .collect()
    };
    let mut kills = Vec::new();
    for moat in killed {
        for &t in &moat.core.vertices {
            if alive.remove(&t) {
                kills.push(t);
            }
        }
    }
    kills.sort_unstable();
    kills
}

/// Scans purchases newest first and drops every arc whose removal keeps all
/// terminals reachable from the root.
pub fn reverse_delete<C: Cost>(inst: &Instance<C>, trace: &GrowthTrace<C>) -> Solution<C> {
    let order = trace.purchases();
    let mut kept = ArcSet::from_ids(inst.arc_count(), order.iter().copied());
    for &arc in order.iter().rev() {
        kept.remove(arc);
        if !inst.is_feasible(&kept) {
            kept.insert(arc);
        }
    }
    let final_arcs: Vec<ArcId> = order.into_iter().filter(|&a| kept.contains(a)).collect();
    let labels = trace.labels();
    let arc_labels = final_arcs.iter().map(|a| (*a, labels[a])).collect();
    let dual_total = trace.dual_total();
    Solution {
        total_cost: inst.cost_of(final_arcs.iter().copied()),
        lower_bound: half(&dual_total),
        final_arcs,
        arc_labels,
        dual_total,
    }
}

/// Bucketed growth followed by reverse delete.
pub fn solve<C: Cost>(inst: &Instance<C>) -> Result<(Solution<C>, GrowthTrace<C>), SolveError> {
    let trace = grow_phase(inst)?;
    Ok((reverse_delete(inst, &trace), trace))
}

/// Single-bucket growth followed by reverse delete.
pub fn solve_standard_baseline<C: Cost>(
    inst: &Instance<C>,
) -> Result<(Solution<C>, GrowthTrace<C>), SolveError> {
    let (trace, _) = grow(inst, GrowthRule::Standard)?;
    Ok((reverse_delete(inst, &trace), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Arc, FamilyTag};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn build(n: usize, terminals: &[NodeId], arcs: &[(NodeId, NodeId, i64)]) -> Instance {
        let arcs = arcs.iter().map(|&(t, h, c)| Arc::new(t, h, q(c, 1))).collect();
        Instance::new(n, 1, terminals.iter().copied(), arcs, FamilyTag::Unknown)
    }

    fn single_arc() -> Instance {
        build(2, &[2], &[(1, 2, 5)])
    }

    #[test]
    fn single_arc_instance() {
        let (sol, trace) = solve(&single_arc()).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.iterations[0].epsilon, q(5, 1));
        assert_eq!(trace.iterations[0].purchased, Purchase { arc: ArcId(0), label: BucketKind::Killer });
        assert_eq!(trace.dual_total(), q(5, 1));
        assert_eq!(sol.total_cost, q(5, 1));
        assert_eq!(sol.lower_bound, q(5, 2));
        assert_eq!(sol.final_arcs, vec![ArcId(0)]);
    }

    #[test]
    fn baseline_matches_on_single_arc() {
        let (sol, trace) = solve(&single_arc()).unwrap();
        let (base, base_trace) = solve_standard_baseline(&single_arc()).unwrap();
        assert_eq!(sol.total_cost, base.total_cost);
        assert_eq!(sol.dual_total, base.dual_total);
        assert_eq!(trace.purchases(), base_trace.purchases());
    }

    #[test]
    fn arborescence_purchases_are_not_pruned() {
        let inst = build(3, &[2, 3], &[(1, 2, 1), (2, 3, 1)]);
        let (sol, trace) = solve(&inst).unwrap();
        assert_eq!(sol.final_arcs.len(), trace.purchases().len());
    }

    #[test]
    fn redundant_antenna_is_pruned() {
        // r=1, t=2, s=3, x=4: r->t (2), s->t (1), x->s (1), r->x (5)
        let inst = build(4, &[2, 4], &[(1, 2, 2), (3, 2, 1), (4, 3, 1), (1, 4, 5)]);
        let (sol, trace) = solve(&inst).unwrap();
        // s->t is bought first but r->t alone serves t in the end.
        assert_eq!(trace.purchases()[0], ArcId(1));
        assert!(!sol.final_arcs.contains(&ArcId(1)));
        assert!(inst.is_feasible(&sol.arc_set(inst.arc_count())));
    }

    #[test]
    fn unreachable_terminal_stalls() {
        let inst = build(3, &[2, 3], &[(1, 2, 1)]);
        assert_eq!(grow_phase(&inst).unwrap_err(), SolveError::StalledGrowth { iteration: 1 });
    }

    #[test]
    fn zero_cost_arcs_give_zero_epsilon() {
        let inst = build(3, &[2, 3], &[(1, 2, 0), (2, 3, 0)]);
        let (sol, trace) = solve(&inst).unwrap();
        assert!(trace.iterations.iter().all(|it| it.epsilon == q(0, 1)));
        assert_eq!(sol.total_cost, q(0, 1));
        assert_eq!(sol.lower_bound, q(0, 1));
    }

    #[test]
    fn no_terminals_means_no_iterations() {
        let inst = build(2, &[], &[(1, 2, 3)]);
        let (sol, trace) = solve(&inst).unwrap();
        assert!(trace.iterations.is_empty());
        assert!(sol.final_arcs.is_empty());
    }

    #[test]
    fn trace_jsonl_round_trip() {
        let inst = build(3, &[2, 3], &[(1, 2, 3), (1, 3, 3), (3, 2, 1), (2, 3, 1)]);
        let (_, trace) = solve(&inst).unwrap();
        let text = trace.to_jsonl();
        assert!(text.lines().next().unwrap().contains("\"record\":\"header\""));
        let back = GrowthTrace::<Rational>::from_jsonl(&text).unwrap();
        assert_eq!(back, trace);
        assert!(trace_matches(&inst, &back));
    }

    #[test]
    fn float_instantiation_runs() {
        let inst = build(3, &[2, 3], &[(1, 2, 3), (1, 3, 3), (3, 2, 1), (2, 3, 1)]);
        let float = inst.map_costs(crate::scalar::Cost::approx);
        let (sol, _) = solve(&float).unwrap();
        assert!((sol.total_cost - 4.0).abs() < 1e-12);
    }
}
