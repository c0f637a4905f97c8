//! Independent re-verification of a growth run.
//!
//! Nothing here trusts the engine's bookkeeping: active moats and arc roles
//! are re-derived from the purchased-arc prefix `F_l` of every iteration, and
//! the recorded trace is compared against that replay.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::engine::{alive_report, BucketKind, GrowthRule, GrowthTrace, Solution};
use crate::instance::{ArcId, FamilyTag, Instance};
use crate::moats::{active_moats, classify_arc, EdgeRole, Moat, MoatKey};
use crate::scalar::{checked_ratio, Cost};

/// Which of a moat's buckets a solution arc's label corresponds to.
fn role_matches(label: BucketKind, role: EdgeRole) -> bool {
    matches!(
        (label, role),
        (BucketKind::Antenna, EdgeRole::Antenna)
            | (BucketKind::Expansion, EdgeRole::Expansion)
            | (BucketKind::Killer, EdgeRole::Killer)
            | (BucketKind::Standard, _)
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoatDelta {
    pub moat: MoatKey,
    pub delta_ant: usize,
    pub delta_killer: usize,
    pub delta_exp: usize,
    /// Solution arcs paid through the single bucket of the baseline rule.
    pub delta_standard: usize,
}

impl MoatDelta {
    pub fn total(&self) -> usize {
        self.delta_ant + self.delta_killer + self.delta_exp + self.delta_standard
    }
}

/// Solution arcs being paid for at one iteration, split by moat and role.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDelta {
    pub index: usize,
    pub moat_count: usize,
    pub per_moat: Vec<MoatDelta>,
    /// Killer-labelled solution arcs some moat pays as killer.
    pub killer_arcs: BTreeSet<ArcId>,
    /// Expansion-labelled solution arcs some moat pays as expansion.
    pub expansion_arcs: BTreeSet<ArcId>,
}

impl IterationDelta {
    pub fn delta_sum(&self) -> usize {
        self.per_moat.iter().map(MoatDelta::total).sum()
    }
}

/// Replayed state of one iteration.
struct Snapshot {
    moats: Vec<Moat>,
    f: crate::instance::ArcSet,
}

fn snapshots<C: Cost>(inst: &Instance<C>, trace: &GrowthTrace<C>) -> Vec<Snapshot> {
    let mut f = inst.empty_arc_set();
    let mut out = Vec::with_capacity(trace.iterations.len());
    for it in &trace.iterations {
        out.push(Snapshot { moats: active_moats(inst, &f), f: f.clone() });
        f.insert(it.purchased.arc);
    }
    out
}

/// Per-iteration counts of solution arcs paid by each active moat.
pub fn iteration_deltas<C: Cost>(
    inst: &Instance<C>,
    trace: &GrowthTrace<C>,
    sol: &Solution<C>,
) -> Vec<IterationDelta> {
    snapshots(inst, trace)
        .into_iter()
        .enumerate()
        .map(|(index, snap)| {
            let mut per_moat: BTreeMap<MoatKey, MoatDelta> = snap
                .moats
                .iter()
                .map(|m| {
                    let d = MoatDelta {
                        moat: m.key.clone(),
                        delta_ant: 0,
                        delta_killer: 0,
                        delta_exp: 0,
                        delta_standard: 0,
                    };
                    (m.key.clone(), d)
                })
                .collect();
            let mut killer_arcs = BTreeSet::new();
            let mut expansion_arcs = BTreeSet::new();
            for (&arc, &label) in &sol.arc_labels {
                if snap.f.contains(arc) {
                    continue;
                }
                for (key, role) in classify_arc(inst, &snap.f, &snap.moats, arc) {
                    if !role_matches(label, role) {
                        continue;
                    }
                    let d = per_moat.get_mut(&key).expect("classified moat is active");
                    match label {
                        BucketKind::Antenna => d.delta_ant += 1,
                        BucketKind::Killer => {
                            d.delta_killer += 1;
                            killer_arcs.insert(arc);
                        }
                        BucketKind::Expansion => {
                            d.delta_exp += 1;
                            expansion_arcs.insert(arc);
                        }
                        BucketKind::Standard => d.delta_standard += 1,
                    }
                }
            }
            IterationDelta {
                index,
                moat_count: snap.moats.len(),
                per_moat: per_moat.into_values().collect(),
                killer_arcs,
                expansion_arcs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualFeasibility<C> {
    /// `sum of y_S over sets S the arc enters`, per arc.
    pub loads: Vec<C>,
    /// Arcs whose load exceeds their cap (`2 c(e)`, or `c(e)` for antenna
    /// arcs and for every arc of a baseline run).
    pub violations: Vec<ArcId>,
    /// `sum_S y_S` equals `sum_l eps_l |A_l|`.
    pub dual_sum_ok: bool,
    pub ok: bool,
}

/// Checks that halving the recorded duals gives a feasible solution of the
/// cut-based dual LP.
pub fn verify_dual_feasibility<C: Cost>(
    inst: &Instance<C>,
    trace: &GrowthTrace<C>,
) -> DualFeasibility<C> {
    let mut loads = vec![C::zero(); inst.arc_count()];
    for (set, y) in &trace.duals {
        for id in inst.arc_ids() {
            let arc = inst.arc(id);
            if set.contains(arc.head) && !set.contains(arc.tail) {
                loads[id.index()] = loads[id.index()].clone() + y.clone();
            }
        }
    }
    let two = C::one() + C::one();
    let violations: Vec<ArcId> = inst
        .arc_ids()
        .filter(|&id| {
            let cost = inst.arc(id).cost.clone();
            let single = inst.is_antenna(id) || trace.rule == GrowthRule::Standard;
            let cap = if single { cost } else { two.clone() * cost };
            loads[id.index()] > cap
        })
        .collect();
    let grown = trace.iterations.iter().fold(C::zero(), |acc, it| {
        acc + it.epsilon.clone() * C::from_count(it.moats.len())
    });
    let dual_sum_ok = grown == trace.dual_total();
    let ok = violations.is_empty() && (dual_sum_ok || !C::is_exact());
    DualFeasibility { loads, violations, dual_sum_ok, ok }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostIdentity<C> {
    /// `eps_l * sum_A |Delta^l(A)|` per iteration.
    pub contributions: Vec<C>,
    pub charged_total: C,
    pub total_cost: C,
    pub ok: bool,
}

/// Checks that the solution cost equals the growth charged to it:
/// `cost = sum_l eps_l * sum_A |Delta^l(A)|`.
pub fn verify_cost_identity<C: Cost>(
    inst: &Instance<C>,
    trace: &GrowthTrace<C>,
    sol: &Solution<C>,
) -> CostIdentity<C> {
    let deltas = iteration_deltas(inst, trace, sol);
    let contributions: Vec<C> = trace
        .iterations
        .iter()
        .zip(&deltas)
        .map(|(it, d)| it.epsilon.clone() * C::from_count(d.delta_sum()))
        .collect();
    let charged_total = contributions.iter().fold(C::zero(), |acc, c| acc + c.clone());
    let total_cost = inst.cost_of(sol.final_arcs.iter().copied());
    let ok = if C::is_exact() {
        charged_total == total_cost && total_cost == sol.total_cost
    } else {
        let scale = total_cost.approx().abs().max(1.0);
        (charged_total.approx() - total_cost.approx()).abs() <= 1e-9 * scale
    };
    CostIdentity { contributions, charged_total, total_cost, ok }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck<C> {
    pub index: usize,
    pub moat_count: usize,
    pub antenna_sum: usize,
    pub antenna_max: usize,
    pub killer_count: usize,
    pub expansion_count: usize,
    /// `sum_A |Delta^l(A)| / |A_l|`.
    pub alpha: C,
    pub antenna_ok: bool,
    pub killer_ok: bool,
    pub expansion_ok: bool,
}

impl<C> LemmaCheck<C> {
    pub fn ok(&self) -> bool {
        self.antenna_ok && self.killer_ok && self.expansion_ok
    }
}

/// Per-iteration counting bounds: at most one paid antenna solution arc per
/// moat, at most `|A_l|` paid killer solution arcs and at most `2 |A_l|`
/// paid expansion solution arcs.
pub fn verify_counting_lemmas<C: Cost>(
    inst: &Instance<C>,
    trace: &GrowthTrace<C>,
    sol: &Solution<C>,
) -> Vec<LemmaCheck<C>> {
    iteration_deltas(inst, trace, sol)
        .into_iter()
        .map(|d| {
            let antenna_sum: usize = d.per_moat.iter().map(|m| m.delta_ant).sum();
            let antenna_max = d.per_moat.iter().map(|m| m.delta_ant).max().unwrap_or(0);
            let moats = d.moat_count;
            LemmaCheck {
                index: d.index,
                moat_count: moats,
                antenna_sum,
                antenna_max,
                killer_count: d.killer_arcs.len(),
                expansion_count: d.expansion_arcs.len(),
                alpha: checked_ratio(&C::from_count(d.delta_sum()), &C::from_count(moats))
                    .unwrap_or_else(C::zero),
                antenna_ok: antenna_sum <= moats && antenna_max <= 1,
                killer_ok: d.killer_arcs.len() <= moats,
                expansion_ok: d.expansion_arcs.len() <= 2 * moats,
            }
        })
        .collect()
}

/// Replays the growth and compares moats, payments and growth amounts with
/// what the trace recorded. Returns one message per divergence.
pub fn verify_trace_consistency<C: Cost>(inst: &Instance<C>, trace: &GrowthTrace<C>) -> Vec<String> {
    let mut issues = Vec::new();
    if trace.instance_hash != inst.content_hash() {
        issues.push("trace was recorded for a different instance".to_string());
    }
    let snaps = snapshots(inst, trace);
    for (it, snap) in trace.iterations.iter().zip(&snaps) {
        let l = it.index;
        let keys: Vec<MoatKey> = snap.moats.iter().map(|m| m.key.clone()).collect();
        if keys != it.moats {
            issues.push(format!("iteration {l}: recorded moats differ from replay"));
            continue;
        }
        let mut expected = BTreeSet::new();
        for arc in inst.arc_ids().filter(|&a| !snap.f.contains(a)) {
            match trace.rule {
                GrowthRule::Bucketed => {
                    for (key, role) in classify_arc(inst, &snap.f, &snap.moats, arc) {
                        expected.insert((arc, BucketKind::from(role), key));
                    }
                }
                GrowthRule::Standard => {
                    for m in snap.moats.iter().filter(|m| m.is_entered_by(inst, arc)) {
                        expected.insert((arc, BucketKind::Standard, m.key.clone()));
                    }
                }
            }
        }
        let recorded: BTreeSet<(ArcId, BucketKind, MoatKey)> =
            it.payments.iter().map(|p| (p.arc, p.bucket, p.moat.clone())).collect();
        if recorded != expected || recorded.len() != it.payments.len() {
            issues.push(format!("iteration {l}: recorded payments differ from replay"));
        }
        if it.payments.iter().any(|p| p.amount != it.epsilon) {
            issues.push(format!("iteration {l}: payment amount differs from growth"));
        }
        if it.epsilon.is_negative() {
            issues.push(format!("iteration {l}: negative growth"));
        }
        if snap.f.contains(it.purchased.arc) {
            issues.push(format!("iteration {l}: arc {} purchased twice", it.purchased.arc));
        }
    }
    // Bucket fills must end inside [0, c(e)].
    let buckets = trace.replay_buckets(inst.arc_count());
    for id in inst.arc_ids() {
        let cost = &inst.arc(id).cost;
        for kind in [BucketKind::Antenna, BucketKind::Expansion, BucketKind::Killer, BucketKind::Standard] {
            if C::is_exact() && buckets.fill(id, kind) > cost {
                issues.push(format!("arc {id}: {kind} bucket overfilled"));
            }
        }
    }
    issues
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport<C> {
    pub ratio_vs_lb: Option<C>,
    pub ratio_vs_opt: Option<C>,
    /// Guaranteed ratio for the declared family, if any.
    pub threshold: Option<f64>,
    pub breach: bool,
}

/// `2 (8 r log2 r + 1)`, the explicit guarantee for `K_r`-minor-free inputs.
pub fn minor_free_bound(r: u32) -> f64 {
    let r = f64::from(r.max(2));
    2.0 * (8.0 * r * r.log2() + 1.0)
}

pub const PLANAR_BOUND: u32 = 20;

/// Cost over the certified lower bound (and over the optimum when known),
/// flagged against the guarantee of the declared family.
pub fn ratio_report<C: Cost>(inst: &Instance<C>, sol: &Solution<C>, opt: Option<&C>) -> RatioReport<C> {
    let ratio_vs_lb = checked_ratio(&sol.total_cost, &sol.lower_bound).or_else(|| {
        // A zero bound comes only with a zero-cost solution.
        sol.total_cost.is_zero().then(C::one)
    });
    let ratio_vs_opt = opt.and_then(|o| {
        checked_ratio(&sol.total_cost, o).or_else(|| sol.total_cost.is_zero().then(C::one))
    });
    let threshold = match inst.family() {
        FamilyTag::PlanarBipartite => Some(f64::from(PLANAR_BOUND)),
        FamilyTag::MinorFree(r) => Some(minor_free_bound(r)),
        FamilyTag::Unknown => None,
    };
    let breach = match (&ratio_vs_lb, inst.family()) {
        (None, _) => true,
        (Some(r), FamilyTag::PlanarBipartite) => *r > C::from_u32(PLANAR_BOUND).expect("small"),
        (Some(r), FamilyTag::MinorFree(k)) => r.approx() > minor_free_bound(k),
        (Some(_), FamilyTag::Unknown) => false,
    };
    RatioReport { ratio_vs_lb, ratio_vs_opt, threshold, breach }
}

/// Everything the auditor checks about one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport<C> {
    pub rule: GrowthRule,
    pub feasible_ok: bool,
    pub cost_identity_ok: bool,
    pub dual_feasible_ok: bool,
    pub trace_issues: Vec<String>,
    pub alive_ok: bool,
    pub lemma_checks: Vec<LemmaCheck<C>>,
    pub alpha_max: C,
    pub ratio: RatioReport<C>,
    pub lower_bound_ok: Option<bool>,
}

impl<C: Cost> AuditReport<C> {
    /// Counting bounds hold on every iteration.
    pub fn lemmas_ok(&self) -> bool {
        self.lemma_checks.iter().all(LemmaCheck::ok)
    }

    /// No breached invariant. Counting bounds, alive bookkeeping and the
    /// family guarantee are only required of bucketed runs.
    pub fn all_ok(&self) -> bool {
        let base = self.feasible_ok
            && self.cost_identity_ok
            && self.dual_feasible_ok
            && self.trace_issues.is_empty()
            && self.lower_bound_ok != Some(false);
        match self.rule {
            GrowthRule::Bucketed => base && self.alive_ok && self.lemmas_ok() && !self.ratio.breach,
            GrowthRule::Standard => base,
        }
    }

    pub fn to_json(&self) -> Value {
        let lit = |c: &C| Value::String(c.to_literal());
        let opt_lit = |c: &Option<C>| c.as_ref().map_or(Value::Null, lit);
        json!({
            "rule": self.rule,
            "ok": self.all_ok(),
            "feasible_ok": self.feasible_ok,
            "cost_identity_ok": self.cost_identity_ok,
            "dual_feasible_ok": self.dual_feasible_ok,
            "trace_consistent": self.trace_issues.is_empty(),
            "trace_issues": self.trace_issues,
            "alive_ok": self.alive_ok,
            "lemmas_ok": self.lemmas_ok(),
            "alpha_max": lit(&self.alpha_max),
            "ratio_vs_lb": opt_lit(&self.ratio.ratio_vs_lb),
            "ratio_vs_opt": opt_lit(&self.ratio.ratio_vs_opt),
            "threshold": self.ratio.threshold,
            "breach": self.ratio.breach,
            "lower_bound_ok": self.lower_bound_ok,
            "iterations": self.lemma_checks.iter().map(|c| json!({
                "l": c.index,
                "moats": c.moat_count,
                "antenna": c.antenna_sum,
                "killer": c.killer_count,
                "expansion": c.expansion_count,
                "alpha": lit(&c.alpha),
                "ok": c.ok(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Runs every check on a run, attaching the optimum when known.
pub fn audit_run<C: Cost>(
    inst: &Instance<C>,
    trace: &GrowthTrace<C>,
    sol: &Solution<C>,
    opt: Option<&C>,
) -> AuditReport<C> {
    let lemma_checks = verify_counting_lemmas(inst, trace, sol);
    let alpha_max = lemma_checks.iter().fold(C::zero(), |acc, c| {
        if c.alpha > acc {
            c.alpha.clone()
        } else {
            acc
        }
    });
    AuditReport {
        rule: trace.rule,
        feasible_ok: inst.is_feasible(&sol.arc_set(inst.arc_count())),
        cost_identity_ok: verify_cost_identity(inst, trace, sol).ok,
        dual_feasible_ok: verify_dual_feasibility(inst, trace).ok,
        trace_issues: verify_trace_consistency(inst, trace),
        alive_ok: alive_report(trace).is_ok(),
        lemma_checks,
        alpha_max,
        ratio: ratio_report(inst, sol, opt),
        lower_bound_ok: opt.map(|o| sol.lower_bound <= *o && *o <= sol.total_cost),
    }
}
