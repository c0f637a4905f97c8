use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::{ArcId, ArcSet, Instance};
use crate::moats::{classify_arc, EdgeRole, Moat, MoatKey};
use crate::scalar::Cost;

/// Which payment account of an arc a moat pays into. `Standard` is the single
/// per-arc account of the unbucketed baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BucketKind {
    Antenna,
    Expansion,
    Killer,
    Standard,
}

impl BucketKind {
    const ALL: [BucketKind; 4] =
        [BucketKind::Antenna, BucketKind::Expansion, BucketKind::Killer, BucketKind::Standard];

    fn slot(self) -> usize {
        self as usize
    }
}

impl From<EdgeRole> for BucketKind {
    fn from(role: EdgeRole) -> Self {
        match role {
            EdgeRole::Antenna => BucketKind::Antenna,
            EdgeRole::Expansion => BucketKind::Expansion,
            EdgeRole::Killer => BucketKind::Killer,
        }
    }
}

impl fmt::Display for BucketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BucketKind::Antenna => "antenna",
            BucketKind::Expansion => "expansion",
            BucketKind::Killer => "killer",
            BucketKind::Standard => "standard",
        })
    }
}

/// How moats pay for arcs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthRule {
    /// Antenna / expansion / killer buckets, each of size `c(e)`.
    Bucketed,
    /// One bucket of size `c(e)` per arc paid by every entering moat.
    Standard,
}

/// Fill level of every bucket of every arc. Each fill stays in `[0, c(e)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketState<C> {
    fills: [Vec<C>; 4],
}

impl<C: Cost> BucketState<C> {
    pub fn new(arc_count: usize) -> Self {
        let zeros = || vec![C::zero(); arc_count];
        BucketState { fills: [zeros(), zeros(), zeros(), zeros()] }
    }

    pub fn fill(&self, arc: ArcId, kind: BucketKind) -> &C {
        &self.fills[kind.slot()][arc.index()]
    }

    pub fn set_fill(&mut self, arc: ArcId, kind: BucketKind, value: C) {
        self.fills[kind.slot()][arc.index()] = value;
    }

    pub fn add(&mut self, arc: ArcId, kind: BucketKind, amount: &C) {
        let slot = &mut self.fills[kind.slot()][arc.index()];
        *slot = slot.clone() + amount.clone();
    }

    /// Sum of all bucket fills of an arc.
    pub fn total(&self, arc: ArcId) -> C {
        BucketKind::ALL
            .iter()
            .fold(C::zero(), |acc, &k| acc + self.fill(arc, k).clone())
    }
}

/// The moats paying into one bucket during an iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketPayers {
    pub arc: ArcId,
    pub kind: BucketKind,
    pub payers: Vec<MoatKey>,
}

/// Buckets receiving payment this iteration, ordered by arc then kind.
/// Only arcs outside `F` that enter some moat appear.
pub fn payment_plan<C: Cost>(
    inst: &Instance<C>,
    f: &ArcSet,
    moats: &[Moat],
    rule: GrowthRule,
) -> Vec<BucketPayers> {
    let mut plan = Vec::new();
    for arc in inst.arc_ids() {
        if f.contains(arc) {
            continue;
        }
        match rule {
            GrowthRule::Standard => {
                let payers: Vec<MoatKey> = moats
                    .iter()
                    .filter(|m| m.is_entered_by(inst, arc))
                    .map(|m| m.key.clone())
                    .collect();
                if !payers.is_empty() {
                    plan.push(BucketPayers { arc, kind: BucketKind::Standard, payers });
                }
            }
            GrowthRule::Bucketed => {
                let roles = classify_arc(inst, f, moats, arc);
                for kind in [BucketKind::Antenna, BucketKind::Expansion, BucketKind::Killer] {
                    let payers: Vec<MoatKey> = roles
                        .iter()
                        .filter(|(_, role)| BucketKind::from(*role) == kind)
                        .map(|(key, _)| key.clone())
                        .collect();
                    if !payers.is_empty() {
                        plan.push(BucketPayers { arc, kind, payers });
                    }
                }
            }
        }
    }
    plan
}

/// Largest uniform growth before some paid bucket fills, and every bucket
/// that is full at that growth. `None` when nothing is being paid.
pub fn epsilon_for_plan<C: Cost>(
    inst: &Instance<C>,
    plan: &[BucketPayers],
    buckets: &BucketState<C>,
) -> Option<(C, Vec<(ArcId, BucketKind)>)> {
    let ratios: Vec<C> = plan
        .iter()
        .map(|b| {
            let remaining = inst.arc(b.arc).cost.clone() - buckets.fill(b.arc, b.kind).clone();
            remaining / C::from_count(b.payers.len())
        })
        .collect();
    let mut eps: Option<&C> = None;
    for r in &ratios {
        if eps.is_none_or(|e| r < e) {
            eps = Some(r);
        }
    }
    let eps = eps?.clone();
    let eps = if eps.is_negative() { C::zero() } else { eps };
    let tight = plan
        .iter()
        .zip(&ratios)
        .filter(|(_, r)| **r <= eps)
        .map(|(b, _)| (b.arc, b.kind))
        .collect();
    Some((eps, tight))
}

/// `epsilon_for_plan` under the bucketed rule.
pub fn compute_epsilon<C: Cost>(
    inst: &Instance<C>,
    f: &ArcSet,
    moats: &[Moat],
    buckets: &BucketState<C>,
) -> Option<(C, Vec<(ArcId, BucketKind)>)> {
    let plan = payment_plan(inst, f, moats, GrowthRule::Bucketed);
    epsilon_for_plan(inst, &plan, buckets)
}

/// Purchase choice among tight buckets: smallest arc id; an arc whose
/// expansion bucket is full is labelled expansion.
pub(crate) fn choose_purchase(tight: &[(ArcId, BucketKind)]) -> Option<(ArcId, BucketKind)> {
    let arc = tight.iter().map(|(a, _)| *a).min()?;
    let kinds: Vec<BucketKind> =
        tight.iter().filter(|(a, _)| *a == arc).map(|(_, k)| *k).collect();
    let label = if kinds.contains(&BucketKind::Expansion) { BucketKind::Expansion } else { kinds[0] };
    Some((arc, label))
}
