//! Growth traces and their JSON Lines encoding.
//!
//! A trace file holds one `header` record, one `iteration` record per growth
//! iteration and a closing `duals` record. Every scalar is written with
//! [`Cost::to_literal`], so exact traces carry `p/q` strings.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::buckets::{BucketKind, BucketState, GrowthRule};
use crate::error::TraceError;
use crate::instance::{ArcId, ArcSet, Instance, NodeId};
use crate::moats::MoatKey;
use crate::scalar::Cost;

#[derive(Debug, Clone, PartialEq)]
pub struct Payment<C> {
    pub arc: ArcId,
    pub bucket: BucketKind,
    pub moat: MoatKey,
    pub amount: C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Purchase {
    pub arc: ArcId,
    pub label: BucketKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<C> {
    pub index: usize,
    pub epsilon: C,
    pub moats: Vec<MoatKey>,
    pub payments: Vec<Payment<C>>,
    pub purchased: Purchase,
    pub kills: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTrace<C> {
    pub instance_hash: String,
    pub rule: GrowthRule,
    pub terminals: Vec<NodeId>,
    pub iterations: Vec<IterationRecord<C>>,
    /// Accumulated dual value per moat vertex set.
    pub duals: BTreeMap<MoatKey, C>,
}

impl<C: Cost> GrowthTrace<C> {
    pub fn purchases(&self) -> Vec<ArcId> {
        self.iterations.iter().map(|it| it.purchased.arc).collect()
    }

    pub fn labels(&self) -> BTreeMap<ArcId, BucketKind> {
        self.iterations.iter().map(|it| (it.purchased.arc, it.purchased.label)).collect()
    }

    /// Arcs purchased before iteration `l` starts.
    pub fn purchased_before(&self, arc_count: usize, l: usize) -> ArcSet {
        ArcSet::from_ids(arc_count, self.iterations[..l].iter().map(|it| it.purchased.arc))
    }

    pub fn dual_total(&self) -> C {
        self.duals.values().fold(C::zero(), |acc, y| acc + y.clone())
    }

    /// Bucket fills reconstructed from the recorded payments.
    pub fn replay_buckets(&self, arc_count: usize) -> BucketState<C> {
        let mut buckets = BucketState::new(arc_count);
        for it in &self.iterations {
            for p in &it.payments {
                buckets.add(p.arc, p.bucket, &p.amount);
            }
        }
        buckets
    }

    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::with_capacity(self.iterations.len() + 2);
        lines.push(Record::Header {
            instance_hash: self.instance_hash.clone(),
            rule: self.rule,
            terminals: self.terminals.clone(),
        });
        for it in &self.iterations {
            lines.push(Record::Iteration {
                l: it.index,
                epsilon: it.epsilon.to_literal(),
                moats: it.moats.clone(),
                payments: it
                    .payments
                    .iter()
                    .map(|p| PaymentRecord {
                        arc: p.arc,
                        bucket: p.bucket,
                        moat: p.moat.clone(),
                        amount: p.amount.to_literal(),
                    })
                    .collect(),
                purchase: it.purchased,
                kills: it.kills.clone(),
            });
        }
        lines.push(Record::Duals {
            duals: self
                .duals
                .iter()
                .map(|(moat, y)| DualRecord { moat: moat.clone(), y: y.to_literal() })
                .collect(),
            dual_total: self.dual_total().to_literal(),
        });
        let mut out = String::new();
        for rec in lines {
            out.push_str(&serde_json::to_string(&rec).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        let mut header = None;
        let mut iterations = Vec::new();
        let mut duals = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|source| TraceError::Json { line: line_no, source })?;
            let scalar = |s: &str| {
                C::parse_literal(s).ok_or_else(|| TraceError::Format {
                    line: line_no,
                    message: format!("bad scalar {s:?}"),
                })
            };
            match rec {
                Record::Header { instance_hash, rule, terminals } => {
                    header = Some((instance_hash, rule, terminals));
                }
                Record::Iteration { l, epsilon, moats, payments, purchase, kills } => {
                    let payments = payments
                        .into_iter()
                        .map(|p| {
                            Ok(Payment {
                                arc: p.arc,
                                bucket: p.bucket,
                                moat: p.moat,
                                amount: scalar(&p.amount)?,
                            })
                        })
                        .collect::<Result<_, TraceError>>()?;
                    iterations.push(IterationRecord {
                        index: l,
                        epsilon: scalar(&epsilon)?,
                        moats,
                        payments,
                        purchased: purchase,
                        kills,
                    });
                }
                Record::Duals { duals: entries, .. } => {
                    let mut map = BTreeMap::new();
                    for d in entries {
                        map.insert(d.moat, scalar(&d.y)?);
                    }
                    duals = Some(map);
                }
            }
        }
        let (instance_hash, rule, terminals) = header
            .ok_or(TraceError::Format { line: 0, message: "missing header record".into() })?;
        let duals =
            duals.ok_or(TraceError::Format { line: 0, message: "missing duals record".into() })?;
        Ok(GrowthTrace { instance_hash, rule, terminals, iterations, duals })
    }

    pub(crate) fn terminal_set(&self) -> BTreeSet<NodeId> {
        self.terminals.iter().copied().collect()
    }
}

/// A trace checked against the instance it claims to come from.
pub fn trace_matches<C: Cost>(inst: &Instance<C>, trace: &GrowthTrace<C>) -> bool {
    trace.instance_hash == inst.content_hash()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Header {
        instance_hash: String,
        rule: GrowthRule,
        terminals: Vec<NodeId>,
    },
    Iteration {
        l: usize,
        epsilon: String,
        moats: Vec<MoatKey>,
        payments: Vec<PaymentRecord>,
        purchase: Purchase,
        kills: Vec<NodeId>,
    },
    Duals {
        duals: Vec<DualRecord>,
        dual_total: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct PaymentRecord {
    arc: ArcId,
    bucket: BucketKind,
    moat: MoatKey,
    amount: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct DualRecord {
    moat: MoatKey,
    y: String,
}
