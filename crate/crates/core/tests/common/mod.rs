// Helpers shared by the integration tests: seeded random instances and a
// slow reference implementation of the growth loop built only from
// exhaustive set enumeration.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use qbdst::moats::enumerate_minimal_violated_brute;
use qbdst::{Arc, ArcId, ArcSet, BucketKind, FamilyTag, GrowthRule, Instance, NodeId, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The small cycle instance: r=1, t1=2, t2=3 and arcs
/// a1=(r,t1,3), a2=(r,t2,3), a3=(t2,t1,1), a4=(t1,t2,1).
pub fn cycle_example() -> Instance {
    let arcs = vec![
        Arc::new(1, 2, q(3, 1)),
        Arc::new(1, 3, q(3, 1)),
        Arc::new(3, 2, q(1, 1)),
        Arc::new(2, 3, q(1, 1)),
    ];
    Instance::new(3, 1, [2, 3], arcs, FamilyTag::Unknown)
}

pub struct RandomSpec {
    pub max_nodes: usize,
    pub max_arcs: usize,
    pub max_cost: i64,
    /// Whether costs may be halves as well as integers.
    pub halves: bool,
    /// Whether to add root arcs so every terminal is reachable.
    pub feasible: bool,
}

/// Seeded random quasi-bipartite instance with distinct (tail, head) pairs.
/// Arcs into the root are allowed.
pub fn random_instance(rng: &mut ChaCha8Rng, spec: &RandomSpec) -> Instance {
    let n = rng.gen_range(2..=spec.max_nodes);
    let mut terminal = vec![false; n + 1];
    for t in terminal.iter_mut().skip(2) {
        *t = rng.gen_bool(0.5);
    }
    let forced = rng.gen_range(2..=n);
    terminal[forced] = true;
    let steiner = |v: NodeId| v != 1 && !terminal[v];

    let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 1..=n {
        for v in 1..=n {
            if u != v && !(steiner(u) && steiner(v)) {
                pairs.push((u, v));
            }
        }
    }
    pairs.shuffle(rng);
    let reserve = if spec.feasible { n - 1 } else { 0 };
    let budget = spec.max_arcs.saturating_sub(reserve).max(1);
    let take = rng.gen_range(1..=budget.min(pairs.len()));
    let cost = |rng: &mut ChaCha8Rng| {
        let den = if spec.halves && rng.gen_bool(0.3) { 2 } else { 1 };
        q(rng.gen_range(0..=spec.max_cost * den), den)
    };
    let mut arcs: Vec<Arc<Rational>> =
        pairs[..take].iter().map(|&(u, v)| Arc::new(u, v, cost(rng))).collect();

    let terminals: Vec<NodeId> = (2..=n).filter(|&v| terminal[v]).collect();
    let mut inst = Instance::new(n, 1, terminals.clone(), arcs.clone(), FamilyTag::Unknown);
    if spec.feasible {
        let seen = inst.reachable_from(1, &inst.all_arcs());
        for &t in &terminals {
            if !seen[t] && !arcs.iter().any(|a| a.tail == 1 && a.head == t) {
                arcs.push(Arc::new(1, t, cost(rng)));
            }
        }
        inst = Instance::new(n, 1, terminals, arcs, FamilyTag::Unknown);
    }
    inst
}

pub fn random_arc_subset(rng: &mut ChaCha8Rng, inst: &Instance) -> ArcSet {
    let p = rng.gen_range(0.0..=1.0);
    ArcSet::from_ids(inst.arc_count(), inst.arc_ids().filter(|_| rng.gen_bool(p)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStep {
    pub epsilon: Rational,
    pub arc: ArcId,
    pub label: BucketKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub steps: Vec<ReferenceStep>,
    pub duals: BTreeMap<BTreeSet<NodeId>, Rational>,
}

impl ReferenceRun {
    pub fn dual_total(&self) -> Rational {
        self.duals.values().fold(q(0, 1), |acc, y| acc + y)
    }
}

/// `reach[u][v]`: a path from `u` to `v` using arcs of `f`.
fn reachability(inst: &Instance, f: &ArcSet) -> Vec<Vec<bool>> {
    let n = inst.node_count();
    let mut reach = vec![vec![false; n + 1]; n + 1];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for id in f.iter() {
        let a = inst.arc(id);
        reach[a.tail][a.head] = true;
    }
    for k in 1..=n {
        let via = reach[k].clone();
        for row in reach.iter_mut().skip(1) {
            if row[k] {
                for (cell, &hop) in row.iter_mut().zip(&via) {
                    *cell |= hop;
                }
            }
        }
    }
    reach
}

/// Nodes of `set` strongly connected to one of its terminals.
fn core_of(inst: &Instance, f: &ArcSet, set: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    let reach = reachability(inst, f);
    set.iter()
        .copied()
        .filter(|&v| {
            set.iter()
                .any(|&t| inst.is_terminal(t) && reach[v][t] && reach[t][v])
        })
        .collect()
}

/// Runs the growth loop with moats taken from exhaustive enumeration of
/// minimal violated sets. Exponential in the node count.
pub fn reference_growth(inst: &Instance, rule: GrowthRule) -> ReferenceRun {
    let mut f = inst.empty_arc_set();
    let mut fills: BTreeMap<(ArcId, BucketKind), Rational> = BTreeMap::new();
    let mut duals: BTreeMap<BTreeSet<NodeId>, Rational> = BTreeMap::new();
    let mut steps = Vec::new();
    loop {
        let sets = enumerate_minimal_violated_brute(inst, &f).expect("small instance");
        if sets.is_empty() {
            break;
        }
        let mut payers: BTreeMap<(ArcId, BucketKind), usize> = BTreeMap::new();
        for e in inst.arc_ids().filter(|&e| !f.contains(e)) {
            let arc = inst.arc(e);
            for s in sets.iter().filter(|s| s.contains(&arc.head) && !s.contains(&arc.tail)) {
                let kind = match rule {
                    GrowthRule::Standard => BucketKind::Standard,
                    GrowthRule::Bucketed if inst.is_steiner(arc.tail) && inst.is_terminal(arc.head) => {
                        BucketKind::Antenna
                    }
                    GrowthRule::Bucketed => {
                        let core = core_of(inst, &f, s);
                        let after = enumerate_minimal_violated_brute(inst, &f.with(e)).unwrap();
                        if after.iter().any(|t| t.is_superset(&core) && t.len() > core.len()) {
                            BucketKind::Expansion
                        } else {
                            BucketKind::Killer
                        }
                    }
                };
                *payers.entry((e, kind)).or_default() += 1;
            }
        }
        let zero = q(0, 1);
        let ratio = |key: &(ArcId, BucketKind), count: usize| {
            let fill = fills.get(key).unwrap_or(&zero);
            (inst.arc(key.0).cost.clone() - fill) / q(count as i64, 1)
        };
        let eps = payers
            .iter()
            .map(|(key, &count)| ratio(key, count))
            .min()
            .expect("some arc enters a violated set");
        let tight: Vec<(ArcId, BucketKind)> = payers
            .iter()
            .filter(|(key, &count)| ratio(key, count) == eps)
            .map(|(key, _)| *key)
            .collect();
        for (key, &count) in &payers {
            let fill = fills.entry(*key).or_insert_with(|| q(0, 1));
            *fill = fill.clone() + eps.clone() * q(count as i64, 1);
        }
        for s in &sets {
            let y = duals.entry(s.clone()).or_insert_with(|| q(0, 1));
            *y = y.clone() + eps.clone();
        }
        let arc = tight.iter().map(|&(a, _)| a).min().unwrap();
        let kinds: Vec<BucketKind> = tight.iter().filter(|(a, _)| *a == arc).map(|&(_, k)| k).collect();
        let label = if kinds.contains(&BucketKind::Expansion) { BucketKind::Expansion } else { kinds[0] };
        steps.push(ReferenceStep { epsilon: eps, arc, label });
        f.insert(arc);
    }
    ReferenceRun { steps, duals }
}

/// One representative of every isomorphism class of connected simple graphs
/// on `2..=max_nodes` nodes, found by canonicalising each labelled graph
/// under all vertex permutations.
pub fn connected_graphs_up_to_iso(max_nodes: usize) -> Vec<qbdst::gen::UndirectedGraph> {
    use qbdst::gen::UndirectedGraph;
    let mut out = Vec::new();
    for n in 2..=max_nodes {
        let pairs: Vec<(usize, usize)> =
            (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect();
        let perms = permutations(n);
        let mut seen = BTreeSet::new();
        for mask in 1u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
            let g = UndirectedGraph::new(n, edges.iter().copied()).unwrap();
            if !g.is_connected() {
                continue;
            }
            let canonical = perms
                .iter()
                .map(|p| {
                    let mut relabelled: Vec<(usize, usize)> = edges
                        .iter()
                        .map(|&(u, v)| {
                            let (a, b) = (p[u - 1], p[v - 1]);
                            (a.min(b), a.max(b))
                        })
                        .collect();
                    relabelled.sort_unstable();
                    relabelled
                })
                .min()
                .unwrap();
            if seen.insert(canonical) {
                out.push(g);
            }
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut next = p.clone();
            next.insert(slot, n);
            out.push(next);
        }
    }
    out
}
