//! Exact optimal solutions for small instances.
//!
//! [`exact_opt_dp`] is the terminal-subset dynamic program over directed
//! shortest-path distances. [`exact_opt_brute`] enumerates arc subsets and
//! shares no code with it, so the two can check each other.

use std::fmt;

use crate::error::OracleError;
use crate::instance::{ArcId, ArcSet, Instance, NodeId};
use crate::scalar::Cost;

pub const DP_TERMINAL_LIMIT: usize = 14;
pub const BRUTE_ARC_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    SubsetDp,
    BruteSubsets,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::SubsetDp => "subset_dp",
            OracleMethod::BruteSubsets => "brute_subsets",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<C> {
    pub opt_cost: C,
    pub opt_arcs: Vec<ArcId>,
    pub method: OracleMethod,
}

/// Single-source shortest paths with the last arc of each path.
struct ShortestPaths<C> {
    dist: Vec<Option<C>>,
    parent: Vec<Option<ArcId>>,
}

fn shortest_paths<C: Cost>(inst: &Instance<C>, out: &[Vec<ArcId>], source: NodeId) -> ShortestPaths<C> {
    let n = inst.node_count();
    let mut dist: Vec<Option<C>> = vec![None; n + 1];
    let mut parent = vec![None; n + 1];
    let mut done = vec![false; n + 1];
    dist[source] = Some(C::zero());
    loop {
        let mut best: Option<NodeId> = None;
        for v in 1..=n {
            if done[v] {
                continue;
            }
            if let Some(d) = &dist[v] {
                if best.is_none_or(|b| d < dist[b].as_ref().unwrap()) {
                    best = Some(v);
                }
            }
        }
        let Some(v) = best else { break };
        done[v] = true;
        let dv = dist[v].clone().unwrap();
        for &id in &out[v] {
            let arc = inst.arc(id);
            let cand = dv.clone() + arc.cost.clone();
            if dist[arc.head].as_ref().is_none_or(|d| cand < *d) {
                dist[arc.head] = Some(cand);
                parent[arc.head] = Some(id);
            }
        }
    }
    ShortestPaths { dist, parent }
}

fn add_opt<C: Cost>(a: &Option<C>, b: &Option<C>) -> Option<C> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.clone() + y.clone()),
        _ => None,
    }
}

fn improves<C: Cost>(cand: &Option<C>, current: &Option<C>) -> bool {
    match (cand, current) {
        (Some(c), Some(cur)) => c < cur,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Optimum by dynamic programming over terminal subsets.
///
/// `best[S][v]` is the cheapest arc set connecting node `v` to every terminal
/// in `S`. A subset is either split at `v` into two smaller subsets, or
/// reached from `v` along a shortest path to a node where it splits.
pub fn exact_opt_dp<C: Cost>(inst: &Instance<C>) -> Result<OptResult<C>, OracleError> {
    let terminals: Vec<NodeId> = inst.terminals().iter().copied().collect();
    let k = terminals.len();
    if k > DP_TERMINAL_LIMIT {
        return Err(OracleError::Guard { method: "subset_dp", actual: k, limit: DP_TERMINAL_LIMIT });
    }
    if k == 0 {
        return Ok(OptResult { opt_cost: C::zero(), opt_arcs: Vec::new(), method: OracleMethod::SubsetDp });
    }
    let n = inst.node_count();
    let mut out = vec![Vec::new(); n + 1];
    for id in inst.arc_ids() {
        out[inst.arc(id).tail].push(id);
    }
    let paths: Vec<ShortestPaths<C>> = (0..=n)
        .map(|s| if s == 0 { ShortestPaths { dist: vec![], parent: vec![] } } else { shortest_paths(inst, &out, s) })
        .collect();

    let full = (1usize << k) - 1;
    let mut best: Vec<Vec<Option<C>>> = vec![vec![None; n + 1]; full + 1];
    // For |S| >= 2: (node where S splits, one side of the split).
    let mut choice: Vec<Vec<(NodeId, usize)>> = vec![vec![(0, 0); n + 1]; full + 1];
    for (i, &t) in terminals.iter().enumerate() {
        for v in 1..=n {
            best[1 << i][v] = paths[v].dist[t].clone();
        }
    }

    let mut masks: Vec<usize> = (1..=full).filter(|m: &usize| m.count_ones() >= 2).collect();
    masks.sort_by_key(|m| m.count_ones());
    for s in masks {
        let low = s & s.wrapping_neg();
        let mut split: Vec<Option<C>> = vec![None; n + 1];
        let mut split_side = vec![0usize; n + 1];
        for u in 1..=n {
            // Proper subsets holding the lowest bit enumerate each split once.
            let mut t = (s - 1) & s;
            while t != 0 {
                if t & low != 0 {
                    let cand = add_opt(&best[t][u], &best[s ^ t][u]);
                    if improves(&cand, &split[u]) {
                        split[u] = cand;
                        split_side[u] = t;
                    }
                }
                t = (t - 1) & s;
            }
        }
        for v in 1..=n {
            let mut value: Option<C> = None;
            let mut pick = (0, 0);
            for u in 1..=n {
                let cand = add_opt(&paths[v].dist[u], &split[u]);
                if improves(&cand, &value) {
                    value = cand;
                    pick = (u, split_side[u]);
                }
            }
            best[s][v] = value;
            choice[s][v] = pick;
        }
    }

    let root = inst.root();
    if best[full][root].is_none() {
        return Err(OracleError::Infeasible);
    }
    let mut arcs = inst.empty_arc_set();
    let mut stack = vec![(full, root)];
    while let Some((s, v)) = stack.pop() {
        let target = if s.count_ones() == 1 {
            terminals[s.trailing_zeros() as usize]
        } else {
            choice[s][v].0
        };
        let mut at = target;
        while at != v {
            let id = paths[v].parent[at].expect("finite distance has a path");
            arcs.insert(id);
            at = inst.arc(id).tail;
        }
        if s.count_ones() > 1 {
            let side = choice[s][v].1;
            stack.push((side, target));
            stack.push((s ^ side, target));
        }
    }
    debug_assert!(inst.is_feasible(&arcs));
    let opt_arcs: Vec<ArcId> = arcs.iter().collect();
    Ok(OptResult {
        opt_cost: inst.cost_of(opt_arcs.iter().copied()),
        opt_arcs,
        method: OracleMethod::SubsetDp,
    })
}

/// Optimum by exhaustive search over arc subsets.
///
/// Only subsets of at most `node_count - 1` arcs are visited: with
/// nonnegative costs some optimum is an arborescence. Branches whose partial
/// cost already reaches the incumbent are cut.
pub fn exact_opt_brute<C: Cost>(inst: &Instance<C>) -> Result<OptResult<C>, OracleError> {
    let m = inst.arc_count();
    if m > BRUTE_ARC_LIMIT {
        return Err(OracleError::Guard { method: "brute_subsets", actual: m, limit: BRUTE_ARC_LIMIT });
    }
    struct Search<'a, C> {
        inst: &'a Instance<C>,
        max_arcs: usize,
        best: Option<(C, Vec<ArcId>)>,
        chosen: ArcSet,
    }
    impl<C: Cost> Search<'_, C> {
        fn visit(&mut self, next: usize, count: usize, cost: C) {
            if let Some((b, _)) = &self.best {
                if cost >= *b {
                    return;
                }
            }
            if self.inst.is_feasible(&self.chosen) {
                self.best = Some((cost, self.chosen.iter().collect()));
                return;
            }
            if count == self.max_arcs {
                return;
            }
            for i in next..self.inst.arc_count() {
                let id = ArcId(i);
                self.chosen.insert(id);
                self.visit(i + 1, count + 1, cost.clone() + self.inst.arc(id).cost.clone());
                self.chosen.remove(id);
            }
        }
    }
    let mut search = Search {
        inst,
        max_arcs: inst.node_count().saturating_sub(1),
        best: None,
        chosen: inst.empty_arc_set(),
    };
    search.visit(0, 0, C::zero());
    let (opt_cost, opt_arcs) = search.best.ok_or(OracleError::Infeasible)?;
    Ok(OptResult { opt_cost, opt_arcs, method: OracleMethod::BruteSubsets })
}
