//! Strongly connected components of the purchased arcs, active moats
//! (inclusion-minimal violated sets) and the per-moat role of an unpurchased
//! arc.
//!
//! In a quasi-bipartite instance an active moat is one SCC of the purchased
//! arcs together with the Steiner nodes that have a purchased arc into it, so
//! [`active_moats`] builds that shape directly. [`enumerate_minimal_violated_brute`]
//! is the exhaustive check of the same thing.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MoatError;
use crate::instance::{ArcId, ArcSet, Instance, NodeId};
use crate::scalar::Cost;

/// Largest instance [`enumerate_minimal_violated_brute`] accepts.
pub const BRUTE_MOAT_NODE_LIMIT: usize = 16;

/// Canonical identity of a vertex set: its members in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MoatKey(pub Vec<NodeId>);

impl MoatKey {
    pub fn from_set(set: &BTreeSet<NodeId>) -> Self {
        MoatKey(set.iter().copied().collect())
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> &[NodeId] {
        &self.0
    }

    pub fn to_set(&self) -> BTreeSet<NodeId> {
        self.0.iter().copied().collect()
    }
}

impl fmt::Display for MoatKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A strongly connected component of `(V, F)` holding the root or a terminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scc {
    pub vertices: BTreeSet<NodeId>,
    pub contains_root: bool,
}

impl Scc {
    pub fn key(&self) -> MoatKey {
        MoatKey::from_set(&self.vertices)
    }

    pub fn min_vertex(&self) -> NodeId {
        *self.vertices.iter().next().expect("SCC is nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Moat {
    pub core: Scc,
    pub steiner_tails: BTreeSet<NodeId>,
    pub key: MoatKey,
}

impl Moat {
    pub fn contains(&self, v: NodeId) -> bool {
        self.key.contains(v)
    }

    /// The arc runs from outside the moat to inside it.
    pub fn is_entered_by<C: Cost>(&self, inst: &Instance<C>, arc: ArcId) -> bool {
        let arc = inst.arc(arc);
        self.contains(arc.head) && !self.contains(arc.tail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeRole {
    Antenna,
    Expansion,
    Killer,
}

impl fmt::Display for EdgeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeRole::Antenna => "antenna",
            EdgeRole::Expansion => "expansion",
            EdgeRole::Killer => "killer",
        })
    }
}

/// Component index of every node (index 0 unused) and the number of
/// components, over all strongly connected components of `(V, F)`.
fn components<C: Cost>(inst: &Instance<C>, f: &ArcSet) -> (Vec<usize>, usize) {
    let n = inst.node_count();
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); n + 1];
    let mut inc: Vec<Vec<NodeId>> = vec![Vec::new(); n + 1];
    for id in f.iter() {
        let arc = inst.arc(id);
        out[arc.tail].push(arc.head);
        inc[arc.head].push(arc.tail);
    }

    // Kosaraju: finishing order on the forward graph, then sweep the reverse
    // graph in decreasing finishing time.
    let mut visited = vec![false; n + 1];
    let mut order = Vec::with_capacity(n);
    for start in 1..=n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![(start, 0usize)];
        while let Some((v, next)) = stack.last_mut() {
            if let Some(&w) = out[*v].get(*next) {
                *next += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(*v);
                stack.pop();
            }
        }
    }

    const UNSET: usize = usize::MAX;
    let mut comp = vec![UNSET; n + 1];
    let mut count = 0;
    for &start in order.iter().rev() {
        if comp[start] != UNSET {
            continue;
        }
        comp[start] = count;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &inc[v] {
                if comp[w] == UNSET {
                    comp[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// The strongly connected components of `(V, F)` that contain the root or a
/// terminal, ordered by smallest member.
pub fn scc_decompose<C: Cost>(inst: &Instance<C>, f: &ArcSet) -> Vec<Scc> {
    let (comp, count) = components(inst, f);
    let mut groups: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); count];
    for v in inst.nodes() {
        groups[comp[v]].insert(v);
    }
    let mut sccs: Vec<Scc> = groups
        .into_iter()
        .filter(|g| g.iter().any(|&v| v == inst.root() || inst.is_terminal(v)))
        .map(|vertices| Scc { contains_root: vertices.contains(&inst.root()), vertices })
        .collect();
    sccs.sort_by_key(Scc::min_vertex);
    sccs
}

/// Active moats with respect to `F`, ordered by key.
///
/// For each non-root SCC `C` the only candidate is `C` plus every node with an
/// `F`-arc into `C`; it is a moat iff all those nodes are Steiner and no
/// `F`-arc enters the enlarged set.
pub fn active_moats<C: Cost>(inst: &Instance<C>, f: &ArcSet) -> Vec<Moat> {
    let n = inst.node_count();
    let mut inc: Vec<Vec<NodeId>> = vec![Vec::new(); n + 1];
    for id in f.iter() {
        let arc = inst.arc(id);
        inc[arc.head].push(arc.tail);
    }
    let mut moats = Vec::new();
    'scc: for core in scc_decompose(inst, f) {
        if core.contains_root {
            continue;
        }
        let mut tails = BTreeSet::new();
        for &v in &core.vertices {
            for &u in &inc[v] {
                if core.vertices.contains(&u) {
                    continue;
                }
                if !inst.is_steiner(u) {
                    continue 'scc;
                }
                tails.insert(u);
            }
        }
        for &s in &tails {
            if inc[s].iter().any(|u| !core.vertices.contains(u)) {
                continue 'scc;
            }
        }
        let all: BTreeSet<NodeId> = core.vertices.union(&tails).copied().collect();
        moats.push(Moat { key: MoatKey::from_set(&all), core, steiner_tails: tails });
    }
    moats.sort_by(|a, b| a.key.cmp(&b.key));
    moats
}

/// All inclusion-minimal violated sets by exhaustive subset enumeration.
/// Exponential; limited to [`BRUTE_MOAT_NODE_LIMIT`] nodes.
pub fn enumerate_minimal_violated_brute<C: Cost>(
    inst: &Instance<C>,
    f: &ArcSet,
) -> Result<Vec<BTreeSet<NodeId>>, MoatError> {
    let n = inst.node_count();
    if n > BRUTE_MOAT_NODE_LIMIT {
        return Err(MoatError::Guard { actual: n, limit: BRUTE_MOAT_NODE_LIMIT });
    }
    let bit = |v: NodeId| 1usize << (v - 1);
    let terminal_mask = inst.terminals().iter().fold(0usize, |m, &t| m | bit(t));
    let root_bit = bit(inst.root());
    let arcs: Vec<(usize, usize)> =
        f.iter().map(|id| (bit(inst.arc(id).tail), bit(inst.arc(id).head))).collect();

    let full = 1usize << n;
    let mut violated = vec![false; full];
    for (s, slot) in violated.iter_mut().enumerate() {
        if s & root_bit != 0 || s & terminal_mask == 0 {
            continue;
        }
        *slot = !arcs.iter().any(|&(t, h)| s & h != 0 && s & t == 0);
    }
    // below[s]: some proper subset of s is violated.
    let mut below = vec![false; full];
    for s in 1..full {
        let mut rest = s;
        while rest != 0 {
            let low = rest & rest.wrapping_neg();
            let sub = s ^ low;
            if violated[sub] || below[sub] {
                below[s] = true;
                break;
            }
            rest ^= low;
        }
    }
    let mut out: Vec<BTreeSet<NodeId>> = (1..full)
        .filter(|&s| violated[s] && !below[s])
        .map(|s| (1..=n).filter(|&v| s & bit(v) != 0).collect())
        .collect();
    out.sort();
    Ok(out)
}

/// Role of arc `a` (not in `F`) for every moat it enters.
///
/// Antenna arcs are antenna for the moat containing their head. A non-antenna
/// arc is expansion for moat `A` if some active set after adding it strictly
/// contains the core of `A`, and killer otherwise.
pub fn classify_arc<C: Cost>(
    inst: &Instance<C>,
    f: &ArcSet,
    moats: &[Moat],
    a: ArcId,
) -> Vec<(MoatKey, EdgeRole)> {
    let entered: Vec<&Moat> = moats.iter().filter(|m| m.is_entered_by(inst, a)).collect();
    if entered.is_empty() {
        return Vec::new();
    }
    if inst.is_antenna(a) {
        return entered.into_iter().map(|m| (m.key.clone(), EdgeRole::Antenna)).collect();
    }
    let after = active_moats(inst, &f.with(a));
    entered
        .into_iter()
        .map(|m| {
            let grows = after.iter().any(|next| {
                next.key.0.len() > m.core.vertices.len()
                    && m.core.vertices.iter().all(|&v| next.contains(v))
            });
            let role = if grows { EdgeRole::Expansion } else { EdgeRole::Killer };
            (m.key.clone(), role)
        })
        .collect()
}

/// Whether `core` lies inside some active moat with respect to `f`.
pub(crate) fn core_survives<C: Cost>(inst: &Instance<C>, f: &ArcSet, core: &Scc) -> bool {
    active_moats(inst, f)
        .iter()
        .any(|m| core.vertices.iter().all(|&v| m.contains(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Arc, FamilyTag};
    use crate::Rational;

    fn inst(n: usize, terminals: &[NodeId], arcs: &[(NodeId, NodeId)]) -> Instance {
        let arcs = arcs
            .iter()
            .map(|&(t, h)| Arc::new(t, h, Rational::from_integer(1.into())))
            .collect();
        Instance::new(n, 1, terminals.iter().copied(), arcs, FamilyTag::Unknown)
    }

    fn set(v: &[NodeId]) -> BTreeSet<NodeId> {
        v.iter().copied().collect()
    }

    fn keys(moats: &[Moat]) -> Vec<Vec<NodeId>> {
        moats.iter().map(|m| m.key.0.clone()).collect()
    }

    #[test]
    fn two_cycle_is_one_scc() {
        // r=1, t1=2, t2=3
        let g = inst(3, &[2, 3], &[(2, 3), (3, 2)]);
        let sccs = scc_decompose(&g, &g.all_arcs());
        assert_eq!(sccs.len(), 2);
        assert_eq!(sccs[1].vertices, set(&[2, 3]));
        assert!(sccs[0].contains_root);
    }

    #[test]
    fn empty_f_gives_singletons_without_steiner() {
        // r=1, t=2,3, Steiner 4
        let g = inst(4, &[2, 3], &[(4, 2), (1, 4)]);
        let sccs = scc_decompose(&g, &g.empty_arc_set());
        let verts: Vec<_> = sccs.iter().map(|s| s.vertices.clone()).collect();
        assert_eq!(verts, vec![set(&[1]), set(&[2]), set(&[3])]);
    }

    #[test]
    fn steiner_in_cycle_with_terminal() {
        // r=1, t=2, s=3
        let g = inst(3, &[2], &[(3, 2), (2, 3)]);
        let sccs = scc_decompose(&g, &g.all_arcs());
        assert_eq!(sccs[1].vertices, set(&[2, 3]));
    }

    #[test]
    fn initial_moats_are_terminal_singletons() {
        let g = inst(4, &[2, 3], &[(1, 4), (4, 2), (4, 3)]);
        let moats = active_moats(&g, &g.empty_arc_set());
        assert_eq!(keys(&moats), vec![vec![2], vec![3]]);
    }

    #[test]
    fn steiner_tail_joins_moat() {
        // r=1, t=2, s=3; F = {s->t}
        let g = inst(3, &[2], &[(3, 2), (1, 3)]);
        let f = ArcSet::from_ids(2, [ArcId(0)]);
        let moats = active_moats(&g, &f);
        assert_eq!(moats.len(), 1);
        assert_eq!(moats[0].core.vertices, set(&[2]));
        assert_eq!(moats[0].steiner_tails, set(&[3]));
        assert_eq!(
            enumerate_minimal_violated_brute(&g, &f).unwrap(),
            vec![set(&[2, 3])]
        );
    }

    #[test]
    fn root_connected_terminal_has_no_moat() {
        let g = inst(2, &[2], &[(1, 2)]);
        assert!(active_moats(&g, &g.all_arcs()).is_empty());
    }

    #[test]
    fn brute_minimal_sets() {
        let g = inst(3, &[2, 3], &[(2, 3)]);
        assert_eq!(
            enumerate_minimal_violated_brute(&g, &g.empty_arc_set()).unwrap(),
            vec![set(&[2]), set(&[3])]
        );
        assert_eq!(enumerate_minimal_violated_brute(&g, &g.all_arcs()).unwrap(), vec![set(&[2])]);
    }

    #[test]
    fn brute_guard() {
        let g = inst(17, &[2], &[(1, 2)]);
        assert!(matches!(
            enumerate_minimal_violated_brute(&g, &g.empty_arc_set()),
            Err(MoatError::Guard { actual: 17, limit: 16 })
        ));
    }

    #[test]
    fn antenna_and_root_arcs() {
        // r=1, t=2, s=3; arcs: s->t, r->t
        let g = inst(3, &[2], &[(3, 2), (1, 2)]);
        let f = g.empty_arc_set();
        let moats = active_moats(&g, &f);
        assert_eq!(classify_arc(&g, &f, &moats, ArcId(0)), vec![(MoatKey(vec![2]), EdgeRole::Antenna)]);
        assert_eq!(classify_arc(&g, &f, &moats, ArcId(1)), vec![(MoatKey(vec![2]), EdgeRole::Killer)]);
    }

    #[test]
    fn expansion_closes_cycle() {
        // r=1, t1=2, t2=3; F = {t1->t2}; a = t2->t1
        let g = inst(3, &[2, 3], &[(2, 3), (3, 2)]);
        let f = ArcSet::from_ids(2, [ArcId(0)]);
        let moats = active_moats(&g, &f);
        assert_eq!(keys(&moats), vec![vec![2]]);
        assert_eq!(
            classify_arc(&g, &f, &moats, ArcId(1)),
            vec![(MoatKey(vec![2]), EdgeRole::Expansion)]
        );
    }

    #[test]
    fn arc_between_singletons_is_killer() {
        let g = inst(3, &[2, 3], &[(2, 3)]);
        let f = g.empty_arc_set();
        let moats = active_moats(&g, &f);
        assert_eq!(
            classify_arc(&g, &f, &moats, ArcId(0)),
            vec![(MoatKey(vec![3]), EdgeRole::Killer)]
        );
    }

    #[test]
    fn arc_into_no_moat_has_no_role() {
        let g = inst(3, &[2, 3], &[(1, 2), (2, 3)]);
        let f = ArcSet::from_ids(2, [ArcId(0)]);
        let moats = active_moats(&g, &f);
        assert_eq!(keys(&moats), vec![vec![3]]);
        let back = inst(3, &[2, 3], &[(1, 2), (3, 2)]);
        let moats_back = active_moats(&back, &f);
        assert!(classify_arc(&back, &f, &moats_back, ArcId(1)).is_empty());
    }

    #[test]
    fn shared_steiner_tail() {
        // r=1, t=2,3, s=4 with s->t and s->t'
        let g = inst(4, &[2, 3], &[(4, 2), (4, 3), (1, 4)]);
        let f = ArcSet::from_ids(3, [ArcId(0), ArcId(1)]);
        let moats = active_moats(&g, &f);
        assert_eq!(keys(&moats), vec![vec![2, 4], vec![3, 4]]);
        let roles = classify_arc(&g, &f, &moats, ArcId(2));
        assert_eq!(roles.len(), 2);
        assert!(roles.iter().all(|(_, r)| *r == EdgeRole::Killer));
    }
}
