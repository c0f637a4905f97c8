//! Instance generators: the adversarial two-moat family, random grid
//! instances and the connected-vertex-cover reduction.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GenError, ParseError};
use crate::instance::{Arc, FamilyTag, Instance, NodeId};
use crate::scalar::Cost;

/// Largest graph [`brute_cvc`] accepts.
pub const BRUTE_CVC_NODE_LIMIT: usize = 12;

/// Simple undirected graph on nodes `1..=node_count`. Edges are stored as
/// `(min, max)` pairs in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl UndirectedGraph {
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, GenError> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(GenError::Parameter(format!("self-loop at node {u}")));
            }
            if !(1..=node_count).contains(&u) || !(1..=node_count).contains(&v) {
                return Err(GenError::Parameter(format!("edge {u}-{v} out of range")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(GenError::Parameter(format!("duplicate edge {u}-{v}")));
            }
        }
        Ok(UndirectedGraph { node_count, edges: set.into_iter().collect() })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.node_count + 1];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.node_count + 1];
        let mut stack = vec![1];
        seen[1] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.node_count
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("NODES {}\n", self.node_count);
        for (u, v) in &self.edges {
            let _ = writeln!(out, "EDGE {u} {v}");
        }
        out.push_str("END\n");
        out
    }
}

/// Reads `NODES <n>` / `EDGE <u> <v>` / `END` records.
pub fn parse_undirected(text: &str) -> Result<UndirectedGraph, ParseError> {
    let mut node_count = None;
    let mut edges = Vec::new();
    let mut ended = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(ParseError::syntax(line_no, "content after END"));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let num = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| ParseError::syntax(line_no, format!("expected integer, found {tok:?}")))
        };
        match tokens[..] {
            ["NODES", n] => node_count = Some(num(n)?),
            ["EDGE", u, v] => edges.push((line_no, num(u)?, num(v)?)),
            ["END"] => ended = true,
            _ => return Err(ParseError::syntax(line_no, format!("unrecognized record {line:?}"))),
        }
    }
    let node_count = node_count.ok_or(ParseError::MissingSection("NODES"))?;
    if !ended {
        return Err(ParseError::MissingSection("END"));
    }
    for &(line, u, v) in &edges {
        for id in [u, v] {
            if !(1..=node_count).contains(&id) {
                return Err(ParseError::NodeOutOfRange { line, id, node_count });
            }
        }
    }
    UndirectedGraph::new(node_count, edges.iter().map(|&(_, u, v)| (u, v)))
        .map_err(|e| ParseError::syntax(0, e.to_string()))
}

/// Node numbering of the adversarial family.
#[derive(Debug, Clone, Copy)]
pub struct BadExampleLayout {
    pub k: usize,
}

impl BadExampleLayout {
    pub const ROOT: NodeId = 1;
    pub const A: NodeId = 2;
    pub const B: NodeId = 3;
    pub const V: NodeId = 4;

    pub fn w(&self, i: usize) -> NodeId {
        4 + i
    }

    pub fn z(&self, i: usize) -> NodeId {
        4 + self.k + i
    }

    pub fn node_count(&self) -> usize {
        2 * self.k + 4
    }
}

/// The family on which unbucketed growth raises too little dual: terminals
/// `a, b, w_1..w_k`, Steiner nodes `v, z_1..z_k`, cost-1 arcs `w_1 -> v`,
/// `w_i -> z_{i-1}` and `r -> z_k`, every other arc costing `eps`.
pub fn gen_bad_example<C: Cost>(k: usize, eps: &C) -> Result<Instance<C>, GenError> {
    if k < 2 {
        return Err(GenError::Parameter(format!("k must be at least 2, got {k}")));
    }
    if !eps.is_positive() {
        return Err(GenError::Parameter("eps must be positive".into()));
    }
    let l = BadExampleLayout { k };
    let one = C::one;
    let mut arcs = Vec::with_capacity(5 * k + 3);
    for i in 1..=k {
        arcs.push(Arc::new(BadExampleLayout::A, l.w(i), eps.clone()));
    }
    arcs.push(Arc::new(l.w(1), BadExampleLayout::V, one()));
    arcs.push(Arc::new(BadExampleLayout::V, BadExampleLayout::A, eps.clone()));
    for i in 2..=k {
        arcs.push(Arc::new(l.w(i), l.z(i - 1), one()));
    }
    for i in 1..=k {
        arcs.push(Arc::new(l.z(i), l.w(i), eps.clone()));
    }
    for i in 1..=k {
        arcs.push(Arc::new(l.z(i), BadExampleLayout::B, eps.clone()));
    }
    arcs.push(Arc::new(BadExampleLayout::ROOT, l.z(k), one()));
    let terminals = [BadExampleLayout::A, BadExampleLayout::B]
        .into_iter()
        .chain((1..=k).map(|i| l.w(i)));
    Ok(Instance::new(l.node_count(), BadExampleLayout::ROOT, terminals, arcs, FamilyTag::PlanarBipartite))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridParams {
    pub width: usize,
    pub height: usize,
    /// Probability that an odd-parity node is Steiner rather than a terminal.
    pub steiner_prob: Ratio<u64>,
    /// Probability that a grid edge is kept.
    pub keep_prob: Ratio<u64>,
    /// Inclusive integer cost range.
    pub cost_range: (u64, u64),
    pub seed: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            width: 5,
            height: 5,
            steiner_prob: Ratio::new(1, 2),
            keep_prob: Ratio::new(4, 5),
            cost_range: (1, 10),
            seed: 0,
        }
    }
}

fn coin(rng: &mut ChaCha8Rng, p: &Ratio<u64>) -> bool {
    rng.gen_range(0..*p.denom()) < *p.numer()
}

/// Random planar quasi-bipartite instance on a `width x height` grid.
///
/// Even-parity cells are terminals (cell `(0, 0)` is the root); odd-parity
/// cells are Steiner with probability `steiner_prob`. Each grid edge survives
/// with probability `keep_prob` and becomes one or both arc directions with
/// random integer costs. Nodes the root cannot reach are dropped and the rest
/// renumbered, so every remaining terminal is reachable.
pub fn gen_grid<C: Cost>(params: &GridParams) -> Result<Instance<C>, GenError> {
    let GridParams { width, height, .. } = *params;
    if width * height < 2 {
        return Err(GenError::Parameter("grid needs at least two cells".into()));
    }
    let (lo, hi) = params.cost_range;
    if lo > hi {
        return Err(GenError::Parameter(format!("empty cost range {lo}..={hi}")));
    }
    for p in [&params.steiner_prob, &params.keep_prob] {
        if p > &Ratio::from_integer(1) {
            return Err(GenError::Parameter(format!("probability {p} exceeds 1")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let id = |x: usize, y: usize| y * width + x + 1;
    let n = width * height;
    let mut terminal = vec![false; n + 1];
    for y in 0..height {
        for x in 0..width {
            terminal[id(x, y)] = (x + y) % 2 == 0 || !coin(&mut rng, &params.steiner_prob);
        }
    }
    let root = id(0, 0);
    terminal[root] = false;

    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < height {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    let cost = |rng: &mut ChaCha8Rng| C::from_u64(rng.gen_range(lo..=hi)).expect("cost fits");
    let mut arcs = Vec::new();
    for (u, v) in edges {
        if !coin(&mut rng, &params.keep_prob) {
            continue;
        }
        match rng.gen_range(0..3) {
            0 => arcs.push(Arc::new(u, v, cost(&mut rng))),
            1 => arcs.push(Arc::new(v, u, cost(&mut rng))),
            _ => {
                arcs.push(Arc::new(u, v, cost(&mut rng)));
                arcs.push(Arc::new(v, u, cost(&mut rng)));
            }
        }
    }

    let full = Instance::new(
        n,
        root,
        (1..=n).filter(|&v| terminal[v]),
        arcs,
        FamilyTag::PlanarBipartite,
    );
    Ok(restrict_to_reachable(&full))
}

/// Drops every node the root cannot reach, renumbering the survivors in
/// order and keeping arc order.
fn restrict_to_reachable<C: Cost>(inst: &Instance<C>) -> Instance<C> {
    let seen = inst.reachable_from(inst.root(), &inst.all_arcs());
    let mut new_id = vec![0; inst.node_count() + 1];
    let mut next = 0;
    for v in inst.nodes() {
        if seen[v] {
            next += 1;
            new_id[v] = next;
        }
    }
    let arcs = inst
        .arcs()
        .iter()
        .filter(|a| seen[a.tail] && seen[a.head])
        .map(|a| Arc::new(new_id[a.tail], new_id[a.head], a.cost.clone()))
        .collect();
    let terminals = inst.terminals().iter().filter(|&&t| seen[t]).map(|&t| new_id[t]);
    Instance::new(next, new_id[inst.root()], terminals, arcs, inst.family())
}

/// Subdivides every edge of `g` by a terminal and orients both halves both
/// ways at cost 1. Original vertices become Steiner nodes; the subdivision
/// node of the smallest edge is the root.
///
/// Node numbering: original vertices keep their ids, the subdivision node of
/// the `i`-th edge (sorted order, 0-based) is `n + 1 + i`.
pub fn reduce_cvc<C: Cost>(g: &UndirectedGraph, planar_promise: bool) -> Result<Instance<C>, GenError> {
    if g.edges().is_empty() {
        return Err(GenError::Parameter("graph has no edges".into()));
    }
    if !g.is_connected() {
        return Err(GenError::Disconnected);
    }
    let n = g.node_count();
    let mut arcs = Vec::with_capacity(4 * g.edges().len());
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        let x = n + 1 + i;
        for end in [u, v] {
            arcs.push(Arc::new(x, end, C::one()));
            arcs.push(Arc::new(end, x, C::one()));
        }
    }
    let root = n + 1;
    let total = n + g.edges().len();
    let family = if planar_promise { FamilyTag::PlanarBipartite } else { FamilyTag::Unknown };
    Ok(Instance::new(total, root, root + 1..=total, arcs, family))
}

/// Size of a minimum connected vertex cover, by exhaustive search.
pub fn brute_cvc(g: &UndirectedGraph) -> Result<usize, GenError> {
    let n = g.node_count();
    if n > BRUTE_CVC_NODE_LIMIT {
        return Err(GenError::Guard { actual: n, limit: BRUTE_CVC_NODE_LIMIT });
    }
    if g.edges().is_empty() {
        return Ok(0);
    }
    let bit = |v: NodeId| 1u32 << (v - 1);
    let mut best: Option<usize> = None;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let covers = g.edges().iter().all(|&(u, v)| mask & (bit(u) | bit(v)) != 0);
        if covers && induces_connected(g, mask) {
            best = Some(size);
        }
    }
    Ok(best.expect("the full vertex set of a connected graph is a connected cover"))
}

fn induces_connected(g: &UndirectedGraph, mask: u32) -> bool {
    let bit = |v: NodeId| 1u32 << (v - 1);
    let start = mask.trailing_zeros() as usize + 1;
    let mut reached = bit(start);
    loop {
        let before = reached;
        for &(u, v) in g.edges() {
            if mask & bit(u) != 0 && mask & bit(v) != 0 && (reached & (bit(u) | bit(v))) != 0 {
                reached |= bit(u) | bit(v);
            }
        }
        if reached == before {
            return reached == mask;
        }
    }
}
