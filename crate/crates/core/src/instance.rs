//! Directed Steiner tree instances: data model, text format, validation and
//! parallel-arc normalization.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ParseError;
use crate::scalar::Cost;

/// Node identifier, 1-based as in the instance file.
pub type NodeId = usize;

/// Position of an arc in the instance arc list. Arc order is the purchase
/// tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub usize);

impl ArcId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc<C = BigRational> {
    pub tail: NodeId,
    pub head: NodeId,
    pub cost: C,
}

impl<C> Arc<C> {
    pub fn new(tail: NodeId, head: NodeId, cost: C) -> Self {
        Arc { tail, head, cost }
    }
}

/// Graph family declared by the instance author. Only selects reporting
/// thresholds; never verified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FamilyTag {
    PlanarBipartite,
    MinorFree(u32),
    #[default]
    Unknown,
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyTag::PlanarBipartite => f.write_str("planar_bipartite"),
            FamilyTag::MinorFree(r) => write!(f, "minor_free {r}"),
            FamilyTag::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Terminal,
    Steiner,
}

/// A set of arcs of one instance, stored as a dense membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ArcSet {
    bits: Vec<bool>,
}

impl ArcSet {
    pub fn empty(arc_count: usize) -> Self {
        ArcSet { bits: vec![false; arc_count] }
    }

    pub fn from_ids(arc_count: usize, ids: impl IntoIterator<Item = ArcId>) -> Self {
        let mut set = Self::empty(arc_count);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn contains(&self, id: ArcId) -> bool {
        self.bits[id.0]
    }

    /// Returns true if the arc was not already present.
    pub fn insert(&mut self, id: ArcId) -> bool {
        !std::mem::replace(&mut self.bits[id.0], true)
    }

    pub fn remove(&mut self, id: ArcId) -> bool {
        std::mem::replace(&mut self.bits[id.0], false)
    }

    pub fn with(&self, id: ArcId) -> Self {
        let mut next = self.clone();
        next.insert(id);
        next
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = ArcId> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| ArcId(i))
    }
}

/// A directed Steiner tree instance.
///
/// Nodes are `1..=node_count`. Arc costs are generic; the default is an exact
/// rational.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<C = BigRational> {
    node_count: usize,
    root: NodeId,
    terminals: BTreeSet<NodeId>,
    arcs: Vec<Arc<C>>,
    family: FamilyTag,
}

impl<C: Cost> Instance<C> {
    /// Builds an instance without checking the structural invariants (use
    /// [`validate`] for that).
    ///
    /// # Panics
    /// If any node id is outside `1..=node_count`.
    pub fn new(
        node_count: usize,
        root: NodeId,
        terminals: impl IntoIterator<Item = NodeId>,
        arcs: Vec<Arc<C>>,
        family: FamilyTag,
    ) -> Self {
        let in_range = |v: NodeId| (1..=node_count).contains(&v);
        assert!(in_range(root), "root {root} out of range");
        let terminals: BTreeSet<NodeId> = terminals.into_iter().collect();
        assert!(terminals.iter().all(|&t| in_range(t)), "terminal out of range");
        assert!(
            arcs.iter().all(|a| in_range(a.tail) && in_range(a.head)),
            "arc endpoint out of range"
        );
        Instance { node_count, root, terminals, arcs, family }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.node_count
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn terminals(&self) -> &BTreeSet<NodeId> {
        &self.terminals
    }

    pub fn arcs(&self) -> &[Arc<C>] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Arc<C> {
        &self.arcs[id.0]
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.arcs.len()).map(ArcId)
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn with_family(mut self, family: FamilyTag) -> Self {
        self.family = family;
        self
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.terminals.contains(&v)
    }

    pub fn kind(&self, v: NodeId) -> NodeKind {
        if v == self.root {
            NodeKind::Root
        } else if self.terminals.contains(&v) {
            NodeKind::Terminal
        } else {
            NodeKind::Steiner
        }
    }

    pub fn is_steiner(&self, v: NodeId) -> bool {
        self.kind(v) == NodeKind::Steiner
    }

    /// Steiner tail, terminal head.
    pub fn is_antenna(&self, id: ArcId) -> bool {
        let arc = self.arc(id);
        self.is_steiner(arc.tail) && self.is_terminal(arc.head)
    }

    pub fn empty_arc_set(&self) -> ArcSet {
        ArcSet::empty(self.arcs.len())
    }

    pub fn all_arcs(&self) -> ArcSet {
        ArcSet::from_ids(self.arcs.len(), self.arc_ids())
    }

    pub fn cost_of(&self, arcs: impl IntoIterator<Item = ArcId>) -> C {
        arcs.into_iter().fold(C::zero(), |acc, id| acc + self.arc(id).cost.clone())
    }

    /// Nodes reachable from `source` using only arcs in `arcs`, indexed by node id.
    pub fn reachable_from(&self, source: NodeId, arcs: &ArcSet) -> Vec<bool> {
        let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); self.node_count + 1];
        for id in arcs.iter() {
            let arc = self.arc(id);
            out[arc.tail].push(arc.head);
        }
        let mut seen = vec![false; self.node_count + 1];
        let mut stack = vec![source];
        seen[source] = true;
        while let Some(v) = stack.pop() {
            for &w in &out[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Every terminal is reachable from the root using `arcs`.
    pub fn is_feasible(&self, arcs: &ArcSet) -> bool {
        let seen = self.reachable_from(self.root, arcs);
        self.terminals.iter().all(|&t| seen[t])
    }

    /// Serializes to the line-oriented instance format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NODES {}", self.node_count);
        let _ = writeln!(out, "ROOT {}", self.root);
        let terms: Vec<String> = self.terminals.iter().map(|t| t.to_string()).collect();
        if terms.is_empty() {
            out.push_str("TERMINALS\n");
        } else {
            let _ = writeln!(out, "TERMINALS {}", terms.join(" "));
        }
        let _ = writeln!(out, "FAMILY {}", self.family);
        for arc in &self.arcs {
            let _ = writeln!(out, "ARC {} {} {}", arc.tail, arc.head, arc.cost.to_literal());
        }
        out.push_str("END\n");
        out
    }

    /// Hex SHA-256 of the canonical serialization, truncated to 16 digits.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Same instance with arc costs converted to another scalar type.
    pub fn map_costs<D: Cost>(&self, f: impl Fn(&C) -> D) -> Instance<D> {
        Instance {
            node_count: self.node_count,
            root: self.root,
            terminals: self.terminals.clone(),
            arcs: self.arcs.iter().map(|a| Arc::new(a.tail, a.head, f(&a.cost))).collect(),
            family: self.family,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse_usize(line: usize, token: &str, what: &str) -> Result<usize, ParseError> {
    token
        .parse::<usize>()
        .map_err(|_| ParseError::syntax(line, format!("expected {what}, found {token:?}")))
}

/// Parses the instance text format. Arc order is file order and parallel
/// arcs are kept; see [`normalize_parallel`].
pub fn parse_instance<C: Cost>(text: &str) -> Result<Instance<C>, ParseError> {
    let mut node_count: Option<usize> = None;
    let mut root: Option<(usize, NodeId)> = None;
    let mut terminals: Vec<(usize, NodeId)> = Vec::new();
    let mut saw_terminals = false;
    let mut family = FamilyTag::Unknown;
    let mut arcs: Vec<(usize, NodeId, NodeId, C)> = Vec::new();
    let mut ended = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if ended {
            return Err(ParseError::syntax(line_no, "content after END"));
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        match keyword {
            "NODES" => {
                if node_count.is_some() {
                    return Err(ParseError::syntax(line_no, "duplicate NODES"));
                }
                let [n] = args[..] else {
                    return Err(ParseError::syntax(line_no, "NODES takes one argument"));
                };
                let n = parse_usize(line_no, n, "node count")?;
                if n == 0 {
                    return Err(ParseError::syntax(line_no, "node count must be positive"));
                }
                node_count = Some(n);
            }
            "ROOT" => {
                if root.is_some() {
                    return Err(ParseError::syntax(line_no, "duplicate ROOT"));
                }
                let [r] = args[..] else {
                    return Err(ParseError::syntax(line_no, "ROOT takes one argument"));
                };
                root = Some((line_no, parse_usize(line_no, r, "node id")?));
            }
            "TERMINALS" => {
                saw_terminals = true;
                for tok in args {
                    terminals.push((line_no, parse_usize(line_no, tok, "node id")?));
                }
            }
            "FAMILY" => {
                family = match args[..] {
                    ["planar_bipartite"] => FamilyTag::PlanarBipartite,
                    ["unknown"] => FamilyTag::Unknown,
                    ["minor_free", r] => FamilyTag::MinorFree(
                        r.parse()
                            .map_err(|_| ParseError::syntax(line_no, format!("bad minor size {r:?}")))?,
                    ),
                    _ => return Err(ParseError::syntax(line_no, "unrecognized FAMILY")),
                };
            }
            "ARC" => {
                let [tail, head, cost] = args[..] else {
                    return Err(ParseError::syntax(line_no, "ARC takes <tail> <head> <cost>"));
                };
                let tail = parse_usize(line_no, tail, "node id")?;
                let head = parse_usize(line_no, head, "node id")?;
                let value = C::parse_literal(cost)
                    .ok_or_else(|| ParseError::syntax(line_no, format!("bad cost {cost:?}")))?;
                if value.is_negative() {
                    return Err(ParseError::NegativeCost { line: line_no, cost: cost.to_string() });
                }
                arcs.push((line_no, tail, head, value));
            }
            "END" => {
                if !args.is_empty() {
                    return Err(ParseError::syntax(line_no, "END takes no arguments"));
                }
                ended = true;
            }
            other => {
                return Err(ParseError::syntax(line_no, format!("unknown record {other:?}")));
            }
        }
    }

    let node_count = node_count.ok_or(ParseError::MissingSection("NODES"))?;
    let (root_line, root) = root.ok_or(ParseError::MissingSection("ROOT"))?;
    if !saw_terminals {
        return Err(ParseError::MissingSection("TERMINALS"));
    }
    if !ended {
        return Err(ParseError::MissingSection("END"));
    }
    let check = |line: usize, id: NodeId| {
        if (1..=node_count).contains(&id) {
            Ok(id)
        } else {
            Err(ParseError::NodeOutOfRange { line, id, node_count })
        }
    };
    check(root_line, root)?;
    for &(line, t) in &terminals {
        check(line, t)?;
    }
    let mut parsed = Vec::with_capacity(arcs.len());
    for (line, tail, head, cost) in arcs {
        parsed.push(Arc::new(check(line, tail)?, check(line, head)?, cost));
    }
    Ok(Instance::new(node_count, root, terminals.into_iter().map(|(_, t)| t), parsed, family))
}

/// One violated instance invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RootIsTerminal(NodeId),
    NegativeCost(ArcId),
    SelfLoop(ArcId),
    ParallelArc { arc: ArcId, first: ArcId },
    QuasiBipartite(ArcId),
    UnreachableTerminal(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootIsTerminal(v) => write!(f, "root-is-terminal: node {v}"),
            Violation::NegativeCost(a) => write!(f, "negative cost: arc {a}"),
            Violation::SelfLoop(a) => write!(f, "self-loop: arc {a}"),
            Violation::ParallelArc { arc, first } => {
                write!(f, "parallel arc: {arc} duplicates {first}")
            }
            Violation::QuasiBipartite(a) => {
                write!(f, "quasi-bipartite: arc {a} joins two Steiner nodes")
            }
            Violation::UnreachableTerminal(v) => write!(f, "unreachable terminal: node {v}"),
        }
    }
}

/// Lists every violated invariant. Empty iff the instance is a well-formed,
/// feasible, quasi-bipartite instance without parallel arcs.
pub fn validate<C: Cost>(inst: &Instance<C>) -> Vec<Violation> {
    let mut report = Vec::new();
    if inst.is_terminal(inst.root()) {
        report.push(Violation::RootIsTerminal(inst.root()));
    }
    let mut seen_pairs: HashMap<(NodeId, NodeId), ArcId> = HashMap::new();
    for id in inst.arc_ids() {
        let arc = inst.arc(id);
        if arc.cost.is_negative() {
            report.push(Violation::NegativeCost(id));
        }
        if arc.tail == arc.head {
            report.push(Violation::SelfLoop(id));
        }
        if let Some(&first) = seen_pairs.get(&(arc.tail, arc.head)) {
            report.push(Violation::ParallelArc { arc: id, first });
        } else {
            seen_pairs.insert((arc.tail, arc.head), id);
        }
        if inst.is_steiner(arc.tail) && inst.is_steiner(arc.head) {
            report.push(Violation::QuasiBipartite(id));
        }
    }
    let seen = inst.reachable_from(inst.root(), &inst.all_arcs());
    for &t in inst.terminals() {
        if t != inst.root() && !seen[t] {
            report.push(Violation::UnreachableTerminal(t));
        }
    }
    report
}

/// Keeps only the cheapest arc of every `(tail, head)` group (ties go to the
/// smaller id). Survivors keep their relative order.
pub fn normalize_parallel<C: Cost>(inst: &Instance<C>) -> Instance<C> {
    let mut best: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    for (i, arc) in inst.arcs().iter().enumerate() {
        best.entry((arc.tail, arc.head))
            .and_modify(|j| {
                if arc.cost < inst.arcs()[*j].cost {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let arcs = inst
        .arcs()
        .iter()
        .enumerate()
        .filter(|(i, arc)| best[&(arc.tail, arc.head)] == *i)
        .map(|(_, arc)| arc.clone())
        .collect();
    Instance { arcs, ..inst.clone() }
}
