//! Workflow graphs: alphabets as nodes, transforms as edges.
//!
//! Sequential segments telescope: the total benefit of a chain is the sum of
//! its step benefits, which equals `H(first) - H(last) - Σ D_KL`. Where
//! parallel branches meet, the combined benefit is only bounded, so totals
//! are intervals:
//!
//! * machine-only branches: `[max(arriving), min(Σ arriving - shared MI, H(branch point))]`
//! * branches with human steps: `[max(arriving), Σ arriving]`
//!
//! The branch point of a joint is its immediate dominator.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use petgraph::algo::{dominators, toposort};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, EntropyMode};
use crate::error::{Error, Result};
use crate::metrics::{alphabet_compression_ratio, uncertainty_cost_sum, StepMetrics};
use crate::reconstruction::{distortion_bits_with, Reconstruction, Smoothing};
use crate::transform::{CostRecord, NodeKind, Transform, TransformKind};

const MATCH_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkflowClass {
    W1,
    W2,
    W3,
    W4,
    W5,
    W6,
}

impl WorkflowClass {
    pub fn level(self) -> VisLevel {
        match self {
            WorkflowClass::W1 | WorkflowClass::W3 => VisLevel::Disseminative,
            WorkflowClass::W2 => VisLevel::Observational,
            WorkflowClass::W4 => VisLevel::Analytical,
            WorkflowClass::W5 | WorkflowClass::W6 => VisLevel::ModelDevelopmental,
        }
    }
}

/// The four levels of visualization, ordered by the complexity of the
/// analyst's question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VisLevel {
    #[serde(rename = "V_D")]
    Disseminative,
    #[serde(rename = "V_O")]
    Observational,
    #[serde(rename = "V_A")]
    Analytical,
    #[serde(rename = "V_M")]
    ModelDevelopmental,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub level: VisLevel,
    pub question_form: String,
    pub complexity_class: String,
}

impl VisLevel {
    pub fn info(self) -> LevelInfo {
        let (q, c) = match self {
            VisLevel::Disseminative => ("Here is A (no open question about the data)", "O(1)"),
            VisLevel::Observational => ("What happened, and when and where did A, B, C happen?", "O(n)"),
            VisLevel::Analytical => ("What is A related to, and why?", "O(n^k)"),
            VisLevel::ModelDevelopmental => ("How does A lead to B, and by which exact steps?", "O(k^n) / O(n!)"),
        };
        LevelInfo {
            level: self,
            question_form: q.to_string(),
            complexity_class: c.to_string(),
        }
    }
}

/// How costs of parallel branches combine where they meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CostMerge {
    /// Every step's cost counts (energy, money).
    #[default]
    Sum,
    /// Parallel branches overlap; the slowest path counts (time).
    MaxParallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn scale(&self, k: f64) -> Interval {
        let (a, b) = (self.lo * k, self.hi * k);
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

impl std::ops::Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }
}

impl std::ops::Add<f64> for Interval {
    type Output = Interval;
    fn add(self, o: f64) -> Interval {
        Interval {
            lo: self.lo + o,
            hi: self.hi + o,
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(d)?;
        Ok(Interval { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub alphabet: Arc<Alphabet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub transform: Transform,
    pub reconstruction: Option<Reconstruction>,
    pub smoothing: Smoothing,
}

/// Edge description by node name, used to build a graph.
#[derive(Debug, Clone)]
pub struct EdgeDef {
    pub id: String,
    pub from: String,
    pub to: String,
    pub transform: Transform,
    pub reconstruction: Option<Reconstruction>,
    pub smoothing: Smoothing,
}

impl EdgeDef {
    pub fn new(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        transform: Transform,
        reconstruction: Option<Reconstruction>,
    ) -> Self {
        EdgeDef {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            transform,
            reconstruction,
            smoothing: Smoothing::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallMetrics {
    pub total_cost: CostRecord,
    pub total_benefit_bits: Interval,
    pub overall_cbr: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class_tag: Option<WorkflowClass>,
    pub level: Option<LevelInfo>,
    /// True when the class came from structural template matching.
    pub structural: bool,
    /// Collapsed component sequence used for matching, e.g. `"H>V>H"`.
    pub pattern: String,
    pub interaction: bool,
}

/// A validated, immutable workflow DAG.
#[derive(Debug, Clone)]
pub struct WorkflowGraph {
    name: String,
    mode: EntropyMode,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    decisional: usize,
    shared_mi: HashMap<usize, f64>,
    class_tag: Option<WorkflowClass>,
    level_tag: Option<VisLevel>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl WorkflowGraph {
    pub fn new(
        name: impl Into<String>,
        mode: EntropyMode,
        nodes: Vec<Node>,
        edges: Vec<EdgeDef>,
        decisional: Option<&str>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate node `{}`", n.name)));
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidGraph("no nodes".into()));
        }
        let lookup = |name: &str, edge: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidGraph(format!("edge `{edge}` references unknown node `{name}`")))
        };
        let mut seen_ids = HashSet::new();
        let mut built = Vec::with_capacity(edges.len());
        for e in edges {
            if !seen_ids.insert(e.id.clone()) {
                return Err(Error::InvalidGraph(format!("duplicate edge id `{}`", e.id)));
            }
            let from = lookup(&e.from, &e.id)?;
            let to = lookup(&e.to, &e.id)?;
            built.push(Edge {
                id: e.id,
                from,
                to,
                transform: e.transform,
                reconstruction: e.reconstruction,
                smoothing: e.smoothing,
            });
        }
        let n = nodes.len();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        let mut g = DiGraph::<(), ()>::with_capacity(n, built.len());
        for _ in 0..n {
            g.add_node(());
        }
        for (i, e) in built.iter().enumerate() {
            incoming[e.to].push(i);
            outgoing[e.from].push(i);
            g.add_edge(NodeIndex::new(e.from), NodeIndex::new(e.to), ());
        }
        let topo = toposort(&g, None)
            .map_err(|c| Error::InvalidGraph(format!("cycle through `{}`", nodes[c.node_id().index()].name)))?
            .into_iter()
            .map(NodeIndex::index)
            .collect();

        for e in &built {
            let input = &nodes[e.from].alphabet;
            let produced = e.transform.pushforward(input).map_err(|err| Error::EdgeMismatch {
                edge: e.id.clone(),
                detail: err.to_string(),
            })?;
            let target = &nodes[e.to].alphabet;
            if !produced.matches(target, MATCH_TOLERANCE) {
                return Err(Error::EdgeMismatch {
                    edge: e.id.clone(),
                    detail: format!(
                        "transform `{}` yields H={} (max {}), node `{}` has H={} (max {})",
                        e.transform.name,
                        produced.entropy(),
                        produced.max_entropy(),
                        nodes[e.to].name,
                        target.entropy(),
                        target.max_entropy()
                    ),
                });
            }
        }

        let sinks: Vec<usize> = (0..n).filter(|&i| outgoing[i].is_empty()).collect();
        let decisional = match decisional {
            Some(name) => {
                let i = *index
                    .get(name)
                    .ok_or_else(|| Error::InvalidGraph(format!("decisional node `{name}` is not declared")))?;
                if !outgoing[i].is_empty() {
                    return Err(Error::InvalidGraph(format!("decisional node `{name}` is not a sink")));
                }
                i
            }
            None => match sinks.as_slice() {
                [only] => *only,
                _ => {
                    return Err(Error::InvalidGraph(
                        "several sinks; designate exactly one decisional node".into(),
                    ))
                }
            },
        };

        Ok(WorkflowGraph {
            name: name.into(),
            mode,
            nodes,
            edges: built,
            decisional,
            shared_mi: HashMap::new(),
            class_tag: None,
            level_tag: None,
            incoming,
            outgoing,
            topo,
        })
    }

    /// Mutual information shared by the branches arriving at `node`, used to
    /// tighten the upper bound of a machine-only joint.
    pub fn with_shared_mi(mut self, node: &str, bits: f64) -> Result<Self> {
        let i = self
            .node_index(node)
            .ok_or_else(|| Error::InvalidGraph(format!("joint `{node}` is not a node")))?;
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::InvalidParameter(format!("shared MI at `{node}` must be non-negative")));
        }
        self.shared_mi.insert(i, bits);
        Ok(self)
    }

    pub fn with_tags(mut self, class_tag: Option<WorkflowClass>, level_tag: Option<VisLevel>) -> Self {
        self.class_tag = class_tag;
        self.level_tag = level_tag;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mode(&self) -> EntropyMode {
        self.mode
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn decisional(&self) -> &Node {
        &self.nodes[self.decisional]
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    fn h(&self, node: usize) -> f64 {
        self.nodes[node].alphabet.entropy_in(self.mode)
    }

    /// A single path covering every node.
    pub fn is_sequential(&self) -> bool {
        self.edges.len() + 1 == self.nodes.len()
            && self.incoming.iter().all(|v| v.len() <= 1)
            && self.outgoing.iter().all(|v| v.len() <= 1)
    }

    pub fn edge_distortion(&self, edge: usize) -> Result<f64> {
        let e = &self.edges[edge];
        let g = match (&e.reconstruction, &e.transform.kind) {
            (Some(g), _) => g,
            (None, TransformKind::DeclaredHuman { declared_distortion_bits, .. }) => {
                return Ok(*declared_distortion_bits)
            }
            (None, _) => return Err(Error::UnscoredEdge(e.id.clone())),
        };
        if self.mode == EntropyMode::Maximal && matches!(g, Reconstruction::MachineShortcut) {
            return Err(Error::ModeMismatch(format!(
                "edge `{}`: the mutual-information shortcut uses actual entropy, the graph reports maximal entropy",
                e.id
            )));
        }
        distortion_bits_with(g, &e.transform, &self.nodes[e.from].alphabet, e.smoothing)
    }

    pub fn edge_metrics(&self, edge: usize) -> Result<StepMetrics> {
        let e = &self.edges[edge];
        let d = self.edge_distortion(edge)?;
        StepMetrics::compute(self.h(e.from), self.h(e.to), d, e.transform.cost.clone(), self.mode)
    }

    fn edge_benefits(&self) -> Result<Vec<f64>> {
        (0..self.edges.len())
            .map(|i| {
                let e = &self.edges[i];
                let d = self.edge_distortion(i)?;
                Ok(crate::metrics::benefit(self.h(e.from), self.h(e.to), d))
            })
            .collect()
    }

    pub fn total_cost(&self, merge: CostMerge) -> Result<CostRecord> {
        let first = self.edges.first().ok_or(Error::EmptyWorkflow)?;
        for e in &self.edges[1..] {
            first.transform.cost.ensure_commensurable(&e.transform.cost)?;
        }
        let amount = match merge {
            CostMerge::Sum => self.edges.iter().map(|e| e.transform.cost.amount).sum(),
            CostMerge::MaxParallel => {
                let mut finish = vec![0.0f64; self.nodes.len()];
                for &v in &self.topo {
                    for &ei in &self.incoming[v] {
                        let e = &self.edges[ei];
                        finish[v] = finish[v].max(finish[e.from] + e.transform.cost.amount);
                    }
                }
                finish.into_iter().fold(0.0, f64::max)
            }
        };
        first.transform.cost.with_amount(amount)
    }

    /// Total benefit at the decisional node. A point value for sequential
    /// graphs, an interval when parallel branches join.
    pub fn total_benefit(&self) -> Result<Interval> {
        let benefits = self.edge_benefits()?;
        let n = self.nodes.len();
        let mut g = DiGraph::<(), ()>::with_capacity(n + 1, self.edges.len() + n);
        for _ in 0..=n {
            g.add_node(());
        }
        for e in &self.edges {
            g.add_edge(NodeIndex::new(e.from), NodeIndex::new(e.to), ());
        }
        let root = n;
        for v in 0..n {
            if self.incoming[v].is_empty() {
                g.add_edge(NodeIndex::new(root), NodeIndex::new(v), ());
            }
        }
        let doms = dominators::simple_fast(&g, NodeIndex::new(root));
        let idom: Vec<usize> = (0..n)
            .map(|v| {
                doms.immediate_dominator(NodeIndex::new(v))
                    .map(NodeIndex::index)
                    .unwrap_or(root)
            })
            .collect();
        let mut memo = HashMap::new();
        Ok(self.benefit_between(self.decisional, root, &benefits, &idom, &mut memo))
    }

    /// Benefit accumulated from `from` (which dominates `node`) to `node`.
    fn benefit_between(
        &self,
        node: usize,
        from: usize,
        b: &[f64],
        idom: &[usize],
        memo: &mut HashMap<(usize, usize), Interval>,
    ) -> Interval {
        if node == from {
            return Interval::point(0.0);
        }
        if let Some(v) = memo.get(&(node, from)) {
            return *v;
        }
        let result = match self.incoming[node].as_slice() {
            [] => Interval::point(0.0),
            [e] => self.benefit_between(self.edges[*e].from, from, b, idom, memo) + b[*e],
            arriving => {
                let d = idom[node];
                let prefix = self.benefit_between(d, from, b, idom, memo);
                let branches: Vec<Interval> = arriving
                    .iter()
                    .map(|&e| self.benefit_between(self.edges[e].from, d, b, idom, memo) + b[e])
                    .collect();
                prefix + self.merge_at_joint(node, d, &branches)
            }
        };
        memo.insert((node, from), result);
        result
    }

    fn merge_at_joint(&self, joint: usize, branch_point: usize, arriving: &[Interval]) -> Interval {
        let lo = arriving.iter().map(|i| i.lo).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = arriving.iter().map(|i| i.hi).sum();
        let between = self.edges_between(branch_point, joint);
        let machine_only = between
            .iter()
            .all(|&e| !self.edges[e].transform.node_kind.is_human_centric());
        if !machine_only {
            return Interval { lo, hi: sum.max(lo) };
        }
        let cap = if branch_point < self.nodes.len() {
            self.h(branch_point)
        } else {
            // branches start at different sources
            let ancestors = self.ancestors(joint);
            (0..self.nodes.len())
                .filter(|v| self.incoming[*v].is_empty() && ancestors.contains(v))
                .map(|v| self.h(v))
                .sum()
        };
        let shared = self.shared_mi.get(&joint).copied().unwrap_or(0.0);
        let hi = (sum - shared).min(cap).max(lo);
        Interval { lo, hi }
    }

    fn ancestors(&self, node: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([node]);
        let mut queue = VecDeque::from([node]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.incoming[v] {
                if seen.insert(self.edges[e].from) {
                    queue.push_back(self.edges[e].from);
                }
            }
        }
        seen
    }

    fn descendants(&self, node: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([node]);
        let mut queue = VecDeque::from([node]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.outgoing[v] {
                if seen.insert(self.edges[e].to) {
                    queue.push_back(self.edges[e].to);
                }
            }
        }
        seen
    }

    /// Edges on some path from `from` to `to`. `from` out of range means
    /// the virtual root above all sources.
    fn edges_between(&self, from: usize, to: usize) -> Vec<usize> {
        let up = self.ancestors(to);
        let down = if from < self.nodes.len() {
            self.descendants(from)
        } else {
            (0..self.nodes.len()).collect()
        };
        (0..self.edges.len())
            .filter(|&i| {
                let e = &self.edges[i];
                up.contains(&e.from) && up.contains(&e.to) && down.contains(&e.from) && down.contains(&e.to)
            })
            .collect()
    }

    /// `H(first) - H(last) - Σ D_KL` for a sequential graph.
    pub fn telescoped_benefit(&self) -> Result<f64> {
        if !self.is_sequential() {
            return Err(Error::InvalidGraph("telescoping needs a sequential graph".into()));
        }
        let first = self.topo[0];
        let last = *self.topo.last().unwrap_or(&first);
        let mut d = 0.0;
        for i in 0..self.edges.len() {
            d += self.edge_distortion(i)?;
        }
        Ok(self.h(first) - self.h(last) - d)
    }

    pub fn overall(&self, merge: CostMerge) -> Result<OverallMetrics> {
        let total_cost = self.total_cost(merge)?;
        let total_benefit_bits = self.total_benefit()?;
        let overall_cbr = total_benefit_bits.scale(1.0 / total_cost.amount);
        Ok(OverallMetrics {
            total_cost,
            total_benefit_bits,
            overall_cbr,
        })
    }

    pub fn overall_cbr(&self, merge: CostMerge) -> Result<Interval> {
        Ok(self.overall(merge)?.overall_cbr)
    }

    /// Matches the graph against the six workflow templates.
    pub fn classify(&self) -> Classification {
        let relevant = self.ancestors(self.decisional);
        let rel_edges: Vec<usize> = (0..self.edges.len())
            .filter(|&i| relevant.contains(&self.edges[i].to))
            .collect();
        let interaction = rel_edges
            .iter()
            .any(|&e| self.edges[e].transform.node_kind == NodeKind::I);

        let joints: Vec<usize> = relevant
            .iter()
            .copied()
            .filter(|&v| self.incoming[v].iter().filter(|e| rel_edges.contains(e)).count() >= 2)
            .collect();

        let (class, pattern) = if joints.is_empty() {
            let seq = self.path_kinds(&rel_edges);
            let pattern = collapse(&seq);
            (match_sequence(&pattern), render(&pattern))
        } else {
            let w4 = joints.iter().any(|&j| self.is_analytical_joint(j));
            let pattern = format!("joint:{}", joints.len());
            (w4.then_some(WorkflowClass::W4), pattern)
        };

        let level = class.map(WorkflowClass::level).or(self.level_tag).map(VisLevel::info);
        Classification {
            class_tag: class,
            level,
            structural: class.is_some(),
            pattern,
            interaction,
        }
    }

    pub fn declared_class(&self) -> Option<WorkflowClass> {
        self.class_tag
    }

    fn path_kinds(&self, rel_edges: &[usize]) -> Vec<NodeKind> {
        let mut ordered: Vec<usize> = rel_edges.to_vec();
        let pos: HashMap<usize, usize> = self.topo.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        ordered.sort_by_key(|&e| pos[&self.edges[e].from]);
        ordered
            .into_iter()
            .map(|e| self.edges[e].transform.node_kind)
            .filter(|k| *k != NodeKind::I)
            .collect()
    }

    /// Machine results and a visualization of the data arrive at a joint
    /// that leads to human processing.
    fn is_analytical_joint(&self, joint: usize) -> bool {
        let arriving = &self.incoming[joint];
        let branch_kinds: Vec<HashSet<NodeKind>> = arriving
            .iter()
            .map(|&e| {
                let up = self.ancestors(self.edges[e].from);
                let mut kinds: HashSet<NodeKind> = (0..self.edges.len())
                    .filter(|&i| up.contains(&self.edges[i].to))
                    .map(|i| self.edges[i].transform.node_kind)
                    .collect();
                kinds.insert(self.edges[e].transform.node_kind);
                kinds
            })
            .collect();
        let machine_branch = branch_kinds.iter().position(|k| k.contains(&NodeKind::M));
        let visual_branch = branch_kinds
            .iter()
            .enumerate()
            .position(|(i, k)| k.contains(&NodeKind::V) && Some(i) != machine_branch);
        let human_after = arriving
            .iter()
            .any(|&e| self.edges[e].transform.node_kind == NodeKind::H)
            || {
                let down = self.descendants(joint);
                (0..self.edges.len()).any(|i| {
                    down.contains(&self.edges[i].from) && self.edges[i].transform.node_kind == NodeKind::H
                })
            };
        machine_branch.is_some() && visual_branch.is_some() && human_after
    }

    pub fn analyze(&self, merge: CostMerge) -> MetricsReport {
        let mut notes = Vec::new();
        let decisional = self.decisional;
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| NodeReport {
                name: n.name.clone(),
                entropy_bits: n.alphabet.entropy(),
                max_entropy_bits: n.alphabet.max_entropy(),
                reported_bits: n.alphabet.entropy_in(self.mode),
                role: if i == decisional {
                    NodeRole::Decisional
                } else if self.incoming[i].is_empty() {
                    NodeRole::Source
                } else if self.outgoing[i].is_empty() {
                    NodeRole::Sink
                } else {
                    NodeRole::Inner
                },
            })
            .collect();
        let mut steps = Vec::new();
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let h_in = self.h(e.from);
                let h_out = self.h(e.to);
                let (metrics, unscored) = match self.edge_metrics(i) {
                    Ok(m) => {
                        steps.push(m.clone());
                        (Some(m), None)
                    }
                    Err(err) => (None, Some(err.to_string())),
                };
                let input = &self.nodes[e.from].alphabet;
                let mutual_information_bits = if input.is_enumerated() && self.mode == EntropyMode::Actual {
                    e.transform.mutual_information(input).ok()
                } else {
                    None
                };
                EdgeReport {
                    id: e.id.clone(),
                    from: self.nodes[e.from].name.clone(),
                    to: self.nodes[e.to].name.clone(),
                    transform: e.transform.name.clone(),
                    node_kind: e.transform.node_kind,
                    cost: e.transform.cost.clone(),
                    h_in,
                    h_out,
                    acr: alphabet_compression_ratio(h_in, h_out).ok(),
                    mutual_information_bits,
                    metrics,
                    unscored,
                }
            })
            .collect::<Vec<_>>();
        if edges.iter().any(|e: &EdgeReport| e.acr.is_none()) {
            notes.push("some steps start from a zero-entropy alphabet; their ratios are undefined".into());
        }
        if self.edges.iter().any(|e| e.transform.node_kind == NodeKind::I) {
            notes.push("interaction is modeled as annotated forward edges; feedback loops are not represented".into());
        }
        if self.edges.iter().any(|e| e.transform.is_declared()) {
            notes.push("declared steps may raise entropy; the data processing inequality is not enforced for them".into());
        }
        let (overall, overall_unscored) = match self.overall(merge) {
            Ok(o) => (Some(o), None),
            Err(e) => (None, Some(e.to_string())),
        };
        if overall.as_ref().is_some_and(|o| !o.total_benefit_bits.is_point()) {
            notes.push("parallel branches join; total benefit is reported as an interval".into());
        }
        let sequential = self.is_sequential();
        let telescoped_benefit_bits = if sequential { self.telescoped_benefit().ok() } else { None };
        let uncertainty_cost_sum = (steps.len() == self.edges.len() && !steps.is_empty())
            .then(|| uncertainty_cost_sum(&steps));
        let classification = self.classify();
        if let (Some(declared), Some(found)) = (self.class_tag, classification.class_tag) {
            if declared != found {
                notes.push(format!("declared class {declared:?} differs from structural match {found:?}"));
            }
        }
        MetricsReport {
            name: self.name.clone(),
            entropy_mode: self.mode,
            cost_merge: merge,
            nodes,
            edges,
            overall,
            overall_unscored,
            sequential,
            telescoped_benefit_bits,
            uncertainty_cost_sum,
            declared_class: self.class_tag,
            classification,
            notes,
        }
    }

    /// Graphviz rendering with per-node entropy and per-edge measures.
    pub fn to_dot(&self, merge: CostMerge) -> String {
        let report = self.analyze(merge);
        let mut out = String::new();
        let _ = writeln!(out, "digraph {} {{", quote(&self.name));
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  node [shape=box];");
        for n in &report.nodes {
            let extra = if n.role == NodeRole::Decisional { ", peripheries=2" } else { "" };
            let _ = writeln!(
                out,
                "  {} [label={}{}];",
                quote(&n.name),
                quote(&format!("{}\nH={:.4} bits ({})", n.name, n.reported_bits, self.mode)),
                extra
            );
        }
        for e in &report.edges {
            let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
            let m = e.metrics.as_ref();
            let label = format!(
                "{} [{}]\nACR={} PDR={}\nB={} CBR={}",
                e.id,
                e.node_kind,
                fmt(e.acr),
                fmt(m.and_then(|m| m.pdr)),
                fmt(m.map(|m| m.benefit_bits)),
                fmt(m.map(|m| m.incremental_cbr)),
            );
            let _ = writeln!(out, "  {} -> {} [label={}];", quote(&e.from), quote(&e.to), quote(&label));
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn collapse(seq: &[NodeKind]) -> Vec<NodeKind> {
    let mut out: Vec<NodeKind> = Vec::with_capacity(seq.len());
    for &k in seq {
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    out
}

fn render(seq: &[NodeKind]) -> String {
    seq.iter().map(ToString::to_string).collect::<Vec<_>>().join(">")
}

fn match_sequence(seq: &[NodeKind]) -> Option<WorkflowClass> {
    use NodeKind::{H, M, V};
    let templates: [(WorkflowClass, &[&[NodeKind]]); 5] = [
        (WorkflowClass::W1, &[&[H, V, H], &[M, H, V, H]]),
        (WorkflowClass::W2, &[&[V, H]]),
        (WorkflowClass::W3, &[&[M, V, H]]),
        (WorkflowClass::W5, &[&[V, H, M], &[V, H, M, V, H]]),
        (WorkflowClass::W6, &[&[H, M], &[H, M, V, H]]),
    ];
    templates
        .iter()
        .find(|(_, pats)| pats.contains(&seq))
        .map(|(c, _)| *c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Source,
    Inner,
    Sink,
    Decisional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub name: String,
    pub entropy_bits: f64,
    pub max_entropy_bits: f64,
    /// The entropy used by the report's mode.
    pub reported_bits: f64,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub id: String,
    pub from: String,
    pub to: String,
    pub transform: String,
    pub node_kind: NodeKind,
    pub cost: CostRecord,
    pub h_in: f64,
    pub h_out: f64,
    pub acr: Option<f64>,
    pub mutual_information_bits: Option<f64>,
    pub metrics: Option<StepMetrics>,
    pub unscored: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub entropy_mode: EntropyMode,
    pub cost_merge: CostMerge,
    pub nodes: Vec<NodeReport>,
    pub edges: Vec<EdgeReport>,
    pub overall: Option<OverallMetrics>,
    pub overall_unscored: Option<String>,
    pub sequential: bool,
    pub telescoped_benefit_bits: Option<f64>,
    /// Per-step `Σ (H_out + D_KL) / C`, shown next to the benefit-based CBR.
    pub uncertainty_cost_sum: Option<f64>,
    pub declared_class: Option<WorkflowClass>,
    pub classification: Classification,
    pub notes: Vec<String>,
}
