//! Mapping functions between alphabets and their costs.
//!
//! A [`Transform`] maps one alphabet onto the next. Deterministic groupings
//! and quantizers, stochastic channels, and chains of them are computed
//! exactly on enumerated alphabets. Aggregators only do bit bookkeeping on
//! product alphabets. Declared steps (typically human ones) carry a
//! user-declared output alphabet and distortion.

use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, AlphabetModel, Letter, Pmf, PMF_TOLERANCE};
use crate::error::{Error, Result};

/// Workflow component type of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// Machine processing.
    M,
    /// Human processing.
    H,
    /// Visual mapping.
    V,
    /// Interaction.
    I,
}

impl NodeKind {
    pub fn is_human_centric(self) -> bool {
        matches!(self, NodeKind::H | NodeKind::I)
    }
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NodeKind::M => "M",
            NodeKind::H => "H",
            NodeKind::V => "V",
            NodeKind::I => "I",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Energy,
    Time,
    Monetary,
    Abstract,
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CostKind::Energy => "energy",
            CostKind::Time => "time",
            CostKind::Monetary => "monetary",
            CostKind::Abstract => "abstract",
        };
        f.write_str(s)
    }
}

/// Cost of executing a step. The amount is always positive: any action
/// costs something.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub kind: CostKind,
    pub amount: f64,
    pub unit: String,
}

impl CostRecord {
    pub fn new(kind: CostKind, amount: f64, unit: impl Into<String>) -> Result<Self> {
        if !amount.is_finite() || amount <= 0.0 {
            return Err(Error::InvalidCost(amount));
        }
        Ok(CostRecord {
            kind,
            amount,
            unit: unit.into(),
        })
    }

    pub fn commensurable_with(&self, other: &CostRecord) -> bool {
        self.kind == other.kind && self.unit == other.unit
    }

    pub fn ensure_commensurable(&self, other: &CostRecord) -> Result<()> {
        if self.commensurable_with(other) {
            Ok(())
        } else {
            Err(Error::IncommensurableCosts(format!("{self} vs {other}")))
        }
    }

    pub fn checked_add(&self, other: &CostRecord) -> Result<CostRecord> {
        self.ensure_commensurable(other)?;
        Ok(CostRecord {
            kind: self.kind,
            amount: self.amount + other.amount,
            unit: self.unit.clone(),
        })
    }

    pub fn with_amount(&self, amount: f64) -> Result<CostRecord> {
        CostRecord::new(self.kind, amount, self.unit.clone())
    }
}

impl std::fmt::Display for CostRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} ({})", self.amount, self.unit, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformKind {
    /// Deterministic many-to-one map from input letters to output letters.
    Grouping { map: IndexMap<String, String> },
    /// Bins over numeric letters. Bin `i` is `[b[i], b[i+1])`, the last bin
    /// is closed. Output letters are the bin indices `"0"`..`"k-1"`.
    Quantizer { boundaries: Vec<f64> },
    /// Windowed statistic over a product alphabet. `output_factor` replaces
    /// the per-element factor (e.g. a plot that resolves 128 levels).
    Aggregator {
        window: u64,
        statistic: String,
        output_factor: Option<Arc<Alphabet>>,
    },
    /// Row-stochastic conditional pmf, one row per input letter.
    Channel {
        outputs: Vec<String>,
        rows: IndexMap<String, Vec<f64>>,
    },
    /// A step whose output alphabet and distortion are declared rather than
    /// computed.
    DeclaredHuman {
        output: Arc<Alphabet>,
        declared_distortion_bits: f64,
    },
    /// Steps applied in order.
    Chain(Vec<Transform>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    pub name: String,
    pub kind: TransformKind,
    pub cost: CostRecord,
    pub node_kind: NodeKind,
}

/// Deterministic image of each input letter, by index into `outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicMap {
    pub outputs: Vec<String>,
    pub image: Vec<usize>,
}

/// Full conditional table `c(y|x)` over an enumerated input.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Transform {
    pub fn new(name: impl Into<String>, kind: TransformKind, cost: CostRecord, node_kind: NodeKind) -> Result<Self> {
        let name = name.into();
        validate_kind(&name, &kind)?;
        Ok(Transform {
            name,
            kind,
            cost,
            node_kind,
        })
    }

    pub fn grouping<I, A, B>(name: impl Into<String>, map: I, cost: CostRecord, node_kind: NodeKind) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let map = map.into_iter().map(|(a, b)| (a.into(), b.into())).collect();
        Transform::new(name, TransformKind::Grouping { map }, cost, node_kind)
    }

    pub fn identity(name: impl Into<String>, input: &Alphabet, cost: CostRecord) -> Result<Self> {
        let pmf = input
            .pmf()
            .ok_or_else(|| Error::RequiresEnumerated("identity grouping".into()))?;
        Transform::grouping(name, pmf.ids().map(|id| (id, id)), cost, NodeKind::M)
    }

    pub fn uniform_quantizer(
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        bins: usize,
        cost: CostRecord,
        node_kind: NodeKind,
    ) -> Result<Self> {
        Transform::new(
            name,
            TransformKind::Quantizer {
                boundaries: uniform_boundaries(lo, hi, bins)?,
            },
            cost,
            node_kind,
        )
    }

    pub fn is_deterministic(&self) -> bool {
        match &self.kind {
            TransformKind::Grouping { .. } | TransformKind::Quantizer { .. } => true,
            TransformKind::Chain(steps) => steps.iter().all(Transform::is_deterministic),
            _ => false,
        }
    }

    /// Whether the step can introduce information from outside the chain,
    /// which voids the data processing inequality.
    pub fn is_declared(&self) -> bool {
        match &self.kind {
            TransformKind::DeclaredHuman { .. } => true,
            TransformKind::Chain(steps) => steps.iter().any(Transform::is_declared),
            _ => false,
        }
    }

    /// Image of `input` under this transform.
    pub fn pushforward(&self, input: &Alphabet) -> Result<Alphabet> {
        let out_name = format!("{}({})", self.name, input.name());
        match &self.kind {
            TransformKind::Grouping { .. } | TransformKind::Quantizer { .. } => {
                let pmf = require_pmf(input, &self.name)?;
                let map = self.deterministic_map(input)?;
                let mut mass = vec![0.0; map.outputs.len()];
                for (p, &y) in pmf.probs().zip(&map.image) {
                    mass[y] += p;
                }
                let out = Pmf::new(map.outputs.iter().cloned().zip(mass))?;
                Ok(Alphabet::from_pmf(out_name, out))
            }
            TransformKind::Channel { outputs, .. } => {
                let cond = self.conditional(input)?;
                let pmf = require_pmf(input, &self.name)?;
                let mut mass = vec![0.0; outputs.len()];
                for (p, row) in pmf.probs().zip(&cond.rows) {
                    for (m, c) in mass.iter_mut().zip(row) {
                        *m += p * c;
                    }
                }
                let out = Pmf::new(outputs.iter().cloned().zip(mass))?;
                Ok(Alphabet::from_pmf(out_name, out))
            }
            TransformKind::Aggregator {
                window,
                output_factor,
                ..
            } => match input.model() {
                AlphabetModel::Product { factor, count } => {
                    if count % window != 0 {
                        return Err(Error::WindowMismatch {
                            window: *window,
                            count: *count,
                        });
                    }
                    let factor = output_factor.clone().unwrap_or_else(|| factor.clone());
                    Alphabet::product_of(out_name, factor, count / window)
                }
                _ => Err(Error::ModeMismatch(format!(
                    "aggregator `{}` needs a product alphabet, `{}` is not one",
                    self.name,
                    input.name()
                ))),
            },
            TransformKind::DeclaredHuman { output, .. } => Ok(output.as_ref().clone().with_name(out_name)),
            TransformKind::Chain(steps) => {
                let mut current = input.clone();
                for step in steps {
                    current = step.pushforward(&current)?;
                }
                Ok(current.with_name(out_name))
            }
        }
    }

    /// Index map for deterministic transforms over an enumerated input.
    pub fn deterministic_map(&self, input: &Alphabet) -> Result<DeterministicMap> {
        let pmf = require_pmf(input, &self.name)?;
        match &self.kind {
            TransformKind::Grouping { map } => {
                let mut outputs: IndexMap<&str, ()> = IndexMap::new();
                let mut image = Vec::with_capacity(pmf.len());
                for id in pmf.ids() {
                    let y = map.get(id).ok_or_else(|| Error::PartialMapping(id.to_string()))?;
                    let (idx, _) = outputs.insert_full(y.as_str(), ());
                    image.push(idx);
                }
                Ok(DeterministicMap {
                    outputs: outputs.keys().map(|s| s.to_string()).collect(),
                    image,
                })
            }
            TransformKind::Quantizer { boundaries } => {
                let letters = input.letters().unwrap_or(&[]);
                let k = boundaries.len() - 1;
                let image = letters
                    .iter()
                    .map(|l| {
                        let v = numeric_value(l)?;
                        bin_of(boundaries, v).ok_or_else(|| Error::PartialMapping(l.id.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(DeterministicMap {
                    outputs: (0..k).map(|i| i.to_string()).collect(),
                    image,
                })
            }
            TransformKind::Chain(steps) if self.is_deterministic() => {
                let mut current = input.clone();
                let mut image: Vec<usize> = (0..pmf.len()).collect();
                let mut outputs: Vec<String> = pmf.ids().map(str::to_string).collect();
                for step in steps {
                    let m = step.deterministic_map(&current)?;
                    image = image.iter().map(|&i| m.image[i]).collect();
                    outputs = m.outputs;
                    current = step.pushforward(&current)?;
                }
                Ok(DeterministicMap { outputs, image })
            }
            _ => Err(Error::NotDeterministic(self.name.clone())),
        }
    }

    /// Conditional table `c(y|x)` for groupings, quantizers, channels and
    /// chains of them.
    pub fn conditional(&self, input: &Alphabet) -> Result<Conditional> {
        let pmf = require_pmf(input, &self.name)?;
        let inputs: Vec<String> = pmf.ids().map(str::to_string).collect();
        match &self.kind {
            TransformKind::Grouping { .. } | TransformKind::Quantizer { .. } => {
                let m = self.deterministic_map(input)?;
                let rows = m
                    .image
                    .iter()
                    .map(|&y| {
                        let mut row = vec![0.0; m.outputs.len()];
                        row[y] = 1.0;
                        row
                    })
                    .collect();
                Ok(Conditional {
                    inputs,
                    outputs: m.outputs,
                    rows,
                })
            }
            TransformKind::Channel { outputs, rows } => {
                let rows = inputs
                    .iter()
                    .map(|x| rows.get(x).cloned().ok_or_else(|| Error::PartialMapping(x.clone())))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Conditional {
                    inputs,
                    outputs: outputs.clone(),
                    rows,
                })
            }
            TransformKind::Chain(steps) => {
                let mut current = input.clone();
                let mut rows: Vec<Vec<f64>> = (0..inputs.len())
                    .map(|i| {
                        let mut r = vec![0.0; inputs.len()];
                        r[i] = 1.0;
                        r
                    })
                    .collect();
                let mut outputs = inputs.clone();
                for step in steps {
                    let c = step.conditional(&current)?;
                    rows = rows
                        .iter()
                        .map(|r| {
                            let mut next = vec![0.0; c.outputs.len()];
                            for (w, crow) in r.iter().zip(&c.rows) {
                                if *w != 0.0 {
                                    for (n, v) in next.iter_mut().zip(crow) {
                                        *n += w * v;
                                    }
                                }
                            }
                            next
                        })
                        .collect();
                    outputs = c.outputs;
                    current = step.pushforward(&current)?;
                }
                Ok(Conditional { inputs, outputs, rows })
            }
            _ => Err(Error::RequiresEnumerated(format!(
                "`{}` has no conditional table",
                self.name
            ))),
        }
    }

    /// I(input; output) in bits.
    pub fn mutual_information(&self, input: &Alphabet) -> Result<f64> {
        let pmf = input
            .pmf()
            .ok_or_else(|| Error::RequiresEnumerated(format!("mutual information over `{}`", input.name())))?;
        if self.is_deterministic() {
            // H(Y|X) = 0
            return Ok(self.pushforward(input)?.entropy());
        }
        let cond = self.conditional(input)?;
        let mut q = vec![0.0; cond.outputs.len()];
        for (p, row) in pmf.probs().zip(&cond.rows) {
            for (qy, c) in q.iter_mut().zip(row) {
                *qy += p * c;
            }
        }
        let mut mi = 0.0;
        for (p, row) in pmf.probs().zip(&cond.rows) {
            if p <= 0.0 {
                continue;
            }
            for (c, qy) in row.iter().zip(&q) {
                if *c > 0.0 {
                    mi += p * c * (c / qy).log2();
                }
            }
        }
        Ok(mi.max(0.0))
    }
}

/// `t1` followed by `t2`, with summed cost.
pub fn compose(t1: &Transform, t2: &Transform) -> Result<Transform> {
    let cost = t1.cost.checked_add(&t2.cost)?;
    let mut steps = Vec::new();
    for t in [t1, t2] {
        match &t.kind {
            TransformKind::Chain(inner) => steps.extend(inner.iter().cloned()),
            _ => steps.push(t.clone()),
        }
    }
    let node_kind = merge_node_kind(t1.node_kind, t2.node_kind);
    Ok(Transform {
        name: format!("{}->{}", t1.name, t2.name),
        kind: TransformKind::Chain(steps),
        cost,
        node_kind,
    })
}

fn merge_node_kind(a: NodeKind, b: NodeKind) -> NodeKind {
    if a == b {
        return a;
    }
    for k in [NodeKind::H, NodeKind::I, NodeKind::V] {
        if a == k || b == k {
            return k;
        }
    }
    NodeKind::M
}

pub fn uniform_boundaries(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::InvalidQuantizer("bin count must be at least 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidQuantizer(format!("bad range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut b: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    b.push(hi);
    Ok(b)
}

fn bin_of(boundaries: &[f64], v: f64) -> Option<usize> {
    let k = boundaries.len() - 1;
    if !(v >= boundaries[0] && v <= boundaries[k]) {
        return None;
    }
    let idx = boundaries.partition_point(|b| *b <= v);
    Some((idx - 1).min(k - 1))
}

fn numeric_value(l: &Letter) -> Result<f64> {
    l.id.trim()
        .parse::<f64>()
        .ok()
        .or_else(|| l.payload.as_deref().and_then(|p| p.trim().parse().ok()))
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| Error::NonNumericLetter(l.id.clone()))
}

fn require_pmf<'a>(input: &'a Alphabet, transform: &str) -> Result<&'a Pmf> {
    input.pmf().ok_or_else(|| {
        Error::ModeMismatch(format!(
            "`{transform}` needs an enumerated input, `{}` is not enumerated",
            input.name()
        ))
    })
}

fn validate_kind(name: &str, kind: &TransformKind) -> Result<()> {
    match kind {
        TransformKind::Grouping { map } => {
            if map.is_empty() {
                return Err(Error::PartialMapping(format!("grouping `{name}` is empty")));
            }
        }
        TransformKind::Quantizer { boundaries } => {
            if boundaries.len() < 2 {
                return Err(Error::InvalidQuantizer(format!("`{name}` needs at least one bin")));
            }
            if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidQuantizer(format!(
                    "`{name}` boundaries must be finite and strictly increasing"
                )));
            }
        }
        TransformKind::Aggregator { window, .. } => {
            if *window == 0 {
                return Err(Error::InvalidParameter(format!("aggregator `{name}` window is zero")));
            }
        }
        TransformKind::Channel { outputs, rows } => {
            if outputs.is_empty() {
                return Err(Error::InvalidChannel(format!("`{name}` has no outputs")));
            }
            for (x, row) in rows {
                if row.len() != outputs.len() {
                    return Err(Error::InvalidChannel(format!(
                        "row `{x}` has {} entries, expected {}",
                        row.len(),
                        outputs.len()
                    )));
                }
                if row.iter().any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0) {
                    return Err(Error::InvalidChannel(format!("row `{x}` has an entry outside [0, 1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > PMF_TOLERANCE {
                    return Err(Error::InvalidChannel(format!("row `{x}` sums to {sum}")));
                }
            }
        }
        TransformKind::DeclaredHuman {
            declared_distortion_bits,
            ..
        } => {
            if !declared_distortion_bits.is_finite() || *declared_distortion_bits < 0.0 {
                return Err(Error::NegativeDivergence(*declared_distortion_bits));
            }
        }
        TransformKind::Chain(steps) => {
            if steps.is_empty() {
                return Err(Error::InvalidParameter(format!("chain `{name}` is empty")));
            }
        }
    }
    Ok(())
}
