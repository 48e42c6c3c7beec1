//! Turning a [`WorkflowSpec`] into a validated [`WorkflowGraph`], and
//! instantiating parameter assignments.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde_json::Value;

use super::schema::*;
use super::SpecError;
use crate::alphabet::{Alphabet, Letter, Pmf};
use crate::error::Error;
use crate::optimize::{self, Objective, OptimizeResult, ParamSpace, SearchConfig, Target};
use crate::reconstruction::{Reconstruction, Smoothing};
use crate::transform::{uniform_boundaries, CostRecord, Transform, TransformKind};
use crate::workflow::{EdgeDef, Node, OverallMetrics, WorkflowGraph};

fn invariant(path: impl Into<String>, source: Error) -> SpecError {
    SpecError::Invariant {
        path: path.into(),
        source,
    }
}

fn dangling(path: String, what: &'static str, name: &str) -> SpecError {
    SpecError::DanglingReference {
        path,
        what,
        name: name.to_string(),
    }
}

fn index_names<'a>(
    names: impl Iterator<Item = &'a str>,
    section: &str,
) -> Result<HashMap<&'a str, usize>, SpecError> {
    let mut map = HashMap::new();
    for (i, n) in names.enumerate() {
        if map.insert(n, i).is_some() {
            return Err(invariant(
                format!("{section}[{i}].name"),
                Error::InvalidGraph(format!("duplicate name `{n}`")),
            ));
        }
    }
    Ok(map)
}

/// Largest letter count a spec may ask to enumerate.
pub const MAX_LETTERS: usize = 1 << 22;

fn check_size(n: usize, what: &str) -> crate::Result<()> {
    if n > MAX_LETTERS {
        return Err(Error::InvalidParameter(format!("{what} of {n} exceeds the limit of {MAX_LETTERS}")));
    }
    Ok(())
}

pub(crate) fn build_model(model: &ModelSpec, name: &str, path: &str) -> Result<Alphabet, SpecError> {
    let wrap = |e| invariant(path, e);
    match model {
        ModelSpec::Enumerated { letters } => {
            let pmf = Pmf::new(letters.iter().map(|l| (l.id.clone(), l.p))).map_err(wrap)?;
            let letters = letters
                .iter()
                .map(|l| Letter {
                    id: l.id.clone(),
                    payload: l.payload.clone(),
                })
                .collect();
            Alphabet::enumerated(name, letters, pmf).map_err(wrap)
        }
        ModelSpec::Uniform { size, prefix } => {
            check_size(*size, "uniform size").map_err(wrap)?;
            let prefix = prefix.as_deref().unwrap_or("");
            let pmf = Pmf::uniform((0..*size).map(|i| format!("{prefix}{i}"))).map_err(wrap)?;
            Ok(Alphabet::from_pmf(name, pmf))
        }
        ModelSpec::Symbolic {
            entropy_bits,
            max_entropy_bits,
        } => Alphabet::symbolic(name, *entropy_bits, *max_entropy_bits).map_err(wrap),
        ModelSpec::Product { factor, count } => {
            let f = build_model(factor, &format!("{name}.factor"), &format!("{path}.factor"))?;
            Alphabet::product_of(name, Arc::new(f), *count).map_err(wrap)
        }
        ModelSpec::Derived => Err(invariant(
            path,
            Error::InvalidGraph("a derived model is only allowed at the top level of an alphabet".into()),
        )),
    }
}

fn build_transform(t: &TransformSpec, cost: CostRecord, path: &str) -> Result<Transform, SpecError> {
    let kind = match &t.kind {
        TransformKindSpec::Grouping { map } => TransformKind::Grouping { map: map.clone() },
        TransformKindSpec::Quantizer { boundaries } => TransformKind::Quantizer {
            boundaries: boundaries.clone(),
        },
        TransformKindSpec::UniformQuantizer { lo, hi, bins } => TransformKind::Quantizer {
            boundaries: check_size(*bins, "bin count")
                .and_then(|()| uniform_boundaries(*lo, *hi, *bins))
                .map_err(|e| invariant(format!("{path}.kind"), e))?,
        },
        TransformKindSpec::Aggregator {
            window,
            statistic,
            output_factor,
        } => TransformKind::Aggregator {
            window: *window,
            statistic: statistic.clone(),
            output_factor: output_factor
                .as_ref()
                .map(|m| build_model(m, &format!("{}.factor", t.name), &format!("{path}.kind.output_factor")))
                .transpose()?
                .map(Arc::new),
        },
        TransformKindSpec::Channel { outputs, rows } => TransformKind::Channel {
            outputs: outputs.clone(),
            rows: rows.clone(),
        },
        TransformKindSpec::DeclaredHuman {
            output,
            declared_distortion_bits,
        } => TransformKind::DeclaredHuman {
            output: Arc::new(build_model(output, &format!("{}.output", t.name), &format!("{path}.kind.output"))?),
            declared_distortion_bits: *declared_distortion_bits,
        },
    };
    Transform::new(t.name.clone(), kind, cost, t.node_kind).map_err(|e| invariant(path, e))
}

fn build_reconstruction(r: &ReconstructionSpec, path: &str) -> Result<Reconstruction, SpecError> {
    let wrap = |e| invariant(format!("{path}.kind"), e);
    Ok(match &r.kind {
        ReconstructionKindSpec::ExactConditional => Reconstruction::ExactConditional,
        ReconstructionKindSpec::UniformPreimage => Reconstruction::UniformPreimage,
        ReconstructionKindSpec::PriorWeighted { prior } => {
            Reconstruction::PriorWeighted(Pmf::new(prior.iter().map(|(k, v)| (k.clone(), *v))).map_err(wrap)?)
        }
        ReconstructionKindSpec::DeclaredDivergence { bits } => Reconstruction::declared(*bits).map_err(wrap)?,
        ReconstructionKindSpec::MachineShortcut => Reconstruction::MachineShortcut,
    })
}

/// Checks the version and that every name used in the spec is declared.
pub fn check_references(spec: &WorkflowSpec) -> Result<(), SpecError> {
    if spec.schema_version != SCHEMA_VERSION {
        return Err(SpecError::UnknownSchemaVersion(spec.schema_version.clone()));
    }
    let alphabets = index_names(spec.alphabets.iter().map(|a| a.name.as_str()), "alphabets")?;
    let transforms = index_names(spec.transforms.iter().map(|t| t.name.as_str()), "transforms")?;
    let recons = index_names(spec.reconstructions.iter().map(|r| r.name.as_str()), "reconstructions")?;
    let mut edge_ids = HashMap::new();
    for (i, e) in spec.graph.edges.iter().enumerate() {
        let p = |f: &str| format!("graph.edges[{i}].{f}");
        if !alphabets.contains_key(e.from.as_str()) {
            return Err(dangling(p("from"), "alphabet", &e.from));
        }
        if !alphabets.contains_key(e.to.as_str()) {
            return Err(dangling(p("to"), "alphabet", &e.to));
        }
        if !transforms.contains_key(e.transform.as_str()) {
            return Err(dangling(p("transform"), "transform", &e.transform));
        }
        if let Some(r) = &e.reconstruction {
            if !recons.contains_key(r.as_str()) {
                return Err(dangling(p("reconstruction"), "reconstruction", r));
            }
        }
        if edge_ids.insert(e.id.as_str(), i).is_some() {
            return Err(invariant(p("id"), Error::InvalidGraph(format!("duplicate edge id `{}`", e.id))));
        }
    }
    if let Some(d) = &spec.graph.decisional {
        if !alphabets.contains_key(d.as_str()) {
            return Err(dangling("graph.decisional".into(), "alphabet", d));
        }
    }
    for (i, j) in spec.graph.joints.iter().enumerate() {
        if !alphabets.contains_key(j.node.as_str()) {
            return Err(dangling(format!("graph.joints[{i}].node"), "alphabet", &j.node));
        }
    }
    if let Some(space) = &spec.param_space {
        for (i, d) in space.dimensions.iter().enumerate() {
            if !edge_ids.contains_key(d.target.as_str()) {
                return Err(dangling(format!("param_space.dimensions[{i}].target"), "edge", &d.target));
            }
            if d.values.is_empty() {
                return Err(invariant(
                    format!("param_space.dimensions[{i}].values"),
                    Error::InvalidParameter("no candidate values".into()),
                ));
            }
        }
    }
    Ok(())
}

/// Builds and validates the workflow graph described by `spec`.
pub fn build_graph(spec: &WorkflowSpec) -> Result<WorkflowGraph, SpecError> {
    check_references(spec)?;
    let alph_index: HashMap<&str, usize> = spec.alphabets.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    let trans_index: HashMap<&str, usize> = spec.transforms.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let recon_index: HashMap<&str, usize> =
        spec.reconstructions.iter().enumerate().map(|(i, r)| (r.name.as_str(), i)).collect();

    let cost_of = |amount: f64, path: &str| {
        CostRecord::new(spec.cost_model.kind, amount, spec.cost_model.unit.clone()).map_err(|e| invariant(path, e))
    };
    let transforms: Vec<Transform> = spec
        .transforms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = format!("transforms[{i}]");
            let cost_path = format!("{path}.cost");
            // a zero base is fine when output bits are charged; the edge sets the final amount
            let amount = match t.cost.per_output_bit {
                Some(per_bit) if t.cost.amount >= 0.0 && per_bit > 0.0 => t.cost.amount + per_bit,
                _ => t.cost.amount,
            };
            build_transform(t, cost_of(amount, &cost_path)?, &path)
        })
        .collect::<Result<_, _>>()?;
    let recons: Vec<Reconstruction> = spec
        .reconstructions
        .iter()
        .enumerate()
        .map(|(i, r)| build_reconstruction(r, &format!("reconstructions[{i}]")))
        .collect::<Result<_, _>>()?;

    // nodes in topological order, so derived models can be computed
    let n = spec.alphabets.len();
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in spec.graph.edges.iter().enumerate() {
        indeg[alph_index[e.to.as_str()]] += 1;
        out[alph_index[e.from.as_str()]].push(i);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &ei in &out[v] {
            let t = alph_index[spec.graph.edges[ei].to.as_str()];
            indeg[t] -= 1;
            if indeg[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    if order.len() != n {
        return Err(invariant("graph.edges", Error::InvalidGraph("the edges form a cycle".into())));
    }

    let mut built: Vec<Option<Arc<Alphabet>>> = vec![None; n];
    for v in order {
        let a = &spec.alphabets[v];
        let path = format!("alphabets[{v}].model");
        let alphabet = match &a.model {
            ModelSpec::Derived => {
                let (ei, e) = spec
                    .graph
                    .edges
                    .iter()
                    .enumerate()
                    .find(|(_, e)| e.to == a.name)
                    .ok_or_else(|| invariant(&path, Error::InvalidGraph(format!("derived alphabet `{}` has no incoming edge", a.name))))?;
                let input = built[alph_index[e.from.as_str()]].as_ref().expect("topological order");
                transforms[trans_index[e.transform.as_str()]]
                    .pushforward(input)
                    .map_err(|err| invariant(format!("graph.edges[{ei}]"), err))?
                    .with_name(a.name.clone())
            }
            m => build_model(m, &a.name, &path)?,
        };
        built[v] = Some(Arc::new(alphabet));
    }
    let alphabets: Vec<Arc<Alphabet>> = built.into_iter().map(|a| a.expect("every node visited")).collect();

    let mut edges = Vec::with_capacity(spec.graph.edges.len());
    for (i, e) in spec.graph.edges.iter().enumerate() {
        let ts = &spec.transforms[trans_index[e.transform.as_str()]];
        let mut t = transforms[trans_index[e.transform.as_str()]].clone();
        if let Some(per_bit) = ts.cost.per_output_bit {
            let bits = alphabets[alph_index[e.to.as_str()]].max_entropy();
            t.cost = cost_of(ts.cost.amount + per_bit * bits, &format!("graph.edges[{i}]"))?;
        }
        edges.push(EdgeDef {
            id: e.id.clone(),
            from: e.from.clone(),
            to: e.to.clone(),
            transform: t,
            reconstruction: e.reconstruction.as_ref().map(|r| recons[recon_index[r.as_str()]].clone()),
            smoothing: match e.kl_smoothing {
                SmoothingSpec::Strict => Smoothing::Strict,
                SmoothingSpec::Floor => Smoothing::Floor,
            },
        });
    }
    let nodes = spec
        .alphabets
        .iter()
        .zip(alphabets)
        .map(|(a, alphabet)| Node {
            name: a.name.clone(),
            alphabet,
        })
        .collect();
    let edge_pos: HashMap<&str, usize> = spec.graph.edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut g = WorkflowGraph::new(spec.name.clone(), spec.entropy_mode, nodes, edges, spec.graph.decisional.as_deref())
        .map_err(|err| match &err {
            Error::EdgeMismatch { edge, .. } => invariant(format!("graph.edges[{}]", edge_pos[edge.as_str()]), err),
            _ => invariant("graph", err),
        })?;
    for (i, j) in spec.graph.joints.iter().enumerate() {
        g = g
            .with_shared_mi(&j.node, j.shared_mi_bits)
            .map_err(|e| invariant(format!("graph.joints[{i}]"), e))?;
    }
    Ok(g.with_tags(spec.graph.class_tag, spec.graph.level_tag))
}

/// The spec with the chosen value of every dimension applied.
pub fn apply_assignment(spec: &WorkflowSpec, space: &ParamSpace, assignment: &[usize]) -> Result<WorkflowSpec, SpecError> {
    let mut out = spec.clone();
    for (i, (d, &k)) in space.dimensions.iter().zip(assignment).enumerate() {
        let path = format!("param_space.dimensions[{i}]");
        let value = d.values.get(k).ok_or_else(|| {
            invariant(&path, Error::InvalidParameter(format!("index {k} out of range for `{}`", d.key())))
        })?;
        apply_param(&mut out, &d.target, &d.param, value, &path)?;
    }
    Ok(out)
}

fn bad(path: &str, msg: String) -> SpecError {
    invariant(path, Error::InvalidParameter(msg))
}

fn as_f64(v: &Value, key: &str, path: &str) -> Result<f64, SpecError> {
    v.as_f64().ok_or_else(|| bad(path, format!("`{key}` expects a number, got {v}")))
}

fn as_u64(v: &Value, key: &str, path: &str) -> Result<u64, SpecError> {
    v.as_u64().ok_or_else(|| bad(path, format!("`{key}` expects a non-negative integer, got {v}")))
}

/// Index of a transform used only by `edge`, cloning a shared one first.
fn own_transform(spec: &mut WorkflowSpec, edge: usize) -> usize {
    let name = spec.graph.edges[edge].transform.clone();
    let shared = spec.graph.edges.iter().filter(|e| e.transform == name).count() > 1;
    let idx = spec.transforms.iter().position(|t| t.name == name).expect("references checked");
    if !shared {
        return idx;
    }
    let mut copy = spec.transforms[idx].clone();
    copy.name = format!("{}@{}", name, spec.graph.edges[edge].id);
    spec.graph.edges[edge].transform = copy.name.clone();
    spec.transforms.push(copy);
    spec.transforms.len() - 1
}

fn own_reconstruction(spec: &mut WorkflowSpec, edge: usize) -> Option<usize> {
    let name = spec.graph.edges[edge].reconstruction.clone()?;
    let shared = spec
        .graph
        .edges
        .iter()
        .filter(|e| e.reconstruction.as_ref() == Some(&name))
        .count()
        > 1;
    let idx = spec.reconstructions.iter().position(|r| r.name == name)?;
    if !shared {
        return Some(idx);
    }
    let mut copy = spec.reconstructions[idx].clone();
    copy.name = format!("{}@{}", name, spec.graph.edges[edge].id);
    spec.graph.edges[edge].reconstruction = Some(copy.name.clone());
    spec.reconstructions.push(copy);
    Some(spec.reconstructions.len() - 1)
}

fn apply_param(spec: &mut WorkflowSpec, target: &str, param: &str, value: &Value, path: &str) -> Result<(), SpecError> {
    let edge = spec
        .graph
        .edges
        .iter()
        .position(|e| e.id == target)
        .ok_or_else(|| dangling(format!("{path}.target"), "edge", target))?;
    match param {
        "settings" => {
            let obj = value
                .as_object()
                .ok_or_else(|| bad(path, format!("`settings` expects an object, got {value}")))?;
            for (k, v) in obj {
                if k == "settings" {
                    return Err(bad(path, "`settings` cannot nest".into()));
                }
                apply_param(spec, target, k, v, path)?;
            }
        }
        "transform" => {
            let name = value
                .as_str()
                .ok_or_else(|| bad(path, format!("`transform` expects a name, got {value}")))?;
            if !spec.transforms.iter().any(|t| t.name == name) {
                return Err(dangling(format!("{path}.values"), "transform", name));
            }
            spec.graph.edges[edge].transform = name.to_string();
        }
        "reconstruction" => {
            let r = match value {
                Value::Null => None,
                Value::String(name) => {
                    if !spec.reconstructions.iter().any(|r| &r.name == name) {
                        return Err(dangling(format!("{path}.values"), "reconstruction", name));
                    }
                    Some(name.clone())
                }
                _ => return Err(bad(path, format!("`reconstruction` expects a name or null, got {value}"))),
            };
            spec.graph.edges[edge].reconstruction = r;
        }
        "include" => {
            let keep = value
                .as_bool()
                .ok_or_else(|| bad(path, format!("`include` expects a boolean, got {value}")))?;
            if !keep {
                contract_edge(spec, edge, path)?;
            }
        }
        "bins" => {
            let k = as_u64(value, param, path)? as usize;
            let t = own_transform(spec, edge);
            match &mut spec.transforms[t].kind {
                TransformKindSpec::UniformQuantizer { bins, .. } => *bins = k,
                _ => return Err(bad(path, format!("`bins` needs a uniform quantizer on edge `{target}`"))),
            }
        }
        "window" => {
            let w = as_u64(value, param, path)?;
            let t = own_transform(spec, edge);
            match &mut spec.transforms[t].kind {
                TransformKindSpec::Aggregator { window, .. } => *window = w,
                _ => return Err(bad(path, format!("`window` needs an aggregator on edge `{target}`"))),
            }
        }
        "cost" => {
            let c = as_f64(value, param, path)?;
            let t = own_transform(spec, edge);
            spec.transforms[t].cost.amount = c;
        }
        "per_output_bit" => {
            let c = as_f64(value, param, path)?;
            let t = own_transform(spec, edge);
            spec.transforms[t].cost.per_output_bit = Some(c);
        }
        "distortion" => {
            let d = as_f64(value, param, path)?;
            let t = own_transform(spec, edge);
            if let TransformKindSpec::DeclaredHuman {
                declared_distortion_bits,
                ..
            } = &mut spec.transforms[t].kind
            {
                *declared_distortion_bits = d;
                return Ok(());
            }
            match own_reconstruction(spec, edge) {
                Some(r) => match &mut spec.reconstructions[r].kind {
                    ReconstructionKindSpec::DeclaredDivergence { bits } => *bits = d,
                    _ => return Err(bad(path, format!("`distortion` needs a declared divergence on edge `{target}`"))),
                },
                None => return Err(bad(path, format!("`distortion` needs a declared step or divergence on edge `{target}`"))),
            }
        }
        other => return Err(bad(path, format!("unknown parameter `{other}`"))),
    }
    Ok(())
}

/// Removes the edge and merges its target node into its source.
fn contract_edge(spec: &mut WorkflowSpec, edge: usize, path: &str) -> Result<(), SpecError> {
    let removed = spec.graph.edges.remove(edge);
    if spec.graph.edges.iter().any(|e| e.to == removed.to) {
        return Err(bad(path, format!("cannot drop `{}`: `{}` has other inputs", removed.id, removed.to)));
    }
    for e in &mut spec.graph.edges {
        if e.from == removed.to {
            e.from = removed.from.clone();
        }
    }
    spec.alphabets.retain(|a| a.name != removed.to);
    spec.graph.joints.retain(|j| j.node != removed.to);
    if spec.graph.decisional.as_deref() == Some(removed.to.as_str()) {
        spec.graph.decisional = Some(removed.from.clone());
    }
    Ok(())
}

/// Scores assignments by rebuilding the spec's graph.
pub struct SpecObjective<'a> {
    pub spec: &'a WorkflowSpec,
}

impl Objective for SpecObjective<'_> {
    fn evaluate(&self, space: &ParamSpace, assignment: &[usize]) -> crate::Result<OverallMetrics> {
        let s = apply_assignment(self.spec, space, assignment).map_err(|e| Error::Spec(e.to_string()))?;
        let g = build_graph(&s).map_err(|e| Error::Spec(e.to_string()))?;
        g.overall(s.cost_model.merge)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OptimizeOptions {
    pub budget: Option<f64>,
    pub greedy: bool,
    pub restarts: u32,
    pub seed: Option<u64>,
    pub target: Target,
    pub cap: Option<u64>,
}

/// Runs the optimizer over the spec's parameter space (empty if absent).
pub fn optimize_spec(spec: &WorkflowSpec, opts: &OptimizeOptions) -> Result<OptimizeResult, SpecError> {
    build_graph(spec)?;
    let space = spec.param_space.clone().unwrap_or_default();
    let budget = opts
        .budget
        .map(|b| CostRecord::new(spec.cost_model.kind, b, spec.cost_model.unit.clone()))
        .transpose()
        .map_err(|e| invariant("budget", e))?;
    let config = SearchConfig {
        budget,
        target: opts.target,
        cap: opts.cap,
    };
    let obj = SpecObjective { spec };
    let result = if opts.greedy {
        optimize::greedy_search(
            &obj,
            &space,
            &config,
            opts.restarts,
            opts.seed.unwrap_or(optimize::DEFAULT_SEED),
        )
    } else {
        optimize::exhaustive_search(&obj, &space, &config)
    };
    result.map_err(|e| invariant("param_space", e))
}
