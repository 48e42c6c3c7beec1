//! Search over finite parameter spaces for the workflow configuration with
//! the best overall cost-benefit ratio.

use std::cmp::Ordering;
use std::collections::HashMap;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::transform::CostRecord;
use crate::workflow::{Interval, OverallMetrics};

pub const DEFAULT_CAP: u64 = 1_000_000;

/// Seed used by [`greedy_search`] unless the caller supplies one.
pub const DEFAULT_SEED: u64 = 0x00C0_57BE_2EF1_7001;

const TIE_EPS: f64 = 1e-12;

/// One searchable parameter: a named setting of the edge `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub target: String,
    pub param: String,
    pub values: Vec<Value>,
}

impl Dimension {
    pub fn key(&self) -> String {
        format!("{}.{}", self.target, self.param)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpace {
    pub dimensions: Vec<Dimension>,
}

impl ParamSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self> {
        for d in &dimensions {
            if d.values.is_empty() {
                return Err(Error::InvalidParameter(format!("`{}` has no candidate values", d.key())));
            }
        }
        Ok(ParamSpace { dimensions })
    }

    /// Number of assignments; 1 for the empty space.
    pub fn combination_count(&self) -> u128 {
        self.dimensions
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.values.len() as u128))
    }

    /// Decodes the `n`-th assignment in lexicographic order, first dimension
    /// most significant.
    pub fn assignment_at(&self, mut n: u64) -> Vec<usize> {
        let mut idx = vec![0; self.dimensions.len()];
        for (slot, d) in idx.iter_mut().zip(&self.dimensions).rev() {
            let k = d.values.len() as u64;
            *slot = (n % k) as usize;
            n /= k;
        }
        idx
    }

    pub fn describe(&self, assignment: &[usize]) -> IndexMap<String, Value> {
        self.dimensions
            .iter()
            .zip(assignment)
            .map(|(d, &i)| (d.key(), d.values[i].clone()))
            .collect()
    }
}

/// Something that scores an assignment of a [`ParamSpace`].
pub trait Objective: Sync {
    fn evaluate(&self, space: &ParamSpace, assignment: &[usize]) -> Result<OverallMetrics>;
}

impl<F> Objective for F
where
    F: Fn(&ParamSpace, &[usize]) -> Result<OverallMetrics> + Sync,
{
    fn evaluate(&self, space: &ParamSpace, assignment: &[usize]) -> Result<OverallMetrics> {
        self(space, assignment)
    }
}

/// Which point of the overall CBR interval is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Midpoint,
    Lower,
}

impl Target {
    fn pick(self, i: &Interval) -> f64 {
        match self {
            Target::Midpoint => i.midpoint(),
            Target::Lower => i.lo,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchConfig {
    pub budget: Option<CostRecord>,
    pub target: Target,
    pub cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub assignment: IndexMap<String, Value>,
    pub cost: f64,
    pub benefit_lo: f64,
    pub benefit_hi: f64,
    pub cbr_mid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_assignment: IndexMap<String, Value>,
    pub best_indices: Vec<usize>,
    pub best_cbr: Interval,
    pub best_cost: CostRecord,
    pub best_benefit: Interval,
    pub frontier: Vec<FrontierPoint>,
    pub evaluations: u64,
    /// False for local searches.
    pub certified: bool,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u32>,
}

#[derive(Debug, Clone)]
struct Scored {
    indices: Vec<usize>,
    metrics: OverallMetrics,
    feasible: bool,
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

/// `Greater` when `a` is preferred over `b`.
fn compare(a: &Scored, b: &Scored, target: Target) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => return Ordering::Greater,
        (false, true) => return Ordering::Less,
        _ => {}
    }
    let (va, vb) = (target.pick(&a.metrics.overall_cbr), target.pick(&b.metrics.overall_cbr));
    if !ties(va, vb) {
        return va.partial_cmp(&vb).unwrap_or(Ordering::Equal);
    }
    let (ca, cb) = (a.metrics.total_cost.amount, b.metrics.total_cost.amount);
    if !ties(ca, cb) {
        return cb.partial_cmp(&ca).unwrap_or(Ordering::Equal);
    }
    b.indices.cmp(&a.indices)
}

fn feasible(metrics: &OverallMetrics, budget: Option<&CostRecord>) -> Result<bool> {
    match budget {
        None => Ok(true),
        Some(b) => {
            b.ensure_commensurable(&metrics.total_cost)?;
            Ok(metrics.total_cost.amount <= b.amount)
        }
    }
}

fn score(obj: &dyn Objective, space: &ParamSpace, indices: Vec<usize>, budget: Option<&CostRecord>) -> Result<Scored> {
    let metrics = obj.evaluate(space, &indices)?;
    let feasible = feasible(&metrics, budget)?;
    Ok(Scored {
        indices,
        metrics,
        feasible,
    })
}

/// Evaluates every assignment. Evaluations run in parallel; the reduction
/// walks them in lexicographic order so the result does not depend on
/// scheduling.
pub fn exhaustive_search(obj: &dyn Objective, space: &ParamSpace, config: &SearchConfig) -> Result<OptimizeResult> {
    let cap = config.cap.unwrap_or(DEFAULT_CAP);
    let count = space.combination_count();
    if count > cap as u128 {
        return Err(Error::CapExceeded { count, cap });
    }
    let budget = config.budget.as_ref();
    let scored: Vec<Result<Scored>> = (0..count as u64)
        .into_par_iter()
        .map(|n| score(obj, space, space.assignment_at(n), budget))
        .collect();
    let scored: Vec<Scored> = scored.into_iter().collect::<Result<_>>()?;
    finish(space, &scored, config, count as u64, true, None, None)
}

fn finish(
    space: &ParamSpace,
    scored: &[Scored],
    config: &SearchConfig,
    evaluations: u64,
    certified: bool,
    seed: Option<u64>,
    restarts: Option<u32>,
) -> Result<OptimizeResult> {
    let mut best: Option<&Scored> = None;
    for s in scored.iter().filter(|s| s.feasible) {
        if best.is_none_or(|b| compare(s, b, config.target) == Ordering::Greater) {
            best = Some(s);
        }
    }
    let best = best.ok_or_else(|| {
        Error::InfeasibleBudget(config.budget.as_ref().map_or_else(String::new, ToString::to_string))
    })?;
    let feasible: Vec<&Scored> = scored.iter().filter(|s| s.feasible).collect();
    let points: Vec<(f64, f64)> = feasible
        .iter()
        .map(|s| (s.metrics.total_cost.amount, config.target.pick(&s.metrics.total_benefit_bits)))
        .collect();
    let frontier = pareto_indices(&points)
        .into_iter()
        .map(|i| {
            let s = feasible[i];
            FrontierPoint {
                assignment: space.describe(&s.indices),
                cost: s.metrics.total_cost.amount,
                benefit_lo: s.metrics.total_benefit_bits.lo,
                benefit_hi: s.metrics.total_benefit_bits.hi,
                cbr_mid: s.metrics.overall_cbr.midpoint(),
            }
        })
        .collect();
    Ok(OptimizeResult {
        best_assignment: space.describe(&best.indices),
        best_indices: best.indices.clone(),
        best_cbr: best.metrics.overall_cbr,
        best_cost: best.metrics.total_cost.clone(),
        best_benefit: best.metrics.total_benefit_bits,
        frontier,
        evaluations,
        certified,
        target: config.target,
        seed,
        restarts,
    })
}

/// Coordinate ascent from `restarts` starting points. The first start is
/// the all-zero assignment, the rest are drawn from a ChaCha8 stream seeded
/// with `seed`. Each sweep does a full line search per dimension and moves
/// only on strict improvement.
pub fn greedy_search(
    obj: &dyn Objective,
    space: &ParamSpace,
    config: &SearchConfig,
    restarts: u32,
    seed: u64,
) -> Result<OptimizeResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let budget = config.budget.as_ref();
    let mut memo: HashMap<Vec<usize>, Scored> = HashMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    let mut eval = |idx: &[usize]| -> Result<Scored> {
        if let Some(s) = memo.get(idx) {
            return Ok(s.clone());
        }
        let s = score(obj, space, idx.to_vec(), budget)?;
        memo.insert(idx.to_vec(), s.clone());
        order.push(idx.to_vec());
        Ok(s)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = space.dimensions.len();
    for r in 0..restarts {
        let start: Vec<usize> = if r == 0 {
            vec![0; dims]
        } else {
            space.dimensions.iter().map(|d| rng.random_range(0..d.values.len())).collect()
        };
        let mut current = eval(&start)?;
        loop {
            let mut moved = false;
            for d in 0..dims {
                let mut best = current.clone();
                for v in 0..space.dimensions[d].values.len() {
                    if v == current.indices[d] {
                        continue;
                    }
                    let mut cand = current.indices.clone();
                    cand[d] = v;
                    let s = eval(&cand)?;
                    if compare(&s, &best, config.target) == Ordering::Greater {
                        best = s;
                    }
                }
                if best.indices != current.indices {
                    current = best;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
    let scored: Vec<Scored> = order.iter().map(|k| memo[k].clone()).collect();
    finish(space, &scored, config, scored.len() as u64, false, Some(seed), Some(restarts))
}

/// Indices of the nondominated points (minimize cost, maximize benefit),
/// sorted by cost. Among identical points the first is kept.
fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[b].1.total_cmp(&points[a].1))
            .then(a.cmp(&b))
    });
    let mut out = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for i in idx {
        if points[i].1 > best {
            best = points[i].1;
            out.push(i);
        }
    }
    out
}

/// Nondominated subset of `(cost, benefit)` points, sorted by cost.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    pareto_indices(points).into_iter().map(|i| points[i]).collect()
}

/// CSV with columns `assignment, cost, benefit_lo, benefit_hi, cbr_mid`.
/// The assignment column holds a compact JSON object.
pub fn frontier_csv(frontier: &[FrontierPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let row_err = "writing csv to memory cannot fail";
    w.write_record(["assignment", "cost", "benefit_lo", "benefit_hi", "cbr_mid"])
        .expect(row_err);
    for p in frontier {
        let a = serde_json::to_string(&p.assignment).expect(row_err);
        w.write_record([
            a,
            p.cost.to_string(),
            p.benefit_lo.to_string(),
            p.benefit_hi.to_string(),
            p.cbr_mid.to_string(),
        ])
        .expect(row_err);
    }
    String::from_utf8(w.into_inner().expect(row_err)).expect(row_err)
}
