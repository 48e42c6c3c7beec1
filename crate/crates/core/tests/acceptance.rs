//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion is checked at its stated tolerance.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use cbr_core::metrics::{benefit, grouping_check, machine_cbr};
use cbr_core::optimize::{
    exhaustive_search, greedy_search, Dimension, Objective, ParamSpace, SearchConfig, Target, DEFAULT_SEED,
};
use cbr_core::reconstruction::{distortion_bits, kl_divergence};
use cbr_core::specio::{self, build_graph, fixtures, SpecObjective, WorkflowSpec};
use cbr_core::workflow::{CostMerge, EdgeDef, Interval, Node, OverallMetrics, WorkflowGraph};
use cbr_core::{compose, Alphabet, EntropyMode, Error, NodeKind, Pmf, Reconstruction, Transform, TransformKind};

type Outcome = Result<String, String>;
type Invocation<'a> = (Vec<&'a str>, Option<(&'a str, &'a str)>, i32);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if let false = $cond {
            return Err(format!($($msg)+));
        }
    };
}

fn enumerated(name: &str, prefix: &str, p: &[f64]) -> Alphabet {
    let pmf = Pmf::new(p.iter().enumerate().map(|(i, &x)| (format!("{prefix}{i}"), x))).unwrap();
    Alphabet::from_pmf(name, pmf)
}

fn grouping(name: &str, from: &str, to: &str, groups: &[usize]) -> Transform {
    Transform::grouping(
        name,
        groups.iter().enumerate().map(|(i, g)| (format!("{from}{i}"), format!("{to}{g}"))),
        common::cost(1.0),
        NodeKind::M,
    )
    .unwrap()
}

fn pmf_vec(a: &Alphabet) -> Vec<f64> {
    a.pmf().expect("enumerated").probs().collect()
}

/// Relative agreement with an absolute floor for values that are zero.
fn agrees(lib: f64, oracle: f64) -> bool {
    (lib - oracle).abs() <= 1e-9 * lib.abs().max(oracle.abs()) + 1e-12
}

// ---- 1 ----

fn share_price_maxima() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for r in [1u64, 3, 10] {
        let spec = fixtures::share_price_chain(r);
        let g = build_graph(&spec).map_err(|e| e.to_string())?;
        let max = |n: &str| g.nodes()[g.node_index(n).unwrap()].alphabet.max_entropy();
        let rf = r as f64;
        let pairs = rf * (rf - 1.0);
        for (node, want) in [
            ("raw", 23040.0 * rf),
            ("hourly", 1920.0 * rf),
            ("plot", 420.0 * rf),
            ("features", 30.0 * rf),
            ("correlations", 15.0 * pairs),
        ] {
            ensure!(max(node) == want, "r={r}: {node} is {} bits, want exactly {want}", max(node));
            checked += 1;
        }
        let m = max("matrix");
        ensure!(
            (m - 1.16 * pairs).abs() <= 0.005 * pairs,
            "r={r}: matrix {m} outside 1.16·r(r−1) ± 0.005·r(r−1)"
        );
        let d = max("decision");
        ensure!(d <= 2.0 * rf, "r={r}: decision {d} exceeds 2r");
        checked += 2;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{checked} values for r ∈ {{1, 3, 10}} in {elapsed:.1?}"))
}

// ---- 2 ----

fn grouping_property() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut largest = 0;
    for case in 0..1000 {
        // every tenth case is at the full size
        let n = if case % 10 == 0 { 4096 } else { rng.random_range(2..=4096) };
        let k = rng.random_range(1..=n);
        let p = common::random_pmf(&mut rng, n);
        let groups = common::random_groups(&mut rng, n, k);
        let input = enumerated("x", "x", &p);
        let t = grouping("g", "x", "g", &groups);
        let residual = grouping_check(&input, &t).map_err(|e| e.to_string())?;
        ensure!(residual <= 1e-9, "case {case} (n={n}, k={k}): residual {residual:e}");
        worst = worst.max(residual);
        largest = largest.max(n);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000 cases up to {largest} letters, worst residual {worst:.2e}, {elapsed:.1?}"))
}

// ---- 3 ----

/// Impression under a deterministic map, computed directly from its
/// definition: output mass spread over each preimage by `weights`.
fn oracle_impression(p: &[f64], image: &[usize], weights: &[f64]) -> Vec<f64> {
    let k = image.iter().max().map_or(0, |m| m + 1);
    let q = common::group_masses(p, image, k);
    let norm = common::group_masses(weights, image, k);
    image
        .iter()
        .zip(weights)
        .map(|(&y, &w)| if q[y] == 0.0 { 0.0 } else { q[y] * w / norm[y] })
        .collect()
}

#[derive(Default)]
struct Tally {
    entropy: usize,
    mi: usize,
    kl: usize,
}

fn compare_graph(g: &WorkflowGraph, label: &str, tally: &mut Tally) -> Result<(), String> {
    for n in g.nodes() {
        if let Some(pmf) = n.alphabet.pmf() {
            let p: Vec<f64> = pmf.probs().collect();
            let (lib, oracle) = (n.alphabet.entropy(), common::entropy(&p));
            ensure!(agrees(lib, oracle), "{label}: H({}) {lib} vs oracle {oracle}", n.name);
            tally.entropy += 1;
        }
    }
    for e in g.edges() {
        let input = &g.nodes()[e.from].alphabet;
        let Some(pmf) = input.pmf() else { continue };
        let p: Vec<f64> = pmf.probs().collect();
        if let Ok(c) = e.transform.conditional(input) {
            let lib = e.transform.mutual_information(input).map_err(|x| x.to_string())?;
            let oracle = common::mutual_information(&p, &c.rows);
            ensure!(agrees(lib, oracle), "{label}: I over {} {lib} vs oracle {oracle}", e.id);
            tally.mi += 1;
        }
        let weights: Vec<f64> = match &e.reconstruction {
            Some(Reconstruction::ExactConditional) => p.clone(),
            Some(Reconstruction::UniformPreimage) => vec![1.0; p.len()],
            Some(Reconstruction::PriorWeighted(prior)) => pmf.ids().map(|id| prior.prob(id)).collect(),
            _ => continue,
        };
        let map = e.transform.deterministic_map(input).map_err(|x| x.to_string())?;
        let imp = oracle_impression(&p, &map.image, &weights);
        let oracle = common::kl(&imp, &p).ok_or_else(|| format!("{label}: oracle KL undefined on {}", e.id))?;
        let lib = distortion_bits(e.reconstruction.as_ref().unwrap(), &e.transform, input).map_err(|x| x.to_string())?;
        ensure!(agrees(lib, oracle), "{label}: D over {} {lib} vs oracle {oracle}", e.id);
        tally.kl += 1;
    }
    Ok(())
}

fn oracle_equivalence() -> Outcome {
    let mut tally = Tally::default();
    let mut specs: Vec<(String, WorkflowSpec)> = fixtures::builtin()
        .into_iter()
        .flat_map(|f| {
            let name = f.fixture.clone();
            f.variants.into_iter().map(move |v| (format!("{name}:{}", v.label), v.spec))
        })
        .collect();
    specs.push(("two_peak".into(), fixtures::two_peak_spec()));
    for (label, spec) in &specs {
        let g = build_graph(spec).map_err(|e| format!("{label}: {e}"))?;
        compare_graph(&g, label, &mut tally)?;
    }
    let from_fixtures = (tally.entropy, tally.mi, tally.kl);

    // random enumerated workflows exercise every reconstruction and channels
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..300 {
        let n = rng.random_range(2..=40);
        let k = rng.random_range(1..=n);
        let p = common::random_pmf(&mut rng, n);
        let input = Arc::new(enumerated("x", "x", &p));
        let t = grouping("group", "x", "y", &common::random_groups(&mut rng, n, k));
        let out = Arc::new(t.pushforward(&input).map_err(|e| e.to_string())?);
        let prior = Pmf::new(
            common::random_pmf(&mut rng, n)
                .into_iter()
                .enumerate()
                .map(|(i, w)| (format!("x{i}"), w)),
        )
        .unwrap();
        let recon = match case % 3 {
            0 => Reconstruction::ExactConditional,
            1 => Reconstruction::UniformPreimage,
            _ => Reconstruction::PriorWeighted(prior),
        };
        let m = rng.random_range(1..=8);
        let rows: IndexMap<String, Vec<f64>> = (0..n)
            .map(|i| (format!("x{i}"), common::random_pmf(&mut rng, m)))
            .collect();
        let channel = Transform::new(
            "noisy",
            TransformKind::Channel {
                outputs: (0..m).map(|j| format!("c{j}")).collect(),
                rows,
            },
            common::cost(1.0),
            NodeKind::M,
        )
        .map_err(|e| e.to_string())?;
        let noisy = Arc::new(channel.pushforward(&input).map_err(|e| e.to_string())?);
        let nodes = vec![
            Node {
                name: "x".into(),
                alphabet: input,
            },
            Node {
                name: "y".into(),
                alphabet: out,
            },
            Node {
                name: "c".into(),
                alphabet: noisy,
            },
        ];
        let edges = vec![
            EdgeDef::new("group", "x", "y", t, Some(recon)),
            EdgeDef::new("noisy", "x", "c", channel, Some(Reconstruction::MachineShortcut)),
        ];
        let g = WorkflowGraph::new("random", EntropyMode::Actual, nodes, edges, Some("y")).map_err(|e| e.to_string())?;
        compare_graph(&g, &format!("random case {case}"), &mut tally)?;
    }
    Ok(format!(
        "fixtures: {} H, {} I, {} D; with random workflows: {} H, {} I, {} D",
        from_fixtures.0, from_fixtures.1, from_fixtures.2, tally.entropy, tally.mi, tally.kl
    ))
}

// ---- 4 ----

fn pmf_of(p: &[f64]) -> Pmf {
    Pmf::new(p.iter().enumerate().map(|(i, &x)| (format!("x{i}"), x))).unwrap()
}

fn kl_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut min = f64::INFINITY;
    for i in 0..10_000 {
        let n = rng.random_range(1..=16);
        let (p, q) = (common::random_pmf(&mut rng, n), common::random_pmf(&mut rng, n));
        let d = kl_divergence(&pmf_of(&p), &pmf_of(&q)).map_err(|e| e.to_string())?;
        ensure!(d >= 0.0, "pair {i}: D = {d}");
        min = min.min(d);
        let same = kl_divergence(&pmf_of(&p), &pmf_of(&p)).map_err(|e| e.to_string())?;
        ensure!(same == 0.0, "pair {i}: D(p‖p) = {same:e}");
        if n > 1 {
            ensure!(d > 0.0, "pair {i}: distinct pmfs with D = 0");
        }
    }
    let (p, q) = (pmf_of(&[0.5, 0.5]), pmf_of(&[0.25, 0.75]));
    let pq = kl_divergence(&p, &q).map_err(|e| e.to_string())?;
    let qp = kl_divergence(&q, &p).map_err(|e| e.to_string())?;
    let want_pq = 0.5 * (0.5f64 / 0.25).log2() + 0.5 * (0.5f64 / 0.75).log2();
    let want_qp = 0.25 * (0.25f64 / 0.5).log2() + 0.75 * (0.75f64 / 0.5).log2();
    ensure!(agrees(pq, want_pq) && agrees(qp, want_qp), "asymmetry pair {pq}, {qp}");
    ensure!(pq != qp, "asymmetry witness is symmetric");
    let err = kl_divergence(&pmf_of(&[0.5, 0.5]), &pmf_of(&[1.0, 0.0]));
    ensure!(
        matches!(err, Err(Error::DivergenceUndefined(_))),
        "support violation gave {err:?}"
    );
    Ok(format!(
        "10000 pairs non-negative (min {min:.3e}), zero iff equal, D(P‖Q)={pq:.5} vs D(Q‖P)={qp:.5}, support violation → DivergenceUndefined"
    ))
}

// ---- 5 ----

fn data_processing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut strict = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=64);
        let k1 = rng.random_range(1..=n);
        let k2 = rng.random_range(1..=k1);
        let k3 = rng.random_range(1..=k2);
        let x = enumerated("x", "x", &common::random_pmf(&mut rng, n));
        let t1 = grouping("t1", "x", "a", &common::random_groups(&mut rng, n, k1));
        let t2 = grouping("t2", "a", "b", &common::random_groups(&mut rng, k1, k2));
        let t3 = grouping("t3", "b", "c", &common::random_groups(&mut rng, k2, k3));
        let a = t1.pushforward(&x).map_err(|e| e.to_string())?;
        let b = t2.pushforward(&a).map_err(|e| e.to_string())?;
        let c = t3.pushforward(&b).map_err(|e| e.to_string())?;
        let hs: Vec<f64> = [&x, &a, &b, &c].iter().map(|z| common::entropy(&pmf_vec(z))).collect();
        for w in hs.windows(2) {
            ensure!(w[1] <= w[0] + 1e-9, "case {case}: entropy rose {} → {}", w[0], w[1]);
            if w[1] < w[0] - 1e-9 {
                strict += 1;
            }
        }
        let whole = compose(&compose(&t1, &t2).map_err(|e| e.to_string())?, &t3).map_err(|e| e.to_string())?;
        let hc = whole.pushforward(&x).map_err(|e| e.to_string())?.entropy();
        ensure!((hc - hs[3]).abs() <= 1e-9, "case {case}: composed chain gives {hc}, stepwise {}", hs[3]);
    }

    // an interactive zoom brings in detail that is not in its input
    let f = fixtures::by_name("overview_interaction").unwrap();
    let spec = f.variant("stepwise").unwrap();
    let g = build_graph(spec).map_err(|e| e.to_string())?;
    let r = g.analyze(spec.cost_model.merge);
    let zoom = r.edges.iter().find(|e| e.id == "zoom").ok_or("no zoom step")?;
    ensure!(zoom.h_out > zoom.h_in, "zoom does not raise entropy: {} → {}", zoom.h_in, zoom.h_out);
    ensure!(
        g.edge("zoom").unwrap().transform.is_declared(),
        "zoom is not a declared human step"
    );
    Ok(format!(
        "1000 chains non-increasing ({strict} strict drops); declared zoom step {:.1} → {:.1} bits",
        zoom.h_in, zoom.h_out
    ))
}

// ---- 6 ----

fn shortcut_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for case in 0..500 {
        let n = rng.random_range(1..=128);
        let k = rng.random_range(1..=n);
        let p = common::random_pmf(&mut rng, n);
        let groups = common::random_groups(&mut rng, n, k);
        let x = enumerated("x", "x", &p);
        let t = grouping("t", "x", "y", &groups);
        let h_in = x.entropy();
        let h_out = t.pushforward(&x).map_err(|e| e.to_string())?.entropy();
        let d = distortion_bits(&Reconstruction::MachineShortcut, &t, &x).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = groups
            .iter()
            .map(|&g| (0..k).map(|j| if j == g { 1.0 } else { 0.0 }).collect())
            .collect();
        let i_oracle = common::mutual_information(&p, &rows);
        let h_out_oracle = common::entropy(&common::group_masses(&p, &groups, k));
        let lhs = benefit(h_in, h_out, d);
        let rhs = i_oracle - h_out_oracle;
        ensure!((lhs - rhs).abs() <= 1e-9, "case {case}: benefit {lhs} vs I − H(out) {rhs}");
        worst = worst.max((lhs - rhs).abs());
        let i = t.mutual_information(&x).map_err(|e| e.to_string())?;
        let m = machine_cbr(i, h_out, &common::cost(1.0)).map_err(|e| e.to_string())?;
        ensure!(m.value == 0.0, "case {case}: machine benefit {:e}", m.value);
    }
    Ok(format!("500 steps, worst |difference| {worst:.2e}, machine benefit exactly 0"))
}

// ---- 7 ----

fn plot_vs_binary_views() -> Outcome {
    let f = fixtures::plot_vs_binary();
    let reports = fixtures::analyze_variants(&f);
    let get = |p: &str| fixtures::resolve(p, &reports);
    let step2 = get("plot:edge.step2.benefit_bits")?;
    ensure!((step2 - 415.0).abs() <= 1.0, "plot step 2 benefit {step2}");
    let (plot, binary) = (get("plot:overall.cbr_mid")?, get("binary:overall.cbr_mid")?);
    ensure!(plot > binary, "plot CBR {plot} not above binary {binary}");
    let (lo, hi) = (get("presenter:overall.benefit_lo")?, get("presenter:overall.benefit_hi")?);
    ensure!(lo == 0.0 && hi == 0.0, "presenter benefit [{lo}, {hi}]");
    let outcome = fixtures::run_fixture(&f);
    ensure!(outcome.passed(), "fixture checks failed");
    Ok(format!(
        "step-2 benefit {step2:.2} bits, CBR plot {plot:.3} > binary {binary:.3}, presenter benefit 0 (with the fixture's declared human costs and distortions)"
    ))
}

// ---- 8 ----

/// Brute force over an odometer, keeping the first maximum in
/// lexicographic order: higher target value, then lower cost.
fn brute_force(obj: &dyn Objective, space: &ParamSpace, budget: Option<f64>) -> Option<(Vec<usize>, OverallMetrics)> {
    let sizes: Vec<usize> = space.dimensions.iter().map(|d| d.values.len()).collect();
    let mut idx = vec![0; sizes.len()];
    let mut best: Option<(Vec<usize>, OverallMetrics)> = None;
    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    loop {
        let m = obj.evaluate(space, &idx).expect("objective evaluates");
        if budget.is_none_or(|b| m.total_cost.amount <= b) {
            let better = match &best {
                None => true,
                Some((_, b)) => {
                    let (v, w) = (m.overall_cbr.midpoint(), b.overall_cbr.midpoint());
                    if tie(v, w) {
                        !tie(m.total_cost.amount, b.total_cost.amount) && m.total_cost.amount < b.total_cost.amount
                    } else {
                        v > w
                    }
                }
            };
            if better {
                best = Some((idx.clone(), m));
            }
        }
        let mut d = sizes.len();
        loop {
            if d == 0 {
                return best;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < sizes[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn same_argmax(obj: &dyn Objective, space: &ParamSpace, budget: Option<f64>, unit: &str, what: &str) -> Result<(), String> {
    let config = SearchConfig {
        budget: budget.map(|b| cbr_core::CostRecord::new(cbr_core::CostKind::Time, b, unit).unwrap()),
        ..SearchConfig::default()
    };
    let lib = exhaustive_search(obj, space, &config).map_err(|e| format!("{what}: {e}"))?;
    let (idx, m) = brute_force(obj, space, budget).ok_or_else(|| format!("{what}: nothing feasible"))?;
    ensure!(lib.best_indices == idx, "{what}: argmax {:?} vs brute force {idx:?}", lib.best_indices);
    ensure!(lib.best_cbr == m.overall_cbr, "{what}: value {:?} vs {:?}", lib.best_cbr, m.overall_cbr);
    ensure!(lib.evaluations as u128 == space.combination_count(), "{what}: not every assignment evaluated");
    Ok(())
}

struct Synthetic {
    benefit: HashMap<Vec<usize>, (f64, f64)>,
    cost: HashMap<Vec<usize>, f64>,
}

impl Objective for Synthetic {
    fn evaluate(&self, _: &ParamSpace, a: &[usize]) -> cbr_core::Result<OverallMetrics> {
        let (lo, hi) = self.benefit[a];
        let c = self.cost[a];
        let cost = cbr_core::CostRecord::new(cbr_core::CostKind::Time, c, "s")?;
        Ok(OverallMetrics {
            total_cost: cost,
            total_benefit_bits: Interval { lo, hi },
            overall_cbr: Interval { lo: lo / c, hi: hi / c },
        })
    }
}

fn synthetic<R: Rng>(rng: &mut R, sizes: &[usize], coarse: bool) -> (ParamSpace, Synthetic) {
    let space = ParamSpace::new(
        sizes
            .iter()
            .enumerate()
            .map(|(d, &s)| Dimension {
                target: format!("e{d}"),
                param: "v".into(),
                values: (0..s).map(|v| json!(v)).collect(),
            })
            .collect(),
    )
    .unwrap();
    let mut obj = Synthetic {
        benefit: HashMap::new(),
        cost: HashMap::new(),
    };
    for n in 0..space.combination_count() as u64 {
        let a = space.assignment_at(n);
        // coarse values produce ties that exercise the tie-breaking order
        let draw = |rng: &mut R, hi: f64| {
            if coarse {
                rng.random_range(1..=4) as f64
            } else {
                rng.random_range(0.1..hi)
            }
        };
        let lo = draw(rng, 20.0);
        let width = if coarse { 0.0 } else { rng.random_range(0.0..5.0) };
        let c = draw(rng, 10.0);
        obj.benefit.insert(a.clone(), (lo, lo + width));
        obj.cost.insert(a, c);
    }
    (space, obj)
}

fn quantizer_space() -> Result<(String, usize, f64), String> {
    let input = Arc::new(Alphabet::uniform("levels", 256).map_err(|e| e.to_string())?);
    let bins = [2usize, 4, 8];
    let space = ParamSpace::new(vec![Dimension {
        target: "quantize".into(),
        param: "bins".into(),
        values: bins.iter().map(|b| json!(b)).collect(),
    }])
    .map_err(|e| e.to_string())?;
    let obj = move |_: &ParamSpace, a: &[usize]| -> cbr_core::Result<OverallMetrics> {
        let k = bins[a[0]];
        let t = Transform::uniform_quantizer("quantize", 0.0, 256.0, k, common::cost((k as f64).log2()), NodeKind::M)?;
        let out = Arc::new(t.pushforward(&input)?);
        let nodes = vec![
            Node {
                name: "levels".into(),
                alphabet: input.clone(),
            },
            Node {
                name: "bins".into(),
                alphabet: out,
            },
        ];
        let edge = EdgeDef::new("quantize", "levels", "bins", t, Some(Reconstruction::ExactConditional));
        WorkflowGraph::new("quantizer", EntropyMode::Actual, nodes, vec![edge], None)?.overall(CostMerge::Sum)
    };
    same_argmax(&obj, &space, None, "s", "quantizer")?;
    let ex = exhaustive_search(&obj, &space, &SearchConfig::default()).map_err(|e| e.to_string())?;
    let gr = greedy_search(&obj, &space, &SearchConfig::default(), 1, DEFAULT_SEED).map_err(|e| e.to_string())?;
    ensure!(gr.best_indices == ex.best_indices, "greedy differs on the quantizer");
    let k = bins[ex.best_indices[0]];
    ensure!(k == 2, "best bin count {k}");
    ensure!((ex.best_cbr.lo - 7.0).abs() <= 1e-9, "best CBR {}", ex.best_cbr.lo);
    Ok(("quantizer".into(), k, ex.best_cbr.lo))
}

fn optimizer() -> Outcome {
    let mut spaces = 0;

    // parameter spaces shipped with the fixtures
    let mut specs: Vec<(String, WorkflowSpec)> = Vec::new();
    for f in fixtures::builtin() {
        for v in f.variants {
            if v.spec.param_space.is_some() {
                specs.push((format!("{}:{}", f.fixture, v.label), v.spec));
            }
        }
    }
    specs.push(("two_peak".into(), fixtures::two_peak_spec()));
    for (label, spec) in &specs {
        let space = spec.param_space.clone().unwrap();
        ensure!(space.combination_count() <= 10_000, "{label}: space too large for the sweep");
        let obj = SpecObjective { spec };
        let config = SearchConfig::default();
        let lib = exhaustive_search(&obj, &space, &config).map_err(|e| format!("{label}: {e}"))?;
        let (idx, m) = brute_force(&obj, &space, None).ok_or("empty space")?;
        ensure!(lib.best_indices == idx, "{label}: argmax {:?} vs brute force {idx:?}", lib.best_indices);
        ensure!(lib.best_cbr == m.overall_cbr, "{label}: value differs");
        spaces += 1;
    }

    let (_, k, q) = quantizer_space()?;
    spaces += 1;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut single = 0;
    for case in 0..200 {
        let dims = rng.random_range(1..=4);
        let sizes: Vec<usize> = (0..dims).map(|_| rng.random_range(1..=10)).collect();
        let coarse = case % 4 == 0;
        let (space, obj) = synthetic(&mut rng, &sizes, coarse);
        let budget = if case % 3 == 0 {
            let mut costs: Vec<f64> = obj.cost.values().copied().collect();
            costs.sort_by(f64::total_cmp);
            Some(costs[costs.len() / 2])
        } else {
            None
        };
        same_argmax(&obj, &space, budget, "s", &format!("synthetic case {case} {sizes:?}"))?;
        if dims == 1 {
            let config = SearchConfig::default();
            let ex = exhaustive_search(&obj, &space, &config).map_err(|e| e.to_string())?;
            for restarts in [1, 3] {
                let gr = greedy_search(&obj, &space, &config, restarts, DEFAULT_SEED).map_err(|e| e.to_string())?;
                ensure!(
                    gr.best_indices == ex.best_indices && gr.best_cbr == ex.best_cbr,
                    "case {case}: greedy ({restarts} restarts) {:?} vs exhaustive {:?}",
                    gr.best_indices,
                    ex.best_indices
                );
            }
            single += 1;
        }
        spaces += 1;
    }

    let spec = fixtures::two_peak_spec();
    let space = spec.param_space.clone().unwrap();
    let obj = SpecObjective { spec: &spec };
    let config = SearchConfig {
        target: Target::Midpoint,
        ..SearchConfig::default()
    };
    let one = greedy_search(&obj, &space, &config, 1, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let five = greedy_search(&obj, &space, &config, 5, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let best = exhaustive_search(&obj, &space, &config).map_err(|e| e.to_string())?;
    let (v1, v5, vb) = (one.best_cbr.midpoint(), five.best_cbr.midpoint(), best.best_cbr.midpoint());
    ensure!(v5 > v1, "restarts did not help: {v1} vs {v5}");
    ensure!(five.best_indices == best.best_indices, "five restarts miss the global optimum");
    ensure!(!one.certified && best.certified, "certification flags wrong");
    Ok(format!(
        "{spaces} spaces match brute force ({single} single-dimension greedy checks), quantizer argmax k={k} at CBR {q}, two peaks: 1 restart {v1:.4}, 5 restarts {v5:.4}, optimum {vb:.4}"
    ))
}

// ---- 9 ----

fn cbr(args: &[&str], env: Option<(&str, &str)>) -> Option<i32> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cbr"));
    cmd.args(args).env_remove("CBR_SEED");
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().ok()?.status.code()
}

fn shipped_fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    files.retain(|p| p.extension().is_some_and(|x| x == "json"));
    files.sort();
    files
}

fn cli_contract() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let valid_spec = fixtures::two_peak_spec();
    let valid = write("valid.json", &specio::emit_spec(&valid_spec));
    let plain = write("plain.json", &specio::emit_spec(&fixtures::share_price_chain(3)));
    let dangling = write(
        "dangling.json",
        &specio::emit_spec(&valid_spec).replace("\"to\": \"joined\"", "\"to\": \"nowhere\""),
    );
    let v2 = write("v2.json", &specio::emit_spec(&valid_spec).replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\""));
    let broken = write("broken.json", "{\"schema_version\": \"1\", ");
    let cyclic = {
        let mut s = valid_spec.clone();
        let mut back = s.graph.edges[0].clone();
        back.id = "back".into();
        back.from = "decision".into();
        back.to = "source".into();
        s.graph.edges.push(back);
        write("cyclic.json", &specio::emit_spec(&s))
    };
    let missing = tmp.path().join("missing.json").display().to_string();
    let out = tmp.path().join("emitted").display().to_string();

    let matrix: Vec<Invocation> = vec![
        (vec!["validate", &valid], None, 0),
        (vec!["validate", &plain], None, 0),
        (vec!["validate", &dangling], None, 1),
        (vec!["validate", &v2], None, 1),
        (vec!["validate", &broken], None, 1),
        (vec!["validate", &cyclic], None, 1),
        (vec!["validate", &missing], None, 1),
        (vec!["validate"], None, 2),
        (vec!["analyze", &valid], None, 0),
        (vec!["analyze", &plain, "--json"], None, 0),
        (vec!["analyze", &plain, "--mode", "actual"], None, 0),
        (vec!["analyze", &plain, "--mode", "maximal", "--json"], None, 0),
        (vec!["analyze", &missing], None, 1),
        (vec!["analyze", &dangling], None, 1),
        (vec!["analyze", &valid, "--mode", "loose"], None, 2),
        (vec!["optimize", &valid], None, 0),
        (vec!["optimize", &valid, "--json"], None, 0),
        (vec!["optimize", &valid, "--budget", "5"], None, 0),
        (vec!["optimize", &valid, "--budget", "0.01"], None, 1),
        (vec!["optimize", &valid, "--greedy", "--restarts", "5"], None, 0),
        (vec!["optimize", &valid, "--greedy", "--restarts", "5"], Some(("CBR_SEED", "42")), 0),
        (vec!["optimize", &valid, "--greedy"], Some(("CBR_SEED", "not-a-number")), 2),
        (vec!["optimize", &valid, "--restarts", "3"], None, 2),
        (vec!["optimize", &valid, "--greedy", "--restarts", "0"], None, 2),
        (vec!["optimize", &valid, "--budget", "lots"], None, 2),
        (vec!["optimize", &broken], None, 1),
        (vec!["report", &valid, "--format", "dot"], None, 0),
        (vec!["report", &valid, "--format", "csv"], None, 0),
        (vec!["report", &valid, "--format", "png"], None, 2),
        (vec!["report", &valid], None, 2),
        (vec!["report", &missing, "--format", "dot"], None, 1),
        (vec!["fixtures"], None, 0),
        (vec!["fixtures", "--name", "fig2_chain"], None, 0),
        (vec!["fixtures", "--name", "fig4_plot_vs_binary", "--json"], None, 0),
        (vec!["fixtures", "--emit", &out], None, 0),
        (vec!["fixtures", "--name", "nope"], None, 2),
        (vec![], None, 2),
        (vec!["frobnicate"], None, 2),
        (vec!["analyze", &valid, "--verbose"], None, 2),
    ];
    for (args, env, want) in &matrix {
        let got = cbr(args, *env);
        ensure!(got == Some(*want), "`cbr {}` exited {got:?}, want {want}", args.join(" "));
    }

    let files = shipped_fixtures();
    ensure!(files.len() == fixtures::NAMES.len(), "expected {} shipped fixtures, found {}", fixtures::NAMES.len(), files.len());
    let mut variants = 0;
    for path in &files {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let f = fixtures::parse_fixture(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let again = fixtures::parse_fixture(&fixtures::emit_fixture(&f)).map_err(|e| e.to_string())?;
        ensure!(again == f, "{}: fixture round-trip differs", path.display());
        for v in &f.variants {
            let back = specio::parse_spec(&specio::emit_spec(&v.spec)).map_err(|e| e.to_string())?;
            ensure!(back == v.spec, "{}: variant {} round-trip differs", path.display(), v.label);
            variants += 1;
        }
    }
    Ok(format!(
        "{} invocations with expected exit codes, {} shipped fixtures ({variants} specs) round-trip",
        matrix.len(),
        files.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, &dyn Fn() -> Outcome); 9] = [
        ("share-price chain maximal entropies", &share_price_maxima),
        ("grouping property residuals", &grouping_property),
        ("entropy, KL and MI against naive oracles", &oracle_equivalence),
        ("KL divergence properties", &kl_properties),
        ("data processing inequality", &data_processing),
        ("shortcut distortion consistency", &shortcut_consistency),
        ("plot versus binary digits", &plot_vs_binary_views),
        ("optimizer correctness", &optimizer),
        ("CLI contract and fixture round-trip", &cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
