//! Plain-text rendering of reports.

use std::fmt::Write as _;

use super::fixtures::FixtureOutcome;
use crate::optimize::OptimizeResult;
use crate::workflow::MetricsReport;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

pub fn metrics_table(r: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "workflow {} ({} entropy, cost merge {:?})", r.name, r.entropy_mode, r.cost_merge);
    let _ = writeln!(out, "\n{:<20} {:>14} {:>14}  role", "alphabet", "H (bits)", "H_max (bits)");
    for n in &r.nodes {
        let _ = writeln!(out, "{:<20} {:>14.4} {:>14.4}  {:?}", n.name, n.entropy_bits, n.max_entropy_bits, n.role);
    }
    let _ = writeln!(
        out,
        "\n{:<16} {:<2} {:>12} {:>12} {:>8} {:>8} {:>8} {:>12} {:>10} {:>12}",
        "step", "k", "H_in", "H_out", "ACR", "PDR", "ECR", "benefit", "cost", "CBR"
    );
    for e in &r.edges {
        let m = e.metrics.as_ref();
        let _ = writeln!(
            out,
            "{:<16} {:<2} {:>12.4} {:>12.4} {:>8} {:>8} {:>8} {:>12} {:>10.4} {:>12}",
            e.id,
            e.node_kind.to_string(),
            e.h_in,
            e.h_out,
            opt(e.acr),
            opt(m.and_then(|m| m.pdr)),
            opt(m.and_then(|m| m.ecr)),
            opt(m.map(|m| m.benefit_bits)),
            e.cost.amount,
            opt(m.map(|m| m.incremental_cbr)),
        );
        if let Some(why) = &e.unscored {
            let _ = writeln!(out, "  unscored: {why}");
        }
    }
    out.push('\n');
    match (&r.overall, &r.overall_unscored) {
        (Some(o), _) => {
            let b = o.total_benefit_bits;
            let c = o.overall_cbr;
            let _ = writeln!(out, "total cost     {}", o.total_cost);
            if b.is_point() {
                let _ = writeln!(out, "total benefit  {:.4} bits", b.lo);
                let _ = writeln!(out, "overall CBR    {:.6} bits/{}", c.lo, o.total_cost.unit);
            } else {
                let _ = writeln!(out, "total benefit  [{:.4}, {:.4}] bits", b.lo, b.hi);
                let _ = writeln!(out, "overall CBR    [{:.6}, {:.6}] bits/{}", c.lo, c.hi, o.total_cost.unit);
            }
        }
        (None, Some(why)) => {
            let _ = writeln!(out, "overall: not available ({why})");
        }
        (None, None) => {}
    }
    if let Some(t) = r.telescoped_benefit_bits {
        let _ = writeln!(out, "telescoped     {t:.4} bits");
    }
    if let Some(s) = r.uncertainty_cost_sum {
        let _ = writeln!(out, "Σ(H_out+D)/C   {s:.4} (uncertainty per cost, for comparison)");
    }
    let c = &r.classification;
    let class = c.class_tag.map_or_else(|| "unmatched".to_string(), |k| format!("{k:?}"));
    let _ = write!(out, "class          {class} [{}]", c.pattern);
    if let Some(l) = &c.level {
        let _ = write!(out, ", level {:?}, {}", l.level, l.complexity_class);
    }
    out.push('\n');
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

pub fn fixture_table(o: &FixtureOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fixture {}", o.fixture);
    for r in &o.rows {
        let _ = writeln!(
            out,
            "  [{}] {:<58} expected {:<24} computed {:<24} ({:?})",
            if r.pass { "ok" } else { "FAIL" },
            r.check,
            r.expected,
            r.computed,
            r.provenance
        );
        if let Some(n) = &r.note {
            let _ = writeln!(out, "         {n}");
        }
    }
    out
}

pub fn optimize_table(r: &OptimizeResult) -> String {
    let mut out = String::new();
    let assignment = serde_json::to_string(&r.best_assignment).unwrap_or_default();
    let _ = writeln!(out, "best assignment {assignment}");
    let _ = writeln!(out, "best CBR        [{:.6}, {:.6}] (target {:?})", r.best_cbr.lo, r.best_cbr.hi, r.target);
    let _ = writeln!(out, "cost            {}", r.best_cost);
    let _ = writeln!(out, "benefit         [{:.4}, {:.4}] bits", r.best_benefit.lo, r.best_benefit.hi);
    let _ = writeln!(
        out,
        "evaluations     {} ({})",
        r.evaluations,
        if r.certified { "exhaustive" } else { "local search, not certified" }
    );
    let _ = writeln!(out, "frontier ({} points)", r.frontier.len());
    for p in &r.frontier {
        let a = serde_json::to_string(&p.assignment).unwrap_or_default();
        let _ = writeln!(
            out,
            "  cost {:>10.4}  benefit [{:.4}, {:.4}]  cbr {:.6}  {a}",
            p.cost, p.benefit_lo, p.benefit_hi, p.cbr_mid
        );
    }
    out
}
