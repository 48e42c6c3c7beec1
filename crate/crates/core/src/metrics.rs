//! Per-step measures: alphabet compression, potential distortion, effectual
//! compression, benefit and incremental cost-benefit ratio.

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, EntropyMode};
use crate::error::{Error, Result};
use crate::transform::{CostRecord, Transform};

/// `h_out / h_in`. Not clamped: human steps may raise entropy.
pub fn alphabet_compression_ratio(h_in: f64, h_out: f64) -> Result<f64> {
    if h_in <= 0.0 {
        return Err(Error::TransformationUnnecessary);
    }
    Ok(h_out / h_in)
}

pub fn potential_distortion_ratio(d_kl: f64, h_in: f64) -> Result<f64> {
    if d_kl < 0.0 || !d_kl.is_finite() {
        return Err(Error::NegativeDivergence(d_kl));
    }
    if h_in <= 0.0 {
        return Err(Error::TransformationUnnecessary);
    }
    Ok(d_kl / h_in)
}

pub fn effectual_compression_ratio(h_in: f64, h_out: f64, d_kl: f64) -> Result<f64> {
    Ok(alphabet_compression_ratio(h_in, h_out)? + potential_distortion_ratio(d_kl, h_in)?)
}

/// `h_in - h_out - d_kl`. Negative when the step adds uncertainty.
pub fn benefit(h_in: f64, h_out: f64, d_kl: f64) -> f64 {
    h_in - h_out - d_kl
}

/// Benefit per unit of cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cbr {
    pub value: f64,
    /// Bits per this cost unit.
    pub unit: String,
}

pub fn incremental_cbr(benefit_bits: f64, cost: &CostRecord) -> Result<Cbr> {
    if cost.amount.is_nan() || cost.amount <= 0.0 {
        return Err(Error::InvalidCost(cost.amount));
    }
    Ok(Cbr {
        value: benefit_bits / cost.amount,
        unit: format!("bits/{}", cost.unit),
    })
}

/// Incremental CBR of a machine-centric step, `(I - h_out) / cost`.
pub fn machine_cbr(i_bits: f64, h_out: f64, cost: &CostRecord) -> Result<Cbr> {
    incremental_cbr(i_bits - h_out, cost)
}

/// `|H(X) - H(Y) - Σ_k q(y_k) H_k|` for a grouping of an enumerated input.
pub fn grouping_check(input: &Alphabet, grouping: &Transform) -> Result<f64> {
    let pmf = input
        .pmf()
        .ok_or_else(|| Error::RequiresEnumerated(format!("grouping check over `{}`", input.name())))?;
    let map = grouping.deterministic_map(input)?;
    let k = map.outputs.len();
    let mut q = vec![0.0; k];
    for (p, &y) in pmf.probs().zip(&map.image) {
        q[y] += p;
    }
    let mut within = vec![0.0; k];
    for (p, &y) in pmf.probs().zip(&map.image) {
        if p > 0.0 {
            let local = p / q[y];
            within[y] -= local * local.log2();
        }
    }
    let h_y = crate::alphabet::entropy_of(q.iter().copied());
    let residual_term: f64 = q.iter().zip(&within).map(|(qk, hk)| qk * hk).sum();
    Ok((pmf.entropy() - h_y - residual_term).abs())
}

/// All measures for one step.
///
/// The ratios are `None` when the input entropy is zero: the step is
/// unnecessary and its ratios undefined, while its benefit is still
/// well-defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub h_in: f64,
    pub h_out: f64,
    pub distortion_bits: f64,
    pub acr: Option<f64>,
    pub pdr: Option<f64>,
    pub ecr: Option<f64>,
    pub benefit_bits: f64,
    pub cost: CostRecord,
    pub incremental_cbr: f64,
    pub cbr_unit: String,
    pub entropy_mode: EntropyMode,
}

impl StepMetrics {
    pub fn compute(h_in: f64, h_out: f64, distortion_bits: f64, cost: CostRecord, entropy_mode: EntropyMode) -> Result<Self> {
        if distortion_bits < 0.0 || !distortion_bits.is_finite() {
            return Err(Error::NegativeDivergence(distortion_bits));
        }
        let (acr, pdr, ecr) = if h_in > 0.0 {
            let acr = alphabet_compression_ratio(h_in, h_out)?;
            let pdr = potential_distortion_ratio(distortion_bits, h_in)?;
            (Some(acr), Some(pdr), Some(acr + pdr))
        } else {
            (None, None, None)
        };
        let benefit_bits = benefit(h_in, h_out, distortion_bits);
        let cbr = incremental_cbr(benefit_bits, &cost)?;
        Ok(StepMetrics {
            h_in,
            h_out,
            distortion_bits,
            acr,
            pdr,
            ecr,
            benefit_bits,
            cost,
            incremental_cbr: cbr.value,
            cbr_unit: cbr.unit,
            entropy_mode,
        })
    }
}

/// The per-step sum `Σ (h_out + d_kl) / cost`, a cost-weighted uncertainty
/// total. Reported next to the benefit-based ratio for comparison only.
pub fn uncertainty_cost_sum(steps: &[StepMetrics]) -> f64 {
    steps
        .iter()
        .map(|s| (s.h_out + s.distortion_bits) / s.cost.amount)
        .sum()
}
