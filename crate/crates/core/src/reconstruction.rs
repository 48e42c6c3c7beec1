//! Reconstruction functions and the Kullback-Leibler divergence between an
//! observer's impression of a step's input and the true input.

use crate::alphabet::{Alphabet, Pmf};
use crate::error::{Error, Result};
use crate::transform::{Transform, TransformKind};

/// Floor applied to true probabilities when smoothing is enabled.
pub const SMOOTHING_FLOOR: f64 = 1e-12;

/// How an observer maps an output letter back to a guess about the input.
#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    /// The true conditional `p(x | y)`. Only defined for deterministic
    /// transforms; always reproduces the input exactly.
    ExactConditional,
    /// Uniform over each output letter's preimage.
    UniformPreimage,
    /// A prior over input letters, conditioned on each preimage.
    PriorWeighted(Pmf),
    /// A declared divergence in bits for steps that cannot be enumerated.
    DeclaredDivergence(f64),
    /// Machine-centric substitution: distortion is `H(in) - I(in; out)`, as
    /// if a perfect inverse recovered exactly the mutual information.
    MachineShortcut,
}

impl Reconstruction {
    pub fn declared(bits: f64) -> Result<Self> {
        if !bits.is_finite() || bits < 0.0 {
            return Err(Error::NegativeDivergence(bits));
        }
        Ok(Reconstruction::DeclaredDivergence(bits))
    }
}

/// Whether [`kl_divergence`] may floor zero true probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    Strict,
    Floor,
}

/// An observer's distribution over the input letters after seeing the
/// output.
#[derive(Debug, Clone, PartialEq)]
pub struct Impression {
    pub pmf: Pmf,
}

/// Mixture over output letters `y`, weighted by `q_out(y)`, of the
/// reconstruction's guess `g(x | y)` over the preimage of `y`.
pub fn impression(g: &Reconstruction, t: &Transform, input: &Alphabet) -> Result<Impression> {
    let pmf = input
        .pmf()
        .ok_or_else(|| Error::NoImpression(format!("`{}` is not enumerated", input.name())))?;
    let weights_per_letter: Vec<f64> = match g {
        Reconstruction::DeclaredDivergence(_) => {
            return Err(Error::NoImpression("declared divergence has no impression".into()))
        }
        Reconstruction::MachineShortcut => {
            return Err(Error::NoImpression("machine shortcut has no impression".into()))
        }
        Reconstruction::ExactConditional => pmf.probs().collect(),
        Reconstruction::UniformPreimage => vec![1.0; pmf.len()],
        Reconstruction::PriorWeighted(prior) => {
            for id in prior.ids() {
                if pmf.get(id).is_none() {
                    return Err(Error::LetterPmfMismatch(id.to_string()));
                }
            }
            pmf.ids().map(|id| prior.prob(id)).collect()
        }
    };
    if !t.is_deterministic() {
        return Err(Error::NotDeterministic(t.name.clone()));
    }
    let map = t.deterministic_map(input)?;
    let k = map.outputs.len();
    let mut q_out = vec![0.0; k];
    let mut norm = vec![0.0; k];
    for ((p, w), &y) in pmf.probs().zip(&weights_per_letter).zip(&map.image) {
        q_out[y] += p;
        norm[y] += w;
    }
    let mut out = Vec::with_capacity(pmf.len());
    for ((id, w), &y) in pmf.ids().zip(&weights_per_letter).zip(&map.image) {
        let p = if q_out[y] == 0.0 {
            0.0
        } else if norm[y] <= 0.0 {
            return Err(Error::PriorWithoutMass(map.outputs[y].clone()));
        } else {
            q_out[y] * w / norm[y]
        };
        out.push((id.to_string(), p));
    }
    Ok(Impression { pmf: Pmf::new(out)? })
}

/// D_KL(p ‖ q) in bits. Letters absent from either pmf count as zero.
pub fn kl_divergence(impression: &Pmf, truth: &Pmf) -> Result<f64> {
    kl_divergence_with(impression, truth, Smoothing::Strict)
}

pub fn kl_divergence_with(impression: &Pmf, truth: &Pmf, smoothing: Smoothing) -> Result<f64> {
    let smoothed;
    let truth = match smoothing {
        Smoothing::Strict => truth,
        Smoothing::Floor => {
            let ids: Vec<&str> = truth
                .ids()
                .chain(impression.ids().filter(|id| truth.get(id).is_none()))
                .collect();
            smoothed = Pmf::from_weights(ids.iter().map(|id| (*id, truth.prob(id).max(SMOOTHING_FLOOR))))?;
            &smoothed
        }
    };
    let mut d = 0.0;
    for (id, p) in impression.iter() {
        if p <= 0.0 {
            continue;
        }
        let q = truth.prob(id);
        if q <= 0.0 {
            return Err(Error::DivergenceUndefined(id.to_string()));
        }
        d += p * (p / q).log2();
    }
    // sums of p*log(p/q) with p == q leave rounding residue
    Ok(if d < 1e-14 { 0.0 } else { d })
}

/// Distortion in bits contributed by a step.
///
/// Declared divergences pass through. A declared step without a declared
/// reconstruction uses the step's own declared distortion. Otherwise the
/// impression is computed and compared with the input pmf.
pub fn distortion_bits(g: &Reconstruction, t: &Transform, input: &Alphabet) -> Result<f64> {
    distortion_bits_with(g, t, input, Smoothing::Strict)
}

pub fn distortion_bits_with(g: &Reconstruction, t: &Transform, input: &Alphabet, smoothing: Smoothing) -> Result<f64> {
    match g {
        Reconstruction::DeclaredDivergence(d) => Ok(*d),
        Reconstruction::MachineShortcut => {
            let mi = t.mutual_information(input)?;
            Ok((input.entropy() - mi).max(0.0))
        }
        _ => {
            if let TransformKind::DeclaredHuman {
                declared_distortion_bits,
                ..
            } = &t.kind
            {
                return Ok(*declared_distortion_bits);
            }
            let imp = impression(g, t, input)?;
            let truth = input
                .pmf()
                .ok_or_else(|| Error::NoImpression(format!("`{}` is not enumerated", input.name())))?;
            kl_divergence_with(&imp.pmf, truth, smoothing)
        }
    }
}
