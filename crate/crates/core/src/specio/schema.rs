//! Serde model of the JSON workflow spec, schema version `"1"`.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::alphabet::EntropyMode;
use crate::optimize::ParamSpace;
use crate::transform::{CostKind, NodeKind};
use crate::workflow::{CostMerge, VisLevel, WorkflowClass};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowSpec {
    pub schema_version: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub entropy_mode: EntropyMode,
    pub cost_model: CostModel,
    pub alphabets: Vec<AlphabetSpec>,
    #[serde(default)]
    pub transforms: Vec<TransformSpec>,
    #[serde(default)]
    pub reconstructions: Vec<ReconstructionSpec>,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_space: Option<ParamSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub kind: CostKind,
    pub unit: String,
    #[serde(default)]
    pub merge: CostMerge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSpec {
    pub name: String,
    pub model: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterSpec {
    pub id: String,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Enumerated {
        letters: Vec<LetterSpec>,
    },
    /// `size` equiprobable letters named `prefix0`, `prefix1`, ...
    Uniform {
        size: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prefix: Option<String>,
    },
    Symbolic {
        entropy_bits: f64,
        max_entropy_bits: f64,
    },
    Product {
        factor: Box<ModelSpec>,
        count: u64,
    },
    /// Computed as the image of the node's first incoming edge.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    pub amount: f64,
    /// Extra cost per bit of the output alphabet's maximal entropy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_output_bit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub name: String,
    pub node_kind: NodeKind,
    pub cost: CostSpec,
    pub kind: TransformKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformKindSpec {
    Grouping {
        map: IndexMap<String, String>,
    },
    Quantizer {
        boundaries: Vec<f64>,
    },
    UniformQuantizer {
        lo: f64,
        hi: f64,
        bins: usize,
    },
    Aggregator {
        window: u64,
        statistic: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        output_factor: Option<ModelSpec>,
    },
    Channel {
        outputs: Vec<String>,
        rows: IndexMap<String, Vec<f64>>,
    },
    DeclaredHuman {
        output: ModelSpec,
        declared_distortion_bits: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSpec {
    pub name: String,
    pub kind: ReconstructionKindSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReconstructionKindSpec {
    ExactConditional,
    UniformPreimage,
    PriorWeighted { prior: IndexMap<String, f64> },
    DeclaredDivergence { bits: f64 },
    MachineShortcut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingSpec {
    #[default]
    Strict,
    Floor,
}

impl SmoothingSpec {
    fn is_strict(&self) -> bool {
        *self == SmoothingSpec::Strict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub transform: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<String>,
    #[serde(default, skip_serializing_if = "SmoothingSpec::is_strict")]
    pub kl_smoothing: SmoothingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub node: String,
    pub shared_mi_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decisional: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub joints: Vec<JointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_tag: Option<WorkflowClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_tag: Option<VisLevel>,
}
