use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the alphabet, transform, reconstruction, metrics,
/// workflow and optimizer layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability {value} for letter `{letter}`")]
    InvalidProbability { letter: String, value: f64 },

    #[error("probabilities sum to {sum}, not 1 (tolerance 1e-9)")]
    NotNormalized { sum: f64 },

    #[error("duplicate letter `{0}`")]
    DuplicateLetter(String),

    #[error("empty alphabet")]
    EmptyAlphabet,

    #[error("letter set and pmf disagree at `{0}`")]
    LetterPmfMismatch(String),

    #[error("symbolic entropy {entropy} exceeds maximal entropy {max}")]
    SymbolicEntropyExceedsMax { entropy: f64, max: f64 },

    #[error("invalid bit count {0}")]
    InvalidBits(f64),

    #[error("empty product")]
    EmptyProduct,

    #[error("unconditionable subset: {0}")]
    UnconditionableSubset(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("partial mapping: letter `{0}` is not mapped")]
    PartialMapping(String),

    #[error("requires enumerated model: {0}")]
    RequiresEnumerated(String),

    #[error("letter `{0}` is not numeric")]
    NonNumericLetter(String),

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("aggregation window {window} does not divide element count {count}")]
    WindowMismatch { window: u64, count: u64 },

    #[error("invalid cost: amount must be positive and finite, got {0}")]
    InvalidCost(f64),

    #[error("incommensurable costs: {0}")]
    IncommensurableCosts(String),

    #[error("transform `{0}` is not deterministic")]
    NotDeterministic(String),

    #[error("no enumerated impression available: {0}")]
    NoImpression(String),

    #[error("divergence undefined: letter `{0}` has impression mass but zero true probability")]
    DivergenceUndefined(String),

    #[error("prior has no mass on the preimage of `{0}`")]
    PriorWithoutMass(String),

    #[error("negative declared divergence {0}")]
    NegativeDivergence(f64),

    #[error("transformation unnecessary: input entropy is zero")]
    TransformationUnnecessary,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("edge `{edge}` alphabet mismatch: {detail}")]
    EdgeMismatch { edge: String, detail: String },

    #[error("unscored edge `{0}`: no reconstruction attached")]
    UnscoredEdge(String),

    #[error("empty workflow: no edges")]
    EmptyWorkflow,

    #[error("infeasible budget: no assignment fits within {0}")]
    InfeasibleBudget(String),

    #[error("combination count {count} exceeds cap {cap}; use greedy_search")]
    CapExceeded { count: u128, cap: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spec: {0}")]
    Spec(String),
}
