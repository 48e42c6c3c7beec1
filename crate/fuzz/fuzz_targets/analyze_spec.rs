#![no_main]

use cbr_core::specio::{self, OptimizeOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = specio::parse_spec(text) else { return };
    let g = specio::build_graph(&spec).expect("parse_spec already built the graph");
    let report = g.analyze(spec.cost_model.merge);
    let _ = serde_json::to_string(&report);
    let _ = g.to_dot(spec.cost_model.merge);
    // keep searches small enough for the fuzzer
    let opts = OptimizeOptions {
        cap: Some(256),
        ..OptimizeOptions::default()
    };
    let _ = specio::optimize_spec(&spec, &opts);
});
