#![no_main]

use cbr_core::specio;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = specio::parse_spec(text) {
        let again = specio::parse_spec(&specio::emit_spec(&spec)).expect("emitted spec parses");
        assert_eq!(again, spec);
    }
});
