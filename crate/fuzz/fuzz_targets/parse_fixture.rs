#![no_main]

use cbr_core::specio::fixtures;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = fixtures::parse_fixture(text) {
        let _ = fixtures::run_fixture(&f);
    }
});
