#![no_main]

use libfuzzer_sys::fuzz_target;
use rulkit::cmapss::{parse_cmapss_str, write_cmapss};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(units) = parse_cmapss_str(text, "fuzz") {
        // Whatever parses must survive a write/parse round trip.
        let again = parse_cmapss_str(&write_cmapss(&units), "fuzz").expect("round trip");
        assert_eq!(again.len(), units.len());
    }
});
