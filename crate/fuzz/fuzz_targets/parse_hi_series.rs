#![no_main]

use libfuzzer_sys::fuzz_target;
use rulkit::cmapss::{parse_hi_series, write_hi_series};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = parse_hi_series(text, "fuzz") {
        let again = parse_hi_series(&write_hi_series(&series, ""), "fuzz").expect("round trip");
        assert_eq!(again.len(), series.len());
    }
});
