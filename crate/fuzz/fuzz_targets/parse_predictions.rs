#![no_main]

use libfuzzer_sys::fuzz_target;
use rulkit::eval::{parse_predictions, write_predictions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_predictions(text, "fuzz") {
        let again = parse_predictions(&write_predictions(&records, ""), "fuzz").expect("round trip");
        assert_eq!(again.len(), records.len());
    }
});
