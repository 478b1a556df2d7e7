#![no_main]

use libfuzzer_sys::fuzz_target;
use rulkit::rul::parse_density;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(d) = parse_density(text) {
            let _ = d.integral();
        }
    }
});
