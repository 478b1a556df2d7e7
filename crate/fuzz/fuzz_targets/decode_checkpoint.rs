#![no_main]

use libfuzzer_sys::fuzz_target;
use rulkit::net::{decode_checkpoint, encode_checkpoint};

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = decode_checkpoint(data) {
        let bytes = encode_checkpoint(&model);
        let again = decode_checkpoint(&bytes).expect("round trip");
        assert_eq!(again.params(), model.params());
    }
});
