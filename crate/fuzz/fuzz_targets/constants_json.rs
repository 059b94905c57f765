//! Arbitrary bytes through the constants file parser. Parsing must never
//! panic, and accepted constants must pass validation.
//!
//! cargo +nightly fuzz run constants_json fuzz/corpus/constants_json

#![no_main]

use chaos_lab::io::parse_constants_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(k) = parse_constants_json(text) {
        assert!(k.validate().is_ok());
        for p in 2..6 {
            assert!(k.b(p) > 0.0);
        }
    }
});
