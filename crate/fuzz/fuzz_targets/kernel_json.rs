//! Arbitrary bytes through the kernel file parser. Parsing must never panic,
//! and anything accepted must survive a write/parse round trip unchanged.
//!
//! cargo +nightly fuzz run kernel_json fuzz/corpus/kernel_json

#![no_main]

use chaos_lab::io::{kernel_to_json, parse_kernel_json};
use libfuzzer_sys::fuzz_target;
use serde_json::Map;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(loaded) = parse_kernel_json(text) else {
        return;
    };
    let c = loaded.coefficients;
    let canonical = kernel_to_json(&c, &Map::new()).expect("accepted values are finite");
    let again = parse_kernel_json(&canonical).expect("canonical text parses");
    assert_eq!(again.coefficients, c);
    assert!(again.warnings.is_empty());
});
