//! The scalar grammar (a+bi with optional signs and exponents) is hand
//! rolled, so drive it over arbitrary short tokens.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = jade_core::csi_io::parse_complex(text);
    }
});
