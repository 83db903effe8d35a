//! Snapshot files arrive from other tools; the parser must reject any
//! malformed input with an error, never a panic or runaway allocation.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = jade_core::csi_io::parse_csi_str(text);
    }
});
