//! Exercises the JSON config reader and the scenario construction behind
//! it, since validation is split between serde and the builders.
#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = jade_core::config::parse_config_str(text) {
            let _ = config.to_scenario();
            let _ = config.to_sweep_spec();
        }
    }
});
