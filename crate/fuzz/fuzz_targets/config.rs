#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::config::{parse_config, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_config(s) {
        let _ = RunConfig::from_pairs(&pairs);
    }
});
