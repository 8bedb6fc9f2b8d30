#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::config::parse_pool;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = parse_pool(s) {
        assert!(p.values().windows(2).all(|w| w[0] > w[1]));
    }
});
