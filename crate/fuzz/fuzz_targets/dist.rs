#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::config::parse_dist;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse_dist(s) {
        if let Ok(p) = d.expected_pool() {
            assert_eq!(p.len(), d.len());
        }
    }
});
