#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::config::{parse_grid, MAX_AXIS_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_grid(s) {
        for axis in [g.theta_h, g.theta_a] {
            let pts = axis.points();
            assert!(!pts.is_empty() && pts.len() <= MAX_AXIS_POINTS + 1);
            assert!(pts.iter().all(|&p| p > 0.0 && p.is_finite()));
        }
    }
});
