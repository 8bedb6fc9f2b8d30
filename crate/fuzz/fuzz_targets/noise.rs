#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::config::parse_noise;
use monoculture::Noise;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(Noise::Discrete(d)) = parse_noise(s) {
        let total: f64 = d.atoms().iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
});
