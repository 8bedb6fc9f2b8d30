#![no_main]

use libfuzzer_sys::fuzz_target;
use monoculture::sequential::StrategySequence;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(seq) = StrategySequence::parse(s) {
        assert_eq!(seq.to_string().len(), seq.len());
    }
});
