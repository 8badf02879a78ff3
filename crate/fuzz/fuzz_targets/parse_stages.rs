#![no_main]

use libfuzzer_sys::fuzz_target;
use pcgmub_core::optics::{compose_stages, parse_stages, BenchSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(stages) = parse_stages(text) {
        let bench = BenchSpec {
            stages,
            ..BenchSpec::default()
        };
        // parsed lens stages always satisfy z <= 2f
        compose_stages(&bench).unwrap();
    }
});
