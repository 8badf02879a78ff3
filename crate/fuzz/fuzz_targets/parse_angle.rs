#![no_main]

use libfuzzer_sys::fuzz_target;
use pcgmub_core::angle::{parse_angle, RotationAngle};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_angle(text) {
            assert!(v.is_finite());
            let r = RotationAngle::from_radians(v).radians();
            assert!((0.0..std::f64::consts::TAU).contains(&r));
        }
    }
});
