#![no_main]

use libfuzzer_sys::fuzz_target;
use pcgmub_core::optics::{read_period_csv, write_period_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_period_csv(data) {
        let mut buf = Vec::new();
        write_period_csv(&rows, &mut buf).unwrap();
        let again = read_period_csv(&buf[..]).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
