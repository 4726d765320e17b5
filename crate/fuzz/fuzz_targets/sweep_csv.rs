#![no_main]

use amdl_harness::report::{build_report, read_sweep};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_sweep(data) {
        let _ = build_report(&rows);
    }
});
