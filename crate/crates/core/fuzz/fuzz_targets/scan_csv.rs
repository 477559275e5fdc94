#![no_main]

use libfuzzer_sys::fuzz_target;
use scalar_qve::export::{parse_scan_csv, scan_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = parse_scan_csv(text) {
        let again = parse_scan_csv(&scan_csv(&t)).expect("written scans parse");
        assert_eq!(again.rows.len(), t.rows.len());
    }
});
