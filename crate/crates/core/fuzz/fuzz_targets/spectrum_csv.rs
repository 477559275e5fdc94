#![no_main]

use libfuzzer_sys::fuzz_target;
use scalar_qve::export::{parse_spectrum_csv, spectrum_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_spectrum_csv(text) {
        let again = parse_spectrum_csv(&spectrum_csv(&s)).expect("written spectra parse");
        assert_eq!(again.grid, s.grid);
    }
});
