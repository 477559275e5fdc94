#![no_main]

use libfuzzer_sys::fuzz_target;
use scalar_qve::export::{decode_raster, encode_raster};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = decode_raster(data) {
        assert_eq!(encode_raster(&s), data);
    }
});
