#![no_main]

use libfuzzer_sys::fuzz_target;
use scalar_qve::field::{eval_field, FieldConfig};

// First line: a parameter path and value (`pulses[0].delta 0.5`); the rest is TOML.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let (head, body) = src.split_once('\n').unwrap_or(("", src));
    let Ok(field) = FieldConfig::from_toml_str(body) else {
        return;
    };
    let _ = field.config_hash();
    let (t0, t1) = field.default_span(7.0);
    for t in [t0, 0.5 * (t0 + t1), t1] {
        let _ = eval_field(&field, t);
    }
    if let Some((path, value)) = head.split_once(' ') {
        if let Ok(v) = value.trim().parse::<f64>() {
            let _ = field.with_parameter(path, v);
        }
    }
});
