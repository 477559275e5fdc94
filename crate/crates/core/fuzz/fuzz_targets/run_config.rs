#![no_main]

use libfuzzer_sys::fuzz_target;
use scalar_qve::config::{RunConfig, Task};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    for task in [Task::Mode, Task::Sweep, Task::Scan, Task::Semiclassical, Task::Validate] {
        if let Ok(config) = RunConfig::parse(src, task) {
            let _ = config.hash();
        }
    }
});
