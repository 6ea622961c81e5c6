#![no_main]

use featacq::bench::BenchConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<BenchConfig>(data) {
        let _ = cfg.validate();
    }
});
