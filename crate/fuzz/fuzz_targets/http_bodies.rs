#![no_main]

use featacq_service::{parse_create_session, parse_submit_feature};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(req) = parse_create_session(data) {
        assert!(req.budget.is_none_or(|b| b.is_finite() && b >= 0.0));
    }
    if let Ok(req) = parse_submit_feature(data) {
        assert!((0.0..=1.0).contains(&req.value));
    }
});
