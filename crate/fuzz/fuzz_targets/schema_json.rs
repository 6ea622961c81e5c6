#![no_main]

use featacq::data::DatasetSchema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(schema) = DatasetSchema::from_json_slice(data) {
        // Anything accepted must survive a round trip unchanged.
        let text = serde_json::to_vec(&schema).unwrap();
        assert_eq!(DatasetSchema::from_json_slice(&text).unwrap(), schema);
        assert!(schema.total_cost().is_finite());
    }
});
