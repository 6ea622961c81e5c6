#![no_main]

use featacq::data::{parse_tabular, DatasetSchema, FeatureKind, FeatureSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let features = [("age", FeatureKind::Real), ("sick", FeatureKind::Binary), ("tsh", FeatureKind::Real)]
        .into_iter()
        .map(|(name, kind)| FeatureSpec {
            name: name.into(),
            kind,
            cost: 1.0,
        })
        .collect();
    let schema = DatasetSchema::new(features, vec!["neg".into(), "pos".into()]).unwrap();
    if let Ok(ds) = parse_tabular(data, &schema, "fuzz") {
        assert_eq!(ds.dim(), 3);
        assert!(ds.labels().iter().all(|&l| l < 2));
    }
});
