#![no_main]

use featacq::model::TrainedModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = TrainedModel::from_json_slice(data) else {
        return;
    };
    // A model that loads must evaluate its own imputation vector.
    let p = model.network.forward(&model.baseline).unwrap();
    assert_eq!(p.len(), model.class_count());
});
