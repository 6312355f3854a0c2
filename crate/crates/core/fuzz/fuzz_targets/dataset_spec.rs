#![no_main]

use libfuzzer_sys::fuzz_target;
use pe_forge::three_cell::{sample_at, DatasetSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<DatasetSpec>(data) else { return };
    if spec.validate().is_ok() && spec.count > 0 {
        // a validated spec must always yield a first sample
        sample_at(&spec, 0).expect("sample");
    }
});
