#![no_main]

use cogs_core::dataset::InstanceDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = InstanceDataset::decode(data) {
        assert_eq!(ds.encode(), data, "decode/encode must round-trip");
    }
});
