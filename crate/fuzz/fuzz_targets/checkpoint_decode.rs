#![no_main]

use cogs_models::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ck) = Checkpoint::decode(data) {
        assert_eq!(ck.encode(), data, "decode/encode must round-trip");
        // Rebuilding a model may fail on mismatched tensors, never panic.
        let _ = ck.policy();
        let _ = ck.vae();
    }
});
