#![no_main]

use cogs_core::tsplib::{parse_tsplib, sample_tsplib50_instance};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(src) = parse_tsplib(text) {
        assert_eq!(src.raw_points.len(), src.dimension);
        assert!(src.points().iter().all(|p| p.x.is_finite() && p.y.is_finite()));
        // Sampling either fails cleanly or lands in the unit square.
        if let Ok(inst) = sample_tsplib50_instance(&src, 0) {
            assert!(inst.points().iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
        }
    }
});
