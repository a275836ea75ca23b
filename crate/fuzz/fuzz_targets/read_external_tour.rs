#![no_main]

use cogs_core::oracle::read_external_tour;
use cogs_core::TspInstance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&size, rest)) = data.split_first() else { return };
    let n = 3 + (size % 14) as usize;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| ((i as f64 * 0.37).fract(), (i as f64 * 0.61).fract()))
        .collect();
    let inst = TspInstance::from_pairs(&pairs).unwrap();
    let text = String::from_utf8_lossy(rest);
    if let Ok(r) = read_external_tour(&text, &inst) {
        let mut seen = vec![false; n];
        for &i in r.tour.order() {
            assert!(!std::mem::replace(&mut seen[i], true));
        }
        assert!(seen.iter().all(|&s| s));
    }
});
