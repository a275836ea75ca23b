#![no_main]

use cogs_pipeline::rundir::parse_log;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_log(data) {
        for row in rows {
            let line = serde_json::to_string(&row).unwrap();
            assert_eq!(parse_log(line.as_bytes()).unwrap(), vec![row]);
        }
    }
});
