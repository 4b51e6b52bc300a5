#![no_main]

use affectsim::analysis::parse_timeseries_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_timeseries_csv(text) {
        assert!(rows.iter().all(|r| r.phi.is_finite()));
    }
});
