#![no_main]

use affectsim::analysis::parse_beta_csv;
use affectsim::meanfield::BetaSeries;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(values) = parse_beta_csv(text) else { return };
    if !values.is_empty() {
        BetaSeries::new(values).expect("parsed rates lie in [0, 1]");
    }
});
