#![no_main]

use affectsim::analysis::{parse_etv_csv, write_etv_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(etvs) = parse_etv_csv(text) else { return };
    let mut buf = Vec::new();
    write_etv_csv(&etvs, &mut buf).unwrap();
    assert_eq!(parse_etv_csv(std::str::from_utf8(&buf).unwrap()).unwrap(), etvs);
});
