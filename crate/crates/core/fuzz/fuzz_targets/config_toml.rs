#![no_main]

use affectsim::Config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::from_toml_str(text) else { return };
    cfg.sim_config().validate().expect("accepted config validates");
    cfg.band_spec().expect("accepted config has valid bands");
    let _ = cfg.canonical_json();
});
