#![no_main]

use bipspec::experiments::LocalLawConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = LocalLawConfig::from_json(text) {
        let again = serde_json::to_string(&cfg).unwrap();
        assert_eq!(LocalLawConfig::from_json(&again).unwrap(), cfg);
    }
});
