#![no_main]

use bipspec_cli::{local_law_config, merge_config, LocalLawArgs};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(args) = merge_config(&LocalLawArgs::default(), Some(text)) {
        let _ = local_law_config(&args);
    }
});
