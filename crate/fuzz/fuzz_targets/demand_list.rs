#![no_main]

use bipspec::factors;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(list) = factors::parse_demands(text) {
        let joined: Vec<String> = list.iter().map(usize::to_string).collect();
        assert_eq!(factors::parse_demands(&joined.join(",")).unwrap(), list);
    }
});
