#![no_main]

use bipspec::graphs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = graphs::parse_edge_list(text) {
        let mut out = Vec::new();
        graphs::write_edge_list(&g, &mut out).unwrap();
        let back = graphs::parse_edge_list(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back, g);
    }
});
