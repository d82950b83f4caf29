#![no_main]

use bipspec::{spectra, Spectrum};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = spectra::parse_spectrum_csv(text) {
        let s = Spectrum::new(values.clone(), 1.0).unwrap();
        let back = spectra::parse_spectrum_csv(&spectra::spectrum_csv(&s)).unwrap();
        let mut sorted = values;
        sorted.sort_by(f64::total_cmp);
        let sorted: Vec<f64> = sorted.into_iter().map(|v| v + 0.0).collect();
        assert_eq!(back, sorted);
    }
});
