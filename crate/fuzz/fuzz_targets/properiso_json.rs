#![no_main]

use libfuzzer_sys::fuzz_target;
use orbirig::cellmodel::CellModel;
use orbirig::properiso::{check_proper_iso, ProperIso};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(iso) = serde_json::from_str::<ProperIso>(text) else {
        return;
    };
    let back: ProperIso = serde_json::from_str(&serde_json::to_string(&iso).unwrap()).unwrap();
    assert_eq!(back, iso);
    if iso.n() <= 3 && (1..=64).contains(&iso.g) {
        let x = CellModel::from_rows(iso.n(), iso.g, vec![vec![0; iso.n()]; iso.n()], vec![0; iso.n()], 0)
            .expect("zero model");
        let _ = check_proper_iso(&iso, &x, &x);
    }
});
