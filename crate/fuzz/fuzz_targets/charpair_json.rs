#![no_main]

use libfuzzer_sys::fuzz_target;
use orbirig::charpair::CharacteristicPair;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pair) = CharacteristicPair::from_json(text) else {
        return;
    };
    if pair.validate().is_valid() {
        let inv = pair.invariants().expect("valid pair has invariants");
        assert!(inv.vertex_dets.iter().all(|d| d % inv.g == 0));
        if inv.g % 2 == 0 {
            let _ = pair.find_special_vertex().expect("even g");
        }
    } else {
        assert!(pair.invariants().is_err());
    }
    assert_eq!(CharacteristicPair::from_json(&pair.to_json()).ok(), Some(pair));
});
