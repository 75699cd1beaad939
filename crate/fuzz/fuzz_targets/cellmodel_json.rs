#![no_main]

use libfuzzer_sys::fuzz_target;
use orbirig::cellmodel::CellModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(model) = CellModel::from_json(text) else { return };
    assert_eq!(CellModel::from_json(&model.to_json()).ok(), Some(model.clone()));
    if model.n() <= 2 && model.g() % 2 == 0 && model.g() <= 64 {
        let w = model
            .w(orbirig::exactalg::Modulus::Finite(1 << model.r()))
            .expect("slot");
        let _ = model.pontryagin(&w).expect("even g");
    }
});
