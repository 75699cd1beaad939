#![no_main]

use libfuzzer_sys::fuzz_target;
use orbirig::lensoracle::LensReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(report) = LensReport::from_json(text) else {
        return;
    };
    let again = LensReport::from_json(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
    let _ = report.passed();
});
