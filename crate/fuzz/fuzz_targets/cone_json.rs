#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cone) = conicond::ConeRep::from_json_bytes(data) {
        let back = conicond::ConeRep::from_json(&cone.to_json()).expect("round trip");
        assert_eq!(back.ambient_dim(), cone.ambient_dim());
    }
});
