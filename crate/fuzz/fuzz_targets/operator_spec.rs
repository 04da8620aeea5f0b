#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(d) = conicond::regularizers::parse_operator(s) {
            assert!(d.nrows() >= d.ncols() || d.nrows() + 1 == d.ncols());
        }
    }
});
