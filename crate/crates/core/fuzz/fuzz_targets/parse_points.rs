#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(points) = sfmew::config::parse_points(text) {
        assert!(!points.is_empty());
        assert!(points.iter().flatten().all(|v| v.is_finite()));
    }
});
