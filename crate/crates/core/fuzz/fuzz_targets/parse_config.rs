#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = sfmew::RunConfig::parse(text) {
        let _ = cfg.structure();
        let _ = cfg.sample_points().len();
    }
});
