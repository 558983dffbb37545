#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(e) = sfmew::parse(src) else {
        return;
    };
    // printing must give something that parses back
    let printed = e.to_string();
    assert!(
        sfmew::parse(&printed).is_ok(),
        "{src:?} printed as {printed:?}"
    );
    let _ = e.eval([0.3, -0.7]);
    let _ = e.eval_jet([0.3, -0.7], 3);
});
