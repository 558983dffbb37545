//! Replays the checked-in fuzz seeds through the same bodies as the fuzz
//! targets, so regressions show up under a plain `cargo test`.

use std::path::Path;

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out.iter()
        .filter_map(|p| String::from_utf8(std::fs::read(p).unwrap()).ok())
        .collect()
}

#[test]
fn expression_seeds() {
    let mut parsed = 0;
    for src in seeds("parse_expr") {
        let Ok(e) = sfmew::parse(&src) else { continue };
        parsed += 1;
        let printed = e.to_string();
        assert!(
            sfmew::parse(&printed).is_ok(),
            "{src:?} printed as {printed:?}"
        );
        let _ = e.eval([0.3, -0.7]);
        let _ = e.eval_jet([0.3, -0.7], 3);
    }
    assert!(parsed > 0);
}

#[test]
fn config_seeds() {
    let mut parsed = 0;
    for text in seeds("parse_config") {
        if let Ok(cfg) = sfmew::RunConfig::parse(&text) {
            parsed += 1;
            let _ = cfg.structure();
            let _ = cfg.sample_points().len();
        }
    }
    assert!(parsed > 0);
}

#[test]
fn point_seeds() {
    for text in seeds("parse_points") {
        if let Ok(points) = sfmew::config::parse_points(&text) {
            assert!(!points.is_empty());
            assert!(points.iter().flatten().all(|v| v.is_finite()));
        }
    }
}
