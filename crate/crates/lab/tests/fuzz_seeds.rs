use std::path::PathBuf;

use sausage_lab::fuzzing;

fn corpus(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    assert!(!entries.is_empty(), "no seeds in {}", dir.display());
    entries.into_iter().map(|p| (p.clone(), std::fs::read(p).unwrap())).collect()
}

#[test]
fn seeds_replay_through_entry_points() {
    let targets: [(&str, fn(&[u8])); 5] = [
        ("config_toml", fuzzing::config_toml),
        ("path_csv", fuzzing::path_csv),
        ("points_csv", fuzzing::points_csv),
        ("pairs_csv", fuzzing::pairs_csv),
        ("report_json", fuzzing::report_json),
    ];
    for (name, entry) in targets {
        for (path, data) in corpus(name) {
            entry(&data);
            // Truncations exercise the error paths of every seed.
            for cut in [1, data.len() / 2, data.len().saturating_sub(1)] {
                entry(&data[..cut.min(data.len())]);
            }
            let _ = path;
        }
    }
}

#[test]
fn valid_seeds_parse() {
    for (path, data) in corpus("report_json") {
        let ok = sausage_core::io::parse_report_json(std::str::from_utf8(&data).unwrap()).is_ok();
        assert_eq!(ok, !path.ends_with("wrong_schema.json"), "{}", path.display());
    }
    for (path, data) in corpus("config_toml") {
        let ok = sausage_lab::parse_config(std::str::from_utf8(&data).unwrap()).is_ok();
        assert_eq!(ok, !path.ends_with("invalid.toml"), "{}", path.display());
    }
}
