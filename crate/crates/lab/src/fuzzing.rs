//! Entry points shared by the fuzz targets and the corpus replay test. Each
//! accepts arbitrary bytes; a panic is a bug.

use sausage_core::io;

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn config_toml(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(cfg) = crate::parse_config(s) {
        let again = toml::to_string(&cfg).expect("valid config serializes");
        assert_eq!(crate::parse_config(&again).expect("serialized config parses"), cfg);
    }
}

pub fn path_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok((times, points)) = io::parse_path_csv(s) {
        assert_eq!(times.len(), points.len());
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }
}

pub fn points_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(points) = io::parse_points_csv(s) {
        assert_eq!(io::parse_points_csv(&io::points_csv(&points)).unwrap(), points);
    }
}

pub fn pairs_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(pairs) = io::parse_pairs_csv(s) {
        assert_eq!(io::parse_pairs_csv(&io::pairs_csv(&pairs)).unwrap().pairs, pairs.pairs);
    }
}

pub fn report_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(report) = io::parse_report_json(s) {
        let again = io::report_json(&report);
        let _ = io::parse_report_json(&again);
    }
}
