//! CSV and JSON artifacts. Writers emit shortest round-trip decimals so
//! that reading a written file reproduces every value exactly.

use std::fmt::Write as _;

use crate::clt::{CltReport, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::limit::RenewalState;
use crate::observables::ObservableSample;
use crate::pathgen::DriftedPath;
use crate::regeneration::{CycleRecord, LagTable};
use crate::topology::{BettiCurve, PersistencePairs};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Numeric rows of a CSV text with a mandatory header equal to `header`.
/// Blank lines are ignored. Each row is returned with its 1-based line.
fn numeric_rows(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut seen_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if !seen_header {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got != header {
                return Err(parse_err(line, format!("expected header {}", header.join(","))));
            }
            seen_header = true;
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let vals = rec
            .iter()
            .map(|f| {
                let v: f64 = f.trim().parse().map_err(|_| parse_err(line, format!("not a number: {f:?}")))?;
                if v.is_finite() { Ok(v) } else { Err(parse_err(line, format!("non-finite value {f:?}"))) }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, vals));
    }
    if !seen_header {
        return Err(parse_err(1, "missing header"));
    }
    Ok(rows)
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn path_csv(path: &DriftedPath) -> String {
    let mut s = String::from("t,x,y\n");
    for (t, p) in path.times.iter().zip(&path.points) {
        writeln!(s, "{t},{},{}", p.x, p.y).unwrap();
    }
    s
}

/// Times and positions; times must be strictly increasing.
pub fn parse_path_csv(text: &str) -> Result<(Vec<f64>, Vec<Point>)> {
    let rows = numeric_rows(text, &["t", "x", "y"])?;
    let mut times = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if times.last().is_some_and(|&t| r[0] <= t) {
            return Err(parse_err(line, "times must increase strictly"));
        }
        times.push(r[0]);
        points.push(Point::new(r[1], r[2]));
    }
    Ok((times, points))
}

pub fn points_csv(points: &[Point]) -> String {
    let mut s = String::from("x,y\n");
    for p in points {
        writeln!(s, "{},{}", p.x, p.y).unwrap();
    }
    s
}

pub fn parse_points_csv(text: &str) -> Result<Vec<Point>> {
    Ok(numeric_rows(text, &["x", "y"])?.into_iter().map(|(_, r)| Point::new(r[0], r[1])).collect())
}

pub fn pairs_csv(pairs: &PersistencePairs) -> String {
    let mut s = String::from("birth,death\n");
    for (b, d) in &pairs.pairs {
        writeln!(s, "{b},{d}").unwrap();
    }
    s
}

/// Pairs with `0 <= birth <= death`.
pub fn parse_pairs_csv(text: &str) -> Result<PersistencePairs> {
    let mut pairs = Vec::new();
    for (line, r) in numeric_rows(text, &["birth", "death"])? {
        if !(0.0 <= r[0] && r[0] <= r[1]) {
            return Err(parse_err(line, "pair needs 0 <= birth <= death"));
        }
        pairs.push((r[0], r[1]));
    }
    Ok(PersistencePairs::from_pairs(pairs))
}

/// Breakpoints and values of a Betti curve; header only when the curve is
/// identically zero.
pub fn curve_csv(curve: &BettiCurve) -> String {
    let mut s = String::from("r,beta1\n");
    if !curve.is_zero() {
        for (r, v) in curve.breakpoints.iter().zip(&curve.values) {
            writeln!(s, "{r},{v}").unwrap();
        }
    }
    s
}

pub fn cycles_csv(per_replica: &[Vec<CycleRecord>], weight_names: &[String]) -> String {
    let mut s = String::from("replica,n,tau_n,tau_np1,eta");
    for prefix in ["delta", "m", "y"] {
        for w in weight_names {
            write!(s, ",{prefix}_{w}").unwrap();
        }
    }
    s.push_str(",complete\n");
    for (r, cycles) in per_replica.iter().enumerate() {
        for c in cycles {
            let y = if c.y.is_empty() { vec![f64::NAN; weight_names.len()] } else { c.y.clone() };
            let cols = join([c.tau_n, c.tau_np1, c.eta].into_iter().chain(c.delta.iter().copied()).chain(c.m_osc.iter().copied()).chain(y));
            writeln!(s, "{r},{},{cols},{}", c.n, c.complete).unwrap();
        }
    }
    s
}

pub fn samples_csv(samples: &[ObservableSample], weight_names: &[String]) -> String {
    let mut s = String::from("seed,t,dt,max_spacing,h,area_r1,area_error");
    for w in weight_names {
        write!(s, ",phi_{w}").unwrap();
    }
    s.push('\n');
    for o in samples {
        let cols = join([o.t, o.dt, o.max_spacing, o.h, o.area_r1, o.area_error].into_iter().chain(o.phi.iter().copied()));
        writeln!(s, "{},{cols}", o.seed).unwrap();
    }
    s
}

/// `z[w][r]` as one row per replica.
pub fn z_samples_csv(z: &[Vec<f64>], weight_names: &[String]) -> String {
    let mut s = String::from("replica");
    for w in weight_names {
        write!(s, ",z_{w}").unwrap();
    }
    s.push('\n');
    let n = z.first().map_or(0, Vec::len);
    for r in 0..n {
        writeln!(s, "{r},{}", join(z.iter().map(|col| col[r]))).unwrap();
    }
    s
}

/// Inverse of [`z_samples_csv`]: weight names and `z[w][r]`.
pub fn parse_z_samples_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| parse_err(1, "missing header"))?;
    let header: Vec<&str> = first.split(',').map(str::trim).collect();
    if header.first() != Some(&"replica") || header[1..].iter().any(|h| !h.starts_with("z_")) {
        return Err(parse_err(1, "expected header replica,z_<w>..."));
    }
    let names: Vec<String> = header[1..].iter().map(|h| h[2..].to_string()).collect();
    let mut z = vec![Vec::new(); names.len()];
    for (k, (line, row)) in numeric_rows(text, &header)?.into_iter().enumerate() {
        if row[0] != k as f64 {
            return Err(parse_err(line, "replica indices must be 0, 1, 2, ..."));
        }
        for (w, v) in row[1..].iter().enumerate() {
            z[w].push(*v);
        }
    }
    Ok((names, z))
}

pub fn renewal_csv(per_replica: &[Vec<RenewalState>], weight_names: &[String]) -> String {
    let mut s = String::from("replica,t,n_t,a_t");
    for w in weight_names {
        write!(s, ",r_{w}").unwrap();
    }
    s.push('\n');
    for (r, states) in per_replica.iter().enumerate() {
        for st in states {
            writeln!(s, "{r},{},{},{},{}", st.t, st.n_t, st.a_t, join(st.r_t.iter().copied())).unwrap();
        }
    }
    s
}

pub fn lags_csv(table: Option<&LagTable>) -> String {
    let mut s = String::from("series,lag,acf,band\n");
    if let Some(t) = table {
        for ser in &t.series {
            for (k, a) in ser.acf.iter().enumerate() {
                writeln!(s, "{},{k},{a},{}", ser.name, t.band).unwrap();
            }
        }
    }
    s
}

pub fn report_json(report: &CltReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_report_json(text: &str) -> Result<CltReport> {
    let report: CltReport = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(parse_err(1, format!("unsupported schema version {}", report.schema_version)));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathgen::{simulate_path, DriftVector};
    use proptest::prelude::*;

    #[test]
    fn path_round_trip_is_exact() {
        let p = simulate_path(DriftVector::new(Point::new(1.0, 0.5)).unwrap(), 2.0, 0.01, 4).unwrap();
        let (t, pts) = parse_path_csv(&path_csv(&p)).unwrap();
        assert_eq!(t, p.times);
        assert_eq!(pts, p.points);
    }

    #[test]
    fn parse_errors_carry_lines() {
        match parse_points_csv("x,y\n1,2\n3,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_path_csv("t,x,y\n1,0,0\n1,0,0\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_pairs_csv("birth,death\n0.5,0.4\n").is_err());
        assert!(parse_points_csv("").is_err());
        assert!(parse_points_csv("a,b\n").is_err());
        assert!(parse_points_csv("x,y\n1,inf\n").is_err());
        assert_eq!(parse_points_csv("x,y\n\n1,2\n").unwrap(), vec![Point::new(1.0, 2.0)]);
    }

    #[test]
    fn z_round_trip() {
        let z = vec![vec![0.5, -1.25, 3.0], vec![0.0, 1e-300, -7.5]];
        let names = vec!["a".to_string(), "b".to_string()];
        assert_eq!(parse_z_samples_csv(&z_samples_csv(&z, &names)).unwrap(), (names, z));
        assert!(parse_z_samples_csv("replica,z_a\n1,0\n").is_err());
    }

    #[test]
    fn pairs_and_empty_curve() {
        let p = PersistencePairs::from_pairs(vec![(0.5, 1.0 / 3f64.sqrt())]);
        assert_eq!(parse_pairs_csv(&pairs_csv(&p)).unwrap().pairs, p.pairs);
        let w = crate::topology::RadiusWindow::new(1.0, 2.0).unwrap();
        assert_eq!(curve_csv(&crate::topology::betti_curve(&p, w)), "r,beta1\n");
        assert_eq!(lags_csv(None), "series,lag,acf,band\n");
    }

    proptest! {
        #[test]
        fn points_round_trip(v in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..50)) {
            let pts: Vec<Point> = v.iter().map(|&(x, y)| Point::new(x, y)).collect();
            prop_assert_eq!(parse_points_csv(&points_csv(&pts)).unwrap(), pts);
        }

        #[test]
        fn arbitrary_text_never_panics(s in ".{0,200}") {
            let _ = parse_points_csv(&s);
            let _ = parse_path_csv(&s);
            let _ = parse_pairs_csv(&s);
            let _ = parse_report_json(&s);
        }
    }
}
