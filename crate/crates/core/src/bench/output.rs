use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::FrameScore;

use super::BenchError;

/// Writes through a sibling temp file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), BenchError> {
    let io = |e: std::io::Error| BenchError::Run(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Parses a `time,j,f,jf` CSV as written by [`crate::metrics::scores_csv`].
pub fn parse_scores_csv(text: &str) -> Result<Vec<FrameScore>, BenchError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("time,j,f,jf") => {}
        other => return Err(BenchError::Config(format!("unexpected CSV header {other:?}"))),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || BenchError::Config(format!("CSV line {}: `{line}`", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            Ok(FrameScore {
                time: fields[0].trim().parse().map_err(|_| bad())?,
                j: num(fields[1])?,
                f: num(fields[2])?,
                jf: num(fields[3])?,
            })
        })
        .collect()
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal SVG line chart of one or more `(x, y)` series with y in `[y_min, y_max]`.
pub fn line_chart(title: &str, y_range: (f64, f64), series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (640.0, 320.0, 40.0);
    let (y_min, y_max) = y_range;
    let xs = series.iter().flat_map(|(_, s)| s.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let px = |x: f64| pad + (x - x_min) / x_span * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y.clamp(y_min, y_max) - y_min) / (y_max - y_min) * (h - 2.0 * pad);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{pad}" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black" stroke-width="1"/>"#,
        h - pad,
        w - pad
    );
    for (label, y) in [(y_min, y_min), (y_max, y_max)] {
        let _ = writeln!(
            out,
            r#"<text x="4" y="{:.1}" font-family="sans-serif" font-size="10">{label:.2}</text>"#,
            py(y) + 3.0
        );
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            w - pad - 120.0,
            pad + 14.0 * i as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Per-frame J&F as a chart series.
pub fn jf_series(scores: &[FrameScore]) -> Vec<(f64, f64)> {
    scores.iter().map(|s| (f64::from(s.time), s.jf)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::scores_csv;

    #[test]
    fn csv_round_trip() {
        let scores = vec![FrameScore::new(1, 0.5, 0.25), FrameScore::new(2, 1.0, 1.0)];
        assert_eq!(parse_scores_csv(&scores_csv(&scores)).unwrap(), scores);
        assert!(parse_scores_csv("t,j\n").is_err());
        assert!(parse_scores_csv("time,j,f,jf\n1,0.5,x,0.5\n").is_err());
    }

    #[test]
    fn chart_is_well_formed() {
        let svg = line_chart("a <b>", (0.0, 1.0), &[("jf", vec![(1.0, 0.0), (2.0, 1.0)])]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt;b&gt;"));
        assert!(svg.contains("polyline points=\"40.0,280.0 600.0,40.0\""));
    }

    #[test]
    fn atomic_write_creates_parents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/c.txt");
        write_atomic(&p, b"x").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"x");
        assert!(!dir.path().join("a/b/c.txt.tmp").exists());
    }
}
