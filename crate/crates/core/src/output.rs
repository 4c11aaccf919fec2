//! Output files: CSV tables and JSON documents with a `# key=value` config
//! header, minimal SVG ratio plots, and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::montecarlo::MCEstimate;
use crate::probe::RatioProbe;
use crate::Result;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HEAVYTAIL_OUT";
/// Output directory used when neither `--out` nor [`OUT_ENV`] is given.
pub const DEFAULT_OUT: &str = "heavytail-out";

/// Effective configuration of a run, echoed at the top of every table.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    /// A header that starts with the command and the library version.
    pub fn new(command: &str) -> Self {
        Self::default()
            .with("command", command)
            .with("version", env!("CARGO_PKG_VERSION"))
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_string(), v)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// One `# key=value` line per entry.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

/// Writes `contents` to a temporary sibling of `path` and renames it into
/// place, creating parent directories as needed.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Directory that receives the artifacts of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    /// `flag` if given, else [`OUT_ENV`], else [`DEFAULT_OUT`].
    pub fn resolve(flag: Option<PathBuf>) -> Self {
        let root = flag
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Self { root }
    }

    /// Writes `name` atomically and returns its path.
    pub fn save(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".into()
    }
}

/// CSV of ratio probes with columns
/// `probe,x,ratio,jump,std_error,low_confidence`.
pub fn probes_csv(header: &Header, probes: &[&RatioProbe]) -> String {
    let mut s = header.render();
    s.push_str("probe,x,ratio,jump,std_error,low_confidence\n");
    for p in probes {
        let label = csv_field(&p.label);
        for q in &p.points {
            let se = q.std_error.map(num).unwrap_or_default();
            let _ = writeln!(s, "{label},{},{},{},{se},{}", num(q.x), num(q.ratio), q.jump, q.low_confidence);
        }
    }
    s
}

/// One row of a Monte Carlo table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub x: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
    pub hits: u64,
}

impl McRow {
    pub fn from_estimate(x: f64, e: &MCEstimate) -> Self {
        Self {
            x,
            estimate: e.value,
            std_error: e.std_error,
            n: e.n,
            hits: e.hits,
        }
    }
}

/// CSV with columns `x,estimate,std_error,n,hits`.
pub fn mc_csv(header: &Header, rows: &[McRow]) -> String {
    let mut s = header.render();
    s.push_str("x,estimate,std_error,n,hits\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", num(r.x), num(r.estimate), num(r.std_error), r.n, r.hits);
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: std::collections::BTreeMap<&'a str, &'a str>,
    result: &'a T,
}

/// Pretty JSON `{"config": {…}, "result": …}`; non-finite numbers become `null`.
pub fn to_json<T: Serialize>(header: &Header, result: &T) -> Result<String> {
    let config = header.entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let mut s = serde_json::to_string_pretty(&Document { config, result })?;
    s.push('\n');
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Ratio curves against `log10 x`, with an optional dashed target line.
pub fn svg_plot(title: &str, probes: &[&RatioProbe], target: Option<f64>) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 440.0, 70.0, 20.0, 40.0, 90.0);
    let pts: Vec<(f64, f64)> = probes
        .iter()
        .flat_map(|p| p.points.iter())
        .filter(|q| q.x > 0.0 && q.ratio.is_finite())
        .map(|q| (q.x.log10(), q.ratio))
        .collect();
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if let Some(t) = target.filter(|t| t.is_finite()) {
        y0 = y0.min(t);
        y1 = y1.max(t);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    let pad = ((y1 - y0) * 0.08).max(1e-3);
    (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |v: f64| ml + (v - x0) / (x1 - x0) * (w - ml - mr);
    let sy = |v: f64| mt + (y1 - v) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", w / 2.0, xml_escape(title));
    let _ = writeln!(
        s,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        w - ml - mr,
        h - mt - mb
    );
    for d in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = sx(d as f64);
        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{}\" x2=\"{x:.1}\" y2=\"{mt}\" stroke=\"#ddd\"/>", h - mb);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">1e{d}</text>", h - mb + 16.0);
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v:.4}</text>", ml - 6.0, y + 4.0);
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">x</text>", (ml + w - mr) / 2.0, h - mb + 34.0);
    if let Some(t) = target.filter(|t| t.is_finite()) {
        let y = sy(t);
        let _ = writeln!(
            s,
            "<line x1=\"{ml}\" y1=\"{y:.1}\" x2=\"{}\" y2=\"{y:.1}\" stroke=\"#000\" stroke-dasharray=\"6 4\"/>",
            w - mr
        );
    }
    for (i, p) in probes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = p
            .points
            .iter()
            .filter(|q| q.x > 0.0 && q.ratio.is_finite())
            .map(|q| format!("{:.1},{:.1}", sx(q.x.log10()), sy(q.ratio)))
            .collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", path.join(" "));
        for q in p.points.iter().filter(|q| q.x > 0.0 && q.ratio.is_finite()) {
            let fill = if q.jump || q.low_confidence { "white" } else { color };
            let _ = writeln!(
                s,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{fill}\" stroke=\"{color}\"/>",
                sx(q.x.log10()),
                sy(q.ratio)
            );
        }
        let ly = h - mb + 52.0 + 14.0 * (i / 2) as f64;
        let lx = ml + (i % 2) as f64 * (w - ml - mr) / 2.0;
        let _ = writeln!(s, "<line x1=\"{lx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"2\"/>", ly - 4.0, lx + 18.0, ly - 4.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{ly}\">{}</text>", lx + 24.0, xml_escape(&p.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::ProbePoint;

    fn probe() -> RatioProbe {
        let points = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&x| ProbePoint {
                x,
                ratio: 1.0 + 1.0 / x,
                jump: false,
                std_error: None,
                low_confidence: false,
            })
            .collect();
        RatioProbe::from_points("a, b", "num", "den", 100.0, points)
    }

    #[test]
    fn header_lines_and_overrides() {
        let h = Header::new("conv-tail").with("seed", 3).with("seed", 4);
        assert_eq!(h.get("seed"), Some("4"));
        assert!(h.render().starts_with("# command=conv-tail\n# version="));
    }

    #[test]
    fn csv_layouts() {
        let h = Header::new("t");
        let csv = probes_csv(&h, &[&probe()]);
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "probe,x,ratio,jump,std_error,low_confidence");
        assert_eq!(lines[1], "\"a, b\",10,1.1,false,,false");
        let mc = mc_csv(&h, &[McRow { x: 100.0, estimate: 0.02, std_error: 0.001, n: 1000, hits: 20 }]);
        assert!(mc.ends_with("x,estimate,std_error,n,hits\n100,0.02,0.001,1000,20\n"));
    }

    #[test]
    fn json_wraps_config_and_result() {
        let s = to_json(&Header::new("t"), &vec![1.0, f64::NAN]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["config"]["command"], "t");
        assert!(v["result"][1].is_null());
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir { root: dir.path().join("nested") };
        let p = out.save("a.csv", "one").unwrap();
        out.save("a.csv", "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn svg_has_curve_and_target() {
        let s = svg_plot("t <1>", &[&probe()], Some(1.0));
        assert!(s.contains("<polyline") && s.contains("stroke-dasharray") && s.contains("t &lt;1&gt;"));
        assert_eq!(s.matches("<circle").count(), 3);
    }
}
