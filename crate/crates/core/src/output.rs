//! CSV files and the standalone SVG plot.
//!
//! Files written into the output directory:
//!
//! * `series_NNNN.csv`: `t,N,D,v_av,q,throughput10,latency,empty` per repetition
//! * `cc.csv`: `t,cc` at instants where the cross-covariance is defined
//! * `fundamental.csv`: `bin_lo,center,count,mean_q,mean_cc` (densities per lane)
//! * `summary.csv`: `repetition,emitted,dropped,processed,in_road`
//! * `fundamental.svg`: flow against density with the mean `cc` overlay, and `cc(t)`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{cross_covariance, fundamental_diagram, smooth, CcPoint, DiagramBin, MetricsSeries};
use crate::error::Result;
use crate::scenario::{ExperimentConfig, RepetitionResult};

pub const SERIES_HEADER: [&str; 8] = ["t", "N", "D", "v_av", "q", "throughput10", "latency", "empty"];
pub const CC_FILE: &str = "cc.csv";
pub const DIAGRAM_FILE: &str = "fundamental.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "fundamental.svg";

pub fn series_file(repetition: u64) -> String {
    format!("series_{repetition:04}.csv")
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Serialize, Deserialize)]
struct SummaryRow {
    repetition: u64,
    emitted: u64,
    dropped: u64,
    processed: u64,
    in_road: u64,
}

/// Derived ensemble tables of one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTables {
    pub cc: Vec<CcPoint>,
    pub diagram: Vec<DiagramBin>,
}

pub fn ensemble_tables(cfg: &ExperimentConfig, results: &[RepetitionResult]) -> EnsembleTables {
    let ensemble: Vec<MetricsSeries> = results.iter().map(|r| r.series.clone()).collect();
    let cc = cross_covariance(&ensemble);
    let diagram = fundamental_diagram(&ensemble, &cc, cfg.bin_width, cfg.lanes);
    EnsembleTables { cc, diagram }
}

/// Writes every CSV and the plot; returns the paths written.
pub fn emit_outputs(dir: &Path, cfg: &ExperimentConfig, results: &[RepetitionResult]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for r in results {
        let path = dir.join(series_file(r.repetition));
        write_rows(&path, &SERIES_HEADER, &r.series.samples)?;
        written.push(path);
    }
    let tables = ensemble_tables(cfg, results);
    let path = dir.join(CC_FILE);
    write_rows(&path, &["t", "cc"], &tables.cc)?;
    written.push(path);
    let path = dir.join(DIAGRAM_FILE);
    write_rows(&path, &["bin_lo", "center", "count", "mean_q", "mean_cc"], &tables.diagram)?;
    written.push(path);
    let summary: Vec<SummaryRow> = results
        .iter()
        .map(|r| SummaryRow {
            repetition: r.repetition,
            emitted: r.tally.emitted,
            dropped: r.tally.dropped,
            processed: r.tally.processed,
            in_road: r.in_road,
        })
        .collect();
    let path = dir.join(SUMMARY_FILE);
    write_rows(&path, &["repetition", "emitted", "dropped", "processed", "in_road"], &summary)?;
    written.push(path);
    let path = dir.join(PLOT_FILE);
    fs::write(&path, render_svg(&tables.diagram, &tables.cc, 1))?;
    written.push(path);
    Ok(written)
}

/// Re-renders the plot from `fundamental.csv` and `cc.csv` in `dir`,
/// smoothing `cc(t)` over `window` points.
pub fn replot(dir: &Path, out: &Path, window: usize) -> Result<()> {
    let diagram: Vec<DiagramBin> = read_rows(&dir.join(DIAGRAM_FILE))?;
    let cc: Vec<CcPoint> = read_rows(&dir.join(CC_FILE))?;
    fs::write(out, render_svg(&diagram, &cc, window))?;
    Ok(())
}

const WIDTH: f64 = 640.0;
const PANEL: f64 = 260.0;
const MARGIN: f64 = 50.0;

struct Frame {
    top: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (WIDTH - 2.0 * MARGIN) * if self.x_max > 0.0 { x / self.x_max } else { 0.0 }
    }

    fn py(&self, y: f64) -> f64 {
        let span = self.y_max - self.y_min;
        let f = if span > 0.0 { (y - self.y_min) / span } else { 0.0 };
        self.top + PANEL - f * PANEL
    }
}

fn polyline(svg: &mut String, frame: &Frame, points: &[(f64, f64)], colour: &str) {
    if points.is_empty() {
        return;
    }
    let coords: Vec<String> =
        points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
        coords.join(" ")
    );
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str, x_unit: &str) {
    let (l, r) = (MARGIN, WIDTH - MARGIN);
    let (t, b) = (frame.top, frame.top + PANEL);
    let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{PANEL}" fill="none" stroke="black"/>"#, r - l);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, b + 35.0);
    let _ = writeln!(svg, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{y_label}</text>"#, t + PANEL / 2.0, t + PANEL / 2.0);
    let _ = writeln!(svg, r#"<text x="{l}" y="{}" font-size="10">0</text>"#, b + 14.0);
    let _ = writeln!(svg, r#"<text x="{r}" y="{}" font-size="10" text-anchor="end">{:.4}{x_unit}</text>"#, b + 14.0, frame.x_max);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.3}</text>"#, l - 4.0, t + 10.0, frame.y_max);
    let _ = writeln!(svg, r#"<text x="{}" y="{b}" font-size="10" text-anchor="end">{:.3}</text>"#, l - 4.0, frame.y_min);
}

/// Two stacked panels: binned mean flow against per-lane density with the
/// bin mean `cc` on a [-1, 1] scale, and `cc(t)` smoothed over `window`.
pub fn render_svg(diagram: &[DiagramBin], cc: &[CcPoint], window: usize) -> String {
    let height = 2.0 * PANEL + 3.0 * MARGIN + 40.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let x_max = diagram.iter().map(|b| b.center).fold(0.0, f64::max);
    let q_max = diagram.iter().map(|b| b.mean_q).fold(0.0, f64::max);
    let flow = Frame { top: MARGIN, x_max, y_min: 0.0, y_max: q_max };
    axes(&mut svg, &flow, "density (veh/m/lane)", "flow (veh/s)", "");
    let q_points: Vec<(f64, f64)> = diagram.iter().map(|b| (b.center, b.mean_q)).collect();
    polyline(&mut svg, &flow, &q_points, "steelblue");
    for &(x, y) in &q_points {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#, flow.px(x), flow.py(y));
    }
    let cc_frame = Frame { top: MARGIN, x_max, y_min: -1.0, y_max: 1.0 };
    let cc_points: Vec<(f64, f64)> =
        diagram.iter().filter_map(|b| b.mean_cc.map(|c| (b.center, c))).collect();
    polyline(&mut svg, &cc_frame, &cc_points, "firebrick");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" fill="firebrick" font-size="10" text-anchor="end">mean cc (scale -1..1)</text>"#,
        WIDTH - MARGIN - 4.0,
        MARGIN + 12.0
    );

    let top = 2.0 * MARGIN + PANEL + 20.0;
    let t_max = cc.iter().map(|p| p.t as f64).fold(0.0, f64::max);
    let time = Frame { top, x_max: t_max, y_min: -1.0, y_max: 1.0 };
    axes(&mut svg, &time, "time (s)", "cc(q, D)", " s");
    let zero = time.py(0.0);
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{zero:.2}" x2="{}" y2="{zero:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        WIDTH - MARGIN
    );
    let values: Vec<f64> = cc.iter().map(|p| p.cc).collect();
    let smoothed = smooth(&values, window);
    let points: Vec<(f64, f64)> = cc.iter().zip(smoothed).map(|(p, c)| (p.t as f64, c)).collect();
    polyline(&mut svg, &time, &points, "firebrick");
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_for_empty_input() {
        let svg = render_svg(&[], &[], 5);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn svg_has_one_marker_per_bin() {
        let bins = [
            DiagramBin { bin_lo: 0.0, center: 0.0025, count: 3, mean_q: 0.2, mean_cc: Some(0.9) },
            DiagramBin { bin_lo: 0.005, center: 0.0075, count: 3, mean_q: 0.5, mean_cc: None },
        ];
        let svg = render_svg(&bins, &[CcPoint { t: 1, cc: 0.5 }], 1);
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
