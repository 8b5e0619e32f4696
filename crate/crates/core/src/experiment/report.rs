//! Report types and the files written by [`emit`].
//!
//! Output directory layout:
//!
//! ```text
//! report.csv         one row per (sequence, mode, qp), REPORT_CSV_HEADER order
//! report.json        {"records": [...], "frames": [...], "histograms": [...]}
//! frames.csv         one row per coded frame
//! qp_histogram.csv   per frame and channel: how many CBs got each final QP
//! rate_points.csv    sequence,qp,mode,bits,ssim
//! qpmaps/<sequence>/<mode>_qp<qp>/qpmap_<frame>.csv
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qp::{Mode, QpMap};

pub const REPORT_CSV_HEADER: [&str; 25] = [
    "sequence",
    "mode",
    "qp",
    "frames",
    "width",
    "height",
    "bits",
    "psnr_g",
    "psnr_b",
    "psnr_r",
    "mse_g",
    "mse_b",
    "mse_r",
    "ssim",
    "ssim_vs_anchor",
    "mean_qp_g",
    "mean_qp_b",
    "mean_qp_r",
    "bits_pct",
    "psnr_g_pct",
    "psnr_b_pct",
    "psnr_r_pct",
    "mse_g_pct",
    "mse_b_pct",
    "mse_r_pct",
];

/// One (sequence, mode, QP) cell.
///
/// PSNR and MSE are means over frames. `*_pct` columns are
/// `100 * (value - anchor) / anchor` against the anchor record at the same
/// sequence and QP; PSNR deltas are taken on dB values, MSE deltas on MSE.
/// A delta is empty when the anchor value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub sequence: String,
    pub mode: Mode,
    pub qp: i32,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub bits: u64,
    pub psnr_g: f64,
    pub psnr_b: f64,
    pub psnr_r: f64,
    pub mse_g: f64,
    pub mse_b: f64,
    pub mse_r: f64,
    /// Mean global GBR SSIM of the reconstruction against the source.
    pub ssim: f64,
    /// Mean global GBR SSIM of the reconstruction against the anchor's.
    pub ssim_vs_anchor: f64,
    pub mean_qp_g: f64,
    pub mean_qp_b: f64,
    pub mean_qp_r: f64,
    pub bits_pct: Option<f64>,
    pub psnr_g_pct: Option<f64>,
    pub psnr_b_pct: Option<f64>,
    pub psnr_r_pct: Option<f64>,
    pub mse_g_pct: Option<f64>,
    pub mse_b_pct: Option<f64>,
    pub mse_r_pct: Option<f64>,
}

pub const FRAME_CSV_HEADER: [&str; 12] = [
    "sequence",
    "mode",
    "qp",
    "frame",
    "bits",
    "side_bits",
    "psnr_g",
    "psnr_b",
    "psnr_r",
    "ssim",
    "nonzero_levels",
    "mean_mv_magnitude",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub sequence: String,
    pub mode: Mode,
    pub qp: i32,
    pub frame: usize,
    /// Level bit proxy, the quantity summed into the record's `bits`.
    pub bits: u64,
    /// Side information estimate, reported separately.
    pub side_bits: u64,
    pub psnr_g: f64,
    pub psnr_b: f64,
    pub psnr_r: f64,
    pub ssim: f64,
    pub nonzero_levels: u64,
    /// Empty for intra frames.
    pub mean_mv_magnitude: Option<f64>,
}

pub const HISTOGRAM_CSV_HEADER: [&str; 7] = ["sequence", "mode", "qp", "frame", "channel", "cb_qp", "count"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpHistogramRow {
    pub sequence: String,
    pub mode: Mode,
    /// Base QP of the run.
    pub qp: i32,
    pub frame: usize,
    pub channel: String,
    /// Final CB-level QP.
    pub cb_qp: i32,
    pub count: usize,
}

pub const RATE_POINTS_CSV_HEADER: [&str; 5] = ["sequence", "qp", "mode", "bits", "ssim"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub sequence: String,
    pub qp: i32,
    pub mode: Mode,
    pub bits: u64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<ReportRecord>,
    pub frames: Vec<FrameRow>,
    pub histograms: Vec<QpHistogramRow>,
    /// Per-cell QP maps, dumped to `qpmaps/`; not part of the JSON.
    #[serde(skip)]
    pub qp_maps: Vec<(String, Mode, i32, Vec<QpMap>)>,
}

impl ExperimentReport {
    pub fn record(&self, sequence: &str, mode: Mode, qp: i32) -> Option<&ReportRecord> {
        self.records.iter().find(|r| r.sequence == sequence && r.mode == mode && r.qp == qp)
    }

    pub fn rate_points(&self) -> Vec<RatePoint> {
        self.records
            .iter()
            .map(|r| RatePoint { sequence: r.sequence.clone(), qp: r.qp, mode: r.mode, bits: r.bits, ssim: r.ssim })
            .collect()
    }
}

fn write_csv<T: Serialize, W: Write>(w: W, rows: &[T], header: &[&str]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wtr.write_record(header)?;
    }
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_rate_points<W: Write>(w: W, report: &ExperimentReport) -> Result<()> {
    write_csv(w, &report.rate_points(), &RATE_POINTS_CSV_HEADER)
}

/// Reads `report.csv` back into records.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ReportRecord>, _>>()?;
    Ok(rows)
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_csv(fs::File::create(dir.join("report.csv"))?, &report.records, &REPORT_CSV_HEADER)?;
    write_csv(fs::File::create(dir.join("frames.csv"))?, &report.frames, &FRAME_CSV_HEADER)?;
    write_csv(fs::File::create(dir.join("qp_histogram.csv"))?, &report.histograms, &HISTOGRAM_CSV_HEADER)?;
    write_rate_points(fs::File::create(dir.join("rate_points.csv"))?, report)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    for (sequence, mode, qp, maps) in &report.qp_maps {
        let cell = dir.join("qpmaps").join(sequence).join(format!("{}_qp{}", mode, qp));
        fs::create_dir_all(&cell)?;
        for map in maps {
            let f = fs::File::create(cell.join(format!("qpmap_{}.csv", map.frame_index)))?;
            map.write_csv(f)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(mode: Mode, qp: i32) -> ReportRecord {
        ReportRecord {
            sequence: "s".into(),
            mode,
            qp,
            frames: 2,
            width: 64,
            height: 64,
            bits: 1000 + qp as u64,
            psnr_g: 40.1,
            psnr_b: 39.2,
            psnr_r: 38.3,
            mse_g: 1.0 / 3.0,
            mse_b: 2.5,
            mse_r: 0.1,
            ssim: 0.987654321,
            ssim_vs_anchor: 0.99,
            mean_qp_g: 25.5,
            mean_qp_b: 30.0,
            mean_qp_r: 31.25,
            bits_pct: Some(-12.5),
            psnr_g_pct: Some(-0.3),
            psnr_b_pct: None,
            psnr_r_pct: Some(1e-17),
            mse_g_pct: Some(40.0),
            mse_b_pct: None,
            mse_r_pct: Some(3.0),
        }
    }

    #[test]
    fn header_matches_serialized_fields() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[record(Mode::Spaq, 22)], &REPORT_CSV_HEADER).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), REPORT_CSV_HEADER.join(","));
    }

    #[test]
    fn empty_report_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        emit(&ExperimentReport::default(), dir.path()).unwrap();
        for (file, header) in [
            ("report.csv", &REPORT_CSV_HEADER[..]),
            ("frames.csv", &FRAME_CSV_HEADER[..]),
            ("qp_histogram.csv", &HISTOGRAM_CSV_HEADER[..]),
            ("rate_points.csv", &RATE_POINTS_CSV_HEADER[..]),
        ] {
            let text = fs::read_to_string(dir.path().join(file)).unwrap();
            assert_eq!(text, format!("{}\n", header.join(",")), "{}", file);
        }
    }

    #[test]
    fn csv_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = ExperimentReport::default();
        for qp in [22, 27, 32, 37] {
            report.records.push(record(Mode::Anchor, qp));
            report.records.push(record(Mode::Spaq, qp));
        }
        emit(&report, dir.path()).unwrap();
        let from_csv = read_report_csv(dir.path().join("report.csv")).unwrap();
        let json: ExperimentReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(from_csv, report.records);
        assert_eq!(json.records, report.records);
        let points = fs::read_to_string(dir.path().join("rate_points.csv")).unwrap();
        assert_eq!(points.lines().count(), 1 + 8);
    }

    #[test]
    fn unwritable_dir_fails() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("not_a_dir");
        fs::write(&file, b"x").unwrap();
        assert!(emit(&ExperimentReport::default(), &file).is_err());
    }
}
