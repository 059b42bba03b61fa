//! Result files: CSV tables, SVG charts and JSON documents.
//!
//! Every file carries the configuration hash (a `# config_hash:` line in CSV,
//! an XML comment in SVG, a field in JSON). Files are written to a temporary
//! name in the target directory and renamed into place.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::correlator::{CoincidenceHistogram, G2Estimate};
use crate::detection::FringeTrace;
use crate::error::Result;
use crate::experiment::RunResult;
use crate::plot::{Chart, Style};
use crate::stream::ps_to_secs;

pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const HISTOGRAM_SVG: &str = "histogram.svg";
pub const G2_CSV: &str = "g2.csv";
pub const G2_SVG: &str = "g2.svg";
pub const FRINGE_CSV: &str = "fringe.csv";
pub const FRINGE_SVG: &str = "fringe.svg";
pub const CONFIG_JSON: &str = "config.json";
pub const SUMMARY_JSON: &str = "summary.json";

/// Lower-case hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash: {hash}\n")
}

pub fn histogram_csv(h: &CoincidenceHistogram, hash: &str) -> String {
    let mut s = hash_line(hash);
    s.push_str("tau_ps,counts\n");
    for (i, c) in h.counts.iter().enumerate() {
        let _ = writeln!(s, "{},{c}", h.tau_ps(i));
    }
    s
}

pub fn g2_csv(g2: &G2Estimate, hash: &str) -> String {
    let mut s = hash_line(hash);
    s.push_str("tau_ps,g2,stderr\n");
    for b in &g2.bins {
        let _ = writeln!(s, "{},{},{}", b.tau_ps, b.g2, b.stderr);
    }
    s
}

pub fn fringe_csv(trace: &FringeTrace, hash: &str) -> String {
    let mut s = hash_line(hash);
    s.push_str("window_start_s,counts\n");
    for w in &trace.samples {
        let _ = writeln!(s, "{},{}", ps_to_secs(w.start_ps), w.counts);
    }
    s
}

fn comment(hash: &str) -> String {
    format!("config_hash: {hash}")
}

pub fn histogram_svg(h: &CoincidenceHistogram, hash: &str) -> String {
    let xs: Vec<f64> = h.taus_ps().map(|t| t as f64 / 1e3).collect();
    let ys: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
    Chart {
        title: "Coincidence histogram",
        x_label: "delay τ (ns)",
        y_label: "coincidences per bin",
        style: Style::Step,
        comment: &comment(hash),
        reference_y: None,
    }
    .render(&xs, &ys)
}

pub fn g2_svg(g2: &G2Estimate, hash: &str) -> String {
    let xs: Vec<f64> = g2.bins.iter().map(|b| b.tau_ps as f64 / 1e3).collect();
    let ys: Vec<f64> = g2.values().collect();
    Chart {
        title: "Second-order correlation g²(τ)",
        x_label: "delay τ (ns)",
        y_label: "g²(τ)",
        style: Style::Line,
        comment: &comment(hash),
        reference_y: Some(1.0),
    }
    .render(&xs, &ys)
}

pub fn fringe_svg(trace: &FringeTrace, hash: &str) -> String {
    let xs: Vec<f64> = trace.samples.iter().map(|w| ps_to_secs(w.start_ps)).collect();
    let ys: Vec<f64> = trace.samples.iter().map(|w| w.counts as f64).collect();
    Chart {
        title: "Interference count-rate trace (detector A)",
        x_label: "time (s)",
        y_label: "counts per window",
        style: Style::Line,
        comment: &comment(hash),
        reference_y: None,
    }
    .render(&xs, &ys)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Write `contents` to `path` through a temporary file in the same directory.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Write a set of named files into `dir` (created if needed). All contents
/// are rendered by the caller before anything touches the disk.
pub fn write_files(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            atomic_write(&path, contents.as_bytes())?;
            Ok(path)
        })
        .collect()
}

/// Render the full result bundle of a combined run.
pub fn render_bundle(result: &RunResult) -> Result<Vec<(&'static str, String)>> {
    let hash = &result.provenance.config_hash;
    let config = json!({
        "config_hash": hash,
        "seed": result.provenance.seed,
        "config": result.provenance.config,
    });
    Ok(vec![
        (CONFIG_JSON, to_json_pretty(&config)?),
        (HISTOGRAM_CSV, histogram_csv(&result.histogram, hash)),
        (HISTOGRAM_SVG, histogram_svg(&result.histogram, hash)),
        (G2_CSV, g2_csv(&result.g2, hash)),
        (G2_SVG, g2_svg(&result.g2, hash)),
        (FRINGE_CSV, fringe_csv(&result.fringe, hash)),
        (FRINGE_SVG, fringe_svg(&result.fringe, hash)),
        (SUMMARY_JSON, to_json_pretty(&result.summary)?),
    ])
}

pub fn write_bundle(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_bundle(result)?;
    write_files(dir, &files)
}
