//! CSV emission, atomic writes and the terminal summary.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use irsdm::ExperimentResult;

pub const CSV_HEADER: &str = "axis_value,scheme,sr_bits,iterations,seed";

/// Fixed 17-significant-digit rendering.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per axis value per series, axis-major.
pub fn to_csv(res: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (i, x) in res.axis_values.iter().enumerate() {
        for s in &res.series {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(*x),
                s.label,
                fmt_f64(s.sr[i]),
                s.iterations[i],
                res.seed
            ));
        }
    }
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Fixed-width table: one row per axis value, one column per series.
pub fn summary(res: &ExperimentResult) -> String {
    let width = res.series.iter().map(|s| s.label.len()).max().unwrap_or(0).max(10);
    let mut out = format!("{} ({} points)\n{:>10}", res.experiment, res.axis_values.len(), res.axis);
    for s in &res.series {
        out.push_str(&format!("  {:>width$}", s.label));
    }
    out.push('\n');
    for (i, x) in res.axis_values.iter().enumerate() {
        out.push_str(&format!("{x:>10}"));
        for s in &res.series {
            out.push_str(&format!("  {:>width$.4}", s.sr[i]));
        }
        out.push('\n');
    }
    out
}
