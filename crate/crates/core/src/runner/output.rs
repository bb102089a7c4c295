use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::run::RunOutput;

pub const CSV_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Column names in output order; feature columns appear only when the
/// feature is active.
pub fn csv_header(has_edfa: bool, has_pat: bool) -> Vec<&'static str> {
    let mut h = vec!["t_s", "range_m", "elevation_rad", "alpha_rad"];
    if has_edfa {
        h.push("edfa_w");
    }
    if has_pat {
        h.extend(["residual_rad", "pointing_loss_db"]);
    }
    h.extend(["rx_dbm", "margin_db"]);
    if has_pat {
        h.push("mode");
    }
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Time series, one row per budget step. Values are written in shortest
/// round-trip form; `rx_dbm` and `margin_db` are empty when the link is
/// not available.
pub fn write_csv<W: Write>(out: &RunOutput, w: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(csv_header(out.has_edfa, out.has_pat))?;
    for r in &out.records {
        let mut row = vec![
            r.t_s.to_string(),
            r.range_m.to_string(),
            r.elevation_rad.to_string(),
            r.alpha_rad.to_string(),
        ];
        if out.has_edfa {
            row.push(opt(r.edfa_w));
        }
        if out.has_pat {
            row.push(opt(r.pat.map(|p| p.residual_rad)));
            row.push(opt(r.pat.map(|p| p.pointing_loss_db)));
        }
        row.push(opt(r.rx_dbm));
        row.push(opt(r.margin_db));
        if out.has_pat {
            row.push(r.pat.map(|p| p.mode.to_string()).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Artifacts {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Write the requested artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, out: &RunOutput, csv: bool, json: bool) -> io::Result<Artifacts> {
    std::fs::create_dir_all(dir)?;
    let mut a = Artifacts::default();
    if csv {
        let p = dir.join(CSV_FILE);
        let f = io::BufWriter::new(std::fs::File::create(&p)?);
        write_csv(out, f)?;
        a.csv = Some(p);
    }
    if json {
        let p = dir.join(SUMMARY_FILE);
        let mut text = serde_json::to_string_pretty(&out.summary).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(&p, text)?;
        a.json = Some(p);
    }
    Ok(a)
}
