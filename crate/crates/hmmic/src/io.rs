//! CSV formats.
//!
//! * trajectories: `t,x,y`, floats with 17 significant digits;
//! * fit traces: `k,<parameter names>`;
//! * information criteria: `model,d,n,loglik,aic,bic,log_evidence`;
//! * key/value reports: `key,value`;
//! * replication records and selection-fraction tables.
//!
//! Other floats are written in Rust's shortest round-trip form, so every
//! value reads back exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hmmic_core::criteria::IcResult;
use hmmic_core::fit::TracePoint;
use hmmic_core::models::Trajectory;

use crate::study::{FractionTable, ModelFit, PairFit, ReplicationRecord};
use crate::{Error, Result};

/// Rows written between flushes of a trace file.
pub const TRACE_FLUSH_INTERVAL: usize = 1000;

/// `x` with 17 significant digits.
pub fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trajectory<W: Write>(
    out: W,
    trajectory: &Trajectory,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y"])?;
    for (t, (x, y)) in trajectory
        .states
        .iter()
        .zip(&trajectory.observations)
        .enumerate()
    {
        w.write_record([t.to_string(), full_precision(*x), full_precision(*y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Observations from the `y` column of a CSV with a header, or from the only
/// column if there is just one.
pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let column = match headers.iter().position(|h| h.trim() == "y") {
        Some(c) => c,
        None if headers.len() == 1 => 0,
        None => {
            return Err(Error::Config(format!(
                "{} has no `y` column",
                path.display()
            )))
        }
    };
    let mut ys = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let field = record.get(column).unwrap_or("");
        let y: f64 = field.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{}: row {} has invalid value `{field}`",
                path.display(),
                line + 1
            ))
        })?;
        if !y.is_finite() {
            return Err(Error::Config(format!(
                "{}: row {} is not finite",
                path.display(),
                line + 1
            )));
        }
        ys.push(y);
    }
    if ys.is_empty() {
        return Err(Error::Config(format!(
            "{} holds no observations",
            path.display()
        )));
    }
    Ok(ys)
}

/// Incremental writer for `k,<params>` trace files.
pub struct TraceWriter {
    writer: csv::Writer<BufWriter<File>>,
    path: PathBuf,
    pending: usize,
}

impl TraceWriter {
    pub fn create(path: &Path, param_names: &[&str]) -> Result<Self> {
        let mut writer = create(path)?;
        let mut header = vec!["k"];
        header.extend_from_slice(param_names);
        writer
            .write_record(&header)
            .map_err(|e| Error::csv(path, e))?;
        Ok(Self {
            writer,
            path: path.to_path_buf(),
            pending: 0,
        })
    }

    pub fn push(&mut self, point: &TracePoint) -> Result<()> {
        let mut row = vec![point.k.to_string()];
        row.extend(point.theta.iter().map(|v| v.to_string()));
        self.writer
            .write_record(&row)
            .map_err(|e| Error::csv(&self.path, e))?;
        self.pending += 1;
        if self.pending >= TRACE_FLUSH_INTERVAL {
            self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
            self.pending = 0;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        finish(self.writer, &self.path)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_ic_results<W: Write>(
    out: W,
    results: &[IcResult],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "d", "n", "loglik", "aic", "bic", "log_evidence"])?;
    for r in results {
        w.write_record([
            r.model.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.loglik.to_string(),
            r.aic.to_string(),
            r.bic.to_string(),
            opt(r.log_evidence),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_key_values<W: Write>(
    out: W,
    rows: &[(String, String)],
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

const RECORD_HEADER: [&str; 19] = [
    "scenario",
    "replication",
    "n",
    "data_seed",
    "sv_phi",
    "sv_sigma_x",
    "sv_loglik",
    "sv_aic",
    "sv_bic",
    "svj_phi",
    "svj_sigma_x",
    "svj_sigma_j",
    "svj_p",
    "svj_loglik",
    "svj_aic",
    "svj_bic",
    "selected_aic",
    "selected_bic",
    "error",
];

pub fn record_header(wall_time: bool) -> Vec<&'static str> {
    let mut h = RECORD_HEADER.to_vec();
    if wall_time {
        h.push("wall_time");
    }
    h
}

pub fn record_row(r: &ReplicationRecord, wall_time: bool) -> Vec<String> {
    let mut row = vec![
        r.scenario.to_string(),
        r.replication.to_string(),
        r.n.to_string(),
        r.data_seed.to_string(),
    ];
    match &r.outcome {
        Ok(pair) => {
            for fit in [&pair.sv, &pair.svj] {
                row.extend(fit.theta.iter().map(|v| v.to_string()));
                row.extend([
                    fit.loglik.to_string(),
                    fit.aic.to_string(),
                    fit.bic.to_string(),
                ]);
            }
            row.extend([
                pair.selected_by_aic().to_string(),
                pair.selected_by_bic().to_string(),
                String::new(),
            ]);
        }
        Err(msg) => {
            row.extend(std::iter::repeat_n(String::new(), 14));
            row.push(msg.replace(['\n', '\r'], " "));
        }
    }
    if wall_time {
        row.push(opt(r.wall_time));
    }
    row
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    path: &Path,
) -> Result<T> {
    let field = record.get(i).unwrap_or("");
    field.parse().map_err(|_| {
        Error::Config(format!(
            "{}: invalid field `{field}` in column {}",
            path.display(),
            i + 1
        ))
    })
}

/// Reads a replication CSV written by [`record_row`]. A final line without
/// a newline (an interrupted append) is ignored.
pub fn read_records(path: &Path) -> Result<Vec<ReplicationRecord>> {
    let mut text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.truncate(text.rfind('\n').map_or(0, |i| i + 1));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let has_wall = headers.iter().any(|h| h == "wall_time");
    if headers
        .iter()
        .take(RECORD_HEADER.len())
        .ne(RECORD_HEADER.iter().copied())
    {
        return Err(Error::Config(format!(
            "{} is not a replication record file",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let rec = record.map_err(|e| Error::csv(path, e))?;
        let error = rec.get(18).unwrap_or("");
        let outcome = if error.is_empty() {
            let f = |i| parse_field::<f64>(&rec, i, path);
            let sv = ModelFit {
                theta: vec![f(4)?, f(5)?].into(),
                loglik: f(6)?,
                aic: f(7)?,
                bic: f(8)?,
            };
            let svj = ModelFit {
                theta: vec![f(9)?, f(10)?, f(11)?, f(12)?].into(),
                loglik: f(13)?,
                aic: f(14)?,
                bic: f(15)?,
            };
            Ok(PairFit { sv, svj })
        } else {
            Err(error.to_string())
        };
        let wall_time = if has_wall {
            rec.get(19)
                .filter(|s| !s.is_empty())
                .map(|_| parse_field(&rec, 19, path))
                .transpose()?
        } else {
            None
        };
        out.push(ReplicationRecord {
            scenario: parse_field(&rec, 0, path)?,
            replication: parse_field(&rec, 1, path)?,
            n: parse_field(&rec, 2, path)?,
            data_seed: parse_field(&rec, 3, path)?,
            outcome,
            wall_time,
        });
    }
    Ok(out)
}

pub fn write_records(path: &Path, records: &[ReplicationRecord], wall_time: bool) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(record_header(wall_time))
        .map_err(|e| Error::csv(path, e))?;
    for r in records {
        w.write_record(record_row(r, wall_time))
            .map_err(|e| Error::csv(path, e))?;
    }
    finish(w, path)
}

pub fn write_fraction_table(path: &Path, table: &FractionTable) -> Result<()> {
    let mut w = create(path)?;
    let csv_err = |e| Error::csv(path, e);
    w.write_record([
        "criterion",
        "model",
        "n",
        "selected",
        "successful",
        "failures",
    ])
    .map_err(csv_err)?;
    for row in &table.rows {
        w.write_record([
            row.criterion.to_string(),
            row.model.to_string(),
            row.n.to_string(),
            row.selected.to_string(),
            row.successful.to_string(),
            row.failures.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w, path)
}

/// `n,aic_diff,bic_diff` with differences taken as SV minus SVJ.
pub fn write_path(path: &Path, rows: &[(usize, f64, f64)]) -> Result<()> {
    let mut w = create(path)?;
    let csv_err = |e| Error::csv(path, e);
    w.write_record(["n", "aic_diff", "bic_diff"])
        .map_err(csv_err)?;
    for (n, a, b) in rows {
        w.write_record([n.to_string(), a.to_string(), b.to_string()])
            .map_err(csv_err)?;
    }
    finish(w, path)
}

/// Gnuplot script drawing both difference paths against a zero line.
pub fn path_plot_script(csv_name: &str, image_name: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,500\n\
         set output '{image_name}'\n\
         set key top left\n\
         set xlabel 'n'\n\
         set ylabel 'SV minus SVJ'\n\
         plot '{csv_name}' using 1:2 skip 1 with lines title 'AIC difference', \\\n\
         \x20    '{csv_name}' using 1:3 skip 1 with lines title 'BIC difference', \\\n\
         \x20    0 with lines dashtype 2 lc rgb 'black' notitle\n"
    )
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
