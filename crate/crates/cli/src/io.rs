//! CSV and JSON files. Floats are written with 17 significant digits so every
//! value reads back bit for bit.

use std::fs::File;
use std::path::Path;

use serde::Serialize;
use springy_core::ensemble::{KeSeries, TraceRow};

use crate::error::{CliError, Result};

pub const SERIES_HEADER: [&str; 5] = ["t", "delta_ke", "mean_Eb", "mean_Ep", "stderr"];
pub const TRACE_HEADER: [&str; 9] = ["t", "y_b", "v_b", "E_b", "E_p", "J", "region", "branch", "switch"];
pub const RATES_HEADER: [&str; 9] = ["source", "m", "E_b0", "rate", "std", "stderr", "T", "runs", "no_decay"];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::data(path, e)
}

/// Writes a header and rows of already formatted fields.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_series(path: &Path, s: &KeSeries) -> Result<()> {
    write_rows(
        path,
        &SERIES_HEADER,
        (0..s.t.len()).map(|i| {
            [s.t[i], s.delta_ke[i], s.mean_eb[i], s.mean_ep[i], s.stderr[i]].map(num)
        }),
    )
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    write_rows(
        path,
        &TRACE_HEADER,
        rows.iter().map(|r| {
            let mut f: Vec<String> = [r.t, r.y_b, r.v_b, r.e_b, r.e_p, r.j].map(num).into();
            f.push(r.region.to_string());
            f.push(r.branch.as_str().to_string());
            f.push(u8::from(r.switch).to_string());
            f
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(path, e))?;
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e))
}

/// A CSV read into named columns of text.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(CliError::io(path))?;
        let mut r = csv::Reader::from_reader(file);
        let header = r.headers().map_err(csv_err(path))?.iter().map(str::to_owned).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err(path))?;
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, path: &Path, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(path, format!("missing column '{name}'")))
    }

    pub fn text(&self, path: &Path, name: &str) -> Result<Vec<String>> {
        let i = self.column_index(path, name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    pub fn floats(&self, path: &Path, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(path, name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(n, r)| {
                r[i].trim().parse::<f64>().map_err(|_| {
                    CliError::data(path, format!("row {}: column '{name}' is not a number: '{}'", n + 2, r[i]))
                })
            })
            .collect()
    }
}

/// The parts of a series file the rate fit needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub t: Vec<f64>,
    pub delta_ke: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

pub fn read_series(path: &Path) -> Result<SeriesFile> {
    let table = Table::read(path)?;
    let stderr = match table.column_index(path, "stderr") {
        Ok(_) => Some(table.floats(path, "stderr")?),
        Err(_) => None,
    };
    Ok(SeriesFile {
        t: table.floats(path, "t")?,
        delta_ke: table.floats(path, "delta_ke")?,
        stderr,
    })
}
