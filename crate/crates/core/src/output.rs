//! Artifact files: CSV tables and Wigner grids, optional JSON mirrors and a
//! manifest that echoes the configuration and digests every emitted file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::phasespace::WignerGrid;
use crate::scenarios::{parse_key_values, Column, ScenarioConfig, ScenarioName, ScenarioReport, Table};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Renders with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: cannot parse `{s}` as a number", path.display())))
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn table_csv(table: &Table) -> String {
    let header: Vec<String> = table
        .columns
        .iter()
        .map(|c| format!("{} [{}]", c.name, c.unit))
        .collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in 0..table.rows() {
        let cells: Vec<String> = table.columns.iter().map(|c| format_f64(c.values[row])).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_series(table: &Table, path: &Path) -> Result<()> {
    write_atomic(path, table_csv(table).as_bytes())
}

pub fn read_series(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty file", path.display())))?;
    let mut columns: Vec<Column> = header
        .split(',')
        .map(|h| {
            let (name, unit) = h
                .split_once(" [")
                .map(|(n, u)| (n, u.trim_end_matches(']')))
                .unwrap_or((h, ""));
            Column::new(name, unit, Vec::new())
        })
        .collect();
    for line in lines {
        for (col, cell) in columns.iter_mut().zip(line.split(',')) {
            col.values.push(parse_f64(cell, path)?);
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Table::new(&name, columns))
}

/// `re_axis,...` and `im_axis,...` header lines, then one line per real-axis
/// point holding the values along the imaginary axis.
pub fn grid_csv(grid: &WignerGrid) -> String {
    let line = |label: &str, vals: &mut dyn Iterator<Item = f64>| {
        let mut s = label.to_string();
        for v in vals {
            s.push(',');
            s.push_str(&format_f64(v));
        }
        s.push('\n');
        s
    };
    let mut out = line("re_axis", &mut grid.re_axis.iter().copied());
    out.push_str(&line("im_axis", &mut grid.im_axis.iter().copied()));
    for row in grid.values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_grid(grid: &WignerGrid, path: &Path) -> Result<()> {
    write_atomic(path, grid_csv(grid).as_bytes())
}

pub fn read_grid(path: &Path) -> Result<WignerGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let mut axis = |label: &str| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{}: missing {label} line", path.display())))?;
        let rest = line
            .strip_prefix(label)
            .ok_or_else(|| Error::Config(format!("{}: expected {label} header", path.display())))?;
        rest.split(',').skip(1).map(|v| parse_f64(v, path)).collect()
    };
    let re_axis = axis("re_axis")?;
    let im_axis = axis("im_axis")?;
    let mut values = Vec::with_capacity(re_axis.len() * im_axis.len());
    for line in lines {
        for cell in line.split(',') {
            values.push(parse_f64(cell, path)?);
        }
    }
    if values.len() != re_axis.len() * im_axis.len() {
        return Err(Error::Config(format!(
            "{}: grid size does not match its axes",
            path.display()
        )));
    }
    Ok(WignerGrid {
        values: DMatrix::from_row_slice(re_axis.len(), im_axis.len(), &values),
        re_axis,
        im_axis,
    })
}

fn table_json(table: &Table) -> serde_json::Value {
    json!({
        "name": table.name,
        "columns": table.columns.iter().map(|c| json!({
            "name": c.name,
            "unit": c.unit,
            "values": c.values,
        })).collect::<Vec<_>>(),
    })
}

fn grid_json(grid: &WignerGrid) -> serde_json::Value {
    json!({
        "re_axis": grid.re_axis,
        "im_axis": grid.im_axis,
        "values": grid.values.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
    })
}

fn to_json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Files written for one run, in emission order, with their digests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputBundle {
    pub dir: PathBuf,
    pub files: Vec<(String, String)>,
}

impl OutputBundle {
    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST_FILE)
    }
}

pub fn manifest_text(report: &ScenarioReport, files: &[(String, String)]) -> String {
    let mut out = format!(
        "iontrap_version={}\nscenario={}\n",
        env!("CARGO_PKG_VERSION"),
        report.config.name()
    );
    for (k, v) in report.config.entries() {
        out.push_str(&format!("set.{k}={v}\n"));
    }
    out.push_str(&format!("all_pass={}\n", report.all_pass()));
    for c in &report.checks {
        out.push_str(&format!("check.{}={}\n", c.name, c));
    }
    for (name, v) in &report.scalars {
        out.push_str(&format!("scalar.{name}={}\n", format_f64(*v)));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning={w}\n"));
    }
    for (name, digest) in files {
        out.push_str(&format!("file.{name}=sha256:{digest}\n"));
    }
    out
}

/// Writes every table and grid of `report` plus the manifest into `dir`.
pub fn write_report(report: &ScenarioReport, dir: &Path, with_json: bool) -> Result<OutputBundle> {
    let mut files = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<()> {
        write_atomic(&dir.join(&name), &bytes)?;
        files.push((name, sha256_hex(&bytes)));
        Ok(())
    };
    for table in &report.tables {
        emit(format!("{}.csv", table.name), table_csv(table).into_bytes())?;
        if with_json {
            emit(format!("{}.json", table.name), to_json_bytes(&table_json(table)))?;
        }
    }
    for (name, grid) in &report.grids {
        emit(format!("wigner_{name}.csv"), grid_csv(grid).into_bytes())?;
        if with_json {
            emit(format!("wigner_{name}.json"), to_json_bytes(&grid_json(grid)))?;
        }
    }
    let checks: Vec<String> = report.checks.iter().map(|c| c.to_string()).collect();
    emit("checks.txt".into(), (checks.join("\n") + "\n").into_bytes())?;
    write_atomic(&dir.join(MANIFEST_FILE), manifest_text(report, &files).as_bytes())?;
    Ok(OutputBundle {
        dir: dir.to_path_buf(),
        files,
    })
}

/// Configuration echoed in a manifest.
pub fn config_from_manifest(text: &str) -> Result<ScenarioConfig> {
    let pairs = parse_key_values(text)?;
    let name: ScenarioName = pairs
        .iter()
        .find(|(k, _)| k == "scenario")
        .ok_or_else(|| Error::Config("manifest has no scenario line".into()))?
        .1
        .parse()?;
    let mut config = ScenarioConfig::new(name);
    for (k, v) in &pairs {
        if let Some(key) = k.strip_prefix("set.") {
            config.set(key, v)?;
        }
    }
    Ok(config)
}

/// `(name, digest)` pairs listed in a manifest.
pub fn manifest_files(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("file."))
        .filter_map(|l| l.split_once('='))
        .map(|(n, d)| (n.to_string(), d.trim_start_matches("sha256:").to_string()))
        .collect()
}
