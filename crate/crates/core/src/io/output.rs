//! Report, table and sample files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::complete::FoldDiagnostics;
use crate::error::{Error, Result};
use crate::problem::{Mapping, Menu};
use crate::restrict::HistogramBin;

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_histogram_csv(path: impl AsRef<Path>, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for b in bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_folds_csv(path: impl AsRef<Path>, folds: &[FoldDiagnostics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fold", "size", "error_model", "error_naive", "error_unrestricted", "mean_delta", "var_delta"])?;
    for f in folds {
        w.write_record([
            f.fold.to_string(),
            f.size.to_string(),
            f.error_model.to_string(),
            f.error_naive.to_string(),
            f.error_unrestricted.to_string(),
            f.mean_delta.to_string(),
            f.var_delta.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CompareRow {
    pub model: String,
    pub kappa: Option<f64>,
    pub kappa_se: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub r: f64,
    pub r_se: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

pub const COMPARE_HEADER: [&str; 7] = ["model", "kappa", "kappa_se", "N", "r", "r_se", "M"];

pub fn write_compare_csv(path: impl AsRef<Path>, rows: &[CompareRow]) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(COMPARE_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            opt(r.kappa),
            opt(r.kappa_se),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.r.to_string(),
            r.r_se.to_string(),
            r.m.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_compare_csv(path: impl AsRef<Path>) -> Result<Vec<CompareRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

/// Writes sampled mappings in long form: `draw,item_id,value` for scalar
/// mappings or `draw,item_id,p1,p2,p3` for play distributions. Numbers use
/// the shortest representation that reads back to the same `f64`.
pub fn write_samples_csv(path: impl AsRef<Path>, menu: &Menu, draws: &[Mapping]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let simplex = draws.first().is_some_and(|d| d.as_simplex().is_some());
    if simplex {
        w.write_record(["draw", "item_id", "p1", "p2", "p3"])?;
    } else {
        w.write_record(["draw", "item_id", "value"])?;
    }
    for (k, d) in draws.iter().enumerate() {
        if d.len() != menu.len() {
            return Err(Error::MenuMismatch { expected: menu.len(), got: d.len() });
        }
        for (i, id) in menu.ids().iter().enumerate() {
            match d {
                Mapping::Scalar(v) => w.write_record([k.to_string(), id.clone(), v[i].to_string()])?,
                Mapping::Simplex(v) => {
                    let p = v[i];
                    w.write_record([k.to_string(), id.clone(), p[0].to_string(), p[1].to_string(), p[2].to_string()])?
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads mappings written by [`write_samples_csv`] for the same menu.
pub fn read_samples_csv(path: impl AsRef<Path>, menu: &Menu) -> Result<Vec<Mapping>> {
    let mut r = csv::Reader::from_path(path)?;
    let simplex = r.headers()?.iter().any(|h| h == "p1");
    let mut scalar: Vec<Vec<f64>> = Vec::new();
    let mut probs: Vec<Vec<[f64; 3]>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse { line, message: format!("bad number in column {}", k + 1) })
        };
        let draw: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse { line, message: "bad draw index".into() })?;
        let id = rec.get(1).unwrap_or("");
        let item = menu
            .ids()
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::Parse { line, message: format!("unknown item '{id}'") })?;
        if simplex {
            if probs.len() <= draw {
                probs.resize(draw + 1, vec![[0.0; 3]; menu.len()]);
            }
            probs[draw][item] = [parse(2)?, parse(3)?, parse(4)?];
        } else {
            if scalar.len() <= draw {
                scalar.resize(draw + 1, vec![0.0; menu.len()]);
            }
            scalar[draw][item] = parse(2)?;
        }
    }
    if simplex {
        probs.into_iter().map(Mapping::simplex).collect()
    } else {
        scalar.into_iter().map(Mapping::scalar).collect()
    }
}
