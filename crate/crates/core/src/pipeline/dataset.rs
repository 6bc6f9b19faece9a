use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_analysis::{minmax_scale, FeatureScaling};
use crate::mesh_fem::Species;

/// Which QoI column of the sweep output to use as the regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetColumn {
    AvgConc,
    AvgSqConc,
    DegreeOfMixing,
}

impl FromStr for TargetColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg_conc" => Ok(TargetColumn::AvgConc),
            "avg_sq_conc" => Ok(TargetColumn::AvgSqConc),
            "degree_of_mixing" => Ok(TargetColumn::DegreeOfMixing),
            other => Err(Error::InvalidInput(format!(
                "unknown target column '{other}' (expected avg_conc, avg_sq_conc, or degree_of_mixing)"
            ))),
        }
    }
}

impl std::fmt::Display for TargetColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TargetColumn::AvgConc => "avg_conc",
            TargetColumn::AvgSqConc => "avg_sq_conc",
            TargetColumn::DegreeOfMixing => "degree_of_mixing",
        })
    }
}

pub const FEATURE_NAMES: [&str; 6] = [
    "period_T",
    "log10_aniso_ratio",
    "kappa_fL",
    "log10_v0",
    "D_m",
    "time",
];

/// Training table assembled from a sweep directory: one row per
/// (simulation, stored step) with t = 0 rows dropped.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// Raw feature values (log10 already applied where the schema says so).
    pub raw: DMatrix<f64>,
    /// Min-max scaled copy of `raw`.
    pub scaled: DMatrix<f64>,
    pub scaling: FeatureScaling,
    pub target: TargetColumn,
    pub species: Species,
    pub targets: Vec<f64>,
    /// Degree-of-mixing column, kept for class labeling regardless of target.
    pub mixing: Vec<f64>,
    pub sim_ids: Vec<String>,
    pub times: Vec<f64>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    /// Unique simulation ids in first-appearance order.
    pub fn unique_sims(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for id in &self.sim_ids {
            if seen.last() != Some(id) && !seen.contains(id) {
                seen.push(id.clone());
            }
        }
        seen
    }

    /// Feature matrix CSV: header of feature names plus the target column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("sim_id,");
        out.push_str(&self.feature_names.join(","));
        out.push_str(&format!(",{}\n", self.target));
        for i in 0..self.n_rows() {
            out.push_str(&self.sim_ids[i]);
            for j in 0..self.raw.ncols() {
                out.push_str(&format!(",{}", self.raw[(i, j)]));
            }
            out.push_str(&format!(",{}\n", self.targets[i]));
        }
        crate::pipeline::sweep::write_atomic(path, &out)
    }
}

struct ManifestRow {
    sim_id: String,
    v0: f64,
    aniso_ratio: f64,
    d_m: f64,
    kappa_fl: f64,
    period_t: f64,
}

fn read_manifest(dir: &Path) -> Result<Vec<ManifestRow>> {
    let path = dir.join("manifest.csv");
    let mut reader = csv::Reader::from_path(&path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record?;
        if r.get(6) != Some("ok") {
            continue;
        }
        let field = |i: usize| -> Result<f64> {
            r.get(i)
                .ok_or_else(|| Error::InvalidInput(format!("manifest missing column {i}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("manifest parse: {e}")))
        };
        rows.push(ManifestRow {
            sim_id: r
                .get(0)
                .ok_or_else(|| Error::InvalidInput("manifest missing sim_id".into()))?
                .to_string(),
            v0: field(1)?,
            aniso_ratio: field(2)?,
            d_m: field(3)?,
            kappa_fl: field(4)?,
            period_t: field(5)?,
        });
    }
    Ok(rows)
}

/// Build the feature matrix/target vector for one QoI column and species.
///
/// Features per row: period_T, log10(aniso_ratio), kappa_fL, log10(v0),
/// D_m, time. Simulations whose QoI file is missing are skipped with a
/// warning on stderr.
pub fn build_dataset(dir: &Path, target: TargetColumn, species: Species) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    if manifest.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no successful runs listed in {}",
            dir.join("manifest.csv").display()
        )));
    }

    let mut raw_rows: Vec<[f64; 6]> = Vec::new();
    let mut targets = Vec::new();
    let mut mixing = Vec::new();
    let mut sim_ids = Vec::new();
    let mut times = Vec::new();

    for m in &manifest {
        let qoi_path = dir.join(format!("{}.qoi.csv", m.sim_id));
        if !qoi_path.exists() {
            eprintln!(
                "warning: skipping {}: missing {}",
                m.sim_id,
                qoi_path.display()
            );
            continue;
        }
        let mut reader = csv::Reader::from_path(&qoi_path)?;
        for record in reader.records() {
            let r = record?;
            if r.get(2) != Some(&species.to_string()) {
                continue;
            }
            let parse = |i: usize| -> Result<f64> {
                r.get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("QoI row missing column {i}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("QoI parse: {e}")))
            };
            let t = parse(1)?;
            if t == 0.0 {
                continue;
            }
            let (avg, avg_sq, dom) = (parse(3)?, parse(4)?, parse(5)?);
            raw_rows.push([
                m.period_t,
                m.aniso_ratio.log10(),
                m.kappa_fl,
                m.v0.log10(),
                m.d_m,
                t,
            ]);
            targets.push(match target {
                TargetColumn::AvgConc => avg,
                TargetColumn::AvgSqConc => avg_sq,
                TargetColumn::DegreeOfMixing => dom,
            });
            mixing.push(dom);
            sim_ids.push(m.sim_id.clone());
            times.push(t);
        }
    }

    if raw_rows.is_empty() {
        return Err(Error::InvalidInput("dataset has no rows".into()));
    }
    let raw = DMatrix::from_fn(raw_rows.len(), 6, |i, j| raw_rows[i][j]);
    let (scaled, scaling) = minmax_scale(&raw)?;
    Ok(Dataset {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        raw,
        scaled,
        scaling,
        target,
        species,
        targets,
        mixing,
        sim_ids,
        times,
    })
}
