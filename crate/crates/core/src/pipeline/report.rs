use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::feature_analysis::{
    elbow_select, f_test_importance, fit_kmeans, mutual_info_importance,
    random_forest_importance,
};
use crate::mesh_fem::Species;
use crate::pipeline::dataset::{build_dataset, TargetColumn};
use crate::pipeline::sweep::write_atomic;
use crate::qoi::DEFAULT_FIT_WINDOW;

#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Late-time window for the exponent fits.
    pub fit_window: [f64; 2],
    /// Cluster count; `None` selects by the elbow criterion over 1..=8.
    pub cluster_k: Option<usize>,
    pub seed: u64,
    /// Number of forest trees for the importance table.
    pub n_trees: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            fit_window: DEFAULT_FIT_WINDOW,
            cluster_k: None,
            seed: 0,
            n_trees: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub qoi_ensembles: Vec<PathBuf>,
    pub exponents: PathBuf,
    pub importances: Vec<PathBuf>,
}

/// Emit plot-ready CSVs from a sweep directory: per-species QoI ensemble
/// means over realizations, exponent-fit tables with cluster labels, and
/// feature-importance tables for all three estimators.
pub fn write_report(dataset_dir: &Path, out_dir: &Path, options: &ReportOptions) -> Result<ReportPaths> {
    std::fs::create_dir_all(out_dir)?;
    let species_list = [Species::A, Species::B, Species::C];

    let mut per_species = Vec::new();
    for sp in species_list {
        per_species.push(build_dataset(dataset_dir, TargetColumn::DegreeOfMixing, sp)?);
    }

    // QoI ensemble tables: mean/min/max over simulations at each time level
    let mut qoi_paths = Vec::new();
    for (sp, _) in species_list.iter().zip(&per_species) {
        let mut columns = Vec::new();
        for target in [
            TargetColumn::AvgConc,
            TargetColumn::AvgSqConc,
            TargetColumn::DegreeOfMixing,
        ] {
            columns.push(build_dataset(dataset_dir, target, *sp)?);
        }
        // group rows by time; times are shared across the sweep's runs
        let mut by_time: BTreeMap<u64, [Vec<f64>; 3]> = BTreeMap::new();
        for (c, ds) in columns.iter().enumerate() {
            for i in 0..ds.n_rows() {
                by_time
                    .entry(ds.times[i].to_bits())
                    .or_insert_with(|| [Vec::new(), Vec::new(), Vec::new()])[c]
                    .push(ds.targets[i]);
            }
        }
        let mut out = String::from(
            "t,avg_conc_mean,avg_conc_min,avg_conc_max,\
             avg_sq_conc_mean,avg_sq_conc_min,avg_sq_conc_max,\
             degree_of_mixing_mean,degree_of_mixing_min,degree_of_mixing_max\n",
        );
        for (bits, cols) in &by_time {
            let t = f64::from_bits(*bits);
            out.push_str(&format!("{t}"));
            for vals in cols {
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                out.push_str(&format!(",{mean},{min},{max}"));
            }
            out.push('\n');
        }
        let path = out_dir.join(format!("qoi_ensemble_{sp}.csv"));
        write_atomic(&path, &out)?;
        qoi_paths.push(path);
    }

    // exponent fits per (simulation, species) on the degree of mixing
    struct ExponentRow {
        sim_id: String,
        species: Species,
        exponent: f64,
        prefactor: f64,
        r2: f64,
    }
    let mut rows: Vec<ExponentRow> = Vec::new();
    for (sp, ds) in species_list.iter().zip(&per_species) {
        for sim in ds.unique_sims() {
            let idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.sim_ids[i] == sim).collect();
            let series: Vec<f64> = idx.iter().map(|&i| ds.targets[i]).collect();
            let times: Vec<f64> = idx.iter().map(|&i| ds.times[i]).collect();
            let (exponent, prefactor, r2) =
                match crate::qoi::fit_exponent(&series, &times, options.fit_window) {
                    Ok(fit) => (fit.exponent, fit.prefactor, fit.r2),
                    Err(_) => (0.0, 0.0, 0.0), // flat/zero series carry no exponent
                };
            rows.push(ExponentRow {
                sim_id: sim,
                species: *sp,
                exponent,
                prefactor,
                r2,
            });
        }
    }
    let exponents = DMatrix::from_fn(rows.len(), 1, |i, _| rows[i].exponent);
    let k = match options.cluster_k {
        Some(k) => k,
        None => elbow_select(&exponents, 1..=8.min(rows.len()), options.seed)?,
    };
    let clusters = fit_kmeans(&exponents, k, options.seed)?;
    let mut out = String::from("sim_id,species,exponent,prefactor,r2,cluster\n");
    for (row, &cluster) in rows.iter().zip(&clusters.assignments) {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.sim_id, row.species, row.exponent, row.prefactor, row.r2, cluster
        ));
    }
    let exponents_path = out_dir.join("exponents.csv");
    write_atomic(&exponents_path, &out)?;

    // feature importance over the 5 physical parameters (time excluded so
    // the ranking is over sweep inputs), target = degree of mixing of A
    let ds = &per_species[0];
    let n_params = 5;
    let x = DMatrix::from_fn(ds.n_rows(), n_params, |i, j| ds.scaled[(i, j)]);
    let names: Vec<String> = ds.feature_names[..n_params].to_vec();
    let y = &ds.targets;
    let reports = [
        f_test_importance(&x, y, &names)?,
        mutual_info_importance(&x, y, 3, &names)?,
        random_forest_importance(&x, y, options.n_trees, options.seed, &names)?,
    ];
    let mut importance_paths = Vec::new();
    for (label, report) in ["ftest", "mi", "rf"].iter().zip(&reports) {
        let path = out_dir.join(format!("importance_{label}.csv"));
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_atomic(
            &path,
            std::str::from_utf8(&buf)
                .map_err(|e| Error::InvalidInput(format!("non-utf8 csv: {e}")))?,
        )?;
        importance_paths.push(path);
    }

    Ok(ReportPaths {
        qoi_ensembles: qoi_paths,
        exponents: exponents_path,
        importances: importance_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::sweep::{run_sweep, SweepSpec};

    fn sweep_dir() -> tempfile::TempDir {
        let spec = SweepSpec {
            v0: vec![1.0, 1e-2],
            aniso_ratio: vec![1.0, 1e4],
            d_m: vec![0.1],
            kappa_fl: vec![2.0],
            period_t: vec![1e-4],
            nodes_per_side: 11,
            dt: 0.01,
            end_time: 0.5,
            snapshot_stride: 1,
            seed: 0,
        };
        let dir = tempfile::tempdir().unwrap();
        run_sweep(&spec, dir.path(), 4).unwrap();
        dir
    }

    #[test]
    fn report_bundle_shapes() {
        let dir = sweep_dir();
        let out = tempfile::tempdir().unwrap();
        let options = ReportOptions {
            cluster_k: Some(2),
            n_trees: 5,
            ..ReportOptions::default()
        };
        let paths = write_report(dir.path(), out.path(), &options).unwrap();
        assert_eq!(paths.qoi_ensembles.len(), 3);
        assert_eq!(paths.importances.len(), 3);

        // ensemble table: one row per stored time level (50 steps)
        let text = std::fs::read_to_string(&paths.qoi_ensembles[0]).unwrap();
        assert_eq!(text.lines().count(), 51);

        // exponent table: n_sims x 3 species rows, cluster labels in 0..2
        let text = std::fs::read_to_string(&paths.exponents).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4 * 3 + 1);
        let clusters: Vec<&str> = lines[1..]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap())
            .collect();
        let mut distinct = clusters.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 2);

        // importance tables have the 5 parameter features
        let text = std::fs::read_to_string(&paths.importances[2]).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(!text.contains("time"));
    }

    #[test]
    fn report_is_deterministic() {
        let dir = sweep_dir();
        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        let options = ReportOptions {
            cluster_k: Some(2),
            n_trees: 5,
            ..ReportOptions::default()
        };
        let a = write_report(dir.path(), out_a.path(), &options).unwrap();
        let b = write_report(dir.path(), out_b.path(), &options).unwrap();
        for (pa, pb) in a
            .qoi_ensembles
            .iter()
            .chain([&a.exponents])
            .chain(&a.importances)
            .zip(b.qoi_ensembles.iter().chain([&b.exponents]).chain(&b.importances))
        {
            assert_eq!(
                std::fs::read(pa).unwrap(),
                std::fs::read(pb).unwrap(),
                "{pa:?} differs"
            );
        }
    }
}
