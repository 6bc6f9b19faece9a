use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh_fem::run_simulation;
use crate::physics::SimulationConfig;
use crate::qoi::{compute_qois, QoISeries};

/// One point of the parameter sweep (raw, unscaled values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub v0: f64,
    pub aniso_ratio: f64,
    #[serde(rename = "D_m")]
    pub d_m: f64,
    #[serde(rename = "kappa_fL")]
    pub kappa_fl: f64,
    #[serde(rename = "period_T")]
    pub period_t: f64,
}

/// Cartesian-product sweep over the varied physical parameters, plus the
/// mesh/time settings shared by every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub v0: Vec<f64>,
    pub aniso_ratio: Vec<f64>,
    #[serde(rename = "D_m")]
    pub d_m: Vec<f64>,
    #[serde(rename = "kappa_fL")]
    pub kappa_fl: Vec<f64>,
    #[serde(rename = "period_T")]
    pub period_t: Vec<f64>,
    pub nodes_per_side: usize,
    pub dt: f64,
    pub end_time: f64,
    pub snapshot_stride: usize,
    pub seed: u64,
}

impl SweepSpec {
    /// 72-run desk-scale sweep preserving the extremes of the parameter
    /// ranges: 3 x 3 x 2 x 2 x 2 combinations on a 21-node-per-side mesh.
    pub fn desk_default() -> Self {
        SweepSpec {
            v0: vec![1.0, 1e-2, 1e-4],
            aniso_ratio: vec![1.0, 1e2, 1e4],
            d_m: vec![1e-1, 1e-3],
            kappa_fl: vec![2.0, 5.0],
            period_t: vec![1e-4, 5e-4],
            nodes_per_side: 21,
            dt: 0.01,
            end_time: 1.0,
            snapshot_stride: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("v0", &self.v0),
            ("aniso_ratio", &self.aniso_ratio),
            ("D_m", &self.d_m),
            ("kappa_fL", &self.kappa_fl),
            ("period_T", &self.period_t),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidInput(format!("empty {name} list")));
            }
        }
        self.base_config(&SweepPoint {
            v0: self.v0[0],
            aniso_ratio: self.aniso_ratio[0],
            d_m: self.d_m[0],
            kappa_fl: self.kappa_fl[0],
            period_t: self.period_t[0],
        })
        .validate()
    }

    /// All combinations in deterministic nested order (v0 outermost).
    pub fn combinations(&self) -> Vec<SweepPoint> {
        let mut points = Vec::with_capacity(self.n_combinations());
        for &v0 in &self.v0 {
            for &ratio in &self.aniso_ratio {
                for &d_m in &self.d_m {
                    for &kappa in &self.kappa_fl {
                        for &t in &self.period_t {
                            points.push(SweepPoint {
                                v0,
                                aniso_ratio: ratio,
                                d_m,
                                kappa_fl: kappa,
                                period_t: t,
                            });
                        }
                    }
                }
            }
        }
        points
    }

    pub fn n_combinations(&self) -> usize {
        self.v0.len()
            * self.aniso_ratio.len()
            * self.d_m.len()
            * self.kappa_fl.len()
            * self.period_t.len()
    }

    pub fn base_config(&self, point: &SweepPoint) -> SimulationConfig {
        SimulationConfig {
            kappa_f_l: point.kappa_fl,
            v0: point.v0,
            period_t: point.period_t,
            alpha_l: 1.0,
            alpha_t: 1.0 / point.aniso_ratio,
            d_m: point.d_m,
            nodes_per_side: self.nodes_per_side,
            dt: self.dt,
            end_time: self.end_time,
            snapshot_stride: self.snapshot_stride,
            ..SimulationConfig::desk_default()
        }
    }
}

/// Unique run identifier: zero-padded sweep index plus an FNV-1a hash of the
/// parameter values.
pub fn sim_id(index: usize, point: &SweepPoint) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for v in [
        point.v0,
        point.aniso_ratio,
        point.d_m,
        point.kappa_fl,
        point.period_t,
    ] {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    format!("{index:04}_{:08x}", hash as u32)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub n_runs: usize,
    pub n_failed: usize,
    pub manifest_path: PathBuf,
}

struct RunOutcome {
    sim_id: String,
    point: SweepPoint,
    error: Option<String>,
}

/// Write `content` to `path` atomically (temp file + rename).
pub(crate) fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// QoI long-format CSV: one row per stored step per species.
pub fn qoi_csv(series: &[QoISeries]) -> String {
    let mut out = String::from("sim_id,t,species,avg_conc,avg_sq_conc,degree_of_mixing\n");
    for s in series {
        for i in 0..s.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.sim_id,
                s.times[i],
                s.species,
                s.avg_conc[i],
                s.avg_sq_conc[i],
                s.degree_of_mixing[i]
            ));
        }
    }
    out
}

/// Run every combination of the sweep, writing one config JSON and one QoI
/// CSV per simulation plus a manifest CSV. Failed runs are recorded in the
/// manifest and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, workers: usize) -> Result<SweepSummary> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let points = spec.combinations();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Solver(format!("worker pool: {e}")))?;

    use rayon::prelude::*;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, point)| {
                let id = sim_id(index, point);
                let error = run_one(spec, point, &id, out_dir).err().map(|e| e.to_string());
                RunOutcome {
                    sim_id: id,
                    point: *point,
                    error,
                }
            })
            .collect()
    });

    let mut manifest =
        String::from("sim_id,v0,aniso_ratio,D_m,kappa_fL,period_T,status,error\n");
    let mut n_failed = 0;
    for o in &outcomes {
        let (status, error) = match &o.error {
            None => ("ok", String::new()),
            Some(e) => {
                n_failed += 1;
                ("failed", e.replace([',', '\n'], ";"))
            }
        };
        manifest.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            o.sim_id,
            o.point.v0,
            o.point.aniso_ratio,
            o.point.d_m,
            o.point.kappa_fl,
            o.point.period_t,
            status,
            error
        ));
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_atomic(&manifest_path, &manifest)?;

    Ok(SweepSummary {
        n_runs: outcomes.len(),
        n_failed,
        manifest_path,
    })
}

fn run_one(spec: &SweepSpec, point: &SweepPoint, id: &str, out_dir: &Path) -> Result<()> {
    let config = spec.base_config(point);
    let run = run_simulation(&config)?;
    let series = compute_qois(&run, &config.stoichiometry(), id)?;
    write_atomic(
        &out_dir.join(format!("{id}.config.json")),
        &serde_json::to_string_pretty(&config)?,
    )?;
    write_atomic(&out_dir.join(format!("{id}.qoi.csv")), &qoi_csv(&series))?;
    Ok(())
}
