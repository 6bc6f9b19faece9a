use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Deserialize;

use mixing_rom::feature_analysis::{
    elbow_select, f_test_importance, fit_kmeans, mutual_info_importance,
    random_forest_importance,
};
use mixing_rom::mesh_fem::{run_simulation, Species};
use mixing_rom::physics::SimulationConfig;
use mixing_rom::pipeline::{
    build_dataset, qoi_csv, run_sweep, train_protocol, write_report, ExperimentProtocol,
    ReportOptions, SweepSpec, TargetColumn,
};
use mixing_rom::qoi::{check_diagnostics, compute_qois};
use mixing_rom::rom_ml::{ensemble_predict, load_model, save_model, Model, SvrModel};
use mixing_rom::{Error, Result};

/// Non-negative FEM simulator for anisotropic reactive mixing with
/// SVR/SVM reduced-order models, feature analysis, and clustering.
#[derive(Parser)]
#[command(name = "mixrom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config JSON and write its QoI series.
    Simulate(SimulateArgs),
    /// Run a parameter sweep, one QoI CSV + config JSON per simulation.
    Sweep(SweepArgs),
    /// Assemble a training dataset CSV from a sweep directory.
    Dataset(DatasetArgs),
    /// Train SVR/SVM ensembles and write models plus an evaluation report.
    Train(TrainArgs),
    /// Predict a QoI time series with an SVR ensemble.
    Predict(PredictArgs),
    /// Rank features by F-test, mutual information, or random forest.
    Features(FeaturesArgs),
    /// Cluster per-simulation scaling exponents with k-means.
    Cluster(ClusterArgs),
    /// Emit plot-ready ensemble, exponent, and importance tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config JSON; omit to use the built-in default.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "run")]
    sim_id: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep spec JSON; omit to use the built-in 72-run desk sweep.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Overrides the seed recorded in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DatasetArgs {
    /// Sweep output directory.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "degree_of_mixing")]
    target: String,
    #[arg(long, default_value = "A")]
    species: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Sweep output directory.
    #[arg(long = "in")]
    input: PathBuf,
    /// Protocol JSON; omit for the desk default grid.
    #[arg(long)]
    protocol: Option<PathBuf>,
    #[arg(long, default_value = "degree_of_mixing")]
    target: String,
    #[arg(long, default_value = "A")]
    species: String,
    #[arg(long, default_value_t = 0.3)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for models and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model files: paths, a directory, or a simple `prefix*suffix` glob.
    #[arg(long, required = true, num_args = 1..)]
    models: Vec<String>,
    /// Parameter point JSON with keys period_T, aniso_ratio, kappa_fL, v0, D_m.
    #[arg(long)]
    point: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    t0: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// ftest | mi | rf
    #[arg(long)]
    method: String,
    #[arg(long, default_value = "degree_of_mixing")]
    target: String,
    #[arg(long, default_value = "A")]
    species: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Cluster count, or "auto" for elbow selection over 1..=8.
    #[arg(long, default_value = "auto")]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version exit 0; usage problems exit 1
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::Dataset(args) => dataset(args),
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Features(args) => features(args),
        Command::Cluster(args) => cluster(args),
        Command::Report(args) => report(args),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn parse_species(s: &str) -> Result<Species> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("unknown species '{s}' (expected A, B, or C)")))
}

fn write_out(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config: SimulationConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => SimulationConfig::desk_default(),
    };
    std::fs::create_dir_all(&args.out)?;
    let run = run_simulation(&config)?;
    let stoich = config.stoichiometry();
    let series = compute_qois(&run, &stoich, &args.sim_id)?;
    let diagnostics = check_diagnostics(&run, &stoich);
    write_out(
        &args.out.join(format!("{}.qoi.csv", args.sim_id)),
        &qoi_csv(&series),
    )?;
    write_out(
        &args.out.join(format!("{}.config.json", args.sim_id)),
        &serde_json::to_string_pretty(&config)?,
    )?;
    write_out(
        &args.out.join(format!("{}.diagnostics.json", args.sim_id)),
        &serde_json::to_string_pretty(&diagnostics)?,
    )?;
    println!(
        "{}: {} steps, mass drift {:.3e}, M-norm monotone: {}",
        args.sim_id,
        config.n_steps(),
        diagnostics.mass_drift,
        diagnostics.m_norm_monotone
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut spec: SweepSpec = match &args.spec {
        Some(path) => read_json(path)?,
        None => SweepSpec::desk_default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let summary = run_sweep(&spec, &args.out, args.workers)?;
    println!(
        "{} runs ({} failed), manifest at {}",
        summary.n_runs,
        summary.n_failed,
        summary.manifest_path.display()
    );
    Ok(())
}

fn dataset(args: DatasetArgs) -> Result<()> {
    let target: TargetColumn = args.target.parse()?;
    let species = parse_species(&args.species)?;
    let ds = build_dataset(&args.input, target, species)?;
    ds.write_csv(&args.out)?;
    println!(
        "{} rows x {} features -> {}",
        ds.n_rows(),
        ds.feature_names.len(),
        args.out.display()
    );
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let target: TargetColumn = args.target.parse()?;
    let species = parse_species(&args.species)?;
    let ds = build_dataset(&args.input, target, species)?;
    let protocol = match &args.protocol {
        Some(path) => read_json(path)?,
        None => ExperimentProtocol {
            split_seed: args.seed,
            ..ExperimentProtocol::desk_default(args.fraction)
        },
    };
    let (report, models) = train_protocol(&ds, &protocol)?;
    std::fs::create_dir_all(&args.out)?;
    for (i, model) in models.svr_ensemble.iter().enumerate() {
        save_model(
            &Model::Svr(model.clone()),
            &args.out.join(format!("svr_{i:02}.json")),
        )?;
    }
    for (i, model) in models.svm_ensemble.iter().enumerate() {
        save_model(
            &Model::Svm(model.clone()),
            &args.out.join(format!("svm_{i:02}.json")),
        )?;
    }
    write_out(
        &args.out.join("report.json"),
        &serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "ensemble R^2 = {:.4}, ensemble F1 = {:.4} ({} train / {} test sims)",
        report.ensemble_r2,
        report.ensemble_f1,
        report.train_sims.len(),
        report.test_sims.len()
    );
    Ok(())
}

#[derive(Deserialize)]
struct ParameterPoint {
    #[serde(rename = "period_T")]
    period_t: f64,
    aniso_ratio: f64,
    #[serde(rename = "kappa_fL")]
    kappa_fl: f64,
    v0: f64,
    #[serde(rename = "D_m")]
    d_m: f64,
}

/// Expand a path, directory, or single-`*` glob into model files.
fn expand_models(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let p = PathBuf::from(pattern);
        if p.is_dir() {
            for entry in std::fs::read_dir(&p)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    paths.push(path);
                }
            }
        } else if pattern.contains('*') {
            let (dir, name) = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => (d.to_path_buf(), p.file_name()),
                _ => (PathBuf::from("."), p.file_name()),
            };
            let name = name
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::InvalidInput(format!("bad pattern '{pattern}'")))?;
            let (prefix, suffix) = name.split_once('*').ok_or_else(|| {
                Error::InvalidInput(format!("glob must be in the file name: '{pattern}'"))
            })?;
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                let file = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if file.starts_with(prefix) && file.ends_with(suffix) {
                    paths.push(path);
                }
            }
        } else {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput("no model files matched".into()));
    }
    Ok(paths)
}

fn predict(args: PredictArgs) -> Result<()> {
    if args.steps == 0 || !(args.t1 >= args.t0) {
        return Err(Error::InvalidInput(
            "need steps >= 1 and t1 >= t0".into(),
        ));
    }
    let point: ParameterPoint = read_json(&args.point)?;
    let mut models: Vec<SvrModel> = Vec::new();
    for path in expand_models(&args.models)? {
        match load_model(&path)? {
            Model::Svr(m) => models.push(m),
            Model::Svm(_) => continue, // regression band only
        }
    }
    if models.is_empty() {
        return Err(Error::InvalidInput(
            "no SVR models among the matched files".into(),
        ));
    }

    let times: Vec<f64> = (0..args.steps)
        .map(|i| {
            args.t0
                + (args.t1 - args.t0) * i as f64 / (args.steps.max(2) - 1).max(1) as f64
        })
        .collect();
    let x = DMatrix::from_fn(times.len(), 6, |i, j| match j {
        0 => point.period_t,
        1 => point.aniso_ratio.log10(),
        2 => point.kappa_fl,
        3 => point.v0.log10(),
        4 => point.d_m,
        _ => times[i],
    });
    for (j, name) in ["period_T", "log10_aniso_ratio", "kappa_fL", "log10_v0", "D_m"]
        .iter()
        .enumerate()
    {
        let v = x[(0, j)];
        let s = &models[0].scaling;
        if v < s.mins[j] || v > s.maxs[j] {
            eprintln!("warning: {name} = {v} outside the training range [{}, {}]",
                s.mins[j], s.maxs[j]);
        }
    }

    let start = Instant::now();
    let bands = ensemble_predict(&models, &x, true)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut out = String::from("t,mean,lo,hi\n");
    for (t, band) in times.iter().zip(&bands) {
        out.push_str(&format!("{},{},{},{}\n", t, band.0, band.1, band.2));
    }
    match &args.out {
        Some(path) => write_out(path, &out)?,
        None => print!("{out}"),
    }
    let per_1000 = elapsed / (times.len() as f64 * models.len() as f64) * 1000.0;
    eprintln!(
        "{} predictions x {} models in {:.3e} s ({:.3e} s per 1000 evaluations)",
        times.len(),
        models.len(),
        elapsed,
        per_1000
    );
    Ok(())
}

fn features(args: FeaturesArgs) -> Result<()> {
    let target: TargetColumn = args.target.parse()?;
    let species = parse_species(&args.species)?;
    let ds = build_dataset(&args.input, target, species)?;
    // rank the physical sweep parameters; time is a schema column, not a
    // sweep input
    let n_params = 5;
    let x = DMatrix::from_fn(ds.n_rows(), n_params, |i, j| ds.scaled[(i, j)]);
    let names: Vec<String> = ds.feature_names[..n_params].to_vec();
    let report = match args.method.as_str() {
        "ftest" => f_test_importance(&x, &ds.targets, &names)?,
        "mi" => mutual_info_importance(&x, &ds.targets, 3, &names)?,
        "rf" => random_forest_importance(&x, &ds.targets, args.trees, args.seed, &names)?,
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected ftest, mi, or rf)"
            )))
        }
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("csv is utf-8");
    match &args.out {
        Some(path) => write_out(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let ds = build_dataset(&args.input, TargetColumn::DegreeOfMixing, Species::A)?;
    let sims = ds.unique_sims();
    let mut exponents = Vec::with_capacity(sims.len());
    for sim in &sims {
        let idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| &ds.sim_ids[i] == sim).collect();
        let series: Vec<f64> = idx.iter().map(|&i| ds.targets[i]).collect();
        let times: Vec<f64> = idx.iter().map(|&i| ds.times[i]).collect();
        let exponent = mixing_rom::qoi::fit_exponent(
            &series,
            &times,
            mixing_rom::qoi::DEFAULT_FIT_WINDOW,
        )
        .map(|f| f.exponent)
        .unwrap_or(0.0);
        exponents.push(exponent);
    }
    let points = DMatrix::from_column_slice(exponents.len(), 1, &exponents);
    let k = match args.k.as_str() {
        "auto" => elbow_select(&points, 1..=8.min(points.nrows()), args.seed)?,
        s => s
            .parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("k must be a number or 'auto', got '{s}'")))?,
    };
    let result = fit_kmeans(&points, k, args.seed)?;
    let mut out = String::from("sim_id,exponent,cluster\n");
    for ((sim, e), c) in sims.iter().zip(&exponents).zip(&result.assignments) {
        out.push_str(&format!("{sim},{e},{c}\n"));
    }
    match &args.out {
        Some(path) => write_out(path, &out)?,
        None => print!("{out}"),
    }
    eprintln!(
        "k = {}, explained variance fraction = {:.4}",
        result.k, result.explained_variance_fraction
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let options = ReportOptions {
        seed: args.seed,
        ..ReportOptions::default()
    };
    let paths = write_report(&args.input, &args.out, &options)?;
    println!(
        "wrote {} ensemble tables, {}, and {} importance tables to {}",
        paths.qoi_ensembles.len(),
        paths.exponents.display(),
        paths.importances.len(),
        args.out.display()
    );
    Ok(())
}
