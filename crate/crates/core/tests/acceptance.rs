//! End-to-end acceptance checks. Each test prints one `criterion N: PASS`
//! line on success; a failed assertion marks the criterion as failed.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use mixing_rom::feature_analysis::{
    f_test_importance, fit_kmeans, mutual_info_importance, random_forest_importance,
};
use mixing_rom::mesh_fem::{
    assemble, run_simulation, solve_box_qp, step_invariant, BoxBounds, ConcentrationField, Mesh,
    Species,
};
use mixing_rom::physics::{recover_species, SimulationConfig};
use mixing_rom::pipeline::{
    build_dataset, run_sweep, train_protocol, Dataset, ExperimentProtocol, ProtocolReport,
    SweepSpec, TargetColumn, TrainedModels,
};
use mixing_rom::rom_ml::{
    r2_score, rbf_kernel, solve_smo, svm_predict, svm_train, svr_predict, svr_train,
    MixingClassLabel, RbfKernelParams, SmoProblem,
};

// ---------------------------------------------------------------------------
// shared fixtures

fn sweep_dir() -> &'static std::path::Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let summary = run_sweep(&SweepSpec::desk_default(), dir.path(), 4).expect("sweep");
        assert_eq!(summary.n_runs, 72);
        assert_eq!(summary.n_failed, 0, "desk sweep runs must all succeed");
        dir
    })
    .path()
}

fn mixing_dataset() -> &'static Dataset {
    static DS: OnceLock<Dataset> = OnceLock::new();
    DS.get_or_init(|| {
        build_dataset(sweep_dir(), TargetColumn::DegreeOfMixing, Species::A).expect("dataset")
    })
}

fn protocol(fraction: f64) -> ExperimentProtocol {
    ExperimentProtocol {
        train_fraction: fraction,
        penalties: vec![100.0, 300.0],
        gammas: vec![0.05, 0.1],
        eps_values: vec![0.1],
        split_seed: 0,
    }
}

fn trained() -> &'static Vec<(f64, ProtocolReport, TrainedModels)> {
    static TRAINED: OnceLock<Vec<(f64, ProtocolReport, TrainedModels)>> = OnceLock::new();
    TRAINED.get_or_init(|| {
        [0.01, 0.05, 0.30]
            .into_iter()
            .map(|fraction| {
                let (report, models) =
                    train_protocol(mixing_dataset(), &protocol(fraction)).expect("train");
                (fraction, report, models)
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// criterion 1: box-QP solver vs exhaustive active-set enumeration

/// Independent oracle: enumerate all 3^n activity patterns, solve each
/// pattern's free subsystem, and keep the feasible candidate with the
/// smallest objective.
fn enumerate_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for pattern in 0..3usize.pow(n as u32) {
        let mut state = Vec::with_capacity(n);
        let mut code = pattern;
        for _ in 0..n {
            state.push(code % 3); // 0 = free, 1 = lower, 2 = upper
            code /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = match state[i] {
                1 => lo[i],
                2 => hi[i],
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            let mut h_ff = DMatrix::zeros(free.len(), free.len());
            let mut rhs = DVector::zeros(free.len());
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = g[i];
                for j in 0..n {
                    if state[j] != 0 {
                        rhs[a] -= h[(i, j)] * x[j];
                    }
                }
                for (b, &j) in free.iter().enumerate() {
                    h_ff[(a, b)] = h[(i, j)];
                }
            }
            let Some(chol) = h_ff.cholesky() else { continue };
            let x_f = chol.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                x[i] = x_f[a];
            }
        }
        let feasible = (0..n).all(|i| x[i] >= lo[i] - 1e-9 && x[i] <= hi[i] + 1e-9);
        if !feasible {
            continue;
        }
        let objective = 0.5 * x.dot(&(h * &x)) - g.dot(&x);
        if best.as_ref().map_or(true, |(o, _)| objective < *o) {
            best = Some((objective, x));
        }
    }
    best.expect("at least the fully clamped pattern is feasible").1
}

#[test]
fn criterion_01_qp_matches_enumeration_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for problem in 0..200 {
        let n = rng.gen_range(1..=6);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let h = &a * a.transpose() + DMatrix::identity(n, n) * (0.1 + rng.gen::<f64>());
        let g = DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let lo = DVector::from_fn(n, |_, _| -rng.gen::<f64>());
        let hi = DVector::from_fn(n, |i, _| lo[i] + 0.2 + rng.gen::<f64>());
        let bounds = BoxBounds::new(lo.clone(), hi.clone()).unwrap();

        let solved = solve_box_qp(&h, &g, &bounds, 1e-12).expect("solver");
        let oracle = enumerate_box_qp(&h, &g, &lo, &hi);
        let gap = (&solved - &oracle).amax();
        assert!(gap <= 1e-8, "problem {problem}: deviation {gap:.3e}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1} s");
    println!("criterion 1: PASS (200 problems, max runtime {elapsed:.2} s)");
}

// ---------------------------------------------------------------------------
// criterion 2: conservation, M-norm monotonicity, exact bounds

#[test]
fn criterion_02_conservation_and_monotonicity() {
    let start = Instant::now();
    let run = run_simulation(&SimulationConfig::desk_default()).expect("desk run");
    assert_eq!(run.diagnostics.len(), 101);

    let d0 = &run.diagnostics[0];
    let mut prev = (d0.m_norm_f, d0.m_norm_g);
    for d in &run.diagnostics[1..] {
        assert!((d.mass_f - d0.mass_f).abs() / d0.mass_f <= 1e-6, "F drift");
        assert!((d.mass_g - d0.mass_g).abs() / d0.mass_g <= 1e-6, "G drift");
        assert!(d.m_norm_f <= prev.0 + 1e-12, "F norm rose at t={}", d.time);
        assert!(d.m_norm_g <= prev.1 + 1e-12, "G norm rose at t={}", d.time);
        prev = (d.m_norm_f, d.m_norm_g);
    }
    for field in run.c_f.iter().chain(&run.c_g) {
        assert!(field.iter().all(|&v| (0.0..=run.bounds_upper).contains(&v)));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0);
    println!("criterion 2: PASS (100 steps, runtime {elapsed:.2} s)");
}

// ---------------------------------------------------------------------------
// criterion 3: species recovery consistency on every snapshot

#[test]
fn criterion_03_species_consistency() {
    let config = SimulationConfig::desk_default();
    let stoich = config.stoichiometry();
    let run = run_simulation(&config).expect("desk run");
    for (c_f, c_g) in run.c_f.iter().zip(&run.c_g) {
        let (a, b, c) = recover_species(c_f, c_g, &stoich);
        for i in 0..a.len() {
            assert_eq!(a[i] * b[i], 0.0, "reactants coexist at node {i}");
        }
        let f_rec = &a + &c * (stoich.n_a / stoich.n_c);
        let g_rec = &b + &c * (stoich.n_b / stoich.n_c);
        assert!((c_f - f_rec).amax() <= 1e-12);
        assert!((c_g - g_rec).amax() <= 1e-12);
    }
    println!("criterion 3: PASS ({} snapshots)", run.n_snapshots());
}

// ---------------------------------------------------------------------------
// criterion 4: second-order L2 convergence on a manufactured solution

#[test]
fn criterion_04_l2_convergence_order() {
    let start = Instant::now();
    let diffusivity = 0.1;
    let decay = 2.0 * std::f64::consts::PI.powi(2) * diffusivity;
    let exact = |x: f64, y: f64, t: f64| {
        0.5 + 0.25
            * (std::f64::consts::PI * x).cos()
            * (std::f64::consts::PI * y).cos()
            * (-decay * t).exp()
    };
    let t_end: f64 = 0.016;
    let meshes = [6usize, 11, 21];
    let dts = [8e-4, 2e-4, 5e-5];

    let mut errors = Vec::new();
    for (&n, &dt) in meshes.iter().zip(&dts) {
        let mesh = Mesh::build(n, 1.0).unwrap();
        let system = assemble(
            &mesh,
            |_, _| nalgebra::Matrix2::identity() * diffusivity,
            0.0,
        )
        .unwrap();
        let n_nodes = mesh.n_nodes();
        let bounds = BoxBounds::uniform(0.0, 1.0, n_nodes).unwrap();
        let u0 = DVector::from_fn(n_nodes, |i, _| {
            let [x, y] = mesh.node_coords()[i];
            exact(x, y, 0.0)
        });
        let mut field = ConcentrationField::new(u0, Species::F, 0.0).unwrap();
        let steps = (t_end / dt).round() as usize;
        for _ in 0..steps {
            field = step_invariant(&field, &system, dt, &bounds).unwrap();
        }
        let u_exact = DVector::from_fn(n_nodes, |i, _| {
            let [x, y] = mesh.node_coords()[i];
            exact(x, y, t_end)
        });
        let e = &field.values - u_exact;
        errors.push(system.m_norm_sq(&e).sqrt());
    }
    let order_coarse = (errors[0] / errors[1]).log2();
    let order_fine = (errors[1] / errors[2]).log2();
    for order in [order_coarse, order_fine] {
        assert!(
            (1.7..=2.3).contains(&order),
            "observed order {order:.3}, errors {errors:?}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0);
    println!(
        "criterion 4: PASS (orders {order_coarse:.2}, {order_fine:.2}, runtime {elapsed:.1} s)"
    );
}

// ---------------------------------------------------------------------------
// criterion 5: SMO vs dense projected-gradient dual oracle

/// Projection onto {0 <= a <= c, y^T a = 0} by bisection on the equality
/// multiplier.
fn project_dual(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let eval = |lam: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = v
            .iter()
            .zip(y)
            .map(|(&vi, &yi)| (vi - lam * yi).clamp(0.0, c))
            .collect();
        let residual = a.iter().zip(y).map(|(&ai, &yi)| ai * yi).sum::<f64>();
        (a, residual)
    };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eval(0.5 * (lo + hi)).0
}

fn dense_dual_objective(q: &DMatrix<f64>, p: &[f64], a: &[f64]) -> f64 {
    let av = DVector::from_column_slice(a);
    0.5 * av.dot(&(q * &av)) + p.iter().zip(a).map(|(pi, ai)| pi * ai).sum::<f64>()
}

#[test]
fn criterion_05_dual_solver_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let kernel = RbfKernelParams::new(0.7).unwrap();
    for problem in 0..100 {
        let n = rng.gen_range(3..=8);
        let x = DMatrix::from_fn(n, 2, |_, _| rng.gen::<f64>());
        let y: Vec<f64> = (0..n).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let c = 0.5 + rng.gen::<f64>();
        let smo = solve_smo(
            &SmoProblem {
                x: &x,
                gamma: kernel.gamma,
                y: y.clone(),
                p: p.clone(),
                c,
                base: (0..n).collect(),
            },
            1e-8,
        )
        .expect("smo");

        // feasibility
        let eq: f64 = smo.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(eq.abs() <= 1e-8, "problem {problem}: equality {eq:.3e}");
        assert!(smo
            .alpha
            .iter()
            .all(|&a| (-1e-8..=c + 1e-8).contains(&a)));

        // dense projected-gradient reference
        let mut q = DMatrix::zeros(n, n);
        for t in 0..n {
            for s in 0..n {
                let xt: Vec<f64> = x.row(t).iter().copied().collect();
                let xs: Vec<f64> = x.row(s).iter().copied().collect();
                q[(t, s)] = y[t] * y[s] * rbf_kernel(&xt, &xs, &kernel).unwrap();
            }
        }
        let step = 1.0
            / (0..n)
                .map(|t| (0..n).map(|s| q[(t, s)].abs()).sum::<f64>())
                .fold(0.0f64, f64::max);
        let mut a = vec![0.0; n];
        for _ in 0..200_000 {
            let grad: Vec<f64> = (0..n)
                .map(|t| p[t] + (0..n).map(|s| q[(t, s)] * a[s]).sum::<f64>())
                .collect();
            let v: Vec<f64> = a.iter().zip(&grad).map(|(ai, gi)| ai - step * gi).collect();
            let next = project_dual(&v, &y, c);
            let delta: f64 = next.iter().zip(&a).map(|(x, o)| (x - o).abs()).fold(0.0, f64::max);
            a = next;
            if delta < 1e-13 {
                break;
            }
        }
        let gap = dense_dual_objective(&q, &p, &smo.alpha) - dense_dual_objective(&q, &p, &a);
        assert!(gap.abs() <= 1e-6, "problem {problem}: objective gap {gap:.3e}");
    }

    // separable two-blob classification
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..20 {
        xs.push(0.1 * (rng.gen::<f64>() - 0.5));
        xs.push(0.1 * (rng.gen::<f64>() - 0.5));
        labels.push(MixingClassLabel(1));
    }
    for _ in 0..20 {
        xs.push(1.0 + 0.1 * (rng.gen::<f64>() - 0.5));
        xs.push(1.0 + 0.1 * (rng.gen::<f64>() - 0.5));
        labels.push(MixingClassLabel(2));
    }
    let x = DMatrix::from_row_slice(40, 2, &xs);
    let model = svm_train(&x, &labels, 10.0, RbfKernelParams::new(2.0).unwrap()).unwrap();
    let pred = svm_predict(&model, &x).unwrap();
    assert_eq!(pred, labels, "separable blobs must classify perfectly");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0);
    println!("criterion 5: PASS (100 duals + separable SVM, runtime {elapsed:.1} s)");
}

// ---------------------------------------------------------------------------
// criterion 6: exponential-decay fidelity over the hyperparameter grid

#[test]
fn criterion_06_exponential_kernel_fidelity() {
    let start = Instant::now();
    let train_t: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
    let test_t: Vec<f64> = (0..50).map(|i| (i as f64 + 0.5) / 50.0).collect();
    let target = |t: f64| (-3.0 * t).exp();
    let x_train = DMatrix::from_column_slice(50, 1, &train_t);
    let x_test = DMatrix::from_column_slice(50, 1, &test_t);
    let y_train: Vec<f64> = train_t.iter().map(|&t| target(t)).collect();
    let y_test: Vec<f64> = test_t.iter().map(|&t| target(t)).collect();

    let mut best = f64::NEG_INFINITY;
    for penalty in [1.0, 10.0, 100.0, 1000.0, 10000.0] {
        for gamma in [0.1, 0.01, 0.001, 0.0001] {
            for eps in [0.1, 0.01, 0.001, 0.0001] {
                let model = svr_train(
                    &x_train,
                    &y_train,
                    penalty,
                    eps,
                    RbfKernelParams::new(gamma).unwrap(),
                )
                .expect("train");
                let pred = svr_predict(&model, &x_test, false).unwrap();
                best = best.max(r2_score(&y_test, &pred).unwrap());
            }
        }
    }
    assert!(best >= 0.99, "best grid R^2 = {best:.4}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0);
    println!("criterion 6: PASS (best R^2 = {best:.4}, runtime {elapsed:.1} s)");
}

// ---------------------------------------------------------------------------
// criterion 7: Table-2 style trend on the desk sweep

#[test]
fn criterion_07_training_fraction_trend() {
    let start = Instant::now();
    let results = trained();
    let r2: Vec<f64> = results.iter().map(|(_, r, _)| r.ensemble_r2).collect();
    assert!(r2[2] >= 0.80, "ensemble R^2 at 30% = {:.4}", r2[2]);
    assert!(r2[2] >= r2[1], "R^2(30%) {} < R^2(5%) {}", r2[2], r2[1]);
    assert!(r2[1] >= r2[0], "R^2(5%) {} < R^2(1%) {}", r2[1], r2[0]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 900.0);
    println!(
        "criterion 7: PASS (R^2 = {:.4} / {:.4} / {:.4} for 1% / 5% / 30%, runtime {elapsed:.0} s)",
        r2[0], r2[1], r2[2]
    );
}

// ---------------------------------------------------------------------------
// criterion 8: feature-importance headline ranking

fn parameter_features(ds: &Dataset) -> (DMatrix<f64>, Vec<String>) {
    let n_params = 5;
    (
        DMatrix::from_fn(ds.n_rows(), n_params, |i, j| ds.scaled[(i, j)]),
        ds.feature_names[..n_params].to_vec(),
    )
}

#[test]
fn criterion_08_importance_headline() {
    let start = Instant::now();
    let ds = mixing_dataset();
    let (x, names) = parameter_features(ds);
    let ratio = names
        .iter()
        .position(|n| n == "log10_aniso_ratio")
        .unwrap();
    let period = names.iter().position(|n| n == "period_T").unwrap();

    let reports = [
        f_test_importance(&x, &ds.targets, &names).unwrap(),
        mutual_info_importance(&x, &ds.targets, 3, &names).unwrap(),
        random_forest_importance(&x, &ds.targets, 100, 0, &names).unwrap(),
    ];
    for report in &reports {
        assert_eq!(
            report.ranking[0], ratio,
            "{:?} ranks {} first (scores {:?})",
            report.method, names[report.ranking[0]], report.scores
        );
    }
    let rf = &reports[2];
    assert_eq!(
        *rf.ranking.last().unwrap(),
        period,
        "forest ranks {} last (scores {:?})",
        names[*rf.ranking.last().unwrap()],
        rf.scores
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0);
    println!("criterion 8: PASS (all methods: anisotropy ratio first; forest: period last; runtime {elapsed:.0} s)");
}

// ---------------------------------------------------------------------------
// criterion 9: estimator sanity checks

#[test]
fn criterion_09_estimator_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let names: Vec<String> = vec!["a".into(), "b".into()];

    // MI of independent uniforms
    let n = 1000;
    let x = DMatrix::from_fn(n, 1, |_, _| rng.gen::<f64>());
    let y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let mi = mutual_info_importance(&x, &y, 3, &names[..1]).unwrap().scores[0];
    assert!(mi <= 0.05, "independent MI = {mi:.4}");

    // F-test ranks the exactly linear feature first
    let xf = DMatrix::from_fn(200, 2, |i, j| {
        if j == 0 {
            i as f64 / 200.0
        } else {
            rng.gen::<f64>()
        }
    });
    let yf: Vec<f64> = (0..200).map(|i| 2.0 * xf[(i, 0)] + 1.0).collect();
    let report = f_test_importance(&xf, &yf, &names).unwrap();
    assert_eq!(report.ranking[0], 0);

    // k-means recovers two separated blobs
    let mut pts = Vec::new();
    for _ in 0..60 {
        pts.push(0.1 * (rng.gen::<f64>() - 0.5));
    }
    for _ in 0..60 {
        pts.push(10.0 + 0.1 * (rng.gen::<f64>() - 0.5));
    }
    let points = DMatrix::from_column_slice(120, 1, &pts);
    let clusters = fit_kmeans(&points, 2, 9).unwrap();
    let mut centers: Vec<f64> = clusters.centroids.iter().map(|c| c[0]).collect();
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((centers[0] - 0.0).abs() <= 0.05);
    assert!((centers[1] - 10.0).abs() <= 0.05);

    println!("criterion 9: PASS (MI = {mi:.4}, linear F-test first, blob centroids recovered)");
}

// ---------------------------------------------------------------------------
// criterion 10: surrogate speed vs the FEM solve

#[test]
fn criterion_10_surrogate_speedup() {
    // smallest ensemble member from the 1%-fraction protocol
    let model = trained()[0]
        .2
        .svr_ensemble
        .iter()
        .min_by_key(|m| m.n_support())
        .unwrap();
    assert!(model.n_support() <= 50_000);

    let ds = mixing_dataset();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let n_queries = 10_000;
    let x = DMatrix::from_fn(n_queries, 6, |_, j| {
        ds.scaling.mins[j] + rng.gen::<f64>() * (ds.scaling.maxs[j] - ds.scaling.mins[j])
    });

    let start = Instant::now();
    let pred = svr_predict(model, &x, true).unwrap();
    let predict_seconds = start.elapsed().as_secs_f64();
    assert_eq!(pred.len(), n_queries);
    let throughput = n_queries as f64 / predict_seconds;

    let start = Instant::now();
    run_simulation(&SimulationConfig::desk_default()).expect("desk run");
    let fem_seconds = start.elapsed().as_secs_f64();

    let gap = fem_seconds / (predict_seconds / n_queries as f64);
    assert!(
        throughput >= 1e4,
        "throughput {throughput:.3e} evaluations/s"
    );
    assert!(gap >= 1e4, "speedup gap {gap:.3e}");
    println!(
        "criterion 10: PASS ({:.3e} evaluations/s with {} support vectors, {:.3e}x vs FEM {:.2} s)",
        throughput,
        model.n_support(),
        gap,
        fem_seconds
    );
}

// ---------------------------------------------------------------------------
// criterion 11: determinism of the trend and importance reports

#[test]
fn criterion_11_deterministic_reports() {
    let ds = mixing_dataset();
    let (a, _) = train_protocol(ds, &protocol(0.30)).unwrap();
    let (b, _) = train_protocol(ds, &protocol(0.30)).unwrap();
    assert_eq!(
        a.canonical_json().unwrap(),
        b.canonical_json().unwrap(),
        "training report differs between reruns"
    );

    let (x, names) = parameter_features(ds);
    for run_importance in [
        |x: &DMatrix<f64>, y: &[f64], n: &[String]| f_test_importance(x, y, n).unwrap(),
        |x: &DMatrix<f64>, y: &[f64], n: &[String]| mutual_info_importance(x, y, 3, n).unwrap(),
        |x: &DMatrix<f64>, y: &[f64], n: &[String]| {
            random_forest_importance(x, y, 100, 0, n).unwrap()
        },
    ] {
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        run_importance(&x, &ds.targets, &names)
            .write_csv(&mut csv_a)
            .unwrap();
        run_importance(&x, &ds.targets, &names)
            .write_csv(&mut csv_b)
            .unwrap();
        assert_eq!(csv_a, csv_b, "importance CSV differs between reruns");
    }
    println!("criterion 11: PASS (training and importance reports byte-identical)");
}
