use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh_fem::{assemble, ActiveSetQp, Activity, AssembledSystem, BoxBounds, Mesh};
use crate::physics::{dispersion_tensor, flip_branch, initial_invariants, SimulationConfig};

/// Species tag for a nodal field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Species {
    A,
    B,
    C,
    F,
    G,
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Species::A => "A",
            Species::B => "B",
            Species::C => "C",
            Species::F => "F",
            Species::G => "G",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Species {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Species::A),
            "B" | "b" => Ok(Species::B),
            "C" | "c" => Ok(Species::C),
            "F" | "f" => Ok(Species::F),
            "G" | "g" => Ok(Species::G),
            other => Err(Error::InvalidInput(format!("unknown species '{other}'"))),
        }
    }
}

/// Nodal concentration vector for one species or invariant at one time level.
#[derive(Debug, Clone)]
pub struct ConcentrationField {
    pub values: DVector<f64>,
    pub species: Species,
    pub time: f64,
}

impl ConcentrationField {
    pub fn new(values: DVector<f64>, species: Species, time: f64) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(ConcentrationField {
            values,
            species,
            time,
        })
    }
}

const QP_TOL: f64 = 1e-10;

/// One backward-Euler step of the diffusing invariant as a box-constrained
/// QP: `H = M/dt + K`, `g = (1/dt) M c_prev` (no volumetric source). The
/// result is clamped exactly onto the bounds after the KKT solve.
pub fn step_invariant(
    c_prev: &ConcentrationField,
    system: &AssembledSystem,
    dt: f64,
    bounds: &BoxBounds,
) -> Result<ConcentrationField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("dt must be positive".into()));
    }
    if !bounds.contains(&c_prev.values, 1e-12) {
        return Err(Error::InvalidInput(
            "previous field violates the step bounds".into(),
        ));
    }
    let h = &system.mass / dt + &system.diffusion;
    let solver = ActiveSetQp::new(h)?;
    let g = (&system.mass * &c_prev.values) / dt;
    let (mut x, _) = solver.solve_warm(&g, bounds, None, QP_TOL)?;
    bounds.clamp(&mut x);
    ConcentrationField::new(x, c_prev.species, c_prev.time + dt)
}

/// Per-step solver diagnostics for one invariant pair.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub time: f64,
    pub mass_f: f64,
    pub mass_g: f64,
    pub m_norm_f: f64,
    pub m_norm_g: f64,
}

/// Full history of one simulation: stored invariant snapshots plus per-step
/// diagnostics. Snapshots always include the initial fields at `t = 0`.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub mesh: Mesh,
    pub mass: DMatrix<f64>,
    /// Stored snapshot times, starting at 0.
    pub times: Vec<f64>,
    pub c_f: Vec<DVector<f64>>,
    pub c_g: Vec<DVector<f64>>,
    /// One entry per time step (not per snapshot), plus the initial state.
    pub diagnostics: Vec<StepDiagnostics>,
    pub bounds_upper: f64,
}

impl SimulationRun {
    pub fn n_snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn integrate(&self, c: &DVector<f64>) -> f64 {
        (&self.mass * c).sum()
    }

    pub fn m_norm(&self, c: &DVector<f64>) -> f64 {
        c.dot(&(&self.mass * c)).max(0.0).sqrt()
    }
}

/// Run the bound-constrained backward-Euler simulation described by the
/// config. The system is reassembled only when the velocity half-period
/// branch at the step's evaluation time changes; both branch systems and
/// their factorizations are cached, and the QP warm-starts from the previous
/// step's active set.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationRun> {
    config.validate()?;
    let mesh = Mesh::build(config.nodes_per_side, 1.0)?;
    let stoich = config.stoichiometry();
    let vcfg = config.velocity_config();
    let dcfg = config.dispersion_config();

    let (c_f0, c_g0) = initial_invariants(&mesh, &stoich);
    let upper = c_f0.max().max(c_g0.max());
    let bounds = BoxBounds::uniform(0.0, upper, mesh.n_nodes())?;

    let n_steps = config.n_steps();
    let dt = config.dt;

    // velocity is piecewise constant in time, so only two dispersion fields
    // can ever occur; cache the assembled system + factorization per branch
    let mut branch_cache: [Option<(AssembledSystem, ActiveSetQp)>; 2] = [None, None];

    let mass = assemble(&mesh, |_p, _t| nalgebra::Matrix2::identity(), 0.0)?.mass;

    let mut c_f = c_f0;
    let mut c_g = c_g0;
    let mut warm_f: Option<Vec<Activity>> = None;
    let mut warm_g: Option<Vec<Activity>> = None;

    let mut times = vec![0.0];
    let mut snaps_f = vec![c_f.clone()];
    let mut snaps_g = vec![c_g.clone()];
    let mut diagnostics = Vec::with_capacity(n_steps + 1);
    let mnorm = |m: &DMatrix<f64>, c: &DVector<f64>| c.dot(&(m * c)).max(0.0).sqrt();
    diagnostics.push(StepDiagnostics {
        time: 0.0,
        mass_f: (&mass * &c_f).sum(),
        mass_g: (&mass * &c_g).sum(),
        m_norm_f: mnorm(&mass, &c_f),
        m_norm_g: mnorm(&mass, &c_g),
    });

    for step in 0..n_steps {
        let t_next = (step + 1) as f64 * dt;
        let branch = flip_branch(t_next, config.period_t) as usize;
        if branch_cache[branch].is_none() {
            let sys = assemble(
                &mesh,
                |p, t| dispersion_tensor(p, t, &dcfg, &vcfg),
                t_next,
            )?;
            let h = &sys.mass / dt + &sys.diffusion;
            let solver = ActiveSetQp::new(h)?;
            branch_cache[branch] = Some((sys, solver));
        }
        let (sys, solver) = branch_cache[branch].as_ref().unwrap();

        let g_f = (&sys.mass * &c_f) / dt;
        let (mut x_f, act_f) = solver.solve_warm(&g_f, &bounds, warm_f.as_deref(), QP_TOL)?;
        bounds.clamp(&mut x_f);
        warm_f = Some(act_f);

        let g_g = (&sys.mass * &c_g) / dt;
        let (mut x_g, act_g) = solver.solve_warm(&g_g, &bounds, warm_g.as_deref(), QP_TOL)?;
        bounds.clamp(&mut x_g);
        warm_g = Some(act_g);

        c_f = x_f;
        c_g = x_g;

        diagnostics.push(StepDiagnostics {
            time: t_next,
            mass_f: (&mass * &c_f).sum(),
            mass_g: (&mass * &c_g).sum(),
            m_norm_f: mnorm(&mass, &c_f),
            m_norm_g: mnorm(&mass, &c_g),
        });

        if (step + 1) % config.snapshot_stride == 0 || step + 1 == n_steps {
            times.push(t_next);
            snaps_f.push(c_f.clone());
            snaps_g.push(c_g.clone());
        }
    }

    Ok(SimulationRun {
        mesh,
        mass,
        times,
        c_f: snaps_f,
        c_g: snaps_g,
        diagnostics,
        bounds_upper: upper,
    })
}
