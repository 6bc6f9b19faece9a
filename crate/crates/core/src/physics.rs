//! Closed-form velocity field, anisotropic dispersion tensor, invariant
//! transform, initial conditions, and recovery of species A/B/C from the
//! diffusing invariants.
//!
//! All operations here are pure functions of their inputs.

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh_fem::Mesh;

/// Stoichiometric coefficients of the fast bimolecular reaction
/// `n_A A + n_B B -> n_C C`. The rate coefficient cancels from the
/// invariant formulation and is not carried.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stoichiometry {
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
}

impl Stoichiometry {
    pub fn unit() -> Self {
        Stoichiometry {
            n_a: 1.0,
            n_b: 1.0,
            n_c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a > 0.0 && self.n_b > 0.0 && self.n_c > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "stoichiometric coefficients must be strictly positive".into(),
            ))
        }
    }
}

/// Parameters of the vortex-based model velocity field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VelocityConfig {
    /// Spatial scale `kappa_f L` (number of vortex cells per side).
    pub kappa_f_l: f64,
    /// Perturbation amplitude `v_0`.
    pub v0: f64,
    /// Flip period `T`: the perturbation switches component every half period.
    pub period_t: f64,
}

/// Which half of the flip period a time instant falls in.
/// The intervals are half-open, `[nu T, (nu + 1/2) T)` first.
pub fn flip_branch(t: f64, period_t: f64) -> u8 {
    let frac = (t / period_t).fract();
    if frac < 0.5 {
        0
    } else {
        1
    }
}

/// Divergence-free velocity: `v_x` depends only on y, `v_y` only on x, with
/// the `v_0` perturbation alternating between the two components each half
/// period.
pub fn velocity(p: [f64; 2], t: f64, cfg: &VelocityConfig) -> Vector2<f64> {
    let k = 2.0 * std::f64::consts::PI * cfg.kappa_f_l;
    match flip_branch(t, cfg.period_t) {
        0 => Vector2::new(
            (k * p[1]).cos() + cfg.v0 * (k * p[1]).sin(),
            (k * p[0]).cos(),
        ),
        _ => Vector2::new(
            (k * p[1]).cos(),
            (k * p[0]).cos() + cfg.v0 * (k * p[0]).sin(),
        ),
    }
}

/// Longitudinal/transverse diffusivities and molecular diffusivity of the
/// subsurface dispersion tensor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DispersionConfig {
    pub alpha_l: f64,
    pub alpha_t: f64,
    pub d_m: f64,
}

impl DispersionConfig {
    /// `alpha_L = 1`, `alpha_T = 1/ratio`.
    pub fn from_anisotropy_ratio(ratio: f64, d_m: f64) -> Self {
        DispersionConfig {
            alpha_l: 1.0,
            alpha_t: 1.0 / ratio,
            d_m,
        }
    }

    pub fn anisotropy_ratio(&self) -> f64 {
        self.alpha_l / self.alpha_t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_t > 0.0) || self.alpha_l < self.alpha_t || self.d_m < 0.0 {
            return Err(Error::InvalidInput(
                "dispersion requires alpha_L >= alpha_T > 0 and D_m >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Tensor eigenvalues at a point: `D_m + alpha_T ||v||` transverse and
    /// `D_m + alpha_L ||v||` longitudinal.
    pub fn eigenvalues(&self, speed: f64) -> (f64, f64) {
        (
            self.d_m + self.alpha_t * speed,
            self.d_m + self.alpha_l * speed,
        )
    }
}

/// `D = D_m I + alpha_T ||v|| I + ((alpha_L - alpha_T)/||v||) v (x) v`,
/// falling back to `D_m I` when the velocity vanishes (the anisotropic term
/// vanishes continuously as `||v|| -> 0`).
pub fn dispersion_tensor(
    p: [f64; 2],
    t: f64,
    dcfg: &DispersionConfig,
    vcfg: &VelocityConfig,
) -> Matrix2<f64> {
    let v = velocity(p, t, vcfg);
    let speed = v.norm();
    if speed < 1e-12 {
        return Matrix2::identity() * dcfg.d_m;
    }
    let iso = dcfg.d_m + dcfg.alpha_t * speed;
    let aniso = (dcfg.alpha_l - dcfg.alpha_t) / speed;
    Matrix2::new(
        iso + aniso * v.x * v.x,
        aniso * v.x * v.y,
        aniso * v.x * v.y,
        iso + aniso * v.y * v.y,
    )
}

/// All physical and numerical inputs of one simulation run.
/// Serialized as a flat JSON object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(rename = "n_A")]
    pub n_a: f64,
    #[serde(rename = "n_B")]
    pub n_b: f64,
    #[serde(rename = "n_C")]
    pub n_c: f64,
    #[serde(rename = "kappa_fL")]
    pub kappa_f_l: f64,
    pub v0: f64,
    #[serde(rename = "period_T")]
    pub period_t: f64,
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    #[serde(rename = "alpha_T")]
    pub alpha_t: f64,
    #[serde(rename = "D_m")]
    pub d_m: f64,
    pub nodes_per_side: usize,
    pub dt: f64,
    pub end_time: f64,
    pub snapshot_stride: usize,
}

impl SimulationConfig {
    /// Desk-scale default: 21-node mesh, 100 steps of 0.01, moderate
    /// anisotropy. Finishes in seconds while exercising the constrained path.
    pub fn desk_default() -> Self {
        SimulationConfig {
            n_a: 1.0,
            n_b: 1.0,
            n_c: 1.0,
            kappa_f_l: 3.0,
            v0: 0.1,
            period_t: 1e-4,
            alpha_l: 1.0,
            alpha_t: 1e-1,
            d_m: 1e-1,
            nodes_per_side: 21,
            dt: 0.01,
            end_time: 1.0,
            snapshot_stride: 1,
        }
    }

    pub fn stoichiometry(&self) -> Stoichiometry {
        Stoichiometry {
            n_a: self.n_a,
            n_b: self.n_b,
            n_c: self.n_c,
        }
    }

    pub fn velocity_config(&self) -> VelocityConfig {
        VelocityConfig {
            kappa_f_l: self.kappa_f_l,
            v0: self.v0,
            period_t: self.period_t,
        }
    }

    pub fn dispersion_config(&self) -> DispersionConfig {
        DispersionConfig {
            alpha_l: self.alpha_l,
            alpha_t: self.alpha_t,
            d_m: self.d_m,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.end_time / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.stoichiometry().validate()?;
        self.dispersion_config().validate()?;
        if !(self.dt > 0.0) || !(self.end_time > 0.0) {
            return Err(Error::InvalidInput("dt and end_time must be positive".into()));
        }
        let steps = self.end_time / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "end_time/dt = {steps} is not integral"
            )));
        }
        if self.nodes_per_side < 2 {
            return Err(Error::InvalidInput("nodes_per_side must be >= 2".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidInput("snapshot_stride must be >= 1".into()));
        }
        if !(self.period_t > 0.0) || !(self.v0 > 0.0) || !(self.kappa_f_l >= 1.0) {
            return Err(Error::InvalidInput(
                "velocity config requires period_T > 0, v0 > 0, kappa_fL >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Nodal initial invariants: species A fills the left half of the domain,
/// species B the right half, no product. Interface nodes at `x = L/2` get
/// `c_A = c_B = 1/2` so the two halves carry exactly symmetric mass.
pub fn initial_invariants(mesh: &Mesh, stoich: &Stoichiometry) -> (DVector<f64>, DVector<f64>) {
    let n = mesh.n_nodes();
    let half = mesh.domain_length() / 2.0;
    let mut c_f = DVector::zeros(n);
    let mut c_g = DVector::zeros(n);
    let _ = stoich; // c_C0 = 0, so the invariant transform reduces to c_A0 / c_B0
    for (i, p) in mesh.node_coords().iter().enumerate() {
        let (a0, b0) = if p[0] < half {
            (1.0, 0.0)
        } else if p[0] > half {
            (0.0, 1.0)
        } else {
            (0.5, 0.5)
        };
        c_f[i] = a0;
        c_g[i] = b0;
    }
    (c_f, c_g)
}

/// Nodewise recovery of species concentrations from the invariants.
/// Fast kinetics: A and B cannot coexist, so one of them is clipped to zero.
pub fn recover_species(
    c_f: &DVector<f64>,
    c_g: &DVector<f64>,
    stoich: &Stoichiometry,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let n = c_f.len();
    let mut c_a = DVector::zeros(n);
    let mut c_b = DVector::zeros(n);
    let mut c_c = DVector::zeros(n);
    let ab = stoich.n_a / stoich.n_b;
    let ba = stoich.n_b / stoich.n_a;
    let ca = stoich.n_c / stoich.n_a;
    for i in 0..n {
        c_a[i] = (c_f[i] - ab * c_g[i]).max(0.0);
        c_b[i] = ba * (-c_f[i] + ab * c_g[i]).max(0.0);
        c_c[i] = ca * (c_f[i] - c_a[i]);
    }
    (c_a, c_b, c_c)
}
