//! Finite-volume solver for the truncated moment system with pluggable
//! closures (Euler / Grad / hyperbolically regularized / neural).

pub mod alg;
pub mod closures;
pub mod solver;

use serde::{Deserialize, Serialize};

use crate::grid::{Bc, Reconstruction};
use crate::hermite::{top_signal_coeff, BasisParams, MacroState, MomentVector};
use alg::{CpuAlg, FieldAlg};
use closures::Closure;
use solver::{StateF, StepOutput};

/// Per-cell canonical moment coefficients on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentField {
    pub cells: Vec<MomentVector>,
    pub bc: Bc,
    pub dx: f64,
}

impl MomentField {
    pub fn new(cells: Vec<MomentVector>, bc: Bc, dx: f64) -> Self {
        assert!(!cells.is_empty() && dx > 0.0);
        let order = cells[0].order();
        assert!(cells.iter().all(|c| c.order() == order), "mixed truncation orders");
        MomentField { cells, bc, dx }
    }

    pub fn uniform_maxwellian(rho: f64, u: f64, theta: f64, nx: usize, order: usize, bc: Bc, dx: f64) -> Self {
        MomentField::new((0..nx).map(|_| MomentVector::maxwellian(rho, u, theta, order)).collect(), bc, dx)
    }

    pub fn nx(&self) -> usize {
        self.cells.len()
    }

    pub fn order(&self) -> usize {
        self.cells[0].order()
    }

    /// Macroscopic fields; cells are canonical so this is a direct read.
    pub fn macro_states(&self) -> Vec<MacroState> {
        self.cells
            .iter()
            .map(|c| MacroState { rho: c.coeffs[0], u: c.basis.u, theta: c.basis.theta })
            .collect()
    }

    /// Heat flux q = 3 f_3 per cell.
    pub fn heat_flux(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.heat_flux()).collect()
    }

    /// Structure-of-arrays view placed into a field algebra.
    pub fn to_state<A: FieldAlg>(&self, alg: &A) -> StateF<A::F> {
        let m = self.order();
        let nx = self.nx();
        let col = |f: &dyn Fn(&MomentVector) -> f64| -> Vec<f64> { self.cells.iter().map(f).collect() };
        let rho = alg.constant(&col(&|c| c.coeffs[0]));
        let u = alg.constant(&col(&|c| c.basis.u));
        let th = alg.constant(&col(&|c| c.basis.theta));
        let mut hi = Vec::with_capacity(m.saturating_sub(2));
        for a in 3..=m {
            hi.push(alg.constant(&(0..nx).map(|j| self.cells[j].coeffs[a]).collect::<Vec<_>>()));
        }
        StateF { rho, u, th, hi }
    }

    /// Rebuild from a structure-of-arrays state.
    pub fn from_state<A: FieldAlg>(alg: &A, state: &StateF<A::F>, bc: Bc, dx: f64) -> Self {
        let m = state.order();
        let rho = alg.read(&state.rho);
        let u = alg.read(&state.u);
        let th = alg.read(&state.th);
        let hi: Vec<Vec<f64>> = state.hi.iter().map(|h| alg.read(h)).collect();
        let cells = (0..rho.len())
            .map(|j| {
                let mut coeffs = vec![0.0; m + 1];
                coeffs[0] = rho[j];
                for a in 3..=m {
                    coeffs[a] = hi[a - 3][j];
                }
                MomentVector::new(coeffs, BasisParams::new(u[j], th[j]))
            })
            .collect();
        MomentField::new(cells, bc, dx)
    }
}

/// Configuration of the moment solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    order: usize,
    signal_coeff: f64,
    pub cfl: f64,
    pub kn: f64,
    pub reconstruction: Reconstruction,
    /// Regularization source with the 1/2 coefficient on the temperature
    /// gradient (the globally hyperbolic form). `false` doubles that term.
    pub hme_theta_half: bool,
}

impl SolverConfig {
    pub fn new(order: usize, kn: f64) -> Self {
        assert!(order >= 3, "truncation order must be at least 3, got {order}");
        assert!(kn > 0.0, "Knudsen number must be positive, got {kn}");
        SolverConfig {
            order,
            signal_coeff: top_signal_coeff(order + 1),
            cfl: 0.45,
            kn,
            reconstruction: Reconstruction::MusclMinmod,
            hme_theta_half: true,
        }
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        assert!(cfl > 0.0 && cfl < 1.0, "CFL number must lie in (0, 1)");
        self.cfl = cfl;
        self
    }

    pub fn with_reconstruction(mut self, r: Reconstruction) -> Self {
        self.reconstruction = r;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// C_{M+1}: largest root magnitude of He_{M+1}.
    pub fn signal_coeff(&self) -> f64 {
        self.signal_coeff
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("non-positive density {value} in cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },
    #[error("non-positive temperature {value} in cell {cell}")]
    NonPositiveTemperature { cell: usize, value: f64 },
    #[error("non-finite value in cell {cell}")]
    NonFinite { cell: usize },
    #[error("time step {dt} exceeds the stability bound {max_dt}")]
    CflViolation { dt: f64, max_dt: f64 },
}

/// A step error with the simulation time at which it occurred.
#[derive(Clone, Debug, thiserror::Error)]
#[error("step failed at t = {time}: {source}")]
pub struct RunFailure {
    pub time: f64,
    #[source]
    pub source: StepError,
}

/// Largest signal speed and the per-interface bounds lambda_{j+1/2}.
pub fn signal_speed_bound(field: &MomentField, cfg: &SolverConfig) -> (f64, Vec<f64>) {
    let c = cfg.signal_coeff();
    let mac = field.macro_states();
    let n = mac.len();
    let lam_max = mac.iter().map(|m| m.u.abs() + c * m.theta.sqrt()).fold(f64::NEG_INFINITY, f64::max);
    let per_iface = (0..n)
        .map(|j| {
            let k = field.bc.neighbor(j, 1, n);
            let lo = (mac[j].u - c * mac[j].theta.sqrt()).min(mac[k].u - c * mac[k].theta.sqrt());
            let hi = (mac[j].u + c * mac[j].theta.sqrt()).max(mac[k].u + c * mac[k].theta.sqrt());
            lo.abs().max(hi.abs())
        })
        .collect();
    (lam_max, per_iface)
}

/// Local Lax-Friedrichs flux between two canonical states, expressed in the
/// arithmetic-mean basis of the pair. The order-(M+1) coefficients of both
/// sides enter through the closure values.
pub fn lf_flux(left: &MomentVector, right: &MomentVector, top_left: f64, top_right: f64, lam: f64) -> (Vec<f64>, BasisParams) {
    assert_eq!(left.order(), right.order());
    let m = left.order();
    let alg = CpuAlg;
    let single = |mv: &MomentVector, top: f64| solver::Side {
        rho: vec![mv.coeffs[0]],
        u: vec![mv.basis.u],
        th: vec![mv.basis.theta],
        hi: (3..=m).map(|a| vec![mv.coeffs[a]]).collect(),
        top: vec![top],
    };
    let l = single(left, top_left);
    let r = single(right, top_right);
    let iface = solver::lf_flux_fields(&alg, &l, &r, &vec![lam], m, 1);
    let flux = iface.flux.iter().map(|f| f[0]).collect();
    (flux, BasisParams::new(iface.u_mean[0], iface.th_mean[0]))
}

/// Relaxation collision for a fixed time step: f_a *= exp(-dt/Kn) for a > 2.
pub fn collision_step(field: &MomentField, kn: f64, dt: f64) -> MomentField {
    assert!(kn > 0.0 && dt >= 0.0);
    let decay = (-dt / kn).exp();
    let cells = field
        .cells
        .iter()
        .map(|c| {
            let mut coeffs = c.coeffs.clone();
            for v in coeffs.iter_mut().skip(3) {
                *v *= decay;
            }
            MomentVector::new(coeffs, c.basis)
        })
        .collect();
    MomentField::new(cells, field.bc, field.dx)
}

/// Finite-volume convection update over an explicit time step (no collision),
/// including the closure's regularization source and the re-centering of
/// every cell.
pub fn convection_step(field: &MomentField, closure: &dyn Closure<CpuAlg>, cfg: &SolverConfig, dt: f64) -> Result<MomentField, StepError> {
    let (lam_max, _) = signal_speed_bound(field, cfg);
    let max_dt = cfg.cfl * field.dx / lam_max;
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(StepError::CflViolation { dt, max_dt });
    }
    let alg = CpuAlg;
    let state = field.to_state(&alg);
    let ctx = closures::ClosureCtx { kn: cfg.kn, dx: field.dx, bc: field.bc, order: cfg.order() };
    let top = closure.top_coeff(&alg, &state, &ctx);
    let out = solver::convection_generic(&alg, &state, &top, cfg, field.dx, field.bc, &dt, closure.hme_source())?;
    Ok(MomentField::from_state(&alg, &out, field.bc, field.dx))
}

/// One full Strang-split step at the CFL time step (optionally capped);
/// returns the new field and the step actually taken.
pub fn step(field: &MomentField, closure: &dyn Closure<CpuAlg>, cfg: &SolverConfig, dt_cap: Option<f64>) -> Result<(MomentField, f64), StepError> {
    let alg = CpuAlg;
    let state = field.to_state(&alg);
    let StepOutput { state: out, dt, .. } = solver::step_generic(&alg, &state, closure, cfg, field.dx, field.bc, dt_cap)?;
    Ok((MomentField::from_state(&alg, &out, field.bc, field.dx), dt))
}

/// March to each requested time (strictly increasing), sub-stepping at the
/// CFL limit and shortening the final sub-step to land exactly.
pub fn run(field: &MomentField, closure: &dyn Closure<CpuAlg>, cfg: &SolverConfig, snapshot_times: &[f64]) -> Result<Vec<MomentField>, RunFailure> {
    let mut out = Vec::with_capacity(snapshot_times.len());
    let mut cur = field.clone();
    let mut t = 0.0;
    for &target in snapshot_times {
        assert!(target >= t - 1e-12, "snapshot times must be non-decreasing");
        while target - t > 1e-12 {
            let (next, dt) = step(&cur, closure, cfg, Some(target - t)).map_err(|source| RunFailure { time: t, source })?;
            cur = next;
            t += dt;
        }
        t = target;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Mass, momentum and energy totals (cell sums times dx).
pub fn conserved_totals(field: &MomentField) -> (f64, f64, f64) {
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for mac in field.macro_states() {
        m0 += mac.rho;
        m1 += mac.momentum();
        m2 += mac.energy();
    }
    (m0 * field.dx, m1 * field.dx, m2 * field.dx)
}

/// Canonicalize a field of raw (possibly mid-step) moment vectors.
pub fn canonicalize_field(cells: Vec<MomentVector>, bc: Bc, dx: f64) -> Result<MomentField, StepError> {
    let canon: Result<Vec<_>, StepError> = cells
        .into_iter()
        .enumerate()
        .map(|(j, mv)| {
            crate::hermite::canonicalize(&mv).map(|(c, _)| c).map_err(|e| match e {
                crate::hermite::MomentError::NonPositiveDensity { value } => StepError::NonPositiveDensity { cell: j, value },
                crate::hermite::MomentError::NonPositiveTemperature { value } => StepError::NonPositiveTemperature { cell: j, value },
            })
        })
        .collect();
    Ok(MomentField::new(canon?, bc, dx))
}
