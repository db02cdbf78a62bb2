//! Probabilists' Hermite polynomials He_a, the weighted basis functions
//! H_a(v; u, theta), and all conversions between velocity-space samples,
//! moment coefficients and macroscopic variables.
//!
//! A distribution is approximated as f(v) = sum_a f_a H_a(xi) with
//! xi = (v - u)/sqrt(theta). In the canonical representation the expansion
//! center equals the local macroscopic state, which forces f_1 = f_2 = 0 and
//! f_0 = rho.

use serde::{Deserialize, Serialize};

use crate::grid::VelocityGrid;

/// Expansion center of the weighted Hermite basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    /// Center velocity.
    pub u: f64,
    /// Expansion temperature, strictly positive.
    pub theta: f64,
}

impl BasisParams {
    pub fn new(u: f64, theta: f64) -> Self {
        assert!(theta > 0.0, "basis temperature must be positive, got {theta}");
        BasisParams { u, theta }
    }
}

/// Macroscopic density, bulk velocity and temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

impl MacroState {
    pub fn momentum(&self) -> f64 {
        self.rho * self.u
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.rho * self.u * self.u + 0.5 * self.rho * self.theta
    }

    pub fn pressure(&self) -> f64 {
        self.rho * self.theta
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MomentError {
    #[error("non-positive density {value}")]
    NonPositiveDensity { value: f64 },
    #[error("non-positive temperature {value}")]
    NonPositiveTemperature { value: f64 },
}

/// He_alpha(x) by the three-term recurrence He_{a+1} = x He_a - a He_{a-1}.
pub fn hermite_eval(alpha: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if alpha == 0 {
        return 1.0;
    }
    for a in 1..alpha {
        let next = x * cur - a as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// He_0(x) .. He_max(x) in one sweep.
pub fn hermite_eval_all(max_alpha: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > max_alpha);
    out[0] = 1.0;
    if max_alpha == 0 {
        return;
    }
    out[1] = x;
    for a in 1..max_alpha {
        out[a + 1] = x * out[a] - a as f64 * out[a - 1];
    }
}

/// All real roots of He_n, sorted ascending. Computed as the eigenvalues of
/// the Jacobi matrix of the weight exp(-x^2/2) (off-diagonals sqrt(k)); the
/// spectrum is symmetric about 0 and is symmetrized exactly before returning.
pub fn hermite_roots(n: usize) -> Vec<f64> {
    assert!(n >= 1, "hermite_roots requires n >= 1");
    let mut j = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let mut roots: Vec<f64> = j.symmetric_eigen().eigenvalues.iter().copied().collect();
    roots.sort_by(|a, b| a.partial_cmp(b).expect("real eigenvalues"));
    // Pairwise symmetrization removes the last bits of asymmetry.
    let m = n / 2;
    for i in 0..m {
        let v = 0.5 * (roots[n - 1 - i] - roots[i]);
        roots[i] = -v;
        roots[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        roots[m] = 0.0;
    }
    roots
}

/// Largest characteristic-speed coefficient: max |root of He_{m+1}|.
pub fn top_signal_coeff(m: usize) -> f64 {
    let roots = hermite_roots(m + 1);
    roots.last().copied().expect("nonempty roots").abs()
}

const SQRT_TAU: f64 = 2.5066282746310002; // sqrt(2*pi)

/// Weighted basis function H_alpha(v; u, theta).
pub fn basis_eval(alpha: usize, v: f64, basis: BasisParams) -> f64 {
    let xi = (v - basis.u) / basis.theta.sqrt();
    let w = (-0.5 * xi * xi).exp() / SQRT_TAU;
    basis.theta.powf(-((alpha as f64 + 1.0) / 2.0)) * hermite_eval(alpha, xi) * w
}

/// Maxwellian equilibrium rho/sqrt(2 pi theta) exp(-(v-u)^2/(2 theta)).
pub fn maxwellian(rho: f64, u: f64, theta: f64, v: f64) -> f64 {
    debug_assert!(rho > 0.0 && theta > 0.0);
    let d = v - u;
    rho / (SQRT_TAU * theta.sqrt()) * (-0.5 * d * d / theta).exp()
}

/// Moment coefficients f_0..f_M of one distribution in one basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub coeffs: Vec<f64>,
    pub basis: BasisParams,
}

impl MomentVector {
    pub fn new(coeffs: Vec<f64>, basis: BasisParams) -> Self {
        assert!(!coeffs.is_empty());
        MomentVector { coeffs, basis }
    }

    /// Maxwellian state: coefficients [rho, 0, ..., 0] in its own basis.
    pub fn maxwellian(rho: f64, u: f64, theta: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = rho;
        MomentVector { coeffs, basis: BasisParams::new(u, theta) }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Heat flux q = 3 f_3.
    pub fn heat_flux(&self) -> f64 {
        3.0 * self.coeffs.get(3).copied().unwrap_or(0.0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Fraction of the largest sample magnitude still present at the endpoints of
/// the quadrature grid; large values mean the domain truncates the support.
pub fn endpoint_mass_ratio(samples: &[f64]) -> f64 {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    samples.first().unwrap().abs().max(samples.last().unwrap().abs()) / peak
}

/// Project velocity samples onto the basis: f_a = theta^{a/2}/a! *
/// sum_k f(v_k) He_a((v_k - u)/sqrt(theta)) dv (midpoint rule).
pub fn project_to_moments(samples: &[f64], grid: &VelocityGrid, basis: BasisParams, order: usize) -> MomentVector {
    assert_eq!(samples.len(), grid.n, "sample count does not match the velocity grid");
    if endpoint_mass_ratio(samples) > 1e-10 {
        log::warn!(
            "quadrature domain [{}, {}] truncates the distribution (endpoint ratio {:.3e})",
            grid.vmin,
            grid.vmax,
            endpoint_mass_ratio(samples)
        );
    }
    let dv = grid.dv();
    let sq = basis.theta.sqrt();
    let mut sums = vec![0.0; order + 1];
    let mut he = vec![0.0; order + 1];
    for (k, &f) in samples.iter().enumerate() {
        let xi = (grid.point(k) - basis.u) / sq;
        hermite_eval_all(order, xi, &mut he);
        for (s, h) in sums.iter_mut().zip(&he) {
            *s += f * h;
        }
    }
    let coeffs = sums
        .iter()
        .enumerate()
        .map(|(a, s)| basis.theta.powf(a as f64 / 2.0) / factorial(a) * s * dv)
        .collect();
    MomentVector { coeffs, basis }
}

/// Evaluate the truncated expansion at one velocity.
pub fn eval_distribution(mv: &MomentVector, v: f64) -> f64 {
    let sq = mv.basis.theta.sqrt();
    let xi = (v - mv.basis.u) / sq;
    let w = (-0.5 * xi * xi).exp() / SQRT_TAU;
    let mut he = vec![0.0; mv.coeffs.len()];
    hermite_eval_all(mv.order(), xi, &mut he);
    let mut acc = 0.0;
    let mut scale = 1.0 / sq; // theta^{-(a+1)/2}
    for (f, h) in mv.coeffs.iter().zip(&he) {
        acc += f * h * scale;
        scale /= sq;
    }
    acc * w
}

/// Macroscopic state of a possibly mid-step (non-canonical) moment vector:
/// rho = f_0, momentum = u f_0 + f_1, E = (u^2 + theta) f_0 / 2 + u f_1 + f_2.
pub fn macro_from_moments(mv: &MomentVector) -> Result<MacroState, MomentError> {
    let f0 = mv.coeffs[0];
    let f1 = mv.coeffs.get(1).copied().unwrap_or(0.0);
    let f2 = mv.coeffs.get(2).copied().unwrap_or(0.0);
    if !(f0 > 0.0) {
        return Err(MomentError::NonPositiveDensity { value: f0 });
    }
    let (u0, th0) = (mv.basis.u, mv.basis.theta);
    let m = u0 * f0 + f1;
    let e = 0.5 * (u0 * u0 + th0) * f0 + u0 * f1 + f2;
    let u = m / f0;
    let theta = (2.0 * e - f0 * u * u) / f0;
    if !(theta > 0.0) {
        return Err(MomentError::NonPositiveTemperature { value: theta });
    }
    Ok(MacroState { rho: f0, u, theta })
}

/// Convolution kernel for an exact change of expansion center. The
/// coefficients of the same function in the target basis are
/// g_a = sum_n d_n f_{a-n}, where d solves n d_n = du d_{n-1} + dth d_{n-2}
/// with du = u_src - u_dst and dth = theta_src - theta_dst.
pub fn basis_shift_kernel(du: f64, dth: f64, len: usize) -> Vec<f64> {
    let mut d = vec![0.0; len];
    if len > 0 {
        d[0] = 1.0;
    }
    if len > 1 {
        d[1] = du;
    }
    for n in 2..len {
        d[n] = (du * d[n - 1] + dth * d[n - 2]) / n as f64;
    }
    d
}

/// Coefficients of the same function in a new basis, truncated at the same
/// order. Conserves the rho/momentum/energy moments exactly (they are linear
/// combinations of orders <= 2, which the triangular kernel reproduces).
pub fn rebase_moments(mv: &MomentVector, new_basis: BasisParams) -> MomentVector {
    let n = mv.coeffs.len();
    let d = basis_shift_kernel(mv.basis.u - new_basis.u, mv.basis.theta - new_basis.theta, n);
    let mut coeffs = vec![0.0; n];
    for (a, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..=a {
            acc += d[k] * mv.coeffs[a - k];
        }
        *c = acc;
    }
    MomentVector { coeffs, basis: new_basis }
}

/// Re-center onto the local macroscopic state; f_1 and f_2 are analytically
/// zero there and are zeroed exactly to remove round-off residue.
pub fn canonicalize(mv: &MomentVector) -> Result<(MomentVector, MacroState), MomentError> {
    let mac = macro_from_moments(mv)?;
    let mut out = rebase_moments(mv, BasisParams::new(mac.u, mac.theta));
    out.coeffs[1] = 0.0;
    if out.coeffs.len() > 2 {
        out.coeffs[2] = 0.0;
    }
    Ok((out, mac))
}

/// Coefficients of v * f in the same basis:
/// g_a = u f_a + theta f_{a-1} + (a+1) f_{a+1}, with the order-(M+1)
/// coefficient supplied by the closure.
pub fn vmultiply_coeffs(mv: &MomentVector, f_top: f64) -> Vec<f64> {
    let m = mv.order();
    let (u, th) = (mv.basis.u, mv.basis.theta);
    (0..=m)
        .map(|a| {
            let below = if a == 0 { 0.0 } else { mv.coeffs[a - 1] };
            let above = if a == m { f_top } else { mv.coeffs[a + 1] };
            u * mv.coeffs[a] + th * below + (a + 1) as f64 * above
        })
        .collect()
}
