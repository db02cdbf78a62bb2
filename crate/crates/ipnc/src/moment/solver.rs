//! Generic finite-volume machinery for the truncated moment system: analytic
//! relaxation collision, local Lax-Friedrichs flux between cells rebased to
//! the interface-mean basis, optional MUSCL-minmod reconstruction, and
//! re-centering onto the local macroscopic state after every update.
//!
//! Everything is written against [`FieldAlg`], so the identical program runs
//! on plain vectors or on an autodiff tape.

use crate::grid::{Bc, Reconstruction};
use crate::moment::alg::FieldAlg;
use crate::moment::closures::{Closure, ClosureCtx};
use crate::moment::{SolverConfig, StepError};

/// Canonical per-cell state as parallel arrays: density, bulk velocity,
/// temperature, and the higher coefficients f_3..f_M.
#[derive(Clone)]
pub struct StateF<F> {
    pub rho: F,
    pub u: F,
    pub th: F,
    pub hi: Vec<F>,
}

impl<F> StateF<F> {
    /// Truncation order M.
    pub fn order(&self) -> usize {
        self.hi.len() + 2
    }
}

pub struct StepOutput<A: FieldAlg> {
    pub state: StateF<A::F>,
    /// Time-step value actually taken.
    pub dt: f64,
    /// The same time step as a graph scalar (gradients flow through it).
    pub dt_s: A::S,
}

/// Interface data: flux coefficients 0..M in the mean basis of each
/// interface, plus that basis.
pub(crate) struct InterfaceFlux<F> {
    pub(crate) flux: Vec<F>,
    pub(crate) u_mean: F,
    pub(crate) th_mean: F,
}

/// Reconstructed face values of one primitive channel.
struct Faces<F> {
    /// Value at the cell's right face.
    plus: F,
    /// Value at the cell's left face.
    minus: F,
}

fn reconstruct<A: FieldAlg>(alg: &A, w: &A::F, bc: Bc, recon: Reconstruction) -> Faces<A::F> {
    match recon {
        Reconstruction::FirstOrder => Faces { plus: w.clone(), minus: w.clone() },
        Reconstruction::MusclMinmod => {
            let wp = alg.shift(w, 1, bc);
            let wm = alg.shift(w, -1, bc);
            let slope = alg.minmod(&alg.sub(&wp, w), &alg.sub(w, &wm));
            let half = alg.scale(&slope, 0.5);
            Faces { plus: alg.add(w, &half), minus: alg.sub(w, &half) }
        }
    }
}

/// Convolution with the basis-shift kernel: out_a = sum_k d_k c_{a-k}.
/// `coeffs` entries of `None` are identically zero; d_0 = 1 is implicit.
fn shift_convolve<A: FieldAlg>(alg: &A, d: &[A::F], coeffs: &[Option<A::F>], out_len: usize) -> Vec<Option<A::F>> {
    let mut out = Vec::with_capacity(out_len);
    for a in 0..out_len {
        let mut acc: Option<A::F> = None;
        for k in 0..=a.min(d.len() - 1) {
            if a - k >= coeffs.len() {
                continue;
            }
            let Some(c) = &coeffs[a - k] else { continue };
            let term = if k == 0 { c.clone() } else { alg.mul(&d[k], c) };
            acc = Some(match acc {
                None => term,
                Some(prev) => alg.add(&prev, &term),
            });
        }
        out.push(acc);
    }
    out
}

/// Kernel fields d_0..d_{len-1} for a per-cell change of expansion center:
/// n d_n = du d_{n-1} + dth d_{n-2}.
fn shift_kernel_fields<A: FieldAlg>(alg: &A, du: &A::F, dth: &A::F, len: usize, n: usize) -> Vec<A::F> {
    let mut d = Vec::with_capacity(len);
    d.push(alg.splat(1.0, n));
    if len > 1 {
        d.push(du.clone());
    }
    for k in 2..len {
        let t1 = alg.mul(du, &d[k - 1]);
        let t2 = alg.mul(dth, &d[k - 2]);
        d.push(alg.scale(&alg.add(&t1, &t2), 1.0 / k as f64));
    }
    d
}

fn unwrap_or_zero<A: FieldAlg>(alg: &A, f: Option<A::F>, n: usize) -> A::F {
    f.unwrap_or_else(|| alg.splat(0.0, n))
}

/// One side of an interface: canonical primitive values plus the closure
/// coefficient inherited from the owning cell.
pub(crate) struct Side<F> {
    pub(crate) rho: F,
    pub(crate) u: F,
    pub(crate) th: F,
    pub(crate) hi: Vec<F>,
    pub(crate) top: F,
}

impl<F: Clone> Side<F> {
    fn shifted<A: FieldAlg<F = F>>(&self, alg: &A, off: isize, bc: Bc) -> Side<F> {
        Side {
            rho: alg.shift(&self.rho, off, bc),
            u: alg.shift(&self.u, off, bc),
            th: alg.shift(&self.th, off, bc),
            hi: self.hi.iter().map(|h| alg.shift(h, off, bc)).collect(),
            top: alg.shift(&self.top, off, bc),
        }
    }
}

/// Local Lax-Friedrichs flux across one set of interfaces, computed in the
/// arithmetic-mean basis of the two sides. `lam` is the per-interface signal
/// speed bound.
pub(crate) fn lf_flux_fields<A: FieldAlg>(alg: &A, left: &Side<A::F>, right: &Side<A::F>, lam: &A::F, m: usize, n: usize) -> InterfaceFlux<A::F> {
    let u_mean = alg.scale(&alg.add(&left.u, &right.u), 0.5);
    let th_mean = alg.scale(&alg.add(&left.th, &right.th), 0.5);

    // Extended coefficient vectors (orders 0..=M+1) of both sides, rebased to
    // the mean basis.
    let rebased = |side: &Side<A::F>| -> Vec<Option<A::F>> {
        let du = alg.sub(&side.u, &u_mean);
        let dth = alg.sub(&side.th, &th_mean);
        let d = shift_kernel_fields(alg, &du, &dth, m + 2, n);
        let mut coeffs: Vec<Option<A::F>> = Vec::with_capacity(m + 2);
        coeffs.push(Some(side.rho.clone()));
        coeffs.push(None);
        coeffs.push(None);
        for h in &side.hi {
            coeffs.push(Some(h.clone()));
        }
        coeffs.push(Some(side.top.clone()));
        shift_convolve(alg, &d, &coeffs, m + 2)
    };
    let gl = rebased(left);
    let gr = rebased(right);

    // v-multiplication in the mean basis: q_a = u g_a + th g_{a-1} + (a+1) g_{a+1}.
    let vmult = |g: &[Option<A::F>]| -> Vec<A::F> {
        (0..=m)
            .map(|a| {
                let mut acc: Option<A::F> = g[a].as_ref().map(|ga| alg.mul(&u_mean, ga));
                if a >= 1 {
                    if let Some(gb) = &g[a - 1] {
                        let t = alg.mul(&th_mean, gb);
                        acc = Some(match acc {
                            None => t,
                            Some(p) => alg.add(&p, &t),
                        });
                    }
                }
                if let Some(gg) = &g[a + 1] {
                    let t = alg.scale(gg, (a + 1) as f64);
                    acc = Some(match acc {
                        None => t,
                        Some(p) => alg.add(&p, &t),
                    });
                }
                unwrap_or_zero(alg, acc, n)
            })
            .collect()
    };
    let ql = vmult(&gl);
    let qr = vmult(&gr);

    let flux = (0..=m)
        .map(|a| {
            let central = alg.scale(&alg.add(&ql[a], &qr[a]), 0.5);
            let l = unwrap_or_zero(alg, gl[a].clone(), n);
            let r = unwrap_or_zero(alg, gr[a].clone(), n);
            let jump = alg.sub(&r, &l);
            alg.sub(&central, &alg.scale(&alg.mul(lam, &jump), 0.5))
        })
        .collect();

    InterfaceFlux { flux, u_mean, th_mean }
}

/// Relaxation collision over a time `dt_s`: f_a *= exp(-dt/Kn) for a > 2;
/// density, velocity and temperature are untouched.
pub fn collision_generic<A: FieldAlg>(alg: &A, state: &StateF<A::F>, kn: f64, dt_s: &A::S) -> StateF<A::F> {
    let decay = alg.sexp_scale(dt_s, -1.0 / kn);
    StateF {
        rho: state.rho.clone(),
        u: state.u.clone(),
        th: state.th.clone(),
        hi: state.hi.iter().map(|h| alg.mul_bcast(h, &decay)).collect(),
    }
}

/// Finite-volume convection update over `dt_s` with the given per-cell
/// closure coefficients; re-centers every cell afterwards. With `hme_source`
/// the hyperbolic-regularization term is added to the f_M equation.
pub fn convection_generic<A: FieldAlg>(
    alg: &A,
    state: &StateF<A::F>,
    top: &A::F,
    cfg: &SolverConfig,
    dx: f64,
    bc: Bc,
    dt_s: &A::S,
    hme_source: bool,
) -> Result<StateF<A::F>, StepError> {
    let m = cfg.order;
    let n = alg.len(&state.rho);
    let c_top = cfg.signal_coeff();
    let csq = alg.scale(&alg.sqrt(&state.th), c_top);

    // Face reconstruction of the primitive tuple.
    let faces_rho = reconstruct(alg, &state.rho, bc, cfg.reconstruction);
    let faces_u = reconstruct(alg, &state.u, bc, cfg.reconstruction);
    let faces_th = reconstruct(alg, &state.th, bc, cfg.reconstruction);
    let faces_hi: Vec<Faces<A::F>> = state.hi.iter().map(|h| reconstruct(alg, h, bc, cfg.reconstruction)).collect();

    // Signal-speed bound per right interface from cell-centered values.
    let minus = alg.sub(&state.u, &csq);
    let plus = alg.add(&state.u, &csq);
    let lam_right = {
        let lo = alg.min2(&minus, &alg.shift(&minus, 1, bc));
        let hi = alg.max2(&plus, &alg.shift(&plus, 1, bc));
        alg.max2(&alg.abs(&lo), &alg.abs(&hi))
    };

    let own_plus = Side {
        rho: faces_rho.plus.clone(),
        u: faces_u.plus.clone(),
        th: faces_th.plus.clone(),
        hi: faces_hi.iter().map(|f| f.plus.clone()).collect(),
        top: top.clone(),
    };
    let own_minus = Side {
        rho: faces_rho.minus.clone(),
        u: faces_u.minus.clone(),
        th: faces_th.minus.clone(),
        hi: faces_hi.iter().map(|f| f.minus.clone()).collect(),
        top: top.clone(),
    };
    let right = lf_flux_fields(alg, &own_plus, &own_minus.shifted(alg, 1, bc), &lam_right, m, n);

    // Flux through the left interface. Under periodic boundaries it is a pure
    // shift of the right-interface data; with replicate boundaries the edge
    // interface pairs the ghost copy of the edge cell with itself, which the
    // shifted reconstruction realizes exactly (edge slopes vanish).
    let left = match bc {
        Bc::Periodic => InterfaceFlux {
            flux: right.flux.iter().map(|f| alg.shift(f, -1, bc)).collect(),
            u_mean: alg.shift(&right.u_mean, -1, bc),
            th_mean: alg.shift(&right.th_mean, -1, bc),
        },
        Bc::Replicate => {
            let lam_left = {
                let lo = alg.min2(&alg.shift(&minus, -1, bc), &minus);
                let hi = alg.max2(&alg.shift(&plus, -1, bc), &plus);
                alg.max2(&alg.abs(&lo), &alg.abs(&hi))
            };
            lf_flux_fields(alg, &own_plus.shifted(alg, -1, bc), &own_minus, &lam_left, m, n)
        }
    };

    // Rebase both flux vectors to the cell's own basis and update.
    let rebase_flux = |iface: &InterfaceFlux<A::F>| -> Vec<Option<A::F>> {
        let du = alg.sub(&iface.u_mean, &state.u);
        let dth = alg.sub(&iface.th_mean, &state.th);
        let d = shift_kernel_fields(alg, &du, &dth, m + 1, n);
        let coeffs: Vec<Option<A::F>> = iface.flux.iter().map(|f| Some(f.clone())).collect();
        shift_convolve(alg, &d, &coeffs, m + 1)
    };
    let fr = rebase_flux(&right);
    let fl = rebase_flux(&left);

    let scale_dt = |f: &A::F| alg.scale(&alg.mul_bcast(f, dt_s), -1.0 / dx);
    let mut coeffs: Vec<A::F> = Vec::with_capacity(m + 1);
    for a in 0..=m {
        let base = match a {
            0 => Some(state.rho.clone()),
            1 | 2 => None,
            _ => Some(state.hi[a - 3].clone()),
        };
        let diff = match (&fr[a], &fl[a]) {
            (Some(r), Some(l)) => Some(alg.sub(r, l)),
            (Some(r), None) => Some(r.clone()),
            (None, Some(l)) => Some(alg.scale(l, -1.0)),
            (None, None) => None,
        };
        let c = match (base, diff) {
            (Some(b), Some(d)) => alg.add(&b, &scale_dt(&d)),
            (Some(b), None) => b,
            (None, Some(d)) => scale_dt(&d),
            (None, None) => alg.splat(0.0, n),
        };
        coeffs.push(c);
    }

    // Hyperbolic regularization source on the f_M equation, central
    // differences of u and theta.
    if hme_source && m >= 3 {
        let cdiff = |w: &A::F| alg.scale(&alg.sub(&alg.shift(w, 1, bc), &alg.shift(w, -1, bc)), 0.5 / dx);
        let ux = cdiff(&state.u);
        let thx = cdiff(&state.th);
        let f_m = &state.hi[m - 3];
        let mut r = alg.mul(f_m, &ux);
        if m >= 4 {
            let theta_coeff = if cfg.hme_theta_half { 0.5 } else { 1.0 };
            let f_m1 = &state.hi[m - 4];
            r = alg.add(&r, &alg.scale(&alg.mul(f_m1, &thx), theta_coeff));
        }
        let r = alg.scale(&r, (m + 1) as f64);
        coeffs[m] = alg.add(&coeffs[m], &alg.mul_bcast(&r, dt_s));
    }

    // Re-center: macroscopic state of the mid-step coefficients, then the
    // exact basis shift onto it; f_1 and f_2 vanish there analytically and
    // are dropped.
    let rho_new = coeffs[0].clone();
    let mom = alg.add(&alg.mul(&state.u, &coeffs[0]), &coeffs[1]);
    let u2th = alg.add(&alg.mul(&state.u, &state.u), &state.th);
    let energy = {
        let t0 = alg.scale(&alg.mul(&u2th, &coeffs[0]), 0.5);
        let t1 = alg.mul(&state.u, &coeffs[1]);
        alg.add(&alg.add(&t0, &t1), &coeffs[2])
    };
    let u_new = alg.div(&mom, &rho_new);
    let th_new = {
        let two_e = alg.scale(&energy, 2.0);
        alg.sub(&alg.div(&two_e, &rho_new), &alg.mul(&u_new, &u_new))
    };

    let rho_v = alg.read(&rho_new);
    let th_v = alg.read(&th_new);
    for j in 0..n {
        if !rho_v[j].is_finite() || !th_v[j].is_finite() {
            return Err(StepError::NonFinite { cell: j });
        }
        if rho_v[j] <= 0.0 {
            return Err(StepError::NonPositiveDensity { cell: j, value: rho_v[j] });
        }
        if th_v[j] <= 0.0 {
            return Err(StepError::NonPositiveTemperature { cell: j, value: th_v[j] });
        }
    }

    let hi_new = if m >= 3 {
        let du = alg.sub(&state.u, &u_new);
        let dth = alg.sub(&state.th, &th_new);
        let d = shift_kernel_fields(alg, &du, &dth, m + 1, n);
        let coeffs_opt: Vec<Option<A::F>> = coeffs.iter().map(|c| Some(c.clone())).collect();
        let rec = shift_convolve(alg, &d, &coeffs_opt, m + 1);
        rec.into_iter().skip(3).map(|c| unwrap_or_zero(alg, c, n)).collect()
    } else {
        Vec::new()
    };

    Ok(StateF { rho: rho_new, u: u_new, th: th_new, hi: hi_new })
}

/// CFL time step: cfl * dx / max_j (|u_j| + C sqrt(th_j)), optionally capped.
pub fn cfl_dt<A: FieldAlg>(alg: &A, state: &StateF<A::F>, cfg: &SolverConfig, dx: f64, dt_cap: Option<f64>) -> A::S {
    let csq = alg.scale(&alg.sqrt(&state.th), cfg.signal_coeff());
    let speed = alg.add(&alg.abs(&state.u), &csq);
    let lam_max = alg.reduce_max(&speed);
    let mut dt_s = alg.sdiv_const(cfg.cfl * dx, &lam_max);
    if let Some(cap) = dt_cap {
        dt_s = alg.smin(&dt_s, &alg.scalar(cap));
    }
    dt_s
}

/// One full step: CFL time step, closure on the incoming state, half
/// collision, convection, half collision, and the closure's post-projection.
pub fn step_generic<A: FieldAlg>(
    alg: &A,
    state: &StateF<A::F>,
    closure: &dyn Closure<A>,
    cfg: &SolverConfig,
    dx: f64,
    bc: Bc,
    dt_cap: Option<f64>,
) -> Result<StepOutput<A>, StepError> {
    let m = cfg.order;
    assert_eq!(state.order(), m, "state order {} does not match config order {m}", state.order());
    let n = alg.len(&state.rho);

    let dt_s = cfl_dt(alg, state, cfg, dx, dt_cap);
    let dt = alg.sread(&dt_s);
    if !dt.is_finite() || dt <= 0.0 {
        return Err(StepError::NonFinite { cell: 0 });
    }

    let ctx = ClosureCtx { kn: cfg.kn, dx, bc, order: m };
    let top = closure.top_coeff(alg, state, &ctx);

    // Strang halves share one decay factor exp(-(dt/2)/Kn).
    let decay = alg.sexp_scale(&dt_s, -0.5 / cfg.kn);
    let relax = |s: &StateF<A::F>| StateF {
        rho: s.rho.clone(),
        u: s.u.clone(),
        th: s.th.clone(),
        hi: s.hi.iter().map(|h| alg.mul_bcast(h, &decay)).collect(),
    };
    let s1 = relax(state);
    let s2 = convection_generic(alg, &s1, &top, cfg, dx, bc, &dt_s, closure.hme_source())?;
    let mut s3 = relax(&s2);
    if closure.euler_projection() {
        s3.hi = (0..s3.hi.len()).map(|_| alg.splat(0.0, n)).collect();
    }
    Ok(StepOutput { state: s3, dt, dt_s })
}
