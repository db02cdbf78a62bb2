use crate::grid::Bc;
use crate::moment::alg::FieldAlg;
use crate::moment::solver::StateF;

/// Context the solver hands to a closure when asking for the order-(M+1)
/// coefficient.
#[derive(Clone, Copy, Debug)]
pub struct ClosureCtx {
    pub kn: f64,
    pub dx: f64,
    pub bc: Bc,
    /// Truncation order M of the state.
    pub order: usize,
}

/// Supplies the order-(M+1) coefficient that closes the truncated moment
/// system, one value per cell, plus the flags steering the solver variants.
pub trait Closure<A: FieldAlg> {
    fn top_coeff(&self, alg: &A, state: &StateF<A::F>, ctx: &ClosureCtx) -> A::F;

    /// Project f_3..f_M to zero after every step (equilibrium closure).
    fn euler_projection(&self) -> bool {
        false
    }

    /// Add the hyperbolic regularization source to the f_M equation.
    fn hme_source(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "closure"
    }
}

/// The closures with explicit hand-derived forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicClosure {
    /// Local-equilibrium closure: zero top coefficient and f_3..f_M projected
    /// to zero after every step.
    Euler,
    /// Truncation closure: f_{M+1} = 0.
    Grad,
    /// Globally hyperbolic regularization: zero flux coefficient plus the
    /// gradient source on the f_M equation.
    Hme,
}

impl<A: FieldAlg> Closure<A> for ClassicClosure {
    fn top_coeff(&self, alg: &A, state: &StateF<A::F>, _ctx: &ClosureCtx) -> A::F {
        alg.splat(0.0, alg.len(&state.rho))
    }

    fn euler_projection(&self) -> bool {
        matches!(self, ClassicClosure::Euler)
    }

    fn hme_source(&self) -> bool {
        matches!(self, ClassicClosure::Hme)
    }

    fn name(&self) -> &'static str {
        match self {
            ClassicClosure::Euler => "euler",
            ClassicClosure::Grad => "grad",
            ClassicClosure::Hme => "hme",
        }
    }
}
