//! Field algebra: the per-cell array operations the moment solver is written
//! against. `CpuAlg` executes on plain vectors; `TapeAlg` executes the same
//! program on a `tapegrad` tape so a solver step can be differentiated.

use tapegrad::{Tape, Tensor};

use crate::grid::Bc;

pub trait FieldAlg {
    /// A per-cell array of values.
    type F: Clone;
    /// A scalar living on the same computation graph.
    type S: Clone;

    fn constant(&self, v: &[f64]) -> Self::F;
    fn splat(&self, v: f64, n: usize) -> Self::F {
        self.constant(&vec![v; n])
    }
    fn read(&self, f: &Self::F) -> Vec<f64>;
    fn len(&self, f: &Self::F) -> usize;

    fn add(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn sub(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn mul(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn div(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn scale(&self, a: &Self::F, c: f64) -> Self::F;
    fn sqrt(&self, a: &Self::F) -> Self::F;
    fn abs(&self, a: &Self::F) -> Self::F;
    fn minmod(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn min2(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn max2(&self, a: &Self::F, b: &Self::F) -> Self::F;
    fn shift(&self, a: &Self::F, off: isize, bc: Bc) -> Self::F;

    fn reduce_max(&self, a: &Self::F) -> Self::S;
    fn mul_bcast(&self, a: &Self::F, s: &Self::S) -> Self::F;

    fn scalar(&self, v: f64) -> Self::S;
    fn smin(&self, a: &Self::S, b: &Self::S) -> Self::S;
    /// c / s
    fn sdiv_const(&self, c: f64, s: &Self::S) -> Self::S;
    /// exp(c * s)
    fn sexp_scale(&self, s: &Self::S, c: f64) -> Self::S;
    fn sread(&self, s: &Self::S) -> f64;
}

/// Plain `Vec<f64>` execution.
#[derive(Clone, Copy, Debug, Default)]
pub struct CpuAlg;

fn zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

impl FieldAlg for CpuAlg {
    type F = Vec<f64>;
    type S = f64;

    fn constant(&self, v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    fn read(&self, f: &Vec<f64>) -> Vec<f64> {
        f.clone()
    }

    fn len(&self, f: &Vec<f64>) -> usize {
        f.len()
    }

    fn add(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| x + y)
    }

    fn sub(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| x - y)
    }

    fn mul(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| x * y)
    }

    fn div(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| x / y)
    }

    fn scale(&self, a: &Vec<f64>, c: f64) -> Vec<f64> {
        a.iter().map(|x| x * c).collect()
    }

    fn sqrt(&self, a: &Vec<f64>) -> Vec<f64> {
        a.iter().map(|x| x.sqrt()).collect()
    }

    fn abs(&self, a: &Vec<f64>) -> Vec<f64> {
        a.iter().map(|x| x.abs()).collect()
    }

    fn minmod(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| {
            if x * y > 0.0 {
                if x.abs() <= y.abs() {
                    x
                } else {
                    y
                }
            } else {
                0.0
            }
        })
    }

    fn min2(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| if x <= y { x } else { y })
    }

    fn max2(&self, a: &Vec<f64>, b: &Vec<f64>) -> Vec<f64> {
        zip(a, b, |x, y| if x >= y { x } else { y })
    }

    fn shift(&self, a: &Vec<f64>, off: isize, bc: Bc) -> Vec<f64> {
        let n = a.len();
        (0..n).map(|i| a[bc.neighbor(i, off, n)]).collect()
    }

    fn reduce_max(&self, a: &Vec<f64>) -> f64 {
        a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn mul_bcast(&self, a: &Vec<f64>, s: &f64) -> Vec<f64> {
        self.scale(a, *s)
    }

    fn scalar(&self, v: f64) -> f64 {
        v
    }

    fn smin(&self, a: &f64, b: &f64) -> f64 {
        a.min(*b)
    }

    fn sdiv_const(&self, c: f64, s: &f64) -> f64 {
        c / s
    }

    fn sexp_scale(&self, s: &f64, c: f64) -> f64 {
        (c * s).exp()
    }

    fn sread(&self, s: &f64) -> f64 {
        *s
    }
}

/// Execution on a `tapegrad` tape; every operation is recorded for reverse-mode
/// differentiation.
#[derive(Clone)]
pub struct TapeAlg {
    pub tape: Tape,
}

impl TapeAlg {
    pub fn new(tape: Tape) -> Self {
        TapeAlg { tape }
    }
}

impl FieldAlg for TapeAlg {
    type F = Tensor;
    type S = Tensor;

    fn constant(&self, v: &[f64]) -> Tensor {
        self.tape.constant_1d(v.to_vec())
    }

    fn read(&self, f: &Tensor) -> Vec<f64> {
        f.value().to_vec()
    }

    fn len(&self, f: &Tensor) -> usize {
        f.len()
    }

    fn add(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.add(b)
    }

    fn sub(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.sub(b)
    }

    fn mul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.mul(b)
    }

    fn div(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.div(b)
    }

    fn scale(&self, a: &Tensor, c: f64) -> Tensor {
        a.scale(c)
    }

    fn sqrt(&self, a: &Tensor) -> Tensor {
        a.sqrt()
    }

    fn abs(&self, a: &Tensor) -> Tensor {
        a.abs()
    }

    fn minmod(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.minmod(b)
    }

    fn min2(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.min2(b)
    }

    fn max2(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.max2(b)
    }

    fn shift(&self, a: &Tensor, off: isize, bc: Bc) -> Tensor {
        a.shift(off, bc.pad_mode())
    }

    fn reduce_max(&self, a: &Tensor) -> Tensor {
        a.reduce_max()
    }

    fn mul_bcast(&self, a: &Tensor, s: &Tensor) -> Tensor {
        a.mul_bcast(s)
    }

    fn scalar(&self, v: f64) -> Tensor {
        self.tape.scalar(v)
    }

    fn smin(&self, a: &Tensor, b: &Tensor) -> Tensor {
        a.min2(b)
    }

    fn sdiv_const(&self, c: f64, s: &Tensor) -> Tensor {
        s.recip().scale(c)
    }

    fn sexp_scale(&self, s: &Tensor, c: f64) -> Tensor {
        s.scale(c).exp()
    }

    fn sread(&self, s: &Tensor) -> f64 {
        s.scalar_value()
    }
}
