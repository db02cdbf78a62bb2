use serde::{Deserialize, Serialize};

/// Spatial boundary condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    Periodic,
    Replicate,
}

impl Bc {
    pub fn pad_mode(self) -> tapegrad::PadMode {
        match self {
            Bc::Periodic => tapegrad::PadMode::Circular,
            Bc::Replicate => tapegrad::PadMode::Replicate,
        }
    }

    /// Neighbour index with boundary handling.
    #[inline]
    pub fn neighbor(self, j: usize, off: isize, n: usize) -> usize {
        self.pad_mode().map(j as isize + off, n)
    }
}

/// Spatial accuracy of the finite-volume face reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    FirstOrder,
    MusclMinmod,
}

/// Uniform cell grid on [x0, x1]; values live at cell centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

impl XGrid {
    pub fn new(x0: f64, x1: f64, n: usize) -> Self {
        assert!(x1 > x0 && n > 0, "invalid spatial grid [{x0}, {x1}] x {n}");
        XGrid { x0, x1, n }
    }

    pub fn dx(&self) -> f64 {
        (self.x1 - self.x0) / self.n as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x0 + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }
}

/// Uniform velocity grid on [vmin, vmax], sampled at interval midpoints so
/// that sums times `dv` realize the midpoint quadrature rule. The default
/// grid is symmetric, making parity exact: v[k] = -v[n-1-k].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    pub vmin: f64,
    pub vmax: f64,
    pub n: usize,
}

impl VelocityGrid {
    pub fn new(vmin: f64, vmax: f64, n: usize) -> Self {
        assert!(vmax > vmin && n > 0, "invalid velocity grid [{vmin}, {vmax}] x {n}");
        VelocityGrid { vmin, vmax, n }
    }

    /// The default quadrature domain: [-10, 10] with 400 points.
    pub fn standard() -> Self {
        VelocityGrid::new(-10.0, 10.0, 400)
    }

    /// Wider domain used for high-Mach shock profiles.
    pub fn wide() -> Self {
        VelocityGrid::new(-20.0, 20.0, 400)
    }

    pub fn dv(&self) -> f64 {
        (self.vmax - self.vmin) / self.n as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.vmin + (k as f64 + 0.5) * self.dv()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    pub fn max_speed(&self) -> f64 {
        self.vmax.abs().max(self.vmin.abs())
    }
}
