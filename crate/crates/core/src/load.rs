//! Time-dependent boundary displacement programs w(t,x) = ramp(t)·G·x with a
//! piecewise-linear ramp, and their traces on a finite-element space.

use crate::error::{Error, Result};
use crate::space::FeSpace;
use crate::tensor::SymTensor;

/// Piecewise-linear scalar ramp given by (t, value) knots. Absolutely
/// continuous with a tabulated derivative.
#[derive(Debug, Clone)]
pub struct Ramp {
    pub knots: Vec<(f64, f64)>,
}

impl Ramp {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Ramp> {
        if knots.len() < 2 {
            return Err(Error::Config("ramp needs at least two knots".into()));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config("ramp knots must be strictly increasing in t".into()));
            }
        }
        Ok(Ramp { knots })
    }

    /// Identity ramp on [0, t_final].
    pub fn identity(t_final: f64) -> Ramp {
        Ramp {
            knots: vec![(0.0, 0.0), (t_final, t_final)],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                let s = (t - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + s * (w[1].1 - w[0].1);
            }
        }
        unreachable!()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t < k[0].0 || t > k[k.len() - 1].0 {
            return 0.0;
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                return (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            }
        }
        0.0
    }

    /// ∫_a^b ramp'(r)² dr, exact from the table.
    pub fn integral_derivative_sq(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for w in self.knots.windows(2) {
            let lo = w[0].0.max(a);
            let hi = w[1].0.min(b);
            if hi > lo {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                acc += slope * slope * (hi - lo);
            }
        }
        acc
    }

    /// ∫_a^b |ramp'(r)| dr, exact from the table.
    pub fn integral_abs_derivative(&self, a: f64, b: f64) -> f64 {
        let mut acc = 0.0;
        for w in self.knots.windows(2) {
            let lo = w[0].0.max(a);
            let hi = w[1].0.min(b);
            if hi > lo {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                acc += slope.abs() * (hi - lo);
            }
        }
        acc
    }
}

/// Affine-ramp boundary program w(t,x) = ramp(t)·G·x.
#[derive(Debug, Clone)]
pub struct LoadProgram {
    pub g: [[f64; 2]; 2],
    pub ramp: Ramp,
    pub t_final: f64,
}

/// Boundary data at one time: nodal trace of w plus the (spatially constant)
/// boundary strain, which is what the homogeneous mode and the work integral
/// consume.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    /// w evaluated at every vertex, interleaved (x,y).
    pub nodal: Vec<f64>,
    /// E w = ramp(t)·sym(G).
    pub strain: SymTensor,
}

impl LoadProgram {
    pub fn new(g: [[f64; 2]; 2], ramp: Ramp, t_final: f64) -> Result<LoadProgram> {
        if t_final <= 0.0 {
            return Err(Error::Config("t_final must be positive".into()));
        }
        Ok(LoadProgram { g, ramp, t_final })
    }

    pub fn sym_g(&self) -> SymTensor {
        SymTensor::sym_of(&[&self.g[0], &self.g[1]]).expect("2x2 matrix")
    }

    /// Nodal interpolation of w(t,·) at all vertices.
    pub fn dirichlet_lift(&self, fe: &FeSpace, t: f64) -> Vec<f64> {
        let r = self.ramp.value(t);
        let mut out = vec![0.0; 2 * fe.n_vertices()];
        for (v, pos) in fe.mesh.vertices.iter().enumerate() {
            out[2 * v] = r * (self.g[0][0] * pos[0] + self.g[0][1] * pos[1]);
            out[2 * v + 1] = r * (self.g[1][0] * pos[0] + self.g[1][1] * pos[1]);
        }
        out
    }

    pub fn datum(&self, fe: &FeSpace, t: f64) -> BoundaryDatum {
        BoundaryDatum {
            nodal: self.dirichlet_lift(fe, t),
            strain: self.sym_g().scale(self.ramp.value(t)),
        }
    }

    /// ‖E ẇ(t)‖_{L²} = |ramp'(t)| |sym G| √area.
    pub fn strain_rate_l2(&self, fe: &FeSpace, t: f64) -> f64 {
        self.ramp.derivative(t).abs() * self.sym_g().norm() * fe.area().sqrt()
    }

    /// ∫_a^b ‖E ẇ‖_{L²} dr, exact.
    pub fn strain_rate_l2_integral(&self, fe: &FeSpace, a: f64, b: f64) -> f64 {
        self.ramp.integral_abs_derivative(a, b) * self.sym_g().norm() * fe.area().sqrt()
    }

    /// ∫_0^T ‖E ẇ‖²_{L²} dr, exact.
    pub fn strain_rate_l2_sq_total(&self, fe: &FeSpace) -> f64 {
        let s = self.sym_g();
        self.ramp.integral_derivative_sq(0.0, self.t_final) * s.frobenius(&s) * fe.area()
    }
}
