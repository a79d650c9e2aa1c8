//! One time slice of the coupled evolution.

use crate::space::{FeSpace, M};

/// State at one time: damage α (nodal scalar in [0,1]), displacement u
/// (nodal vector), elastic strain e (elementwise Voigt), plastic strain p
/// (nodal Voigt).
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub alpha: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub p: Vec<f64>,
}

impl State {
    /// Sound, unloaded state: α ≡ 1, everything else zero.
    pub fn sound(fe: &FeSpace) -> State {
        State {
            t: 0.0,
            alpha: vec![1.0; fe.n_vertices()],
            u: vec![0.0; 2 * fe.n_vertices()],
            e: vec![0.0; M * fe.n_elements()],
            p: vec![0.0; M * fe.n_vertices()],
        }
    }

    /// Max nodewise violation of 0 ≤ α ≤ 1.
    pub fn box_violation(&self) -> f64 {
        self.alpha
            .iter()
            .map(|&a| (-a).max(a - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Max elementwise violation of the kinematic constraint
    /// E u = e + p (p averaged to elements), Frobenius norm per element.
    /// In homogeneous mode the strain is imposed, not derived from u, so the
    /// caller passes it explicitly.
    pub fn kinematic_violation(&self, fe: &FeSpace, imposed_strain: Option<&[f64; M]>) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..fe.n_elements() {
            let eu = match imposed_strain {
                Some(s) if fe.is_homogeneous() => *s,
                _ => fe.element_strain(&self.u, t),
            };
            let pm = fe.element_mean_voigt(&self.p, t);
            let mut n2 = 0.0;
            for c in 0..M {
                let r = eu[c] - self.e[M * t + c] - pm[c];
                n2 += r * r;
            }
            worst = worst.max(n2.sqrt());
        }
        worst
    }

    /// Affine interpolation between two states (used by the rescaling).
    pub fn lerp(a: &State, b: &State, s: f64) -> State {
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(u, v)| u + s * (v - u)).collect()
        };
        State {
            t: a.t + s * (b.t - a.t),
            alpha: mix(&a.alpha, &b.alpha),
            u: mix(&a.u, &b.u),
            e: mix(&a.e, &b.e),
            p: mix(&a.p, &b.p),
        }
    }
}
