//! Constitutive objects: Hooke's law, damage-dependent kinematic hardening,
//! damage dissipation density, the stress constraint set with its support
//! function, and the proximal map of the support function.

use crate::error::{Error, Result};
use crate::tensor::SymTensor;

/// Relative collar inside which a tensor is still counted as cone-feasible.
/// Projection outputs land on the cone boundary up to roundoff; genuinely
/// infeasible inputs miss it by O(1).
const CONE_SLACK_REL: f64 = 1e-12;

/// Isotropic Hooke tensor σ = λ tr(e) I + 2μ e.
#[derive(Debug, Clone, Copy)]
pub struct HookeLaw {
    pub lambda: f64,
    pub mu: f64,
}

impl HookeLaw {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::Domain {
                quantity: "lambda".into(),
                value: lambda,
            });
        }
        if mu <= 0.0 {
            return Err(Error::Domain {
                quantity: "mu".into(),
                value: mu,
            });
        }
        Ok(HookeLaw { lambda, mu })
    }

    /// Lower ellipticity constant γ₁ = 2μ.
    pub fn gamma1(&self) -> f64 {
        2.0 * self.mu
    }

    /// Upper ellipticity constant γ₂ = nλ + 2μ.
    pub fn gamma2(&self, dim: usize) -> f64 {
        dim as f64 * self.lambda + 2.0 * self.mu
    }

    pub fn apply(&self, e: &SymTensor) -> SymTensor {
        let mut s = e.scale(2.0 * self.mu);
        let lt = self.lambda * e.trace();
        for i in 0..e.dim() {
            s.voigt_mut()[i] += lt;
        }
        s
    }

    /// Energy density ½ ℂe:e.
    pub fn energy_density(&self, e: &SymTensor) -> f64 {
        0.5 * self.apply(e).frobenius(e)
    }
}

/// Damage-dependent isotropic hardening modulus B(α) = b(α)·Id₄ with
/// b ≥ 0 on [0,1] and ḃ(0) ≤ 0. Below α = 0 the profile continues affinely
/// (C^{1,1} extension used by directional-derivative arguments).
///
/// The linear kind stiffens as damage grows (b_floor + b_max(1−α)); the
/// quadratic kind degrades with damage, b_floor + b_max·α², which is what
/// lets plastic work drive damage growth while keeping ḃ(0) = 0.
#[derive(Debug, Clone, Copy)]
pub struct HardeningProfile {
    pub kind: ProfileKind,
    pub b_max: f64,
    pub b_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Linear,
    Quadratic,
}

impl HardeningProfile {
    pub fn new(kind: ProfileKind, b_max: f64, b_floor: f64) -> Result<Self> {
        if b_max < 0.0 {
            return Err(Error::Domain {
                quantity: "b_max".into(),
                value: b_max,
            });
        }
        if b_floor < 0.0 {
            return Err(Error::Domain {
                quantity: "b_floor".into(),
                value: b_floor,
            });
        }
        Ok(HardeningProfile {
            kind,
            b_max,
            b_floor,
        })
    }

    /// Scalar modulus b(α), affinely extended below 0.
    pub fn value(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => self.b_floor + self.b_max * (1.0 - alpha),
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    self.b_floor + self.b_max * alpha * alpha
                } else {
                    self.b_floor
                }
            }
        }
    }

    pub fn derivative(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => -self.b_max,
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    2.0 * self.b_max * alpha
                } else {
                    0.0
                }
            }
        }
    }

    pub fn second_derivative(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => 0.0,
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    2.0 * self.b_max
                } else {
                    0.0
                }
            }
        }
    }

    /// B(α)p. Errors when α leaves [0,1].
    pub fn apply(&self, alpha: f64, p: &SymTensor) -> Result<SymTensor> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain {
                quantity: "alpha".into(),
                value: alpha,
            });
        }
        Ok(p.scale(self.value(alpha)))
    }
}

/// Damage dissipation density d(α) with d ≥ 0 on [0,1] and ḋ(0) ≤ 0,
/// affinely extended below 0.
#[derive(Debug, Clone, Copy)]
pub struct DamageDissipation {
    pub kind: ProfileKind,
    pub w1: f64,
}

impl DamageDissipation {
    pub fn new(kind: ProfileKind, w1: f64) -> Result<Self> {
        if w1 < 0.0 {
            return Err(Error::Domain {
                quantity: "w1".into(),
                value: w1,
            });
        }
        Ok(DamageDissipation { kind, w1 })
    }

    pub fn value(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => self.w1 * (1.0 - alpha),
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    self.w1 * (1.0 - alpha) * (1.0 - alpha)
                } else {
                    self.w1 * (1.0 - 2.0 * alpha)
                }
            }
        }
    }

    pub fn derivative(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => -self.w1,
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    -2.0 * self.w1 * (1.0 - alpha)
                } else {
                    -2.0 * self.w1
                }
            }
        }
    }

    pub fn second_derivative(&self, alpha: f64) -> f64 {
        match self.kind {
            ProfileKind::Linear => 0.0,
            ProfileKind::Quadratic => {
                if alpha >= 0.0 {
                    2.0 * self.w1
                } else {
                    0.0
                }
            }
        }
    }
}

/// Closed convex constraint set for the generalized stress. Either a ball of
/// radius r_h or the Drucker–Prager cone section {σ : τσ_m + |σ_D| ≤ κ}.
#[derive(Debug, Clone)]
pub enum ConstraintSet {
    Ball {
        r_h: f64,
    },
    DruckerPrager {
        tau: f64,
        kappa: f64,
        dim: usize,
        /// Inscribed-ball radius, found numerically at construction.
        r_eff: f64,
    },
}

impl ConstraintSet {
    pub fn ball(r_h: f64) -> Result<Self> {
        if r_h <= 0.0 {
            return Err(Error::Domain {
                quantity: "r_h".into(),
                value: r_h,
            });
        }
        Ok(ConstraintSet::Ball { r_h })
    }

    pub fn drucker_prager(tau: f64, kappa: f64, dim: usize) -> Result<Self> {
        if tau <= 0.0 {
            return Err(Error::Domain {
                quantity: "tau".into(),
                value: tau,
            });
        }
        if kappa <= 0.0 {
            return Err(Error::Domain {
                quantity: "kappa".into(),
                value: kappa,
            });
        }
        if !(dim == 2 || dim == 3) {
            return Err(Error::Dimension(format!("constraint dim {dim}")));
        }
        let r_eff = dp_inscribed_radius(tau, kappa, dim);
        Ok(ConstraintSet::DruckerPrager {
            tau,
            kappa,
            dim,
            r_eff,
        })
    }

    /// Largest r such that the ball of radius r is contained in the set.
    pub fn r_eff(&self) -> f64 {
        match self {
            ConstraintSet::Ball { r_h } => *r_h,
            ConstraintSet::DruckerPrager { r_eff, .. } => *r_eff,
        }
    }

    /// Whether H(ξ) is finite, i.e. ξ lies in the domain cone of the support
    /// function (everything, for a ball).
    pub fn finite_domain(&self, xi: &SymTensor) -> bool {
        match self {
            ConstraintSet::Ball { .. } => true,
            ConstraintSet::DruckerPrager { tau, .. } => {
                let slack = xi.trace() - tau * xi.dev().norm();
                slack >= -CONE_SLACK_REL * (1.0 + xi.norm())
            }
        }
    }
}

/// Support function H(ξ) = sup_{σ ∈ K} σ:ξ. Positively 1-homogeneous and
/// convex; +∞ (exactly) outside the Drucker–Prager domain cone.
pub fn support_function(xi: &SymTensor, k: &ConstraintSet) -> f64 {
    match k {
        ConstraintSet::Ball { r_h } => r_h * xi.norm(),
        ConstraintSet::DruckerPrager { tau, kappa, .. } => {
            if k.finite_domain(xi) {
                (kappa / tau) * xi.trace()
            } else {
                f64::INFINITY
            }
        }
    }
}

/// prox_{λH}(ξ) = argmin_q ½|q−ξ|² + λH(q). Unique by strict convexity.
pub fn prox_support(xi: &SymTensor, lambda: f64, k: &ConstraintSet) -> SymTensor {
    debug_assert!(lambda > 0.0);
    match k {
        ConstraintSet::Ball { r_h } => {
            let norm = xi.norm();
            let t = lambda * r_h;
            if norm <= t {
                SymTensor::zeros(xi.dim())
            } else {
                xi.scale(1.0 - t / norm)
            }
        }
        ConstraintSet::DruckerPrager { tau, kappa, .. } => {
            // Tilt by the linear part, then project onto the domain cone
            // {tr q ≥ τ|dev q|}.
            let shift = lambda * kappa / tau;
            let mut x = xi.clone();
            for i in 0..x.dim() {
                x.voigt_mut()[i] -= shift;
            }
            project_cone(&x, *tau)
        }
    }
}

/// Euclidean projection onto {q : tr q ≥ τ|dev q|}.
pub fn project_cone(x: &SymTensor, tau: f64) -> SymTensor {
    let n = x.dim() as f64;
    let sqrt_n = n.sqrt();
    // Orthogonal coordinates: mu along I/√n, rho = |dev|.
    let mu = x.trace() / sqrt_n;
    let dev = x.dev();
    let rho = dev.norm();
    let s = tau / sqrt_n;
    if mu >= s * rho {
        return x.clone();
    }
    if s * mu <= -rho {
        return SymTensor::zeros(x.dim());
    }
    let t = (s * mu + rho) / (1.0 + s * s);
    // Point on the boundary ray: mu* = s t, rho* = t, dev direction kept.
    let mean_star = s * t / sqrt_n;
    let mut out = if rho > 0.0 {
        dev.scale(t / rho)
    } else {
        SymTensor::zeros(x.dim())
    };
    for i in 0..x.dim() {
        out.voigt_mut()[i] += mean_star;
    }
    out
}

/// sup over unit tensors of G:ξ − λH(ξ). Nonpositive iff G/λ is a
/// subgradient-admissible force, i.e. G ∈ λ∂H(0). Used as the pointwise
/// stress-constraint residual.
pub fn support_gap(g: &SymTensor, lambda: f64, k: &ConstraintSet) -> f64 {
    match k {
        ConstraintSet::Ball { r_h } => g.norm() - lambda * r_h,
        ConstraintSet::DruckerPrager { tau, kappa, .. } => {
            let n = g.dim() as f64;
            let sqrt_n = n.sqrt();
            let shift = lambda * kappa / tau;
            let mut w = g.clone();
            for i in 0..w.dim() {
                w.voigt_mut()[i] -= shift;
            }
            let mu = w.trace() / sqrt_n;
            let rho = w.dev().norm();
            let s = tau / sqrt_n;
            if mu >= s * rho {
                w.norm()
            } else {
                (s * mu + rho) / (1.0 + s * s).sqrt()
            }
        }
    }
}

/// Inscribed-ball radius of the Drucker–Prager set, computed as the infimum
/// of H over unit directions. On the unit sphere H depends only on the
/// mean/deviatoric angle, and is decreasing towards the domain-cone boundary,
/// so a bisection on the feasibility boundary suffices.
fn dp_inscribed_radius(tau: f64, kappa: f64, dim: usize) -> f64 {
    let n = dim as f64;
    let sqrt_n = n.sqrt();
    // ξ(θ) = cosθ·I/√n + sinθ·ω̂, feasible iff √n cosθ ≥ τ sinθ.
    let feasible = |theta: f64| sqrt_n * theta.cos() - tau * theta.sin() >= 0.0;
    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::FRAC_PI_2;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (kappa / tau) * sqrt_n * lo.cos()
}

/// Non-allocating 2D Voigt kernels for the hot solver loops. These mirror
/// `support_function`, `prox_support` and `support_gap` on `[f64; 3]`
/// (constraint sets constructed with dim = 2); the tensor versions remain the
/// reference implementations and tests pin the agreement.
pub mod v3 {
    use super::{ConstraintSet, CONE_SLACK_REL};

    pub type V3 = [f64; 3];

    #[inline]
    pub fn norm(x: &V3) -> f64 {
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    #[inline]
    fn mean_dev(x: &V3) -> (f64, f64, V3) {
        let m = 0.5 * (x[0] + x[1]);
        let dev = [x[0] - m, x[1] - m, x[2]];
        (m, norm(&dev), dev)
    }

    pub fn support(xi: &V3, k: &ConstraintSet) -> f64 {
        match k {
            ConstraintSet::Ball { r_h } => r_h * norm(xi),
            ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                let (m, rho, _) = mean_dev(xi);
                let tr = 2.0 * m;
                if tr - tau * rho >= -CONE_SLACK_REL * (1.0 + norm(xi)) {
                    (kappa / tau) * tr
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    pub fn prox(xi: &V3, lambda: f64, k: &ConstraintSet) -> V3 {
        match k {
            ConstraintSet::Ball { r_h } => {
                let n = norm(xi);
                let t = lambda * r_h;
                if n <= t {
                    [0.0; 3]
                } else {
                    let s = 1.0 - t / n;
                    [xi[0] * s, xi[1] * s, xi[2] * s]
                }
            }
            ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                let shift = lambda * kappa / tau;
                let x = [xi[0] - shift, xi[1] - shift, xi[2]];
                let sqrt2 = std::f64::consts::SQRT_2;
                let (m, rho, dev) = mean_dev(&x);
                let mu = sqrt2 * m;
                let s = tau / sqrt2;
                if mu >= s * rho {
                    return x;
                }
                if s * mu <= -rho {
                    return [0.0; 3];
                }
                let t = (s * mu + rho) / (1.0 + s * s);
                let mean_star = s * t / sqrt2;
                let scale = if rho > 0.0 { t / rho } else { 0.0 };
                [
                    mean_star + scale * dev[0],
                    mean_star + scale * dev[1],
                    scale * dev[2],
                ]
            }
        }
    }

    /// sup_{|ξ|=1} G:ξ − λH(ξ).
    pub fn gap(g: &V3, lambda: f64, k: &ConstraintSet) -> f64 {
        match k {
            ConstraintSet::Ball { r_h } => norm(g) - lambda * r_h,
            ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                let shift = lambda * kappa / tau;
                let w = [g[0] - shift, g[1] - shift, g[2]];
                let sqrt2 = std::f64::consts::SQRT_2;
                let (m, rho, _) = mean_dev(&w);
                let mu = sqrt2 * m;
                let s = tau / sqrt2;
                if mu >= s * rho {
                    norm(&w)
                } else {
                    (s * mu + rho) / (1.0 + s * s).sqrt()
                }
            }
        }
    }
}

/// The full constitutive description of one material, with the gradient-term
/// weights the model normalizes to 1 kept configurable.
#[derive(Debug, Clone)]
pub struct MaterialLaw {
    pub hooke: HookeLaw,
    pub hardening: HardeningProfile,
    pub damage: DamageDissipation,
    pub constraint: ConstraintSet,
    /// Weight on ‖∇α‖₂².
    pub l_alpha: f64,
    /// Weight on ‖∇p‖₂².
    pub l_p: f64,
}

impl MaterialLaw {
    pub fn new(
        hooke: HookeLaw,
        hardening: HardeningProfile,
        damage: DamageDissipation,
        constraint: ConstraintSet,
        l_alpha: f64,
        l_p: f64,
    ) -> Result<Self> {
        if l_alpha <= 0.0 {
            return Err(Error::Domain {
                quantity: "l_alpha".into(),
                value: l_alpha,
            });
        }
        if l_p <= 0.0 {
            return Err(Error::Domain {
                quantity: "l_p".into(),
                value: l_p,
            });
        }
        Ok(MaterialLaw {
            hooke,
            hardening,
            damage,
            constraint,
            l_alpha,
            l_p,
        })
    }
}
