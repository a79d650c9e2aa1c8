//! Total energy, its pieces and derivatives, the plastic potential and its
//! trajectory dissipation, the slope functional Ψ, and the pointwise-in-state
//! residuals (stress constraint, equilibrium).
//!
//! Discrete conventions, kept consistent across the whole crate so that
//! optimality identities hold to solver tolerance:
//! * elastic terms are elementwise exact (P1 strains are constant);
//! * damage dissipation and hardening densities use the degree-4 rule, exact
//!   for the affine/quadratic profiles;
//! * the plastic potential is vertex-lumped, so the proximal substep
//!   decouples nodewise;
//! * all L² pairings of the damage field use the lumped mass.

use crate::error::{Error, Result};
use crate::la::{dot, DenseSym};
use crate::material::{v3, MaterialLaw};
use crate::space::{FeSpace, M};
use crate::state::State;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Additive pieces of the total energy; `total` is their exact sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub damage: f64,
    pub grad_alpha: f64,
    pub hardening: f64,
    pub grad_p: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn csv_row(&self, t: f64) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t, self.elastic, self.damage, self.grad_alpha, self.hardening, self.grad_p, self.total
        )
    }
}

#[inline]
pub fn hooke_apply3(law: &MaterialLaw, e: &[f64; M]) -> [f64; M] {
    let lt = law.hooke.lambda * (e[0] + e[1]);
    let two_mu = 2.0 * law.hooke.mu;
    [two_mu * e[0] + lt, two_mu * e[1] + lt, two_mu * e[2]]
}

/// ½ ∫ ℂe:e for an elementwise strain field.
pub fn elastic_energy(e: &[f64], law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let mut acc = 0.0;
    for t in 0..fe.n_elements() {
        let et = [e[M * t], e[M * t + 1], e[M * t + 2]];
        let st = hooke_apply3(law, &et);
        acc += 0.5 * fe.mesh.areas[t] * (st[0] * et[0] + st[1] * et[1] + st[2] * et[2]);
    }
    acc
}

pub fn total_energy(s: &State, law: &MaterialLaw, fe: &FeSpace) -> Result<EnergyBreakdown> {
    if s.alpha.len() != fe.n_vertices() || s.p.len() != M * fe.n_vertices() {
        return Err(Error::Dimension("state does not match space".into()));
    }
    let elastic = elastic_energy(&s.e, law, fe);
    let damage = fe.integrate_alpha_p(&s.alpha, &s.p, |a, _| law.damage.value(a));
    let grad_alpha = law.l_alpha * fe.k_s.quadratic(&s.alpha);
    let hardening = fe.integrate_alpha_p(&s.alpha, &s.p, |a, pn2| law.hardening.value(a) * pn2);
    let grad_p = law.l_p * fe.tensor_grad2(&s.p);
    Ok(EnergyBreakdown {
        elastic,
        damage,
        grad_alpha,
        hardening,
        grad_p,
        total: elastic + damage + grad_alpha + hardening + grad_p,
    })
}

/// Plastic potential 𝓗(q) = ∫H(q) with vertex-lumped quadrature; +∞ as soon
/// as one node leaves the domain cone.
pub fn plastic_potential(q: &[f64], law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let mut acc = 0.0;
    for v in 0..fe.n_vertices() {
        let qv = [q[M * v], q[M * v + 1], q[M * v + 2]];
        let h = v3::support(&qv, &law.constraint);
        if h.is_infinite() {
            return f64::INFINITY;
        }
        acc += fe.lumped[v] * h;
    }
    acc
}

/// Σ_j 𝓗(p(s_j) − p(s_{j−1})) over the stored grid restricted to [t1, t2].
/// The stored grid realizes the supremum for monotone processes; in general
/// this is a lower bound for the dissipation.
pub fn h_variation(
    states: &[State],
    law: &MaterialLaw,
    fe: &FeSpace,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let idx = |t: f64| -> Result<usize> {
        states
            .iter()
            .position(|s| (s.t - t).abs() <= 1e-10 * (1.0 + t.abs()))
            .ok_or_else(|| Error::Usage(format!("time {t} is not a grid point")))
    };
    let i1 = idx(t1)?;
    let i2 = idx(t2)?;
    if i1 > i2 {
        return Err(Error::Usage("t1 must not exceed t2".into()));
    }
    let mut acc = 0.0;
    for j in (i1 + 1)..=i2 {
        let dp: Vec<f64> = states[j]
            .p
            .iter()
            .zip(&states[j - 1].p)
            .map(|(a, b)| a - b)
            .collect();
        acc += plastic_potential(&dp, law, fe);
    }
    Ok(acc)
}

/// Nodal covector of ∂_α𝓔: g_v = ∫ḋ(α)φ_v + 2 l_α (K α)_v + ∫Ḃ(α)φ_v p:p.
pub fn alpha_gradient(s: &State, law: &MaterialLaw, fe: &FeSpace) -> Vec<f64> {
    let mut g = fe.assemble_alpha_load(&s.alpha, &s.p, |a, pn2| {
        law.damage.derivative(a) + law.hardening.derivative(a) * pn2
    });
    let ka = fe.k_s.apply(&s.alpha);
    for (gi, ki) in g.iter_mut().zip(&ka) {
        *gi += 2.0 * law.l_alpha * ki;
    }
    g
}

/// Directional derivative ∂_α𝓔(α,e,p)[β].
pub fn partial_alpha(s: &State, beta: &[f64], law: &MaterialLaw, fe: &FeSpace) -> Result<f64> {
    if beta.len() != fe.n_vertices() {
        return Err(Error::Dimension("beta length".into()));
    }
    Ok(dot(&alpha_gradient(s, law, fe), beta))
}

/// Slope functional Ψ = sup{⟨−∂_α𝓔, β⟩ : β ≤ 0, ‖β‖₂ = 1} in the lumped-L²
/// geometry: closed form √(Σ_{g_v>0} g_v²/m_v).
pub fn psi_slope(s: &State, law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let g = alpha_gradient(s, law, fe);
    psi_lumped_from_gradient(&g, &fe.lumped)
}

pub fn psi_lumped_from_gradient(g: &[f64], lumped: &[f64]) -> f64 {
    g.iter()
        .zip(lumped)
        .filter(|(gi, _)| **gi > 0.0)
        .map(|(gi, m)| gi * gi / m)
        .sum::<f64>()
        .sqrt()
}

/// Consistent-mass projection characterization of Ψ: the L²-distance of the
/// covector f to the admissible cone {h : h_v ≤ 0}, solved as the QP
/// min γᵀMγ s.t. (Mγ)_A = −f on an active set. Independent verifier of the
/// lumped closed form.
pub fn psi_projection_qp(f: &[f64], mass: &DenseSym) -> Result<f64> {
    let n = f.len();
    let mut active: Vec<bool> = f.iter().map(|&fi| fi > 0.0).collect();
    for _iter in 0..(2 * n + 4) {
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        if idx.is_empty() {
            return Ok(0.0);
        }
        // γ supported on A with M_AA γ_A = −f_A.
        let k = idx.len();
        let mut sub = DenseSym::zeros(k);
        let mut rhs = vec![0.0; k];
        for (a, &i) in idx.iter().enumerate() {
            rhs[a] = -f[i];
            for (b, &j) in idx.iter().enumerate() {
                sub.a[a * k + b] = mass.at(i, j);
            }
        }
        let gamma_a = sub.solve_spd_robust(&rhs)?;
        // Multipliers are −γ_A; drop the worst positive γ entry.
        if let Some((drop, _)) = gamma_a
            .iter()
            .enumerate()
            .filter(|(_, &g)| g > 1e-14)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        {
            active[idx[drop]] = false;
            continue;
        }
        // Check inactive feasibility (Mγ)_i ≤ −f_i.
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..n {
            if active[i] {
                continue;
            }
            let mut mg = 0.0;
            for (a, &j) in idx.iter().enumerate() {
                mg += mass.at(i, j) * gamma_a[a];
            }
            let viol = mg + f[i];
            if viol > 1e-12 && worst.map(|(_, w)| viol > w).unwrap_or(true) {
                worst = Some((i, viol));
            }
        }
        match worst {
            Some((i, _)) => active[i] = true,
            None => {
                let mut val = 0.0;
                for (a, &i) in idx.iter().enumerate() {
                    for (b, &j) in idx.iter().enumerate() {
                        val += gamma_a[a] * mass.at(i, j) * gamma_a[b];
                    }
                }
                return Ok(val.max(0.0).sqrt());
            }
        }
    }
    Err(Error::NonConvergence {
        context: "psi projection active set".into(),
        residual: f64::NAN,
    })
}

/// −∇_p of the smooth energy at the state: the covector G with
/// G(q) = (ℂe, q)₂ − 2(B(α)p, q)₂ − 2 l_p (∇p, ∇q)₂ for nodal tensor q.
pub fn stress_test_covector(s: &State, law: &MaterialLaw, fe: &FeSpace) -> Vec<f64> {
    let sigma: Vec<f64> = (0..fe.n_elements())
        .flat_map(|t| {
            let et = [s.e[M * t], s.e[M * t + 1], s.e[M * t + 2]];
            hooke_apply3(law, &et)
        })
        .collect();
    let mut g = fe.element_to_nodal_load(&sigma);
    let hard = fe.assemble_p_load(&s.alpha, &s.p, |a| law.hardening.value(a));
    let mut kp = vec![0.0; M * fe.n_vertices()];
    fe.tensor_stiff_apply(&s.p, &mut kp);
    for i in 0..g.len() {
        g[i] -= hard[i] + 2.0 * law.l_p * kp[i];
    }
    g
}

/// Max over the test family (± nodal tensor basis directions plus n_random
/// random fields, each L²-normalized) of G(q) − 𝓗(q). Nonpositive certifies
/// the stress constraint on the test set.
pub fn stress_constraint_residual(
    s: &State,
    law: &MaterialLaw,
    fe: &FeSpace,
    n_random: usize,
    seed: u64,
) -> f64 {
    let g = stress_test_covector(s, law, fe);
    let mut worst = f64::NEG_INFINITY;
    let mass_diag = fe.m_s.diagonal();
    for v in 0..fe.n_vertices() {
        let nrm = mass_diag[v].sqrt();
        for c in 0..M {
            for sign in [1.0f64, -1.0] {
                let mut basis = [0.0; M];
                basis[c] = sign;
                let h = fe.lumped[v] * v3::support(&basis, &law.constraint);
                if h.is_finite() {
                    worst = worst.max((sign * g[M * v + c] - h) / nrm);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = M * fe.n_vertices();
    for _ in 0..n_random {
        let q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let nrm = fe.tensor_mass_quadratic(&q).sqrt();
        if nrm == 0.0 {
            continue;
        }
        let h = plastic_potential(&q, law, fe);
        if h.is_finite() {
            worst = worst.max((dot(&g, &q) - h) / nrm);
        }
    }
    worst
}

/// Per-node supremum residual: max_v sup_{|ξ|=1}[G_v:ξ − m_v H(ξ)] / √m_v.
/// Controls G(q) − 𝓗(q) for every test field at once, since 𝓗 is nodewise
/// separable. This is the solver's exit criterion for the plastic substep.
pub fn stress_nodewise_residual(g: &[f64], law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let mut acc = 0.0f64;
    for v in 0..fe.n_vertices() {
        let gv = [g[M * v], g[M * v + 1], g[M * v + 2]];
        let m = fe.lumped[v];
        let gap = v3::gap(&gv, m, &law.constraint).max(0.0);
        acc += gap * gap / m;
    }
    acc.sqrt()
}

/// Interior block of the elastic residual Σ_T area B_Tᵀ ℂe_T; its norm is
/// the discrete-equilibrium certificate.
pub fn equilibrium_residual(s: &State, law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let r = elastic_residual_full(&s.e, law, fe);
    let mut acc = 0.0;
    for (dof, val) in r.iter().enumerate() {
        if fe.u_interior[dof].is_some() {
            acc += val * val;
        }
    }
    acc.sqrt()
}

/// Full residual vector of the elastic energy with respect to u, i.e.
/// Bᵀ(area·ℂ e) at every u-dof.
pub fn elastic_residual_full(e: &[f64], law: &MaterialLaw, fe: &FeSpace) -> Vec<f64> {
    let mut r = vec![0.0; 2 * fe.n_vertices()];
    let s2 = std::f64::consts::SQRT_2;
    for t in 0..fe.n_elements() {
        let et = [e[M * t], e[M * t + 1], e[M * t + 2]];
        let sig = hooke_apply3(law, &et);
        let area = fe.mesh.areas[t];
        let tri = &fe.mesh.triangles[t];
        let grads = &fe.mesh.grads[t];
        for a in 0..3 {
            let gx = grads[a][0];
            let gy = grads[a][1];
            r[2 * tri[a]] += area * (sig[0] * gx + sig[2] * gy / s2);
            r[2 * tri[a] + 1] += area * (sig[1] * gy + sig[2] * gx / s2);
        }
    }
    r
}

/// Work pairing (ℂe, Ew)₂ against a spatially constant strain tensor.
pub fn work_pairing(e: &[f64], strain: &[f64; M], law: &MaterialLaw, fe: &FeSpace) -> f64 {
    let mut acc = 0.0;
    for t in 0..fe.n_elements() {
        let et = [e[M * t], e[M * t + 1], e[M * t + 2]];
        let sig = hooke_apply3(law, &et);
        acc += fe.mesh.areas[t] * (sig[0] * strain[0] + sig[1] * strain[1] + sig[2] * strain[2]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, ProfileKind};
    use crate::mesh::Mesh;
    use crate::tensor::SymTensor;

    fn law(damage_kind: ProfileKind, hardening_kind: ProfileKind, w1: f64) -> MaterialLaw {
        MaterialLaw::new(
            HookeLaw::new(1.0, 1.0).unwrap(),
            HardeningProfile::new(hardening_kind, 1.0, 0.1).unwrap(),
            DamageDissipation::new(damage_kind, w1).unwrap(),
            ConstraintSet::ball(1.0).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn unit_square(n: usize) -> FeSpace {
        FeSpace::new(Mesh::structured(1.0, 1.0, n, n).unwrap())
    }

    #[test]
    fn total_energy_examples() {
        let fe = unit_square(4);
        let ml = MaterialLaw::new(
            HookeLaw::new(1.0, 1.0).unwrap(),
            HardeningProfile::new(ProfileKind::Linear, 1.0, 0.0).unwrap(),
            DamageDissipation::new(ProfileKind::Linear, 1.0).unwrap(),
            ConstraintSet::ball(1.0).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let sound = State::sound(&fe);
        let e = total_energy(&sound, &ml, &fe).unwrap();
        assert!(e.total.abs() < 1e-15);

        let mut half = sound.clone();
        half.alpha.iter_mut().for_each(|a| *a = 0.5);
        let e = total_energy(&half, &ml, &fe).unwrap();
        assert!((e.total - 0.5).abs() < 1e-13);

        // α(x,y) = x with w1 = 0: only the gradient term survives.
        let ml0 = MaterialLaw::new(
            ml.hooke,
            ml.hardening,
            DamageDissipation::new(ProfileKind::Linear, 0.0).unwrap(),
            ml.constraint.clone(),
            1.0,
            1.0,
        )
        .unwrap();
        let mut ramp = sound.clone();
        for (v, pos) in fe.mesh.vertices.iter().enumerate() {
            ramp.alpha[v] = pos[0];
        }
        let e = total_energy(&ramp, &ml0, &fe).unwrap();
        assert!((e.total - 1.0).abs() < 1e-12);
        assert!(e.elastic >= 0.0 && e.damage >= 0.0 && e.hardening >= 0.0);
        let sum = e.elastic + e.damage + e.grad_alpha + e.hardening + e.grad_p;
        assert_eq!(sum, e.total);
    }

    #[test]
    fn plastic_potential_examples() {
        let fe = unit_square(3);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 1.0);
        let zero = vec![0.0; M * fe.n_vertices()];
        assert_eq!(plastic_potential(&zero, &ml, &fe), 0.0);

        // Constant field: 𝓗 = H(ξ₀)·area.
        let xi0 = [0.4, -0.2, 0.3];
        let mut q = vec![0.0; M * fe.n_vertices()];
        for v in 0..fe.n_vertices() {
            q[M * v..M * v + M].copy_from_slice(&xi0);
        }
        let expect = v3::support(&xi0, &ml.constraint);
        assert!((plastic_potential(&q, &ml, &fe) - expect).abs() < 1e-13);

        // One cone-infeasible node makes the potential +∞.
        let mut ml_dp = ml.clone();
        ml_dp.constraint = ConstraintSet::drucker_prager(1.0, 1.0, 2).unwrap();
        let mut q2 = q.clone();
        q2[0] = 1.0;
        q2[1] = -1.0;
        q2[2] = 0.0;
        assert!(plastic_potential(&q2, &ml_dp, &fe).is_infinite());
    }

    #[test]
    fn h_variation_telescopes_for_proportional_paths() {
        let fe = unit_square(2);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 1.0);
        let q0 = [0.3, 0.1, -0.2];
        let mut states = Vec::new();
        for i in 0..=7 {
            let t = i as f64 / 7.0;
            let mut s = State::sound(&fe);
            s.t = t;
            for v in 0..fe.n_vertices() {
                for c in 0..M {
                    s.p[M * v + c] = t * q0[c];
                }
            }
            states.push(s);
        }
        // Constant in time → 0.
        let consts = vec![states[3].clone(), {
            let mut s = states[3].clone();
            s.t = 1.0;
            s
        }];
        assert_eq!(h_variation(&consts, &ml, &fe, consts[0].t, 1.0).unwrap(), 0.0);

        let h_q0 = {
            let mut q = vec![0.0; M * fe.n_vertices()];
            for v in 0..fe.n_vertices() {
                q[M * v..M * v + M].copy_from_slice(&q0);
            }
            plastic_potential(&q, &ml, &fe)
        };
        let total = h_variation(&states, &ml, &fe, 0.0, 1.0).unwrap();
        assert!((total - h_q0).abs() < 1e-13);
        let part = h_variation(&states, &ml, &fe, states[2].t, states[5].t).unwrap();
        assert!((part - (states[5].t - states[2].t) * h_q0).abs() < 1e-13);

        assert!(h_variation(&states, &ml, &fe, 0.123, 1.0).is_err());
    }

    #[test]
    fn h_variation_coarse_grid_is_lower_bound() {
        let fe = unit_square(2);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut states = Vec::new();
        for i in 0..=8 {
            let mut s = State::sound(&fe);
            s.t = i as f64;
            for x in s.p.iter_mut() {
                *x = rng.random::<f64>() - 0.5;
            }
            states.push(s);
        }
        let full = h_variation(&states, &ml, &fe, 0.0, 8.0).unwrap();
        let coarse: Vec<State> = states.iter().step_by(2).cloned().collect();
        let sub = h_variation(&coarse, &ml, &fe, 0.0, 8.0).unwrap();
        assert!(sub <= full + 1e-12);
    }

    #[test]
    fn partial_alpha_matches_finite_differences() {
        let fe = unit_square(3);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for (dk, hk) in [
            (ProfileKind::Linear, ProfileKind::Linear),
            (ProfileKind::Quadratic, ProfileKind::Quadratic),
            (ProfileKind::Linear, ProfileKind::Quadratic),
        ] {
            let ml = law(dk, hk, 0.7);
            for _ in 0..7 {
                let mut s = State::sound(&fe);
                for a in s.alpha.iter_mut() {
                    *a = 0.2 + 0.6 * rng.random::<f64>();
                }
                for x in s.p.iter_mut() {
                    *x = rng.random::<f64>() - 0.5;
                }
                let beta: Vec<f64> = (0..fe.n_vertices())
                    .map(|_| rng.random::<f64>() - 0.5)
                    .collect();
                let analytic = partial_alpha(&s, &beta, &ml, &fe).unwrap();
                let h = 1e-6;
                let perturbed = |sign: f64| {
                    let mut sp = s.clone();
                    for (a, b) in sp.alpha.iter_mut().zip(&beta) {
                        *a += sign * h * b;
                    }
                    total_energy(&sp, &ml, &fe).unwrap().total
                };
                let fd = (perturbed(1.0) - perturbed(-1.0)) / (2.0 * h);
                assert!(
                    (analytic - fd).abs() <= 1e-5 * (1.0 + analytic.abs()),
                    "{analytic} vs {fd}"
                );
            }
        }
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 0.7);
        let s = State::sound(&fe);
        let zero = vec![0.0; fe.n_vertices()];
        assert_eq!(partial_alpha(&s, &zero, &ml, &fe).unwrap(), 0.0);
    }

    #[test]
    fn partial_alpha_uniform_state_closed_form() {
        let fe = unit_square(3);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 0.7);
        let mut s = State::sound(&fe);
        s.alpha.iter_mut().for_each(|a| *a = 0.6);
        let p0 = [0.2, -0.1, 0.05];
        for v in 0..fe.n_vertices() {
            s.p[M * v..M * v + M].copy_from_slice(&p0);
        }
        let ones = vec![1.0; fe.n_vertices()];
        let got = partial_alpha(&s, &ones, &ml, &fe).unwrap();
        // ∫ḋ(α) + ∫Ḃ(α)p:p on the unit square with uniform fields.
        let pn2: f64 = p0.iter().map(|x| x * x).sum();
        let expect = -0.7 + ml.hardening.derivative(0.6) * pn2;
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn psi_slope_closed_form_cases() {
        // One dof, lumped mass 1, gradient 2 → Ψ = 2.
        assert_eq!(psi_lumped_from_gradient(&[2.0], &[1.0]), 2.0);
        // Two dofs, masses 1, g = (2, −3) → only the positive part counts.
        assert_eq!(psi_lumped_from_gradient(&[2.0, -3.0], &[1.0, 1.0]), 2.0);
        // Entirely admissible gradient → 0.
        assert_eq!(psi_lumped_from_gradient(&[-1.0, -0.5], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn psi_projection_qp_agrees_on_diagonal_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let n = 1 + (rng.random::<f64>() * 6.0) as usize;
            let masses: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
            let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let mut m = DenseSym::zeros(n);
            for i in 0..n {
                m.a[i * n + i] = masses[i];
            }
            let qp = psi_projection_qp(&f, &m).unwrap();
            let closed = psi_lumped_from_gradient(&f, &masses);
            assert!((qp - closed).abs() <= 1e-10 * (1.0 + closed), "{qp} vs {closed}");
        }
    }

    #[test]
    fn stress_residual_detects_violation() {
        let fe = unit_square(3);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 0.5);
        let zero = State::sound(&fe);
        let r = stress_constraint_residual(&zero, &ml, &fe, 16, 7);
        assert!(r <= 0.0, "zero state residual {r}");

        let mut inflated = zero.clone();
        for x in inflated.e.iter_mut() {
            *x = 1e3;
        }
        assert!(stress_constraint_residual(&inflated, &ml, &fe, 16, 7) > 0.0);
    }

    #[test]
    fn equilibrium_residual_nonzero_for_random_strain() {
        let fe = unit_square(3);
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut s = State::sound(&fe);
        for x in s.e.iter_mut() {
            *x = rng.random::<f64>() - 0.5;
        }
        assert!(equilibrium_residual(&s, &ml, &fe) > 1e-6);
    }

    #[test]
    fn hooke_apply3_matches_tensor_form() {
        let ml = law(ProfileKind::Linear, ProfileKind::Linear, 0.5);
        let e = [0.7, -0.3, 0.4];
        let arr = hooke_apply3(&ml, &e);
        let et = SymTensor::from_voigt(2, e.to_vec());
        let st = ml.hooke.apply(&et);
        for c in 0..3 {
            assert!((arr[c] - st.voigt()[c]).abs() < 1e-15);
        }
    }
}
