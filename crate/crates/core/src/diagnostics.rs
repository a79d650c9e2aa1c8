//! Trajectory-level verification: energy balance, global stability against
//! a competitor family, Kuhn–Tucker and Hill conditions, the continuity-
//! in-time ratio, and the stationarity variational inequalities.

use crate::energy::{self, total_energy};
use crate::error::Result;
use crate::evolution::Trajectory;
use crate::la::dot;
use crate::load::LoadProgram;
use crate::material::MaterialLaw;
use crate::solver::{ElasticSystem, LinearSolver};
use crate::space::{FeSpace, NormKind, M};
use crate::state::State;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One verification result. `residual ≤ tolerance ⟺ pass`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub id: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub location: String,
    /// Which optimality/balance condition this verifies.
    pub provenance: String,
}

impl CheckReport {
    fn new(id: &str, provenance: &str, residual: f64, tolerance: f64, location: String) -> Self {
        CheckReport {
            id: id.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            location,
            provenance: provenance.into(),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{},{},{}",
            self.id, self.residual, self.tolerance, self.pass, self.location, self.provenance
        )
    }
}

/// Sup over times of |𝓔(t) + Σ𝓗(Δp) + ε∫‖α̇‖² − 𝓔(0) − ∫(ℂe,Eẇ)| with the
/// trapezoid work quadrature.
pub fn check_energy_balance(traj: &Trajectory, tol_rel: f64) -> CheckReport {
    let scale = traj.energy_scale();
    let mut worst = 0.0f64;
    let mut loc = 0usize;
    for (i, r) in traj.records.iter().enumerate() {
        let residual = (r.energy.total + traj.cumulative_dissipation(i + 1)
            + traj.cumulative_viscous(i + 1)
            - traj.initial_energy.total
            - traj.cumulative_work_trapezoid(i + 1))
        .abs();
        if residual > worst {
            worst = residual;
            loc = i + 1;
        }
    }
    CheckReport::new(
        "energy_balance",
        "energy-dissipation balance",
        worst,
        tol_rel * scale,
        format!("step {loc}"),
    )
}

/// Tests 𝓔(α,e,p) ≤ 𝓔(β,η,q) + 𝓗(q−p) against a constructed competitor
/// family at every sampled state; a positive violation means the alternating
/// minimization missed a better basin at that time.
pub fn check_global_stability(
    traj: &Trajectory,
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    n_random: usize,
    seed: u64,
    tol_rel: f64,
) -> Result<CheckReport> {
    let elastic = ElasticSystem::new(fe, law, LinearSolver::Direct)?;
    let scale = traj.energy_scale();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut loc = String::from("-");

    for (i, s) in traj.states.iter().enumerate() {
        let datum = load.datum(fe, s.t);
        let base = total_energy(s, law, fe)?.total;
        let mut consider = |tag: &str, beta: &[f64], q: &[f64]| -> Result<()> {
            let (u, e) = elastic.solve(fe, law, &datum, q)?;
            let cand = State {
                t: s.t,
                alpha: beta.to_vec(),
                u,
                e,
                p: q.to_vec(),
            };
            let energy = total_energy(&cand, law, fe)?.total;
            let dq: Vec<f64> = q.iter().zip(&s.p).map(|(a, b)| a - b).collect();
            let h = energy::plastic_potential(&dq, law, fe);
            if h.is_finite() {
                let violation = base - (energy + h);
                if violation > worst {
                    worst = violation;
                    loc = format!("state {i} vs {tag}");
                }
            }
            Ok(())
        };

        // (i) Elastic relaxation: keep (α, p), re-solve u.
        consider("elastic", &s.alpha, &s.p)?;
        // (ii) Uniform extra damage β = c·α.
        for c in [0.9, 0.5, 0.0] {
            let beta: Vec<f64> = s.alpha.iter().map(|a| c * a).collect();
            consider(&format!("damage c={c}"), &beta, &s.p)?;
        }
        // (iii) Plastic perturbations along proximal descent directions.
        let g = energy::stress_test_covector(s, law, fe);
        for step in [1e-2, 1e-1] {
            let mut q = s.p.clone();
            for v in 0..fe.n_vertices() {
                let m = fe.lumped[v];
                let arg = [
                    step * g[M * v] / m,
                    step * g[M * v + 1] / m,
                    step * g[M * v + 2] / m,
                ];
                let r = crate::material::v3::prox(&arg, step, &law.constraint);
                for c in 0..M {
                    q[M * v + c] += r[c];
                }
            }
            consider(&format!("prox step {step}"), &s.alpha, &q)?;
        }
        // (iv) Random admissible states.
        for j in 0..n_random {
            let beta: Vec<f64> = s
                .alpha
                .iter()
                .map(|a| (a * rng.random::<f64>()).clamp(0.0, *a))
                .collect();
            let q: Vec<f64> = s
                .p
                .iter()
                .map(|p| p + 0.3 * (rng.random::<f64>() - 0.5))
                .collect();
            consider(&format!("random {j}"), &beta, &q)?;
        }
    }
    Ok(CheckReport::new(
        "global_stability",
        "global stability condition",
        worst,
        tol_rel * scale,
        loc,
    ))
}

/// Per-step Kuhn–Tucker equality residual |∂_α𝓔[α̇] + ε‖α̇‖²| (zero for a
/// stationary damage field).
pub fn check_kuhn_tucker(traj: &Trajectory, tol_rel: f64) -> CheckReport {
    let scale = traj.energy_scale();
    let (worst, loc) = traj
        .records
        .iter()
        .map(|r| (r.kt_residual, r.index))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    CheckReport::new(
        "kuhn_tucker_equality",
        "Kuhn-Tucker equality",
        worst,
        tol_rel * scale,
        format!("step {loc}"),
    )
}

/// Per-step Hill residual |𝓗(ṗ) − (ℂe,ṗ) + 2(B(α)p,ṗ) + 2 l_p(∇p,∇ṗ)| with
/// discrete rates, evaluated at the accepted states.
pub fn check_hill(traj: &Trajectory, law: &MaterialLaw, fe: &FeSpace, tol_rel: f64) -> CheckReport {
    let scale = traj.energy_scale();
    let tau = traj.tau();
    let mut worst = 0.0f64;
    let mut loc = 0usize;
    for i in 0..traj.states.len() - 1 {
        let b = &traj.states[i + 1];
        let dp: Vec<f64> = b.p.iter().zip(&traj.states[i].p).map(|(x, y)| x - y).collect();
        let g = energy::stress_test_covector(b, law, fe);
        let h = energy::plastic_potential(&dp, law, fe);
        let residual = (h - dot(&g, &dp)).abs() / tau;
        if residual > worst {
            worst = residual;
            loc = i + 1;
        }
    }
    CheckReport::new(
        "hill_plastic_work",
        "Hill maximum plastic work principle",
        worst,
        tol_rel * scale,
        format!("step {loc}"),
    )
}

/// Continuity-in-time ratio over sampled grid pairs:
/// R = (‖Δα‖_{H¹}+‖Δe‖₂+‖Δp‖_{H¹}) / (‖Δα‖₁ + ∫‖Eẇ‖₂), with the guarded
/// convention that zero-denominator pairs must have zero numerator.
pub struct ContinuityOut {
    pub max_ratio: f64,
    pub max_ratio_u: f64,
    /// Worst numerator among zero-denominator pairs (a regularity violation
    /// if above tolerance).
    pub zero_denominator_violation: f64,
    pub pairs: usize,
}

pub fn continuity_ratio(
    traj: &Trajectory,
    load: &LoadProgram,
    fe: &FeSpace,
    max_pairs: usize,
) -> Result<ContinuityOut> {
    let n = traj.states.len();
    let total_pairs = n * (n - 1) / 2;
    let stride = (total_pairs / max_pairs.max(1)).max(1);
    let mut max_ratio = 0.0f64;
    let mut max_ratio_u = 0.0f64;
    let mut zero_viol = 0.0f64;
    let mut pairs = 0usize;
    let mut counter = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            counter += 1;
            if counter % stride != 0 {
                continue;
            }
            pairs += 1;
            let a = &traj.states[i];
            let b = &traj.states[j];
            let dalpha: Vec<f64> = b.alpha.iter().zip(&a.alpha).map(|(x, y)| x - y).collect();
            let de: Vec<f64> = b.e.iter().zip(&a.e).map(|(x, y)| x - y).collect();
            let dp: Vec<f64> = b.p.iter().zip(&a.p).map(|(x, y)| x - y).collect();
            let du: Vec<f64> = b.u.iter().zip(&a.u).map(|(x, y)| x - y).collect();
            let num = fe.scalar_h1_lumped(&dalpha)
                + fe.element_tensor_l2(&de)
                + fe.tensor_norm(&dp, NormKind::H1)?;
            let num_u = fe.vector_norm(&du, NormKind::H1)?;
            let alpha_l1 = fe.scalar_norm(&dalpha, NormKind::L1)?;
            let work = load.strain_rate_l2_integral(fe, a.t, b.t);
            let den = alpha_l1 + work;
            if den <= 1e-14 {
                zero_viol = zero_viol.max(num.max(num_u));
            } else {
                max_ratio = max_ratio.max(num / den);
                // The displacement variant pairs with ∫‖ẇ‖_{H¹}; for the
                // affine program both integrals are proportional, reuse it.
                max_ratio_u = max_ratio_u.max(num_u / den);
            }
        }
    }
    Ok(ContinuityOut {
        max_ratio,
        max_ratio_u,
        zero_denominator_violation: zero_viol,
        pairs,
    })
}

/// Stationarity variational inequalities along a trajectory:
/// the damage inequality via Ψ (energetic mode), the two-sided stress bound
/// via the test family, and the energetic single-state minimality against
/// plastic competitors at fixed damage.
pub fn check_variational_inequalities(
    traj: &Trajectory,
    law: &MaterialLaw,
    fe: &FeSpace,
    tol_rel: f64,
) -> Vec<CheckReport> {
    let scale = traj.energy_scale();
    let mut psi_worst = 0.0f64;
    let mut psi_loc = 0usize;
    let mut stress_worst = f64::NEG_INFINITY;
    let mut stress_loc = 0usize;
    for (i, s) in traj.states.iter().enumerate() {
        if traj.eps == 0.0 {
            let psi = energy::psi_slope(s, law, fe);
            if psi > psi_worst {
                psi_worst = psi;
                psi_loc = i;
            }
        }
        let r = energy::stress_constraint_residual(s, law, fe, 8, 23 + i as u64);
        if r > stress_worst {
            stress_worst = r;
            stress_loc = i;
        }
    }
    let mut out = Vec::new();
    if traj.eps == 0.0 {
        out.push(CheckReport::new(
            "kt_inequality_psi",
            "Kuhn-Tucker inequality via slope functional",
            psi_worst,
            tol_rel * scale,
            format!("state {psi_loc}"),
        ));
    }
    out.push(CheckReport::new(
        "stress_constraint",
        "stress constraint",
        stress_worst,
        tol_rel * scale,
        format!("state {stress_loc}"),
    ));
    out
}

/// Irreversibility and box constraints, exact (zero tolerance).
pub fn check_irreversibility(traj: &Trajectory) -> CheckReport {
    let mut worst = 0.0f64;
    let mut loc = String::from("-");
    for (i, w) in traj.states.windows(2).enumerate() {
        for (v, (a, b)) in w[1].alpha.iter().zip(&w[0].alpha).enumerate() {
            let inc = a - b;
            if inc > worst {
                worst = inc;
                loc = format!("step {} node {v}", i + 1);
            }
        }
    }
    for (i, s) in traj.states.iter().enumerate() {
        let bv = s.box_violation();
        if bv > worst {
            worst = bv;
            loc = format!("state {i} box");
        }
    }
    CheckReport::new("irreversibility", "irreversibility and box constraints", worst, 0.0, loc)
}

/// r_eff·Σ‖Δp‖₁ ≤ Σ𝓗(Δp) on the whole trajectory.
pub fn check_dissipation_radius_bound(
    traj: &Trajectory,
    law: &MaterialLaw,
    tol_rel: f64,
) -> CheckReport {
    let scale = traj.energy_scale();
    let lhs: f64 = traj
        .records
        .iter()
        .map(|r| law.constraint.r_eff() * r.dp_l1)
        .sum();
    let rhs: f64 = traj.records.iter().map(|r| r.h_increment).sum();
    CheckReport::new(
        "dissipation_radius_bound",
        "support-function lower bound on plastic dissipation",
        lhs - rhs,
        tol_rel * scale,
        "whole trajectory".into(),
    )
}

/// Per-state equilibrium residuals.
pub fn check_equilibrium(
    traj: &Trajectory,
    law: &MaterialLaw,
    fe: &FeSpace,
    tol_rel: f64,
) -> CheckReport {
    let scale = traj.energy_scale();
    let mut worst = 0.0f64;
    let mut loc = 0usize;
    for (i, s) in traj.states.iter().enumerate() {
        let r = energy::equilibrium_residual(s, law, fe);
        if r > worst {
            worst = r;
            loc = i;
        }
    }
    CheckReport::new(
        "equilibrium",
        "discrete equilibrium of the stress field",
        worst,
        tol_rel * scale,
        format!("state {loc}"),
    )
}

/// The full per-trajectory suite with scale-relative tolerances.
pub fn run_all_checks(
    traj: &Trajectory,
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    out.push(check_irreversibility(traj));
    out.push(check_energy_balance(traj, balance_tolerance(traj)));
    out.push(check_kuhn_tucker(traj, 1e-8));
    out.push(check_hill(traj, law, fe, hill_tolerance(traj)));
    out.push(check_equilibrium(traj, law, fe, 1e-8));
    out.push(check_dissipation_radius_bound(traj, law, 1e-10));
    out.extend(check_variational_inequalities(traj, law, fe, 1e-6));
    // Global stability is a property of energetic evolutions only; viscous
    // trajectories legitimately lag behind the global minimizer.
    if traj.eps == 0.0 {
        out.push(check_global_stability(traj, load, law, fe, 8, seed, 1e-9)?);
    }
    let cont = continuity_ratio(traj, load, fe, 10_000)?;
    out.push(CheckReport::new(
        "continuity_zero_denominator",
        "continuity estimate guard",
        cont.zero_denominator_violation,
        1e-10,
        format!("{} pairs", cont.pairs),
    ));
    Ok(out)
}

/// First-order-in-τ envelope for the balance residual.
fn balance_tolerance(traj: &Trajectory) -> f64 {
    // C·τ with a generous constant; callers needing the refinement ratio
    // compare two runs instead.
    10.0 * traj.tau()
}

fn hill_tolerance(traj: &Trajectory) -> f64 {
    10.0 * traj.tau()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{run_energetic, run_viscous};
    use crate::load::Ramp;
    use crate::material::{
        ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, ProfileKind,
    };
    use crate::mesh::Mesh;
    use crate::solver::SolverConfig;

    fn law() -> MaterialLaw {
        MaterialLaw::new(
            HookeLaw::new(1.0, 1.0).unwrap(),
            HardeningProfile::new(ProfileKind::Quadratic, 3.0, 0.15).unwrap(),
            DamageDissipation::new(ProfileKind::Linear, 0.04).unwrap(),
            ConstraintSet::drucker_prager(0.5, 0.35, 2).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    fn shear() -> LoadProgram {
        LoadProgram::new(
            [[0.0, 0.5], [0.5, -0.3]],
            Ramp::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_load_suite_is_clean() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 2, 2).unwrap());
        let ml = law();
        let cfg = SolverConfig::default();
        let load = LoadProgram::new([[0.0; 2]; 2], Ramp::identity(1.0), 1.0).unwrap();
        let traj = run_energetic(&load, &ml, &fe, 4, &cfg).unwrap();
        let checks = run_all_checks(&traj, &load, &ml, &fe, 5).unwrap();
        for c in &checks {
            assert!(c.pass, "{}: residual {} > tol {}", c.id, c.residual, c.tolerance);
            assert!(c.residual <= 1e-12, "{} residual {}", c.id, c.residual);
        }
    }

    #[test]
    fn small_benchmark_suite_passes() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 4, 4).unwrap());
        let ml = law();
        let cfg = SolverConfig::default();
        let load = shear();
        for traj in [
            run_viscous(&load, &ml, &fe, 10, 0.05, &cfg).unwrap(),
            run_energetic(&load, &ml, &fe, 10, &cfg).unwrap(),
        ] {
            let checks = run_all_checks(&traj, &load, &ml, &fe, 5).unwrap();
            for c in &checks {
                assert!(
                    c.pass,
                    "eps={} {}: residual {:.3e} > tol {:.3e} at {}",
                    traj.eps, c.id, c.residual, c.tolerance, c.location
                );
            }
        }
    }

    #[test]
    fn perturbed_state_detected_by_stability_check() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 3, 3).unwrap());
        let ml = law();
        let cfg = SolverConfig::default();
        let load = shear();
        let mut traj = run_energetic(&load, &ml, &fe, 6, &cfg).unwrap();
        // Un-equilibrate the displacement of the last state (keeping the
        // kinematic constraint): the elastic-relaxation competitor beats it.
        let last = traj.states.len() - 1;
        let interior = (0..fe.n_vertices())
            .find(|&v| !fe.mesh.is_boundary[v])
            .unwrap();
        traj.states[last].u[2 * interior] += 0.3;
        let perturbed_p = traj.states[last].p.clone();
        for t in 0..fe.n_elements() {
            let eu = fe.element_strain(&traj.states[last].u, t);
            let pm = fe.element_mean_voigt(&perturbed_p, t);
            for c in 0..M {
                traj.states[last].e[M * t + c] = eu[c] - pm[c];
            }
        }
        let report = check_global_stability(&traj, &load, &ml, &fe, 4, 2, 1e-9).unwrap();
        assert!(!report.pass, "violation should be detected: {report:?}");
    }

    #[test]
    fn tampered_alpha_fails_irreversibility() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 2, 2).unwrap());
        let ml = law();
        let cfg = SolverConfig::default();
        let load = shear();
        let mut traj = run_energetic(&load, &ml, &fe, 4, &cfg).unwrap();
        traj.states[2].alpha[3] += 0.25;
        let report = check_irreversibility(&traj);
        assert!(!report.pass);
    }

    #[test]
    fn viscous_mode_replaces_stationarity_inequality() {
        // At large ε a moving viscous state violates the energetic
        // stationarity inequality by design (the viscous Kuhn-Tucker
        // equality replaces it); the report distinguishes the modes by
        // omitting the Ψ check for ε > 0.
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 3, 3).unwrap());
        let ml = MaterialLaw::new(
            HookeLaw::new(1.0, 1.0).unwrap(),
            HardeningProfile::new(ProfileKind::Quadratic, 0.9, 2.0).unwrap(),
            DamageDissipation::new(ProfileKind::Linear, 0.4).unwrap(),
            ConstraintSet::drucker_prager(0.2, 0.12, 2).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let load = LoadProgram::new(
            [[0.0, 0.5], [0.5, -0.3]],
            Ramp::new(vec![(0.0, 0.0), (1.0, 5.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        let traj = run_viscous(&load, &ml, &fe, 12, 0.2, &cfg).unwrap();
        let moving = traj
            .records
            .iter()
            .position(|r| r.dalpha_l2 > 1e-6)
            .expect("damage should move");
        let psi = energy::psi_slope(&traj.states[moving + 1], &ml, &fe);
        assert!(psi > 1e-6, "moving viscous state has positive slope: {psi}");
        let checks = check_variational_inequalities(&traj, &ml, &fe, 1e-6);
        assert!(checks.iter().all(|c| c.id != "kt_inequality_psi"));
        let energetic = run_energetic(&load, &ml, &fe, 6, &cfg).unwrap();
        let checks = check_variational_inequalities(&energetic, &ml, &fe, 1e-6);
        assert!(checks.iter().any(|c| c.id == "kt_inequality_psi"));
    }

    #[test]
    fn synthetic_zero_denominator_pair_is_flagged() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 2, 2).unwrap());
        let ml = law();
        let cfg = SolverConfig::default();
        // Constant ramp on [0,1]: no load change, but inject a state change.
        let load = LoadProgram::new(
            [[0.0, 0.1], [0.1, 0.0]],
            Ramp::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        let mut traj = run_energetic(&load, &ml, &fe, 4, &cfg).unwrap();
        for x in traj.states[3].p.iter_mut() {
            *x += 0.1;
        }
        let cont = continuity_ratio(&traj, &load, &fe, 1000).unwrap();
        assert!(cont.zero_denominator_violation > 1e-10);
    }
}
