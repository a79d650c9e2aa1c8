//! Arc-length reparametrization of viscous trajectories, plateau detection,
//! and the Balanced Viscosity condition checks on the rescaled bundle.

use crate::energy::{self, psi_slope};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::material::MaterialLaw;
use crate::space::{FeSpace, NormKind};
use crate::state::State;

/// A viscous trajectory reparametrized by the arc length
/// s_i = s_{i−1} + τ + ‖Δα‖_{H¹} + ‖Δe‖₂ + ‖Δp‖_{H¹}.
#[derive(Debug, Clone)]
pub struct RescaledTrajectory {
    /// Arc-length images of the original knots.
    pub knot_s: Vec<f64>,
    /// Original states (owned copies) at the knots.
    pub knot_states: Vec<State>,
    /// Per original interval: (Δt, ‖Δα‖_{H¹}, ‖Δe‖₂, ‖Δp‖_{H¹}) / Δs.
    pub knot_slopes: Vec<[f64; 4]>,
    /// Uniform s-grid on [0, S].
    pub grid_s: Vec<f64>,
    /// States reinterpolated piecewise-affinely onto the grid.
    pub grid_states: Vec<State>,
    /// Physical time t₀(s) on the grid.
    pub grid_t0: Vec<f64>,
    pub total_s: f64,
    pub eps: f64,
    /// Load-discretization term δ_k of the underlying run.
    pub delta_k: f64,
    /// Viscous per-step records carried over (Δ-norms per original step).
    pub knot_dalpha_l2: Vec<f64>,
    pub knot_h_increment: Vec<f64>,
    pub knot_work_explicit: Vec<f64>,
}

/// Builds the rescaled bundle with `grid_points` uniform samples.
pub fn arclength_parametrize(traj: &Trajectory, grid_points: usize) -> Result<RescaledTrajectory> {
    if traj.states.len() < 2 {
        return Err(Error::Usage("trajectory too short to reparametrize".into()));
    }
    let n = traj.states.len();
    let mut knot_s = Vec::with_capacity(n);
    knot_s.push(0.0);
    let tau = traj.tau();
    let mut knot_slopes = Vec::with_capacity(n - 1);
    for r in &traj.records {
        let ds = tau + r.dalpha_h1 + r.de_l2 + r.dp_h1;
        let s_prev = *knot_s.last().unwrap();
        knot_s.push(s_prev + ds);
        knot_slopes.push([tau / ds, r.dalpha_h1 / ds, r.de_l2 / ds, r.dp_h1 / ds]);
    }
    let total_s = *knot_s.last().unwrap();

    let grid_points = grid_points.max(2);
    let mut grid_s = Vec::with_capacity(grid_points);
    let mut grid_states = Vec::with_capacity(grid_points);
    let mut grid_t0 = Vec::with_capacity(grid_points);
    let mut seg = 0usize;
    for g in 0..grid_points {
        let s = total_s * g as f64 / (grid_points - 1) as f64;
        while seg + 1 < knot_s.len() - 1 && knot_s[seg + 1] < s {
            seg += 1;
        }
        let lo = knot_s[seg];
        let hi = knot_s[seg + 1];
        let w = if hi > lo { ((s - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        let state = State::lerp(&traj.states[seg], &traj.states[seg + 1], w);
        grid_t0.push(state.t);
        grid_states.push(state);
        grid_s.push(s);
    }

    Ok(RescaledTrajectory {
        knot_s,
        knot_states: traj.states.clone(),
        knot_slopes,
        grid_s,
        grid_states,
        grid_t0,
        total_s,
        eps: traj.eps,
        delta_k: traj.delta_k,
        knot_dalpha_l2: traj.records.iter().map(|r| r.dalpha_l2).collect(),
        knot_h_increment: traj.records.iter().map(|r| r.h_increment).collect(),
        knot_work_explicit: traj.records.iter().map(|r| r.work_explicit).collect(),
    })
}

/// Maximal s-intervals of the uniform grid where the discrete ṫ₀ falls
/// below `slope_threshold`. A plateau must persist for at least three grid
/// intervals; shorter dips are noise.
pub fn detect_plateaus(rt: &RescaledTrajectory, slope_threshold: f64) -> Vec<(f64, f64)> {
    let n = rt.grid_s.len();
    if n < 2 {
        return Vec::new();
    }
    let mut flags = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let ds = rt.grid_s[i + 1] - rt.grid_s[i];
        let dt = rt.grid_t0[i + 1] - rt.grid_t0[i];
        flags.push(ds > 0.0 && dt / ds < slope_threshold);
    }
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=flags.len() {
        let on = i < flags.len() && flags[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                if i - s0 >= 3 {
                    out.push((rt.grid_s[s0], rt.grid_s[i]));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub fn in_intervals(s: f64, intervals: &[(f64, f64)]) -> bool {
    intervals.iter().any(|&(a, b)| s >= a && s <= b)
}

/// Residual maxima for the Balanced Viscosity conditions on the rescaled
/// bundle. Report-only; callers decide pass thresholds.
#[derive(Debug, Clone)]
pub struct BvReport {
    /// max(0, −Δt₀) over grid intervals: monotonicity of t₀.
    pub t0_monotonicity: f64,
    /// max(0, Δt₀ − Δs): 1-Lipschitz violation of t₀.
    pub t0_lipschitz: f64,
    /// Max nodewise increase of α along s.
    pub alpha_monotonicity: f64,
    /// Max kinematic violation over knot states.
    pub kinematic: f64,
    /// Max interior equilibrium residual over knot states.
    pub equilibrium: f64,
    /// Max stress-constraint residual over knot states.
    pub stress: f64,
    /// Max Ψ outside the detected plateaus (grid states).
    pub psi_outside_plateaus: f64,
    /// Max Ψ anywhere on the grid.
    pub psi_max: f64,
    /// Min over s of the slack of the provably one-sided discrete form of
    /// the energy inequality (the incremental scheme gives the viscous
    /// dissipation a ½ factor and the load-discretization term δ_k);
    /// ≥ −tol certifies it. The Ψ weighting is right-endpoint, which equals
    /// ε‖α̇‖ at the discrete optimality conditions.
    pub balance_slack_min: f64,
    /// sup over s of the |residual| of the full energy balance with the
    /// trapezoid Ψ quadrature; decays first order in τ.
    pub balance_residual_trapezoid: f64,
    /// Max generalized Kuhn–Tucker equality residual over knots.
    pub kt_generalized: f64,
    /// Max Hill residual over knot intervals (right-endpoint stresses).
    pub hill: f64,
    /// Whether the activity set {Ψ > ψ_tol} is covered by the plateaus.
    pub activity_within_plateaus: bool,
    /// Grid fraction where ṫ₀ is numerically zero.
    pub frozen_time_fraction: f64,
    /// Per-interval 1-Lipschitz bundle violation max:
    /// ‖Δα‖_{H¹}+‖Δe‖₂+‖Δp‖_{H¹} − Δs over grid intervals.
    pub bundle_lipschitz: f64,
    pub plateaus: Vec<(f64, f64)>,
}

/// Evaluates the rescaled-evolution conditions: irreversibility of t₀ and α,
/// kinematics and equilibrium, the stress constraint, the Kuhn–Tucker
/// inequality outside plateaus, the energy balance, and the generalized
/// Kuhn–Tucker / Hill identities.
pub fn check_bv_conditions(
    rt: &RescaledTrajectory,
    law: &MaterialLaw,
    fe: &FeSpace,
    slope_threshold: f64,
    psi_tol: f64,
) -> Result<BvReport> {
    let plateaus = detect_plateaus(rt, slope_threshold);
    let ng = rt.grid_s.len();

    // Irreversibility: t₀ monotone 1-Lipschitz, α nonincreasing.
    let mut t0_monotonicity = 0.0f64;
    let mut t0_lipschitz = 0.0f64;
    let mut alpha_monotonicity = 0.0f64;
    let mut bundle_lipschitz = f64::NEG_INFINITY;
    let mut d0_count = 0usize;
    for i in 0..ng - 1 {
        let ds = rt.grid_s[i + 1] - rt.grid_s[i];
        let dt = rt.grid_t0[i + 1] - rt.grid_t0[i];
        t0_monotonicity = t0_monotonicity.max(-dt);
        t0_lipschitz = t0_lipschitz.max(dt - ds);
        if dt <= 1e-12 * rt.total_s {
            d0_count += 1;
        }
        let a = &rt.grid_states[i];
        let b = &rt.grid_states[i + 1];
        let dalpha: Vec<f64> = b.alpha.iter().zip(&a.alpha).map(|(x, y)| x - y).collect();
        alpha_monotonicity =
            alpha_monotonicity.max(dalpha.iter().cloned().fold(0.0, f64::max));
        let de: Vec<f64> = b.e.iter().zip(&a.e).map(|(x, y)| x - y).collect();
        let dp: Vec<f64> = b.p.iter().zip(&a.p).map(|(x, y)| x - y).collect();
        let bundle = fe.scalar_h1_lumped(&dalpha)
            + fe.element_tensor_l2(&de)
            + fe.tensor_norm(&dp, NormKind::H1)?;
        bundle_lipschitz = bundle_lipschitz.max(bundle - ds);
    }

    // Kinematics, equilibrium and stress constraint at the knots (exact
    // solver states).
    let mut kinematic = 0.0f64;
    let mut equilibrium = 0.0f64;
    let mut stress = f64::NEG_INFINITY;
    for s in &rt.knot_states {
        kinematic = kinematic.max(s.kinematic_violation(fe, None));
        equilibrium = equilibrium.max(energy::equilibrium_residual(s, law, fe));
        stress = stress.max(energy::stress_constraint_residual(s, law, fe, 8, 17));
    }

    // Kuhn–Tucker inequality via Ψ outside plateaus, on the grid.
    let mut psi_outside = 0.0f64;
    let mut psi_max = 0.0f64;
    let mut activity_within_plateaus = true;
    for i in 0..ng {
        let psi = psi_slope(&rt.grid_states[i], law, fe);
        psi_max = psi_max.max(psi);
        let inside = in_intervals(rt.grid_s[i], &plateaus);
        if !inside {
            psi_outside = psi_outside.max(psi);
        }
        if psi > psi_tol && !inside {
            activity_within_plateaus = false;
        }
    }

    // Energy balance along s. The right-endpoint Ψ weighting equals the
    // viscous rate term exactly at the discrete optimality conditions
    // (Ψ_i = ε‖α̇_i‖), and with the incremental scheme's ½ factor plus δ_k
    // the slack is the provably one-sided discrete energy inequality. The
    // trapezoid full-balance residual is reported alongside; it carries the
    // O(τ) error of the scheme.
    let mut balance_slack_min = f64::INFINITY;
    let mut balance_residual_trapezoid = 0.0f64;
    {
        let e0 = energy::total_energy(&rt.knot_states[0], law, fe)?.total;
        let mut cum_h = 0.0;
        let mut cum_work = 0.0;
        let mut cum_psi_right = 0.0;
        let mut cum_psi_trap = 0.0;
        let mut psi_prev = psi_slope(&rt.knot_states[0], law, fe);
        for i in 0..rt.knot_states.len() - 1 {
            cum_h += rt.knot_h_increment[i];
            cum_work += rt.knot_work_explicit[i];
            let psi_i = psi_slope(&rt.knot_states[i + 1], law, fe);
            cum_psi_right += rt.knot_dalpha_l2[i] * psi_i;
            cum_psi_trap += rt.knot_dalpha_l2[i] * 0.5 * (psi_i + psi_prev);
            psi_prev = psi_i;
            let e_i = energy::total_energy(&rt.knot_states[i + 1], law, fe)?.total;
            let slack =
                e0 + cum_work + rt.delta_k - (e_i + cum_h + 0.5 * cum_psi_right);
            balance_slack_min = balance_slack_min.min(slack);
            let resid = (e_i + cum_h + cum_psi_trap - e0 - cum_work).abs();
            balance_residual_trapezoid = balance_residual_trapezoid.max(resid);
        }
    }

    // Generalized Kuhn–Tucker and Hill identities, per original interval with
    // right-endpoint states.
    let mut kt_generalized = 0.0f64;
    let mut hill = 0.0f64;
    for i in 0..rt.knot_states.len() - 1 {
        let a = &rt.knot_states[i];
        let b = &rt.knot_states[i + 1];
        let dalpha: Vec<f64> = b.alpha.iter().zip(&a.alpha).map(|(x, y)| x - y).collect();
        let pairing = energy::partial_alpha(b, &dalpha, law, fe)?;
        let psi_i = psi_slope(b, law, fe);
        kt_generalized = kt_generalized.max((-pairing - rt.knot_dalpha_l2[i] * psi_i).abs());

        let dp: Vec<f64> = b.p.iter().zip(&a.p).map(|(x, y)| x - y).collect();
        let g = energy::stress_test_covector(b, law, fe);
        let h = energy::plastic_potential(&dp, law, fe);
        hill = hill.max((h - crate::la::dot(&g, &dp)).abs());
    }

    Ok(BvReport {
        t0_monotonicity,
        t0_lipschitz,
        alpha_monotonicity,
        kinematic,
        equilibrium,
        stress,
        psi_outside_plateaus: psi_outside,
        psi_max,
        balance_slack_min,
        balance_residual_trapezoid,
        kt_generalized,
        hill,
        activity_within_plateaus,
        frozen_time_fraction: d0_count as f64 / (ng - 1) as f64,
        bundle_lipschitz,
        plateaus,
    })
}

/// Alignment of arc-length intervals across different ε before comparing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// Rescale each [0, S_ε] affinely onto [0, 1].
    Affine,
    /// Extend every trajectory by its final state to the longest S.
    ConstantTail,
}

/// Pairwise sup-distances between consecutive-ε rescaled trajectories after
/// aligning the arc-length intervals. The limit theory guarantees
/// subsequential convergence only; these numbers are diagnostics, never
/// asserted as a convergence proof.
pub fn eps_limit_compare(
    rts: &[&RescaledTrajectory],
    fe: &FeSpace,
    samples: usize,
) -> Result<Vec<f64>> {
    eps_limit_compare_aligned(rts, fe, samples, Alignment::Affine)
}

pub fn eps_limit_compare_aligned(
    rts: &[&RescaledTrajectory],
    fe: &FeSpace,
    samples: usize,
    alignment: Alignment,
) -> Result<Vec<f64>> {
    if rts.len() < 2 {
        return Err(Error::Usage("need at least two rescaled trajectories".into()));
    }
    let s_max = rts.iter().map(|rt| rt.total_s).fold(0.0, f64::max);
    let sample_state = |rt: &RescaledTrajectory, x: f64| -> (State, f64) {
        let s = match alignment {
            Alignment::Affine => x * rt.total_s,
            Alignment::ConstantTail => (x * s_max).min(rt.total_s),
        };
        let mut seg = 0;
        while seg + 1 < rt.knot_s.len() - 1 && rt.knot_s[seg + 1] < s {
            seg += 1;
        }
        let lo = rt.knot_s[seg];
        let hi = rt.knot_s[seg + 1];
        let w = if hi > lo { ((s - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        let st = State::lerp(&rt.knot_states[seg], &rt.knot_states[seg + 1], w);
        let t = st.t;
        (st, t)
    };
    let mut out = Vec::new();
    for pair in rts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mut worst = 0.0f64;
        for g in 0..samples {
            let x = g as f64 / (samples - 1).max(1) as f64;
            let (sa, ta) = sample_state(a, x);
            let (sb, tb) = sample_state(b, x);
            let dalpha: Vec<f64> = sa.alpha.iter().zip(&sb.alpha).map(|(u, v)| u - v).collect();
            let dp: Vec<f64> = sa.p.iter().zip(&sb.p).map(|(u, v)| u - v).collect();
            let de: Vec<f64> = sa.e.iter().zip(&sb.e).map(|(u, v)| u - v).collect();
            let d = fe.scalar_norm(&dalpha, NormKind::L2)?
                + fe.tensor_norm(&dp, NormKind::L2)?
                + fe.element_tensor_l2(&de)
                + (ta - tb).abs();
            worst = worst.max(d);
        }
        out.push(worst);
    }
    Ok(out)
}
