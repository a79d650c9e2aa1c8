//! Time marching: energetic (ε = 0) and viscous (ε > 0) trajectories on the
//! uniform grid t_i = iT/k, with per-step bookkeeping of every quantity the
//! diagnostics and the rescaling consume.

use crate::energy::{self, total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::load::LoadProgram;
use crate::material::MaterialLaw;
use crate::oracle;
use crate::solver::{incremental_minimize, ElasticSystem, SolverConfig};
use crate::space::{FeSpace, NormKind};
use crate::state::State;

/// Per-step bookkeeping between states i−1 and i.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub index: usize,
    pub t: f64,
    /// 𝓗(p_i − p_{i−1}).
    pub h_increment: f64,
    /// (ε/τ)‖Δα‖²_lumped = ε τ‖α̇‖², the viscous dissipation increment.
    pub viscous_increment: f64,
    /// τ(ℂe_{i−1}, Eẇ_i): the explicit work increment of the discrete
    /// energy inequality.
    pub work_explicit: f64,
    /// τ(ℂ(e_{i−1}+e_i)/2, Eẇ_i): trapezoid work increment.
    pub work_trapezoid: f64,
    /// Lumped-L² and lumped-H¹ norms of Δα, L² of Δe, H¹ and L¹ of Δp.
    pub dalpha_l2: f64,
    pub dalpha_h1: f64,
    pub de_l2: f64,
    pub dp_h1: f64,
    pub dp_l1: f64,
    /// Kuhn–Tucker equality residual |∂_α𝓔[α̇] + ε‖α̇‖²|.
    pub kt_residual: f64,
    /// Plastic substep stress residual and Hill gap at acceptance.
    pub plastic_residual: f64,
    pub hill_gap: f64,
    pub damage_kkt: f64,
    /// Slack of the discrete energy inequality at this step (cumulative
    /// form), ≥ −tol for a sound solver.
    pub inequality_slack: f64,
    pub sweeps: usize,
    pub start_used: usize,
    pub flag: Option<String>,
    pub energy: EnergyBreakdown,
}

/// A complete discrete evolution with its records.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub records: Vec<StepRecord>,
    pub eps: f64,
    pub k: usize,
    pub t_final: f64,
    /// δ_k = τ(γ₂/2)∫‖Eẇ‖² of the discrete energy inequality.
    pub delta_k: f64,
    pub initial_energy: EnergyBreakdown,
}

impl Trajectory {
    pub fn tau(&self) -> f64 {
        self.t_final / self.k as f64
    }

    /// Σ_{j≤i} 𝓗(Δp_j).
    pub fn cumulative_dissipation(&self, i: usize) -> f64 {
        self.records[..i].iter().map(|r| r.h_increment).sum()
    }

    pub fn cumulative_viscous(&self, i: usize) -> f64 {
        self.records[..i].iter().map(|r| r.viscous_increment).sum()
    }

    pub fn cumulative_work_explicit(&self, i: usize) -> f64 {
        self.records[..i].iter().map(|r| r.work_explicit).sum()
    }

    pub fn cumulative_work_trapezoid(&self, i: usize) -> f64 {
        self.records[..i].iter().map(|r| r.work_trapezoid).sum()
    }

    /// Σ𝓗(Δp) over the stored grid restricted to [t1, t2].
    pub fn h_variation(
        &self,
        law: &MaterialLaw,
        fe: &FeSpace,
        t1: f64,
        t2: f64,
    ) -> Result<f64> {
        energy::h_variation(&self.states, law, fe, t1, t2)
    }

    /// Scale for relative tolerances: max(1, 𝓔(0), sup_t 𝓔(t)).
    pub fn energy_scale(&self) -> f64 {
        let sup = self
            .records
            .iter()
            .map(|r| r.energy.total)
            .fold(self.initial_energy.total, f64::max);
        sup.max(1.0)
    }
}

/// Builds the initial state: α⁰ ≡ 1, p⁰ ≡ 0, (u⁰,e⁰) in elastic equilibrium
/// for w(0); then certifies global stability by one incremental solve at
/// t = 0, which must return the same state (same energy, to tolerance).
pub fn make_initial_state(
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    elastic: &ElasticSystem,
    cfg: &SolverConfig,
) -> Result<State> {
    let datum = load.datum(fe, 0.0);
    let mut s = State::sound(fe);
    let (u, e) = elastic.solve(fe, law, &datum, &s.p)?;
    s.u = u;
    s.e = e;
    s.t = 0.0;
    let tau0 = load.t_final / 100.0;
    let (_, stats) = incremental_minimize(&s, &datum, 0.0, 0.0, tau0, law, fe, elastic, cfg)?;
    let e0 = total_energy(&s, law, fe)?.total;
    let gap = e0 - stats.objective;
    if gap > 1e-9 * e0.max(1.0) {
        return Err(Error::InitialState { gap });
    }
    Ok(s)
}

/// Runs the incremental scheme with ε ≥ 0 on the uniform grid. ε = 0 is the
/// energetic scheme; the discrete energy inequality is asserted at every
/// step and its violation is a hard failure.
pub fn run_evolution(
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    k: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if k < 1 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let elastic = ElasticSystem::new(fe, law, cfg.linear_solver)?;
    let initial = make_initial_state(load, law, fe, &elastic, cfg)?;
    let initial_energy = total_energy(&initial, law, fe)?;
    let tau = load.t_final / k as f64;
    let gamma2 = law.hooke.gamma2(2);
    let delta_k = tau * 0.5 * gamma2 * load.strain_rate_l2_sq_total(fe);

    let mut states = vec![initial];
    let mut records: Vec<StepRecord> = Vec::with_capacity(k);
    let mut cum_h = 0.0;
    let mut cum_visc = 0.0;
    let mut cum_work = 0.0;

    for i in 1..=k {
        let t = i as f64 * tau;
        let datum = load.datum(fe, t);
        let prev = states.last().unwrap();
        let (s, stats) = incremental_minimize(prev, &datum, t, eps, tau, law, fe, &elastic, cfg)?;

        let dp: Vec<f64> = s.p.iter().zip(&prev.p).map(|(a, b)| a - b).collect();
        let dalpha: Vec<f64> = s
            .alpha
            .iter()
            .zip(&prev.alpha)
            .map(|(a, b)| a - b)
            .collect();
        let de: Vec<f64> = s.e.iter().zip(&prev.e).map(|(a, b)| a - b).collect();
        let h_increment = energy::plastic_potential(&dp, law, fe);
        let dalpha_l2 = fe.scalar_l2_lumped(&dalpha);
        let viscous_increment = if eps > 0.0 {
            eps / tau * dalpha_l2 * dalpha_l2
        } else {
            0.0
        };

        // Work increments against the constant boundary strain rate of this
        // step, exact for the affine-ramp program.
        let ramp_rate = (load.ramp.value(t) - load.ramp.value(t - tau)) / tau;
        let strain_rate = load.sym_g().scale(ramp_rate);
        let sr = [
            strain_rate.voigt()[0],
            strain_rate.voigt()[1],
            strain_rate.voigt()[2],
        ];
        let work_explicit = tau * energy::work_pairing(&prev.e, &sr, law, fe);
        let e_mid: Vec<f64> = s.e.iter().zip(&prev.e).map(|(a, b)| 0.5 * (a + b)).collect();
        let work_trapezoid = tau * energy::work_pairing(&e_mid, &sr, law, fe);

        let energy_now = total_energy(&s, law, fe)?;
        cum_h += h_increment;
        cum_visc += viscous_increment;
        cum_work += work_explicit;
        // The inequality carries (ε/2)Στ‖α̇‖² = ½ of the recorded increments.
        let inequality_slack = initial_energy.total + cum_work + delta_k
            - (energy_now.total + cum_h + 0.5 * cum_visc);
        let scale = energy_now.total.abs().max(initial_energy.total).max(1.0);
        if inequality_slack < -1e-9 * scale {
            return Err(Error::EnergyInequality {
                step: i,
                slack: inequality_slack,
            });
        }

        records.push(StepRecord {
            index: i,
            t,
            h_increment,
            viscous_increment,
            work_explicit,
            work_trapezoid,
            dalpha_l2,
            dalpha_h1: fe.scalar_h1_lumped(&dalpha),
            de_l2: fe.element_tensor_l2(&de),
            dp_h1: fe.tensor_norm(&dp, NormKind::H1)?,
            dp_l1: fe.tensor_norm(&dp, NormKind::L1)?,
            kt_residual: stats.kt_equality,
            plastic_residual: stats.plastic_residual,
            hill_gap: stats.hill_gap,
            damage_kkt: stats.damage_kkt,
            inequality_slack,
            sweeps: stats.sweeps,
            start_used: stats.start_used,
            flag: stats.flag,
            energy: energy_now,
        });
        states.push(s);
    }

    Ok(Trajectory {
        states,
        records,
        eps,
        k,
        t_final: load.t_final,
        delta_k,
        initial_energy,
    })
}

pub fn run_energetic(
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    k: usize,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    run_evolution(load, law, fe, k, 0.0, cfg)
}

pub fn run_viscous(
    load: &LoadProgram,
    law: &MaterialLaw,
    fe: &FeSpace,
    k: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if eps <= 0.0 {
        return Err(Error::Config("viscous run needs eps > 0".into()));
    }
    run_evolution(load, law, fe, k, eps, cfg)
}

/// One row of the discrete energy report.
#[derive(Debug, Clone, Copy)]
pub struct EnergyReportRow {
    pub index: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// LHS = 𝓔_i + Σ𝓗(Δp) + (ε/2)Στ‖α̇‖², RHS = 𝓔₀ + Στ(ℂe_{j−1},Eẇ_j) + δ_k,
/// per step; slack = RHS − LHS.
pub fn discrete_energy_report(traj: &Trajectory) -> Vec<EnergyReportRow> {
    let mut rows = Vec::with_capacity(traj.k);
    let mut cum_h = 0.0;
    let mut cum_visc = 0.0;
    let mut cum_work = 0.0;
    for (i, r) in traj.records.iter().enumerate() {
        cum_h += r.h_increment;
        cum_visc += r.viscous_increment;
        cum_work += r.work_explicit;
        let lhs = r.energy.total + cum_h + 0.5 * cum_visc;
        let rhs = traj.initial_energy.total + cum_work + traj.delta_k;
        rows.push(EnergyReportRow {
            index: i + 1,
            t: r.t,
            lhs,
            rhs,
            slack: rhs - lhs,
        });
    }
    rows
}

/// Brute-force oracle vs the incremental solver on one homogeneous step;
/// returns (solver energy, oracle energy, relative gap).
#[allow(clippy::too_many_arguments)]
pub fn oracle_compare(
    prev: &State,
    load: &LoadProgram,
    t_new: f64,
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
    cfg: &SolverConfig,
) -> Result<(f64, f64, f64)> {
    let elastic = ElasticSystem::new(fe, law, cfg.linear_solver)?;
    let datum = load.datum(fe, t_new);
    let (_, stats) = incremental_minimize(prev, &datum, t_new, eps, tau, law, fe, &elastic, cfg)?;
    let oracle = oracle::brute_force_oracle_homogeneous(prev, &datum, t_new, eps, tau, law, fe)?;
    let denom = oracle.energy.abs().max(1e-12);
    let gap = (stats.objective - oracle.energy) / denom;
    Ok((stats.objective, oracle.energy, gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::Ramp;
    use crate::material::{
        ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, ProfileKind,
    };
    use crate::mesh::Mesh;

    fn bench_law() -> MaterialLaw {
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

    fn shear_load() -> LoadProgram {
        LoadProgram::new(
            [[0.0, 0.5], [0.5, -0.3]],
            Ramp::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn initial_state_certificates() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 3, 3).unwrap());
        let law = bench_law();
        let cfg = SolverConfig::default();
        let elastic = ElasticSystem::new(&fe, &law, cfg.linear_solver).unwrap();

        // Zero load at t = 0: zero state, certificate trivially passes.
        let load0 = LoadProgram::new([[0.0; 2]; 2], Ramp::identity(1.0), 1.0).unwrap();
        let s = make_initial_state(&load0, &law, &fe, &elastic, &cfg).unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));

        // Sub-yield w(0): elastic state passes.
        let load_small = LoadProgram::new(
            [[0.0, 0.05], [0.05, -0.03]],
            Ramp::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(make_initial_state(&load_small, &law, &fe, &elastic, &cfg).is_ok());

        // Supra-yield w(0): certificate must fail with a competitor gap.
        let load_big = LoadProgram::new(
            [[0.0, 0.8], [0.8, -0.5]],
            Ramp::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap(),
            1.0,
        )
        .unwrap();
        match make_initial_state(&load_big, &law, &fe, &elastic, &cfg) {
            Err(Error::InitialState { gap }) => assert!(gap > 0.0),
            other => panic!("expected initial-state failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_ramp_trajectory_is_constant() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 2, 2).unwrap());
        let law = bench_law();
        let cfg = SolverConfig::default();
        let load = LoadProgram::new([[0.0; 2]; 2], Ramp::identity(1.0), 1.0).unwrap();
        let traj = run_energetic(&load, &law, &fe, 5, &cfg).unwrap();
        for r in &traj.records {
            assert_eq!(r.h_increment, 0.0);
            assert_eq!(r.dalpha_l2, 0.0);
            assert!(r.energy.total.abs() < 1e-15);
        }
        let report = discrete_energy_report(&traj);
        for row in &report {
            assert!((row.slack - traj.delta_k).abs() < 1e-15);
        }
    }

    #[test]
    fn small_benchmark_energetic_run() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 4, 4).unwrap());
        let law = bench_law();
        let cfg = SolverConfig::default();
        let load = shear_load();
        let traj = run_energetic(&load, &law, &fe, 10, &cfg).unwrap();
        let scale = traj.energy_scale();
        let mut cum = 0.0;
        for r in &traj.records {
            assert!(r.h_increment >= -1e-14);
            cum += r.h_increment;
            assert!(r.inequality_slack >= -1e-9 * scale, "slack {}", r.inequality_slack);
            assert!(r.flag.is_none(), "{:?}", r.flag);
        }
        assert!(cum > 0.0, "plasticity should activate");
        for w in traj.states.windows(2) {
            assert!(w[1].alpha.iter().zip(&w[0].alpha).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn viscous_run_kt_equality_holds() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 4, 4).unwrap());
        let law = bench_law();
        let cfg = SolverConfig::default();
        let load = shear_load();
        let traj = run_viscous(&load, &law, &fe, 10, 0.05, &cfg).unwrap();
        let scale = traj.energy_scale();
        for r in &traj.records {
            assert!(
                r.kt_residual <= 1e-8 * scale,
                "step {} kt {}",
                r.index,
                r.kt_residual
            );
        }
        // Large ε with zero load stays put (identical to the energetic
        // constant trajectory).
        let load0 = LoadProgram::new([[0.0; 2]; 2], Ramp::identity(1.0), 1.0).unwrap();
        let frozen = run_viscous(&load0, &law, &fe, 4, 0.9, &cfg).unwrap();
        for r in &frozen.records {
            assert_eq!(r.dalpha_l2, 0.0);
            assert_eq!(r.h_increment, 0.0);
        }
    }

    #[test]
    fn refinement_shrinks_balance_residual() {
        let fe = FeSpace::new(Mesh::structured(1.0, 1.0, 3, 3).unwrap());
        let law = bench_law();
        let cfg = SolverConfig::default();
        let load = shear_load();
        let coarse = run_energetic(&load, &law, &fe, 8, &cfg).unwrap();
        let fine = run_energetic(&load, &law, &fe, 16, &cfg).unwrap();
        let residual = |t: &Trajectory| -> f64 {
            let mut worst = 0.0f64;
            for (i, r) in t.records.iter().enumerate() {
                let bal = (r.energy.total + t.cumulative_dissipation(i + 1)
                    + t.cumulative_viscous(i + 1)
                    - t.initial_energy.total
                    - t.cumulative_work_trapezoid(i + 1))
                .abs();
                worst = worst.max(bal);
            }
            worst
        };
        let rc = residual(&coarse);
        let rf = residual(&fine);
        assert!(rf < rc, "fine {rf} vs coarse {rc}");
    }
}
