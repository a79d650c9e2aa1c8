//! Brute-force verifier of one incremental minimization at a single material
//! point (homogeneous mode): exhaustive coarse-to-fine grid search over
//! (α, p) with the elastic strain determined by the kinematic constraint.

use crate::error::{Error, Result};
use crate::load::BoundaryDatum;
use crate::material::{v3, MaterialLaw};
use crate::space::{FeSpace, M};
use crate::state::State;

pub struct OracleOut {
    pub state: State,
    pub energy: f64,
}

/// Incremental objective density at one point, times the domain area:
/// ½ℂe:e + d(α) + b(α)|p|² + H(p − p_prev) + (ε/2τ)(α − α_prev)², with
/// e = Ew − p.
fn objective(
    strain: &[f64; M],
    alpha: f64,
    p: &[f64; M],
    alpha_prev: f64,
    p_prev: &[f64; M],
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    area: f64,
) -> f64 {
    let e = [strain[0] - p[0], strain[1] - p[1], strain[2] - p[2]];
    let sig = crate::energy::hooke_apply3(law, &e);
    let elastic = 0.5 * (sig[0] * e[0] + sig[1] * e[1] + sig[2] * e[2]);
    let dp = [p[0] - p_prev[0], p[1] - p_prev[1], p[2] - p_prev[2]];
    let h = v3::support(&dp, &law.constraint);
    if h.is_infinite() {
        return f64::INFINITY;
    }
    let pn2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let da = alpha - alpha_prev;
    area * (elastic
        + law.damage.value(alpha)
        + law.hardening.value(alpha) * pn2
        + h
        + if eps > 0.0 { eps / (2.0 * tau) * da * da } else { 0.0 })
}

/// Best p at fixed α by coarse-to-fine grid search (convex in p, so the
/// refinement is safe), resolution driven until the energy change per round
/// is below `tol`.
#[allow(clippy::too_many_arguments)]
fn minimize_p(
    strain: &[f64; M],
    alpha: f64,
    alpha_prev: f64,
    p_prev: &[f64; M],
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    area: f64,
    tol: f64,
) -> ([f64; M], f64) {
    let mut center = *p_prev;
    let range0 = v3::norm(strain) + v3::norm(p_prev) + 1.0;
    let mut half = range0;
    let mut best = *p_prev;
    let mut best_val = objective(strain, alpha, p_prev, alpha_prev, p_prev, eps, tau, law, area);
    let steps = 10usize;
    let mut last_round = f64::INFINITY;
    for _round in 0..220 {
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let q = [
                        center[0] - half + 2.0 * half * i as f64 / steps as f64,
                        center[1] - half + 2.0 * half * j as f64 / steps as f64,
                        center[2] - half + 2.0 * half * k as f64 / steps as f64,
                    ];
                    let val = objective(strain, alpha, &q, alpha_prev, p_prev, eps, tau, law, area);
                    if val < best_val {
                        best_val = val;
                        best = q;
                    }
                }
            }
        }
        // Shrink only when the incumbent is interior to the window; the
        // cone constraint can otherwise drag the basin along the shell.
        let on_shell = (0..3).any(|c| (best[c] - center[c]).abs() > 0.7 * half);
        center = best;
        if !on_shell {
            half *= 0.5;
        }
        if (last_round - best_val).abs() < tol && half < 1e-9 * range0 {
            break;
        }
        last_round = best_val;
    }
    (best, best_val)
}

/// Exhaustive minimization of the incremental problem over (α, p) in
/// homogeneous mode: α on a 200-point grid refined around the best value,
/// p coarse-to-fine per α.
pub fn brute_force_oracle_homogeneous(
    prev: &State,
    datum: &BoundaryDatum,
    t_new: f64,
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
) -> Result<OracleOut> {
    if !fe.is_homogeneous() {
        return Err(Error::Usage("oracle requires the homogeneous space".into()));
    }
    let area = fe.area();
    let strain = [
        datum.strain.voigt()[0],
        datum.strain.voigt()[1],
        datum.strain.voigt()[2],
    ];
    let alpha_prev = prev.alpha[0];
    let p_prev = [prev.p[0], prev.p[1], prev.p[2]];

    let mut best = (alpha_prev, p_prev, f64::INFINITY);
    let scan = |lo: f64, hi: f64, n: usize, best: &mut (f64, [f64; M], f64)| {
        for i in 0..=n {
            let a = lo + (hi - lo) * i as f64 / n as f64;
            let a = a.clamp(0.0, alpha_prev);
            let (p, val) = minimize_p(
                &strain, a, alpha_prev, &p_prev, eps, tau, law, area, 1e-9,
            );
            if val < best.2 {
                *best = (a, p, val);
            }
        }
    };
    scan(0.0, alpha_prev.max(1e-12), 200, &mut best);
    // Refine α around the incumbent until the energy stabilizes.
    let mut width = alpha_prev.max(1e-12) / 200.0;
    for _ in 0..12 {
        let lo = (best.0 - width).max(0.0);
        let hi = (best.0 + width).min(alpha_prev);
        let before = best.2;
        scan(lo, hi, 16, &mut best);
        width /= 8.0;
        if (before - best.2).abs() < 1e-6 * (1.0 + best.2.abs()) && width < 1e-10 {
            break;
        }
    }

    let e = [
        strain[0] - best.1[0],
        strain[1] - best.1[1],
        strain[2] - best.1[2],
    ];
    let state = State {
        t: t_new,
        alpha: vec![best.0],
        u: datum.nodal.clone(),
        e: e.to_vec(),
        p: best.1.to_vec(),
    };
    Ok(OracleOut {
        state,
        energy: best.2,
    })
}

/// Grid brute-force minimizer of ½|q−ξ|² + λH(q), coarse-to-fine down to the
/// requested resolution, independent of the closed-form proximal map it
/// checks. The Drucker–Prager search runs in cone coordinates
/// (t, s, θ) ↦ (t/2)I + s·(t/τ)(cosθ ê₁ + sinθ ê₂), where the feasible set
/// is the box t ≥ 0, s ∈ [0,1]; axis-aligned grids in Voigt coordinates get
/// trapped in the wedge that the cone cuts out of each cell.
pub fn grid_prox_oracle(
    xi: &crate::tensor::SymTensor,
    lambda: f64,
    k: &crate::material::ConstraintSet,
    resolution: f64,
) -> crate::tensor::SymTensor {
    use crate::material::ConstraintSet;
    use crate::tensor::SymTensor;
    let objective = |q: &SymTensor| -> f64 {
        let h = crate::material::support_function(q, k);
        if !h.is_finite() {
            return f64::INFINITY;
        }
        let d = q.sub(xi);
        0.5 * d.frobenius(&d) + lambda * h
    };
    match k {
        ConstraintSet::Ball { .. } => {
            // Unconstrained box search in Voigt coordinates.
            let range = xi.norm() + lambda * 2.0 + 1.0;
            let make = |c: &[f64]| SymTensor::from_voigt(xi.dim(), c.to_vec());
            let lo = vec![-range; xi.voigt().len()];
            let hi = vec![range; xi.voigt().len()];
            let best = box_search(&lo, &hi, resolution / 2.0, |c| objective(&make(c)), |c| {
                c.to_vec()
            });
            make(&best)
        }
        ConstraintSet::DruckerPrager { tau, .. } => {
            // Coordinates (t, d₁, d₂): trace and deviatoric components, with
            // d clipped radially onto the cone section |d| ≤ t/τ. The map is
            // surjective onto the feasible set and non-degenerate around any
            // optimum away from the apex.
            let s2 = std::f64::consts::SQRT_2;
            let tmax = 2.0 * s2 * (xi.norm() + lambda * 2.0 + 1.0);
            let dmax = tmax / tau;
            let make = |c: &[f64]| {
                let t = c[0];
                let dn = (c[1] * c[1] + c[2] * c[2]).sqrt();
                let cap = t / tau;
                let scale = if dn > cap {
                    if dn > 0.0 {
                        cap / dn
                    } else {
                        0.0
                    }
                } else {
                    1.0
                };
                let d1 = scale * c[1];
                let d2 = scale * c[2];
                SymTensor::from_voigt(
                    xi.dim(),
                    vec![0.5 * t + d1 / s2, 0.5 * t - d1 / s2, d2],
                )
            };
            let canon = |c: &[f64]| -> Vec<f64> {
                let q = make(c);
                let d1 = (q.voigt()[0] - q.voigt()[1]) / s2;
                vec![q.trace(), d1, q.voigt()[2]]
            };
            let lo = vec![0.0, -dmax, -dmax];
            let hi = vec![tmax, dmax, dmax];
            let best = box_search(&lo, &hi, resolution / 2.0, |c| objective(&make(c)), canon);
            make(&best)
        }
    }
}

/// Coarse-to-fine minimization over a box, shrinking each axis window only
/// while the incumbent is interior to it.
fn box_search<F, C>(lo: &[f64], hi: &[f64], resolution: f64, f: F, canon: C) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
    C: Fn(&[f64]) -> Vec<f64>,
{
    let m = lo.len();
    let steps = 10usize;
    let mut best: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut best_val = f(&best);

    // Global locating pass so the local refinement starts in the right basin.
    {
        let coarse = 24usize;
        let mut idx = vec![0usize; m];
        loop {
            let q: Vec<f64> = (0..m)
                .map(|c| lo[c] + (hi[c] - lo[c]) * idx[c] as f64 / coarse as f64)
                .collect();
            let val = f(&q);
            if val < best_val {
                best_val = val;
                best = canon(&q);
            }
            let mut c = 0;
            loop {
                if c == m {
                    break;
                }
                idx[c] += 1;
                if idx[c] <= coarse {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == m {
                break;
            }
        }
    }

    let mut center = best.clone();
    let mut half: Vec<f64> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| 2.0 * (b - a) / 24.0)
        .collect();
    let mut rounds = 0;
    while half.iter().cloned().fold(0.0, f64::max) > resolution && rounds < 600 {
        rounds += 1;
        let mut idx = vec![0usize; m];
        loop {
            let mut q = vec![0.0; m];
            for c in 0..m {
                q[c] = (center[c] - half[c] + 2.0 * half[c] * idx[c] as f64 / steps as f64)
                    .clamp(lo[c], hi[c]);
            }
            let val = f(&q);
            if val < best_val {
                best_val = val;
                best = canon(&q);
            }
            let mut c = 0;
            loop {
                if c == m {
                    break;
                }
                idx[c] += 1;
                if idx[c] <= steps {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == m {
                break;
            }
        }
        let on_shell = (0..m).any(|c| {
            (best[c] - center[c]).abs() > 0.7 * half[c]
                && best[c] > lo[c] + 1e-300
                && best[c] < hi[c] - 1e-300
        });
        center.clone_from(&best);
        if !on_shell {
            for h in half.iter_mut() {
                *h *= 0.55;
            }
        }
    }
    best
}

/// Brute-force sup of σ:ξ over K: dense direction sample with an exact ray
/// cap per direction, radius capped at 1e4 with unbounded rays extrapolated
/// to +∞.
pub fn sampled_support_oracle(
    xi: &crate::tensor::SymTensor,
    k: &crate::material::ConstraintSet,
    n_dirs: usize,
    seed: u64,
) -> f64 {
    use crate::material::ConstraintSet;
    use crate::tensor::SymTensor;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cap = 1e4;
    let mut best: f64 = 0.0;
    let dim = xi.dim();
    let nv = xi.voigt().len();
    for _ in 0..n_dirs {
        let raw: Vec<f64> = (0..nv).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let dir = SymTensor::from_voigt(dim, raw);
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let u = dir.scale(1.0 / norm);
        let pairing = u.frobenius(xi);
        // Largest feasible radius along the ray r·u.
        let r_max = match k {
            ConstraintSet::Ball { r_h } => *r_h,
            ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                let growth = tau * u.mean() + u.dev().norm();
                if growth <= 0.0 {
                    f64::INFINITY
                } else {
                    kappa / growth
                }
            }
        };
        if r_max.is_infinite() {
            if pairing > 1e-9 {
                return f64::INFINITY;
            }
        } else {
            let v = r_max.min(cap) * pairing;
            if r_max > cap && v > 10.0 * (best.abs() + 1.0) {
                return f64::INFINITY;
            }
            best = best.max(v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::{LoadProgram, Ramp};
    use crate::material::{
        ConstraintSet, DamageDissipation, HardeningProfile, HookeLaw, ProfileKind,
    };
    use crate::mesh::Mesh;

    fn law() -> MaterialLaw {
        MaterialLaw::new(
            HookeLaw::new(1.0, 1.0).unwrap(),
            HardeningProfile::new(ProfileKind::Linear, 1.0, 0.1).unwrap(),
            DamageDissipation::new(ProfileKind::Linear, 0.5).unwrap(),
            ConstraintSet::ball(0.5).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_load_gives_zero_state() {
        let fe = FeSpace::new(Mesh::homogeneous(1.0).unwrap());
        let ml = law();
        let load = LoadProgram::new([[0.0, 0.0], [0.0, 0.0]], Ramp::identity(1.0), 1.0).unwrap();
        let datum = load.datum(&fe, 1.0);
        let prev = State::sound(&fe);
        let out = brute_force_oracle_homogeneous(&prev, &datum, 1.0, 0.0, 1.0, &ml, &fe).unwrap();
        assert!(out.energy.abs() < 1e-10);
        assert!(out.state.p.iter().all(|&x| x.abs() < 1e-6));
    }

    #[test]
    fn sub_yield_load_stays_elastic() {
        let fe = FeSpace::new(Mesh::homogeneous(1.0).unwrap());
        let ml = law();
        let g = [[0.0, 0.05], [0.05, -0.03]];
        let load = LoadProgram::new(g, Ramp::identity(1.0), 1.0).unwrap();
        let datum = load.datum(&fe, 1.0);
        let sigma = ml.hooke.apply(&datum.strain);
        assert!(sigma.norm() < 0.5);
        let prev = State::sound(&fe);
        let out = brute_force_oracle_homogeneous(&prev, &datum, 1.0, 0.0, 1.0, &ml, &fe).unwrap();
        // Elastic closed form ½ℂ Ew : Ew · area.
        let expect = 0.5 * sigma.frobenius(&datum.strain);
        assert!(
            (out.energy - expect).abs() < 1e-6 * (1.0 + expect),
            "{} vs {expect}",
            out.energy
        );
        assert!(out.state.p.iter().all(|&x| x.abs() < 1e-5));
    }

    #[test]
    fn supra_yield_beats_elastic_candidate() {
        let fe = FeSpace::new(Mesh::homogeneous(1.0).unwrap());
        let ml = law();
        let g = [[0.0, 0.8], [0.8, -0.5]];
        let load = LoadProgram::new(g, Ramp::identity(1.0), 1.0).unwrap();
        let datum = load.datum(&fe, 1.0);
        let sigma = ml.hooke.apply(&datum.strain);
        assert!(sigma.norm() > 0.5);
        let prev = State::sound(&fe);
        let out = brute_force_oracle_homogeneous(&prev, &datum, 1.0, 0.0, 1.0, &ml, &fe).unwrap();
        let elastic_candidate = 0.5 * sigma.frobenius(&datum.strain);
        assert!(out.energy < elastic_candidate - 1e-6);
    }
}
