//! One incremental minimization step: alternating a convex elastoplastic
//! substep (accelerated proximal gradient on p, with the exact elastic solve
//! for u folded in) and a bound-constrained damage substep (projected Newton
//! on a convex QP). The energetic scheme is the ε = 0 instance of the viscous
//! one; both share this code path.

use crate::energy::{
    self, elastic_residual_full, hooke_apply3, plastic_potential, stress_nodewise_residual,
    total_energy,
};
use crate::error::{Error, Result};
use crate::la::{self, dot, Csr, DenseSym};
use crate::load::BoundaryDatum;
use crate::material::{v3, MaterialLaw, ProfileKind};
use crate::space::{FeSpace, M};
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearSolver {
    Direct,
    ConjugateGradient { tol: f64 },
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Alternating-minimization stop: relative objective decrease per sweep.
    pub tol_energy_stagnation: f64,
    /// Primal-dual residual tolerance of the substeps.
    pub tol_pd: f64,
    /// Max alternating sweeps.
    pub max_outer: usize,
    /// Max inner iterations of the plastic substep.
    pub max_inner: usize,
    pub linear_solver: LinearSolver,
    /// Multi-start candidates per incremental problem (1..=3).
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_energy_stagnation: 1e-10,
            tol_pd: 1e-9,
            max_outer: 200,
            max_inner: 5000,
            linear_solver: LinearSolver::Direct,
            n_starts: 3,
            seed: 0,
        }
    }
}

/// Assembled interior elastic operator with a cached factorization. The
/// Hooke tensor does not depend on damage in this model, so one factorization
/// serves the whole evolution.
pub struct ElasticSystem {
    factor: Option<la::CholeskyFactor>,
    stiffness: Option<Csr>,
    cg_tol: Option<f64>,
}

impl ElasticSystem {
    pub fn new(fe: &FeSpace, law: &MaterialLaw, linear: LinearSolver) -> Result<ElasticSystem> {
        if fe.n_interior == 0 {
            return Ok(ElasticSystem {
                factor: None,
                stiffness: None,
                cg_tol: None,
            });
        }
        let mut triplets = Vec::new();
        let s2 = std::f64::consts::SQRT_2;
        for t in 0..fe.n_elements() {
            let area = fe.mesh.areas[t];
            let tri = &fe.mesh.triangles[t];
            let grads = &fe.mesh.grads[t];
            // Local B rows: Voigt strain per unit dof.
            let mut b_loc = [[0.0f64; M]; 6];
            for a in 0..3 {
                let gx = grads[a][0];
                let gy = grads[a][1];
                b_loc[2 * a] = [gx, 0.0, gy / s2];
                b_loc[2 * a + 1] = [0.0, gy, gx / s2];
            }
            for i in 0..6 {
                let gi = fe.u_interior[2 * tri[i / 2] + i % 2];
                let Some(gi) = gi else { continue };
                let cb = hooke_apply3(law, &b_loc[i]);
                for j in 0..6 {
                    let Some(gj) = fe.u_interior[2 * tri[j / 2] + j % 2] else {
                        continue;
                    };
                    let v = area * (cb[0] * b_loc[j][0] + cb[1] * b_loc[j][1] + cb[2] * b_loc[j][2]);
                    triplets.push((gi, gj, v));
                }
            }
        }
        let csr = Csr::from_triplets(fe.n_interior, &triplets);
        match linear {
            LinearSolver::Direct => {
                let dense = DenseSym::from_csr(&csr);
                let factor = dense.cholesky()?;
                Ok(ElasticSystem {
                    factor: Some(factor),
                    stiffness: Some(csr),
                    cg_tol: None,
                })
            }
            LinearSolver::ConjugateGradient { tol } => Ok(ElasticSystem {
                factor: None,
                stiffness: Some(csr),
                cg_tol: Some(tol),
            }),
        }
    }

    /// Apply A⁻¹ on the interior block.
    fn interior_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if let Some(factor) = &self.factor {
            Ok(factor.solve(rhs))
        } else {
            let a = self.stiffness.as_ref().expect("cg operator");
            la::conjugate_gradient(
                |x, y| a.matvec(x, y),
                rhs,
                &vec![0.0; rhs.len()],
                self.cg_tol.unwrap_or(1e-12),
                10 * rhs.len() + 100,
            )
        }
    }

    /// Exact elastic solve at fixed plastic strain: returns (u, e) with u
    /// matching the boundary datum and e = Eu − p̄ per element (in
    /// homogeneous mode e = Ew − p̄, the strain being imposed).
    pub fn solve(
        &self,
        fe: &FeSpace,
        law: &MaterialLaw,
        datum: &BoundaryDatum,
        p: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut u = datum.nodal.clone();
        if fe.n_interior > 0 {
            let e0 = strain_field(fe, datum, &u, p);
            let r_full = elastic_residual_full(&e0, law, fe);
            let mut rhs = vec![0.0; fe.n_interior];
            for (dof, slot) in fe.u_interior.iter().enumerate() {
                if let Some(i) = slot {
                    rhs[*i] = -r_full[dof];
                }
            }
            let delta = self.interior_solve(&rhs)?;
            for (dof, slot) in fe.u_interior.iter().enumerate() {
                if let Some(i) = slot {
                    u[dof] += delta[*i];
                }
            }
        }
        let e = strain_field(fe, datum, &u, p);
        Ok((u, e))
    }

    /// Hessian bound matvec used for the Lipschitz estimate of the plastic
    /// substep: the unreduced p-block Avgᵀ(area·ℂ)Avg (the reduced Schur
    /// complement is dominated by it).
    fn elastic_p_block(&self, fe: &FeSpace, law: &MaterialLaw, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..fe.n_elements() {
            let mean = fe.element_mean_voigt(x, t);
            let sig = hooke_apply3(law, &mean);
            let a3 = fe.mesh.areas[t] / 3.0;
            for &v in &fe.mesh.triangles[t] {
                for c in 0..M {
                    out[M * v + c] += a3 * sig[c];
                }
            }
        }
    }
}

/// Element strains from (u, p); the homogeneous pseudo-element takes the
/// imposed boundary strain instead of Eu.
pub fn strain_field(fe: &FeSpace, datum: &BoundaryDatum, u: &[f64], p: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; M * fe.n_elements()];
    let imposed = [
        datum.strain.voigt()[0],
        datum.strain.voigt()[1],
        datum.strain.voigt()[2],
    ];
    for t in 0..fe.n_elements() {
        let eu = if fe.is_homogeneous() {
            imposed
        } else {
            fe.element_strain(u, t)
        };
        let pm = fe.element_mean_voigt(p, t);
        for c in 0..M {
            e[M * t + c] = eu[c] - pm[c];
        }
    }
    e
}

pub struct PlasticOut {
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
    /// Nodewise stress-constraint residual at exit.
    pub residual: f64,
    /// Hill gap 𝓗(Δp) − ⟨G, Δp⟩ at exit.
    pub hill_gap: f64,
}

struct PlasticWork<'a> {
    fe: &'a FeSpace,
    law: &'a MaterialLaw,
    elastic: &'a ElasticSystem,
    datum: &'a BoundaryDatum,
    m_b: Csr,
    p_prev: &'a [f64],
}

impl<'a> PlasticWork<'a> {
    /// Smooth part f(p) = Q(e(u*(p))) + ∫b(α)|p|² + l_p‖∇p‖², with the exact
    /// elastic solve folded in.
    fn smooth_value(&self, p: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let (u, e) = self.elastic.solve(self.fe, self.law, self.datum, p)?;
        let q = energy::elastic_energy(&e, self.law, self.fe);
        let mut hard = 0.0;
        for c in 0..M {
            hard += scalar_tensor_quadratic(&self.m_b, p, c);
        }
        let grad_p = self.law.l_p * self.fe.tensor_grad2(p);
        Ok((q + hard + grad_p, u, e))
    }

    /// Envelope gradient of the smooth part at p (u already solved).
    fn smooth_gradient(&self, e: &[f64], p: &[f64]) -> Vec<f64> {
        let sigma: Vec<f64> = (0..self.fe.n_elements())
            .flat_map(|t| {
                let et = [e[M * t], e[M * t + 1], e[M * t + 2]];
                hooke_apply3(self.law, &et)
            })
            .collect();
        let mut g: Vec<f64> = self
            .fe
            .element_to_nodal_load(&sigma)
            .iter()
            .map(|v| -v)
            .collect();
        scalar_tensor_apply_add(&self.m_b, p, 2.0, &mut g);
        let mut kp = vec![0.0; p.len()];
        self.fe.tensor_stiff_apply(p, &mut kp);
        for i in 0..g.len() {
            g[i] += 2.0 * self.law.l_p * kp[i];
        }
        g
    }

    fn h_lumped(&self, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        for v in 0..self.fe.n_vertices() {
            let d = [
                p[M * v] - self.p_prev[M * v],
                p[M * v + 1] - self.p_prev[M * v + 1],
                p[M * v + 2] - self.p_prev[M * v + 2],
            ];
            let h = v3::support(&d, &self.law.constraint);
            if h.is_infinite() {
                return f64::INFINITY;
            }
            acc += self.fe.lumped[v] * h;
        }
        acc
    }

    /// Proximal step from y with gradient g and step σ in the lumped metric.
    fn prox_point(&self, y: &[f64], g: &[f64], sigma: f64) -> Vec<f64> {
        let mut z = vec![0.0; y.len()];
        for v in 0..self.fe.n_vertices() {
            let m = self.fe.lumped[v];
            let mut arg = [0.0; M];
            for c in 0..M {
                arg[c] = (y[M * v + c] - self.p_prev[M * v + c]) - sigma * g[M * v + c] / m;
            }
            let r = v3::prox(&arg, sigma, &self.law.constraint);
            for c in 0..M {
                z[M * v + c] = self.p_prev[M * v + c] + r[c];
            }
        }
        z
    }

    fn metric_dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for v in 0..self.fe.n_vertices() {
            let m = self.fe.lumped[v];
            for c in 0..M {
                let d = a[M * v + c] - b[M * v + c];
                acc += m * d * d;
            }
        }
        acc
    }
}

/// Reduced smooth Hessian of the plastic substep in the p coordinates:
/// Avgᵀ(area·ℂ)Avg + 2M_b⊗I + 2 l_p K⊗I minus the elastic Schur complement
/// C A⁻¹ Cᵀ, where C = ∂²F/∂p∂u.
fn reduced_p_hessian(
    fe: &FeSpace,
    law: &MaterialLaw,
    elastic: &ElasticSystem,
    m_b: &Csr,
) -> Result<DenseSym> {
    let n = M * fe.n_vertices();
    let mut h = DenseSym::zeros(n);
    let s2 = std::f64::consts::SQRT_2;
    // Voigt matrix of ℂ.
    let c_cols: [[f64; M]; M] = [
        hooke_apply3(law, &[1.0, 0.0, 0.0]),
        hooke_apply3(law, &[0.0, 1.0, 0.0]),
        hooke_apply3(law, &[0.0, 0.0, 1.0]),
    ];
    for t in 0..fe.n_elements() {
        let a9 = fe.mesh.areas[t] / 9.0;
        let tri = &fe.mesh.triangles[t];
        for &v in tri {
            for &w in tri {
                for c in 0..M {
                    for d in 0..M {
                        h.add(M * v + c, M * w + d, a9 * c_cols[d][c]);
                    }
                }
            }
        }
    }
    for i in 0..m_b.n {
        for k in m_b.row_ptr[i]..m_b.row_ptr[i + 1] {
            let j = m_b.col_idx[k];
            for c in 0..M {
                h.add(M * i + c, M * j + c, 2.0 * m_b.values[k]);
            }
        }
    }
    for i in 0..fe.k_s.n {
        for k in fe.k_s.row_ptr[i]..fe.k_s.row_ptr[i + 1] {
            let j = fe.k_s.col_idx[k];
            for c in 0..M {
                h.add(M * i + c, M * j + c, 2.0 * law.l_p * fe.k_s.values[k]);
            }
        }
    }
    if fe.n_interior > 0 {
        // Coupling C: rows p-dofs, columns interior u-dofs.
        let ni = fe.n_interior;
        let mut coupling = vec![0.0; n * ni];
        for t in 0..fe.n_elements() {
            let area = fe.mesh.areas[t];
            let tri = &fe.mesh.triangles[t];
            let grads = &fe.mesh.grads[t];
            for a in 0..3 {
                let gx = grads[a][0];
                let gy = grads[a][1];
                let b_rows = [[gx, 0.0, gy / s2], [0.0, gy, gx / s2]];
                for comp in 0..2 {
                    let Some(col) = fe.u_interior[2 * tri[a] + comp] else {
                        continue;
                    };
                    let cb = hooke_apply3(law, &b_rows[comp]);
                    for &v in tri {
                        for c in 0..M {
                            coupling[(M * v + c) * ni + col] -= area / 3.0 * cb[c];
                        }
                    }
                }
            }
        }
        // Schur update H -= C A⁻¹ Cᵀ.
        let mut x_rows = vec![0.0; n * ni];
        for r in 0..n {
            let rhs = &coupling[r * ni..(r + 1) * ni];
            let sol = elastic.interior_solve(rhs)?;
            x_rows[r * ni..(r + 1) * ni].copy_from_slice(&sol);
        }
        for r in 0..n {
            for s in r..n {
                let mut acc = 0.0;
                for k in 0..ni {
                    acc += coupling[r * ni + k] * x_rows[s * ni + k];
                }
                h.a[r * n + s] -= acc;
                if s != r {
                    h.a[s * n + r] -= acc;
                }
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone)]
enum NodeClass {
    Rigid,
    /// Ball constraint, |Δ| > 0: smooth radial penalty.
    BallFlow,
    /// Drucker–Prager, Δ strictly inside the domain cone: linear penalty.
    DpInterior,
    /// Drucker–Prager, Δ on the cone boundary: 2-parameter deviatoric chart
    /// w ↦ (τ|w|/2)·ι + D w.
    DpBoundary { w: [f64; 2] },
}

fn classify_nodes(work: &PlasticWork<'_>, x: &[f64]) -> Vec<NodeClass> {
    let fe = work.fe;
    let mut out = Vec::with_capacity(fe.n_vertices());
    for v in 0..fe.n_vertices() {
        let d = [
            x[M * v] - work.p_prev[M * v],
            x[M * v + 1] - work.p_prev[M * v + 1],
            x[M * v + 2] - work.p_prev[M * v + 2],
        ];
        let dn = v3::norm(&d);
        let scale = 1.0 + v3::norm(&[
            work.p_prev[M * v],
            work.p_prev[M * v + 1],
            work.p_prev[M * v + 2],
        ]);
        if dn <= 1e-11 * scale {
            out.push(NodeClass::Rigid);
            continue;
        }
        match &work.law.constraint {
            crate::material::ConstraintSet::Ball { .. } => out.push(NodeClass::BallFlow),
            crate::material::ConstraintSet::DruckerPrager { tau, .. } => {
                let mean = 0.5 * (d[0] + d[1]);
                let dev = [d[0] - mean, d[1] - mean, d[2]];
                let rho = v3::norm(&dev);
                let tr = d[0] + d[1];
                if tr - tau * rho > 1e-8 * dn.max(1e-300) {
                    out.push(NodeClass::DpInterior);
                } else if rho <= 1e-11 * scale {
                    out.push(NodeClass::Rigid);
                } else {
                    // Chart coordinates: w = (d₁, d₂) with d₁ along (1,−1)/√2.
                    let s2 = std::f64::consts::SQRT_2;
                    out.push(NodeClass::DpBoundary {
                        w: [(d[0] - d[1]) / s2, d[2]],
                    });
                }
            }
        }
    }
    out
}

/// Active-set Newton on the smooth manifold identified by the proximal
/// phase. Returns the polished iterate when the composite optimality
/// residual reaches `tol`, or None to hand control back to the proximal
/// iteration.
#[allow(clippy::too_many_arguments)]
fn newton_polish(
    work: &PlasticWork<'_>,
    h_red: &DenseSym,
    x0: &[f64],
    tol: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
) -> Result<Option<(Vec<f64>, f64, f64)>> {
    let s2 = std::f64::consts::SQRT_2;
    let iota = [1.0, 1.0, 0.0];
    let mut x = x0.to_vec();
    let (mut fx, _, mut e) = work.smooth_value(&x)?;
    let mut obj = fx + work.h_lumped(&x);
    let mut best_seen = f64::INFINITY;
    let mut since_progress = 0usize;

    for _iter in 0..16 {
        let g = work.smooth_gradient(&e, &x);
        // Exit test on the true composite residual.
        let gneg: Vec<f64> = g.iter().map(|v| -v).collect();
        let residual = stress_nodewise_residual(&gneg, law, fe);
        let dp: Vec<f64> = x.iter().zip(work.p_prev).map(|(a, b)| a - b).collect();
        let hill = work.h_lumped(&x) - dot(&gneg, &dp);
        if residual <= tol && hill.abs() <= tol {
            return Ok(Some((x, residual, hill)));
        }
        let measure = residual.max(hill.abs());
        if measure < 0.5 * best_seen {
            best_seen = measure;
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= 4 {
                return Ok(None);
            }
        }

        let classes = classify_nodes(work, &x);
        // Local coordinate layout.
        let mut offset = vec![usize::MAX; fe.n_vertices()];
        let mut dims = vec![0usize; fe.n_vertices()];
        let mut total = 0usize;
        for v in 0..fe.n_vertices() {
            let d = match classes[v] {
                NodeClass::Rigid => 0,
                NodeClass::BallFlow | NodeClass::DpInterior => 3,
                NodeClass::DpBoundary { .. } => 2,
            };
            if d > 0 {
                offset[v] = total;
            }
            dims[v] = d;
            total += d;
        }
        if total == 0 {
            return Ok(None);
        }

        // Per-node chart Jacobians (3 × dim).
        let jac = |v: usize| -> Vec<[f64; 3]> {
            match &classes[v] {
                NodeClass::Rigid => vec![],
                NodeClass::BallFlow | NodeClass::DpInterior => vec![
                    [1.0, 0.0, 0.0],
                    [0.0, 1.0, 0.0],
                    [0.0, 0.0, 1.0],
                ],
                NodeClass::DpBoundary { w } => {
                    let tau = match &law.constraint {
                        crate::material::ConstraintSet::DruckerPrager { tau, .. } => *tau,
                        _ => unreachable!(),
                    };
                    let wn = (w[0] * w[0] + w[1] * w[1]).sqrt();
                    let wh = [w[0] / wn, w[1] / wn];
                    // ∂Δ/∂w_k = (τ/2)ŵ_k·ι + D e_k, columns as p-vectors.
                    vec![
                        [
                            0.5 * tau * wh[0] + 1.0 / s2,
                            0.5 * tau * wh[0] - 1.0 / s2,
                            0.0,
                        ],
                        [0.5 * tau * wh[1], 0.5 * tau * wh[1], 1.0],
                    ]
                }
            }
        };

        let mut kmat = DenseSym::zeros(total);
        let mut rhs = vec![0.0; total];
        for v in 0..fe.n_vertices() {
            if dims[v] == 0 {
                continue;
            }
            let jv = jac(v);
            let m = fe.lumped[v];
            let gv = [g[M * v], g[M * v + 1], g[M * v + 2]];
            // Penalty gradient and curvature in chart coordinates.
            match &classes[v] {
                NodeClass::BallFlow => {
                    let r_h = match &law.constraint {
                        crate::material::ConstraintSet::Ball { r_h } => *r_h,
                        _ => unreachable!(),
                    };
                    let d = [
                        x[M * v] - work.p_prev[M * v],
                        x[M * v + 1] - work.p_prev[M * v + 1],
                        x[M * v + 2] - work.p_prev[M * v + 2],
                    ];
                    let dn = v3::norm(&d);
                    let dh = [d[0] / dn, d[1] / dn, d[2] / dn];
                    for k in 0..3 {
                        rhs[offset[v] + k] -= gv[k] + m * r_h * dh[k];
                        for l in 0..3 {
                            let curv = m * r_h / dn
                                * (if k == l { 1.0 } else { 0.0 } - dh[k] * dh[l]);
                            kmat.add(offset[v] + k, offset[v] + l, curv);
                        }
                    }
                }
                NodeClass::DpInterior => {
                    let (tau, kappa) = match &law.constraint {
                        crate::material::ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                            (*tau, *kappa)
                        }
                        _ => unreachable!(),
                    };
                    for k in 0..3 {
                        rhs[offset[v] + k] -= gv[k] + m * (kappa / tau) * iota[k];
                    }
                }
                NodeClass::DpBoundary { w } => {
                    let (tau, kappa) = match &law.constraint {
                        crate::material::ConstraintSet::DruckerPrager { tau, kappa, .. } => {
                            (*tau, *kappa)
                        }
                        _ => unreachable!(),
                    };
                    let wn = (w[0] * w[0] + w[1] * w[1]).sqrt();
                    let wh = [w[0] / wn, w[1] / wn];
                    // Pulled-back gradient Jᵀg + mκ ŵ.
                    for k in 0..2 {
                        let jtg: f64 = (0..3).map(|c| jv[k][c] * gv[c]).sum();
                        rhs[offset[v] + k] -= jtg + m * kappa * wh[k];
                    }
                    // Curvature of the chart and of the penalty:
                    // ((τ/2)(g·ι) + mκ)(I − ŵŵᵀ)/|w|.
                    let gi = gv[0] * iota[0] + gv[1] * iota[1];
                    let coeff = (0.5 * tau * gi + m * kappa) / wn;
                    for k in 0..2 {
                        for l in 0..2 {
                            let proj = if k == l { 1.0 } else { 0.0 } - wh[k] * wh[l];
                            kmat.add(offset[v] + k, offset[v] + l, coeff * proj);
                        }
                    }
                }
                NodeClass::Rigid => unreachable!(),
            }
            // Smooth block JᵀH J against every other non-rigid node.
            for wv in 0..fe.n_vertices() {
                if dims[wv] == 0 {
                    continue;
                }
                let jw = jac(wv);
                for k in 0..dims[v] {
                    for l in 0..dims[wv] {
                        let mut acc = 0.0;
                        for c in 0..3 {
                            for d in 0..3 {
                                acc += jv[k][c]
                                    * h_red.at(M * v + c, M * wv + d)
                                    * jw[l][d];
                            }
                        }
                        kmat.add(offset[v] + k, offset[wv] + l, acc);
                    }
                }
            }
        }

        // Solve with escalating Levenberg damping until a descent step is
        // accepted.
        let diag_scale = (0..total)
            .map(|i| kmat.at(i, i).abs())
            .fold(1e-300, f64::max);
        let mut damping = 0.0;
        let mut improved = false;
        'damping: for _try in 0..8 {
            let mut sys = kmat.clone();
            if damping > 0.0 {
                for i in 0..total {
                    sys.a[i * total + i] += damping;
                }
            }
            let Ok(step) = sys.solve_spd_robust(&rhs) else {
                damping = damping.max(1e-10 * diag_scale) * 100.0;
                continue;
            };
            let mut t = 1.0;
            for _ in 0..30 {
                let mut trial = x.clone();
                for v in 0..fe.n_vertices() {
                    match &classes[v] {
                        NodeClass::Rigid => {}
                        NodeClass::BallFlow | NodeClass::DpInterior => {
                            for k in 0..3 {
                                trial[M * v + k] += t * step[offset[v] + k];
                            }
                        }
                        NodeClass::DpBoundary { w } => {
                            let tau = match &law.constraint {
                                crate::material::ConstraintSet::DruckerPrager {
                                    tau, ..
                                } => *tau,
                                _ => unreachable!(),
                            };
                            let wt = [
                                w[0] + t * step[offset[v]],
                                w[1] + t * step[offset[v] + 1],
                            ];
                            let wn = (wt[0] * wt[0] + wt[1] * wt[1]).sqrt();
                            let tr2 = 0.5 * tau * wn;
                            trial[M * v] = work.p_prev[M * v] + tr2 + wt[0] / s2;
                            trial[M * v + 1] = work.p_prev[M * v + 1] + tr2 - wt[0] / s2;
                            trial[M * v + 2] = work.p_prev[M * v + 2] + wt[1];
                        }
                    }
                }
                let h_trial = work.h_lumped(&trial);
                if h_trial.is_finite() {
                    let (ft, _, et) = work.smooth_value(&trial)?;
                    let obj_trial = ft + h_trial;
                    if obj_trial <= obj + 1e-14 * (1.0 + obj.abs()) {
                        let changed = trial != x;
                        x = trial;
                        fx = ft;
                        e = et;
                        obj = obj_trial;
                        improved = changed;
                        break 'damping;
                    }
                }
                t *= 0.5;
            }
            damping = damping.max(1e-10 * diag_scale) * 100.0;
        }
        if !improved {
            return Ok(None);
        }
    }
    let _ = fx;
    Ok(None)
}

fn scalar_tensor_quadratic(a: &Csr, x: &[f64], comp: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.n {
        let mut row = 0.0;
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            row += a.values[k] * x[M * a.col_idx[k] + comp];
        }
        acc += x[M * i + comp] * row;
    }
    acc
}

fn scalar_tensor_apply_add(a: &Csr, x: &[f64], scale: f64, out: &mut [f64]) {
    for i in 0..a.n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col_idx[k];
            let v = scale * a.values[k];
            for c in 0..M {
                out[M * i + c] += v * x[M * j + c];
            }
        }
    }
}

/// Minimizes 𝓠(e) + Q̃(α,p) + l_p‖∇p‖² + 𝓗(p − p_prev) over 𝓐(w_t) at fixed
/// damage, by monotone accelerated proximal gradient on p with the exact
/// elastic solve after every iterate.
#[allow(clippy::too_many_arguments)]
pub fn elastoplastic_step(
    alpha: &[f64],
    p_start: &[f64],
    p_prev: &[f64],
    datum: &BoundaryDatum,
    law: &MaterialLaw,
    fe: &FeSpace,
    elastic: &ElasticSystem,
    cfg: &SolverConfig,
    tol_factor: f64,
) -> Result<PlasticOut> {
    let m_b = fe.weighted_mass(alpha, p_prev, |a, _| law.hardening.value(a));
    let work = PlasticWork {
        fe,
        law,
        elastic,
        datum,
        m_b,
        p_prev,
    };

    // Lipschitz bound of the smooth part in the lumped metric, via power
    // iteration on D⁻¹(H_Q + 2M_b + 2 l_p K).
    let n = M * fe.n_vertices();
    let lip = la::power_iteration(
        |x, y| {
            elastic.elastic_p_block(fe, law, x, y);
            scalar_tensor_apply_add(&work.m_b, x, 2.0, y);
            let mut kp = vec![0.0; n];
            fe.tensor_stiff_apply(x, &mut kp);
            for i in 0..n {
                y[i] += 2.0 * law.l_p * kp[i];
                y[i] /= fe.lumped[i / M];
            }
        },
        n,
        60,
        cfg.seed ^ 0x5f5f,
    )
    .max(1e-12);
    let sigma0 = 0.9 / lip;

    let mut x = p_start.to_vec();
    let (mut fx, mut u, mut e) = work.smooth_value(&x)?;
    let mut obj_x = fx + work.h_lumped(&x);
    let scale = obj_x.abs().max(1.0);
    let tol = cfg.tol_pd * tol_factor * scale;

    // Warm starts are often already optimal; check before iterating.
    {
        let gx = work.smooth_gradient(&e, &x);
        let gneg: Vec<f64> = gx.iter().map(|v| -v).collect();
        let residual = stress_nodewise_residual(&gneg, law, fe);
        let dp: Vec<f64> = x.iter().zip(p_prev).map(|(a, b)| a - b).collect();
        let hill = work.h_lumped(&x) - dot(&gneg, &dp);
        if residual <= tol && hill.abs() <= tol {
            return Ok(PlasticOut {
                u,
                e,
                p: x,
                iterations: 0,
                residual,
                hill_gap: hill,
            });
        }
    }

    // Strong-convexity estimate in the lumped metric: the hardening mass
    // dominates 2·b_min·M_s ≽ (b_min/2)·D (P1 consistent mass is at least a
    // quarter of the lumped one, elementwise); b is monotone in α either way.
    let alpha_max = alpha.iter().cloned().fold(0.0, f64::max).min(1.0);
    let alpha_min = alpha.iter().cloned().fold(1.0, f64::min).max(0.0);
    let b_min = law
        .hardening
        .value(alpha_max)
        .min(law.hardening.value(alpha_min));
    let mu_est = (0.5 * b_min).max(0.0);

    let mut y = x.clone();
    let mut fy = fx;
    let mut ey = e.clone();
    let mut theta: f64 = 1.0;
    let mut sigma = sigma0;
    let mut residual = f64::INFINITY;
    let mut hill = f64::INFINITY;
    let mut h_red: Option<DenseSym> = None;
    let mut next_polish = 64usize;

    let mut it = 0;
    while it < cfg.max_inner {
        it += 1;
        let g = work.smooth_gradient(&ey, &y);
        // Backtracking on the quadratic upper bound.
        let mut z;
        let mut fz;
        let mut uz;
        let mut ez;
        loop {
            z = work.prox_point(&y, &g, sigma);
            let (v, uu, ee) = work.smooth_value(&z)?;
            fz = v;
            uz = uu;
            ez = ee;
            let dzy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let bound = fy + dot(&g, &dzy) + work.metric_dist2(&z, &y) / (2.0 * sigma);
            if fz <= bound + 1e-14 * (1.0 + fy.abs()) || sigma < 1e-18 * sigma0 {
                break;
            }
            sigma *= 0.5;
        }
        let obj_z = fz + work.h_lumped(&z);

        let accepted = obj_z < obj_x;
        if accepted {
            // Accept with momentum; the strongly convex variant uses the
            // constant coefficient when a curvature floor is available.
            let coeff = if mu_est > 0.0 {
                let q = (mu_est * sigma).min(1.0).sqrt();
                (1.0 - q) / (1.0 + q)
            } else {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let c = (theta - 1.0) / theta_next;
                theta = theta_next;
                c
            };
            let y_next: Vec<f64> = z
                .iter()
                .zip(&x)
                .map(|(zi, xi)| zi + coeff * (zi - xi))
                .collect();
            x = z;
            fx = fz;
            u = uz;
            e = ez;
            obj_x = obj_z;
            let (v, _, eee) = work.smooth_value(&y_next)?;
            fy = v;
            ey = eee;
            y = y_next;
        } else {
            // Momentum overshoot or stagnation: restart from the incumbent
            // and fall through to the optimality check.
            theta = 1.0;
            y = x.clone();
            fy = fx;
            ey = e.clone();
            sigma = sigma0;
        }

        if !accepted || it % 8 == 0 || it == cfg.max_inner {
            let gx = work.smooth_gradient(&e, &x);
            let gneg: Vec<f64> = gx.iter().map(|v| -v).collect();
            residual = stress_nodewise_residual(&gneg, law, fe);
            let dp: Vec<f64> = x.iter().zip(p_prev).map(|(a, b)| a - b).collect();
            hill = work.h_lumped(&x) - dot(&gneg, &dp);
            if residual <= tol && hill.abs() <= tol {
                return Ok(PlasticOut {
                    u,
                    e,
                    p: x,
                    iterations: it,
                    residual,
                    hill_gap: hill,
                });
            }
            // Once the proximal phase has identified the active structure,
            // finish on the smooth manifold with Newton steps.
            let near = residual <= 1e6 * tol && hill.abs() <= 1e7 * tol;
            if near && (it >= next_polish || it == cfg.max_inner) {
                next_polish = (2 * it).max(64);
                if h_red.is_none() {
                    h_red = Some(reduced_p_hessian(fe, law, elastic, &work.m_b)?);
                }
                if let Some((p_new, r_new, hill_new)) = newton_polish(
                    &work,
                    h_red.as_ref().unwrap(),
                    &x,
                    tol,
                    law,
                    fe,
                )? {
                    let (_, u_new, e_new) = work.smooth_value(&p_new)?;
                    return Ok(PlasticOut {
                        u: u_new,
                        e: e_new,
                        p: p_new,
                        iterations: it,
                        residual: r_new,
                        hill_gap: hill_new,
                    });
                }
            }
        }
    }
    Err(Error::NonConvergence {
        context: format!("plastic substep after {} iterations (hill gap {hill:.3e})", cfg.max_inner),
        residual,
    })
}

pub struct DamageOut {
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Quadratic program data of the damage substep:
/// J(α) = ½αᵀHα + cᵀα + const over 0 ≤ α ≤ α_prev, where the non-quadratic
/// profile pieces vanish by construction of the affine/quadratic laws.
pub struct DamageQp {
    pub h_matrix: Csr,
    pub c: Vec<f64>,
}

pub fn damage_qp(
    p: &[f64],
    alpha_prev: &[f64],
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
) -> DamageQp {
    let nv = fe.n_vertices();
    let zero_alpha = vec![0.0; nv];
    // Linear part: gradient of the 6-point energy at α = 0 plus the viscous
    // anchor −(ε/τ)m·α_prev.
    let mut c = fe.assemble_alpha_load(&zero_alpha, p, |_, pn2| {
        law.damage.derivative(0.0) + law.hardening.derivative(0.0) * pn2
    });
    // Quadratic part: 2 l_α K + profile curvature + (ε/τ)·lumped diagonal.
    let w_dd = match law.damage.kind {
        ProfileKind::Linear => 0.0,
        ProfileKind::Quadratic => 2.0 * law.damage.w1,
    };
    let w_bb = match law.hardening.kind {
        ProfileKind::Linear => 0.0,
        ProfileKind::Quadratic => 2.0 * law.hardening.b_max,
    };
    let curvature = fe.weighted_mass(&zero_alpha, p, |_, pn2| w_dd + w_bb * pn2);
    let mut triplets = Vec::new();
    for i in 0..nv {
        for k in fe.k_s.row_ptr[i]..fe.k_s.row_ptr[i + 1] {
            triplets.push((i, fe.k_s.col_idx[k], 2.0 * law.l_alpha * fe.k_s.values[k]));
        }
        for k in curvature.row_ptr[i]..curvature.row_ptr[i + 1] {
            triplets.push((i, curvature.col_idx[k], curvature.values[k]));
        }
    }
    if eps > 0.0 {
        let r = eps / tau;
        for i in 0..nv {
            triplets.push((i, i, r * fe.lumped[i]));
            c[i] -= r * fe.lumped[i] * alpha_prev[i];
        }
    }
    DamageQp {
        h_matrix: Csr::from_triplets(nv, &triplets),
        c,
    }
}

/// Minimizes D(α) + l_α‖∇α‖² + Q̃(α,p) + (ε/2τ)‖α−α_prev‖²_lumped subject to
/// 0 ≤ α ≤ α_prev nodewise, by projected Newton with active-set
/// identification. Bounds are set bitwise-exactly on active nodes.
pub fn damage_step(
    p: &[f64],
    alpha_prev: &[f64],
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
    cfg: &SolverConfig,
) -> Result<DamageOut> {
    let qp = damage_qp(p, alpha_prev, eps, tau, law, fe);
    let nv = fe.n_vertices();
    let scale = qp
        .c
        .iter()
        .map(|v| v.abs())
        .fold(1.0f64, f64::max);
    // The QP is cheap to solve essentially exactly, and the Kuhn–Tucker
    // equality checks downstream divide the pairing by τ, so target well
    // below the nominal primal-dual tolerance.
    let tol = (cfg.tol_pd * 1e-3).max(1e-14) * scale;
    let accept_tol = cfg.tol_pd * scale;

    let mut a: Vec<f64> = alpha_prev.to_vec();
    let grad = |a: &[f64]| -> Vec<f64> {
        let mut g = qp.h_matrix.apply(a);
        for i in 0..nv {
            g[i] += qp.c[i];
        }
        g
    };
    let objective = |a: &[f64]| -> f64 { 0.5 * qp.h_matrix.quadratic(a) + dot(&qp.c, a) };

    let kkt = |a: &[f64], g: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..nv {
            let lo = a[i] <= 0.0;
            let hi = a[i] >= alpha_prev[i];
            let r = if lo && hi {
                0.0
            } else if lo {
                (-g[i]).max(0.0)
            } else if hi {
                g[i].max(0.0)
            } else {
                g[i].abs()
            };
            worst = worst.max(r);
        }
        worst
    };

    let mut g = grad(&a);
    let mut obj = objective(&a);
    for it in 0..cfg.max_outer {
        let res = kkt(&a, &g);
        if res <= tol {
            return Ok(DamageOut {
                alpha: a,
                iterations: it,
                kkt_residual: res,
            });
        }
        // Free set: strictly interior nodes plus bound nodes whose gradient
        // points inward.
        let free: Vec<usize> = (0..nv)
            .filter(|&i| {
                if alpha_prev[i] <= 0.0 {
                    return false;
                }
                let lo = a[i] <= 0.0;
                let hi = a[i] >= alpha_prev[i];
                (!lo && !hi) || (lo && g[i] < 0.0) || (hi && g[i] > 0.0)
            })
            .collect();
        if free.is_empty() {
            let res = kkt(&a, &g);
            return Ok(DamageOut {
                alpha: a,
                iterations: it,
                kkt_residual: res,
            });
        }
        let k = free.len();
        let mut sub = DenseSym::zeros(k);
        let mut rhs = vec![0.0; k];
        let pos: Vec<Option<usize>> = {
            let mut p = vec![None; nv];
            for (slot, &i) in free.iter().enumerate() {
                p[i] = Some(slot);
            }
            p
        };
        for (slot, &i) in free.iter().enumerate() {
            rhs[slot] = -g[i];
            for kk in qp.h_matrix.row_ptr[i]..qp.h_matrix.row_ptr[i + 1] {
                let j = qp.h_matrix.col_idx[kk];
                if let Some(sj) = pos[j] {
                    sub.add(slot, sj, qp.h_matrix.values[kk]);
                }
            }
        }
        let d = sub.solve_spd_robust(&rhs)?;
        // Projected backtracking line search on the QP objective.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = a.clone();
            for (slot, &i) in free.iter().enumerate() {
                trial[i] = (a[i] + t * d[slot]).clamp(0.0, alpha_prev[i]);
            }
            let trial_obj = objective(&trial);
            if trial_obj <= obj + 1e-14 * (1.0 + obj.abs()) {
                // Require genuine progress unless already at a fixed point.
                let moved = free.iter().any(|&i| trial[i] != a[i]);
                a = trial;
                obj = trial_obj;
                accepted = moved;
                break;
            }
            t *= 0.5;
        }
        g = grad(&a);
        if !accepted {
            let res = kkt(&a, &g);
            if res <= accept_tol {
                return Ok(DamageOut {
                    alpha: a,
                    iterations: it + 1,
                    kkt_residual: res,
                });
            }
            return Err(Error::NonConvergence {
                context: "damage substep line search stalled".into(),
                residual: res,
            });
        }
    }
    let g = grad(&a);
    let res = kkt(&a, &g);
    if res <= accept_tol {
        Ok(DamageOut {
            alpha: a,
            iterations: cfg.max_outer,
            kkt_residual: res,
        })
    } else {
        Err(Error::NonConvergence {
            context: "damage substep".into(),
            residual: res,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveStats {
    pub sweeps: usize,
    pub plastic_iterations: usize,
    pub plastic_residual: f64,
    pub hill_gap: f64,
    pub damage_kkt: f64,
    /// Kuhn–Tucker equality residual |∂_α𝓔[α̇] + ε‖α̇‖²| at the solution.
    pub kt_equality: f64,
    pub objective: f64,
    /// Per-sweep (objective, damage KKT residual) of the winning start.
    pub objective_trace: Vec<(f64, f64)>,
    pub start_used: usize,
    /// Set when the sweep stagnated before reaching the substep tolerances.
    pub flag: Option<String>,
}

impl SolveStats {
    /// Solver trace as CSV (sweep, objective, kkt_residual).
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("sweep,objective,kkt_residual\n");
        for (i, (obj, kkt)) in self.objective_trace.iter().enumerate() {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", i + 1, obj, kkt));
        }
        out
    }
}

/// The incremental objective 𝓔(α,e,p) + 𝓗(p−p_prev) + (ε/2τ)‖α−α_prev‖².
pub fn incremental_objective(
    s: &State,
    prev: &State,
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
) -> Result<f64> {
    let en = total_energy(s, law, fe)?.total;
    let dp: Vec<f64> = s.p.iter().zip(&prev.p).map(|(a, b)| a - b).collect();
    let h = plastic_potential(&dp, law, fe);
    let mut visc = 0.0;
    if eps > 0.0 {
        for v in 0..fe.n_vertices() {
            let d = s.alpha[v] - prev.alpha[v];
            visc += fe.lumped[v] * d * d;
        }
        visc *= eps / (2.0 * tau);
    }
    Ok(en + h + visc)
}

enum Start {
    /// Previous state, plastic substep first.
    Previous,
    /// Elastic predictor, damage substep first.
    ElasticPredictor,
    /// Fully relaxed damage predictor (α ≡ 0), plastic first.
    RelaxedDamage,
}

/// Solves one incremental minimization problem by alternating the two
/// substeps from several starts, keeping the best converged candidate.
#[allow(clippy::too_many_arguments)]
pub fn incremental_minimize(
    prev: &State,
    datum: &BoundaryDatum,
    t_new: f64,
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
    elastic: &ElasticSystem,
    cfg: &SolverConfig,
) -> Result<(State, SolveStats)> {
    let starts = [Start::Previous, Start::ElasticPredictor, Start::RelaxedDamage];
    let mut best: Option<(State, SolveStats)> = None;

    for (si, start) in starts.iter().enumerate().take(cfg.n_starts.clamp(1, 3)) {
        let mut alpha: Vec<f64> = match start {
            Start::RelaxedDamage => vec![0.0; fe.n_vertices()],
            _ => prev.alpha.clone(),
        };
        let mut p = prev.p.clone();
        let mut trace = Vec::new();
        let mut flag = None;

        // The damage-first start needs a strain state before its first
        // damage solve; the damage objective does not involve e, so only the
        // ordering differs.
        let damage_first = matches!(start, Start::ElasticPredictor);
        let mut stats = SolveStats {
            sweeps: 0,
            plastic_iterations: 0,
            plastic_residual: f64::NAN,
            hill_gap: f64::NAN,
            damage_kkt: f64::NAN,
            kt_equality: f64::NAN,
            objective: f64::INFINITY,
            objective_trace: Vec::new(),
            start_used: si,
            flag: None,
        };

        let mut u = prev.u.clone();
        let mut e = prev.e.clone();
        let mut last_obj = f64::INFINITY;
        let mut last_alpha = alpha.clone();
        let mut last_p = p.clone();
        let mut converged = false;

        for sweep in 0..cfg.max_outer {
            stats.sweeps = sweep + 1;
            if damage_first && sweep == 0 {
                match damage_step(&p, &prev.alpha, eps, tau, law, fe, cfg) {
                    Ok(out) => {
                        alpha = out.alpha;
                        stats.damage_kkt = out.kkt_residual;
                    }
                    Err(Error::NonConvergence { residual, .. }) => {
                        flag = Some(format!("damage substep stalled (kkt {residual:.3e})"));
                    }
                    Err(e) => return Err(e),
                }
            }
            match elastoplastic_step(&alpha, &p, &prev.p, datum, law, fe, elastic, cfg, 1e3) {
                Ok(out) => {
                    u = out.u;
                    e = out.e;
                    p = out.p;
                    stats.plastic_iterations += out.iterations;
                    stats.plastic_residual = out.residual;
                    stats.hill_gap = out.hill_gap;
                }
                Err(Error::NonConvergence { residual, context }) => {
                    flag = Some(format!("plastic substep: {context} ({residual:.3e})"));
                }
                Err(e) => return Err(e),
            }
            match damage_step(&p, &prev.alpha, eps, tau, law, fe, cfg) {
                Ok(out) => {
                    alpha = out.alpha;
                    stats.damage_kkt = out.kkt_residual;
                }
                Err(Error::NonConvergence { residual, .. }) => {
                    flag = Some(format!("damage substep stalled (kkt {residual:.3e})"));
                }
                Err(e) => return Err(e),
            }
            let candidate = State {
                t: t_new,
                alpha: alpha.clone(),
                u: u.clone(),
                e: e.clone(),
                p: p.clone(),
            };
            let obj = incremental_objective(&candidate, prev, eps, tau, law, fe)?;
            trace.push((obj, stats.damage_kkt));
            if obj > last_obj + 1e-12 * (1.0 + last_obj.abs()) {
                flag = Some(format!(
                    "objective increased across sweeps: {last_obj:.12e} -> {obj:.12e}"
                ));
            }
            let unchanged = alpha == last_alpha && p == last_p;
            let stagnated = unchanged
                || (last_obj - obj).abs() <= cfg.tol_energy_stagnation * (1.0 + obj.abs());
            last_obj = obj;
            last_alpha.clone_from(&alpha);
            last_p.clone_from(&p);
            if stagnated {
                converged = true;
                break;
            }
        }
        if !converged && flag.is_none() {
            flag = Some("alternating minimization hit max_outer".into());
        }

        // Strict-tolerance closing sweeps so the final state satisfies both
        // substep optimality systems against each other.
        let mut closed = false;
        for _ in 0..4 {
            match elastoplastic_step(&alpha, &p, &prev.p, datum, law, fe, elastic, cfg, 1.0) {
                Ok(out) => {
                    u = out.u;
                    e = out.e;
                    p = out.p;
                    stats.plastic_residual = out.residual;
                    stats.hill_gap = out.hill_gap;
                    stats.plastic_iterations += out.iterations;
                }
                Err(Error::NonConvergence { residual, context }) => {
                    flag = Some(format!("closing plastic sweep: {context} ({residual:.3e})"));
                    break;
                }
                Err(e) => return Err(e),
            }
            match damage_step(&p, &prev.alpha, eps, tau, law, fe, cfg) {
                Ok(out) => {
                    let moved = out
                        .alpha
                        .iter()
                        .zip(&alpha)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    alpha = out.alpha;
                    stats.damage_kkt = out.kkt_residual;
                    if moved <= 1e-13 {
                        closed = true;
                        break;
                    }
                }
                Err(Error::NonConvergence { residual, .. }) => {
                    flag = Some(format!("closing damage sweep stalled (kkt {residual:.3e})"));
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        // Converged closing sweeps supersede transient stalls from the loose
        // alternation phase.
        if converged && closed {
            flag = None;
        }

        let state = State {
            t: t_new,
            alpha,
            u,
            e,
            p,
        };
        stats.objective = incremental_objective(&state, prev, eps, tau, law, fe)?;
        stats.objective_trace = trace;
        stats.flag = flag;
        stats.kt_equality = kt_equality_residual(&state, prev, eps, tau, law, fe);

        let better = match &best {
            None => true,
            Some((_, b)) => stats.objective < b.objective - 1e-14 * (1.0 + b.objective.abs()),
        };
        if better {
            best = Some((state, stats));
        }
    }

    best.ok_or_else(|| Error::NonConvergence {
        context: "no incremental candidate".into(),
        residual: f64::NAN,
    })
}

/// |∂_α𝓔[α̇] + ε‖α̇‖²| with α̇ = (α − α_prev)/τ, lumped L². For ε = 0 this is
/// the energetic Kuhn–Tucker pairing |∂_α𝓔[α̇]|.
pub fn kt_equality_residual(
    s: &State,
    prev: &State,
    eps: f64,
    tau: f64,
    law: &MaterialLaw,
    fe: &FeSpace,
) -> f64 {
    let g = energy::alpha_gradient(s, law, fe);
    let mut pairing = 0.0;
    let mut rate2 = 0.0;
    for v in 0..fe.n_vertices() {
        let da = (s.alpha[v] - prev.alpha[v]) / tau;
        pairing += g[v] * da;
        rate2 += fe.lumped[v] * da * da;
    }
    (pairing + eps * rate2).abs()
}
