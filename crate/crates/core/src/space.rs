//! P1 finite-element space on a triangle mesh: dof maps for scalar (α),
//! vector (u) and symmetric-tensor (p) fields, assembled mass and stiffness
//! operators, symmetric-gradient evaluation, quadrature, and norms.
//!
//! Field storage: α is one value per vertex; u interleaves (x,y) per vertex;
//! p interleaves the 3 Voigt components per vertex; the elastic strain e is
//! one Voigt triple per element (P1 displacements have elementwise-constant
//! symmetric gradients).

use crate::error::{Error, Result};
use crate::la::Csr;
use crate::mesh::Mesh;
use crate::tensor::SymTensor;

/// Voigt length in 2D.
pub const M: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    H1,
    L4,
}

/// Degree-2 exact rule: edge midpoints, weights 1/3.
const QUAD_DEG2: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

/// Degree-4 exact 6-point rule.
const QA: f64 = 0.445_948_490_915_965;
const QB: f64 = 0.091_576_213_509_771;
const WA: f64 = 0.223_381_589_678_011;
const WB: f64 = 0.109_951_743_655_322;
const QUAD_DEG4: [([f64; 3], f64); 6] = [
    ([1.0 - 2.0 * QA, QA, QA], WA),
    ([QA, 1.0 - 2.0 * QA, QA], WA),
    ([QA, QA, 1.0 - 2.0 * QA], WA),
    ([1.0 - 2.0 * QB, QB, QB], WB),
    ([QB, 1.0 - 2.0 * QB, QB], WB),
    ([QB, QB, 1.0 - 2.0 * QB], WB),
];

#[derive(Debug, Clone)]
pub struct FeSpace {
    pub mesh: Mesh,
    /// Consistent scalar mass matrix.
    pub m_s: Csr,
    /// Scalar stiffness matrix ∫∇φ_i·∇φ_j.
    pub k_s: Csr,
    /// Lumped (row-sum) masses, = ∫φ_v.
    pub lumped: Vec<f64>,
    /// Global u-dof index (2v+c) → interior equation index, boundary dofs None.
    pub u_interior: Vec<Option<usize>>,
    pub n_interior: usize,
}

impl FeSpace {
    pub fn new(mesh: Mesh) -> FeSpace {
        let n = mesh.n_vertices();
        let mut mass_tri = Vec::new();
        let mut stiff_tri = Vec::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let area = mesh.areas[t];
            let g = &mesh.grads[t];
            for a in 0..3 {
                for b in 0..3 {
                    let mab = if a == b { area / 6.0 } else { area / 12.0 };
                    mass_tri.push((tri[a], tri[b], mab));
                    let kab = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                    stiff_tri.push((tri[a], tri[b], kab));
                }
            }
        }
        let m_s = Csr::from_triplets(n, &mass_tri);
        let k_s = Csr::from_triplets(n, &stiff_tri);
        let mut lumped = vec![0.0; n];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for &v in tri {
                lumped[v] += mesh.areas[t] / 3.0;
            }
        }
        let mut u_interior = vec![None; 2 * n];
        let mut n_interior = 0;
        for v in 0..n {
            if !mesh.is_boundary[v] {
                for c in 0..2 {
                    u_interior[2 * v + c] = Some(n_interior);
                    n_interior += 1;
                }
            }
        }
        FeSpace {
            mesh,
            m_s,
            k_s,
            lumped,
            u_interior,
            n_interior,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.mesh.homogeneous
    }

    pub fn area(&self) -> f64 {
        self.mesh.total_area()
    }

    // ---- interpolation -------------------------------------------------

    pub fn interp_scalar(&self, v: &[f64], elem: usize, bary: &[f64; 3]) -> f64 {
        let tri = &self.mesh.triangles[elem];
        bary[0] * v[tri[0]] + bary[1] * v[tri[1]] + bary[2] * v[tri[2]]
    }

    pub fn interp_voigt(&self, p: &[f64], elem: usize, bary: &[f64; 3]) -> [f64; M] {
        let tri = &self.mesh.triangles[elem];
        let mut out = [0.0; M];
        for a in 0..3 {
            let base = M * tri[a];
            for c in 0..M {
                out[c] += bary[a] * p[base + c];
            }
        }
        out
    }

    /// Element average of a nodal Voigt field (= value at the centroid).
    pub fn element_mean_voigt(&self, p: &[f64], elem: usize) -> [f64; M] {
        self.interp_voigt(p, elem, &[1.0 / 3.0; 3])
    }

    /// Symmetric gradient of a nodal displacement on one element, in Voigt
    /// form. Zero on the homogeneous pseudo-element.
    pub fn element_strain(&self, u: &[f64], elem: usize) -> [f64; M] {
        let tri = &self.mesh.triangles[elem];
        let g = &self.mesh.grads[elem];
        let mut exx = 0.0;
        let mut eyy = 0.0;
        let mut exy = 0.0;
        for a in 0..3 {
            let ux = u[2 * tri[a]];
            let uy = u[2 * tri[a] + 1];
            exx += ux * g[a][0];
            eyy += uy * g[a][1];
            exy += 0.5 * (ux * g[a][1] + uy * g[a][0]);
        }
        [exx, eyy, std::f64::consts::SQRT_2 * exy]
    }

    pub fn quad_deg2(&self) -> &'static [([f64; 3], f64)] {
        &QUAD_DEG2
    }

    pub fn quad_deg4(&self) -> &'static [([f64; 3], f64)] {
        &QUAD_DEG4
    }

    // ---- weighted assembly ----------------------------------------------

    /// Assembles ∫ w(α(x), |p(x)|²) φ_i φ_j with the degree-4 rule; exact for
    /// the affine/quadratic constitutive profiles.
    pub fn weighted_mass<F>(&self, alpha: &[f64], p: &[f64], weight: F) -> Csr
    where
        F: Fn(f64, f64) -> f64,
    {
        let n = self.n_vertices();
        let mut tri = Vec::new();
        for elem in 0..self.n_elements() {
            let area = self.mesh.areas[elem];
            let ids = &self.mesh.triangles[elem];
            for &(bary, w) in QUAD_DEG4.iter() {
                let a = self.interp_scalar(alpha, elem, &bary);
                let pv = self.interp_voigt(p, elem, &bary);
                let pn2 = pv.iter().map(|x| x * x).sum::<f64>();
                let coeff = area * w * weight(a, pn2);
                for i in 0..3 {
                    for j in 0..3 {
                        tri.push((ids[i], ids[j], coeff * bary[i] * bary[j]));
                    }
                }
            }
        }
        Csr::from_triplets(n, &tri)
    }

    // ---- norms -----------------------------------------------------------

    /// Norms of a nodal scalar field. L2/H1 use the assembled (exact)
    /// operators; L1 uses the 3-point degree-2 rule on |v|; L4 the 6-point
    /// degree-4 rule on |v|⁴.
    pub fn scalar_norm(&self, v: &[f64], kind: NormKind) -> Result<f64> {
        if v.len() != self.n_vertices() {
            return Err(Error::Dimension("scalar field length".into()));
        }
        Ok(match kind {
            NormKind::L2 => self.m_s.quadratic(v).max(0.0).sqrt(),
            NormKind::H1 => (self.m_s.quadratic(v) + self.k_s.quadratic(v)).max(0.0).sqrt(),
            NormKind::L1 => self.integrate(&QUAD_DEG2, |e, b| self.interp_scalar(v, e, b).abs()),
            NormKind::L4 => self
                .integrate(&QUAD_DEG4, |e, b| self.interp_scalar(v, e, b).powi(4))
                .powf(0.25),
        })
    }

    /// Lumped-mass L² norm of a scalar field. This is the α-metric used by
    /// the viscous penalty, the Kuhn–Tucker identities and Ψ, so that the
    /// discrete optimality conditions hold exactly.
    pub fn scalar_l2_lumped(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.lumped)
            .map(|(x, m)| m * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Lumped-L² + gradient seminorm; the α-H¹ norm used in arc length.
    pub fn scalar_h1_lumped(&self, v: &[f64]) -> f64 {
        (v.iter()
            .zip(&self.lumped)
            .map(|(x, m)| m * x * x)
            .sum::<f64>()
            + self.k_s.quadratic(v))
        .max(0.0)
        .sqrt()
    }

    /// Norms of a nodal Voigt tensor field (consistent mass per component).
    pub fn tensor_norm(&self, p: &[f64], kind: NormKind) -> Result<f64> {
        if p.len() != M * self.n_vertices() {
            return Err(Error::Dimension("tensor field length".into()));
        }
        match kind {
            NormKind::L2 => Ok(self.tensor_mass_quadratic(p).max(0.0).sqrt()),
            NormKind::H1 => {
                Ok((self.tensor_mass_quadratic(p) + self.tensor_grad2(p)).max(0.0).sqrt())
            }
            NormKind::L1 => Ok(self.integrate(&QUAD_DEG2, |e, b| {
                let t = self.interp_voigt(p, e, b);
                t.iter().map(|x| x * x).sum::<f64>().sqrt()
            })),
            NormKind::L4 => Ok(self
                .integrate(&QUAD_DEG4, |e, b| {
                    let t = self.interp_voigt(p, e, b);
                    t.iter().map(|x| x * x).sum::<f64>().powi(2)
                })
                .powf(0.25)),
        }
    }

    /// Norms of a nodal displacement field.
    pub fn vector_norm(&self, u: &[f64], kind: NormKind) -> Result<f64> {
        if u.len() != 2 * self.n_vertices() {
            return Err(Error::Dimension("vector field length".into()));
        }
        let n = self.n_vertices();
        let comp = |c: usize| -> Vec<f64> { (0..n).map(|v| u[2 * v + c]).collect() };
        match kind {
            NormKind::L2 => {
                let q: f64 = (0..2).map(|c| self.m_s.quadratic(&comp(c))).sum();
                Ok(q.max(0.0).sqrt())
            }
            NormKind::H1 => {
                let q: f64 = (0..2)
                    .map(|c| {
                        let vc = comp(c);
                        self.m_s.quadratic(&vc) + self.k_s.quadratic(&vc)
                    })
                    .sum();
                Ok(q.max(0.0).sqrt())
            }
            NormKind::L1 => Ok(self.integrate(&QUAD_DEG2, |e, b| {
                let tri = &self.mesh.triangles[e];
                let mut x = 0.0;
                let mut y = 0.0;
                for a in 0..3 {
                    x += b[a] * u[2 * tri[a]];
                    y += b[a] * u[2 * tri[a] + 1];
                }
                (x * x + y * y).sqrt()
            })),
            NormKind::L4 => Ok(self
                .integrate(&QUAD_DEG4, |e, b| {
                    let tri = &self.mesh.triangles[e];
                    let mut x = 0.0;
                    let mut y = 0.0;
                    for a in 0..3 {
                        x += b[a] * u[2 * tri[a]];
                        y += b[a] * u[2 * tri[a] + 1];
                    }
                    (x * x + y * y).powi(2)
                })
                .powf(0.25)),
        }
    }

    /// L² norm of an elementwise-constant Voigt field (exact).
    pub fn element_tensor_l2(&self, e: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.n_elements() {
            let n2: f64 = e[M * t..M * t + M].iter().map(|x| x * x).sum();
            acc += self.mesh.areas[t] * n2;
        }
        acc.sqrt()
    }

    /// xᵀ(M⊗I₃)y over the Voigt components.
    pub fn tensor_mass_bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n_vertices();
        let mut acc = 0.0;
        for i in 0..n {
            for k in self.m_s.row_ptr[i]..self.m_s.row_ptr[i + 1] {
                let j = self.m_s.col_idx[k];
                let m = self.m_s.values[k];
                for c in 0..M {
                    acc += m * x[M * i + c] * y[M * j + c];
                }
            }
        }
        acc
    }

    pub fn tensor_mass_quadratic(&self, x: &[f64]) -> f64 {
        self.tensor_mass_bilinear(x, x)
    }

    /// xᵀ(K⊗I₃)y = ∫∇x:∇y for tensor fields.
    pub fn tensor_stiff_bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n_vertices();
        let mut acc = 0.0;
        for i in 0..n {
            for k in self.k_s.row_ptr[i]..self.k_s.row_ptr[i + 1] {
                let j = self.k_s.col_idx[k];
                let m = self.k_s.values[k];
                for c in 0..M {
                    acc += m * x[M * i + c] * y[M * j + c];
                }
            }
        }
        acc
    }

    pub fn tensor_grad2(&self, x: &[f64]) -> f64 {
        self.tensor_stiff_bilinear(x, x)
    }

    /// (K⊗I₃)x into `out`.
    pub fn tensor_stiff_apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_vertices();
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for k in self.k_s.row_ptr[i]..self.k_s.row_ptr[i + 1] {
                let j = self.k_s.col_idx[k];
                let m = self.k_s.values[k];
                for c in 0..M {
                    out[M * i + c] += m * x[M * j + c];
                }
            }
        }
    }

    fn integrate<F>(&self, rule: &[([f64; 3], f64)], f: F) -> f64
    where
        F: Fn(usize, &[f64; 3]) -> f64,
    {
        let mut acc = 0.0;
        for elem in 0..self.n_elements() {
            let area = self.mesh.areas[elem];
            for &(bary, w) in rule {
                acc += area * w * f(elem, &bary);
            }
        }
        acc
    }

    /// ∫ f over the domain with the degree-4 rule, f given pointwise from
    /// (α, |p|²) at quadrature points.
    pub fn integrate_alpha_p<F>(&self, alpha: &[f64], p: &[f64], f: F) -> f64
    where
        F: Fn(f64, f64) -> f64,
    {
        self.integrate(&QUAD_DEG4, |e, b| {
            let a = self.interp_scalar(alpha, e, b);
            let pv = self.interp_voigt(p, e, b);
            f(a, pv.iter().map(|x| x * x).sum())
        })
    }

    /// Assembles the nodal covector of ∫ g(α, |p|²) φ_v (degree-4 rule).
    pub fn assemble_alpha_load<F>(&self, alpha: &[f64], p: &[f64], g: F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut out = vec![0.0; self.n_vertices()];
        for elem in 0..self.n_elements() {
            let area = self.mesh.areas[elem];
            let ids = &self.mesh.triangles[elem];
            for &(bary, w) in QUAD_DEG4.iter() {
                let a = self.interp_scalar(alpha, elem, &bary);
                let pv = self.interp_voigt(p, elem, &bary);
                let pn2 = pv.iter().map(|x| x * x).sum::<f64>();
                let coeff = area * w * g(a, pn2);
                for i in 0..3 {
                    out[ids[i]] += coeff * bary[i];
                }
            }
        }
        out
    }

    /// Assembles the nodal tensor covector of ∫ 2 g(α) p : q φ-wise, i.e.
    /// the p-gradient of ∫ g(α)|p|² (degree-4 rule).
    pub fn assemble_p_load<F>(&self, alpha: &[f64], p: &[f64], g: F) -> Vec<f64>
    where
        F: Fn(f64) -> f64,
    {
        let mut out = vec![0.0; M * self.n_vertices()];
        for elem in 0..self.n_elements() {
            let area = self.mesh.areas[elem];
            let ids = &self.mesh.triangles[elem];
            for &(bary, w) in QUAD_DEG4.iter() {
                let a = self.interp_scalar(alpha, elem, &bary);
                let pv = self.interp_voigt(p, elem, &bary);
                let coeff = 2.0 * area * w * g(a);
                for i in 0..3 {
                    for c in 0..M {
                        out[M * ids[i] + c] += coeff * bary[i] * pv[c];
                    }
                }
            }
        }
        out
    }

    /// Pairing ∫ e : q of an elementwise field e against a nodal field q,
    /// exact for P1 (∫_T q = area·centroid value).
    pub fn element_nodal_pairing(&self, e: &[f64], q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in 0..self.n_elements() {
            let mean = self.element_mean_voigt(q, t);
            let a = self.mesh.areas[t];
            for c in 0..M {
                acc += a * e[M * t + c] * mean[c];
            }
        }
        acc
    }

    /// Nodal covector of q ↦ ∫ e : q (the transpose of the element average
    /// against elementwise data).
    pub fn element_to_nodal_load(&self, e: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; M * self.n_vertices()];
        for t in 0..self.n_elements() {
            let a3 = self.mesh.areas[t] / 3.0;
            for &v in &self.mesh.triangles[t] {
                for c in 0..M {
                    out[M * v + c] += a3 * e[M * t + c];
                }
            }
        }
        out
    }

    /// Pointwise tensor value at a vertex.
    pub fn vertex_tensor(p: &[f64], v: usize) -> SymTensor {
        SymTensor::from_voigt(2, p[M * v..M * v + M].to_vec())
    }
}
