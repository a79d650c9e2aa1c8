//! Dimension-generic symmetric tensors in scaled Voigt storage.
//!
//! Off-diagonal entries are stored multiplied by √2 so that the Euclidean dot
//! product of two stored vectors equals the Frobenius double contraction
//! A₁:A₂ of the underlying matrices. Quadratic forms, norms and proximal maps
//! then work on plain coefficient vectors with no factor-2 bookkeeping.

use crate::error::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Number of Voigt components for an n×n symmetric matrix.
pub const fn voigt_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Symmetric n×n tensor, n ∈ {2,3}. Storage order: diagonal entries first,
/// then off-diagonals (n=2: [a11, a22, √2·a12]; n=3: [a11, a22, a33,
/// √2·a12, √2·a13, √2·a23]).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    dim: usize,
    voigt: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "spatial dimension must be 2 or 3");
        SymTensor {
            dim,
            voigt: vec![0.0; voigt_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.voigt[i] = 1.0;
        }
        t
    }

    /// Builds from a full matrix given as rows.
    pub fn from_matrix(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if !(dim == 2 || dim == 3) || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension(format!("{dim}x? matrix")));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * (1.0 + rows[i][j].abs()) {
                    return Err(Error::Dimension("matrix not symmetric".into()));
                }
            }
        }
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.voigt[i] = rows[i][i];
        }
        let mut k = dim;
        for i in 0..dim {
            for j in (i + 1)..dim {
                t.voigt[k] = SQRT2 * rows[i][j];
                k += 1;
            }
        }
        Ok(t)
    }

    pub fn diag(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut t = Self::zeros(dim);
        t.voigt[..dim].copy_from_slice(entries);
        t
    }

    pub fn from_voigt(dim: usize, voigt: Vec<f64>) -> Self {
        assert_eq!(voigt.len(), voigt_len(dim));
        SymTensor { dim, voigt }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn voigt(&self) -> &[f64] {
        &self.voigt
    }

    pub fn voigt_mut(&mut self) -> &mut [f64] {
        &mut self.voigt
    }

    /// Matrix entry (i, j).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.voigt[i];
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        // Off-diagonal slot index for (a,b), a<b, in the fixed order.
        let mut k = self.dim;
        for p in 0..self.dim {
            for q in (p + 1)..self.dim {
                if (p, q) == (a, b) {
                    return self.voigt[k] / SQRT2;
                }
                k += 1;
            }
        }
        unreachable!()
    }

    /// Frobenius double contraction A:B; equals the stored dot product.
    pub fn frobenius(&self, other: &SymTensor) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.voigt
            .iter()
            .zip(&other.voigt)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.frobenius(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.voigt[..self.dim].iter().sum()
    }

    /// Mean part tr(A)/n.
    pub fn mean(&self) -> f64 {
        self.trace() / self.dim as f64
    }

    /// Deviatoric part A − mean(A)·I. Trace-free exactly.
    pub fn dev(&self) -> SymTensor {
        let m = self.mean();
        let mut d = self.clone();
        for i in 0..self.dim {
            d.voigt[i] -= m;
        }
        d
    }

    pub fn scale(&self, s: f64) -> SymTensor {
        SymTensor {
            dim: self.dim,
            voigt: self.voigt.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &SymTensor) -> SymTensor {
        debug_assert_eq!(self.dim, other.dim);
        SymTensor {
            dim: self.dim,
            voigt: self
                .voigt
                .iter()
                .zip(&other.voigt)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymTensor) -> SymTensor {
        self.add(&other.scale(-1.0))
    }

    /// Symmetric part of an n×n matrix G (rows).
    pub fn sym_of(g: &[&[f64]]) -> Result<Self> {
        let dim = g.len();
        if !(dim == 2 || dim == 3) || g.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("sym_of expects square 2x2 or 3x3".into()));
        }
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            t.voigt[i] = g[i][i];
        }
        let mut k = dim;
        for i in 0..dim {
            for j in (i + 1)..dim {
                t.voigt[k] = SQRT2 * 0.5 * (g[i][j] + g[j][i]);
                k += 1;
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_tensor(rng: &mut impl Rng, dim: usize) -> SymTensor {
        let v: Vec<f64> = (0..voigt_len(dim))
            .map(|_| rng.random::<f64>() * 4.0 - 2.0)
            .collect();
        SymTensor::from_voigt(dim, v)
    }

    fn full_contraction(a: &SymTensor, b: &SymTensor) -> f64 {
        let n = a.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += a.entry(i, j) * b.entry(i, j);
            }
        }
        acc
    }

    #[test]
    fn voigt_dot_equals_full_matrix_contraction() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for dim in [2usize, 3] {
            for _ in 0..200 {
                let a = random_tensor(&mut rng, dim);
                let b = random_tensor(&mut rng, dim);
                let lhs = a.frobenius(&b);
                let rhs = full_contraction(&a, &b);
                assert!(
                    (lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs().max(rhs.abs())),
                    "dim {dim}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn mean_dev_split_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for dim in [2usize, 3] {
            for _ in 0..100 {
                let x = random_tensor(&mut rng, dim);
                let rebuilt = SymTensor::identity(dim).scale(x.mean()).add(&x.dev());
                for (a, b) in x.voigt().iter().zip(rebuilt.voigt()) {
                    assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
                }
                assert!(x.dev().trace().abs() <= 1e-13 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn sym_of_matches_definition() {
        let g = [[0.0, 1.0], [0.0, 0.0]];
        let s = SymTensor::sym_of(&[&g[0], &g[1]]).unwrap();
        assert!((s.entry(0, 1) - 0.5).abs() < 1e-15);
        assert!((s.entry(1, 0) - 0.5).abs() < 1e-15);
        assert_eq!(s.entry(0, 0), 0.0);
    }
}
