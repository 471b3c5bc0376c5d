//! Brute-force reference interpolant.
//!
//! Solves the full `N x N` Gram system over the deduplicated sparse-grid
//! nodes with a dense Cholesky factorisation. Exists only to check the
//! combination-technique assembly; the size cap keeps it that way.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, PdFailure, Result};
use crate::grids::{GridNode, GridSpec};
use crate::kernels::SeparableKernel;

pub const DEFAULT_SIZE_CAP: usize = 5000;

#[derive(Debug, Clone)]
pub struct DenseInterpolant {
    nodes: Vec<GridNode>,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    kernel: SeparableKernel,
}

impl DenseInterpolant {
    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (w, c) in self.weights.iter().zip(&self.coords) {
            acc += w * self.kernel.eval(x, c)?;
        }
        if self.coords.is_empty() && x.len() != self.kernel.dim() {
            return Err(Error::shape(self.kernel.dim(), x.len()));
        }
        Ok(acc)
    }

    /// `max_i |(Gram w - f)_i| / ||f||_2` for the given samples.
    pub fn relative_residual(&self, samples: &[f64]) -> Result<f64> {
        let norm = samples.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut worst = 0.0f64;
        for (ci, fi) in self.coords.iter().zip(samples) {
            let mut row = 0.0;
            for (w, cj) in self.weights.iter().zip(&self.coords) {
                row += w * self.kernel.eval(ci, cj)?;
            }
            worst = worst.max((row - fi).abs());
        }
        Ok(if norm > 0.0 { worst / norm } else { worst })
    }
}

/// Factorised dense Gram system; fits any number of right-hand sides.
pub struct DenseSystem {
    nodes: Vec<GridNode>,
    coords: Vec<Vec<f64>>,
    kernel: SeparableKernel,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl DenseSystem {
    pub fn new(spec: &GridSpec, size_cap: usize) -> Result<Self> {
        let nodes = spec.nodes();
        let n = nodes.len();
        if n > size_cap {
            return Err(Error::SizeGuard { n, cap: size_cap });
        }
        let kernel = spec.kernel()?;
        let coords: Vec<Vec<f64>> = nodes.iter().map(GridNode::coords).collect();
        let mut gram = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval(&coords[i], &coords[j])?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let chol = gram.cholesky().ok_or_else(|| {
            // nalgebra does not report where it failed.
            Error::PdFailure(PdFailure { dim: None, level: None, pivot: 0, size: n })
        })?;
        Ok(Self { nodes, coords, kernel, chol })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn fit<F: Fn(&[f64]) -> f64>(&self, f: F) -> DenseInterpolant {
        let rhs = DVector::from_iterator(self.len(), self.coords.iter().map(|c| f(c)));
        let w = self.chol.solve(&rhs);
        DenseInterpolant {
            nodes: self.nodes.clone(),
            coords: self.coords.clone(),
            weights: w.iter().copied().collect(),
            kernel: self.kernel.clone(),
        }
    }
}

/// Dense interpolant of `f` on the sparse-grid nodes of `spec`.
pub fn dense_fit<F: Fn(&[f64]) -> f64>(spec: &GridSpec, f: F) -> Result<DenseInterpolant> {
    Ok(DenseSystem::new(spec, DEFAULT_SIZE_CAP)?.fit(f))
}

pub fn dense_evaluate(interp: &DenseInterpolant, x: &[f64]) -> Result<f64> {
    interp.evaluate(x)
}
