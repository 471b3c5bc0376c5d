//! Fast assembly of sparse-grid interpolants.
//!
//! The sparse-grid operator is a signed sum of tensor-product interpolants
//! over the contributing blocks of [`GridSpec::contributing_blocks`]. Each
//! block system has Kronecker structure `(G_1 ⊗ ... ⊗ G_d) c = f`, solved by
//! applying `G_j^{-1}` along one tensor mode at a time with the cached
//! Cholesky factor of the 1D Gram matrix `G_j`. Block coefficients are
//! scaled by the block's combination coefficient and scattered into one
//! global weight per node, giving `S(f)(x) = sum_i w_i Phi(x, x_i)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, PdFailure, Result};
use crate::grids::{for_each_tensor_node, point_set_1d, DyadicPoint, GridNode, GridSpec, MultiIndex};
use crate::kernels::SeparableKernel;
use crate::linalg::{cholesky_in_place, cholesky_solve_in_place};

/// Cholesky factor of the Gram matrix of one penalised 1D point set.
#[derive(Debug, Clone)]
pub struct GramFactor1D {
    dim: usize,
    level: i64,
    nodes: Vec<DyadicPoint>,
    /// Row-major lower triangle.
    factor: Vec<f64>,
}

impl GramFactor1D {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn nodes(&self) -> &[DyadicPoint] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Entry `(i, j)` of the lower factor.
    pub fn factor_entry(&self, i: usize, j: usize) -> f64 {
        self.factor[i * self.len() + j]
    }

    /// Solves `G x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        cholesky_solve_in_place(&self.factor, self.len(), b);
    }
}

/// Factorises the Gram matrix of `X_level^{grid_p[dim]}` under the kernel of
/// dimension `dim`.
pub fn factorize_1d(spec: &GridSpec, dim: usize, level: i64) -> Result<GramFactor1D> {
    if dim >= spec.dim() {
        return Err(Error::shape(spec.dim(), dim));
    }
    if level < 0 {
        return Err(Error::Domain(format!("level {level} has an empty point set")));
    }
    let kernel = spec.kernel_1d(dim)?;
    let nodes = point_set_1d(level, spec.grid_p()[dim]);
    let n = nodes.len();
    let coords: Vec<f64> = nodes.iter().map(|p| p.value()).collect();
    let mut factor = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(coords[i], coords[j])?;
            factor[i * n + j] = v;
            factor[j * n + i] = v;
        }
    }
    cholesky_in_place(&mut factor, n).map_err(|pivot| {
        Error::PdFailure(PdFailure { dim: Some(dim), level: Some(level), pivot, size: n })
    })?;
    Ok(GramFactor1D { dim, level, nodes, factor })
}

/// Applies `(F_1 ⊗ ... ⊗ F_d)^{-1}` to a row-major tensor, last mode fastest.
pub fn kronecker_solve(factors: &[&GramFactor1D], values: &mut [f64]) -> Result<()> {
    let shape: Vec<usize> = factors.iter().map(|f| f.len()).collect();
    let total: usize = shape.iter().product();
    if values.len() != total {
        return Err(Error::shape(total, values.len()));
    }
    let mut fiber = Vec::new();
    for (j, factor) in factors.iter().enumerate() {
        let n = shape[j];
        if n == 1 {
            let g = factor.factor[0] * factor.factor[0];
            values.iter_mut().for_each(|v| *v /= g);
            continue;
        }
        let stride: usize = shape[j + 1..].iter().product();
        let outer: usize = shape[..j].iter().product();
        fiber.resize(n, 0.0);
        for o in 0..outer {
            let base = o * n * stride;
            for i in 0..stride {
                for (k, slot) in fiber.iter_mut().enumerate() {
                    *slot = values[base + i + k * stride];
                }
                factor.solve_in_place(&mut fiber);
                for (k, &v) in fiber.iter().enumerate() {
                    values[base + i + k * stride] = v;
                }
            }
        }
    }
    Ok(())
}

/// Per-assembly cache of 1D factors keyed by `(dim, level)`.
#[derive(Debug, Default)]
pub struct FactorCache {
    factors: BTreeMap<(usize, i64), Arc<GramFactor1D>>,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_factor(&mut self, spec: &GridSpec, dim: usize, level: i64) -> Result<Arc<GramFactor1D>> {
        if let Some(f) = self.factors.get(&(dim, level)) {
            return Ok(f.clone());
        }
        let f = Arc::new(factorize_1d(spec, dim, level)?);
        self.factors.insert((dim, level), f.clone());
        Ok(f)
    }

    /// Factorises all requested keys, in parallel when asked. Errors are
    /// reported for the smallest failing key so the outcome does not depend
    /// on scheduling.
    fn fill(&mut self, spec: &GridSpec, keys: impl IntoIterator<Item = (usize, i64)>, parallel: bool) -> Result<()> {
        let missing: Vec<(usize, i64)> = {
            let mut k: Vec<_> = keys.into_iter().filter(|k| !self.factors.contains_key(k)).collect();
            k.sort_unstable();
            k.dedup();
            k
        };
        let built: Vec<Result<GramFactor1D>> = if parallel {
            missing.par_iter().map(|&(j, l)| factorize_1d(spec, j, l)).collect()
        } else {
            missing.iter().map(|&(j, l)| factorize_1d(spec, j, l)).collect()
        };
        for (key, f) in missing.into_iter().zip(built) {
            self.factors.insert(key, Arc::new(f?));
        }
        Ok(())
    }

    fn get(&self, dim: usize, level: i64) -> &GramFactor1D {
        &self.factors[&(dim, level)]
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Coefficients of the tensor interpolant on block `ell` given the samples on
/// the block grid (row-major, last dimension fastest).
pub fn block_solve(spec: &GridSpec, ell: &MultiIndex, samples: &[f64]) -> Result<Vec<f64>> {
    if ell.dim() != spec.dim() {
        return Err(Error::shape(spec.dim(), ell.dim()));
    }
    let mut cache = FactorCache::new();
    let factors = ell
        .levels()
        .iter()
        .enumerate()
        .map(|(j, &l)| cache.get_or_factor(spec, j, l as i64))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&GramFactor1D> = factors.iter().map(|f| f.as_ref()).collect();
    let mut out = samples.to_vec();
    kronecker_solve(&refs, &mut out)?;
    Ok(out)
}

/// Sparse-grid kernel interpolant `x -> sum_i w_i Phi(x, x_i)`.
#[derive(Debug, Clone)]
pub struct SparseInterpolant {
    spec: GridSpec,
    kernel: SeparableKernel,
    nodes: Vec<GridNode>,
    weights: Vec<f64>,
    /// Distinct coordinates per dimension.
    axes: Vec<Vec<f64>>,
    /// `nodes.len() * d` indices into `axes`.
    axis_index: Vec<u32>,
}

impl SparseInterpolant {
    /// Builds an interpolant from explicit nodes and weights.
    pub fn from_parts(spec: GridSpec, nodes: Vec<GridNode>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::shape(nodes.len(), weights.len()));
        }
        let d = spec.dim();
        if let Some(n) = nodes.iter().find(|n| n.dim() != d) {
            return Err(Error::shape(d, n.dim()));
        }
        let kernel = spec.kernel()?;
        let mut axes_exact: Vec<Vec<DyadicPoint>> = vec![Vec::new(); d];
        for node in &nodes {
            for (axis, p) in axes_exact.iter_mut().zip(&node.0) {
                axis.push(*p);
            }
        }
        for axis in &mut axes_exact {
            axis.sort_unstable();
            axis.dedup();
        }
        let mut axis_index = Vec::with_capacity(nodes.len() * d);
        for node in &nodes {
            for (axis, p) in axes_exact.iter().zip(&node.0) {
                axis_index.push(axis.binary_search(p).expect("coordinate present") as u32);
            }
        }
        let axes = axes_exact.iter().map(|a| a.iter().map(|p| p.value()).collect()).collect();
        Ok(Self { spec, kernel, nodes, weights, axes, axis_index })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn weight_of(&self, node: &GridNode) -> Option<f64> {
        self.nodes.binary_search(node).ok().map(|i| self.weights[i])
    }

    /// Evaluates the interpolant at `x`, summing in node order.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::shape(d, x.len()));
        }
        let tables = self
            .kernel
            .dims()
            .iter()
            .zip(&self.axes)
            .zip(x)
            .map(|((k, axis), &xj)| axis.iter().map(|&c| k.eval(xj, c)).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut acc = 0.0;
        for (w, idx) in self.weights.iter().zip(self.axis_index.chunks_exact(d)) {
            let mut phi = *w;
            for (table, &i) in tables.iter().zip(idx) {
                phi *= table[i as usize];
            }
            acc += phi;
        }
        Ok(acc)
    }

    pub fn evaluate_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.evaluate(x)).collect()
    }
}

/// Samples `f` once at every node of `spec`, in node order.
fn sample_nodes<F>(nodes: &[GridNode], f: F, parallel: bool) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if parallel {
        nodes.par_iter().map(|n| f(&n.coords())).collect()
    } else {
        nodes.iter().map(|n| f(&n.coords())).collect()
    }
}

/// Builds the interpolant of `f` with the combination technique.
///
/// `f` receives node coordinates and is called exactly once per node.
pub fn assemble<F>(spec: &GridSpec, f: F) -> Result<SparseInterpolant>
where
    F: Fn(&[f64]) -> f64,
{
    let nodes = spec.nodes();
    let values: Vec<f64> = nodes.iter().map(|n| f(&n.coords())).collect();
    assemble_from_values(spec, nodes, &values, false)
}

/// Parallel [`assemble`]. The result is bit-identical to the serial one.
pub fn assemble_par<F>(spec: &GridSpec, f: F) -> Result<SparseInterpolant>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nodes = spec.nodes();
    let values = sample_nodes(&nodes, f, true);
    assemble_from_values(spec, nodes, &values, true)
}

/// Builds the interpolant from a sample lookup keyed by exact node identity.
pub fn assemble_from_samples<F>(spec: &GridSpec, sample: F) -> Result<SparseInterpolant>
where
    F: Fn(&GridNode) -> Result<f64>,
{
    let nodes = spec.nodes();
    let values = nodes.iter().map(&sample).collect::<Result<Vec<_>>>()?;
    assemble_from_values(spec, nodes, &values, false)
}

/// `nodes` must be `spec.nodes()` and `values` the samples in the same order.
pub(crate) fn assemble_from_values(
    spec: &GridSpec,
    nodes: Vec<GridNode>,
    values: &[f64],
    parallel: bool,
) -> Result<SparseInterpolant> {
    AssemblyPlan::with_nodes(spec, nodes, parallel)?.solve(values, parallel)
}

/// Everything the combination technique needs except the samples: the
/// contributing blocks, where each block node sits in the global node list,
/// and the 1D factors. Build once, then solve for many right-hand sides.
#[derive(Debug)]
pub struct AssemblyPlan {
    spec: GridSpec,
    nodes: Vec<GridNode>,
    blocks: Vec<(MultiIndex, f64, Vec<usize>)>,
    cache: FactorCache,
}

impl AssemblyPlan {
    /// Fails with `PdFailure` if any 1D Gram matrix is not positive definite.
    pub fn new(spec: &GridSpec, parallel: bool) -> Result<Self> {
        Self::with_nodes(spec, spec.nodes(), parallel)
    }

    fn with_nodes(spec: &GridSpec, nodes: Vec<GridNode>, parallel: bool) -> Result<Self> {
        let contributing = spec.contributing_blocks();
        let mut cache = FactorCache::new();
        let keys = contributing
            .iter()
            .flat_map(|(ell, _)| ell.levels().iter().enumerate().map(|(j, &l)| (j, l as i64)));
        cache.fill(spec, keys, parallel)?;

        let position: HashMap<&GridNode, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let locate = |ell: &MultiIndex| -> Vec<usize> {
            let axes = spec.block_axes(ell);
            let mut slots = Vec::new();
            let mut scratch = GridNode(Vec::with_capacity(spec.dim()));
            for_each_tensor_node(&axes, |n| {
                scratch.0.clear();
                scratch.0.extend_from_slice(n);
                slots.push(position[&scratch]);
            });
            slots
        };
        let slots: Vec<Vec<usize>> = if parallel {
            contributing.par_iter().map(|(ell, _)| locate(ell)).collect()
        } else {
            contributing.iter().map(|(ell, _)| locate(ell)).collect()
        };
        drop(position);
        let blocks = contributing.into_iter().zip(slots).map(|((ell, b), s)| (ell, b as f64, s)).collect();
        Ok(Self { spec: spec.clone(), nodes, blocks, cache })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Interpolant for samples given in node order.
    pub fn solve(&self, values: &[f64], parallel: bool) -> Result<SparseInterpolant> {
        if values.len() != self.nodes.len() {
            return Err(Error::shape(self.nodes.len(), values.len()));
        }
        let solve = |(ell, _, slots): &(MultiIndex, f64, Vec<usize>)| -> Result<Vec<f64>> {
            let mut coeffs: Vec<f64> = slots.iter().map(|&i| values[i]).collect();
            let factors: Vec<&GramFactor1D> =
                ell.levels().iter().enumerate().map(|(j, &l)| self.cache.get(j, l as i64)).collect();
            kronecker_solve(&factors, &mut coeffs)?;
            Ok(coeffs)
        };
        let solved: Vec<Result<Vec<f64>>> = if parallel {
            self.blocks.par_iter().map(solve).collect()
        } else {
            self.blocks.iter().map(solve).collect()
        };

        let mut weights = vec![0.0; self.nodes.len()];
        for ((_, b, slots), coeffs) in self.blocks.iter().zip(solved) {
            for (&slot, c) in slots.iter().zip(coeffs?) {
                weights[slot] += b * c;
            }
        }
        SparseInterpolant::from_parts(self.spec.clone(), self.nodes.clone(), weights)
    }
}

/// Reference assembly that expands the telescoping sum over the whole index
/// set, `sum_l prod_j (s_{l_j} - s_{l_j - 1})`, into `2^d` signed tensor
/// interpolants per index without using combination coefficients.
pub fn assemble_telescoping<F>(spec: &GridSpec, f: F) -> Result<SparseInterpolant>
where
    F: Fn(&[f64]) -> f64,
{
    let nodes = spec.nodes();
    let values: Vec<f64> = nodes.iter().map(|n| f(&n.coords())).collect();
    let position: HashMap<&GridNode, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let d = spec.dim();
    let mut cache = FactorCache::new();
    let mut weights = vec![0.0; nodes.len()];
    let mut scratch = GridNode(Vec::with_capacity(d));

    for ell in spec.index_set() {
        'corners: for mask in 0u64..(1u64 << d) {
            let levels: Vec<i64> = (0..d).map(|j| ell.levels()[j] as i64 - (mask >> j & 1) as i64).collect();
            if levels.iter().any(|&l| l < 0) {
                continue 'corners;
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let factors = levels
                .iter()
                .enumerate()
                .map(|(j, &l)| cache.get_or_factor(spec, j, l))
                .collect::<Result<Vec<_>>>()?;
            let axes: Vec<Vec<DyadicPoint>> = factors.iter().map(|f| f.nodes().to_vec()).collect();
            let mut slots = Vec::new();
            for_each_tensor_node(&axes, |n| {
                scratch.0.clear();
                scratch.0.extend_from_slice(n);
                slots.push(position[&scratch]);
            });
            let mut coeffs: Vec<f64> = slots.iter().map(|&i| values[i]).collect();
            let refs: Vec<&GramFactor1D> = factors.iter().map(|f| f.as_ref()).collect();
            kronecker_solve(&refs, &mut coeffs)?;
            for (slot, c) in slots.into_iter().zip(coeffs) {
                weights[slot] += sign * c;
            }
        }
    }
    drop(position);
    SparseInterpolant::from_parts(spec.clone(), nodes, weights)
}

/// Free-function form of [`SparseInterpolant::evaluate`].
pub fn evaluate(interp: &SparseInterpolant, x: &[f64]) -> Result<f64> {
    interp.evaluate(x)
}
