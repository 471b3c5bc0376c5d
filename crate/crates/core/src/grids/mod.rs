//! Dyadic point sets, multi-index sets and combination coefficients.

mod dyadic;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use dyadic::{DyadicPoint, MAX_LOG2};

use crate::error::{Error, Result};
use crate::kernels::{KernelParams1D, SeparableKernel, Smoothness};

/// Largest level accepted by [`GridSpec`]; point sets beyond it do not fit
/// the exact dyadic representation.
pub const MAX_LEVEL: u32 = 60;

/// The penalised one-dimensional point set `X_level^penalty`, sorted.
///
/// Empty for negative levels, `{0}` for `0 <= level <= penalty`, and the
/// `2^{m+1} - 1` points `n / 2^{m+1}` inside `(-1/2, 1/2)` for
/// `m = level - penalty >= 1`.
pub fn point_set_1d(level: i64, penalty: u32) -> Vec<DyadicPoint> {
    if level < 0 {
        return Vec::new();
    }
    let m = effective_level(level as u64, penalty);
    let half = (1i64 << m) - 1;
    (-half..=half).map(|n| DyadicPoint::new(n, m + 1)).collect()
}

/// Number of points in `X_level^penalty`.
pub fn point_count_1d(level: i64, penalty: u32) -> usize {
    if level < 0 {
        0
    } else {
        (1usize << (effective_level(level as u64, penalty) + 1)) - 1
    }
}

fn effective_level(level: u64, penalty: u32) -> u32 {
    let m = level.saturating_sub(penalty as u64);
    assert!(m < MAX_LOG2 as u64, "point-set level {m} too large");
    m as u32
}

/// Multi-index `l` of per-dimension levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&l| l as u64).sum()
    }

    pub fn weighted(&self, omega: &[f64]) -> f64 {
        self.0.iter().zip(omega).map(|(&l, &w)| l as f64 * w).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(")")
    }
}

/// A sparse-grid node: one exact dyadic coordinate per dimension.
///
/// Ordered lexicographically by coordinate value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridNode(pub Vec<DyadicPoint>);

impl GridNode {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.value()).collect()
    }

    pub fn negated(&self) -> GridNode {
        GridNode(self.0.iter().map(|p| DyadicPoint::new(-p.numerator(), p.log2())).collect())
    }
}

impl fmt::Display for GridNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for GridNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let coords = s.split_whitespace().map(str::parse).collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(Error::Parse("empty node".into()));
        }
        Ok(GridNode(coords))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Isg,
    Asg,
    Lisg,
    Dasg,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Isg, Family::Asg, Family::Lisg, Family::Dasg];

    pub fn name(self) -> &'static str {
        match self {
            Family::Isg => "ISG",
            Family::Asg => "ASG",
            Family::Lisg => "LISG",
            Family::Dasg => "DASG",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ISG" => Ok(Family::Isg),
            "ASG" => Ok(Family::Asg),
            "LISG" => Ok(Family::Lisg),
            "DASG" => Ok(Family::Dasg),
            _ => Err(Error::Parse(format!("unknown grid family {s:?}"))),
        }
    }
}

/// Full description of a sparse-grid interpolation scheme.
///
/// The kernel in dimension `j` has lengthscale `2^{kernel_p[j]}`; the point
/// sets are penalised by `grid_p[j] = max(kernel_p[j] - r[j], 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    family: Family,
    nu: Vec<Smoothness>,
    sigma: Vec<f64>,
    kernel_p: Vec<u32>,
    grid_p: Vec<u32>,
    omega: Vec<f64>,
    level: u32,
}

fn check_len(name: &str, d: usize, got: usize) -> Result<()> {
    if got == d {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} has length {got}, expected {d}")))
    }
}

impl GridSpec {
    /// General constructor; `r` lowers the point-set penalty below the
    /// kernel penalty.
    pub fn new(
        family: Family,
        nu: Vec<Smoothness>,
        kernel_p: Vec<u32>,
        r: Vec<u32>,
        omega: Vec<f64>,
        level: u32,
    ) -> Result<Self> {
        let d = nu.len();
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        check_len("p", d, kernel_p.len())?;
        check_len("r", d, r.len())?;
        check_len("omega", d, omega.len())?;
        if level > MAX_LEVEL {
            return Err(Error::Parameter(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Parameter(format!("weights must be positive, got {w}")));
        }
        if let Some(p) = kernel_p.iter().find(|&&p| p > 60) {
            return Err(Error::Parameter(format!("penalty {p} too large")));
        }
        let grid_p: Vec<u32> = kernel_p.iter().zip(&r).map(|(&p, &r)| p.saturating_sub(r)).collect();
        let unit_omega = omega.iter().all(|&w| w == 1.0);
        let zero_grid_p = grid_p.iter().all(|&p| p == 0);
        match family {
            Family::Isg if !(unit_omega && zero_grid_p) => {
                return Err(Error::Parameter("ISG requires unit weights and no point-set penalty".into()))
            }
            Family::Asg if !zero_grid_p => {
                return Err(Error::Parameter("ASG requires no point-set penalty".into()))
            }
            Family::Lisg if !unit_omega => {
                return Err(Error::Parameter("LISG requires unit weights".into()))
            }
            _ => {}
        }
        Ok(Self { family, sigma: vec![1.0; d], nu, kernel_p, grid_p, omega, level })
    }

    pub fn isg(nu: Vec<Smoothness>, level: u32) -> Result<Self> {
        let d = nu.len();
        Self::new(Family::Isg, nu, vec![0; d], vec![0; d], vec![1.0; d], level)
    }

    pub fn asg(nu: Vec<Smoothness>, omega: Vec<f64>, level: u32) -> Result<Self> {
        let d = nu.len();
        Self::new(Family::Asg, nu, vec![0; d], vec![0; d], omega, level)
    }

    pub fn lisg(nu: Vec<Smoothness>, p: Vec<u32>, level: u32) -> Result<Self> {
        let d = nu.len();
        Self::new(Family::Lisg, nu, p, vec![0; d], vec![1.0; d], level)
    }

    pub fn dasg(nu: Vec<Smoothness>, p: Vec<u32>, omega: Vec<f64>, r: Vec<u32>, level: u32) -> Result<Self> {
        Self::new(Family::Dasg, nu, p, r, omega, level)
    }

    /// The member of `family` built from a shared parameter set: ISG and ASG
    /// drop the penalties, ISG and LISG drop the weights, and only DASG uses
    /// the resolution shift `r`.
    pub fn for_family(
        family: Family,
        nu: Vec<Smoothness>,
        p: Vec<u32>,
        omega: Vec<f64>,
        r: Vec<u32>,
        level: u32,
    ) -> Result<Self> {
        let d = nu.len();
        check_len("p", d, p.len())?;
        check_len("r", d, r.len())?;
        check_len("omega", d, omega.len())?;
        match family {
            Family::Isg => Self::isg(nu, level),
            Family::Asg => Self::asg(nu, omega, level),
            Family::Lisg => Self::lisg(nu, p, level),
            Family::Dasg => Self::dasg(nu, p, omega, r, level),
        }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_len("sigma", self.dim(), sigma.len())?;
        if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Parameter(format!("scales must be positive, got {s}")));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn with_level(&self, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::Parameter(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        Ok(Self { level, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn nu(&self) -> &[Smoothness] {
        &self.nu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn kernel_p(&self) -> &[u32] {
        &self.kernel_p
    }

    pub fn grid_p(&self) -> &[u32] {
        &self.grid_p
    }

    /// `kernel_p - grid_p`, the tuning vector actually applied.
    pub fn r(&self) -> Vec<u32> {
        self.kernel_p.iter().zip(&self.grid_p).map(|(k, g)| k - g).collect()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn kernel_1d(&self, dim: usize) -> Result<KernelParams1D> {
        KernelParams1D::new(self.nu[dim], (self.kernel_p[dim] as f64).exp2(), self.sigma[dim])
    }

    pub fn kernel(&self) -> Result<SeparableKernel> {
        SeparableKernel::new((0..self.dim()).map(|j| self.kernel_1d(j)).collect::<Result<_>>()?)
    }

    fn fits(&self, cost: f64) -> bool {
        let l = self.level as f64;
        cost <= l + 1e-9 * l.max(1.0)
    }

    /// The weighted index set `{l : omega . l <= L}`, lexicographically
    /// sorted. With unit weights this is `{l : |l|_1 <= L}`.
    pub fn index_set(&self) -> Vec<MultiIndex> {
        self.enumerate(|_, _| true)
    }

    /// Indices with a nonzero tensor block in the combination form: those in
    /// the index set with every `l_j` either 0 or above `grid_p[j]`.
    pub fn active_set(&self) -> Vec<MultiIndex> {
        let p = &self.grid_p;
        self.enumerate(|j, l| l == 0 || l > p[j])
    }

    fn enumerate(&self, keep: impl Fn(usize, u32) -> bool) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.dim()];
        self.enumerate_rec(0, 0.0, &mut cur, &keep, &mut out);
        out
    }

    fn enumerate_rec(
        &self,
        j: usize,
        cost: f64,
        cur: &mut Vec<u32>,
        keep: &impl Fn(usize, u32) -> bool,
        out: &mut Vec<MultiIndex>,
    ) {
        if j == cur.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        let mut l = 0u32;
        loop {
            let c = cost + self.omega[j] * l as f64;
            if !self.fits(c) {
                break;
            }
            if keep(j, l) {
                cur[j] = l;
                self.enumerate_rec(j + 1, c, cur, keep, out);
            }
            l += 1;
        }
        cur[j] = 0;
    }

    pub fn contains(&self, ell: &MultiIndex) -> bool {
        ell.dim() == self.dim() && self.fits(ell.weighted(&self.omega))
    }

    pub fn is_active(&self, ell: &MultiIndex) -> bool {
        self.contains(ell) && ell.0.iter().zip(&self.grid_p).all(|(&l, &p)| l == 0 || l > p)
    }

    /// Integer coefficient of the tensor interpolant on block `ell` in the
    /// combination form of the sparse-grid operator.
    ///
    /// Sums `(-1)^{|u|}` over subsets `u` for which stepping every `j` in
    /// `u` to the next distinct point set stays inside the index set. From
    /// `l_j > 0` that step is `l_j + 1`, from `l_j = 0` it is `grid_p[j] + 1`,
    /// so the added cost is `omega_j (1 + [l_j = 0] grid_p[j])`.
    pub fn combination_coefficient(&self, ell: &MultiIndex) -> Result<i64> {
        if !self.is_active(ell) {
            return Err(Error::Domain(format!("multi-index {ell} is not in the active set")));
        }
        let steps: Vec<f64> = ell
            .0
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                let jump = if l == 0 { 1 + self.grid_p[j] } else { 1 };
                self.omega[j] * jump as f64
            })
            .collect();
        Ok(self.signed_subsets(&steps, 0, ell.weighted(&self.omega), 0))
    }

    // Subsets are pruned as soon as they leave the index set; every step is
    // positive so no pruned branch could re-enter it.
    fn signed_subsets(&self, steps: &[f64], j: usize, cost: f64, size: u32) -> i64 {
        if j == steps.len() {
            return if size % 2 == 0 { 1 } else { -1 };
        }
        let mut acc = self.signed_subsets(steps, j + 1, cost, size);
        let with = cost + steps[j];
        if self.fits(with) {
            acc += self.signed_subsets(steps, j + 1, with, size + 1);
        }
        acc
    }

    /// Active indices with nonzero coefficient, in lexicographic order.
    pub fn contributing_blocks(&self) -> Vec<(MultiIndex, i64)> {
        self.active_set()
            .into_iter()
            .filter_map(|ell| {
                let b = self.combination_coefficient(&ell).expect("active index");
                (b != 0).then_some((ell, b))
            })
            .collect()
    }

    /// The 1D point sets of block `ell`.
    pub fn block_axes(&self, ell: &MultiIndex) -> Vec<Vec<DyadicPoint>> {
        ell.0.iter().zip(&self.grid_p).map(|(&l, &p)| point_set_1d(l as i64, p)).collect()
    }

    /// Distinct nodes of the sparse grid, sorted.
    pub fn nodes(&self) -> Vec<GridNode> {
        let mut set = BTreeSet::new();
        for ell in self.active_set() {
            for_each_tensor_node(&self.block_axes(&ell), |node| {
                set.insert(GridNode(node.to_vec()));
            });
        }
        set.into_iter().collect()
    }

    /// `|nodes()|` without building the node set: each active index adds
    /// the `prod_j 2^{l_j - grid_p[j]}` points that first appear in its block
    /// (one point for `l_j = 0`). Saturates instead of overflowing.
    pub fn node_count(&self) -> usize {
        self.active_set()
            .iter()
            .map(|ell| {
                ell.0
                    .iter()
                    .zip(&self.grid_p)
                    .map(|(&l, &p)| if l == 0 { 1usize } else { 1usize << (l - p) })
                    .fold(1usize, usize::saturating_mul)
            })
            .fold(0usize, usize::saturating_add)
    }
}

/// Calls `f` on every point of the tensor product of `axes`, last axis
/// fastest.
pub fn for_each_tensor_node(axes: &[Vec<DyadicPoint>], mut f: impl FnMut(&[DyadicPoint])) {
    if axes.iter().any(Vec::is_empty) {
        return;
    }
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut node: Vec<DyadicPoint> = axes.iter().map(|a| a[0]).collect();
    loop {
        f(&node);
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                node[j] = axes[j][idx[j]];
                break;
            }
            idx[j] = 0;
            node[j] = axes[j][0];
        }
    }
}
