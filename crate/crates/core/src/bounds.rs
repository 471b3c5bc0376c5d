//! Error-bound expressions as numerical diagnostics.
//!
//! Every multiplicative constant defaults to one, so the values describe the
//! shape of the decay in `L` and `p`, not certified errors.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::kernels::Smoothness;

/// Subset enumeration is exponential in the dimension.
pub const MAX_BOUND_DIM: usize = 20;

fn level_tolerance(level: f64) -> f64 {
    1e-9 * level.abs().max(1.0)
}

fn check_exponents(c: &[f64]) -> Result<()> {
    match c.iter().find(|&&cj| !(cj > 0.0 && cj.is_finite())) {
        Some(cj) => Err(Error::DivergentSeries(format!("exponent {cj} must be positive and finite"))),
        None => Ok(()),
    }
}

/// `sum_{l in N_0^d, omega.l > L} 2^{-c.l}`, zero for `L <= 0`.
///
/// The sum is accumulated from positive terms only: each coordinate is
/// enumerated while the remaining budget is nonnegative and the rest of its
/// range is a closed-form geometric tail. No cancellation, so the result is
/// accurate to a few ulps even when it is tiny compared to the full series.
pub fn epsilon_aniso(c: &[f64], omega: &[f64], level: f64) -> Result<f64> {
    if c.len() != omega.len() {
        return Err(Error::shape(c.len(), omega.len()));
    }
    check_exponents(c)?;
    if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::Parameter(format!("weights must be positive, got {w}")));
    }
    if level.is_nan() {
        return Err(Error::Parameter("level is NaN".into()));
    }
    if level <= 0.0 || c.is_empty() {
        return Ok(0.0);
    }
    let ratio: Vec<f64> = c.iter().map(|&cj| (-cj).exp2()).collect();
    // suffix[j] = prod_{i >= j} 1 / (1 - 2^{-c_i})
    let mut suffix = vec![1.0; c.len() + 1];
    for j in (0..c.len()).rev() {
        suffix[j] = suffix[j + 1] / (1.0 - ratio[j]);
    }
    Ok(tail(&ratio, omega, &suffix, 0, level + level_tolerance(level)))
}

fn tail(ratio: &[f64], omega: &[f64], suffix: &[f64], j: usize, budget: f64) -> f64 {
    if budget < 0.0 {
        return suffix[j];
    }
    // First level of coordinate j that exhausts the budget on its own.
    let m = (budget / omega[j]).floor() as i32 + 1;
    let geometric = ratio[j].powi(m) / (1.0 - ratio[j]);
    if j + 1 == ratio.len() {
        return geometric;
    }
    let mut acc = geometric * suffix[j + 1];
    let mut weight = 1.0;
    for l in 0..m {
        acc += weight * tail(ratio, omega, suffix, j + 1, budget - omega[j] * f64::from(l));
        weight *= ratio[j];
    }
    acc
}

/// Isotropic variant: unit weights and one exponent for all `d` dimensions.
pub fn epsilon_iso(c: f64, level: f64, d: usize) -> Result<f64> {
    epsilon_aniso(&vec![c; d], &vec![1.0; d], level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub nu: Vec<Smoothness>,
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
    pub p: Vec<u32>,
    pub level: i64,
    /// Overall factor in front of the sum.
    pub outer_constant: f64,
    /// Per-dimension factors; a term over subset `u` carries their product over `u`.
    pub dim_constants: Vec<f64>,
}

impl BoundParams {
    /// Unit constants.
    pub fn new(nu: Vec<Smoothness>, alpha: Vec<f64>, omega: Vec<f64>, p: Vec<u32>, level: i64) -> Self {
        let d = nu.len();
        Self { nu, alpha, omega, p, level, outer_constant: 1.0, dim_constants: vec![1.0; d] }
    }

    /// Weights `omega_j = nu_j - alpha_j + 1`.
    pub fn suggested_omega(nu: &[Smoothness], alpha: &[f64]) -> Vec<f64> {
        nu.iter().zip(alpha).map(|(n, a)| n.value() - a + 1.0).collect()
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// Decay exponents `nu_j - alpha_j`, after validating all fields.
    pub fn exponents(&self) -> Result<Vec<f64>> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        for (name, len) in [
            ("alpha", self.alpha.len()),
            ("omega", self.omega.len()),
            ("p", self.p.len()),
            ("constants", self.dim_constants.len()),
        ] {
            if len != d {
                return Err(Error::Parameter(format!("{name} has length {len}, expected {d}")));
            }
        }
        if let Some(w) = self.omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Parameter(format!("weights must be positive, got {w}")));
        }
        let constants = std::iter::once(&self.outer_constant).chain(&self.dim_constants);
        if let Some(k) = constants.into_iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::Parameter(format!("constants must be nonnegative, got {k}")));
        }
        let mut c = Vec::with_capacity(d);
        for (nu, &alpha) in self.nu.iter().zip(&self.alpha) {
            let Smoothness::Finite(nu) = *nu else {
                return Err(Error::Parameter("bounds need finite smoothness".into()));
            };
            if !(alpha >= 0.5 && alpha.is_finite()) {
                return Err(Error::Hypothesis(format!("alpha = {alpha} is below 1/2")));
            }
            if alpha >= nu {
                return Err(Error::Hypothesis(format!("alpha = {alpha} is not below nu = {nu}")));
            }
            c.push(nu - alpha);
        }
        Ok(c)
    }

    /// `prod_j sqrt(Gamma(alpha_j + 1/2) Gamma(nu_j) / (Gamma(alpha_j) Gamma(nu_j + 1/2)))`,
    /// an optional data-driven choice for `outer_constant`.
    pub fn gamma_ratio_constant(&self) -> Result<f64> {
        self.exponents()?;
        let log: f64 = self
            .nu
            .iter()
            .zip(&self.alpha)
            .map(|(nu, &a)| {
                let n = nu.value();
                0.5 * (ln_gamma(a + 0.5) + ln_gamma(n) - ln_gamma(a) - ln_gamma(n + 0.5))
            })
            .sum();
        Ok(log.exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerm {
    /// Zero-based dimensions in the subset, ascending.
    pub subset: Vec<usize>,
    pub shifted_level: i64,
    /// Everything multiplying the tail sum: penalty decay and constants.
    pub prefactor: f64,
    pub epsilon: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub terms: Vec<BoundTerm>,
}

/// Sum over nonempty subsets `u` of
/// `2^{-sum_{j in u} c_j (p_j + 1)} * eps_u(L - |p_u| - |u|)`.
pub fn dasg_bound(params: &BoundParams) -> Result<BoundValue> {
    let c = params.exponents()?;
    let d = c.len();
    if d > MAX_BOUND_DIM {
        return Err(Error::Parameter(format!("dimension {d} exceeds the subset limit {MAX_BOUND_DIM}")));
    }
    let mut terms = Vec::with_capacity((1usize << d) - 1);
    for mask in 1u32..(1u32 << d) {
        let subset: Vec<usize> = (0..d).filter(|j| mask >> j & 1 == 1).collect();
        let penalty: i64 = subset.iter().map(|&j| i64::from(params.p[j])).sum();
        let shifted_level = params.level - penalty - subset.len() as i64;
        let decay: f64 = subset.iter().map(|&j| c[j] * (f64::from(params.p[j]) + 1.0)).sum();
        let constants: f64 = subset.iter().map(|&j| params.dim_constants[j]).product();
        let prefactor = params.outer_constant * constants * (-decay).exp2();
        let cu: Vec<f64> = subset.iter().map(|&j| c[j]).collect();
        let wu: Vec<f64> = subset.iter().map(|&j| params.omega[j]).collect();
        let epsilon = epsilon_aniso(&cu, &wu, shifted_level as f64)?;
        terms.push(BoundTerm { subset, shifted_level, prefactor, epsilon, value: prefactor * epsilon });
    }
    let value = terms.iter().map(|t| t.value).sum();
    Ok(BoundValue { value, terms })
}

/// Unit-weight bound; requires a common decay exponent across dimensions.
/// The supplied `omega` is ignored.
pub fn lisg_bound(params: &BoundParams) -> Result<BoundValue> {
    let c = params.exponents()?;
    let c0 = c[0];
    if let Some(cj) = c.iter().find(|&&cj| (cj - c0).abs() > 1e-12 * c0.max(1.0)) {
        return Err(Error::Hypothesis(format!("nu - alpha must be constant, got {c0} and {cj}")));
    }
    let unit = BoundParams { omega: vec![1.0; c.len()], ..params.clone() };
    dasg_bound(&unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct enumeration of the complement over a box large enough that
    /// the truncated tail is below 1e-14 of the smallest possible answer.
    fn brute_force(c: &[f64], omega: &[f64], level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let tol = 1e-9 * level.max(1.0);
        let cut: Vec<u32> =
            c.iter().zip(omega).map(|(&cj, &wj)| (level / wj).ceil() as u32 + 2 + (48.0 / cj).ceil() as u32).collect();
        let d = c.len();
        let mut idx = vec![0u32; d];
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        loop {
            let weighted: f64 = idx.iter().zip(omega).map(|(&l, &w)| f64::from(l) * w).sum();
            if weighted > level + tol {
                let term = (-idx.iter().zip(c).map(|(&l, &cj)| f64::from(l) * cj).sum::<f64>()).exp2();
                let t = sum + term;
                comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
                sum = t;
            }
            let mut j = 0;
            loop {
                if j == d {
                    return sum + comp;
                }
                idx[j] += 1;
                if idx[j] <= cut[j] {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    fn f(v: &[f64]) -> Vec<Smoothness> {
        v.iter().map(|&x| Smoothness::Finite(x)).collect()
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_aniso(&[1.0], &[1.0], 2.0).unwrap(), 0.25);
        assert_eq!(epsilon_aniso(&[1.0, 1.0], &[1.0, 1.0], 1.0).unwrap(), 2.0);
        for d in 1..4 {
            assert_eq!(epsilon_aniso(&vec![0.7; d], &vec![1.3; d], 0.0).unwrap(), 0.0);
            assert_eq!(epsilon_aniso(&vec![0.7; d], &vec![1.3; d], -2.0).unwrap(), 0.0);
        }
        assert_eq!(epsilon_iso(1.0, 3.0, 1).unwrap(), 0.125);
        assert_eq!(epsilon_iso(1.3, 4.0, 3).unwrap(), epsilon_aniso(&[1.3; 3], &[1.0; 3], 4.0).unwrap());
    }

    #[test]
    fn full_series_minus_simplex() {
        // Independent route for moderate L, where cancellation is harmless.
        let (c, w): ([f64; 2], [f64; 2]) = ([0.8, 1.7], [1.0, 2.5]);
        for level in 1..6 {
            let l = f64::from(level);
            let full = 1.0 / ((1.0 - (-c[0]).exp2()) * (1.0 - (-c[1]).exp2()));
            let mut inside = 0.0;
            for a in 0..=level {
                for b in 0..=level {
                    if f64::from(a) * w[0] + f64::from(b) * w[1] <= l {
                        inside += (-(c[0] * f64::from(a) + c[1] * f64::from(b))).exp2();
                    }
                }
            }
            let e = epsilon_aniso(&c, &w, l).unwrap();
            assert!((e - (full - inside)).abs() < 1e-13 * full);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(epsilon_aniso(&[0.0], &[1.0], 3.0), Err(Error::DivergentSeries(_))));
        assert!(matches!(epsilon_aniso(&[-1.0], &[1.0], 3.0), Err(Error::DivergentSeries(_))));
        assert!(epsilon_aniso(&[1.0], &[0.0], 3.0).is_err());
        assert!(epsilon_aniso(&[1.0, 1.0], &[1.0], 3.0).is_err());
        let p = BoundParams::new(f(&[1.5]), vec![1.5], vec![1.0], vec![0], 3);
        assert!(matches!(dasg_bound(&p), Err(Error::Hypothesis(_))));
        let p = BoundParams::new(f(&[1.5]), vec![0.25], vec![1.0], vec![0], 3);
        assert!(matches!(dasg_bound(&p), Err(Error::Hypothesis(_))));
        let p = BoundParams::new(vec![Smoothness::Gaussian], vec![0.5], vec![1.0], vec![0], 3);
        assert!(dasg_bound(&p).is_err());
        let d = MAX_BOUND_DIM + 1;
        let p = BoundParams::new(f(&vec![1.5; d]), vec![0.5; d], vec![1.0; d], vec![0; d], 3);
        assert!(dasg_bound(&p).is_err());
        let p = BoundParams::new(f(&[1.5, 2.5]), vec![0.5, 0.5], vec![1.0; 2], vec![0; 2], 3);
        assert!(matches!(lisg_bound(&p), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn single_dimension_bound() {
        // c = 1, p = 0: one subset, 2^{-1} eps(L - 1).
        let p = BoundParams::new(f(&[1.5]), vec![0.5], vec![1.0], vec![0], 3);
        let b = dasg_bound(&p).unwrap();
        assert_eq!(b.terms.len(), 1);
        assert_eq!(b.value, 0.125);
        assert_eq!(lisg_bound(&p).unwrap().value, 0.125);
        for level in [-3, 0, 1] {
            let p = BoundParams { level, ..p.clone() };
            assert_eq!(dasg_bound(&p).unwrap().value, 0.0);
        }
    }

    #[test]
    fn two_dimensional_hand_enumeration() {
        // c = (1,1), p = (0,1), unit weights, L = 4.
        //   u = {0}:   2^{-1} eps_1(3) = 1/2 * 1/8
        //   u = {1}:   2^{-2} eps_1(2) = 1/4 * 1/4
        //   u = {0,1}: 2^{-3} eps_2(1) = 1/8 * 2
        let p = BoundParams::new(f(&[1.5, 1.5]), vec![0.5, 0.5], vec![1.0, 1.0], vec![0, 1], 4);
        let b = dasg_bound(&p).unwrap();
        let expect = [(vec![0], 3, 0.5, 0.125), (vec![1], 2, 0.25, 0.25), (vec![0, 1], 1, 0.125, 2.0)];
        for (t, (u, lvl, pre, eps)) in b.terms.iter().zip(expect) {
            assert_eq!((&t.subset, t.shifted_level, t.prefactor, t.epsilon), (&u, lvl, pre, eps));
        }
        assert_eq!(b.value, 0.0625 + 0.0625 + 0.25);
        assert_eq!(lisg_bound(&p).unwrap(), b);
    }

    #[test]
    fn vanishes_below_every_shift() {
        let p = BoundParams::new(f(&[2.5, 1.5, 3.5]), vec![0.5, 1.0, 0.5], vec![2.0, 1.5, 3.0], vec![2, 0, 1], 1);
        assert_eq!(dasg_bound(&p).unwrap().value, 0.0);
        let p = BoundParams { level: 2, ..p };
        assert!(dasg_bound(&p).unwrap().value > 0.0);
    }

    #[test]
    fn constants_scale_terms() {
        let base = BoundParams::new(f(&[2.5, 1.5]), vec![0.5, 0.5], vec![3.0, 2.0], vec![1, 0], 9);
        let scaled = BoundParams { outer_constant: 3.0, dim_constants: vec![2.0, 5.0], ..base.clone() };
        let (a, b) = (dasg_bound(&base).unwrap(), dasg_bound(&scaled).unwrap());
        let factors = [6.0, 15.0, 30.0];
        for ((ta, tb), k) in a.terms.iter().zip(&b.terms).zip(factors) {
            assert!((tb.value - k * ta.value).abs() <= 1e-15 * tb.value);
        }
    }

    #[test]
    fn gamma_ratio_constant_values() {
        // alpha = 1/2, nu = 3/2: sqrt(Gamma(1) Gamma(3/2) / (Gamma(1/2) Gamma(2))) = sqrt(1/2).
        let p = BoundParams::new(f(&[1.5]), vec![0.5], vec![1.0], vec![0], 3);
        assert!((p.gamma_ratio_constant().unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        let p = BoundParams::new(f(&[1.5, 1.5]), vec![0.5, 0.5], vec![1.0; 2], vec![0; 2], 3);
        assert!((p.gamma_ratio_constant().unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn penalty_monotonicity_needs_weight_at_least_one() {
        // With omega < 1 a unit drop in level costs more than the 2^{-c}
        // gained from the penalty factor.
        let base = BoundParams::new(f(&[1.5]), vec![0.5], vec![0.5], vec![0], 3);
        let raised = BoundParams { p: vec![1], ..base.clone() };
        let (a, b) = (dasg_bound(&base).unwrap().value, dasg_bound(&raised).unwrap().value);
        assert!((b / a - 2.0).abs() < 1e-14);
        let base = BoundParams { omega: vec![1.0], ..base };
        let raised = BoundParams { omega: vec![1.0], ..raised };
        assert!(dasg_bound(&raised).unwrap().value <= dasg_bound(&base).unwrap().value);
    }

    #[test]
    fn suggested_weights() {
        assert_eq!(BoundParams::suggested_omega(&f(&[1.5, 2.5]), &[0.5, 0.5]), vec![2.0, 3.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn matches_truncated_enumeration(
            cw in prop::collection::vec((0.5f64..3.0, 0.5f64..3.0), 1..=3),
            level in 0u32..=10,
        ) {
            let (c, w): (Vec<f64>, Vec<f64>) = cw.into_iter().unzip();
            let fast = epsilon_aniso(&c, &w, f64::from(level)).unwrap();
            let slow = brute_force(&c, &w, f64::from(level));
            prop_assert!((fast - slow).abs() <= 1e-12 * slow, "{fast} vs {slow}");
        }

        #[test]
        fn bound_monotone(
            params in prop::collection::vec((1usize..4, 0.5f64..1.5, 0.5f64..3.0, 0u32..3), 1..=3),
            level in 0i64..16,
            j in 0usize..3,
        ) {
            let nus = [1.5, 2.5, 3.5];
            let nu: Vec<Smoothness> = params.iter().map(|t| Smoothness::Finite(nus[t.0 - 1])).collect();
            let alpha: Vec<f64> = params.iter().map(|t| t.1.min(nus[t.0 - 1] - 0.25)).collect();
            let omega: Vec<f64> = params.iter().map(|t| t.2).collect();
            let p: Vec<u32> = params.iter().map(|t| t.3).collect();
            let j = j % nu.len();
            let base = BoundParams::new(nu.clone(), alpha.clone(), omega, p.clone(), level);
            let v = dasg_bound(&base).unwrap();
            prop_assert!(v.value >= 0.0);
            prop_assert_eq!(v.value, v.terms.iter().map(|t| t.value).sum::<f64>());

            // Terms are zero below their first positive shifted level, so
            // monotonicity in L only holds once every term is switched on.
            let up = dasg_bound(&BoundParams { level: level + 1, ..base.clone() }).unwrap();
            if v.terms.iter().all(|t| t.shifted_level >= 1) {
                prop_assert!(up.value <= v.value * (1.0 + 1e-14));
            }

            let mut p2 = p.clone();
            p2[j] += 1;
            let pen = dasg_bound(&BoundParams { p: p2, ..base.clone() }).unwrap();
            if base.omega[j] >= 1.0 {
                prop_assert!(pen.value <= v.value * (1.0 + 1e-14));
            }
            let c = base.exponents().unwrap();
            for (a, b) in v.terms.iter().zip(&pen.terms) {
                if a.subset.contains(&j) {
                    let ratio = b.prefactor / a.prefactor;
                    prop_assert!((ratio - (-c[j]).exp2()).abs() <= 1e-14);
                    prop_assert_eq!(b.shifted_level, a.shifted_level - 1);
                } else {
                    prop_assert_eq!(a, b);
                }
            }

            // Lowering alpha raises the exponent.
            let mut alpha2 = alpha;
            alpha2[j] = 0.5;
            if alpha2[j] < base.alpha[j] {
                let smoother = dasg_bound(&BoundParams { alpha: alpha2, ..base.clone() }).unwrap();
                prop_assert!(smoother.value <= v.value * (1.0 + 1e-14));
            }
        }

        #[test]
        fn epsilon_monotone_in_level(c in 0.5f64..3.0, d in 1usize..4, level in 1u32..15) {
            let a = epsilon_iso(c, f64::from(level), d).unwrap();
            let b = epsilon_iso(c, f64::from(level + 1), d).unwrap();
            prop_assert!(b <= a);
        }
    }
}
