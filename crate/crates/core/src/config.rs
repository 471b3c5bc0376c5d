//! Flat `key = value` run configuration.
//!
//! The same text form is used for config files and for the `#` header
//! echoed into every output file, so any output can be re-run from its own
//! header. Per-dimension lists are comma separated and accept the block
//! shorthand `3/2*2,5/2*2` (value `*` repeat count); a single value is
//! broadcast to every dimension.

use std::fmt::Display;
use std::str::FromStr;

use crate::bounds::BoundParams;
use crate::error::{Error, Result};
use crate::experiments::{SweepConfig, TargetSpec, DEFAULT_COEFF_VARIANCE, DEFAULT_MC_SAMPLES, DEFAULT_TERMS};
use crate::grids::{Family, GridSpec, MAX_LEVEL};
use crate::kernels::{parse_fraction, Smoothness};

/// Ordered key/value pairs; setting an existing key replaces it in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            kv.parse_line(line).map_err(|_| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
        }
        Ok(kv)
    }

    /// Collects the `# key = value` lines of an output-file header.
    pub fn parse_header(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if rest.contains('=') {
                    kv.parse_line(rest.trim())?;
                }
            }
        }
        Ok(kv)
    }

    fn parse_line(&mut self, line: &str) -> Result<()> {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("no '=' in {line:?}")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("empty key in {line:?}")));
        }
        self.set(k, v.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let i = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(i).1)
    }

    /// Later values win.
    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.entries {
            self.set(k, v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `{prefix}key = value` line per entry.
    pub fn to_text(&self, prefix: &str) -> String {
        self.entries.iter().map(|(k, v)| format!("{prefix}{k} = {v}\n")).collect()
    }
}

/// Splits a comma list and expands `value*count` items.
pub fn expand_list(s: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::Parse(format!("empty item in list {s:?}")));
        }
        match item.rsplit_once('*') {
            Some((value, count)) => {
                let count: usize =
                    count.trim().parse().map_err(|_| Error::Parse(format!("bad repeat count in {item:?}")))?;
                if count == 0 {
                    return Err(Error::Parse(format!("zero repeat count in {item:?}")));
                }
                out.extend(std::iter::repeat_n(value.trim().to_string(), count));
            }
            None => out.push(item.to_string()),
        }
    }
    Ok(out)
}

/// Parses a per-dimension list, broadcasting a single value to `d` entries.
pub fn parse_list<T>(s: &str, d: Option<usize>, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>>
where
    T: Clone,
{
    let mut values = expand_list(s)?.iter().map(|v| item(v)).collect::<Result<Vec<T>>>()?;
    if let Some(d) = d {
        if values.len() == 1 && d > 1 {
            values = vec![values[0].clone(); d];
        }
        if values.len() != d {
            return Err(Error::Parameter(format!("list {s:?} has {} entries, expected {d}", values.len())));
        }
    }
    Ok(values)
}

fn join<T: Display>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn parse_scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parse(format!("{key}: cannot parse {v:?}")))
}

fn parse_real(v: &str) -> Result<f64> {
    parse_fraction(v.trim())
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("{key}: expected true or false, got {v:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Dasg,
    Lisg,
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dasg" => Ok(BoundKind::Dasg),
            "lisg" => Ok(BoundKind::Lisg),
            _ => Err(Error::Parse(format!("unknown bound {s:?}"))),
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundKind::Dasg => "dasg",
            BoundKind::Lisg => "lisg",
        })
    }
}

/// Every parameter any subcommand reads. Unset optional fields fall back to
/// values derived from the others.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub families: Vec<Family>,
    pub nu: Vec<Smoothness>,
    pub p: Vec<u32>,
    pub r: Vec<u32>,
    /// Explicit weights; otherwise `nu - alpha + 1`.
    pub omega: Option<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub sigma: Vec<f64>,
    pub level: u32,
    pub level_min: i64,
    pub level_max: i64,
    pub max_level: u32,
    pub target_nu: Option<Vec<Smoothness>>,
    pub target_p: Option<Vec<u32>>,
    pub terms: usize,
    pub coeff_variance: f64,
    pub seed: u64,
    pub realisations: Option<usize>,
    pub mc_samples: usize,
    pub n_cap: Option<usize>,
    pub full_scale: bool,
    pub bound: BoundKind,
    pub outer_constant: f64,
    pub dim_constants: Option<Vec<f64>>,
    pub gamma_constant: bool,
}

const KEYS: &[&str] = &[
    "d",
    "family",
    "nu",
    "p",
    "r",
    "omega",
    "alpha",
    "sigma",
    "level",
    "level_min",
    "level_max",
    "max_level",
    "target_nu",
    "target_p",
    "terms",
    "coeff_variance",
    "seed",
    "realisations",
    "mc_samples",
    "n_cap",
    "full_scale",
    "bound",
    "outer_constant",
    "dim_constants",
    "gamma_constant",
];

impl RunConfig {
    pub const KEYS: &'static [&'static str] = KEYS;

    /// Defaults for everything but `nu`.
    pub fn new(nu: Vec<Smoothness>) -> Self {
        let d = nu.len();
        Self {
            families: Family::ALL.to_vec(),
            nu,
            p: vec![0; d],
            r: vec![0; d],
            omega: None,
            alpha: vec![0.5; d],
            sigma: vec![1.0; d],
            level: 3,
            level_min: 0,
            level_max: 10,
            max_level: MAX_LEVEL,
            target_nu: None,
            target_p: None,
            terms: DEFAULT_TERMS,
            coeff_variance: DEFAULT_COEFF_VARIANCE,
            seed: 1,
            realisations: None,
            mc_samples: DEFAULT_MC_SAMPLES,
            n_cap: None,
            full_scale: false,
            bound: BoundKind::Dasg,
            outer_constant: 1.0,
            dim_constants: None,
            gamma_constant: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.nu.len()
    }

    /// Keys starting with `result.` are output annotations and ignored.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KEYS.contains(k) && !k.starts_with("result.")) {
            return Err(Error::Parse(format!("unknown key {k:?}")));
        }
        let declared: Option<usize> = kv.get("d").map(|v| parse_scalar("d", v)).transpose()?;
        let nu_text = kv.get("nu").ok_or_else(|| Error::Parameter("nu is required".into()))?;
        let nu = parse_list(nu_text, declared, |s| s.parse::<Smoothness>())?;
        let d = nu.len();
        if d == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        let list_u32 = |key: &str| kv.get(key).map(|v| parse_list(v, Some(d), |s| parse_scalar::<u32>(key, s))).transpose();
        let list_f64 = |key: &str| kv.get(key).map(|v| parse_list(v, Some(d), parse_real)).transpose();
        let scalar = |key: &str| kv.get(key).map(|v| v.to_string());

        let mut c = RunConfig::new(nu);
        if let Some(f) = kv.get("family") {
            c.families = parse_list(f, None, |s| s.parse::<Family>())?;
        }
        c.p = list_u32("p")?.unwrap_or(c.p);
        c.r = list_u32("r")?.unwrap_or(c.r);
        c.omega = list_f64("omega")?;
        c.alpha = list_f64("alpha")?.unwrap_or(c.alpha);
        c.sigma = list_f64("sigma")?.unwrap_or(c.sigma);
        c.dim_constants = list_f64("dim_constants")?;
        c.target_nu = kv.get("target_nu").map(|v| parse_list(v, Some(d), |s| s.parse::<Smoothness>())).transpose()?;
        c.target_p = list_u32("target_p")?;
        macro_rules! set {
            ($field:ident, $key:literal) => {
                if let Some(v) = scalar($key) {
                    c.$field = parse_scalar($key, &v)?;
                }
            };
        }
        set!(level, "level");
        set!(level_min, "level_min");
        set!(level_max, "level_max");
        set!(max_level, "max_level");
        set!(terms, "terms");
        set!(seed, "seed");
        set!(mc_samples, "mc_samples");
        set!(bound, "bound");
        if let Some(v) = scalar("coeff_variance") {
            c.coeff_variance = parse_real(&v)?;
        }
        if let Some(v) = scalar("outer_constant") {
            c.outer_constant = parse_real(&v)?;
        }
        if let Some(v) = scalar("realisations") {
            c.realisations = Some(parse_scalar("realisations", &v)?);
        }
        if let Some(v) = scalar("n_cap") {
            c.n_cap = Some(parse_scalar("n_cap", &v)?);
        }
        if let Some(v) = scalar("full_scale") {
            c.full_scale = parse_bool("full_scale", &v)?;
        }
        if let Some(v) = scalar("gamma_constant") {
            c.gamma_constant = parse_bool("gamma_constant", &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    /// Rebuilds the configuration from an output file's `#` header.
    pub fn from_header(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse_header(text)?)
    }

    fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::Parameter("no grid family selected".into()));
        }
        if self.level > MAX_LEVEL {
            return Err(Error::Parameter(format!("level {} exceeds {MAX_LEVEL}", self.level)));
        }
        if self.level_min > self.level_max {
            return Err(Error::Parameter("level_min exceeds level_max".into()));
        }
        if self.omega.is_none() && self.nu.contains(&Smoothness::Gaussian) {
            return Err(Error::Parameter("omega must be given explicitly for infinite nu".into()));
        }
        if self.mc_samples == 0 || self.realisations == Some(0) {
            return Err(Error::Parameter("need at least one sample and one realisation".into()));
        }
        Ok(())
    }

    /// Every field as `key = value`, in a fixed order; optional fields only
    /// when set. `from_kv(&c.to_kv()) == c`.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("d", self.dim().to_string());
        kv.set("family", join(&self.families));
        kv.set("nu", join(&self.nu));
        kv.set("p", join(&self.p));
        kv.set("r", join(&self.r));
        if let Some(w) = &self.omega {
            kv.set("omega", join(w));
        }
        kv.set("alpha", join(&self.alpha));
        kv.set("sigma", join(&self.sigma));
        kv.set("level", self.level.to_string());
        kv.set("level_min", self.level_min.to_string());
        kv.set("level_max", self.level_max.to_string());
        kv.set("max_level", self.max_level.to_string());
        if let Some(v) = &self.target_nu {
            kv.set("target_nu", join(v));
        }
        if let Some(v) = &self.target_p {
            kv.set("target_p", join(v));
        }
        kv.set("terms", self.terms.to_string());
        kv.set("coeff_variance", self.coeff_variance.to_string());
        kv.set("seed", self.seed.to_string());
        if let Some(v) = self.realisations {
            kv.set("realisations", v.to_string());
        }
        kv.set("mc_samples", self.mc_samples.to_string());
        if let Some(v) = self.n_cap {
            kv.set("n_cap", v.to_string());
        }
        kv.set("full_scale", self.full_scale.to_string());
        kv.set("bound", self.bound.to_string());
        kv.set("outer_constant", self.outer_constant.to_string());
        if let Some(v) = &self.dim_constants {
            kv.set("dim_constants", join(v));
        }
        kv.set("gamma_constant", self.gamma_constant.to_string());
        kv
    }

    pub fn omega(&self) -> Vec<f64> {
        self.omega.clone().unwrap_or_else(|| BoundParams::suggested_omega(&self.nu, &self.alpha))
    }

    /// Node cap: explicit, else `10^4` (or `10^5` at full scale).
    pub fn n_cap(&self) -> usize {
        self.n_cap.unwrap_or(if self.full_scale { 100_000 } else { 10_000 })
    }

    /// Realisations: explicit, else 3 (or 10 at full scale).
    pub fn realisations(&self) -> usize {
        self.realisations.unwrap_or(if self.full_scale { 10 } else { 3 })
    }

    pub fn spec(&self, family: Family, level: u32) -> Result<GridSpec> {
        GridSpec::for_family(family, self.nu.clone(), self.p.clone(), self.omega(), self.r.clone(), level)?
            .with_sigma(self.sigma.clone())
    }

    pub fn target(&self) -> TargetSpec {
        TargetSpec {
            nu: self.target_nu.clone().unwrap_or_else(|| self.nu.clone()),
            p: self.target_p.clone().unwrap_or_else(|| self.p.clone()),
            n_terms: self.terms,
            coeff_variance: self.coeff_variance,
        }
    }

    pub fn sweep(&self, family: Family, parallel: bool) -> Result<SweepConfig> {
        Ok(SweepConfig {
            spec: self.spec(family, 0)?,
            target: self.target(),
            realisations: self.realisations(),
            mc_samples: self.mc_samples,
            n_cap: self.n_cap(),
            max_level: self.max_level,
            seed: self.seed,
            parallel,
        })
    }

    /// Bound parameters at `level`, with the configured constants.
    pub fn bound_params(&self, level: i64) -> Result<BoundParams> {
        let d = self.dim();
        let mut params = BoundParams::new(self.nu.clone(), self.alpha.clone(), self.omega(), self.p.clone(), level);
        params.dim_constants = self.dim_constants.clone().unwrap_or_else(|| vec![1.0; d]);
        params.outer_constant =
            if self.gamma_constant { params.gamma_ratio_constant()? * self.outer_constant } else { self.outer_constant };
        Ok(params)
    }
}
