//! Text formats: serialized interpolants, sample files and sweep output.
//!
//! Headers are `# key = value` lines readable by [`RunConfig::from_header`].

use std::collections::HashMap;

use crate::config::{KeyValues, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::SweepOutcome;
use crate::grids::{Family, GridNode, GridSpec};
use crate::hexfloat::{format_hex, parse_hex};
use crate::tensor_solver::{assemble_from_samples, SparseInterpolant};

/// Header keys describing one grid; `r` is recovered as `kernel_p - grid_p`.
pub fn spec_to_kv(spec: &GridSpec) -> KeyValues {
    let join = |v: Vec<String>| v.join(",");
    let mut kv = KeyValues::new();
    kv.set("d", spec.dim().to_string());
    kv.set("family", spec.family().to_string());
    kv.set("nu", join(spec.nu().iter().map(ToString::to_string).collect()));
    kv.set("p", join(spec.kernel_p().iter().map(ToString::to_string).collect()));
    kv.set("r", join(spec.r().iter().map(ToString::to_string).collect()));
    kv.set("omega", join(spec.omega().iter().map(ToString::to_string).collect()));
    kv.set("sigma", join(spec.sigma().iter().map(ToString::to_string).collect()));
    kv.set("level", spec.level().to_string());
    kv
}

/// The grid described by a header; exactly one family must be named.
pub fn spec_from_kv(kv: &KeyValues) -> Result<GridSpec> {
    let config = RunConfig::from_kv(kv)?;
    let family = single_family(&config)?;
    let spec = GridSpec::new(
        family,
        config.nu.clone(),
        config.p.clone(),
        config.r.clone(),
        config.omega(),
        config.level,
    )?;
    spec.with_sigma(config.sigma.clone())
}

pub fn single_family(config: &RunConfig) -> Result<Family> {
    match config.families.as_slice() {
        [f] => Ok(*f),
        _ => Err(Error::Parameter(format!("exactly one family expected, got {}", config.families.len()))),
    }
}

/// Header plus one line per node: exact coordinates, then the weight as a
/// hex float. Reading it back reproduces every weight bit for bit.
pub fn interpolant_to_text(s: &SparseInterpolant) -> String {
    let mut out = spec_to_kv(s.spec()).to_text("# ");
    for (node, w) in s.nodes().iter().zip(s.weights()) {
        out.push_str(&format!("{node} {}\n", format_hex(*w)));
    }
    out
}

pub fn interpolant_from_text(text: &str) -> Result<SparseInterpolant> {
    let spec = spec_from_kv(&KeyValues::parse_header(text)?)?;
    let (nodes, weights): (Vec<GridNode>, Vec<f64>) = parse_node_lines(text, spec.dim(), parse_hex)?.into_iter().unzip();
    let expected = spec.nodes();
    if nodes != expected {
        return Err(Error::Parse(format!(
            "node list does not match the grid in the header ({} nodes, expected {})",
            nodes.len(),
            expected.len()
        )));
    }
    SparseInterpolant::from_parts(spec, nodes, weights)
}

/// Lines `c_1 ... c_d value` with exact dyadic coordinates; `#` comments
/// and blank lines are skipped.
pub fn parse_node_lines(text: &str, d: usize, value: impl Fn(&str) -> Result<f64>) -> Result<Vec<(GridNode, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d + 1 {
            return Err(Error::Parse(format!("line {}: expected {} fields, got {}", i + 1, d + 1, fields.len())));
        }
        let coords = fields[..d].iter().map(|f| f.parse()).collect::<Result<Vec<_>>>()?;
        out.push((GridNode(coords), value(fields[d])?));
    }
    Ok(out)
}

/// Sample values may be decimal or hex floats.
pub fn parse_value(s: &str) -> Result<f64> {
    if s.contains("0x") || s.contains("0X") {
        parse_hex(s)
    } else {
        s.parse().map_err(|_| Error::Parse(format!("not a number: {s:?}")))
    }
}

/// Fits the grid of `spec` to a sample file covering every node.
pub fn fit_from_samples(spec: &GridSpec, samples_text: &str) -> Result<SparseInterpolant> {
    let mut table: HashMap<GridNode, f64> = HashMap::new();
    for (node, v) in parse_node_lines(samples_text, spec.dim(), parse_value)? {
        if table.insert(node.clone(), v).is_some() {
            return Err(Error::Parse(format!("duplicate sample for node {node}")));
        }
    }
    assemble_from_samples(spec, |node| {
        table.get(node).copied().ok_or_else(|| Error::Evaluation(format!("no sample for node {node}")))
    })
}

/// Node list of `spec`, one node per line.
pub fn nodes_to_text(spec: &GridSpec) -> String {
    spec.nodes().iter().map(|n| format!("{n}\n")).collect()
}

/// Output file of one sweep: configuration echo restricted to `family`,
/// result annotations, then `error N` lines.
pub fn sweep_file_text(config: &RunConfig, family: Family, outcome: &SweepOutcome) -> String {
    let mut kv = RunConfig { families: vec![family], ..config.clone() }.to_kv();
    for (k, v) in outcome.summary() {
        kv.set(&k, v);
    }
    format!("{}{}", kv.to_text("# "), outcome.data_lines())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::level_sweep;
    use crate::kernels::Smoothness;
    use crate::tensor_solver::assemble;

    fn nu(v: &[f64]) -> Vec<Smoothness> {
        v.iter().map(|&x| Smoothness::Finite(x)).collect()
    }

    #[test]
    fn interpolant_round_trip_is_bit_exact() {
        let spec = GridSpec::dasg(nu(&[1.5, 2.5]), vec![1, 2], vec![2.0, 3.0], vec![0, 1], 6)
            .unwrap()
            .with_sigma(vec![1.0, 0.3])
            .unwrap();
        let s = assemble(&spec, |x| (x[0] * 7.0).sin() * x[1].exp()).unwrap();
        let text = interpolant_to_text(&s);
        let back = interpolant_from_text(&text).unwrap();
        assert_eq!(back.spec(), s.spec());
        assert_eq!(back.nodes(), s.nodes());
        let bits = |w: &[f64]| w.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.weights()), bits(s.weights()));
        assert_eq!(interpolant_to_text(&back), text);
    }

    #[test]
    fn rejects_inconsistent_interpolant_files() {
        let spec = GridSpec::isg(nu(&[0.5]), 2).unwrap();
        let text = interpolant_to_text(&assemble(&spec, |x| x[0]).unwrap());
        let dropped: String = text.lines().filter(|l| !l.starts_with("0/2^0")).map(|l| format!("{l}\n")).collect();
        assert!(interpolant_from_text(&dropped).is_err());
        assert!(interpolant_from_text(&text.replace("family = ISG", "family = ISG,ASG")).is_err());
        assert!(interpolant_from_text(&text.replace("0x", "1x")).is_err());
    }

    #[test]
    fn fit_from_sample_file() {
        let spec = GridSpec::lisg(nu(&[1.5, 1.5]), vec![1, 0], 4).unwrap();
        let f = |x: &[f64]| x[0] - 2.0 * x[1] * x[1];
        let mut samples = String::from("# samples\n");
        for n in spec.nodes().iter().rev() {
            samples.push_str(&format!("{n} {}\n", f(&n.coords())));
        }
        let fitted = fit_from_samples(&spec, &samples).unwrap();
        let direct = assemble(&spec, f).unwrap();
        assert_eq!(fitted.weights(), direct.weights());

        let missing: String = samples.lines().skip(2).map(|l| format!("{l}\n")).collect();
        assert!(fit_from_samples(&spec, &missing).is_err());
        let first = samples.lines().nth(1).unwrap();
        assert!(fit_from_samples(&spec, &format!("{samples}{first}\n")).is_err());
        assert!(fit_from_samples(&spec, "0/2^0 1.0\n").is_err());
        assert_eq!(parse_value("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse_value("-2.5e-3").unwrap(), -2.5e-3);
    }

    #[test]
    fn sweep_file_header_reparses() {
        let mut config = RunConfig::new(nu(&[1.5, 2.5]));
        config.p = vec![0, 1];
        config.n_cap = Some(200);
        let family = Family::Lisg;
        let outcome = level_sweep(&config.sweep(family, false).unwrap()).unwrap();
        let text = sweep_file_text(&config, family, &outcome);
        let back = RunConfig::from_header(&text).unwrap();
        assert_eq!(back, RunConfig { families: vec![family], ..config });
        let data = crate::experiments::parse_data_lines(&text).unwrap();
        assert_eq!(data.len(), outcome.records.len());
        assert!(text.contains("# result.termination = MAX_N\n"));
    }
}
