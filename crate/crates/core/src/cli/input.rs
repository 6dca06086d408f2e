//! Distribution strings, config files and their merge with flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};

/// Parses an inline spec such as `geometric:p=0.5`, or reads a JSON spec file.
///
/// Inline forms: `support01:p=P`, `uniform:m=M`, `geometric:p=P`,
/// `two-point:n=N,p=P`, `power:c=C[,K=K]`, `finite:P0,P1,...`.
pub fn parse_dist(text: &str) -> Result<DistributionSpec> {
    if let Some((kind, args)) = text.split_once(':') {
        if let Some(spec) = parse_inline(kind, args)? {
            return Ok(spec);
        }
    }
    read_dist_file(Path::new(text))
}

fn parse_inline(kind: &str, args: &str) -> Result<Option<DistributionSpec>> {
    let bad = |what: &str| Error::InvalidDistribution(format!("{kind}: {what}"));
    if kind == "finite" {
        let probs = args
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("expected comma-separated probabilities")))
            .collect::<Result<Vec<_>>>()?;
        return DistributionSpec::finite(probs).map(Some);
    }
    let mut kv = std::collections::BTreeMap::new();
    for pair in args.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = pair.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        let v: f64 = v.trim().parse().map_err(|_| bad("value is not a number"))?;
        kv.insert(k.trim().to_string(), v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("missing {k}")));
    let count = |k: &str| -> Result<usize> {
        let v = get(k)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(bad(&format!("{k} must be a nonnegative integer")));
        }
        Ok(v as usize)
    };
    let spec = match kind {
        "support01" => DistributionSpec::two_point(1, get("p")?)?,
        "uniform" => DistributionSpec::uniform(count("m")?)?,
        "geometric" => DistributionSpec::geometric(get("p")?)?,
        "two-point" => DistributionSpec::two_point(count("n")?, get("p")?)?,
        "power" => match kv.get("K") {
            Some(_) => DistributionSpec::power_tail(vec![1.0; count("K")?], get("c")?)?,
            None => DistributionSpec::power(get("c")?)?,
        },
        _ => return Ok(None),
    };
    Ok(Some(spec))
}

fn read_dist_file(path: &Path) -> Result<DistributionSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read spec {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn dist_field<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<DistributionSpec>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Spec(DistributionSpec),
    }
    match Raw::deserialize(d)? {
        Raw::Text(t) => parse_dist(&t).map(Some).map_err(serde::de::Error::custom),
        Raw::Spec(s) => Ok(Some(s)),
    }
}

/// Run parameters that may come from a config file. Flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// A spec object, or a string in `--dist` syntax.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "dist_field")]
    pub dist: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fills every unset field of `self` from `other`.
    pub fn or(self, other: RunConfig) -> RunConfig {
        RunConfig {
            dist: self.dist.or(other.dist),
            seed: self.seed.or(other.seed),
            trials: self.trials.or(other.trials),
            window: self.window.or(other.window),
            depth: self.depth.or(other.depth),
            arity: self.arity.or(other.arity),
            size: self.size.or(other.size),
            tol: self.tol.or(other.tol),
            workers: self.workers.or(other.workers),
        }
    }

    pub fn dist(&self) -> Result<&DistributionSpec> {
        self.dist
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("--dist is required".into()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-12)
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
        value.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
    }
}
