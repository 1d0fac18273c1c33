use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use gols_core::probe::SamplingPolicy;

use crate::CliError;

/// Rows per evaluation in a scan group: a count or the whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanBatch {
    Rows(usize),
    Full,
}

impl fmt::Display for ScanBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScanBatch::Rows(n) => write!(f, "{n}"),
            ScanBatch::Full => f.write_str("full"),
        }
    }
}

impl FromStr for ScanBatch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "full" | "all" => Ok(ScanBatch::Full),
            n => match n.parse::<usize>() {
                Ok(0) | Err(_) => Err(format!("scan batch size '{s}' is neither a positive count nor 'full'")),
                Ok(v) => Ok(ScanBatch::Rows(v)),
            },
        }
    }
}

impl<'de> Deserialize<'de> for ScanBatch {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => n.to_string().parse().map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub batch_sizes: Vec<ScanBatch>,
    pub repeats: usize,
    pub start: f64,
    pub step: f64,
    pub steps: usize,
    /// The descent direction is rescaled so the full-batch sign change of
    /// `F'` falls at this step.
    pub target: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            batch_sizes: vec![ScanBatch::Rows(10), ScanBatch::Rows(30), ScanBatch::Rows(50), ScanBatch::Full],
            repeats: 100,
            start: 0.0,
            step: 0.1,
            steps: 100,
            target: 2.5,
        }
    }
}

/// Everything one experiment needs. Loaded from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// `iris`, `blobs`, `noisy-quadratic`, or a CSV path.
    pub dataset: String,
    /// Hidden layer widths, one or two entries.
    pub hidden: Vec<usize>,
    pub resolvers: Vec<String>,
    pub repeats: usize,
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub policy: String,
    pub out: PathBuf,
    pub scan: ScanSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset: "iris".into(),
            hidden: vec![3],
            resolvers: ["gs", "arls", "bgols", "igols"].map(String::from).to_vec(),
            repeats: 10,
            iterations: 3000,
            batch_size: 10,
            seed: 0,
            policy: "resample".into(),
            out: PathBuf::from("out"),
            scan: ScanSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn sampling_policy(&self) -> Result<SamplingPolicy, CliError> {
        self.policy.parse().map_err(CliError::Usage)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: &str| Err(CliError::Usage(m.into()));
        if self.repeats == 0 {
            return usage("repeats must be at least 1");
        }
        if self.resolvers.is_empty() {
            return usage("at least one resolver is required");
        }
        if self.iterations == 0 || self.batch_size == 0 {
            return usage("iterations and batch size must be at least 1");
        }
        if !(1..=2).contains(&self.hidden.len()) || self.hidden.contains(&0) {
            return usage("architecture needs one or two hidden layers of nonzero width");
        }
        if self.scan.repeats == 0 || self.scan.batch_sizes.is_empty() {
            return usage("scan needs at least one repeat and one batch size");
        }
        if !(self.scan.step > 0.0 && self.scan.steps >= 2 && self.scan.target > 0.0) {
            return usage("scan needs step > 0, steps >= 2 and target > 0");
        }
        let registry = gols_core::linesearch::ResolverRegistry::with_builtins();
        for r in &self.resolvers {
            registry.create(r).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.sampling_policy()?;
        Ok(())
    }
}

/// Parses `3` or `3,3` into hidden widths.
pub fn parse_arch(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|w| w.trim().parse::<usize>().map_err(|_| format!("bad layer width '{w}' in '{s}'")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_with_defaults() {
        let spec = ExperimentSpec::from_toml(
            r#"
            dataset = "blobs"
            hidden = [3, 3]
            resolvers = ["igols", "fixed:0.1"]
            [scan]
            batch_sizes = [1, "full"]
            "#,
        )
        .unwrap();
        assert_eq!(spec.dataset, "blobs");
        assert_eq!(spec.hidden, [3, 3]);
        assert_eq!(spec.repeats, 10);
        assert_eq!(spec.scan.batch_sizes, [ScanBatch::Rows(1), ScanBatch::Full]);
        assert_eq!(spec.scan.repeats, 100);
        spec.validate().unwrap();
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_toml("repeatz = 3").is_err());
        assert!(ExperimentSpec::from_toml("[scan]\nbatch_sizes = [0]").is_err());
        for bad in [
            ExperimentSpec { repeats: 0, ..Default::default() },
            ExperimentSpec { resolvers: vec![], ..Default::default() },
            ExperimentSpec { resolvers: vec!["newton".into()], ..Default::default() },
            ExperimentSpec { hidden: vec![3, 3, 3], ..Default::default() },
            ExperimentSpec { policy: "sometimes".into(), ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(CliError::Usage(_))), "{bad:?}");
        }
    }

    #[test]
    fn arch_flag() {
        assert_eq!(parse_arch("5").unwrap(), [5]);
        assert_eq!(parse_arch("4, 4").unwrap(), [4, 4]);
        assert!(parse_arch("4,x").is_err());
    }
}
