//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error, missing keys take their defaults. List values are comma separated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::builder::TargetSignature;
use crate::error::{Error, Result};
use crate::estimates::{ConstantOverrides, LambdaPolicy};
use crate::geometry::SourceSignature;
use crate::harmonic::ConjugatePairConfig;
use crate::scalar::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source_m: Vec<usize>,
    pub source_alpha: Vec<u32>,
    pub target_n: Vec<usize>,
    pub target_beta: Vec<u32>,
    pub target_p: usize,
    /// Candidate samples the net is selected from.
    pub net_density: usize,
    pub seed: u64,
    pub eps0: f64,
    pub iota: f64,
    pub steps: usize,
    pub probes: usize,
    pub shell_probes: usize,
    pub calibration_samples: usize,
    pub audit_samples: usize,
    pub audit_eta: f64,
    pub boundary_tol: f64,
    pub root_tol: f64,
    pub lambda_policy: LambdaPolicy,
    pub out_dir: PathBuf,
    pub override_a1: Option<f64>,
    pub override_a2: Option<f64>,
    pub override_b1: Option<f64>,
    pub override_b2: Option<f64>,
    pub trace_theta0: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            source_m: vec![1, 1],
            source_alpha: vec![2],
            target_n: vec![2, 2, 2],
            target_beta: vec![2, 2],
            target_p: 3,
            net_density: 2048,
            seed: 1,
            eps0: 0.01,
            iota: 1e-3,
            steps: 20,
            probes: 4096,
            shell_probes: 1024,
            calibration_samples: 1_000_000,
            audit_samples: 10_000,
            audit_eta: 0.01,
            boundary_tol: 1e-10,
            root_tol: 1e-12,
            lambda_policy: LambdaPolicy::Widen,
            out_dir: PathBuf::from("out"),
            override_a1: None,
            override_a2: None,
            override_b1: None,
            override_b2: None,
            trace_theta0: 0.0,
        }
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list<V: FromStr>(key: &str, value: &str) -> Result<Vec<V>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn join<V: ToString>(values: &[V]) -> String {
    values.iter().map(V::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "source_m" => cfg.source_m = parse_list(key, value)?,
                "source_alpha" => cfg.source_alpha = parse_list(key, value)?,
                "target_n" => cfg.target_n = parse_list(key, value)?,
                "target_beta" => cfg.target_beta = parse_list(key, value)?,
                "target_p" => cfg.target_p = parse_value(key, value)?,
                "net_density" => cfg.net_density = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "eps0" => cfg.eps0 = parse_value(key, value)?,
                "iota" => cfg.iota = parse_value(key, value)?,
                "steps" => cfg.steps = parse_value(key, value)?,
                "probes" => cfg.probes = parse_value(key, value)?,
                "shell_probes" => cfg.shell_probes = parse_value(key, value)?,
                "calibration_samples" => cfg.calibration_samples = parse_value(key, value)?,
                "audit_samples" => cfg.audit_samples = parse_value(key, value)?,
                "audit_eta" => cfg.audit_eta = parse_value(key, value)?,
                "boundary_tol" => cfg.boundary_tol = parse_value(key, value)?,
                "root_tol" => cfg.root_tol = parse_value(key, value)?,
                "lambda_policy" => cfg.lambda_policy = value.parse()?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "override_a1" => cfg.override_a1 = Some(parse_value(key, value)?),
                "override_a2" => cfg.override_a2 = Some(parse_value(key, value)?),
                "override_b1" => cfg.override_b1 = Some(parse_value(key, value)?),
                "override_b2" => cfg.override_b2 = Some(parse_value(key, value)?),
                "trace_theta0" => cfg.trace_theta0 = parse_value(key, value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Writes every key; `parse(emit())` returns an equal configuration.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("source_m", join(&self.source_m));
        put("source_alpha", join(&self.source_alpha));
        put("target_n", join(&self.target_n));
        put("target_beta", join(&self.target_beta));
        put("target_p", self.target_p.to_string());
        put("net_density", self.net_density.to_string());
        put("seed", self.seed.to_string());
        put("eps0", format!("{:?}", self.eps0));
        put("iota", format!("{:?}", self.iota));
        put("steps", self.steps.to_string());
        put("probes", self.probes.to_string());
        put("shell_probes", self.shell_probes.to_string());
        put("calibration_samples", self.calibration_samples.to_string());
        put("audit_samples", self.audit_samples.to_string());
        put("audit_eta", format!("{:?}", self.audit_eta));
        put("boundary_tol", format!("{:?}", self.boundary_tol));
        put("root_tol", format!("{:?}", self.root_tol));
        put("lambda_policy", self.lambda_policy.to_string());
        put("out_dir", self.out_dir.display().to_string());
        for (k, v) in [
            ("override_a1", self.override_a1),
            ("override_a2", self.override_a2),
            ("override_b1", self.override_b1),
            ("override_b2", self.override_b2),
        ] {
            if let Some(x) = v {
                put(k, format!("{x:?}"));
            }
        }
        put("trace_theta0", format!("{:?}", self.trace_theta0));
        out
    }

    pub fn source(&self) -> Result<SourceSignature> {
        SourceSignature::new(self.source_m.clone(), self.source_alpha.clone())
    }

    pub fn target(&self) -> Result<TargetSignature> {
        TargetSignature::new(self.target_n.clone(), self.target_beta.clone(), self.target_p)
    }

    pub fn tolerances(&self) -> Tolerances<f64> {
        Tolerances {
            boundary: self.boundary_tol,
            root: self.root_tol,
        }
    }

    pub fn harmonic(&self) -> ConjugatePairConfig {
        ConjugatePairConfig {
            iota: self.iota,
            ..Default::default()
        }
    }

    pub fn overrides(&self) -> ConstantOverrides {
        ConstantOverrides {
            a1: self.override_a1,
            a2: self.override_a2,
            b1: self.override_b1,
            b2: self.override_b2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sig = self.source()?;
        self.target()?;
        if self.target_p != sig.dim() + 1 {
            return Err(Error::Config(format!(
                "target_p = {} but the h-component has {} entries",
                self.target_p,
                sig.dim() + 1
            )));
        }
        let positive = [
            ("eps0", self.eps0),
            ("iota", self.iota),
            ("audit_eta", self.audit_eta),
            ("boundary_tol", self.boundary_tol),
            ("root_tol", self.root_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{k}` must be positive, got {v}")));
            }
        }
        if self.audit_eta >= 1.0 {
            return Err(Error::Config("`audit_eta` must be below 1".into()));
        }
        if self.probes == 0 || self.shell_probes == 0 {
            return Err(Error::Config("probe counts must be positive".into()));
        }
        if !self.trace_theta0.is_finite() {
            return Err(Error::Config("`trace_theta0` must be finite".into()));
        }
        Ok(())
    }
}
