//! Run configuration files and the command-line value grammars.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `run.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omegas: Option<OmegaList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<f64>,
}

/// Either an explicit array or a string in the omega grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaList {
    Values(Vec<f64>),
    Grammar(String),
}

impl OmegaList {
    pub fn resolve(&self) -> Result<Vec<f64>, CliError> {
        match self {
            OmegaList::Values(v) => {
                check_ascending(v)?;
                Ok(v.clone())
            }
            OmegaList::Grammar(s) => parse_omegas(s),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        releq_core::MassVector::new(self.masses.clone())?;
        if let Some(z) = &self.zeta {
            if z.len() != self.masses.len() {
                return Err(CliError::Validation(format!(
                    "zeta has {} points but there are {} masses",
                    z.len(),
                    self.masses.len()
                )));
            }
            if z.iter().flatten().any(|v| !v.is_finite()) {
                return Err(CliError::Validation("zeta coordinates must be finite".into()));
            }
        }
        if self.p.is_some() || self.q.is_some() {
            resolve_exponent(self.p, self.q)?;
        }
        if let Some(w) = self.omega {
            check_positive("omega", w)?;
        }
        if let Some(list) = &self.omegas {
            list.resolve()?;
        }
        if let Some(mu) = self.mu {
            check_positive("mu", mu)?;
        }
        if let Some(t) = self.tolerances {
            for v in [t.cell, t.quadrature].into_iter().flatten() {
                check_positive("tolerance", v)?;
            }
        }
        Ok(())
    }
}

pub fn check_positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive and finite (got {v})")))
    }
}

/// The exponent `p` from `p`, `q`, or both when they satisfy
/// `p = 1/(q − 1) + 3/2`.
pub fn resolve_exponent(p: Option<f64>, q: Option<f64>) -> Result<f64, CliError> {
    let from_q = |q: f64| -> Result<f64, CliError> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(CliError::Validation(format!("q must be greater than 1 (got {q})")));
        }
        Ok(1.0 / (q - 1.0) + 1.5)
    };
    match (p, q) {
        (Some(p), None) => check_positive("p", p),
        (None, Some(q)) => from_q(q),
        (Some(p), Some(q)) => {
            let implied = from_q(q)?;
            if (implied - p).abs() > 1e-12 * p.abs().max(1.0) {
                return Err(CliError::Validation(format!(
                    "p = {p} and q = {q} are inconsistent (q implies p = {implied})"
                )));
            }
            Ok(p)
        }
        (None, None) => Err(CliError::Validation("one of p or q is required".into())),
    }
}

fn check_ascending(v: &[f64]) -> Result<(), CliError> {
    releq_core::ansatz::check_omegas(v).map_err(CliError::from)
}

/// Parses `a:b:Klog` (`K` log-uniform points from `a` to `b`, endpoints
/// exact) or a comma-separated list.
pub fn parse_omegas(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    let bad = |why: &str| CliError::Validation(format!("invalid omega list {s:?}: {why}"));
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(bad("expected a:b:Klog"));
        };
        let a: f64 = a.trim().parse().map_err(|_| bad("lower bound is not a number"))?;
        let b: f64 = b.trim().parse().map_err(|_| bad("upper bound is not a number"))?;
        let k: usize = k
            .trim()
            .strip_suffix("log")
            .ok_or_else(|| bad("the count must end in 'log'"))?
            .parse()
            .map_err(|_| bad("the count is not an integer"))?;
        if k < 2 {
            return Err(bad("at least two points are needed"));
        }
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(bad("bounds must satisfy 0 < a < b"));
        }
        let ratio = (b / a).ln();
        (0..k)
            .map(|i| match i {
                0 => a,
                _ if i == k - 1 => b,
                _ => a * (ratio * i as f64 / (k - 1) as f64).exp(),
            })
            .collect()
    } else {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number"))).collect::<Result<Vec<_>, _>>()?
    };
    check_ascending(&values)?;
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grammar() {
        let w = parse_omegas("1e-4:1e-2:8log").unwrap();
        assert_eq!(w.len(), 8);
        assert_eq!(w[0], 1e-4);
        assert_eq!(w[7], 1e-2);
        let ratio = (100f64).powf(1.0 / 7.0);
        for k in 1..8 {
            assert!((w[k] / w[k - 1] - ratio).abs() < 1e-12);
        }
        let three = parse_omegas("1e-4:1e-2:3log").unwrap();
        assert!((three[1] - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn list_grammar_and_errors() {
        assert_eq!(parse_omegas("1e-3, 1e-2").unwrap(), vec![1e-3, 1e-2]);
        assert!(parse_omegas("1e-2,1e-3").is_err());
        assert!(parse_omegas("0:1:4log").is_err());
        assert!(parse_omegas("1:2:4lin").is_err());
        assert!(parse_omegas("1:2:1log").is_err());
        assert!(parse_omegas("1,x").is_err());
    }

    #[test]
    fn exponent_resolution() {
        assert_eq!(resolve_exponent(None, Some(2.0)).unwrap(), 2.5);
        assert_eq!(resolve_exponent(Some(2.5), Some(2.0)).unwrap(), 2.5);
        assert!(resolve_exponent(Some(3.0), Some(2.0)).is_err());
        assert!(resolve_exponent(None, None).is_err());
        assert!(resolve_exponent(None, Some(1.0)).is_err());
    }

    #[test]
    fn run_config_parsing() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"masses":[1,1],"zeta":[[-0.5,0],[0.5,0]],"mu":10,"p":2.5}"#).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.p, Some(2.5));
        let cfg: RunConfig = serde_json::from_str(r#"{"masses":[1,2],"omegas":"1e-3:1e-2:2log"}"#).unwrap();
        assert_eq!(cfg.omegas.unwrap().resolve().unwrap(), vec![1e-3, 1e-2]);
        let bad: RunConfig = serde_json::from_str(r#"{"masses":[1,-1]}"#).unwrap();
        let err = bad.validate().unwrap_err();
        assert!(err.message().contains("masses must be positive"));
        assert!(serde_json::from_str::<RunConfig>(r#"{"masses":[1],"typo":1}"#).is_err());
        let mismatch: RunConfig = serde_json::from_str(r#"{"masses":[1,1],"zeta":[[0,0]]}"#).unwrap();
        assert!(mismatch.validate().is_err());
    }
}
