//! Model files: `key = value` lines with `#` comments.
//!
//! ```text
//! # light-tailed example
//! increment = expdifference(2, 1)
//! perturbation = exponential(3)
//! dependence = independent
//! ```
//!
//! `dependence = correlated(l1, l2)` fixes both laws, so `increment` and
//! `perturbation` may be left out. A production model (`interarrival`,
//! `service`, `delay`, all three together) likewise implies the walk.

use std::fmt::Write as _;

use crate::distributions::{DistributionSpec, Literal};
use crate::error::{Error, Result};
use crate::walk::{Dependence, ProductionModel, WalkModel};

const KEYS: [&str; 6] = [
    "increment",
    "perturbation",
    "dependence",
    "interarrival",
    "service",
    "delay",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub model: WalkModel,
    pub production: Option<ProductionModel>,
}

fn parse_dependence(value: &str) -> Result<Dependence> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("independent") {
        return Ok(Dependence::Independent);
    }
    let lit: Literal = v.parse()?;
    match lit.name.as_str() {
        "independent" => {
            lit.bind(&[])?;
            Ok(Dependence::Independent)
        }
        "correlated" => {
            let p = lit.bind(&["lambda1", "lambda2"])?;
            Ok(Dependence::CorrelatedExample {
                lambda1: p[0],
                lambda2: p[1],
            })
        }
        other => Err(Error::Parse(format!("unknown dependence `{other}`"))),
    }
}

/// Parse and validate a model file, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ModelConfig> {
    let mut errors = Vec::new();
    let mut laws: [Option<DistributionSpec>; 6] = [None; 6];
    let mut seen = [false; 6];
    let mut dependence = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        let Some((key, value)) = line.split_once('=') else {
            errors.push(at(format!("expected key = value, got `{line}`")));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let Some(slot) = KEYS.iter().position(|k| *k == key) else {
            errors.push(at(format!("unknown key `{key}`")));
            continue;
        };
        if seen[slot] {
            errors.push(at(format!("duplicate key `{key}`")));
            continue;
        }
        seen[slot] = true;
        if key == "dependence" {
            match parse_dependence(value) {
                Ok(d) => dependence = Some(d),
                Err(e) => errors.push(at(e.to_string())),
            }
        } else {
            match value.parse::<DistributionSpec>() {
                Ok(d) => laws[slot] = Some(d),
                Err(e) => errors.push(at(e.to_string())),
            }
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }

    let [increment, perturbation, _, interarrival, service, delay] = laws;
    let production = match (interarrival, service, delay) {
        (Some(interarrival), Some(service), Some(delay)) => Some(ProductionModel {
            interarrival,
            service,
            delay,
        }),
        (None, None, None) => None,
        _ => {
            return Err(Error::Config(vec![Error::Parse(
                "interarrival, service and delay must be given together".into(),
            )]))
        }
    };
    let dependence = dependence.unwrap_or(Dependence::Independent);

    let implied = match (dependence, production) {
        (Dependence::CorrelatedExample { lambda1, lambda2 }, _) => {
            Some(WalkModel::correlated(lambda1, lambda2).map(|m| (m.increment, m.perturbation)))
        }
        (Dependence::Independent, Some(p)) => {
            Some(p.walk_model().map(|m| (m.increment, m.perturbation)))
        }
        _ => None,
    };
    let (increment, perturbation) = match implied {
        Some(Err(e)) => return Err(Error::Config(vec![e])),
        Some(Ok((inc, pert))) => {
            for (given, derived, key) in [
                (increment, inc, "increment"),
                (perturbation, pert, "perturbation"),
            ] {
                if let Some(g) = given {
                    if g != derived {
                        errors.push(Error::InvalidParameter(format!(
                            "{key} {g} conflicts with implied {derived}"
                        )));
                    }
                }
            }
            (inc, pert)
        }
        None => {
            if increment.is_none() {
                errors.push(Error::Parse("missing key `increment`".into()));
            }
            if perturbation.is_none() {
                errors.push(Error::Parse("missing key `perturbation`".into()));
            }
            match (increment, perturbation) {
                (Some(i), Some(p)) => (i, p),
                _ => return Err(Error::Config(errors)),
            }
        }
    };

    let model = WalkModel {
        increment,
        perturbation,
        dependence,
    };
    // Collect every model-level violation rather than stopping at the first.
    match increment.mean() {
        Ok(mean) if mean < 0.0 => {}
        Ok(mean) => errors.push(Error::InvalidDrift { mean }),
        Err(e) => errors.push(e),
    }
    if !perturbation.positive_part_mean().is_finite() {
        errors.push(Error::InfiniteMean(format!(
            "positive part of {perturbation}"
        )));
    }
    if errors.is_empty() {
        if let Err(e) = model.validate() {
            errors.push(e);
        }
    }
    match errors.len() {
        0 => Ok(ModelConfig { model, production }),
        1 => Err(errors.remove(0)),
        _ => Err(Error::Config(errors)),
    }
}

/// Canonical text form; `parse_config(&serialize(c)) == Ok(c)`.
pub fn serialize(config: &ModelConfig) -> String {
    let mut out = String::new();
    let m = &config.model;
    let _ = writeln!(out, "increment = {}", m.increment);
    let _ = writeln!(out, "perturbation = {}", m.perturbation);
    let _ = writeln!(out, "dependence = {}", m.dependence);
    if let Some(p) = &config.production {
        let _ = writeln!(out, "interarrival = {}", p.interarrival);
        let _ = writeln!(out, "service = {}", p.service);
        let _ = writeln!(out, "delay = {}", p.delay);
    }
    out
}
