use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sobolev_core::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Everything that determines a command's output. Embedded in every file
/// the CLI writes, so any output can be regenerated with `replay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub version: String,
    pub format_version: u32,
    pub n: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domains: Vec<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Solver tolerance override (ODE tolerance for `ball`, fixed-point
    /// tolerance for grid commands).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    pub supercritical: bool,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rows: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            format_version: sobolev_core::FORMAT_VERSION,
            n: 2,
            p: Vec::new(),
            q: Vec::new(),
            domains: Vec::new(),
            h: None,
            tol: None,
            max_iter: None,
            supercritical: false,
            format: Format::Table,
            field: None,
            max_rows: None,
        }
    }

    /// Sorts and dedups `q`, and checks tolerances and step sizes.
    pub fn normalized(mut self) -> anyhow::Result<Self> {
        for list in [&mut self.p, &mut self.q] {
            if list.iter().any(|x| !x.is_finite()) {
                bail!("exponents must be finite");
            }
            list.sort_by(|a, b| a.partial_cmp(b).unwrap());
            list.dedup();
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                bail!("--tol must be positive, got {t}");
            }
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                bail!("--h must be positive, got {h}");
            }
        }
        if self.max_iter == Some(0) {
            bail!("--max-iter must be positive");
        }
        Ok(self)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Step size from `0.0078125` or `1/128`.
pub fn parse_h(text: &str) -> Result<f64, String> {
    let value = match text.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad numerator in {text:?}"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad denominator in {text:?}"))?;
            a / b
        }
        None => text.trim().parse().map_err(|_| format!("bad step size {text:?}"))?,
    };
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("step size must be positive, got {text:?}"))
    }
}

/// A domain given inline as JSON or as a path to a JSON file.
pub fn load_domain(arg: &str) -> anyhow::Result<DomainSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading domain file {arg}"))?
    };
    let spec = DomainSpec::from_json(&text).with_context(|| format!("parsing domain {arg}"))?;
    spec.validate()?;
    Ok(spec)
}
