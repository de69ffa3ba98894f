//! Reproducible command reports.
//!
//! Field order is fixed: `input_digest`, `command`, `classification`,
//! `transform_chain`, `solution`, `certificate`, `tool_version`. A block is
//! present exactly when its stage ran.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificate::{KktReport, LocalVerdict, SensitivityReport};
use crate::classify::{ChainLink, Classification, Convexity, DegenerateFlag, ProblemClass};
use crate::solver::Solution;
use crate::transform::ChainEntry;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sha256:<hex>` of the raw input bytes.
pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationBlock {
    pub class: ProblemClass,
    pub convexity: Convexity,
    pub headline: String,
    pub summary: String,
    pub chain: Vec<ChainLink>,
    pub flags: Vec<DegenerateFlag>,
}

impl From<&Classification> for ClassificationBlock {
    fn from(c: &Classification) -> Self {
        Self {
            class: c.class,
            convexity: c.convexity,
            headline: c.headline(),
            summary: c.summary(),
            chain: c.chain.clone(),
            flags: c.flags.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformBlock {
    pub steps: Vec<ChainEntry>,
    /// Digest of the written output problem file.
    pub output_digest: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CertificateBlock {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stationarity: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kkt: Option<KktReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub local_optimum: Option<LocalVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sensitivity: Option<SensitivityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub input_digest: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<ClassificationBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transform_chain: Option<TransformBlock>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solution: Option<Solution>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateBlock>,
    pub tool_version: String,
}

impl Report {
    pub fn new(input: &[u8], command: String) -> Self {
        Self {
            input_digest: digest(input),
            command,
            classification: None,
            transform_chain: None,
            solution: None,
            certificate: None,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "input: {}", self.input_digest);
        let _ = writeln!(out, "command: {}", self.command);
        if let Some(c) = &self.classification {
            let _ = writeln!(out, "class: {}", c.headline);
            let _ = writeln!(out, "chain: {}", c.summary);
            for link in &c.chain {
                let _ = writeln!(out, "  {} [{}]", link.node, link.justification);
            }
            if !c.flags.is_empty() {
                let flags: Vec<String> = c.flags.iter().map(|f| format!("{f:?}")).collect();
                let _ = writeln!(out, "flags: {}", flags.join(", "));
            }
        }
        if let Some(t) = &self.transform_chain {
            for step in &t.steps {
                let _ = writeln!(
                    out,
                    "transform: {} [{}] value map {}",
                    step.rule, step.certificate, step.value_map
                );
            }
            let _ = writeln!(out, "output: {}", t.output_digest);
        }
        if let Some(s) = &self.solution {
            let _ = writeln!(out, "method: {}", s.method);
            let _ = writeln!(out, "status: {}", json_word(&s.status));
            if let Some(v) = s.value {
                let _ = writeln!(out, "value: {v}");
            }
            if let Some(x) = &s.point {
                let _ = writeln!(out, "point: {}", join(x));
            }
            if let Some(m) = &s.multipliers {
                let _ = writeln!(out, "multipliers: {}", join(m));
            }
            let _ = writeln!(out, "iterations: {}", s.iterations);
        }
        if let Some(c) = &self.certificate {
            if let Some(st) = c.stationarity {
                let _ = writeln!(out, "stationary: {st}");
            }
            if let Some(k) = &c.kkt {
                let verdict = match &k.verdict {
                    crate::certificate::KktVerdict::Accept => "accept".to_string(),
                    crate::certificate::KktVerdict::Reject(clause) => format!("reject {clause}"),
                };
                let _ = writeln!(
                    out,
                    "kkt: {verdict} (stationarity {}, slackness {}, lambda0 {})",
                    k.stationarity_residual, k.complementary_slackness_residual, k.lambda0
                );
            }
            match &c.local_optimum {
                Some(LocalVerdict::Consistent { samples }) => {
                    let _ = writeln!(out, "local optimum: consistent over {samples} samples");
                }
                Some(LocalVerdict::Refuted {
                    witness,
                    improvement,
                }) => {
                    let _ = writeln!(
                        out,
                        "local optimum: refuted at {} (improvement {improvement})",
                        join(witness)
                    );
                }
                None => {}
            }
            if let Some(s) = &c.sensitivity {
                let _ = writeln!(
                    out,
                    "envelope {} at {}: lhs {} rhs {} discrepancy {}",
                    s.parameter, s.r0, s.lhs, s.rhs, s.discrepancy
                );
            }
        }
        let _ = writeln!(out, "version: {}", self.tool_version);
        out
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn json_word<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
