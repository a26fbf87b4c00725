//! JSON instance and result files. Chore indices are 1-based on disk.

use std::collections::BTreeSet;

use chorefair::rat::{fmt_rat, parse_rat};
use chorefair::search::{Certificate, Checks};
use chorefair::{Allocation, Instance, Rat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::CliError;

/// A rational on disk: an integer JSON number or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatValue {
    Int(i64),
    Text(String),
}

impl RatValue {
    pub fn parse(&self) -> Result<Rat, CliError> {
        match self {
            RatValue::Int(v) => Ok(chorefair::rat::int(*v)),
            RatValue::Text(s) => parse_rat(s).map_err(|e| CliError::Parse(e.to_string())),
        }
    }

    pub fn from_rat(r: &Rat) -> Self {
        if r.is_integer() {
            if let Ok(v) = i64::try_from(r.numer()) {
                return RatValue::Int(v);
            }
        }
        RatValue::Text(fmt_rat(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub m: usize,
    pub costs: Vec<Vec<RatValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entitlements: Option<Vec<RatValue>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        let conv = |row: &[Rat]| row.iter().map(RatValue::from_rat).collect::<Vec<_>>();
        Self {
            n: inst.n(),
            m: inst.m(),
            costs: inst.costs().iter().map(|r| conv(r)).collect(),
            entitlements: (!inst.is_unweighted()).then(|| conv(inst.entitlements())),
        }
    }

    /// Validates shape and signs. Zero costs are refused unless `allow_zero`.
    pub fn to_instance(&self, allow_zero: bool) -> Result<Instance, CliError> {
        if self.costs.len() != self.n {
            return Err(CliError::Parse(format!(
                "n is {} but costs has {} rows",
                self.n,
                self.costs.len()
            )));
        }
        if let Some(i) = self.costs.iter().position(|r| r.len() != self.m) {
            return Err(CliError::Parse(format!("cost row {} does not have m = {} entries", i + 1, self.m)));
        }
        let costs: Vec<Vec<Rat>> = self
            .costs
            .iter()
            .map(|r| r.iter().map(RatValue::parse).collect())
            .collect::<Result<_, _>>()?;
        let inst = match &self.entitlements {
            Some(a) => {
                let a = a.iter().map(RatValue::parse).collect::<Result<Vec<_>, _>>()?;
                Instance::with_entitlements(costs, a)?
            }
            None => Instance::new(costs)?,
        };
        if !allow_zero && inst.has_zero_costs() {
            return Err(CliError::Parse(
                "costs must be positive (pass --allow-zero to preprocess zero costs)".into(),
            ));
        }
        Ok(inst)
    }

    pub fn parse_str(text: &str, allow_zero: bool) -> Result<Instance, CliError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| CliError::Parse(format!("instance file: {e}")))?;
        file.to_instance(allow_zero)
    }
}

pub fn instance_json(inst: &Instance) -> String {
    serde_json::to_string(&InstanceFile::from_instance(inst)).expect("serialisable")
}

fn rats(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(|r| Value::String(fmt_rat(r))).collect())
}

pub fn bundles_json(x: &Allocation) -> Value {
    Value::Array(
        x.bundles()
            .iter()
            .map(|b| Value::Array(b.iter().map(|j| json!(j + 1)).collect()))
            .collect(),
    )
}

fn checks_json(c: &Checks) -> Value {
    json!({
        "ef1": c.ef1,
        "pef1": c.pef1,
        "fpo_perturbed": c.fpo_perturbed,
        "po_original": c.po_original,
    })
}

pub fn certificate_json(c: &Certificate) -> Value {
    json!({
        "tau": fmt_rat(&c.tau),
        "weights": c.weights.as_deref().map(rats),
        "shrunk_weights": c.shrunk_weights.as_deref().map(rats),
        "prices": c.prices.as_deref().map(rats),
        "perturbation_seed": c.perturbation_seed,
        "perturbation_attempt": c.perturbation_attempt,
        "checks": checks_json(&c.checks),
        "po_oracle": if c.checks.po_original.is_some() { "ran" } else { "skipped" },
        "method": c.method.name(),
        "iterations": c.iterations,
        "phi_start": c.phi_start,
        "search_phase": c.search_phase,
        "fallback": c.fallback,
    })
}

/// The parts of a result file that `check` consumes.
#[derive(Debug, Clone, Deserialize)]
pub struct ResultFile {
    pub bundles: Vec<Vec<usize>>,
    #[serde(default)]
    pub certificate: Option<CertificateFile>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CertificateFile {
    pub tau: Option<RatValue>,
    pub weights: Option<Vec<RatValue>>,
    pub perturbation_seed: Option<u64>,
}

impl ResultFile {
    pub fn allocation(&self, n: usize, m: usize) -> Result<Allocation, CliError> {
        let mut bundles = Vec::with_capacity(self.bundles.len());
        for b in &self.bundles {
            let mut set = BTreeSet::new();
            for &j in b {
                if j == 0 {
                    return Err(CliError::Parse("chore indices are 1-based".into()));
                }
                set.insert(j - 1);
            }
            bundles.push(set);
        }
        let x = Allocation::from_bundles(bundles);
        x.validate(n, m)?;
        Ok(x)
    }
}
