//! JSON model files.
//!
//! ```json
//! {
//!   "species": ["A"],
//!   "parameters": { "birth": 10.0, "death": 1.0 },
//!   "reactions": [
//!     { "stoich": { "A": 1 },  "rate_poly": [{ "coeff": 1.0, "exponents": { "birth": 1 } }] },
//!     { "stoich": { "A": -1 }, "rate_poly": [{ "coeff": 1.0, "exponents": { "death": 1 } }],
//!       "reactants": { "A": 1 } }
//!   ],
//!   "initial_state": { "A": 0 },
//!   "output": [{ "coeff": 1.0, "powers": { "A": 1 } }]
//! }
//! ```
//!
//! Parameter order is the order of the `parameters` object. Species missing
//! from `initial_state` start at zero. Unknown keys are rejected.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{
    Monomial, OutputFunction, OutputTerm, Parameters, PropensitySpec, RatePolynomial,
    ReactionNetwork, State,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub species: Vec<String>,
    pub parameters: IndexMap<String, f64>,
    pub reactions: Vec<ReactionEntry>,
    #[serde(default)]
    pub initial_state: IndexMap<String, i64>,
    pub output: Vec<OutputEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionEntry {
    pub stoich: IndexMap<String, i64>,
    pub rate_poly: Vec<RateTermEntry>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub reactants: IndexMap<String, i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateTermEntry {
    pub coeff: f64,
    #[serde(default)]
    pub exponents: IndexMap<String, i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    pub coeff: f64,
    #[serde(default)]
    pub powers: IndexMap<String, i64>,
}

/// A fully validated model: network, parameter values, initial state and output.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub species: Vec<String>,
    pub parameter_names: Vec<String>,
    pub network: ReactionNetwork,
    pub theta: Parameters,
    pub initial_state: State,
    pub output: OutputFunction,
}

fn lookup(names: &[String], name: &str, what: &str, at: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Schema(format!("{at}: unknown {what} \"{name}\"")))
}

fn nonneg(value: i64, at: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Schema(format!("{at}: expected a nonnegative integer, got {value}")))
}

impl Model {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let species = file.species;
        let d = species.len();
        if d == 0 {
            return Err(Error::Schema("species: at least one species is required".into()));
        }
        for (n, name) in species.iter().enumerate() {
            if species[..n].contains(name) {
                return Err(Error::Schema(format!("species[{n}]: duplicate species \"{name}\"")));
            }
        }
        let parameter_names: Vec<String> = file.parameters.keys().cloned().collect();
        let p = parameter_names.len();

        let mut stoich = Vec::with_capacity(file.reactions.len());
        let mut propensities = Vec::with_capacity(file.reactions.len());
        for (k, r) in file.reactions.iter().enumerate() {
            let mut zeta = vec![0; d];
            for (name, &v) in &r.stoich {
                zeta[lookup(&species, name, "species", &format!("reactions[{k}].stoich"))?] = v;
            }
            let mut orders = vec![0; d];
            for (name, &v) in &r.reactants {
                let at = format!("reactions[{k}].reactants.{name}");
                orders[lookup(&species, name, "species", &at)?] = nonneg(v, &at)?;
            }
            let mut terms = Vec::with_capacity(r.rate_poly.len());
            for (n, t) in r.rate_poly.iter().enumerate() {
                let mut exponents = vec![0; p];
                for (name, &e) in &t.exponents {
                    let at = format!("reactions[{k}].rate_poly[{n}].exponents.{name}");
                    exponents[lookup(&parameter_names, name, "parameter", &at)?] = nonneg(e, &at)?;
                }
                terms.push(Monomial { coeff: t.coeff, exponents });
            }
            let rate = RatePolynomial::new(p, terms).map_err(|e| Error::Schema(format!("reactions[{k}]: {e}")))?;
            stoich.push(zeta);
            propensities.push(PropensitySpec::mass_action(rate, orders));
        }
        let network = ReactionNetwork::new(d, p, stoich, propensities).map_err(|e| Error::Schema(e.to_string()))?;
        let theta = Parameters::new(&network, file.parameters.values().copied().collect())
            .map_err(|e| Error::Schema(format!("parameters: {e}")))?;

        let mut initial_state = vec![0; d];
        for (name, &v) in &file.initial_state {
            let at = format!("initial_state.{name}");
            let s = lookup(&species, name, "species", "initial_state")?;
            if v < 0 {
                return Err(Error::Schema(format!("{at}: negative initial count {v}")));
            }
            initial_state[s] = v;
        }

        let mut out_terms = Vec::with_capacity(file.output.len());
        for (n, t) in file.output.iter().enumerate() {
            let mut powers = vec![0; d];
            for (name, &e) in &t.powers {
                let at = format!("output[{n}].powers.{name}");
                powers[lookup(&species, name, "species", &at)?] = nonneg(e, &at)?;
            }
            out_terms.push(OutputTerm { coeff: t.coeff, powers });
        }
        let output = OutputFunction::new(d, out_terms).map_err(|e| Error::Schema(format!("output: {e}")))?;

        Ok(Self {
            species,
            parameter_names,
            network,
            theta,
            initial_state,
            output,
        })
    }

    /// Back to the file schema. Fails for networks with custom propensities.
    pub fn to_file(&self) -> Result<ModelFile> {
        let sparse = |names: &[String], values: &mut dyn Iterator<Item = i64>| -> IndexMap<String, i64> {
            names
                .iter()
                .zip(values)
                .filter(|(_, v)| *v != 0)
                .map(|(n, v)| (n.clone(), v))
                .collect()
        };
        let net = &self.network;
        let mut reactions = Vec::with_capacity(net.reactions());
        for k in 0..net.reactions() {
            let PropensitySpec::MassActionPoly { rate, reactant_orders } = net.propensity(k) else {
                return Err(Error::Schema(format!(
                    "reaction {k} has a custom propensity and cannot be written to a model file"
                )));
            };
            reactions.push(ReactionEntry {
                stoich: sparse(&self.species, &mut net.stoich(k).iter().copied()),
                rate_poly: rate
                    .terms()
                    .iter()
                    .map(|t| RateTermEntry {
                        coeff: t.coeff,
                        exponents: sparse(&self.parameter_names, &mut t.exponents.iter().map(|&e| i64::from(e))),
                    })
                    .collect(),
                reactants: sparse(&self.species, &mut reactant_orders.iter().map(|&e| i64::from(e))),
            });
        }
        Ok(ModelFile {
            species: self.species.clone(),
            parameters: self
                .parameter_names
                .iter()
                .cloned()
                .zip(self.theta.as_slice().iter().copied())
                .collect(),
            reactions,
            initial_state: self
                .species
                .iter()
                .cloned()
                .zip(self.initial_state.iter().copied())
                .collect(),
            output: self
                .output
                .terms()
                .iter()
                .map(|t| OutputEntry {
                    coeff: t.coeff,
                    powers: sparse(&self.species, &mut t.powers.iter().map(|&e| i64::from(e))),
                })
                .collect(),
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file()?).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }
}

/// Reads and validates a model file.
pub fn parse_model(path: impl AsRef<Path>) -> Result<Model> {
    Model::from_path(path)
}
