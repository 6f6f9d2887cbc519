//! Scenario files and state specifications.
//!
//! A scenario file is a JSON object:
//!
//! ```json
//! {
//!   "A": [[0, 0, 1], [1, 0, 0]],
//!   "B": [[0.7071067811865476, 0, 0.7071067811865476], [-0.7071067811865476, 0, 0.7071067811865476]],
//!   "Z": [[1, 1], [1, -1]],
//!   "C": [[0.5, 0.5], [0.5, -0.5]],
//!   "state": "werner:0.2"
//! }
//! ```
//!
//! `Z`, `C` and `state` are optional. A state is either a name
//! (`werner:P`, `tau:P`, `rho_max`, `phi_plus`, `mixed`), a Pauli form
//! `{"pauli": {"weight": 1, "r_a": [..], "r_b": [..], "t": [[..]]}}`, or a
//! dense matrix `{"dense": [[[re, im], ..], ..]}`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bellcorr::mat3::{norm, RealMatrix};
use bellcorr::pauli::{self, Operator4, PauliForm};
use bellcorr::MeasurementSettings;
use serde::Deserialize;

/// Rows within this distance of unit norm are renormalized on load.
pub const RENORMALIZE_TOL: f64 = 1e-3;
/// Rows further than this from unit norm produce a warning when renormalized.
pub const UNIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Pauli { pauli: PauliForm },
    Dense { dense: Vec<Vec<[f64; 2]>> },
}

impl StateSpec {
    pub fn build(&self) -> Result<Operator4> {
        match self {
            StateSpec::Named(name) => named_state(name),
            StateSpec::Pauli { pauli: p } => Ok(pauli::pauli_assemble(p)),
            StateSpec::Dense { dense } => Ok(Operator4::from_pairs(dense)?),
        }
    }
}

pub fn named_state(spec: &str) -> Result<Operator4> {
    let (name, param) = match spec.split_once(':') {
        Some((n, p)) => {
            let p: f64 = p.trim().parse().with_context(|| format!("bad parameter in state '{spec}'"))?;
            (n.trim(), Some(p))
        }
        None => (spec.trim(), None),
    };
    let state = match (name, param) {
        ("werner", Some(p)) => pauli::werner_state(p)?,
        ("tau", Some(p)) => pauli::tau_state(p)?,
        ("rho_max", None) => pauli::rho_max(),
        ("phi_plus", None) => pauli::phi_plus(),
        ("mixed", None) => Operator4::identity().scale(0.25),
        _ => bail!("unknown state '{spec}'; expected werner:P, tau:P, rho_max, phi_plus or mixed"),
    };
    Ok(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "Z", default)]
    z: Option<Vec<Vec<f64>>>,
    #[serde(rename = "C", default)]
    c: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    state: Option<StateSpec>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub settings: MeasurementSettings,
    pub z: Option<RealMatrix>,
    pub c: Option<RealMatrix>,
    pub state: Option<StateSpec>,
}

impl Scenario {
    pub fn named(name: &str) -> Result<Self> {
        let settings = MeasurementSettings::by_name(name).ok_or_else(|| {
            anyhow!(
                "unknown scenario '{name}'; available: {}",
                MeasurementSettings::NAMES.join(", ")
            )
        })?;
        let z = (name == "chsh").then(|| RealMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]]).expect("2x2"));
        Ok(Self {
            name: name.to_string(),
            settings,
            z,
            c: None,
            state: None,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn from_json(text: &str, name: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).with_context(|| format!("malformed scenario file {name}"))?;
        let a = unit_rows(raw.a, 'A')?;
        let b = unit_rows(raw.b, 'B')?;
        let settings = MeasurementSettings::new(a, b)?;
        let matrix = |m: Option<Vec<Vec<f64>>>, what: &str| -> Result<Option<RealMatrix>> {
            m.map(|rows| {
                let x = RealMatrix::from_rows(&rows).with_context(|| format!("bad {what} matrix"))?;
                if x.shape() != (settings.m(), settings.m()) {
                    bail!("{what} must be {0}x{0}, got {1}x{2}", settings.m(), x.rows(), x.cols());
                }
                Ok(x)
            })
            .transpose()
        };
        Ok(Self {
            name: name.to_string(),
            z: matrix(raw.z, "Z")?,
            c: matrix(raw.c, "C")?,
            state: raw.state,
            settings,
        })
    }
}

fn unit_rows(rows: Vec<Vec<f64>>, party: char) -> Result<RealMatrix> {
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let n = norm(&row);
        if !n.is_finite() || (n - 1.0).abs() > RENORMALIZE_TOL {
            bail!("row {i} of {party} has norm {n}, expected a unit vector");
        }
        if (n - 1.0).abs() > UNIT_TOL {
            eprintln!("warning: renormalized row {i} of {party} (norm {n})");
        }
        out.push(row.iter().map(|x| x / n).collect::<Vec<f64>>());
    }
    Ok(RealMatrix::from_rows(&out)?)
}

/// Parses a matrix given on the command line as JSON rows.
pub fn parse_matrix(text: &str, what: &str) -> Result<RealMatrix> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(text).with_context(|| format!("{what} must be JSON rows, e.g. [[1,0],[0,1]]"))?;
    Ok(RealMatrix::from_rows(&rows)?)
}

/// Parses a state given on the command line: a name or inline JSON.
pub fn parse_state(text: &str) -> Result<StateSpec> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        Ok(serde_json::from_str(trimmed).context("malformed inline state")?)
    } else {
        Ok(StateSpec::Named(trimmed.to_string()))
    }
}
