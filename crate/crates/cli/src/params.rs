//! Scenario parameter records. Defaults ship in `scenario_defaults.json`;
//! command-line flags override individual fields.

use std::sync::OnceLock;

use blowup_lab::rd_solver::Grading;
use serde::{Deserialize, Serialize};

const DEFAULTS_JSON: &str = include_str!("../scenario_defaults.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleA {
    pub source: String,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub samples: usize,
    pub max_blocks: usize,
    pub max_value: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleB {
    pub source: String,
    pub t: Vec<f64>,
    pub n_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleC {
    pub r: f64,
    pub p: f64,
    pub t: Vec<f64>,
    pub flow_z0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleD {
    pub t: Vec<f64>,
    pub n_max: u32,
    pub n_probe: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleE {
    pub p_grid: Vec<f64>,
    pub c: f64,
    pub n_max: u32,
    pub q: f64,
    pub dims: Vec<u32>,
    pub levels: Vec<f64>,
    pub t0: f64,
    pub dt: f64,
    pub theta: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub mesh: Grading,
}

#[derive(Debug, Clone, Deserialize)]
struct Defaults {
    version: u32,
    #[serde(rename = "example-a")]
    a: ExampleA,
    #[serde(rename = "example-b")]
    b: ExampleB,
    #[serde(rename = "example-c")]
    c: ExampleC,
    #[serde(rename = "example-d")]
    d: ExampleD,
    #[serde(rename = "example-e")]
    e: ExampleE,
}

fn defaults() -> &'static Defaults {
    static D: OnceLock<Defaults> = OnceLock::new();
    D.get_or_init(|| serde_json::from_str(DEFAULTS_JSON).expect("shipped defaults parse"))
}

pub fn defaults_version() -> u32 {
    defaults().version
}

pub fn example_a() -> ExampleA {
    defaults().a.clone()
}

pub fn example_b() -> ExampleB {
    defaults().b.clone()
}

pub fn example_c() -> ExampleC {
    defaults().c.clone()
}

pub fn example_d() -> ExampleD {
    defaults().d.clone()
}

pub fn example_e() -> ExampleE {
    defaults().e.clone()
}

/// Replaces `*slot` when the flag was given.
pub fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults_parse() {
        assert_eq!(defaults_version(), 1);
        assert_eq!(example_e().levels, vec![4.0, 16.0, 256.0]);
        assert_eq!(example_e().mesh, Grading::default());
        assert_eq!(example_c().r, 0.25);
    }
}
