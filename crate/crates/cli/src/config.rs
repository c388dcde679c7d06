//! Run configuration: defaults, then an optional `key = value` file, then flags.
//!
//! File grammar: one `key = value` per line; blank lines and lines starting
//! with `#` are ignored; keys are `case`, `mesh`, `nu`, `xk`, `quad`,
//! `solver`, `tol`, `max-iter`, `exec`, `csv`, `dump`. A repeated key keeps
//! the last value.

use std::path::{Path, PathBuf};

use mfv_core::mesh::PointPolicy;
use mfv_core::par::Execution;
use mfv_core::scheme::{PenalizationPolicy, SchemeOptions};
use mfv_core::solver::{SolverChoice, SolverOptions};
use mfv_core::{Error, Result};

use crate::meshspec::MeshSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: String,
    pub mesh: MeshSpec,
    pub policy: PenalizationPolicy,
    pub point: PointPolicy,
    pub quad_order: usize,
    pub solver: SolverOptions,
    pub exec: Execution,
    pub csv: Option<PathBuf>,
    pub dump: Option<PathBuf>,
}

/// Raw `key = value` settings, in application order.
#[derive(Clone, Debug, Default)]
pub struct Settings(pub Vec<(String, String)>);

impl Settings {
    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.0.push((key.to_string(), v.to_string()));
        }
    }

    pub fn parse_file_str(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected 'key = value'", i + 1))
            })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!(
                    "config line {}: unknown key '{k}'",
                    i + 1
                )));
            }
            s.0.push((k.to_string(), v.trim().to_string()));
        }
        Ok(s)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse_file_str(&std::fs::read_to_string(path)?)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

const KEYS: [&str; 11] = [
    "case", "mesh", "nu", "xk", "quad", "solver", "tol", "max-iter", "exec", "csv", "dump",
];

pub fn parse_policy(s: &str) -> Result<PenalizationPolicy> {
    let bad = || {
        Error::Config(format!(
            "penalization '{s}': expected default, zero, fixed:v or power:v0:beta"
        ))
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let policy = match parts.as_slice() {
        ["default"] => PenalizationPolicy::default(),
        ["zero"] => PenalizationPolicy::Zero,
        ["fixed", v] => PenalizationPolicy::FixedOverMeasure { nu0: num(v)? },
        ["power", v, b] => PenalizationPolicy::PowerOfDiameter {
            nu0: num(v)?,
            beta: num(b)?,
        },
        _ => return Err(bad()),
    };
    policy.validate()?;
    Ok(policy)
}

pub fn parse_point(s: &str) -> Result<PointPolicy> {
    match s {
        "centroid" => Ok(PointPolicy::Centroid),
        "circumcenter" => Ok(PointPolicy::Circumcenter),
        _ => Err(Error::Config(format!(
            "cell point '{s}': expected centroid or circumcenter"
        ))),
    }
}

pub fn parse_solver(s: &str) -> Result<SolverChoice> {
    match s {
        "auto" => Ok(SolverChoice::Auto),
        "cholesky" => Ok(SolverChoice::Cholesky),
        "pcg" => Ok(SolverChoice::Pcg),
        _ => Err(Error::Config(format!(
            "solver '{s}': expected auto, cholesky or pcg"
        ))),
    }
}

pub fn parse_exec(s: &str) -> Result<Execution> {
    match s {
        "parallel" => Ok(Execution::Parallel),
        "sequential" => Ok(Execution::Sequential),
        _ => Err(Error::Config(format!(
            "execution '{s}': expected parallel or sequential"
        ))),
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot read '{s}'")))
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let case = s
            .get("case")
            .ok_or_else(|| Error::Config("no case given".into()))?
            .to_string();
        let mesh = MeshSpec::parse(
            s.get("mesh")
                .ok_or_else(|| Error::Config("no mesh given".into()))?,
        )?;
        let mut solver = SolverOptions::default();
        if let Some(v) = s.get("solver") {
            solver.choice = parse_solver(v)?;
        }
        if let Some(v) = s.get("tol") {
            solver.tol = parse_value("tol", v)?;
            if !(solver.tol > 0.0 && solver.tol < 1.0) {
                return Err(Error::Config(format!("tol must lie in (0, 1), got {v}")));
            }
        }
        if let Some(v) = s.get("max-iter") {
            solver.max_iter = parse_value("max-iter", v)?;
        }
        let quad_order = match s.get("quad") {
            Some(v) => parse_value("quad", v)?,
            None => SchemeOptions::default().quad_order,
        };
        Ok(RunConfig {
            case,
            mesh,
            policy: s
                .get("nu")
                .map_or(Ok(PenalizationPolicy::default()), parse_policy)?,
            point: s.get("xk").map_or(Ok(PointPolicy::Centroid), parse_point)?,
            quad_order,
            solver,
            exec: s.get("exec").map_or(Ok(Execution::default()), parse_exec)?,
            csv: s.get("csv").map(PathBuf::from),
            dump: s.get("dump").map(PathBuf::from),
        })
    }

    pub fn scheme_options(&self) -> SchemeOptions {
        SchemeOptions {
            policy: self.policy,
            quad_order: self.quad_order,
            solver: self.solver,
            exec: self.exec,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut s = Settings::parse_file_str(
            "# benchmark\ncase = lepotier\nmesh = squares:40\n\nnu = power:1:-1\nsolver = pcg\n",
        )
        .unwrap();
        s.set("mesh", Some("squares:8"));
        s.set("nu", None::<&str>);
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!(c.case, "lepotier");
        assert_eq!(c.mesh.to_string(), "squares:8");
        assert_eq!(
            c.policy,
            PenalizationPolicy::PowerOfDiameter {
                nu0: 1.0,
                beta: -1.0
            }
        );
        assert_eq!(c.solver.choice, SolverChoice::Pcg);
    }

    #[test]
    fn bad_lines_are_reported() {
        assert!(Settings::parse_file_str("case lepotier").is_err());
        assert!(Settings::parse_file_str("colour = red").is_err());
        assert!(parse_policy("fixed:-1").is_err());
        assert!(parse_policy("power:1").is_err());
        assert_eq!(parse_policy("zero").unwrap(), PenalizationPolicy::Zero);
    }
}
