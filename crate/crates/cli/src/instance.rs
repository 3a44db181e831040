//! JSON instance files.

use std::path::Path;

use cmdp_core::{validate_spec, CmdpSpec, Kernel, Table};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// On-disk CMDP description. Arrays are row-major: `kernel[s][a][s']`,
/// `reward[s][a]`, `costs[i][s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub costs: Vec<Vec<Vec<f64>>>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: Option<String>,
    pub spec: CmdpSpec,
    /// Non-fatal findings such as thresholds outside `[0, 1/(1-γ)]`.
    pub warnings: Vec<String>,
}

fn check_table(problems: &mut Vec<String>, what: &str, t: &[Vec<f64>], ns: usize, na: usize) {
    if t.len() != ns {
        problems.push(format!("{what} has {} state rows, expected {ns}", t.len()));
    }
    for (s, row) in t.iter().enumerate() {
        if row.len() != na {
            problems.push(format!("{what}[{s}] has {} actions, expected {na}", row.len()));
        }
    }
}

impl InstanceFile {
    pub fn from_spec(spec: &CmdpSpec, name: Option<String>) -> Self {
        let (ns, na) = (spec.num_states(), spec.num_actions());
        InstanceFile {
            name,
            num_states: ns,
            num_actions: na,
            gamma: spec.gamma,
            rho: spec.rho.clone(),
            kernel: (0..ns)
                .map(|s| (0..na).map(|a| spec.kernel.row(s, a).to_vec()).collect())
                .collect(),
            reward: spec.reward.to_nested(),
            costs: spec.costs.iter().map(Table::to_nested).collect(),
            thresholds: spec.thresholds.clone(),
        }
    }

    /// All dimension problems, in file order. Empty when every array agrees
    /// with `num_states`, `num_actions` and `d`.
    pub fn shape_problems(&self) -> Vec<String> {
        let (ns, na) = (self.num_states, self.num_actions);
        let mut problems = Vec::new();
        if ns == 0 {
            problems.push("num_states must be positive".to_string());
        }
        if na == 0 {
            problems.push("num_actions must be positive".to_string());
        }
        if self.rho.len() != ns {
            problems.push(format!("rho has {} entries, expected {ns}", self.rho.len()));
        }
        if self.kernel.len() != ns {
            problems.push(format!("kernel has {} state blocks, expected {ns}", self.kernel.len()));
        }
        for (s, block) in self.kernel.iter().enumerate() {
            if block.len() != na {
                problems.push(format!("kernel[{s}] has {} actions, expected {na}", block.len()));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != ns {
                    problems.push(format!("kernel row (s={s},a={a}) has {} entries, expected {ns}", row.len()));
                }
            }
        }
        check_table(&mut problems, "reward", &self.reward, ns, na);
        for (i, c) in self.costs.iter().enumerate() {
            check_table(&mut problems, &format!("costs[{i}]"), c, ns, na);
        }
        if self.costs.len() != self.thresholds.len() {
            problems.push(format!(
                "d mismatch: {} cost tables but {} thresholds",
                self.costs.len(),
                self.thresholds.len()
            ));
        }
        problems
    }

    /// Builds and validates the instance; warnings are returned alongside.
    pub fn into_loaded(self) -> Result<LoadedInstance> {
        let problems = self.shape_problems();
        if !problems.is_empty() {
            return Err(LabError::Invalid(problems));
        }
        let flat = |t: &[Vec<f64>]| t.iter().flatten().copied().collect::<Vec<_>>();
        let kernel = Kernel::new(
            self.num_states,
            self.num_actions,
            self.kernel.iter().flatten().flatten().copied().collect(),
        )?;
        let reward = Table::new(self.num_states, self.num_actions, flat(&self.reward))?;
        let costs = self
            .costs
            .iter()
            .map(|c| Table::new(self.num_states, self.num_actions, flat(c)))
            .collect::<cmdp_core::Result<Vec<_>>>()?;
        let spec = CmdpSpec::new(self.gamma, kernel, reward, costs, self.thresholds, self.rho)?;

        let report = validate_spec(&spec);
        if !report.is_ok() {
            return Err(LabError::Invalid(report.errors().map(|v| v.message.clone()).collect()));
        }
        Ok(LoadedInstance {
            name: self.name,
            warnings: report.warnings().map(|v| v.message.clone()).collect(),
            spec,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

fn parse_error(text: &str, err: serde_json::Error) -> LabError {
    let line = err.line();
    let context = text
        .lines()
        .nth(line.saturating_sub(1))
        .map(|l| format!("  {line} | {}", l.trim_end()))
        .unwrap_or_default();
    LabError::Parse {
        line,
        column: err.column(),
        message: err.to_string(),
        context,
    }
}

pub fn parse_instance(text: &str) -> Result<LoadedInstance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| parse_error(text, e))?;
    file.into_loaded()
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<LoadedInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

/// Reads, dimension-checks and validates an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<CmdpSpec> {
    read_instance(path).map(|l| l.spec)
}
