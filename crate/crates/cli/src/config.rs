//! The JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rhcontract::contract::Termination;
use rhcontract::first_best::FirstBestProblem;
use rhcontract::hjb::{EuropeanExampleProblem, InnerSolver};
use rhcontract::mc::SimulationConfig;
use rhcontract::model::{Interval, ModelPrimitives};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    EuroQuadratic,
    Sannikov,
    AmericanSannikov,
    FirstBestCanonical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub builtin: Builtin,
    /// Reservation utility `R`; defaults to 1/2 for the first-best
    /// instance and 0 otherwise.
    #[serde(default)]
    pub participation: Option<f64>,
    /// `[lo, hi]` override of the drift action set.
    #[serde(default)]
    pub drift_actions: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub beta: f64,
    pub n_max: usize,
    pub s_max: f64,
    pub points: usize,
    pub r: f64,
    pub y_max: f64,
    pub grid_points: usize,
    pub inner: InnerSolver,
    pub policy_tolerance: f64,
    pub max_policy_iterations: usize,
    pub horizon: f64,
    pub x0: f64,
    pub lambda_max: f64,
    pub panels: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            beta: 0.25,
            n_max: 32,
            s_max: 20.0,
            points: 400,
            r: 0.1,
            y_max: 2.0,
            grid_points: 401,
            inner: InnerSolver::Direct,
            policy_tolerance: 1e-12,
            max_policy_iterations: 500,
            horizon: 1.0,
            x0: 0.0,
            lambda_max: 1e3,
            panels: 200,
        }
    }
}

/// Sensitivity of the simulated contract: a constant or the feedback of
/// the constructed free-boundary solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sensitivity {
    Constant(f64),
    Named(NamedSensitivity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedSensitivity {
    FreeBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractBlock {
    pub y0: f64,
    pub z: Sensitivity,
    pub termination: Termination,
    pub american: bool,
    /// Constant running payment.
    pub payment: f64,
}

impl Default for ContractBlock {
    fn default() -> Self {
        ContractBlock {
            y0: 1.0,
            z: Sensitivity::Constant(1.0),
            termination: Termination::Fixed { horizon: 1.0 },
            american: false,
            payment: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationBlock {
    pub n_paths: usize,
    pub dt: f64,
    pub t_cap: f64,
    pub seed: u64,
    pub antithetic: bool,
    pub max_truncated_fraction: f64,
    /// Number of leading paths written to the path table.
    pub paths_csv: usize,
    pub contract: ContractBlock,
    /// Constant efforts audited against the response; defaults to the
    /// maximizer at the start shifted by -1/2 and +1/2.
    pub deviations: Option<Vec<f64>>,
    /// Audits a response shifted by +1/2 from the maximizer instead of
    /// the maximizer itself.
    pub deviant_policy: bool,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        SimulationBlock {
            n_paths: 10_000,
            dt: 1e-3,
            t_cap: 2.0,
            seed: 42,
            antithetic: false,
            max_truncated_fraction: 1e-3,
            paths_csv: 0,
            contract: ContractBlock::default(),
            deviations: None,
            deviant_policy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Json,
}

/// The `--format` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormatChoice {
    Csv,
    Json,
    Both,
}

impl FormatChoice {
    pub fn formats(self) -> Vec<FileFormat> {
        match self {
            FormatChoice::Csv => vec![FileFormat::Csv],
            FormatChoice::Json => vec![FileFormat::Json],
            FormatChoice::Both => vec![FileFormat::Csv, FileFormat::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<FileFormat>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { directory: PathBuf::from("out"), formats: vec![FileFormat::Csv, FileFormat::Json] }
    }
}

impl OutputBlock {
    pub fn csv(&self) -> bool {
        self.formats.contains(&FileFormat::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&FileFormat::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub simulation: SimulationBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn participation(&self) -> f64 {
        self.model.participation.unwrap_or(match self.model.builtin {
            Builtin::FirstBestCanonical => 0.5,
            _ => 0.0,
        })
    }

    fn drift_actions(&self) -> CliResult<Option<Interval>> {
        self.model.drift_actions.map(|[lo, hi]| Interval::new(lo, hi).map_err(config_err)).transpose()
    }

    pub fn build_model(&self) -> CliResult<ModelPrimitives> {
        let r = self.participation();
        let s = &self.solver;
        let sannikov_actions = self.drift_actions()?.unwrap_or(Interval::new(0.0, 1.0).map_err(config_err)?);
        let mut m = match self.model.builtin {
            Builtin::EuroQuadratic => ModelPrimitives::euro_quadratic(s.beta, r),
            Builtin::Sannikov => ModelPrimitives::sannikov(s.r, sannikov_actions, r),
            Builtin::AmericanSannikov => ModelPrimitives::american_sannikov(s.r, sannikov_actions, r),
            Builtin::FirstBestCanonical => ModelPrimitives::first_best_canonical(r),
        }
        .map_err(config_err)?;
        if let Some(a) = self.drift_actions()? {
            m = m.with_drift_actions(a).map_err(config_err)?;
        }
        m.validate().map_err(config_err)?;
        Ok(m)
    }

    pub fn european_problem(&self) -> CliResult<EuropeanExampleProblem> {
        let s = &self.solver;
        let p = EuropeanExampleProblem::new(s.beta, s.n_max, s.s_max, s.points).map_err(config_err)?;
        if s.n_max <= p.first_admissible_n() {
            return Err(config_err(format!(
                "n_max = {} must exceed the first admissible n = {} (1/n below s* = {})",
                s.n_max,
                p.first_admissible_n(),
                p.s_star()
            )));
        }
        Ok(p)
    }

    pub fn first_best_problem(&self) -> CliResult<FirstBestProblem> {
        let s = &self.solver;
        let mut p = FirstBestProblem::from_model(&self.build_model()?, s.horizon, s.x0).map_err(config_err)?;
        p.lambda_max = s.lambda_max;
        p.panels = s.panels;
        p.validate().map_err(config_err)?;
        Ok(p)
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        let b = &self.simulation;
        let mut cfg = SimulationConfig::new(b.n_paths, b.dt, b.t_cap, b.seed).with_antithetic(b.antithetic);
        cfg.max_truncated_fraction = b.max_truncated_fraction;
        cfg.x0 = self.solver.x0;
        cfg
    }

    /// Checks every numeric bound the selected model's commands rely on.
    pub fn validate(&self) -> CliResult<()> {
        let s = &self.solver;
        self.build_model()?;
        match self.model.builtin {
            Builtin::EuroQuadratic => {
                self.european_problem()?;
            }
            Builtin::Sannikov | Builtin::AmericanSannikov => {
                if !(s.y_max > 0.0) {
                    return Err(config_err(format!("y_max must be positive, got {}", s.y_max)));
                }
                if s.grid_points < 200 {
                    return Err(config_err(format!("grid_points must be at least 200, got {}", s.grid_points)));
                }
            }
            Builtin::FirstBestCanonical => {
                self.first_best_problem()?;
            }
        }
        if let InnerSolver::Psor { omega, tolerance, max_iterations } = s.inner {
            if !(omega > 0.0 && omega < 2.0) || !(tolerance > 0.0) || max_iterations == 0 {
                return Err(config_err("psor needs omega in (0, 2), a positive tolerance and a nonzero cap"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(config_err("output formats must name csv, json or both"));
        }
        let b = &self.simulation;
        self.simulation_config().validate().map_err(config_err)?;
        if !(0.0..=1.0).contains(&b.max_truncated_fraction) {
            return Err(config_err("max_truncated_fraction must lie in [0, 1]"));
        }
        if b.contract.y0 < self.participation() {
            return Err(config_err(format!(
                "contract y0 = {} is below the participation level {}",
                b.contract.y0,
                self.participation()
            )));
        }
        if let Some(h) = b.contract.termination.horizon() {
            if !(h > 0.0) {
                return Err(config_err(format!("contract horizon must be positive, got {h}")));
            }
        }
        if let Sensitivity::Named(NamedSensitivity::FreeBoundary) = b.contract.z {
            if self.model.builtin != Builtin::EuroQuadratic {
                return Err(config_err("free_boundary sensitivity needs the euro_quadratic model"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(r#"{"model": {"builtin": "euro_quadratic"}}"#).unwrap();
        assert_eq!(c.solver, SolverBlock::default());
        assert!(c.output.csv() && c.output.json());
    }

    #[test]
    fn unknown_key_is_named() {
        let err =
            RunConfig::from_json(r#"{"model": {"builtin": "euro_quadratic"}, "solver": {"betaa": 0.3}}"#).unwrap_err();
        assert!(err.to_string().contains("betaa"), "{err}");
    }

    #[test]
    fn discount_outside_smooth_fit_range_is_rejected() {
        let err =
            RunConfig::from_json(r#"{"model": {"builtin": "euro_quadratic"}, "solver": {"beta": 0.7}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("(0, 1/2)"), "{err}");
    }

    #[test]
    fn contract_blocks_parse() {
        let c = RunConfig::from_json(
            r#"{"model": {"builtin": "euro_quadratic"},
                "simulation": {"contract": {"z": "free_boundary", "termination": {"hitting": {"level": 0.0}}}}}"#,
        )
        .unwrap();
        assert_eq!(c.simulation.contract.z, Sensitivity::Named(NamedSensitivity::FreeBoundary));
        assert_eq!(c.simulation.contract.termination, Termination::Hitting { level: 0.0 });
    }
}
