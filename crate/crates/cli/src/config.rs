use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use fracsemi::decay::Verdict;
use fracsemi::engine::EvolutionConfig;
use fracsemi::grid::{Field, FractionalOrder, GridSpec, TorusGrid};
use fracsemi::potential::{Potential, PotentialSpec};
use fracsemi::random::{seeded, smooth_positive_field};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernel,
    Evolve,
    Decay,
    Audit,
    VerifySuite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Evolve => "evolve",
            Command::Decay => "decay",
            Command::Audit => "audit",
            Command::VerifySuite => "verify-suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChecks {
    #[default]
    Strict,
    Diagnostic,
}

/// Initial datum for `evolve` and `audit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Constant {
        value: f64,
    },
    Gaussian {
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    RandomSmooth {
        #[serde(default = "default_bumps")]
        bumps: usize,
    },
}

fn default_bumps() -> usize {
    3
}

impl Default for InitialDatum {
    fn default() -> Self {
        InitialDatum::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    /// Truncation level `M`.
    pub level: f64,
    pub radius: f64,
    /// Defaults to `0.5/‖V_M‖_∞`.
    pub t: Option<f64>,
}

fn default_p0() -> f64 {
    1.0
}

/// The experiment file. Which fields are required depends on the command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub grid: Option<GridSpec>,
    pub mu: Option<f64>,
    pub potential: Option<PotentialSpec>,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default)]
    pub engine: EvolutionConfig,
    pub t_grid: Option<Vec<f64>>,
    pub t_final: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub initial: InitialDatum,
    /// Ball radii for the criterion table.
    pub radii: Option<Vec<f64>>,
    pub m_ladder: Option<Vec<f64>>,
    pub certificate: Option<CertificateSpec>,
    pub threshold: Option<f64>,
    /// Verdict the run must reach; a mismatch exits with status 2.
    pub expect: Option<Verdict>,
    #[serde(default)]
    pub kernel_checks: KernelChecks,
    /// Subset of the acceptance battery for `verify-suite`.
    pub criteria: Option<Vec<u8>>,
}

pub fn load(path: &Path) -> Result<(ExperimentConfig, serde_json::Value)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_value(raw.clone())
        .with_context(|| format!("config {}", path.display()))?;
    Ok((cfg, raw))
}

/// Validated, built inputs shared by the commands.
#[derive(Debug)]
pub struct Setup {
    pub grid: TorusGrid,
    pub order: FractionalOrder,
}

impl ExperimentConfig {
    pub fn setup(&self) -> Result<Setup> {
        let spec = self.grid.context(
            "config field `grid` is required: {\"dim\": 1|2, \"length\": L, \"points\": 2^k}",
        )?;
        let grid = spec.build().context("config field `grid`")?;
        let mu = self
            .mu
            .context("config field `mu` is required: μ ∈ (0, 1]")?;
        let order = FractionalOrder::new(mu).context("config field `mu`")?;
        self.engine.validate().context("config field `engine`")?;
        if !(self.p0 >= 1.0 && self.p0.is_finite()) {
            bail!("config field `p0` = {}: expected a finite p₀ ≥ 1", self.p0);
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                bail!("config field `t_final` = {t}: expected a finite t > 0");
            }
        }
        if let Some(ts) = &self.t_grid {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                bail!("config field `t_grid`: expected a nonempty list of finite t > 0");
            }
            if ts.windows(2).any(|w| !(w[0] < w[1])) {
                bail!("config field `t_grid`: times must be strictly increasing");
            }
        }
        if let Some(th) = self.threshold {
            if !(th > 0.0 && th.is_finite()) {
                bail!("config field `threshold` = {th}: expected a finite threshold > 0");
            }
        }
        Ok(Setup { grid, order })
    }

    pub fn potential(&self, grid: &TorusGrid) -> Result<Potential> {
        let spec = self.potential.as_ref().context(
            "config field `potential` is required, e.g. {\"family\": \"constant\", \"value\": 1}",
        )?;
        Potential::from_spec(grid, spec, self.p0).context("config field `potential`")
    }

    pub fn initial_field(&self, grid: &TorusGrid) -> Result<Field> {
        let field = match self.initial {
            InitialDatum::Constant { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    bail!("config field `initial.value` = {value}: expected a finite value ≥ 0");
                }
                Field::constant(grid, value)
            }
            InitialDatum::Gaussian { width, center } => {
                if !(width > 0.0 && width.is_finite()) {
                    bail!("config field `initial.width` = {width}: expected a finite width > 0");
                }
                Field::from_fn(grid, |x| {
                    let dx = [grid.wrap(x[0] - center[0]), grid.wrap(x[1] - center[1])];
                    (-(dx[0] * dx[0] + dx[1] * dx[1]) / (2.0 * width * width)).exp()
                })?
            }
            InitialDatum::RandomSmooth { bumps } => {
                if bumps == 0 {
                    bail!("config field `initial.bumps` = 0: expected at least 1");
                }
                smooth_positive_field(grid, &mut seeded(self.seed.unwrap_or(0)), bumps)
            }
        };
        Ok(field)
    }

    pub fn ladder(&self) -> Vec<f64> {
        self.m_ladder
            .clone()
            .unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0])
    }

    /// Configured radii, or `{1/2, 1, 2, 4}` below `L/2`.
    pub fn radii(&self, grid: &TorusGrid) -> Result<Vec<f64>> {
        let half = 0.5 * grid.length();
        match &self.radii {
            Some(rs) => {
                if let Some(r) = rs.iter().find(|r| !(**r > 0.0 && **r < half)) {
                    bail!("config field `radii`: r = {r} outside (0, L/2) = (0, {half})");
                }
                Ok(rs.clone())
            }
            None => Ok([0.5, 1.0, 2.0, 4.0]
                .into_iter()
                .filter(|r| *r < half)
                .collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> ExperimentConfig {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let cfg = parse(r#"{"grid": {"dim": 1, "length": 6, "points": 64}, "mu": 1}"#);
        assert_eq!(cfg.p0, 1.0);
        assert_eq!(cfg.initial, InitialDatum::Constant { value: 1.0 });
        assert_eq!(cfg.ladder(), vec![1.0, 2.0, 4.0, 8.0]);
        let grid = cfg.setup().unwrap().grid;
        assert_eq!(cfg.radii(&grid).unwrap(), vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn validation_names_fields() {
        let cfg = parse(
            r#"{"grid": {"dim": 1, "length": 6, "points": 64}, "mu": 0.5, "t_grid": [1, 0.5]}"#,
        );
        assert!(format!("{:#}", cfg.setup().unwrap_err()).contains("t_grid"));
        let cfg = parse(r#"{"grid": {"dim": 3, "length": 6, "points": 64}, "mu": 0.5}"#);
        assert!(format!("{:#}", cfg.setup().unwrap_err()).contains("grid.dim"));
        let cfg = parse(r#"{"mu": 0.5}"#);
        assert!(format!("{:#}", cfg.setup().unwrap_err()).contains("`grid`"));
        let cfg =
            parse(r#"{"grid": {"dim": 1, "length": 6, "points": 64}, "mu": 0.5, "radii": [3.5]}"#);
        let grid = cfg.setup().unwrap().grid;
        assert!(cfg.radii(&grid).is_err());
        let cfg = parse(
            r#"{"grid": {"dim": 1, "length": 6, "points": 64}, "mu": 0.5, "engine": {"dt": -1}}"#,
        );
        assert!(format!("{:#}", cfg.setup().unwrap_err()).contains("engine.dt"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{"initial": {"kind": "gaussian", "width": 1, "height": 2}}"#
        )
        .is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"command": "plot"}"#).is_err());
    }

    #[test]
    fn random_initial_data_follow_the_seed() {
        let cfg = parse(r#"{"seed": 5, "initial": {"kind": "random_smooth"}}"#);
        let grid = TorusGrid::new(1, 10.0, 64).unwrap();
        let a = cfg.initial_field(&grid).unwrap();
        let b = cfg.initial_field(&grid).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.min_value() >= 0.0);
    }
}
