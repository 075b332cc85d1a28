//! Run configuration: a JSON file, command-line flags on top of it, and
//! defaults for whatever neither gives.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use slelab_core::experiments::ExperimentConfig;
use slelab_core::loewner::SweepConfig;
use slelab_core::SleParams;

/// Everything a run can be configured with. Every field is optional so the
/// same type describes a config file, a set of flags, or their merge.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Coarsest and finest dyadic level of a dimension fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// `lo:hi:step` for tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Sweep step relative to the squared leftmost gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Flag,
    File,
    Default,
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Source::Flag => "flag",
            Source::File => "file",
            Source::Default => "default",
        })
    }
}

/// A fully resolved configuration; hashing its JSON gives the run id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub experiment: String,
    pub kappa: f64,
    pub samples: u64,
    pub seed: u64,
    pub levels: [u32; 2],
    pub delta: f64,
    pub y: f64,
    pub x: f64,
    pub eps: Vec<f64>,
    pub radii: Vec<f64>,
    pub grid: String,
    pub rel_step: f64,
    pub max_steps: usize,
    pub mesh: f64,
}

pub fn load_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Defaults that depend on the experiment.
fn defaults(experiment: &str) -> RunConfig {
    let sweep = SweepConfig::default();
    let base = RunConfig {
        experiment: Some(experiment.to_string()),
        kappa: Some(6.0),
        samples: Some(1000),
        seed: Some(1),
        levels: Some([4, 8]),
        delta: Some(0.25),
        y: Some(0.5),
        x: Some(1.0),
        eps: Some(vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]),
        radii: Some(vec![0.02, 0.04, 0.08]),
        grid: Some("0:1:0.01".into()),
        rel_step: Some(sweep.rel_step),
        max_steps: Some(sweep.max_steps),
        mesh: Some(ExperimentConfig::new(6.0, 1, 0).mesh),
    };
    match experiment {
        "two-hit" => RunConfig {
            y: Some(0.375),
            x: Some(0.625),
            ..base
        },
        "near-miss" => RunConfig {
            y: Some(0.25),
            x: Some(0.75),
            ..base
        },
        "scaling" => RunConfig { x: Some(0.5), ..base },
        _ => base,
    }
}

macro_rules! pick {
    ($field:ident, $flags:expr, $file:expr, $dflt:expr, $prov:expr) => {{
        let (value, source) = if let Some(v) = $flags.$field.clone() {
            (v, Source::Flag)
        } else if let Some(v) = $file.$field.clone() {
            (v, Source::File)
        } else {
            ($dflt.$field.clone().expect("every field has a default"), Source::Default)
        };
        $prov.insert(stringify!($field).to_string(), source);
        value
    }};
}

/// Merge flags over the file over the defaults, recording where each field
/// came from.
pub fn resolve(experiment: &str, file: &RunConfig, flags: &RunConfig) -> Result<(Resolved, BTreeMap<String, Source>)> {
    if let Some(e) = &file.experiment {
        if e != experiment {
            bail!("config file is for experiment `{e}`, not `{experiment}`");
        }
    }
    let d = defaults(experiment);
    let mut prov = BTreeMap::new();
    let resolved = Resolved {
        experiment: experiment.to_string(),
        kappa: pick!(kappa, flags, file, d, prov),
        samples: pick!(samples, flags, file, d, prov),
        seed: pick!(seed, flags, file, d, prov),
        levels: pick!(levels, flags, file, d, prov),
        delta: pick!(delta, flags, file, d, prov),
        y: pick!(y, flags, file, d, prov),
        x: pick!(x, flags, file, d, prov),
        eps: pick!(eps, flags, file, d, prov),
        radii: pick!(radii, flags, file, d, prov),
        grid: pick!(grid, flags, file, d, prov),
        rel_step: pick!(rel_step, flags, file, d, prov),
        max_steps: pick!(max_steps, flags, file, d, prov),
        mesh: pick!(mesh, flags, file, d, prov),
    };
    resolved.validate()?;
    Ok((resolved, prov))
}

impl Resolved {
    pub fn validate(&self) -> Result<()> {
        SleParams::for_hitting(self.kappa)?;
        if self.levels[0] > self.levels[1] {
            bail!("levels [{}, {}] must be increasing", self.levels[0], self.levels[1]);
        }
        self.experiment_config().validate()?;
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.kappa, self.samples, self.seed);
        cfg.level = self.levels[1];
        cfg.delta = self.delta;
        cfg.sweep.rel_step = self.rel_step;
        cfg.sweep.max_steps = self.max_steps;
        cfg.mesh = self.mesh;
        cfg
    }

    /// Fields that matter to this experiment, for the echo.
    pub fn relevant(&self) -> &'static [&'static str] {
        const COMMON: [&str; 5] = ["kappa", "samples", "seed", "rel_step", "max_steps"];
        match self.experiment.as_str() {
            "hit" => &["kappa", "samples", "seed", "rel_step", "max_steps", "y", "x"],
            "two-hit" => &["kappa", "samples", "seed", "rel_step", "max_steps", "y", "x", "eps", "delta"],
            "dimension" => &["kappa", "samples", "seed", "rel_step", "max_steps", "levels"],
            "near-miss" => &["kappa", "samples", "seed", "rel_step", "max_steps", "y", "x", "radii", "mesh"],
            "scaling" => &["kappa", "samples", "seed", "rel_step", "max_steps", "x"],
            "tables" => &["kappa", "grid"],
            _ => &COMMON,
        }
    }
}

/// `lo:hi:step`
pub fn parse_grid(grid: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        bail!("grid `{grid}` is not of the form lo:hi:step");
    }
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number `{s}` in grid `{grid}`"));
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}
