//! Run configuration: the TOML file the CLI reads, one optional section
//! per command, plus named presets so every command is runnable with no
//! config file at all.
//!
//! Parsing is strict — unknown keys are rejected, and TOML errors carry
//! line/column positions — and every section validates fully before any
//! computation starts.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bart::BartConfig;
use crate::dgp::{Dgp, SimConfig};
use crate::girf::{
    GirfConfig, GirfSpec, IdentificationScheme, StateFilter, StatePredicate,
};
use crate::lp::ResidualConvention;
use crate::montecarlo::McConfig;
use crate::{Error, Result};

/// The whole config file. Each command reads its own section; top-level
/// keys hold cross-command settings (overridable from the command line).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; the `--seed` flag takes precedence.
    pub seed: Option<u64>,
    /// Output directory; the `--out` flag takes precedence.
    pub out: Option<PathBuf>,
    /// Worker cap for the replication harness; `--threads` takes
    /// precedence.
    pub threads: Option<usize>,
    pub simulate: Option<SimulateSection>,
    pub fit: Option<FitSection>,
    pub girf: Option<GirfSection>,
    pub montecarlo: Option<McConfig>,
    pub multiplier: Option<MultiplierSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        // toml's errors already carry line/column spans; keep them intact.
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read and parse. An unreadable config file is a config error, not a
    /// data error: no computation was requested yet.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    /// The section for `command`, or a config error naming what is
    /// missing.
    pub fn require<'a, T>(
        section: &'a Option<T>,
        command: &str,
    ) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "config file has no [{command}] section; add one or use --preset"
            ))
        })
    }
}

/// `[simulate]`: which process to draw from and how long a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub dgp: Dgp,
    /// Periods simulated, burn-in included.
    pub total: usize,
    /// Leading periods discarded.
    pub burn: usize,
}

impl SimulateSection {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        self.sim(0).validate()
    }

    pub fn sim(&self, seed: u64) -> SimConfig {
        SimConfig::new(self.total, self.burn, seed)
    }
}

/// `[fit]`: a single sum-of-trees regression on a user dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Column regressed on the others.
    pub response: String,
    /// Covariate columns; empty means every column except the response.
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub bart: BartConfig,
}

impl FitSection {
    pub fn validate(&self) -> Result<()> {
        self.bart.validate()?;
        if self.response.is_empty() {
            return Err(Error::Config("fit.response must name a column".into()));
        }
        if self.covariates.contains(&self.response) {
            return Err(Error::Config(format!(
                "fit.covariates must not include the response `{}`",
                self.response
            )));
        }
        Ok(())
    }
}

/// A state filter plus the label its output files carry
/// (`girf_draws_recession.csv` etc.).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedFilter {
    pub tag: String,
    pub variable: String,
    pub predicate: StatePredicate,
}

impl TaggedFilter {
    pub fn filter(&self) -> StateFilter {
        StateFilter {
            variable: self.variable.clone(),
            predicate: self.predicate.clone(),
        }
    }
}

/// `[girf]`: the estimation problem posed over a dataset's columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GirfSection {
    /// Variables whose lags form the state block.
    pub state: Vec<String>,
    /// Variables whose responses are estimated.
    pub responses: Vec<String>,
    pub lags: usize,
    #[serde(default)]
    pub residual_convention: ResidualConvention,
    pub scheme: IdentificationScheme,
    /// One estimation per size, over shared fits.
    pub shock_sizes: Vec<f64>,
    pub horizon: usize,
    #[serde(default)]
    pub girf: GirfConfig,
    /// When present, one additional state-conditional run per filter,
    /// outputs tagged by `tag`.
    #[serde(default)]
    pub conditions: Vec<TaggedFilter>,
    /// Conditioning points sampled per state-conditional run (defaults to
    /// 100 when conditions are present).
    pub n_condition_draws: Option<usize>,
}

impl GirfSection {
    pub fn validate(&self) -> Result<()> {
        self.girf.validate()?;
        if self.state.is_empty() {
            return Err(Error::Config("girf.state must name at least one column".into()));
        }
        if self.responses.is_empty() {
            return Err(Error::Config(
                "girf.responses must name at least one column".into(),
            ));
        }
        if self.shock_sizes.is_empty() {
            return Err(Error::Config("girf.shock_sizes must be non-empty".into()));
        }
        if self.shock_sizes.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("girf.shock_sizes must be finite".into()));
        }
        for (i, c) in self.conditions.iter().enumerate() {
            if c.tag.is_empty() {
                return Err(Error::Config(format!(
                    "girf.conditions[{i}].tag must be non-empty"
                )));
            }
            if self.conditions[..i].iter().any(|p| p.tag == c.tag) {
                return Err(Error::Config(format!(
                    "girf.conditions: duplicate tag `{}`",
                    c.tag
                )));
            }
        }
        if self.n_condition_draws == Some(0) {
            return Err(Error::Config(
                "girf.n_condition_draws must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Bind the section to a dataset's columns.
    pub fn spec(&self, panel: Vec<(String, Vec<f64>)>) -> GirfSpec {
        GirfSpec {
            panel,
            state: self.state.clone(),
            responses: self.responses.clone(),
            lags: self.lags,
            residual_convention: self.residual_convention,
        }
    }
}

/// `[multiplier]`: optional variable selections and band quantiles for
/// the cumulative-ratio command (runnable with no config at all).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSection {
    /// Variable taken from the numerator file (default: its first).
    pub y_variable: Option<String>,
    /// Variable taken from the denominator file (default: its first).
    pub g_variable: Option<String>,
    pub quantiles: Option<Vec<f64>>,
}

impl MultiplierSection {
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = &self.quantiles {
            if q.is_empty() || q.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Config(
                    "multiplier.quantiles must be probabilities in [0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A `--preset` token. Model presets pick a benchmark process and its
/// estimation setup; scale presets pick the chain length. They combine:
/// `--preset tvar,paper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    SvarGarch,
    Tvar,
    SignMa,
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Preset> {
        match s {
            "svar-garch" => Ok(Preset::SvarGarch),
            "tvar" => Ok(Preset::Tvar),
            "sign-ma" => Ok(Preset::SignMa),
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected svar-garch, tvar, sign-ma, desk, or paper)"
            ))),
        }
    }
}

/// Scale half of a preset selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

/// Model half of a preset selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPreset {
    SvarGarch,
    Tvar,
    SignMa,
}

/// What a `--preset` list resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresetSelection {
    pub model: Option<ModelPreset>,
    pub scale: Scale,
}

/// Fold preset tokens into one selection: at most one model, at most one
/// scale, desk scale by default.
pub fn resolve_presets(presets: &[Preset]) -> Result<PresetSelection> {
    let mut model: Option<ModelPreset> = None;
    let mut scale: Option<Scale> = None;
    for p in presets {
        let (slot_model, slot_scale) = match p {
            Preset::SvarGarch => (Some(ModelPreset::SvarGarch), None),
            Preset::Tvar => (Some(ModelPreset::Tvar), None),
            Preset::SignMa => (Some(ModelPreset::SignMa), None),
            Preset::Desk => (None, Some(Scale::Desk)),
            Preset::Paper => (None, Some(Scale::Paper)),
        };
        if let Some(m) = slot_model {
            if model.replace(m).is_some() {
                return Err(Error::Config("more than one model preset given".into()));
            }
        }
        if let Some(s) = slot_scale {
            if scale.replace(s).is_some() {
                return Err(Error::Config("more than one scale preset given".into()));
            }
        }
    }
    Ok(PresetSelection {
        model,
        scale: scale.unwrap_or(Scale::Desk),
    })
}

fn require_model(sel: &PresetSelection, command: &str) -> Result<ModelPreset> {
    sel.model.ok_or_else(|| {
        Error::Config(format!(
            "{command} needs a model preset (svar-garch, tvar, or sign-ma) or a config file"
        ))
    })
}

/// The replication-harness preset: one of the shipped experiments, scaled.
pub fn mc_from_presets(sel: &PresetSelection, seed: u64) -> Result<McConfig> {
    let mc = match require_model(sel, "montecarlo")? {
        ModelPreset::SvarGarch => McConfig::svar_garch_desk(seed),
        ModelPreset::Tvar => McConfig::tvar_desk(seed),
        ModelPreset::SignMa => McConfig::sign_ma_desk(seed, true),
    };
    Ok(match sel.scale {
        Scale::Desk => mc,
        Scale::Paper => mc.paper_scale(),
    })
}

/// The simulation preset: the model's default parameters at the matching
/// sample length.
pub fn simulate_from_presets(sel: &PresetSelection) -> Result<SimulateSection> {
    let mc = mc_from_presets(
        &PresetSelection {
            model: sel.model,
            scale: sel.scale,
        },
        0,
    )
    .map_err(|_| {
        Error::Config(
            "simulate needs a model preset (svar-garch, tvar, or sign-ma) or a config file"
                .into(),
        )
    })?;
    Ok(SimulateSection {
        dgp: mc.dgp,
        total: mc.total,
        burn: mc.burn,
    })
}

/// The estimation preset: the matching experiment's setup, posed as a
/// single-dataset run.
pub fn girf_from_presets(sel: &PresetSelection) -> Result<GirfSection> {
    let mc = mc_from_presets(
        &PresetSelection {
            model: sel.model,
            scale: sel.scale,
        },
        0,
    )
    .map_err(|_| {
        Error::Config(
            "girf needs a model preset (svar-garch, tvar, or sign-ma) or a config file".into(),
        )
    })?;
    let girf = match sel.scale {
        Scale::Desk => GirfConfig::desk(),
        Scale::Paper => GirfConfig::default(),
    };
    Ok(GirfSection {
        state: mc.estimation.state,
        responses: mc.estimation.responses,
        lags: mc.estimation.lags,
        residual_convention: mc.estimation.residual_convention,
        scheme: mc.estimation.scheme,
        shock_sizes: mc.shock_sizes,
        horizon: mc.horizon,
        girf,
        conditions: Vec::new(),
        n_condition_draws: None,
    })
}

/// The regression preset: the model's first variable on everything else.
pub fn fit_from_presets(sel: &PresetSelection) -> Result<FitSection> {
    let model = require_model(sel, "fit")?;
    let response = match model {
        ModelPreset::SvarGarch | ModelPreset::Tvar => "y1",
        ModelPreset::SignMa => "gdp",
    };
    Ok(FitSection {
        response: response.into(),
        covariates: Vec::new(),
        bart: match sel.scale {
            Scale::Desk => BartConfig::desk(),
            Scale::Paper => BartConfig::default(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_full_config_round_trips_through_toml() {
        let text = r#"
seed = 11
out = "runs/a"
threads = 2

[simulate]
total = 300
burn = 100

[simulate.dgp]
model = "svar_garch"

[fit]
response = "y1"

[girf]
state = ["y1", "y2", "y3"]
responses = ["y1"]
lags = 2
shock_sizes = [1.0, -1.0]
horizon = 4

[girf.scheme]
kind = "shock_series"
shock = "eps1"

[[girf.conditions]]
tag = "recession"
variable = "y3"
predicate = { below_percentile = 0.2 }

[multiplier]
quantiles = [0.05, 0.5, 0.95]
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, Some(11));
        assert_eq!(cfg.threads, Some(2));
        let sim = cfg.simulate.as_ref().unwrap();
        assert_eq!(sim.dgp, Dgp::SvarGarch(Default::default()));
        sim.validate().unwrap();
        let girf = cfg.girf.as_ref().unwrap();
        girf.validate().unwrap();
        assert_eq!(girf.girf, GirfConfig::default());
        assert_eq!(girf.conditions.len(), 1);
        assert_eq!(
            girf.conditions[0].predicate,
            StatePredicate::BelowPercentile(0.2)
        );
        cfg.fit.as_ref().unwrap().validate().unwrap();
        cfg.multiplier.as_ref().unwrap().validate().unwrap();
        // Serialize → parse returns the same config.
        let back = RunConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected_with_positions() {
        let err = RunConfig::from_toml("sede = 3\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("sede"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
        // Nested sections are strict too.
        let err = RunConfig::from_toml(
            "[simulate]\ntotal = 10\nburn = 2\nextra = 1\n[simulate.dgp]\nmodel = \"tvar\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        // Type errors carry positions as well.
        let err = RunConfig::from_toml("seed = \"seven\"\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn sections_validate_before_any_run() {
        let girf = GirfSection {
            state: vec!["y".into()],
            responses: vec!["y".into()],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
            scheme: IdentificationScheme::ShockSeries { shock: "e".into() },
            shock_sizes: vec![],
            horizon: 2,
            girf: GirfConfig::default(),
            conditions: Vec::new(),
            n_condition_draws: None,
        };
        assert!(girf.validate().is_err());
        let girf = GirfSection {
            shock_sizes: vec![1.0],
            conditions: vec![
                TaggedFilter {
                    tag: "a".into(),
                    variable: "y".into(),
                    predicate: StatePredicate::Below(0.0),
                },
                TaggedFilter {
                    tag: "a".into(),
                    variable: "y".into(),
                    predicate: StatePredicate::AtOrAbove(0.0),
                },
            ],
            ..girf
        };
        let err = girf.validate().unwrap_err();
        assert!(err.to_string().contains("duplicate tag"), "{err}");
        let sim = SimulateSection {
            dgp: Dgp::Tvar(Default::default()),
            total: 50,
            burn: 50,
        };
        assert!(sim.validate().is_err());
        let fit = FitSection {
            response: "y".into(),
            covariates: vec!["y".into()],
            bart: BartConfig::desk(),
        };
        assert!(fit.validate().is_err());
        let mult = MultiplierSection {
            quantiles: Some(vec![1.5]),
            ..Default::default()
        };
        assert!(mult.validate().is_err());
    }

    #[test]
    fn presets_fold_into_a_model_and_a_scale() {
        assert_eq!("svar-garch".parse::<Preset>().unwrap(), Preset::SvarGarch);
        assert!("svargarch".parse::<Preset>().is_err());
        let sel = resolve_presets(&[Preset::Tvar]).unwrap();
        assert_eq!(sel.model, Some(ModelPreset::Tvar));
        assert_eq!(sel.scale, Scale::Desk);
        let sel = resolve_presets(&[Preset::SignMa, Preset::Paper]).unwrap();
        assert_eq!(sel.scale, Scale::Paper);
        assert!(resolve_presets(&[Preset::Tvar, Preset::SvarGarch]).is_err());
        assert!(resolve_presets(&[Preset::Desk, Preset::Paper]).is_err());
        // Scale alone is not enough for commands that need a model.
        let bare = resolve_presets(&[Preset::Desk]).unwrap();
        assert!(simulate_from_presets(&bare).is_err());
        assert!(mc_from_presets(&bare, 0).is_err());
    }

    #[test]
    fn preset_sections_mirror_the_harness_experiments() {
        let sel = resolve_presets(&[Preset::SvarGarch]).unwrap();
        let sim = simulate_from_presets(&sel).unwrap();
        assert_eq!((sim.total, sim.burn), (300, 100));
        sim.validate().unwrap();
        let girf = girf_from_presets(&sel).unwrap();
        girf.validate().unwrap();
        assert_eq!(girf.horizon, 8);
        assert_eq!(girf.girf, GirfConfig::desk());
        let fit = fit_from_presets(&sel).unwrap();
        assert_eq!(fit.response, "y1");
        fit.validate().unwrap();
        // Paper scale lengthens the asymmetric-MA sample and the chains.
        let sel = resolve_presets(&[Preset::SignMa, Preset::Paper]).unwrap();
        let sim = simulate_from_presets(&sel).unwrap();
        assert_eq!((sim.total, sim.burn), (400, 100));
        let mc = mc_from_presets(&sel, 9).unwrap();
        assert_eq!(mc.seed, 9);
        assert_eq!(mc.n_reps, 100);
        assert_eq!(mc.girf.bart.n_trees, 250);
        mc.validate().unwrap();
        let girf = girf_from_presets(&sel).unwrap();
        assert_eq!(girf.girf.bart.n_draws, 2000);
        assert_eq!(girf.shock_sizes, vec![1.0, -1.0]);
    }
}
