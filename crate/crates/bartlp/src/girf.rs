//! Generalized impulse responses from horizon-by-horizon fits.
//!
//! The estimator follows a fixed recipe per response variable: fit horizon
//! zero, keep the residual vectors of D retained posterior draws, refit
//! each later horizon once per draw with that draw's residual-augmentation
//! block, and difference two posterior predictions — one at a conditioning
//! point, one with the shock added. Averaging the differences over draws
//! gives the response path; the spread over draws gives the bands.
//!
//! Three ways a shock can enter:
//!
//! - [`IdentificationScheme::ShockSeries`] — the shock is an observed
//!   series (a proxy, or the true innovations in a simulation); the shocked
//!   prediction adds `shock_size` to its conditioning value.
//! - [`IdentificationScheme::RecursiveControls`] — like a recursive
//!   ordering: contemporaneous values of the variables the shock may not
//!   move on impact enter the controls.
//! - [`IdentificationScheme::ImpulseVector`] — no shock regressor at all;
//!   a preliminary VAR supplies an impact vector which is applied to the
//!   first-lag block of the state.

use crate::bart::BartConfig;
use crate::{Error, Result};
use crate::linalg::{var_fit, var_impulse_vector};
use crate::lp::{
    build_design, fit_h0, fit_horizon, HorizonModel, LpDataset, ResidualConvention,
};
use crate::mat::DataMatrix;
use crate::rng::{tags, RngStream};
use serde::{Deserialize, Serialize};

/// Quantiles reported by default: the 95/90/68 bands and the median.
pub const DEFAULT_QUANTILES: [f64; 7] = [0.025, 0.05, 0.16, 0.5, 0.84, 0.95, 0.975];

/// How the structural shock is identified.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IdentificationScheme {
    /// `x` is an observed shock or proxy series; the state enters lagged.
    ShockSeries { shock: String },
    /// `x` is an observable (e.g. a policy rate) and the variables it must
    /// not move on impact enter as contemporaneous controls.
    RecursiveControls { shock: String, controls: Vec<String> },
    /// The shock regressor is identically zero; a preliminary VAR on the
    /// state (with `var_lags` lags) is identified recursively and column
    /// `shock_index` of the Cholesky factor becomes the impact vector.
    ImpulseVector { var_lags: usize, shock_index: usize },
}

/// The panel and alignment choices shared by every horizon regression.
#[derive(Debug, Clone)]
pub struct GirfSpec {
    /// Observed series by name. Must contain every name referenced by
    /// `state`, `responses`, and the identification scheme.
    pub panel: Vec<(String, Vec<f64>)>,
    /// Variables whose lags form the state block, in the order that fixes
    /// the impulse-vector entries.
    pub state: Vec<String>,
    /// Variables whose responses are estimated.
    pub responses: Vec<String>,
    pub lags: usize,
    pub residual_convention: ResidualConvention,
}

impl GirfSpec {
    fn series(&self, name: &str) -> Result<&[f64]> {
        self.panel
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    fn n_periods(&self) -> usize {
        self.panel.first().map(|(_, v)| v.len()).unwrap_or(0)
    }
}

/// Chain and draw settings for one GIRF run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GirfConfig {
    /// Settings for the horizon-0 fit and any later horizon with an empty
    /// augmentation block (those fits are shared across draws).
    pub bart: BartConfig,
    /// Settings for the per-draw refits at horizons with augmentation
    /// columns. Defaults to the same chain as `bart`.
    pub refit: BartConfig,
    /// D: how many horizon-0 residual draws, hence refits per horizon.
    /// Thinned evenly from the retained horizon-0 draws.
    pub n_residual_draws: usize,
    /// Quantiles reported in the summary.
    pub quantiles: Vec<f64>,
}

impl Default for GirfConfig {
    fn default() -> Self {
        GirfConfig {
            bart: BartConfig::default(),
            refit: BartConfig::default(),
            n_residual_draws: 100,
            quantiles: DEFAULT_QUANTILES.to_vec(),
        }
    }
}

impl GirfConfig {
    /// Desk-scale settings: the small chain for interactive runs. The
    /// refits share the horizon-0 tree count but run a shorter chain;
    /// they restart from scratch per draw, so the burn-in dominates.
    pub fn desk() -> Self {
        let bart = BartConfig::desk();
        let refit = BartConfig {
            n_draws: 150,
            n_burn: 150,
            ..bart.clone()
        };
        GirfConfig {
            bart,
            refit,
            n_residual_draws: 100,
            quantiles: DEFAULT_QUANTILES.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bart.validate()?;
        self.refit.validate()?;
        if self.n_residual_draws == 0 {
            return Err(Error::InvalidParameter {
                name: "n_residual_draws",
                reason: "must be at least 1".into(),
            });
        }
        if self.n_residual_draws > self.bart.n_draws {
            return Err(Error::InvalidParameter {
                name: "n_residual_draws",
                reason: format!(
                    "{} exceeds the {} retained horizon-0 draws to thin from",
                    self.n_residual_draws, self.bart.n_draws
                ),
            });
        }
        for &q in &self.quantiles {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidParameter {
                    name: "quantiles",
                    reason: format!("{q} is outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// One evaluation point of a horizon regression, split the way the design
/// is laid out: shock value, state-and-control block, augmentation block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditioningPoint {
    pub x: f64,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl ConditioningPoint {
    /// Flatten to the design's column layout `[x, z.., w..]`.
    pub fn row(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + self.z.len() + self.w.len());
        out.push(self.x);
        out.extend_from_slice(&self.z);
        out.extend_from_slice(&self.w);
        out
    }

    fn from_row(row: &[f64], n_w: usize) -> ConditioningPoint {
        let z_end = row.len() - n_w;
        ConditioningPoint {
            x: row[0],
            z: row[1..z_end].to_vec(),
            w: row[z_end..].to_vec(),
        }
    }
}

/// Columnwise means of the horizon-`h` design: the default conditioning
/// point ("the sample average, computed within each regression model").
/// `residuals` follows the same rule as [`build_design`]: required exactly
/// when horizon `h` has augmentation columns.
pub fn baseline_point(
    dataset: &LpDataset,
    h: usize,
    residuals: Option<&[f64]>,
) -> Result<ConditioningPoint> {
    let design = build_design(dataset, h, residuals)?;
    let n_w = design
        .x
        .labels()
        .iter()
        .filter(|l| l.starts_with("eps."))
        .count();
    Ok(ConditioningPoint::from_row(&design.x.column_means(), n_w))
}

/// Draws and summary of one impulse-response computation.
///
/// `psi[v][h][d]` is exactly `y1[v][h][d] - y0[v][h][d]`; the summary mean
/// is exactly the mean of the stored `psi` draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrfResult {
    pub variables: Vec<String>,
    /// Horizons covered, always `0..=H`.
    pub horizons: Vec<usize>,
    pub shock_size: f64,
    pub y0: Vec<Vec<Vec<f64>>>,
    pub y1: Vec<Vec<Vec<f64>>>,
    pub psi: Vec<Vec<Vec<f64>>>,
    pub summary: IrfSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrfSummary {
    pub quantiles: Vec<f64>,
    /// `mean[v][h]`
    pub mean: Vec<Vec<f64>>,
    /// `bands[v][h][q]`, aligned with `quantiles`
    pub bands: Vec<Vec<Vec<f64>>>,
}

impl IrfResult {
    pub(crate) fn from_draws(
        variables: Vec<String>,
        shock_size: f64,
        y0: Vec<Vec<Vec<f64>>>,
        y1: Vec<Vec<Vec<f64>>>,
        quantiles: &[f64],
    ) -> IrfResult {
        let psi: Vec<Vec<Vec<f64>>> = y0
            .iter()
            .zip(&y1)
            .map(|(v0, v1)| {
                v0.iter()
                    .zip(v1)
                    .map(|(h0, h1)| h0.iter().zip(h1).map(|(a, b)| b - a).collect())
                    .collect()
            })
            .collect();
        let horizons = (0..y0.first().map(|v| v.len()).unwrap_or(0)).collect();
        let mean = psi
            .iter()
            .map(|v| {
                v.iter()
                    .map(|d| d.iter().sum::<f64>() / d.len() as f64)
                    .collect()
            })
            .collect();
        let bands = psi
            .iter()
            .map(|v| {
                v.iter()
                    .map(|d| {
                        let mut sorted = d.clone();
                        sorted.sort_unstable_by(f64::total_cmp);
                        quantiles.iter().map(|&q| quantile_sorted(&sorted, q)).collect()
                    })
                    .collect()
            })
            .collect();
        IrfResult {
            variables,
            horizons,
            shock_size,
            y0,
            y1,
            psi,
            summary: IrfSummary {
                quantiles: quantiles.to_vec(),
                mean,
                bands,
            },
        }
    }

    /// Posterior median of the response draws per (variable, horizon) —
    /// the per-dataset point impulse response the replication harness
    /// aggregates.
    pub fn pointwise_median(&self) -> Vec<Vec<f64>> {
        self.psi
            .iter()
            .map(|per_h| {
                per_h
                    .iter()
                    .map(|draws| {
                        let mut sorted = draws.clone();
                        sorted.sort_by(|a, b| a.total_cmp(b));
                        quantile_sorted(&sorted, 0.5)
                    })
                    .collect()
            })
            .collect()
    }

    /// Restrict to a single variable (for multiplier ratios and plots).
    pub fn select(&self, variable: &str) -> Result<IrfResult> {
        let v = self
            .variables
            .iter()
            .position(|n| n == variable)
            .ok_or_else(|| Error::UnknownColumn(variable.to_string()))?;
        Ok(IrfResult {
            variables: vec![self.variables[v].clone()],
            horizons: self.horizons.clone(),
            shock_size: self.shock_size,
            y0: vec![self.y0[v].clone()],
            y1: vec![self.y1[v].clone()],
            psi: vec![self.psi[v].clone()],
            summary: IrfSummary {
                quantiles: self.summary.quantiles.clone(),
                mean: vec![self.summary.mean[v].clone()],
                bands: vec![self.summary.bands[v].clone()],
            },
        })
    }

    /// Long-format CSV of every stored draw: `variable,horizon,draw,psi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable,horizon,draw,psi\n");
        for (v, name) in self.variables.iter().enumerate() {
            for (&h, draws) in self.horizons.iter().zip(&self.psi[v]) {
                for (d, psi) in draws.iter().enumerate() {
                    out.push_str(&format!("{name},{h},{d},{psi}\n"));
                }
            }
        }
        out
    }

    /// Summary (mean and quantile bands per variable and horizon) as
    /// pretty-printed JSON.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry<'a> {
            variable: &'a str,
            horizon: usize,
            mean: f64,
            bands: Bands<'a>,
        }
        #[derive(Serialize)]
        struct Bands<'a> {
            quantiles: &'a [f64],
            values: &'a [f64],
        }
        let entries: Vec<Entry> = self
            .variables
            .iter()
            .enumerate()
            .flat_map(|(v, name)| {
                self.horizons.iter().map(move |&h| Entry {
                    variable: name,
                    horizon: h,
                    mean: self.summary.mean[v][h],
                    bands: Bands {
                        quantiles: &self.summary.quantiles,
                        values: &self.summary.bands[v][h],
                    },
                })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "shock_size": self.shock_size,
            "entries": entries,
        }))
        .map_err(|e| Error::Data(e.to_string()))
    }
}

/// Linear interpolation between order statistics; `sorted` ascending.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Everything fixed about one (response variable, scheme) regression
/// family: the assembled dataset plus how to form the shocked point.
struct VariableProblem {
    dataset: LpDataset,
    /// This response's entry of the unit impact vector (ImpulseVector
    /// only); scaled by the shock size at evaluation.
    impact_entry: Option<f64>,
    /// Unit (size-1) impact vector over the state block (ImpulseVector
    /// only).
    impact: Option<Vec<f64>>,
}

impl VariableProblem {
    /// Design columns the impulse vector perturbs: the first lag of each
    /// state variable, in state order. `None` when a shock column is
    /// perturbed instead.
    fn impact_columns(&self, x: &DataMatrix) -> Result<Option<Vec<usize>>> {
        if self.impact.is_none() {
            return Ok(None);
        }
        self.dataset
            .lagged
            .iter()
            .map(|(name, _)| x.column_index(&format!("{name}.l1")))
            .collect::<Result<Vec<usize>>>()
            .map(Some)
    }

    /// The shocked twin of a conditioning row: the shock column moves by
    /// `shock_size`, or the first-lag block moves by the scaled impact
    /// vector.
    fn shocked_row(
        &self,
        base: &[f64],
        shock_size: f64,
        impact_columns: Option<&[usize]>,
    ) -> Vec<f64> {
        let mut row = base.to_vec();
        match (&self.impact, impact_columns) {
            (Some(d), Some(cols)) => {
                for (&col, dj) in cols.iter().zip(d) {
                    row[col] += shock_size * dj;
                }
            }
            _ => row[0] += shock_size,
        }
        row
    }
}

fn assemble_problem(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    response: &str,
    response_index: usize,
) -> Result<VariableProblem> {
    let t = spec.n_periods();
    let response_series = spec.series(response)?.to_vec();
    let lagged: Vec<(String, Vec<f64>)> = spec
        .state
        .iter()
        .map(|n| Ok((n.clone(), spec.series(n)?.to_vec())))
        .collect::<Result<_>>()?;

    let (shock, contemporaneous, impact) = match scheme {
        IdentificationScheme::ShockSeries { shock } => (
            (shock.clone(), spec.series(shock)?.to_vec()),
            Vec::new(),
            None,
        ),
        IdentificationScheme::RecursiveControls { shock, controls } => (
            (shock.clone(), spec.series(shock)?.to_vec()),
            controls
                .iter()
                .map(|n| Ok((n.clone(), spec.series(n)?.to_vec())))
                .collect::<Result<_>>()?,
            None,
        ),
        IdentificationScheme::ImpulseVector {
            var_lags,
            shock_index,
        } => {
            let state_panel = DataMatrix::from_columns(
                spec.state
                    .iter()
                    .map(|n| Ok((n.clone(), spec.series(n)?.to_vec())))
                    .collect::<Result<_>>()?,
            )?;
            let var = var_fit(&state_panel, *var_lags)?;
            let impact = var_impulse_vector(&var, *shock_index, 1.0)?;
            (("x_zero".to_string(), vec![0.0; t]), Vec::new(), Some(impact))
        }
    };

    let impact_entry = impact.as_ref().map(|d| {
        // The response must be a state variable to have an impact entry;
        // callers validated membership.
        d[response_index]
    });
    Ok(VariableProblem {
        dataset: LpDataset {
            response: (response.to_string(), response_series),
            shock,
            contemporaneous,
            lagged,
            lags: spec.lags,
            residual_convention: spec.residual_convention,
            time: None,
        },
        impact_entry,
        impact,
    })
}

/// Evenly spaced indices into `n_ret` retained draws, one per residual
/// draw.
fn thinned_indices(n_ret: usize, d_draws: usize) -> Vec<usize> {
    (0..d_draws).map(|d| d * n_ret / d_draws).collect()
}

/// How a conditioning point is chosen for each draw.
enum Conditioning<'a> {
    /// The design's columnwise means (one point per fitted model).
    SampleAverage,
    /// Uniform draws from the design rows passing the filter; one point
    /// per (residual draw, condition draw) pair.
    SampledRows {
        filter: &'a StateFilter,
        /// The filter variable's full series (indexed by `t_index`).
        series: &'a [f64],
        threshold: f64,
        n_condition_draws: usize,
    },
}

impl Conditioning<'_> {
    /// Rows eligible as conditioning points under this model, or `None`
    /// when the sample average is used instead of rows.
    fn eligible_rows(&self, model: &HorizonModel) -> Result<Option<Vec<usize>>> {
        match self {
            Conditioning::SampleAverage => Ok(None),
            Conditioning::SampledRows {
                filter,
                series,
                threshold,
                ..
            } => filter.matching_rows(model, series, *threshold).map(Some),
        }
    }
}

/// Generalized impulse responses at the sample-average conditioning point.
///
/// Per response variable: the horizon-0 fit supplies D residual draws
/// (thinned evenly from the retained chain); each horizon with
/// augmentation columns is refit once per draw; horizons without them are
/// fit once and evaluated at D thinned posterior draws. Every draw stores
/// the baseline and shocked predictions and their difference.
pub fn girf_compute(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    shock_size: f64,
    horizon: usize,
    config: &GirfConfig,
    rng: &RngStream,
) -> Result<IrfResult> {
    let mut out = girf_run(
        spec,
        scheme,
        &[shock_size],
        horizon,
        config,
        rng,
        Conditioning::SampleAverage,
    )?;
    Ok(out.pop().expect("one result per shock size"))
}

/// As [`girf_compute`], for several shock sizes over shared fits.
///
/// The size enters only when the shocked point is formed, never the
/// chains, so every fit, thinned pick, and posterior draw is reused across
/// sizes and each returned element is identical to a standalone
/// [`girf_compute`] run at that size. Use this for paired positive and
/// negative shocks, where refitting per sign would double the cost for no
/// change in output.
pub fn girf_compute_multi(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    shock_sizes: &[f64],
    horizon: usize,
    config: &GirfConfig,
    rng: &RngStream,
) -> Result<Vec<IrfResult>> {
    girf_run(
        spec,
        scheme,
        shock_sizes,
        horizon,
        config,
        rng,
        Conditioning::SampleAverage,
    )
}

/// Generalized impulse responses conditional on a state: conditioning
/// points are sampled uniformly from design rows whose state variable
/// passes the filter, w-block included, so the responses average over the
/// selected periods rather than the whole sample.
#[allow(clippy::too_many_arguments)]
pub fn girf_state_conditional(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    filter: &StateFilter,
    shock_size: f64,
    horizon: usize,
    n_condition_draws: usize,
    config: &GirfConfig,
    rng: &RngStream,
) -> Result<IrfResult> {
    let mut out = girf_state_conditional_multi(
        spec,
        scheme,
        filter,
        &[shock_size],
        horizon,
        n_condition_draws,
        config,
        rng,
    )?;
    Ok(out.pop().expect("one result per shock size"))
}

/// As [`girf_state_conditional`], for several shock sizes over shared
/// fits and conditioning draws (same reuse guarantee as
/// [`girf_compute_multi`]).
#[allow(clippy::too_many_arguments)]
pub fn girf_state_conditional_multi(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    filter: &StateFilter,
    shock_sizes: &[f64],
    horizon: usize,
    n_condition_draws: usize,
    config: &GirfConfig,
    rng: &RngStream,
) -> Result<Vec<IrfResult>> {
    if n_condition_draws == 0 {
        return Err(Error::InvalidParameter {
            name: "n_condition_draws",
            reason: "must be at least 1".into(),
        });
    }
    let threshold = filter.threshold(spec)?;
    let series = spec.series(&filter.variable)?;
    girf_run(
        spec,
        scheme,
        shock_sizes,
        horizon,
        config,
        rng,
        Conditioning::SampledRows {
            filter,
            series,
            threshold,
            n_condition_draws,
        },
    )
}

fn girf_run(
    spec: &GirfSpec,
    scheme: &IdentificationScheme,
    shock_sizes: &[f64],
    horizon: usize,
    config: &GirfConfig,
    rng: &RngStream,
    conditioning: Conditioning,
) -> Result<Vec<IrfResult>> {
    config.validate()?;
    if shock_sizes.is_empty() {
        return Err(Error::InvalidParameter {
            name: "shock_sizes",
            reason: "at least one shock size is required".into(),
        });
    }
    if spec.responses.is_empty() {
        return Err(Error::InvalidParameter {
            name: "responses",
            reason: "at least one response variable is required".into(),
        });
    }
    if matches!(scheme, IdentificationScheme::ImpulseVector { .. }) {
        for r in &spec.responses {
            if !spec.state.contains(r) {
                return Err(Error::InvalidParameter {
                    name: "responses",
                    reason: format!(
                        "`{r}` is not a state variable, so it has no impulse-vector entry"
                    ),
                });
            }
        }
    }

    let d_draws = config.n_residual_draws;
    let n_condition = match &conditioning {
        Conditioning::SampleAverage => 1,
        Conditioning::SampledRows {
            n_condition_draws, ..
        } => *n_condition_draws,
    };
    let n_stored = d_draws * n_condition;
    let n_sizes = shock_sizes.len();

    // Outer index: shock size. The fits below are shared across sizes.
    let mut y0 =
        vec![vec![vec![vec![0.0; n_stored]; horizon + 1]; spec.responses.len()]; n_sizes];
    let mut y1 =
        vec![vec![vec![vec![0.0; n_stored]; horizon + 1]; spec.responses.len()]; n_sizes];

    for (vi, response) in spec.responses.iter().enumerate() {
        // The impulse-vector entry index is the position in the state
        // block, not the response list.
        let state_index = spec
            .state
            .iter()
            .position(|s| s == response)
            .unwrap_or(0);
        let problem = assemble_problem(spec, scheme, response, state_index)?;
        let rng_v = rng.derive(&[tags::VARIABLE, vi as u64]);

        // Horizon 0: one full fit; its residual draws feed every later
        // horizon.
        let mut rng_h0 = rng_v.derive(&[tags::HORIZON, 0]);
        let (model0, resid0) = fit_h0(&problem.dataset, &config.bart, &mut rng_h0)?;
        let picks = thinned_indices(model0.posterior.draws.len(), d_draws);

        for h in 0..=horizon {
            let mut y0_h: Vec<&mut [f64]> =
                y0.iter_mut().map(|s| s[vi][h].as_mut_slice()).collect();
            let mut y1_h: Vec<&mut [f64]> =
                y1.iter_mut().map(|s| s[vi][h].as_mut_slice()).collect();
            let n_w = w_count(spec.residual_convention, h);
            if n_w == 0 {
                // Shared fit: horizon 0 reuses the residual fit; an
                // augmentation-free later horizon gets one fit of its own.
                let model;
                let model_ref = if h == 0 {
                    &model0
                } else {
                    let mut rng_h = rng_v.derive(&[tags::HORIZON, h as u64]);
                    model = fit_horizon(&problem.dataset, h, None, &config.bart, &mut rng_h)?;
                    &model
                };
                evaluate_shared(
                    model_ref,
                    &problem,
                    shock_sizes,
                    h,
                    &picks,
                    n_condition,
                    &conditioning,
                    &rng_v,
                    &mut y0_h,
                    &mut y1_h,
                )?;
            } else {
                for (d, &pick) in picks.iter().enumerate() {
                    let mut rng_hd =
                        rng_v.derive(&[tags::HORIZON, h as u64, tags::GIRF_DRAW, d as u64]);
                    let model = fit_horizon(
                        &problem.dataset,
                        h,
                        Some(&resid0.draws[pick]),
                        &config.refit,
                        &mut rng_hd,
                    )?;
                    // "One posterior draw from the model": uniform over
                    // the retained sweeps of this refit.
                    let draw = rng_hd.index(model.posterior.draws.len());
                    evaluate_one(
                        &model,
                        &problem,
                        shock_sizes,
                        draw,
                        d,
                        n_condition,
                        &conditioning,
                        &rng_v,
                        h,
                        &mut y0_h,
                        &mut y1_h,
                    )?;
                }
            }
        }
    }

    Ok(shock_sizes
        .iter()
        .zip(y0.into_iter().zip(y1))
        .map(|(&size, (y0_s, y1_s))| {
            IrfResult::from_draws(
                spec.responses.clone(),
                size,
                y0_s,
                y1_s,
                &config.quantiles,
            )
        })
        .collect())
}

fn w_count(convention: ResidualConvention, h: usize) -> usize {
    match convention {
        ResidualConvention::Leads => h.saturating_sub(1),
        ResidualConvention::Lags => h,
    }
}

/// Evaluate a shared (augmentation-free) horizon fit at every stored draw
/// slot: thinned posterior draws crossed with conditioning draws. One
/// baseline prediction serves every shock size.
#[allow(clippy::too_many_arguments)]
fn evaluate_shared(
    model: &HorizonModel,
    problem: &VariableProblem,
    shock_sizes: &[f64],
    h: usize,
    picks: &[usize],
    n_condition: usize,
    conditioning: &Conditioning,
    rng_v: &RngStream,
    y0: &mut [&mut [f64]],
    y1: &mut [&mut [f64]],
) -> Result<()> {
    // Impact horizon under an impulse vector is definitional: the
    // response moves by its scaled impact entry, exactly.
    if h == 0 {
        if let Some(di) = problem.impact_entry {
            for (si, &size) in shock_sizes.iter().enumerate() {
                for slot in 0..y0[si].len() {
                    y0[si][slot] = 0.0;
                    y1[si][slot] = size * di;
                }
            }
            return Ok(());
        }
    }
    let means = model.design.x.column_means();
    let rows = conditioning.eligible_rows(model)?;
    let impact_cols = problem.impact_columns(&model.design.x)?;
    for (d, &pick) in picks.iter().enumerate() {
        for c in 0..n_condition {
            let slot = d * n_condition + c;
            let base = conditioning_row(model, &means, rows.as_deref(), rng_v, h, d, c);
            let base_pred = model.posterior.predict(&base, pick)?;
            for (si, &size) in shock_sizes.iter().enumerate() {
                let shocked = problem.shocked_row(&base, size, impact_cols.as_deref());
                y0[si][slot] = base_pred;
                y1[si][slot] = model.posterior.predict(&shocked, pick)?;
            }
        }
    }
    Ok(())
}

/// Evaluate one refit (one residual draw) at its conditioning draws.
#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    model: &HorizonModel,
    problem: &VariableProblem,
    shock_sizes: &[f64],
    draw: usize,
    d: usize,
    n_condition: usize,
    conditioning: &Conditioning,
    rng_v: &RngStream,
    h: usize,
    y0: &mut [&mut [f64]],
    y1: &mut [&mut [f64]],
) -> Result<()> {
    let means = model.design.x.column_means();
    let rows = conditioning.eligible_rows(model)?;
    let impact_cols = problem.impact_columns(&model.design.x)?;
    for c in 0..n_condition {
        let slot = d * n_condition + c;
        let base = conditioning_row(model, &means, rows.as_deref(), rng_v, h, d, c);
        let base_pred = model.posterior.predict(&base, draw)?;
        for (si, &size) in shock_sizes.iter().enumerate() {
            let shocked = problem.shocked_row(&base, size, impact_cols.as_deref());
            y0[si][slot] = base_pred;
            y1[si][slot] = model.posterior.predict(&shocked, draw)?;
        }
    }
    Ok(())
}

/// The conditioning row for stored slot (d, c): the design means, or a
/// uniformly sampled eligible design row (w-block included, so the
/// augmentation values are drawn jointly with the state).
fn conditioning_row(
    model: &HorizonModel,
    means: &[f64],
    rows: Option<&[usize]>,
    rng_v: &RngStream,
    h: usize,
    d: usize,
    c: usize,
) -> Vec<f64> {
    match rows {
        None => means.to_vec(),
        Some(rows) => {
            let mut rng_c = rng_v.derive(&[
                tags::HORIZON,
                h as u64,
                tags::GIRF_DRAW,
                d as u64,
                tags::CONDITION,
                c as u64,
            ]);
            let k = rows[rng_c.index(rows.len())];
            model.design.x.row(k).to_vec()
        }
    }
}

/// A predicate on one state variable, used to restrict conditioning points
/// to periods of interest (recessions, low-rate regimes, ...).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateFilter {
    /// Panel variable whose value defines the state.
    pub variable: String,
    pub predicate: StatePredicate,
}

/// The filter's acceptance rule. Percentile forms compute their cutoff
/// from the variable's full observed series; value forms compare also
/// directly.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum StatePredicate {
    /// Strictly below the q-th percentile of the series (q in [0, 1]).
    BelowPercentile(f64),
    /// At or above the q-th percentile of the series.
    AtOrAbovePercentile(f64),
    /// Strictly below a fixed value.
    Below(f64),
    /// At or above a fixed value.
    AtOrAbove(f64),
}

impl StateFilter {
    /// Resolve the predicate to a numeric cutoff. Percentile cutoffs use
    /// the floor(q·T)-th order statistic, so "below the 0.2 percentile" on
    /// a monotone series selects exactly the first fifth of periods.
    pub fn threshold(&self, spec: &GirfSpec) -> Result<f64> {
        let series = spec.series(&self.variable)?;
        match self.predicate {
            StatePredicate::Below(v) | StatePredicate::AtOrAbove(v) => Ok(v),
            StatePredicate::BelowPercentile(q) | StatePredicate::AtOrAbovePercentile(q) => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidParameter {
                        name: "predicate",
                        reason: format!("percentile {q} is outside [0, 1]"),
                    });
                }
                let mut sorted = series.to_vec();
                sorted.sort_unstable_by(f64::total_cmp);
                let idx = ((q * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
                Ok(sorted[idx])
            }
        }
    }

    fn accepts(&self, value: f64, threshold: f64) -> bool {
        match self.predicate {
            StatePredicate::Below(_) | StatePredicate::BelowPercentile(_) => value < threshold,
            StatePredicate::AtOrAbove(_) | StatePredicate::AtOrAbovePercentile(_) => {
                value >= threshold
            }
        }
    }

    /// Design rows whose period passes the filter. The state variable is
    /// read at each row's decision date `t`.
    fn matching_rows(
        &self,
        model: &HorizonModel,
        series: &[f64],
        threshold: f64,
    ) -> Result<Vec<usize>> {
        let rows: Vec<usize> = model
            .design
            .t_index
            .iter()
            .enumerate()
            .filter(|(_, &t)| self.accepts(series[t], threshold))
            .map(|(k, _)| k)
            .collect();
        if rows.is_empty() {
            return Err(Error::EmptyStateFilter(format!(
                "{} {:?}",
                self.variable, self.predicate
            )));
        }
        Ok(rows)
    }
}

/// Per-horizon draws of the ratio of cumulated responses (the standard
/// multiplier statistic): Σ_{s≤h} ψ_y over Σ_{s≤h} ψ_g, drawwise on
/// paired draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierResult {
    pub horizons: Vec<usize>,
    /// `draws[h]`: included ratio draws at horizon h.
    pub draws: Vec<Vec<f64>>,
    /// `excluded[h]`: draws dropped at horizon h because the cumulated
    /// denominator was within machine zero of 0.
    pub excluded: Vec<usize>,
    pub quantiles: Vec<f64>,
    /// `bands[h][q]`
    pub bands: Vec<Vec<f64>>,
}

/// Drawwise cumulative-multiplier ratios. Uses the first variable of each
/// result (restrict with [`IrfResult::select`] first when several are
/// present); draws must be paired, i.e. produced by the same run.
pub fn cumulative_multiplier(irf_y: &IrfResult, irf_g: &IrfResult) -> Result<MultiplierResult> {
    if irf_y.horizons != irf_g.horizons {
        return Err(Error::Dimension(format!(
            "numerator covers {} horizons, denominator {}",
            irf_y.horizons.len(),
            irf_g.horizons.len()
        )));
    }
    let py = &irf_y.psi[0];
    let pg = &irf_g.psi[0];
    let n_draws = py.first().map(|d| d.len()).unwrap_or(0);
    if pg.first().map(|d| d.len()).unwrap_or(0) != n_draws {
        return Err(Error::Dimension(
            "paired draws required: the two results store different draw counts".into(),
        ));
    }

    let n_h = irf_y.horizons.len();
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(n_h);
    let mut excluded = vec![0usize; n_h];
    let mut cum_y = vec![0.0f64; n_draws];
    let mut cum_g = vec![0.0f64; n_draws];
    let mut scale_g = vec![0.0f64; n_draws];
    for h in 0..n_h {
        let mut at_h = Vec::with_capacity(n_draws);
        for d in 0..n_draws {
            cum_y[d] += py[h][d];
            cum_g[d] += pg[h][d];
            scale_g[d] += pg[h][d].abs();
            // Machine zero relative to the terms that were summed: exact
            // zeros and full cancellations are both caught.
            if cum_g[d].abs() <= f64::EPSILON * scale_g[d] {
                excluded[h] += 1;
            } else {
                at_h.push(cum_y[d] / cum_g[d]);
            }
        }
        draws.push(at_h);
    }

    let quantiles = irf_y.summary.quantiles.clone();
    let bands = draws
        .iter()
        .map(|d| {
            let mut sorted = d.clone();
            sorted.sort_unstable_by(f64::total_cmp);
            quantiles.iter().map(|&q| quantile_sorted(&sorted, q)).collect()
        })
        .collect();
    Ok(MultiplierResult {
        horizons: irf_y.horizons.clone(),
        draws,
        excluded,
        quantiles,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::var_fit;

    fn tiny_config() -> GirfConfig {
        let bart = BartConfig {
            n_trees: 5,
            n_draws: 20,
            n_burn: 10,
            ..BartConfig::default()
        };
        GirfConfig {
            refit: bart.clone(),
            bart,
            n_residual_draws: 3,
            quantiles: vec![0.25, 0.5, 0.75],
        }
    }

    fn small_panel(t: usize, seed: u64) -> GirfSpec {
        let mut rng = RngStream::from_seed(seed);
        let eps: Vec<f64> = (0..t).map(|_| rng.standard_normal()).collect();
        let mut y = vec![0.0f64; t];
        let mut g = vec![0.0f64; t];
        for i in 1..t {
            y[i] = 0.6 * y[i - 1] + eps[i];
            g[i] = 0.3 * g[i - 1] + 0.5 * eps[i] + 0.2 * rng.standard_normal();
        }
        GirfSpec {
            panel: vec![
                ("y".into(), y),
                ("g".into(), g),
                ("eps".into(), eps),
            ],
            state: vec!["y".into(), "g".into()],
            responses: vec!["y".into()],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
        }
    }

    #[test]
    fn multi_size_runs_reproduce_standalone_runs_bitwise() {
        let spec = small_panel(70, 12);
        let scheme = IdentificationScheme::ShockSeries {
            shock: "eps".into(),
        };
        let config = tiny_config();
        let rng = RngStream::from_seed(5);
        let pair =
            girf_compute_multi(&spec, &scheme, &[1.0, -1.0], 2, &config, &rng).unwrap();
        let plus = girf_compute(&spec, &scheme, 1.0, 2, &config, &rng).unwrap();
        let minus = girf_compute(&spec, &scheme, -1.0, 2, &config, &rng).unwrap();
        assert_eq!(pair[0].psi, plus.psi);
        assert_eq!(pair[0].y0, plus.y0);
        assert_eq!(pair[1].psi, minus.psi);
        assert_eq!(pair[1].y1, minus.y1);
        // Shared fits mean shared baselines across the pair.
        assert_eq!(pair[0].y0, pair[1].y0);
        // And the impulse-vector scheme scales its impact entry per size.
        let iv = IdentificationScheme::ImpulseVector {
            var_lags: 1,
            shock_index: 0,
        };
        let spec2 = GirfSpec {
            responses: vec!["y".into(), "g".into()],
            ..small_panel(70, 12)
        };
        let both = girf_compute_multi(&spec2, &iv, &[2.0, -0.5], 2, &config, &rng).unwrap();
        let single = girf_compute(&spec2, &iv, 2.0, 2, &config, &rng).unwrap();
        assert_eq!(both[0].psi, single.psi);
        for v in 0..2 {
            for slot in 0..both[0].psi[v][0].len() {
                assert_eq!(both[0].psi[v][0][slot], -4.0 * both[1].psi[v][0][slot]);
            }
        }
    }

    #[test]
    fn pointwise_median_matches_the_summary_band() {
        let spec = small_panel(70, 3);
        let scheme = IdentificationScheme::ShockSeries {
            shock: "eps".into(),
        };
        let r = girf_compute(&spec, &scheme, 1.0, 2, &tiny_config(), &RngStream::from_seed(8))
            .unwrap();
        let med = r.pointwise_median();
        // 0.5 sits in tiny_config's quantile list at position 1.
        for v in 0..r.variables.len() {
            for (h, &m) in med[v].iter().enumerate() {
                assert_eq!(m, r.summary.bands[v][h][1]);
            }
        }
    }

    #[test]
    fn baseline_point_matches_columnwise_means() {
        let spec = small_panel(60, 4);
        let dataset = LpDataset {
            response: ("y".into(), spec.series("y").unwrap().to_vec()),
            shock: ("eps".into(), spec.series("eps").unwrap().to_vec()),
            contemporaneous: vec![],
            lagged: vec![
                ("y".into(), spec.series("y").unwrap().to_vec()),
                ("g".into(), spec.series("g").unwrap().to_vec()),
            ],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
            time: None,
        };
        // Horizon 2 under leads has one augmentation column.
        let resid: Vec<f64> = (0..59).map(|k| (k as f64) * 0.01 - 0.3).collect();
        let point = baseline_point(&dataset, 2, Some(&resid)).unwrap();
        assert_eq!(point.w.len(), 1);
        let design = build_design(&dataset, 2, Some(&resid)).unwrap();
        let row = point.row();
        assert_eq!(row.len(), design.x.cols());
        for j in 0..design.x.cols() {
            let mean =
                (0..design.x.rows()).map(|i| design.x.get(i, j)).sum::<f64>()
                    / design.x.rows() as f64;
            assert!((row[j] - mean).abs() < 1e-12, "column {j}");
        }
    }

    #[test]
    fn null_shock_gives_exactly_zero_responses() {
        let spec = small_panel(50, 9);
        let scheme = IdentificationScheme::ShockSeries {
            shock: "eps".into(),
        };
        let irf = girf_compute(
            &spec,
            &scheme,
            0.0,
            3,
            &tiny_config(),
            &RngStream::from_seed(11),
        )
        .unwrap();
        for v in &irf.psi {
            for h in v {
                for &d in h {
                    assert_eq!(d, 0.0, "a zero shock must move nothing");
                }
            }
        }
        for (v0, v1) in irf.y0.iter().zip(&irf.y1) {
            for (h0, h1) in v0.iter().zip(v1) {
                assert_eq!(h0, h1);
            }
        }
    }

    #[test]
    fn impulse_vector_impact_is_the_cholesky_column() {
        let spec = {
            let mut s = small_panel(80, 21);
            s.responses = vec!["y".into(), "g".into()];
            s
        };
        let scheme = IdentificationScheme::ImpulseVector {
            var_lags: 1,
            shock_index: 0,
        };
        let size = 2.5;
        let irf = girf_compute(
            &spec,
            &scheme,
            size,
            1,
            &tiny_config(),
            &RngStream::from_seed(7),
        )
        .unwrap();

        // Recompute the impact vector the same way the estimator must.
        let state = DataMatrix::from_columns(vec![
            ("y".into(), spec.series("y").unwrap().to_vec()),
            ("g".into(), spec.series("g").unwrap().to_vec()),
        ])
        .unwrap();
        let var = var_fit(&state, 1).unwrap();
        let d = var_impulse_vector(&var, 0, size).unwrap();

        for (vi, name) in irf.variables.iter().enumerate() {
            let want = if name == "y" { d[0] } else { d[1] };
            for (slot, &y1) in irf.y1[vi][0].iter().enumerate() {
                assert_eq!(irf.y0[vi][0][slot], 0.0);
                assert_eq!(y1, want, "impact of `{name}` is definitional");
                assert_eq!(irf.psi[vi][0][slot], want);
            }
        }
    }

    #[test]
    fn responses_outside_the_state_are_rejected_for_impulse_vectors() {
        let mut spec = small_panel(60, 3);
        spec.responses = vec!["eps".into()];
        let scheme = IdentificationScheme::ImpulseVector {
            var_lags: 1,
            shock_index: 0,
        };
        let err = girf_compute(
            &spec,
            &scheme,
            1.0,
            1,
            &tiny_config(),
            &RngStream::from_seed(2),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }), "{err:?}");
    }

    #[test]
    fn summary_is_the_exact_mean_and_identity_of_stored_draws() {
        let spec = small_panel(50, 14);
        let scheme = IdentificationScheme::ShockSeries {
            shock: "eps".into(),
        };
        let irf = girf_compute(
            &spec,
            &scheme,
            1.0,
            2,
            &tiny_config(),
            &RngStream::from_seed(5),
        )
        .unwrap();
        for (v, var_draws) in irf.psi.iter().enumerate() {
            for (h, draws) in var_draws.iter().enumerate() {
                let mean = draws.iter().sum::<f64>() / draws.len() as f64;
                assert_eq!(irf.summary.mean[v][h], mean);
                for (d, &psi) in draws.iter().enumerate() {
                    assert_eq!(psi, irf.y1[v][h][d] - irf.y0[v][h][d]);
                }
            }
        }
        // CSV holds one line per stored draw plus the header.
        let csv = irf.to_csv();
        let n_lines = csv.lines().count();
        assert_eq!(n_lines, 1 + irf.psi[0].len() * irf.psi[0][0].len());
        assert!(csv.starts_with("variable,horizon,draw,psi\n"));
        // Summary JSON parses and covers every (variable, horizon).
        let json: serde_json::Value =
            serde_json::from_str(&irf.summary_json().unwrap()).unwrap();
        assert_eq!(
            json["entries"].as_array().unwrap().len(),
            irf.variables.len() * irf.horizons.len()
        );
    }

    #[test]
    fn quantile_interpolation_matches_hand_values() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&sorted, 0.0), 1.0);
        assert_eq!(quantile_sorted(&sorted, 1.0), 4.0);
        assert_eq!(quantile_sorted(&sorted, 0.5), 2.5);
        assert_eq!(quantile_sorted(&sorted, 0.25), 1.75);
    }

    fn hand_irf(psi: Vec<Vec<Vec<f64>>>) -> IrfResult {
        let y1 = psi.clone();
        let y0: Vec<Vec<Vec<f64>>> = psi
            .iter()
            .map(|v| v.iter().map(|h| vec![0.0; h.len()]).collect())
            .collect();
        IrfResult::from_draws(vec!["v".into()], 1.0, y0, y1, &[0.5])
    }

    #[test]
    fn multiplier_of_identical_paths_is_one() {
        let irf = hand_irf(vec![vec![vec![0.4, 0.7], vec![0.2, -0.1], vec![0.05, 0.3]]]);
        let m = cumulative_multiplier(&irf, &irf).unwrap();
        assert_eq!(m.horizons, vec![0, 1, 2]);
        for (h, draws) in m.draws.iter().enumerate() {
            assert_eq!(m.excluded[h], 0);
            for &r in draws {
                assert!((r - 1.0).abs() < 1e-15, "h {h}: {r}");
            }
        }
    }

    #[test]
    fn multiplier_scales_with_the_numerator() {
        let base = vec![vec![vec![0.4, 0.7], vec![0.2, -0.1]]];
        let doubled: Vec<Vec<Vec<f64>>> = base
            .iter()
            .map(|v| v.iter().map(|h| h.iter().map(|x| 2.0 * x).collect()).collect())
            .collect();
        let m = cumulative_multiplier(&hand_irf(doubled), &hand_irf(base)).unwrap();
        for draws in &m.draws {
            for &r in draws {
                assert!((r - 2.0).abs() < 1e-15, "{r}");
            }
        }
    }

    #[test]
    fn multiplier_matches_a_direct_recomputation() {
        let py = vec![vec![vec![0.5, 0.2], vec![0.1, 0.4], vec![-0.3, 0.25]]];
        let pg = vec![vec![vec![1.0, 0.8], vec![0.5, -0.2], vec![0.25, 0.1]]];
        let m = cumulative_multiplier(&hand_irf(py.clone()), &hand_irf(pg.clone())).unwrap();
        for h in 0..3 {
            for d in 0..2 {
                let num: f64 = (0..=h).map(|s| py[0][s][d]).sum();
                let den: f64 = (0..=h).map(|s| pg[0][s][d]).sum();
                assert!((m.draws[h][d] - num / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multiplier_excludes_zero_denominators() {
        // Draw 0's denominator cancels exactly at h = 1 (0.5 - 0.5).
        let py = vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]]];
        let pg = vec![vec![vec![0.5, 1.0], vec![-0.5, 1.0]]];
        let m = cumulative_multiplier(&hand_irf(py), &hand_irf(pg)).unwrap();
        assert_eq!(m.excluded, vec![0, 1]);
        assert_eq!(m.draws[1].len(), 1);
        assert!((m.draws[1][0] - 2.0 / 2.0).abs() < 1e-15);
        // An all-zero denominator path is excluded everywhere.
        let pg0 = vec![vec![vec![0.0, 1.0], vec![0.0, 1.0]]];
        let py0 = vec![vec![vec![1.0, 1.0], vec![1.0, 1.0]]];
        let m0 = cumulative_multiplier(&hand_irf(py0), &hand_irf(pg0)).unwrap();
        assert_eq!(m0.excluded, vec![1, 1]);
    }

    #[test]
    fn percentile_threshold_selects_the_first_fifth_of_a_monotone_series() {
        let t = 100;
        let spec = GirfSpec {
            panel: vec![("s".into(), (0..t).map(|i| i as f64).collect())],
            state: vec!["s".into()],
            responses: vec!["s".into()],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
        };
        let filter = StateFilter {
            variable: "s".into(),
            predicate: StatePredicate::BelowPercentile(0.2),
        };
        let cut = filter.threshold(&spec).unwrap();
        assert_eq!(cut, 20.0);
        let accepted: Vec<f64> = (0..t)
            .map(|i| i as f64)
            .filter(|&v| filter.accepts(v, cut))
            .collect();
        assert_eq!(accepted.len(), 20);
        assert_eq!(accepted.last(), Some(&19.0));
        // The complement picks up everything else.
        let above = StateFilter {
            variable: "s".into(),
            predicate: StatePredicate::AtOrAbovePercentile(0.2),
        };
        let cut2 = above.threshold(&spec).unwrap();
        let n_above = (0..t)
            .map(|i| i as f64)
            .filter(|&v| above.accepts(v, cut2))
            .count();
        assert_eq!(n_above, 80);
    }

    #[test]
    fn state_conditional_points_come_from_the_filtered_rows() {
        let spec = small_panel(60, 33);
        let scheme = IdentificationScheme::ShockSeries {
            shock: "eps".into(),
        };
        let filter = StateFilter {
            variable: "y".into(),
            predicate: StatePredicate::BelowPercentile(0.5),
        };
        let irf = girf_state_conditional(
            &spec,
            &scheme,
            &filter,
            0.0,
            1,
            4,
            &tiny_config(),
            &RngStream::from_seed(17),
        )
        .unwrap();
        // Stored draw count is D x C.
        assert_eq!(irf.psi[0][0].len(), 3 * 4);
        // A zero shock stays exactly null under conditioning too.
        for h in &irf.psi[0] {
            for &d in h {
                assert_eq!(d, 0.0);
            }
        }
        // An impossible filter errors with the dedicated variant.
        let bad = StateFilter {
            variable: "y".into(),
            predicate: StatePredicate::Below(f64::MIN),
        };
        let err = girf_state_conditional(
            &spec,
            &scheme,
            &bad,
            1.0,
            1,
            2,
            &tiny_config(),
            &RngStream::from_seed(18),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyStateFilter(_)), "{err:?}");
    }

    #[test]
    fn config_validation_rejects_bad_draw_counts() {
        let mut config = tiny_config();
        config.n_residual_draws = 0;
        assert!(config.validate().is_err());
        config.n_residual_draws = 10_000;
        assert!(config.validate().is_err());
        config.n_residual_draws = 3;
        config.quantiles = vec![1.5];
        assert!(config.validate().is_err());
    }

    #[test]
    fn thinning_spreads_evenly_and_in_range() {
        assert_eq!(thinned_indices(100, 4), vec![0, 25, 50, 75]);
        assert_eq!(thinned_indices(5, 5), vec![0, 1, 2, 3, 4]);
        let picks = thinned_indices(150, 8);
        assert!(picks.iter().all(|&p| p < 150));
        assert!(picks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn select_restricts_to_one_variable() {
        let psi = vec![
            vec![vec![1.0, 2.0]],
            vec![vec![3.0, 4.0]],
        ];
        let y1 = psi.clone();
        let y0: Vec<Vec<Vec<f64>>> = psi
            .iter()
            .map(|v| v.iter().map(|h| vec![0.0; h.len()]).collect())
            .collect();
        let irf =
            IrfResult::from_draws(vec!["a".into(), "b".into()], 1.0, y0, y1, &[0.5]);
        let b = irf.select("b").unwrap();
        assert_eq!(b.variables, vec!["b".to_string()]);
        assert_eq!(b.psi, vec![vec![vec![3.0, 4.0]]]);
        assert!(irf.select("zzz").is_err());
    }
}
