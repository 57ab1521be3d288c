//! Per-horizon regression panels.
//!
//! A local projection regresses the response `h` periods ahead on covariates
//! dated `t`: the shock column, contemporaneous controls, lagged controls,
//! and - for `h >= 2` - residuals from the horizon-0 fit of the same target,
//! which soak up the moving-average structure the lead of the response
//! induces. One usable row exists for every `t` whose leads and lags all lie
//! inside the sample; nothing is imputed.
//!
//! Residual columns are dated by the `leads` convention, `e_{t+1} ..
//! e_{t+h-1}` (matching the order of the moving-average part). The `lags`
//! convention, `e_t .. e_{t-h+1}`, is available as a switch; it costs extra
//! rows at the start of the window.

use crate::bart::{bart_fit, BartConfig, BartPosterior};
use crate::linalg::{self, OlsFit};
use crate::mat::DataMatrix;
use crate::rng::RngStream;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// How residual-augmentation columns are dated relative to the regression
/// row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ResidualConvention {
    /// `e_{t+1} .. e_{t+h-1}`: h-1 columns, none at h = 0 or 1.
    #[default]
    Leads,
    /// `e_t .. e_{t-h+1}`: h columns, none at h = 0.
    Lags,
}

/// Aligned series for one local-projection target.
#[derive(Debug, Clone)]
pub struct LpDataset {
    pub response: (String, Vec<f64>),
    pub shock: (String, Vec<f64>),
    /// Controls entering dated `t`.
    pub contemporaneous: Vec<(String, Vec<f64>)>,
    /// Variables entering at lags `1..=lags`.
    pub lagged: Vec<(String, Vec<f64>)>,
    pub lags: usize,
    pub residual_convention: ResidualConvention,
    /// Nominal period labels; purely descriptive. Alignment never reads
    /// them.
    pub time: Option<Vec<i64>>,
}

impl LpDataset {
    /// Check the length and finiteness invariants; returns the sample size.
    pub fn validate(&self) -> Result<usize> {
        let t = self.response.1.len();
        let check = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != t {
                return Err(Error::Dimension(format!(
                    "series `{name}` has {} rows, `{}` has {t}",
                    v.len(),
                    self.response.0
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!(
                    "series `{name}` contains non-finite values"
                )));
            }
            Ok(())
        };
        check(&self.shock.0, &self.shock.1)?;
        for (n, v) in &self.contemporaneous {
            check(n, v)?;
        }
        for (n, v) in &self.lagged {
            check(n, v)?;
        }
        check(&self.response.0, &self.response.1)?;
        if self.lags == 0 {
            return Err(Error::InvalidParameter {
                name: "lags",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(time) = &self.time {
            if time.len() != t {
                return Err(Error::Dimension(format!(
                    "time index has {} entries, series have {t}",
                    time.len()
                )));
            }
        }
        Ok(t)
    }
}

/// One horizon's regression panel: covariates dated `t`, response at
/// `t + h`.
#[derive(Debug, Clone)]
pub struct HorizonDesign {
    pub horizon: usize,
    pub x: DataMatrix,
    pub y: Vec<f64>,
    /// The `t` (0-based position in the source series) of each row.
    pub t_index: Vec<usize>,
}

/// Horizon-0 residuals per retained posterior draw, original units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H0ResidualDraws {
    /// `draws[d][k]` is the residual at row `k` of the horizon-0 window
    /// under retained draw `d`.
    pub draws: Vec<Vec<f64>>,
    /// Row `k` corresponds to period `t_index[k]`; residual for period `t`
    /// lives at index `t - lags`.
    pub t_index: Vec<usize>,
}

/// A fitted horizon: the posterior tagged with its `h` and the panel it was
/// fit on.
#[derive(Debug, Clone)]
pub struct HorizonModel {
    pub horizon: usize,
    pub posterior: BartPosterior,
    pub design: HorizonDesign,
}

impl HorizonModel {
    /// Chain-behavior summary (acceptance counts, variance trace) as JSON,
    /// for diagnostics dumps.
    pub fn diagnostics_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.posterior.diagnostics)
            .map_err(|e| Error::Data(e.to_string()))
    }
}

/// Number of residual-augmentation columns at horizon `h`.
fn w_columns(convention: ResidualConvention, h: usize) -> usize {
    match convention {
        ResidualConvention::Leads => h.saturating_sub(1),
        ResidualConvention::Lags => {
            if h == 0 {
                0
            } else {
                h
            }
        }
    }
}

/// Assemble the horizon-`h` panel. `residuals` is the horizon-0 residual
/// vector of one posterior draw (index `t - lags`); it may be omitted
/// whenever the horizon needs no augmentation columns.
pub fn build_design(
    dataset: &LpDataset,
    h: usize,
    residuals: Option<&[f64]>,
) -> Result<HorizonDesign> {
    let t_len = dataset.validate()?;
    let lags = dataset.lags;
    if t_len < lags + h + 1 {
        return Err(Error::SampleTooShort {
            horizon: h,
            lags,
            rows: 0,
            need: 1,
        });
    }

    let n_w = w_columns(dataset.residual_convention, h);
    let resid = if n_w > 0 {
        let r = residuals.ok_or_else(|| {
            Error::Data(format!(
                "horizon {h} needs horizon-0 residuals for its augmentation columns"
            ))
        })?;
        if r.len() != t_len - lags {
            return Err(Error::Dimension(format!(
                "residual vector has {} entries, horizon-0 window has {}",
                r.len(),
                t_len - lags
            )));
        }
        Some(r)
    } else {
        None
    };

    // Usable t: all lags, the h-step lead of the response, and every
    // residual column must exist.
    let t_first = match dataset.residual_convention {
        ResidualConvention::Leads => lags,
        // e_{t-h+1} needs t-h+1 >= lags.
        ResidualConvention::Lags => lags + n_w.saturating_sub(1),
    };
    let t_last = t_len - 1 - h;
    if t_first > t_last {
        return Err(Error::SampleTooShort {
            horizon: h,
            lags,
            rows: 0,
            need: 1,
        });
    }
    let t_index: Vec<usize> = (t_first..=t_last).collect();

    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    let pick = |series: &[f64], offset: i64| -> Vec<f64> {
        t_index
            .iter()
            .map(|&t| series[(t as i64 + offset) as usize])
            .collect()
    };
    columns.push((dataset.shock.0.clone(), pick(&dataset.shock.1, 0)));
    for (name, v) in &dataset.contemporaneous {
        columns.push((name.clone(), pick(v, 0)));
    }
    for l in 1..=lags {
        for (name, v) in &dataset.lagged {
            columns.push((format!("{name}.l{l}"), pick(v, -(l as i64))));
        }
    }
    if let Some(r) = resid {
        match dataset.residual_convention {
            ResidualConvention::Leads => {
                for j in 1..=n_w {
                    let col = t_index.iter().map(|&t| r[t + j - lags]).collect();
                    columns.push((format!("eps.lead{j}"), col));
                }
            }
            ResidualConvention::Lags => {
                for j in 0..n_w {
                    let col = t_index.iter().map(|&t| r[t - j - lags]).collect();
                    columns.push((format!("eps.lag{j}"), col));
                }
            }
        }
    }

    let y: Vec<f64> = t_index.iter().map(|&t| dataset.response.1[t + h]).collect();
    Ok(HorizonDesign {
        horizon: h,
        x: DataMatrix::from_columns(columns)?,
        y,
        t_index,
    })
}

/// Fit horizon 0 and pull one residual vector per retained draw, original
/// units.
pub fn fit_h0(
    dataset: &LpDataset,
    config: &BartConfig,
    rng: &mut RngStream,
) -> Result<(HorizonModel, H0ResidualDraws)> {
    let design = build_design(dataset, 0, None)?;
    let posterior = bart_fit(&design.x, &design.y, config, rng)?;
    let n = design.y.len();
    let mut draws = Vec::with_capacity(posterior.draws.len());
    for d in 0..posterior.draws.len() {
        let mut r = Vec::with_capacity(n);
        for k in 0..n {
            r.push(design.y[k] - posterior.predict(design.x.row(k), d)?);
        }
        draws.push(r);
    }
    let t_index = design.t_index.clone();
    Ok((
        HorizonModel {
            horizon: 0,
            posterior,
            design,
        },
        H0ResidualDraws { draws, t_index },
    ))
}

/// Fit one horizon given a residual draw for the augmentation columns.
pub fn fit_horizon(
    dataset: &LpDataset,
    h: usize,
    residuals: Option<&[f64]>,
    config: &BartConfig,
    rng: &mut RngStream,
) -> Result<HorizonModel> {
    let design = build_design(dataset, h, residuals)?;
    let posterior = bart_fit(&design.x, &design.y, config, rng)?;
    Ok(HorizonModel {
        horizon: h,
        posterior,
        design,
    })
}

/// The linear benchmark at one horizon.
#[derive(Debug, Clone)]
pub struct LinearLpFit {
    pub horizon: usize,
    /// Coefficient on the shock column.
    pub coefficient: f64,
    /// Classical standard error of that coefficient.
    pub std_error: f64,
    pub ols: OlsFit,
    /// Design labels, intercept first; `ols` coefficients align with this.
    pub labels: Vec<String>,
}

/// Ordinary linear local projection: intercept plus the same covariates the
/// flexible fit sees, no residual augmentation. The impulse response at `h`
/// is `coefficient` times the shock size.
pub fn linear_lp_fit(dataset: &LpDataset, h: usize) -> Result<LinearLpFit> {
    let design = build_design_without_w(dataset, h)?;
    let n = design.y.len();
    let mut columns: Vec<(String, Vec<f64>)> = vec![("const".into(), vec![1.0; n])];
    for (j, label) in design.x.labels().iter().enumerate() {
        columns.push((label.clone(), design.x.column(j)));
    }
    let labels: Vec<String> = columns.iter().map(|(l, _)| l.clone()).collect();
    let x = DataMatrix::from_columns(columns)?;
    let ols = linalg::ols(&x, &design.y)?;
    Ok(LinearLpFit {
        horizon: h,
        coefficient: ols.coefficients[1],
        std_error: ols.std_errors[1],
        ols,
        labels,
    })
}

/// The panel of `build_design` with the W block forced empty (and the full
/// leads-convention window), for fits that never use augmentation.
fn build_design_without_w(dataset: &LpDataset, h: usize) -> Result<HorizonDesign> {
    let t_len = dataset.validate()?;
    let mut d = dataset.clone();
    d.residual_convention = ResidualConvention::Leads;
    let zeros = vec![0.0; t_len - d.lags];
    let full = build_design(&d, h, Some(&zeros))?;
    let columns = full
        .x
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.starts_with("eps."))
        .map(|(j, l)| (l.clone(), full.x.column(j)))
        .collect();
    Ok(HorizonDesign {
        horizon: h,
        x: DataMatrix::from_columns(columns)?,
        y: full.y,
        t_index: full.t_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(t: usize) -> LpDataset {
        // Deterministic, structured series so alignment errors are visible.
        let y: Vec<f64> = (0..t).map(|i| i as f64).collect();
        let x: Vec<f64> = (0..t).map(|i| (i as f64) * 10.0).collect();
        let z: Vec<f64> = (0..t).map(|i| (i as f64) * 100.0).collect();
        LpDataset {
            response: ("y".into(), y.clone()),
            shock: ("x".into(), x),
            contemporaneous: vec![("z".into(), z)],
            lagged: vec![("y".into(), y)],
            lags: 2,
            residual_convention: ResidualConvention::Leads,
            time: None,
        }
    }

    #[test]
    fn h0_design_has_no_w_columns() {
        let d = build_design(&ds(20), 0, None).unwrap();
        assert_eq!(d.x.labels(), &["x", "z", "y.l1", "y.l2"]);
        assert_eq!(d.y.len(), 18);
        // Row 0 is t = 2: x = 20, z = 200, y.l1 = 1, y.l2 = 0, y = 2.
        assert_eq!(d.x.row(0), &[20.0, 200.0, 1.0, 0.0]);
        assert_eq!(d.y[0], 2.0);
    }

    #[test]
    fn window_arithmetic_matches_hand_count() {
        let mut dataset = ds(100);
        dataset.lags = 4;
        let d = build_design(&dataset, 5, Some(&vec![0.0; 96])).unwrap();
        assert_eq!(d.y.len(), 91);
        assert_eq!(d.t_index.first(), Some(&4));
        assert_eq!(d.t_index.last(), Some(&94));
    }

    #[test]
    fn leads_convention_aligns_residual_columns() {
        let dataset = ds(12);
        // Residual for period t sits at index t - lags = t - 2.
        let resid: Vec<f64> = (0..10).map(|k| 1000.0 + k as f64).collect();
        let d = build_design(&dataset, 3, Some(&resid)).unwrap();
        let labels = d.x.labels();
        assert_eq!(&labels[labels.len() - 2..], &["eps.lead1", "eps.lead2"]);
        // Row for t: eps.lead1 = resid[t+1-2], eps.lead2 = resid[t+2-2].
        let l1 = d.x.column_index("eps.lead1").unwrap();
        let l2 = d.x.column_index("eps.lead2").unwrap();
        for (k, &t) in d.t_index.iter().enumerate() {
            assert_eq!(d.x.get(k, l1), 1000.0 + (t + 1 - 2) as f64);
            assert_eq!(d.x.get(k, l2), 1000.0 + (t + 2 - 2) as f64);
        }
        // h = 1 needs no residuals under leads.
        let d1 = build_design(&dataset, 1, None).unwrap();
        assert!(d1.x.labels().iter().all(|l| !l.starts_with("eps.")));
    }

    #[test]
    fn lags_convention_dates_residuals_backward_and_shrinks_window() {
        let mut dataset = ds(12);
        dataset.residual_convention = ResidualConvention::Lags;
        let resid: Vec<f64> = (0..10).map(|k| 1000.0 + k as f64).collect();
        // One column e_t at h = 1.
        let d1 = build_design(&dataset, 1, Some(&resid)).unwrap();
        assert!(d1.x.labels().contains(&"eps.lag0".to_string()));
        let d2 = build_design(&dataset, 2, Some(&resid)).unwrap();
        let labels = d2.x.labels();
        assert_eq!(&labels[labels.len() - 2..], &["eps.lag0", "eps.lag1"]);
        // Window starts one period later than leads would (needs e_{t-1}).
        assert_eq!(d2.t_index.first(), Some(&3));
        let l0 = d2.x.column_index("eps.lag0").unwrap();
        let l1 = d2.x.column_index("eps.lag1").unwrap();
        for (k, &t) in d2.t_index.iter().enumerate() {
            assert_eq!(d2.x.get(k, l0), 1000.0 + (t - 2) as f64);
            assert_eq!(d2.x.get(k, l1), 1000.0 + (t - 1 - 2) as f64);
        }
    }

    #[test]
    fn missing_residuals_is_an_error() {
        match build_design(&ds(20), 2, None) {
            Err(Error::Data(msg)) => assert!(msg.contains("residuals"), "{msg}"),
            other => panic!("expected missing-residuals error, got {other:?}"),
        }
    }

    #[test]
    fn oversized_horizon_is_an_error() {
        assert!(matches!(
            build_design(&ds(20), 18, Some(&vec![0.0; 18])),
            Err(Error::SampleTooShort { .. })
        ));
    }

    #[test]
    fn alignment_ignores_the_time_index() {
        let mut a = ds(20);
        a.time = Some((1990..2010).collect());
        let mut b = ds(20);
        b.time = Some((0..20).collect());
        let da = build_design(&a, 2, Some(&vec![0.5; 18])).unwrap();
        let db = build_design(&b, 2, Some(&vec![0.5; 18])).unwrap();
        assert_eq!(da.y, db.y);
        assert_eq!(da.t_index, db.t_index);
        for j in 0..da.x.cols() {
            assert_eq!(da.x.column(j), db.x.column(j));
        }
    }

    fn noisy_dataset(t: usize, seed: u64) -> (LpDataset, f64) {
        // y = 0.8 * x + noise; x is white. Noise sd returned.
        let mut rng = RngStream::from_seed(seed);
        let x: Vec<f64> = (0..t).map(|_| rng.standard_normal()).collect();
        let noise_sd = 0.3;
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.8 * v + noise_sd * rng.standard_normal())
            .collect();
        (
            LpDataset {
                response: ("y".into(), y.clone()),
                shock: ("x".into(), x),
                contemporaneous: vec![],
                lagged: vec![("y".into(), y)],
                lags: 1,
                residual_convention: ResidualConvention::Leads,
                time: None,
            },
            noise_sd,
        )
    }

    #[test]
    fn h0_residual_draws_are_centered_and_distinct() {
        let (dataset, noise_sd) = noisy_dataset(150, 31);
        let config = BartConfig {
            n_trees: 20,
            n_draws: 50,
            n_burn: 100,
            ..BartConfig::default()
        };
        let (model, resid) = fit_h0(&dataset, &config, &mut RngStream::from_seed(9)).unwrap();
        assert_eq!(resid.draws.len(), 50);
        assert_eq!(resid.t_index, model.design.t_index);
        let n = model.design.y.len();
        for draw in &resid.draws {
            assert_eq!(draw.len(), n);
            let mean = draw.iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.1 * noise_sd * 3.0, "residual mean {mean}");
        }
        assert!(
            resid.draws[0] != resid.draws[1],
            "distinct draws should give distinct residuals"
        );
        // Null-ish calibration: residual variance within 15% of the truth
        // is asked of the average draw, not each one.
        let mut var = 0.0;
        for draw in &resid.draws {
            var += draw.iter().map(|r| r * r).sum::<f64>() / n as f64;
        }
        var /= resid.draws.len() as f64;
        assert!(
            (var.sqrt() - noise_sd).abs() < 0.15 * noise_sd,
            "residual sd {} vs noise sd {noise_sd}",
            var.sqrt()
        );
    }

    #[test]
    fn fit_horizon_at_h0_matches_fit_h0() {
        let (dataset, _) = noisy_dataset(80, 5);
        let config = BartConfig {
            n_trees: 5,
            n_draws: 10,
            n_burn: 10,
            ..BartConfig::default()
        };
        let (a, _) = fit_h0(&dataset, &config, &mut RngStream::from_seed(3)).unwrap();
        let b = fit_horizon(&dataset, 0, None, &config, &mut RngStream::from_seed(3)).unwrap();
        assert_eq!(
            a.posterior.to_json().unwrap(),
            b.posterior.to_json().unwrap()
        );
    }

    #[test]
    fn linear_lp_recovers_a_planted_coefficient() {
        let mut rng = RngStream::from_seed(44);
        let t = 400;
        let x: Vec<f64> = (0..t).map(|_| rng.standard_normal()).collect();
        let mut y = vec![0.0; t];
        for i in 0..t - 2 {
            y[i + 2] = 2.0 * x[i] + 0.5 * rng.standard_normal();
        }
        let dataset = LpDataset {
            response: ("y".into(), y.clone()),
            shock: ("x".into(), x),
            contemporaneous: vec![],
            lagged: vec![("y".into(), y)],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
            time: None,
        };
        let fit = linear_lp_fit(&dataset, 2).unwrap();
        assert!(
            (fit.coefficient - 2.0).abs() < 3.0 * fit.std_error,
            "{} +- {}",
            fit.coefficient,
            fit.std_error
        );
        // And an orthogonal horizon: x has no effect at h = 0 here.
        let fit0 = linear_lp_fit(&dataset, 0).unwrap();
        assert!(
            fit0.coefficient.abs() < 3.0 * fit0.std_error + 0.05,
            "{} +- {}",
            fit0.coefficient,
            fit0.std_error
        );
    }

    #[test]
    fn linear_lp_traces_the_ar1_impulse_response() {
        // AR(1) with coefficient 0.5, shock = own innovation: beta_h =
        // 0.5^h.
        let mut rng = RngStream::from_seed(77);
        let t = 5000;
        let mut y = vec![0.0f64; t];
        let mut eps = vec![0.0f64; t];
        for i in 1..t {
            eps[i] = rng.standard_normal();
            y[i] = 0.5 * y[i - 1] + eps[i];
        }
        let dataset = LpDataset {
            response: ("y".into(), y.clone()),
            shock: ("eps".into(), eps),
            contemporaneous: vec![],
            lagged: vec![("y".into(), y)],
            lags: 1,
            residual_convention: ResidualConvention::Leads,
            time: None,
        };
        for h in 0..=4 {
            let fit = linear_lp_fit(&dataset, h).unwrap();
            let truth = 0.5f64.powi(h as i32);
            assert!(
                (fit.coefficient - truth).abs() < 3.0 * fit.std_error + 1e-9,
                "h = {h}: {} vs {truth} (se {})",
                fit.coefficient,
                fit.std_error
            );
        }
    }

    #[test]
    fn linear_lp_ignores_residual_convention() {
        let mut rng = RngStream::from_seed(12);
        let t = 120;
        let x: Vec<f64> = (0..t).map(|_| rng.standard_normal()).collect();
        let y: Vec<f64> = x.iter().map(|&v| v + 0.1 * rng.standard_normal()).collect();
        let mk = |conv| LpDataset {
            response: ("y".into(), y.clone()),
            shock: ("x".into(), x.clone()),
            contemporaneous: vec![],
            lagged: vec![("y".into(), y.clone())],
            lags: 1,
            residual_convention: conv,
            time: None,
        };
        let a = linear_lp_fit(&mk(ResidualConvention::Leads), 3).unwrap();
        let b = linear_lp_fit(&mk(ResidualConvention::Lags), 3).unwrap();
        assert_eq!(a.coefficient, b.coefficient);
        assert_eq!(a.labels, b.labels);
    }
}
