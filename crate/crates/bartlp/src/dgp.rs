//! The three simulation models and a brute-force oracle for their true
//! generalized impulse responses.
//!
//! Each simulator is an exact recursion driven by standard-normal
//! innovations from a seeded stream; the true-response oracle replays the
//! same recursions along paired paths — one with the structural shock
//! injected at date 0, one without — sharing every other innovation, and
//! averages the paths' differences. That common-random-number pairing is
//! what makes the oracle usable as a test fixture: for linear systems and
//! for the moving-average model the future innovations cancel exactly.

use crate::rng::{tags, RngStream};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Moving-average order of the sign-dependent model (lags `0..=MA_ORDER`).
pub const MA_ORDER: usize = 20;

/// Smallest conditional variance the lagged-timing recursion may report.
const H_FLOOR: f64 = 1e-8;

/// How the conditional-variance recursion treats the contemporaneous
/// shock.
///
/// The variance equation as written places `sqrt(h_t)` on its own
/// right-hand side. `Lagged` (the default) dates both the variance and the
/// shock one period back, which is well-defined and sits in the standard
/// GARCH-in-mean family. `Literal` instead solves the contemporaneous
/// fixed point (a quadratic in `sqrt(h_t)`) each period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GarchTiming {
    #[default]
    Lagged,
    Literal,
}

/// Trivariate VAR(1) whose first structural shock carries a GARCH-in-mean
/// variance that also shifts the level of every variable:
///
/// ```text
/// y_t = A y_{t-1} + B h_t + (sqrt(h_t) e_1t, e_2t, e_3t)'
/// h_t = 0.5 + 0.5 h_{t-1} + 0.3 sqrt(h) e_1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvarGarchParams {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub garch_const: f64,
    pub garch_decay: f64,
    pub garch_load: f64,
    /// Initial variance; 1.0 is the zero-shock fixed point of the
    /// recursion.
    pub h0: f64,
    pub timing: GarchTiming,
}

impl Default for SvarGarchParams {
    fn default() -> Self {
        SvarGarchParams {
            a: [[0.5, -0.25, 0.25], [0.75, 0.25, 0.25], [-0.25, -0.25, 0.75]],
            b: [-1.75, -1.5, 1.75],
            garch_const: 0.5,
            garch_decay: 0.5,
            garch_load: 0.3,
            h0: 1.0,
            timing: GarchTiming::Lagged,
        }
    }
}

/// Evolving state of one SVAR-GARCH path.
#[derive(Debug, Clone)]
pub struct SvarGarchState {
    pub y: [f64; 3],
    pub h: f64,
    /// Previous period's first structural shock (drives `h` under lagged
    /// timing).
    pub eps1_prev: f64,
}

impl SvarGarchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h0",
                reason: format!("initial variance {} must be positive", self.h0),
            });
        }
        let finite = self.a.iter().flatten().all(|v| v.is_finite())
            && self.b.iter().all(|v| v.is_finite())
            && [self.garch_const, self.garch_decay, self.garch_load]
                .iter()
                .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter {
                name: "svar_garch",
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(())
    }

    fn initial_state(&self, init: &DgpInit) -> SvarGarchState {
        SvarGarchState {
            y: init.y,
            h: init.h,
            eps1_prev: init.eps1_prev,
        }
    }

    /// Advance one period. Returns the variance `h_t` the period used.
    pub fn step(&self, st: &mut SvarGarchState, eps: &[f64; 3]) -> Result<f64> {
        let h_t = match self.timing {
            GarchTiming::Lagged => {
                let h = self.garch_const
                    + self.garch_decay * st.h
                    + self.garch_load * st.h.sqrt() * st.eps1_prev;
                // The linear shock term makes a negative value possible on
                // extreme draws (near the default parameters, whenever
                // eps1 < -10/3, about a 4e-4 event per period). Floor the
                // variance rather than fault: the path recovers to at least
                // garch_const the following period.
                h.max(H_FLOOR)
            }
            GarchTiming::Literal => {
                // h = q + load * sqrt(h) * e1 with q = const + decay * h_prev:
                // the positive root of s^2 - (load e1) s - q = 0, s = sqrt(h).
                let q = self.garch_const + self.garch_decay * st.h;
                let b = self.garch_load * eps[0];
                let s = 0.5 * (b + (b * b + 4.0 * q).sqrt());
                s * s
            }
        };
        if !(h_t > 0.0) || !h_t.is_finite() {
            return Err(Error::Numerical(format!(
                "conditional variance left the positive domain (h = {h_t})"
            )));
        }
        let shocks = [h_t.sqrt() * eps[0], eps[1], eps[2]];
        let mut y_new = [0.0; 3];
        for i in 0..3 {
            let mut s = self.b[i] * h_t + shocks[i];
            for j in 0..3 {
                s += self.a[i][j] * st.y[j];
            }
            y_new[i] = s;
        }
        st.y = y_new;
        st.h = h_t;
        st.eps1_prev = eps[0];
        Ok(h_t)
    }
}

/// Recursive threshold VAR: coefficients and impact matrix jump between
/// two regimes according to the sign of the lagged third variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TvarParams {
    pub pi1: [[f64; 3]; 3],
    pub pi2: [[f64; 3]; 3],
    pub b1: [[f64; 3]; 3],
    pub b2: [[f64; 3]; 3],
    /// Regime 1 applies when `y3_{t-1} <= threshold`.
    pub threshold: f64,
}

impl Default for TvarParams {
    fn default() -> Self {
        TvarParams {
            pi1: [[0.25, 0.25, -0.25], [-0.25, 0.25, -0.25], [0.25, 0.25, 0.15]],
            pi2: [[0.50, 1.25, -1.75], [-0.25, 0.50, -1.25], [0.25, 0.25, 0.15]],
            b1: [[0.10, 0.0, 0.0], [-0.20, 0.15, 0.0], [0.10, -0.10, 1.0]],
            b2: [[0.10, 0.0, 0.0], [-0.20, 0.15, 0.0], [0.10, -0.10, 0.40]],
            threshold: 0.0,
        }
    }
}

impl TvarParams {
    pub fn validate(&self) -> Result<()> {
        let all = [&self.pi1, &self.pi2, &self.b1, &self.b2];
        if all.iter().any(|m| m.iter().flatten().any(|v| !v.is_finite()))
            || !self.threshold.is_finite()
        {
            return Err(Error::InvalidParameter {
                name: "tvar",
                reason: "non-finite coefficient".into(),
            });
        }
        Ok(())
    }

    /// Regime in force at `t` (1 or 2), decided by `y3` at `t - 1`.
    pub fn regime(&self, y3_prev: f64) -> u8 {
        if y3_prev <= self.threshold {
            1
        } else {
            2
        }
    }

    /// Advance one period. Returns the regime that was applied.
    pub fn step(&self, y: &mut [f64; 3], eps: &[f64; 3]) -> u8 {
        let r = self.regime(y[2]);
        let (pi, bm) = if r == 1 {
            (&self.pi1, &self.b1)
        } else {
            (&self.pi2, &self.b2)
        };
        let mut y_new = [0.0; 3];
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += pi[i][j] * y[j] + bm[i][j] * eps[j];
            }
            y_new[i] = s;
        }
        *y = y_new;
        r
    }
}

/// Sign-dependent moving average of order [`MA_ORDER`]: three structural
/// shocks, the third of which (the policy shock) loads on different
/// coefficient blocks depending on its own sign.
///
/// Each block entry `beta_*[l]` is the 3-vector effect of the lag-`l`
/// shock on `(gdp, infl, ff)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignMaParams {
    pub beta_gdp: Vec<[f64; 3]>,
    pub beta_infl: Vec<[f64; 3]>,
    pub beta_ff_pos: Vec<[f64; 3]>,
    pub beta_ff_neg: Vec<[f64; 3]>,
}

impl Default for SignMaParams {
    /// The shipped calibration: synthetic damped-oscillation responses
    /// with the policy shock's positive branch tripled on output at lags
    /// 2-3 and on inflation at lags 7-20.
    fn default() -> Self {
        let (gdp, infl, ff) = synthetic_linear_irfs();
        let infl_lags: Vec<usize> = (7..=MA_ORDER).collect();
        calibrate_sign_ma(&gdp, &infl, &ff, 3.0, &[2, 3], &infl_lags)
            .expect("shipped calibration is well-formed")
    }
}

impl SignMaParams {
    pub fn validate(&self) -> Result<()> {
        for (name, block) in [
            ("beta_gdp", &self.beta_gdp),
            ("beta_infl", &self.beta_infl),
            ("beta_ff_pos", &self.beta_ff_pos),
            ("beta_ff_neg", &self.beta_ff_neg),
        ] {
            if block.len() != MA_ORDER + 1 {
                return Err(Error::Dimension(format!(
                    "{name} has {} lags, the model is order {MA_ORDER}",
                    block.len()
                )));
            }
            if block.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "sign_ma",
                    reason: format!("{name} contains a non-finite value"),
                });
            }
        }
        Ok(())
    }

    /// The policy-shock block a given shock value loads on: positive
    /// branch at zero (the indicator is `>= 0`).
    fn ff_block(&self, shock: f64) -> &[[f64; 3]] {
        if shock >= 0.0 {
            &self.beta_ff_pos
        } else {
            &self.beta_ff_neg
        }
    }

    /// `y_t` given the shock history; `history[t]` is the date-`t`
    /// innovation triple and dates before `history[0]` are zero.
    pub fn value_at(&self, history: &[[f64; 3]], t: usize) -> [f64; 3] {
        let mut y = [0.0; 3];
        for l in 0..=MA_ORDER.min(t) {
            let e = &history[t - l];
            let ff = self.ff_block(e[2]);
            for i in 0..3 {
                y[i] += self.beta_gdp[l][i] * e[0]
                    + self.beta_infl[l][i] * e[1]
                    + ff[l][i] * e[2];
            }
        }
        y
    }
}

/// Build a sign-dependent MA model from linear impulse-response blocks:
/// the negative policy branch is the supplied policy IRF; the positive
/// branch multiplies its first entry by `factor` at `gdp_lags` and its
/// second entry by `factor` at `infl_lags`.
pub fn calibrate_sign_ma(
    irf_gdp: &[[f64; 3]],
    irf_infl: &[[f64; 3]],
    irf_ff: &[[f64; 3]],
    factor: f64,
    gdp_lags: &[usize],
    infl_lags: &[usize],
) -> Result<SignMaParams> {
    for (name, block) in [("gdp", irf_gdp), ("infl", irf_infl), ("ff", irf_ff)] {
        if block.len() != MA_ORDER + 1 {
            return Err(Error::Dimension(format!(
                "{name} impulse block has {} lags, need {}",
                block.len(),
                MA_ORDER + 1
            )));
        }
    }
    let mut beta_ff_pos = irf_ff.to_vec();
    for (&l, entry) in gdp_lags
        .iter()
        .map(|l| (l, 0usize))
        .chain(infl_lags.iter().map(|l| (l, 1usize)))
    {
        if l > MA_ORDER {
            return Err(Error::InvalidParameter {
                name: "calibration lags",
                reason: format!("lag {l} exceeds the model order {MA_ORDER}"),
            });
        }
        beta_ff_pos[l][entry] *= factor;
    }
    let params = SignMaParams {
        beta_gdp: irf_gdp.to_vec(),
        beta_infl: irf_infl.to_vec(),
        beta_ff_pos,
        beta_ff_neg: irf_ff.to_vec(),
    };
    params.validate()?;
    Ok(params)
}

/// Synthetic linear impulse-response blocks used as the default
/// sign-MA calibration input: damped oscillations with a recursive impact
/// pattern (the policy shock moves only the policy rate on impact), sized
/// so the sign asymmetry is detectable at short samples.
pub fn synthetic_linear_irfs() -> (Vec<[f64; 3]>, Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let cosw = |amp: f64, decay: f64, freq: f64, phase: f64, l: usize| -> f64 {
        amp * decay.powi(l as i32) * (freq * l as f64 + phase).cos()
    };
    // sin form so the l = 0 recursive zeros are exact.
    let sinw = |amp: f64, decay: f64, freq: f64, l: usize| -> f64 {
        amp * decay.powi(l as i32) * (freq * l as f64).sin()
    };
    let mut gdp = Vec::with_capacity(MA_ORDER + 1);
    let mut infl = Vec::with_capacity(MA_ORDER + 1);
    let mut ff = Vec::with_capacity(MA_ORDER + 1);
    for l in 0..=MA_ORDER {
        // A demand-like shock, ordered first: moves everything on impact,
        // fades fast.
        gdp.push([
            cosw(1.0, 0.80, 0.40, 0.0, l),
            cosw(0.25, 0.85, 0.50, -0.60, l),
            cosw(0.40, 0.80, 0.30, -0.40, l),
        ]);
        // A supply-like shock, ordered second: no output impact, prices
        // lead.
        infl.push([
            sinw(-0.50, 0.84, 0.45, l),
            cosw(0.90, 0.86, 0.30, 0.0, l),
            cosw(0.50, 0.80, 0.50, -0.80, l),
        ]);
        // The policy shock, ordered last: only the rate moves on impact,
        // output dips at short lags, inflation falls with a long delay.
        ff.push([
            sinw(-1.10, 0.82, 0.55, l),
            sinw(-0.85, 0.92, 0.30, l),
            cosw(1.0, 0.78, 0.35, 0.0, l),
        ]);
    }
    (gdp, infl, ff)
}

/// Simulation length bookkeeping: `total` periods are generated, the first
/// `burn` discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub total: usize,
    pub burn: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(total: usize, burn: usize, seed: u64) -> Self {
        SimConfig { total, burn, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn >= self.total {
            return Err(Error::InvalidParameter {
                name: "burn",
                reason: format!("burn {} must be below total length {}", self.burn, self.total),
            });
        }
        Ok(())
    }

    fn stream(&self) -> RngStream {
        RngStream::from_seed(self.seed).derive(&[tags::SIMULATE])
    }

    fn kept(&self) -> usize {
        self.total - self.burn
    }
}

/// A simulated SVAR-GARCH sample: the three series, the structural shocks
/// that generated them, and the variance path.
#[derive(Debug, Clone)]
pub struct SvarGarchSim {
    pub y: [Vec<f64>; 3],
    pub eps: [Vec<f64>; 3],
    pub h: Vec<f64>,
}

pub fn simulate_svar_garch(params: &SvarGarchParams, sim: &SimConfig) -> Result<SvarGarchSim> {
    params.validate()?;
    sim.validate()?;
    let mut rng = sim.stream();
    let mut st = params.initial_state(&DgpInit::default_for_garch(params));
    let kept = sim.kept();
    let mut out = SvarGarchSim {
        y: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
        eps: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
        h: Vec::with_capacity(kept),
    };
    for t in 0..sim.total {
        let eps = draw_triple(&mut rng);
        let h_t = params.step(&mut st, &eps)?;
        if t >= sim.burn {
            for i in 0..3 {
                out.y[i].push(st.y[i]);
                out.eps[i].push(eps[i]);
            }
            out.h.push(h_t);
        }
    }
    Ok(out)
}

/// A simulated threshold-VAR sample with its regime path (1 or 2 per
/// period).
#[derive(Debug, Clone)]
pub struct TvarSim {
    pub y: [Vec<f64>; 3],
    pub eps: [Vec<f64>; 3],
    pub regime: Vec<u8>,
}

pub fn simulate_tvar(params: &TvarParams, sim: &SimConfig) -> Result<TvarSim> {
    params.validate()?;
    sim.validate()?;
    let mut rng = sim.stream();
    let mut y = [0.0f64; 3];
    let kept = sim.kept();
    let mut out = TvarSim {
        y: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
        eps: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
        regime: Vec::with_capacity(kept),
    };
    for t in 0..sim.total {
        let eps = draw_triple(&mut rng);
        let r = params.step(&mut y, &eps);
        if t >= sim.burn {
            for i in 0..3 {
                out.y[i].push(y[i]);
                out.eps[i].push(eps[i]);
            }
            out.regime.push(r);
        }
    }
    Ok(out)
}

/// A simulated sign-MA sample.
#[derive(Debug, Clone)]
pub struct SignMaSim {
    pub y: [Vec<f64>; 3],
    pub eps: [Vec<f64>; 3],
}

pub fn simulate_sign_ma(params: &SignMaParams, sim: &SimConfig) -> Result<SignMaSim> {
    params.validate()?;
    sim.validate()?;
    let mut rng = sim.stream();
    let mut history: Vec<[f64; 3]> = Vec::with_capacity(sim.total);
    let kept = sim.kept();
    let mut out = SignMaSim {
        y: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
        eps: [Vec::with_capacity(kept), Vec::with_capacity(kept), Vec::with_capacity(kept)],
    };
    for t in 0..sim.total {
        history.push(draw_triple(&mut rng));
        let y = params.value_at(&history, t);
        if t >= sim.burn {
            for i in 0..3 {
                out.y[i].push(y[i]);
                out.eps[i].push(history[t][i]);
            }
        }
    }
    Ok(out)
}

fn draw_triple(rng: &mut RngStream) -> [f64; 3] {
    [
        rng.standard_normal(),
        rng.standard_normal(),
        rng.standard_normal(),
    ]
}

/// One of the three simulation models, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dgp {
    SvarGarch(SvarGarchParams),
    Tvar(TvarParams),
    SignMa(SignMaParams),
}

/// Simulation output in a model-independent shape, for the harness and
/// the CSV writer.
#[derive(Debug, Clone)]
pub struct DgpData {
    pub variable_names: [&'static str; 3],
    pub shock_names: [&'static str; 3],
    pub y: [Vec<f64>; 3],
    pub eps: [Vec<f64>; 3],
    /// SVAR-GARCH only.
    pub h: Option<Vec<f64>>,
    /// Threshold VAR only.
    pub regime: Option<Vec<u8>>,
}

impl Dgp {
    pub fn variable_names(&self) -> [&'static str; 3] {
        match self {
            Dgp::SvarGarch(_) | Dgp::Tvar(_) => ["y1", "y2", "y3"],
            Dgp::SignMa(_) => ["gdp", "infl", "ff"],
        }
    }

    pub fn shock_names(&self) -> [&'static str; 3] {
        match self {
            Dgp::SvarGarch(_) | Dgp::Tvar(_) => ["eps1", "eps2", "eps3"],
            Dgp::SignMa(_) => ["eps_gdp", "eps_infl", "eps_ff"],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Dgp::SvarGarch(p) => p.validate(),
            Dgp::Tvar(p) => p.validate(),
            Dgp::SignMa(p) => p.validate(),
        }
    }

    pub fn simulate(&self, sim: &SimConfig) -> Result<DgpData> {
        let (y, eps, h, regime) = match self {
            Dgp::SvarGarch(p) => {
                let s = simulate_svar_garch(p, sim)?;
                (s.y, s.eps, Some(s.h), None)
            }
            Dgp::Tvar(p) => {
                let s = simulate_tvar(p, sim)?;
                (s.y, s.eps, None, Some(s.regime))
            }
            Dgp::SignMa(p) => {
                let s = simulate_sign_ma(p, sim)?;
                (s.y, s.eps, None, None)
            }
        };
        Ok(DgpData {
            variable_names: self.variable_names(),
            shock_names: self.shock_names(),
            y,
            eps,
            h,
            regime,
        })
    }
}

/// The structural shock whose true response is wanted: which innovation,
/// and its (signed) size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrueShock {
    /// Innovation index, 0-based.
    pub variable: usize,
    pub size: f64,
}

/// Initial condition for a true-response computation. `h` and `eps1_prev`
/// only matter for the SVAR-GARCH model; the moving-average model starts
/// from an all-zero shock history regardless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgpInit {
    pub y: [f64; 3],
    pub h: f64,
    pub eps1_prev: f64,
}

impl Default for DgpInit {
    fn default() -> Self {
        DgpInit {
            y: [0.0; 3],
            h: 1.0,
            eps1_prev: 0.0,
        }
    }
}

impl DgpInit {
    fn default_for_garch(params: &SvarGarchParams) -> Self {
        DgpInit {
            h: params.h0,
            ..DgpInit::default()
        }
    }
}

/// A brute-force true impulse response with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrueIrf {
    /// `irf[variable][horizon]`, horizons `0..=H`.
    pub irf: Vec<Vec<f64>>,
    /// Monte Carlo standard error of each entry (negligible when the
    /// per-path differences agree, as in linear systems).
    pub se: Vec<Vec<f64>>,
    pub n_paths: usize,
}

/// True generalized impulse response by simulation: average over paths of
/// (shocked minus baseline), where the two paths share every innovation
/// except the shock-date entry of the shocked variable (0 in the
/// baseline, `size` in the shocked path).
pub fn true_girf_mc(
    dgp: &Dgp,
    shock: &TrueShock,
    init: &DgpInit,
    n_paths: usize,
    horizon: usize,
    rng: &RngStream,
) -> Result<TrueIrf> {
    girf_mc_impl(dgp, shock, init, n_paths, horizon, rng, true)
}

fn girf_mc_impl(
    dgp: &Dgp,
    shock: &TrueShock,
    init: &DgpInit,
    n_paths: usize,
    horizon: usize,
    rng: &RngStream,
    common_numbers: bool,
) -> Result<TrueIrf> {
    dgp.validate()?;
    if shock.variable >= 3 {
        return Err(Error::InvalidParameter {
            name: "shock.variable",
            reason: format!("index {} out of range for 3 innovations", shock.variable),
        });
    }
    if n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            reason: "need at least one path".into(),
        });
    }

    // Welford accumulation: the naive sum-of-squares form loses all
    // significance when the per-path differences are nearly constant
    // (exactly the linear-model case the tests pin down).
    let mut mean = vec![vec![0.0f64; horizon + 1]; 3];
    let mut m2 = vec![vec![0.0f64; horizon + 1]; 3];
    let mut base_seq: Vec<[f64; 3]> = Vec::with_capacity(horizon + 1);
    let mut shock_seq: Vec<[f64; 3]> = Vec::with_capacity(horizon + 1);
    for p in 0..n_paths {
        base_seq.clear();
        shock_seq.clear();
        if common_numbers {
            let mut stream = rng.derive(&[tags::TRUE_IRF, p as u64]);
            for _ in 0..=horizon {
                let e = draw_triple(&mut stream);
                base_seq.push(e);
                shock_seq.push(e);
            }
        } else {
            let mut sb = rng.derive(&[tags::TRUE_IRF, p as u64, 1]);
            let mut ss = rng.derive(&[tags::TRUE_IRF, p as u64, 2]);
            for _ in 0..=horizon {
                base_seq.push(draw_triple(&mut sb));
                shock_seq.push(draw_triple(&mut ss));
            }
        }
        base_seq[0][shock.variable] = 0.0;
        shock_seq[0][shock.variable] = shock.size;

        path_difference(
            dgp,
            init,
            &base_seq,
            &shock_seq,
            (p + 1) as f64,
            &mut mean,
            &mut m2,
        )?;
    }

    let n = n_paths as f64;
    let mut se = vec![vec![0.0; horizon + 1]; 3];
    if n_paths > 1 {
        for i in 0..3 {
            for t in 0..=horizon {
                se[i][t] = (m2[i][t] / (n * (n - 1.0))).sqrt();
            }
        }
    }
    Ok(TrueIrf {
        irf: mean,
        se,
        n_paths,
    })
}

/// Run the baseline and shocked paths and fold their difference into the
/// running per-entry mean and sum of squared deviations.
fn path_difference(
    dgp: &Dgp,
    init: &DgpInit,
    base_seq: &[[f64; 3]],
    shock_seq: &[[f64; 3]],
    k: f64,
    mean: &mut [Vec<f64>],
    m2: &mut [Vec<f64>],
) -> Result<()> {
    let horizon = base_seq.len() - 1;
    let mut record = |t: usize, yb: &[f64; 3], ys: &[f64; 3]| {
        for i in 0..3 {
            let d = ys[i] - yb[i];
            let delta = d - mean[i][t];
            mean[i][t] += delta / k;
            m2[i][t] += delta * (d - mean[i][t]);
        }
    };
    match dgp {
        Dgp::SvarGarch(p) => {
            let mut sb = p.initial_state(init);
            let mut ss = sb.clone();
            for t in 0..=horizon {
                p.step(&mut sb, &base_seq[t])?;
                p.step(&mut ss, &shock_seq[t])?;
                record(t, &sb.y, &ss.y);
            }
        }
        Dgp::Tvar(p) => {
            let mut yb = init.y;
            let mut ys = init.y;
            for t in 0..=horizon {
                p.step(&mut yb, &base_seq[t]);
                p.step(&mut ys, &shock_seq[t]);
                record(t, &yb, &ys);
            }
        }
        Dgp::SignMa(p) => {
            for t in 0..=horizon {
                let yb = p.value_at(base_seq, t);
                let ys = p.value_at(shock_seq, t);
                record(t, &yb, &ys);
            }
        }
    }
    Ok(())
}
