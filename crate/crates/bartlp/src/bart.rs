//! The sum-of-trees sampler.
//!
//! A forest of small regression trees is fit by backfitting MCMC: each sweep
//! draws the residual variance, then cycles through the trees, proposing one
//! structural Metropolis-Hastings move per tree and redrawing its leaf
//! values from their conjugate posterior. The response is affinely mapped to
//! a centered half-unit interval before sampling so that the leaf prior
//! scale `0.5 / (kappa * sqrt(J))` means the same thing on every dataset;
//! predictions are mapped back.
//!
//! The module exposes the individual conditionals (`draw_sigma2`,
//! `draw_leaf_values`, `mh_tree_update`) as well as the full fit, so tests
//! can hold each piece against closed forms or enumeration separately.

use crate::dist;
use crate::linalg;
use crate::mat::DataMatrix;
use crate::rng::RngStream;
use crate::tree::{
    propose_move, subtree_log_prior, DataIndex, IndexScratch, MoveKind, TreePrior, TreeStructure,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sampler settings. `Default` gives the full-length configuration; use
/// [`BartConfig::desk`] for the shorter chains sized for repeated refits
/// inside Monte Carlo loops.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BartConfig {
    /// Number of trees in the forest.
    pub n_trees: usize,
    /// Retained posterior draws.
    pub n_draws: usize,
    /// Burn-in sweeps discarded before retention starts.
    pub n_burn: usize,
    /// Depth prior base: a node at depth d splits with probability
    /// `alpha * (1 + d)^-beta`.
    pub alpha: f64,
    /// Depth prior exponent.
    pub beta: f64,
    /// Leaf prior spread control: sd = 0.5 / (kappa * sqrt(n_trees)).
    pub kappa: f64,
    /// Degrees of freedom of the scaled-inverse-chi-squared variance prior.
    pub nu: f64,
    /// Prior calibration quantile: lambda is set so the prior puts mass `q`
    /// below the least-squares variance estimate.
    pub q: f64,
    /// Smallest admissible number of training rows in a leaf.
    pub min_leaf: usize,
    /// Proposal mix over (grow, prune, change, swap).
    pub move_probs: [f64; 4],
}

impl Default for BartConfig {
    fn default() -> Self {
        BartConfig {
            n_trees: 250,
            n_draws: 2000,
            n_burn: 1000,
            alpha: 0.95,
            beta: 2.0,
            kappa: 2.0,
            nu: 3.0,
            q: 0.9,
            min_leaf: 5,
            move_probs: [0.25, 0.25, 0.4, 0.1],
        }
    }
}

impl BartConfig {
    /// Shorter chains with a smaller forest, for simulation work where the
    /// fit is repeated thousands of times.
    pub fn desk() -> Self {
        BartConfig {
            n_trees: 50,
            n_draws: 500,
            n_burn: 250,
            ..BartConfig::default()
        }
    }

    /// Standard-deviation of the leaf-value prior implied by the forest
    /// size.
    pub fn leaf_prior_sd(&self) -> f64 {
        0.5 / (self.kappa * (self.n_trees as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: String) -> Error {
            Error::InvalidParameter { name, reason }
        }
        if self.n_trees == 0 {
            return Err(bad("n_trees", "must be at least 1".into()));
        }
        if self.n_draws == 0 {
            return Err(bad("n_draws", "must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if !(self.beta >= 0.0) {
            return Err(bad("beta", format!("{} is negative", self.beta)));
        }
        if !(self.kappa > 0.0) {
            return Err(bad("kappa", format!("{} is not positive", self.kappa)));
        }
        if !(self.nu > 0.0) {
            return Err(bad("nu", format!("{} is not positive", self.nu)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(bad("q", format!("{} is outside (0, 1)", self.q)));
        }
        if self.min_leaf == 0 {
            return Err(bad("min_leaf", "must be at least 1".into()));
        }
        let s: f64 = self.move_probs.iter().sum();
        if self.move_probs.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(bad(
                "move_probs",
                format!("must be nonnegative and sum to 1, got {:?}", self.move_probs),
            ));
        }
        Ok(())
    }
}

/// The affine map taking the raw response onto `[-0.5, 0.5]`:
/// `scaled = (raw - offset) * slope`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ScaleTransform {
    pub offset: f64,
    pub slope: f64,
}

impl ScaleTransform {
    /// Fit the map from observed min/max. A constant response has no usable
    /// scale and is rejected.
    pub fn fit(y: &[f64]) -> Result<ScaleTransform> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in y {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi > lo) {
            return Err(Error::DegenerateResponse);
        }
        Ok(ScaleTransform {
            offset: 0.5 * (lo + hi),
            slope: 1.0 / (hi - lo),
        })
    }

    pub fn to_scaled(&self, raw: f64) -> f64 {
        (raw - self.offset) * self.slope
    }

    pub fn to_raw(&self, scaled: f64) -> f64 {
        scaled / self.slope + self.offset
    }
}

/// Posterior mean and variance of a leaf value given the rows it holds:
/// `var = 1 / (n / sigma2 + 1 / sigma_mu2)`, `mean = var * s1 / sigma2`
/// where `s1` sums the partial residuals in the leaf. An empty leaf falls
/// back to the prior.
pub fn leaf_posterior_moments(n: f64, s1: f64, sigma2: f64, sigma_mu2: f64) -> (f64, f64) {
    if n <= 0.0 {
        return (0.0, sigma_mu2);
    }
    let v = 1.0 / (n / sigma2 + 1.0 / sigma_mu2);
    (v * s1 / sigma2, v)
}

/// Draw every leaf value of `tree` from its conjugate posterior given the
/// tree's partial residuals. Leaves are visited in preorder, one normal
/// variate each.
pub fn draw_leaf_values(
    tree: &mut TreeStructure,
    data: &[Vec<f64>],
    residuals: &[f64],
    sigma2: f64,
    sigma_mu2: f64,
    rng: &mut RngStream,
) {
    let mut counts = vec![0.0f64; tree.arena_len()];
    let mut sums = vec![0.0f64; tree.arena_len()];
    for (row, &r) in residuals.iter().enumerate() {
        let id = tree.route_row(data, row);
        counts[id] += 1.0;
        sums[id] += r;
    }
    for id in tree.leaves() {
        let (m, v) = leaf_posterior_moments(counts[id], sums[id], sigma2, sigma_mu2);
        tree.set_leaf_value(id, m + v.sqrt() * rng.standard_normal());
    }
}

/// Draw the residual variance from its scaled-inverse-chi-squared full
/// conditional given the sum of squared residuals over `n` rows.
pub fn draw_sigma2(
    residual_ss: f64,
    n: usize,
    nu: f64,
    lambda: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let df = nu + n as f64;
    let scale = (nu * lambda + residual_ss) / df;
    dist::draw_scaled_inv_chi2(rng, df, scale)
}

/// Solve for the prior scale `lambda` that puts probability `q` below
/// `sigma_hat2` under the scaled-inverse-chi-squared prior with `nu` degrees
/// of freedom. The CDF at a fixed point is strictly decreasing in `lambda`,
/// so bisection is exact to machine precision.
pub fn calibrate_sigma_prior(sigma_hat2: f64, nu: f64, q: f64) -> Result<f64> {
    if !(sigma_hat2 > 0.0) || !sigma_hat2.is_finite() {
        return Err(Error::Calibration(format!(
            "variance estimate {sigma_hat2} is not positive"
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("{q} is outside (0, 1)"),
        });
    }
    let target = |lambda: f64| dist::scaled_inv_chi2_cdf(sigma_hat2, nu, lambda) - q;
    // Bracket: the CDF tends to 1 as lambda -> 0 and to 0 as lambda grows.
    let mut lo = sigma_hat2 * 1e-12;
    let mut hi = sigma_hat2 * 1e12;
    if target(lo) < 0.0 || target(hi) > 0.0 {
        return Err(Error::Calibration(format!(
            "could not bracket lambda for sigma_hat2 = {sigma_hat2}, nu = {nu}, q = {q}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if target(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares variance of the scaled response used to center the
/// variance prior. Constant columns (an all-zero treatment column is
/// routine under some identification schemes) are dropped first; if the
/// regression is still unusable the sample variance stands in.
fn estimate_sigma_hat2(data: &[Vec<f64>], y_scaled: &[f64]) -> (f64, bool) {
    let n = y_scaled.len();
    let fallback = || {
        let mean = y_scaled.iter().sum::<f64>() / n as f64;
        let ss: f64 = y_scaled.iter().map(|v| (v - mean) * (v - mean)).sum();
        ss / (n - 1) as f64
    };
    let mut columns: Vec<(String, Vec<f64>)> = vec![("const".into(), vec![1.0; n])];
    for (j, col) in data.iter().enumerate() {
        let constant = col.iter().all(|&v| v == col[0]);
        if !constant {
            columns.push((format!("x{j}"), col.clone()));
        }
    }
    if n <= columns.len() + 1 {
        return (fallback(), true);
    }
    let design = match DataMatrix::from_columns(columns) {
        Ok(d) => d,
        Err(_) => return (fallback(), true),
    };
    match linalg::ols(&design, y_scaled) {
        Ok(fit) if fit.sigma2 > 0.0 && fit.sigma2.is_finite() => (fit.sigma2, false),
        _ => (fallback(), true),
    }
}

/// Everything `mh_tree_update` needs besides the tree and data.
#[derive(Debug, Clone)]
pub struct TreeMoveParams {
    pub prior: TreePrior,
    pub sigma_mu2: f64,
    pub min_leaf: usize,
    pub move_probs: [f64; 4],
}

/// Reusable per-fit workspace: the rank-query scratch plus arena-sized
/// buffers the likelihood evaluation cycles through. Build one per fit
/// (or per chain) and hand it to every [`mh_tree_update`] call.
#[derive(Debug, Clone)]
pub struct SamplerScratch {
    index: IndexScratch,
    counts: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    touched: Vec<usize>,
}

impl SamplerScratch {
    pub fn new(index: &DataIndex) -> Self {
        SamplerScratch {
            index: index.scratch(),
            counts: Vec::new(),
            s1: Vec::new(),
            s2: Vec::new(),
            touched: Vec::new(),
        }
    }
}

/// Result of one structural Metropolis-Hastings step.
pub enum MhOutcome {
    /// The proposal machinery produced nothing feasible; the tree stands.
    Infeasible,
    /// A feasible proposal was drawn and rejected; the tree stands.
    Rejected { kind: MoveKind },
    /// The proposal was accepted. `region` lists the training rows routed
    /// through the changed subtree rooted at `affected`.
    Accepted {
        kind: MoveKind,
        tree: TreeStructure,
        affected: usize,
        region: Vec<usize>,
    },
}

/// Log marginal likelihood of the subtree at `start` over `region`, with
/// leaf values integrated out.
#[allow(clippy::too_many_arguments)]
fn subtree_log_lik(
    tree: &TreeStructure,
    start: usize,
    region: &[usize],
    data: &[Vec<f64>],
    residuals: &[f64],
    sigma2: f64,
    sigma_mu2: f64,
    scratch: &mut SamplerScratch,
) -> f64 {
    let len = tree.arena_len();
    if scratch.counts.len() < len {
        scratch.counts.resize(len, 0.0);
        scratch.s1.resize(len, 0.0);
        scratch.s2.resize(len, 0.0);
    }
    scratch.touched.clear();
    for &row in region {
        let id = tree.route_row_from(data, row, start);
        if scratch.counts[id] == 0.0 {
            scratch.touched.push(id);
        }
        let r = residuals[row];
        scratch.counts[id] += 1.0;
        scratch.s1[id] += r;
        scratch.s2[id] += r * r;
    }
    let total = scratch
        .touched
        .iter()
        .map(|&id| {
            crate::tree::node_lml_from_stats(
                scratch.counts[id],
                scratch.s1[id],
                scratch.s2[id],
                sigma2,
                sigma_mu2,
            )
        })
        .sum();
    // Leave the buffers all-zero for the next call.
    for &id in &scratch.touched {
        scratch.counts[id] = 0.0;
        scratch.s1[id] = 0.0;
        scratch.s2[id] = 0.0;
    }
    total
}

/// One Metropolis-Hastings structure update: propose a move, compare
/// integrated likelihood times prior over the affected subtree, and accept
/// or reject. Leaf values of a returned tree are stale; callers follow up
/// with [`draw_leaf_values`] (the full fit always redraws, accepted or
/// not).
#[allow(clippy::too_many_arguments)]
pub fn mh_tree_update(
    tree: &TreeStructure,
    data: &[Vec<f64>],
    index: &DataIndex,
    scratch: &mut SamplerScratch,
    residuals: &[f64],
    sigma2: f64,
    params: &TreeMoveParams,
    rng: &mut RngStream,
) -> MhOutcome {
    let n_rows = residuals.len();
    let Some(proposal) = propose_move(
        tree,
        data,
        index,
        &mut scratch.index,
        n_rows,
        params.min_leaf,
        &params.move_probs,
        rng,
    ) else {
        return MhOutcome::Infeasible;
    };
    let affected = proposal.affected;
    // Ancestors of the affected node are untouched by every move kind, so
    // the region the proposal computed serves both old and new trees.
    let region = proposal.region;
    let depth = tree.depth_of(affected);

    let (Some(prior_old), Some(prior_new)) = (
        subtree_log_prior(
            tree,
            affected,
            &region,
            depth,
            data,
            index,
            &mut scratch.index,
            &params.prior,
        ),
        subtree_log_prior(
            &proposal.tree,
            affected,
            &region,
            depth,
            data,
            index,
            &mut scratch.index,
            &params.prior,
        ),
    ) else {
        // A live tree only holds valid splits, and proposals are screened
        // before they get here; an invalid subtree means the proposal was
        // infeasible after all.
        return MhOutcome::Infeasible;
    };
    let lik_old = subtree_log_lik(
        tree,
        affected,
        &region,
        data,
        residuals,
        sigma2,
        params.sigma_mu2,
        scratch,
    );
    let lik_new = subtree_log_lik(
        &proposal.tree,
        affected,
        &region,
        data,
        residuals,
        sigma2,
        params.sigma_mu2,
        scratch,
    );
    let log_ratio = (lik_new - lik_old) + (prior_new - prior_old) + proposal.correction;
    if rng.uniform().ln() < log_ratio {
        MhOutcome::Accepted {
            kind: proposal.kind,
            tree: proposal.tree,
            affected,
            region,
        }
    } else {
        MhOutcome::Rejected {
            kind: proposal.kind,
        }
    }
}

/// One retained state of the chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorDraw {
    /// Residual variance on the scaled response.
    pub sigma2: f64,
    pub trees: Vec<TreeStructure>,
}

/// Chain behavior counters and traces kept alongside the draws.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Proposals offered per move kind (grow, prune, change, swap).
    pub proposed: [u64; 4],
    /// Proposals accepted per move kind.
    pub accepted: [u64; 4],
    /// Steps where no feasible proposal could be formed.
    pub infeasible: u64,
    /// Residual variance at each retained sweep (scaled response units).
    pub sigma2_trace: Vec<f64>,
    /// Mean leaf count per tree over retained sweeps.
    pub mean_leaves: f64,
    /// Whether the variance prior was centered on a least-squares fit
    /// (false) or fell back to the sample variance (true).
    pub calibration_fallback: bool,
}

/// A fitted forest: retained draws plus everything needed to predict and to
/// reproduce the fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BartPosterior {
    pub config: BartConfig,
    /// Covariate labels, fixing prediction input order.
    pub columns: Vec<String>,
    pub transform: ScaleTransform,
    /// Calibrated variance prior scale.
    pub lambda: f64,
    /// The variance estimate the calibration centered on.
    pub sigma_hat2: f64,
    pub draws: Vec<PosteriorDraw>,
    pub diagnostics: FitDiagnostics,
}

impl BartPosterior {
    /// Predict at a point from one retained draw, in raw response units.
    pub fn predict(&self, x: &[f64], draw: usize) -> Result<f64> {
        if x.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, model has {} covariates",
                x.len(),
                self.columns.len()
            )));
        }
        let d = self.draws.get(draw).ok_or_else(|| {
            Error::Dimension(format!(
                "draw {draw} out of range for {} retained draws",
                self.draws.len()
            ))
        })?;
        let scaled: f64 = d.trees.iter().map(|t| t.predict_point(x)).sum();
        Ok(self.transform.to_raw(scaled))
    }

    /// Posterior mean prediction at a point (average over retained draws).
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for d in 0..self.draws.len() {
            s += self.predict(x, d)?;
        }
        Ok(s / self.draws.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<BartPosterior> {
        serde_json::from_str(s).map_err(|e| Error::Data(e.to_string()))
    }
}

/// Fit the sum-of-trees model of `y` on the columns of `x`.
pub fn bart_fit(
    x: &DataMatrix,
    y: &[f64],
    config: &BartConfig,
    rng: &mut RngStream,
) -> Result<BartPosterior> {
    config.validate()?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "response has {} rows, covariates have {n}",
            y.len()
        )));
    }
    if n < 2 * config.min_leaf.max(1) {
        return Err(Error::Data(format!(
            "{n} rows is too few to fit on (min_leaf = {})",
            config.min_leaf
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("response contains non-finite values".into()));
    }

    let transform = ScaleTransform::fit(y)?;
    let y_scaled: Vec<f64> = y.iter().map(|&v| transform.to_scaled(v)).collect();
    let data: Vec<Vec<f64>> = (0..x.cols()).map(|j| x.column(j)).collect();

    let (sigma_hat2, calibration_fallback) = estimate_sigma_hat2(&data, &y_scaled);
    let lambda = calibrate_sigma_prior(sigma_hat2, config.nu, config.q)?;
    let sigma_mu = config.leaf_prior_sd();
    let params = TreeMoveParams {
        prior: TreePrior {
            alpha: config.alpha,
            beta: config.beta,
        },
        sigma_mu2: sigma_mu * sigma_mu,
        min_leaf: config.min_leaf,
        move_probs: config.move_probs,
    };

    let j_trees = config.n_trees;
    let index = DataIndex::new(&data);
    let mut scratch = SamplerScratch::new(&index);
    let mut trees: Vec<TreeStructure> = (0..j_trees).map(|_| TreeStructure::stump()).collect();
    let mut assign: Vec<Vec<usize>> = vec![vec![0; n]; j_trees];
    let mut contrib: Vec<Vec<f64>> = vec![vec![0.0; n]; j_trees];
    let mut fit = vec![0.0f64; n];
    // Drawn fresh at the top of every sweep; the declaration only fixes
    // scope.
    let mut sigma2;

    let mut partial = vec![0.0f64; n];
    let mut redraw_counts: Vec<f64> = Vec::new();
    let mut redraw_sums: Vec<f64> = Vec::new();
    let mut draws = Vec::with_capacity(config.n_draws);
    let mut diagnostics = FitDiagnostics {
        calibration_fallback,
        ..FitDiagnostics::default()
    };
    let mut leaf_count_sum = 0u64;

    let total_sweeps = config.n_burn + config.n_draws;
    for sweep in 0..total_sweeps {
        let residual_ss: f64 = y_scaled
            .iter()
            .zip(&fit)
            .map(|(y, f)| (y - f) * (y - f))
            .sum();
        sigma2 = draw_sigma2(residual_ss, n, config.nu, lambda, rng)?;

        for j in 0..j_trees {
            for r in 0..n {
                partial[r] = y_scaled[r] - fit[r] + contrib[j][r];
            }
            match mh_tree_update(
                &trees[j],
                &data,
                &index,
                &mut scratch,
                &partial,
                sigma2,
                &params,
                rng,
            ) {
                MhOutcome::Infeasible => diagnostics.infeasible += 1,
                MhOutcome::Rejected { kind } => {
                    diagnostics.proposed[kind as usize] += 1;
                }
                MhOutcome::Accepted {
                    kind,
                    tree,
                    affected,
                    region,
                } => {
                    diagnostics.proposed[kind as usize] += 1;
                    diagnostics.accepted[kind as usize] += 1;
                    trees[j] = tree;
                    for &row in &region {
                        assign[j][row] = trees[j].route_row_from(&data, row, affected);
                    }
                }
            }

            // Conjugate leaf redraw off the row assignment, then fold the
            // new tree contribution into the running fit.
            let tree = &mut trees[j];
            redraw_counts.clear();
            redraw_counts.resize(tree.arena_len(), 0.0);
            redraw_sums.clear();
            redraw_sums.resize(tree.arena_len(), 0.0);
            for r in 0..n {
                redraw_counts[assign[j][r]] += 1.0;
                redraw_sums[assign[j][r]] += partial[r];
            }
            for id in tree.leaves() {
                let (m, v) = leaf_posterior_moments(
                    redraw_counts[id],
                    redraw_sums[id],
                    sigma2,
                    params.sigma_mu2,
                );
                tree.set_leaf_value(id, m + v.sqrt() * rng.standard_normal());
            }
            for r in 0..n {
                let new = tree.leaf_value(assign[j][r]);
                fit[r] += new - contrib[j][r];
                contrib[j][r] = new;
            }
        }

        if sweep >= config.n_burn {
            diagnostics.sigma2_trace.push(sigma2);
            leaf_count_sum += trees.iter().map(|t| t.leaves().len() as u64).sum::<u64>();
            draws.push(PosteriorDraw {
                sigma2,
                trees: trees.iter().map(|t| t.canonical()).collect(),
            });
        }
    }

    diagnostics.mean_leaves =
        leaf_count_sum as f64 / (config.n_draws as f64 * j_trees as f64);

    Ok(BartPosterior {
        config: config.clone(),
        columns: x.labels().to_vec(),
        transform,
        lambda,
        sigma_hat2,
        draws,
        diagnostics,
    })
}
