//! Binary regression trees and the Metropolis-Hastings moves over them.
//!
//! Conventions, fixed once here and relied on everywhere:
//!
//! - a split sends `x[covariate] <= threshold` LEFT and the rest RIGHT;
//! - candidate thresholds at a node are the distinct observed values of the
//!   chosen covariate among the rows reaching that node, excluding the
//!   maximum (so both children are nonempty by construction);
//! - a node at depth `d` is internal with prior probability
//!   `alpha * (1 + d)^(-beta)`; rule selection is uniform over covariates,
//!   then uniform over candidate thresholds;
//! - proposals that would create a leaf with fewer than `min_leaf` rows, or
//!   leave any split without a valid threshold, are infeasible and count as
//!   rejected Metropolis steps rather than errors.
//!
//! Trees live in an arena with the root at index 0. Structural moves edit
//! in place (grow appends, prune orphans two nodes); [`TreeStructure::canonical`]
//! rebuilds the compact preorder form used for snapshots, serialization,
//! and structure comparison.

use crate::rng::RngStream;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// `x[covariate] <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub covariate: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Internal {
        rule: SplitRule,
        left: usize,
        right: usize,
    },
}

/// Tree arena; root at index 0. May contain unreachable nodes after prunes;
/// all traversals start at the root and never see them. Serialization goes
/// through the nested form, so written trees are always canonical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeJson", from = "TreeJson")]
pub struct TreeStructure {
    nodes: Vec<Node>,
}

impl From<TreeStructure> for TreeJson {
    fn from(t: TreeStructure) -> TreeJson {
        t.to_nested()
    }
}

impl From<TreeJson> for TreeStructure {
    fn from(j: TreeJson) -> TreeStructure {
        TreeStructure::from_nested(&j)
    }
}

/// Depth prior: P(internal at depth d) = alpha * (1 + d)^(-beta).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TreePrior {
    pub alpha: f64,
    pub beta: f64,
}

impl TreePrior {
    pub fn split_prob(&self, depth: usize) -> f64 {
        self.alpha * (1.0 + depth as f64).powf(-self.beta)
    }
}

/// Leaf values in preorder, detached from the structure. Length equals the
/// number of leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafValues(pub Vec<f64>);

/// Nested serialization form: what lands in posterior JSON files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeJson {
    Leaf {
        value: f64,
    },
    Split {
        covariate: usize,
        threshold: f64,
        left: Box<TreeJson>,
        right: Box<TreeJson>,
    },
}

impl TreeStructure {
    /// Single root leaf with value 0.
    pub fn stump() -> Self {
        TreeStructure {
            nodes: vec![Node::Leaf { value: 0.0 }],
        }
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Node id the point routes to.
    pub fn route_point(&self, x: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Internal { rule, left, right } => {
                    id = if x[rule.covariate] <= rule.threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Node id that row `row` of column-major `data` routes to.
    pub fn route_row(&self, data: &[Vec<f64>], row: usize) -> usize {
        self.route_row_from(data, row, 0)
    }

    /// Route a row starting at an interior node (used when only a subtree
    /// changed).
    pub fn route_row_from(&self, data: &[Vec<f64>], row: usize, start: usize) -> usize {
        let mut id = start;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Internal { rule, left, right } => {
                    id = if data[rule.covariate][row] <= rule.threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Arena length, including unreachable slots; sized for per-node
    /// scratch buffers indexed by id.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    /// Value stored at a leaf id. Panics on an internal node.
    pub fn leaf_value(&self, id: usize) -> f64 {
        match &self.nodes[id] {
            Node::Leaf { value } => *value,
            Node::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    /// Overwrite the value at a leaf id. Panics on an internal node.
    pub fn set_leaf_value(&mut self, id: usize, v: f64) {
        match &mut self.nodes[id] {
            Node::Leaf { value } => *value = v,
            Node::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    /// Preorder leaf index (0-based) the point falls into.
    pub fn assign_leaf(&self, x: &[f64]) -> usize {
        let id = self.route_point(x);
        self.leaves().iter().position(|&l| l == id).expect("live leaf")
    }

    /// Value of the leaf the point falls into.
    pub fn predict_point(&self, x: &[f64]) -> f64 {
        match &self.nodes[self.route_point(x)] {
            Node::Leaf { value } => *value,
            Node::Internal { .. } => unreachable!("routing ends at a leaf"),
        }
    }

    fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Node::Internal { left, right, .. } = &self.nodes[id] {
                stack.push(*right);
                stack.push(*left);
            }
        }
        out
    }

    /// Live leaf ids in preorder.
    pub fn leaves(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&id| matches!(self.nodes[id], Node::Leaf { .. }))
            .collect()
    }

    /// Live internal node ids in preorder.
    pub fn internals(&self) -> Vec<usize> {
        self.preorder()
            .into_iter()
            .filter(|&id| matches!(self.nodes[id], Node::Internal { .. }))
            .collect()
    }

    /// Internal nodes whose children are both leaves (prune targets).
    pub fn prunable(&self) -> Vec<usize> {
        self.internals()
            .into_iter()
            .filter(|&id| {
                let Node::Internal { left, right, .. } = &self.nodes[id] else {
                    unreachable!()
                };
                matches!(self.nodes[*left], Node::Leaf { .. })
                    && matches!(self.nodes[*right], Node::Leaf { .. })
            })
            .collect()
    }

    /// (parent, child) pairs of live internal nodes, preorder by parent.
    pub fn internal_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for id in self.internals() {
            let Node::Internal { left, right, .. } = &self.nodes[id] else {
                unreachable!()
            };
            for child in [*left, *right] {
                if matches!(self.nodes[child], Node::Internal { .. }) {
                    pairs.push((id, child));
                }
            }
        }
        pairs
    }

    /// Depth of each node id (unreachable nodes keep usize::MAX).
    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            d[id] = depth;
            if let Node::Internal { left, right, .. } = &self.nodes[id] {
                stack.push((*left, depth + 1));
                stack.push((*right, depth + 1));
            }
        }
        d
    }

    /// Depth of one live node, without materialising the whole table.
    pub fn depth_of(&self, target: usize) -> usize {
        fn walk(tree: &TreeStructure, id: usize, depth: usize, target: usize) -> Option<usize> {
            if id == target {
                return Some(depth);
            }
            match &tree.nodes[id] {
                Node::Leaf { .. } => None,
                Node::Internal { left, right, .. } => {
                    walk(tree, *left, depth + 1, target)
                        .or_else(|| walk(tree, *right, depth + 1, target))
                }
            }
        }
        walk(self, 0, 0, target)
            .unwrap_or_else(|| panic!("depth_of: node {target} is not live"))
    }

    /// Greatest live leaf depth.
    pub fn depth(&self) -> usize {
        let depths = self.depths();
        self.leaves().into_iter().map(|id| depths[id]).max().unwrap_or(0)
    }

    /// Leaf values in preorder.
    pub fn leaf_values(&self) -> LeafValues {
        LeafValues(
            self.leaves()
                .into_iter()
                .map(|id| match self.nodes[id] {
                    Node::Leaf { value } => value,
                    _ => unreachable!(),
                })
                .collect(),
        )
    }

    /// Overwrite leaf values, preorder.
    pub fn set_leaf_values(&mut self, values: &LeafValues) -> Result<()> {
        let leaves = self.leaves();
        if leaves.len() != values.0.len() {
            return Err(Error::Dimension(format!(
                "{} leaf values for a tree with {} leaves",
                values.0.len(),
                leaves.len()
            )));
        }
        for (id, v) in leaves.into_iter().zip(&values.0) {
            self.nodes[id] = Node::Leaf { value: *v };
        }
        Ok(())
    }

    /// Rebuild into compact preorder form (drops unreachable nodes).
    pub fn canonical(&self) -> TreeStructure {
        fn rebuild(src: &TreeStructure, id: usize, out: &mut Vec<Node>) -> usize {
            let slot = out.len();
            out.push(Node::Leaf { value: 0.0 });
            match &src.nodes[id] {
                Node::Leaf { value } => out[slot] = Node::Leaf { value: *value },
                Node::Internal { rule, left, right } => {
                    let l = rebuild(src, *left, out);
                    let r = rebuild(src, *right, out);
                    out[slot] = Node::Internal {
                        rule: *rule,
                        left: l,
                        right: r,
                    };
                }
            }
            slot
        }
        let mut nodes = Vec::new();
        rebuild(self, 0, &mut nodes);
        TreeStructure { nodes }
    }

    /// Structure-only key (ignores leaf values): preorder covariates and
    /// threshold bits. Two trees share a key iff they split identically.
    pub fn structure_key(&self) -> Vec<u64> {
        fn walk(src: &TreeStructure, id: usize, out: &mut Vec<u64>) {
            match &src.nodes[id] {
                Node::Leaf { .. } => out.push(u64::MAX),
                Node::Internal { rule, left, right } => {
                    out.push(rule.covariate as u64);
                    out.push(rule.threshold.to_bits());
                    walk(src, *left, out);
                    walk(src, *right, out);
                }
            }
        }
        let mut key = Vec::new();
        walk(self, 0, &mut key);
        key
    }

    /// Nested form for serialization.
    pub fn to_nested(&self) -> TreeJson {
        fn walk(src: &TreeStructure, id: usize) -> TreeJson {
            match &src.nodes[id] {
                Node::Leaf { value } => TreeJson::Leaf { value: *value },
                Node::Internal { rule, left, right } => TreeJson::Split {
                    covariate: rule.covariate,
                    threshold: rule.threshold,
                    left: Box::new(walk(src, *left)),
                    right: Box::new(walk(src, *right)),
                },
            }
        }
        walk(self, 0)
    }

    pub fn from_nested(json: &TreeJson) -> TreeStructure {
        fn walk(json: &TreeJson, out: &mut Vec<Node>) -> usize {
            let slot = out.len();
            out.push(Node::Leaf { value: 0.0 });
            match json {
                TreeJson::Leaf { value } => out[slot] = Node::Leaf { value: *value },
                TreeJson::Split {
                    covariate,
                    threshold,
                    left,
                    right,
                } => {
                    let l = walk(left, out);
                    let r = walk(right, out);
                    out[slot] = Node::Internal {
                        rule: SplitRule {
                            covariate: *covariate,
                            threshold: *threshold,
                        },
                        left: l,
                        right: r,
                    };
                }
            }
            slot
        }
        let mut nodes = Vec::new();
        walk(json, &mut nodes);
        TreeStructure { nodes }
    }

    /// Rows (indices into `data`'s columns) whose root-to-leaf path passes
    /// through `target`.
    pub fn region_of(&self, data: &[Vec<f64>], n_rows: usize, target: usize) -> Vec<usize> {
        if target == 0 {
            return (0..n_rows).collect();
        }
        let mut rows = Vec::new();
        'rows: for r in 0..n_rows {
            let mut id = 0;
            loop {
                if id == target {
                    rows.push(r);
                    continue 'rows;
                }
                match &self.nodes[id] {
                    Node::Leaf { .. } => continue 'rows,
                    Node::Internal { rule, left, right } => {
                        id = if data[rule.covariate][r] <= rule.threshold {
                            *left
                        } else {
                            *right
                        };
                    }
                }
            }
        }
        rows
    }
}

/// Distinct observed values, sorted ascending, with the maximum removed.
pub fn candidate_thresholds(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    values.dedup();
    values.pop();
    values
}

/// Dense per-covariate value ranks, built once per dataset. The Metropolis
/// chain asks for candidate sets at every touched node; with the ranks in
/// hand each query is a stamp-and-count over the region instead of a sort.
#[derive(Debug, Clone)]
pub struct DataIndex {
    /// ranks[c][row]: rank of data[c][row] among the covariate's distinct values.
    ranks: Vec<Vec<u32>>,
    /// distinct[c]: the covariate's distinct values, ascending.
    distinct: Vec<Vec<f64>>,
}

/// Reusable workspace for [`DataIndex`] queries.
#[derive(Debug, Clone)]
pub struct IndexScratch {
    stamp: Vec<u64>,
    epoch: u64,
    buf: Vec<f64>,
}

impl DataIndex {
    pub fn new(data: &[Vec<f64>]) -> Self {
        let mut ranks = Vec::with_capacity(data.len());
        let mut distinct = Vec::with_capacity(data.len());
        for col in data {
            let mut order: Vec<u32> = (0..col.len() as u32).collect();
            order.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            let mut r = vec![0u32; col.len()];
            let mut vals: Vec<f64> = Vec::new();
            for &row in &order {
                let v = col[row as usize];
                // `!=` (not total_cmp) so -0.0/0.0 collapse exactly as
                // candidate_thresholds' dedup does.
                if vals.last() != Some(&v) {
                    vals.push(v);
                }
                r[row as usize] = (vals.len() - 1) as u32;
            }
            ranks.push(r);
            distinct.push(vals);
        }
        DataIndex { ranks, distinct }
    }

    pub fn scratch(&self) -> IndexScratch {
        let width = self.distinct.iter().map(|d| d.len()).max().unwrap_or(0);
        IndexScratch {
            stamp: vec![0; width],
            epoch: 0,
            buf: Vec::with_capacity(width),
        }
    }

    /// Number of split candidates for `cov` within the region: distinct
    /// values minus one for the maximum.
    pub fn candidate_count(&self, scratch: &mut IndexScratch, cov: usize, rows: &[usize]) -> usize {
        scratch.epoch += 1;
        let ranks = &self.ranks[cov];
        let mut seen = 0usize;
        for &r in rows {
            let k = ranks[r] as usize;
            if scratch.stamp[k] != scratch.epoch {
                scratch.stamp[k] = scratch.epoch;
                seen += 1;
            }
        }
        seen.saturating_sub(1)
    }

    /// Split candidates for `cov` within the region, ascending — the same
    /// list [`candidate_thresholds`] yields on the region's values. The
    /// slice lives in `scratch` until the next query.
    pub fn candidates<'s>(
        &self,
        scratch: &'s mut IndexScratch,
        cov: usize,
        rows: &[usize],
    ) -> &'s [f64] {
        scratch.epoch += 1;
        let ranks = &self.ranks[cov];
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        let mut seen = 0usize;
        for &r in rows {
            let k = ranks[r] as usize;
            if scratch.stamp[k] != scratch.epoch {
                scratch.stamp[k] = scratch.epoch;
                seen += 1;
                lo = lo.min(k);
                hi = hi.max(k);
            }
        }
        scratch.buf.clear();
        if seen > 1 {
            let vals = &self.distinct[cov];
            // `hi` is the region maximum's rank; exclude it.
            for k in lo..hi {
                if scratch.stamp[k] == scratch.epoch {
                    scratch.buf.push(vals[k]);
                }
            }
        }
        &scratch.buf
    }
}

/// Log marginal likelihood of the residuals in one leaf with the mean
/// integrated out under its normal prior: r_i ~ N(mu, sigma2),
/// mu ~ N(0, sigma_mu2). Empty slice gives 0.
pub fn node_log_marginal_likelihood(residuals: &[f64], sigma2: f64, sigma_mu2: f64) -> f64 {
    let n = residuals.len() as f64;
    let s1: f64 = residuals.iter().sum();
    let s2: f64 = residuals.iter().map(|r| r * r).sum();
    node_lml_from_stats(n, s1, s2, sigma2, sigma_mu2)
}

/// Same quantity from sufficient statistics (count, sum, sum of squares).
pub fn node_lml_from_stats(n: f64, s1: f64, s2: f64, sigma2: f64, sigma_mu2: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let denom = sigma2 + n * sigma_mu2;
    -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() + 0.5 * (sigma2 / denom).ln()
        - s2 / (2.0 * sigma2)
        + sigma_mu2 * s1 * s1 / (2.0 * sigma2 * denom)
}

/// Walk a subtree rooted at `node` whose region is `rows`, accumulating the
/// log prior factors (depth terms, covariate choice, threshold choice) and
/// checking validity. `None` means some split's threshold is not a
/// candidate value for its region, i.e. the tree has prior probability zero
/// on this data.
#[allow(clippy::too_many_arguments)]
fn subtree_log_prior_walk(
    tree: &TreeStructure,
    node: usize,
    rows: &[usize],
    depth: usize,
    data: &[Vec<f64>],
    index: &DataIndex,
    scratch: &mut IndexScratch,
    prior: &TreePrior,
) -> Option<f64> {
    match &tree.nodes[node] {
        Node::Leaf { .. } => Some((1.0 - prior.split_prob(depth)).ln()),
        Node::Internal { rule, left, right } => {
            let col = &data[rule.covariate];
            let m = index.candidate_count(scratch, rule.covariate, rows);
            // Threshold must be an observed value below the region maximum.
            let seen = rows.iter().any(|&r| col[r] == rule.threshold);
            let above = rows.iter().any(|&r| col[r] > rule.threshold);
            if m == 0 || !seen || !above {
                return None;
            }
            let (mut l_rows, mut r_rows) = (Vec::new(), Vec::new());
            for &r in rows {
                if col[r] <= rule.threshold {
                    l_rows.push(r);
                } else {
                    r_rows.push(r);
                }
            }
            let k = data.len() as f64;
            let here = prior.split_prob(depth).ln() - k.ln() - (m as f64).ln();
            let l =
                subtree_log_prior_walk(tree, *left, &l_rows, depth + 1, data, index, scratch, prior)?;
            let r = subtree_log_prior_walk(
                tree, *right, &r_rows, depth + 1, data, index, scratch, prior,
            )?;
            Some(here + l + r)
        }
    }
}

/// Log prior probability of a whole tree structure on the given data
/// (column-major). Errors if any split is invalid for the rows reaching it.
pub fn log_tree_prior(tree: &TreeStructure, data: &[Vec<f64>], prior: &TreePrior) -> Result<f64> {
    let n = data.first().map(|c| c.len()).unwrap_or(0);
    let rows: Vec<usize> = (0..n).collect();
    let index = DataIndex::new(data);
    let mut scratch = index.scratch();
    subtree_log_prior_walk(tree, 0, &rows, 0, data, &index, &mut scratch, prior).ok_or_else(
        || {
            Error::InvalidTree(
                "a split's threshold is not a candidate value for its region".into(),
            )
        },
    )
}

/// Log prior factors of the subtree at `node` (absolute depth `depth`,
/// region `rows`), or `None` if invalid. The Metropolis update uses this
/// for the two sides of a change/swap, where everything outside the
/// subtree cancels.
#[allow(clippy::too_many_arguments)]
pub fn subtree_log_prior(
    tree: &TreeStructure,
    node: usize,
    rows: &[usize],
    depth: usize,
    data: &[Vec<f64>],
    index: &DataIndex,
    scratch: &mut IndexScratch,
    prior: &TreePrior,
) -> Option<f64> {
    subtree_log_prior_walk(tree, node, rows, depth, data, index, scratch, prior)
}

/// Check that every leaf in the subtree would hold at least `min_leaf`
/// rows and every split stays valid.
fn subtree_feasible(
    tree: &TreeStructure,
    node: usize,
    rows: &[usize],
    data: &[Vec<f64>],
    min_leaf: usize,
) -> bool {
    match &tree.nodes[node] {
        Node::Leaf { .. } => rows.len() >= min_leaf,
        Node::Internal { rule, left, right } => {
            let col = &data[rule.covariate];
            let seen = rows.iter().any(|&r| col[r] == rule.threshold);
            let above = rows.iter().any(|&r| col[r] > rule.threshold);
            if !seen || !above {
                return false;
            }
            let (mut l_rows, mut r_rows) = (Vec::new(), Vec::new());
            for &r in rows {
                if col[r] <= rule.threshold {
                    l_rows.push(r);
                } else {
                    r_rows.push(r);
                }
            }
            subtree_feasible(tree, *left, &l_rows, data, min_leaf)
                && subtree_feasible(tree, *right, &r_rows, data, min_leaf)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    Grow,
    Prune,
    Change,
    Swap,
}

/// A feasible structural proposal.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub tree: TreeStructure,
    pub kind: MoveKind,
    /// log q(old | new) - log q(new | old), the transition-density part of
    /// the Metropolis-Hastings ratio.
    pub correction: f64,
    /// Node (old-tree id; ids are stable across moves) whose subtree is
    /// affected. Everything outside it is untouched.
    pub affected: usize,
    /// Rows routed to `affected`. No move changes the ancestors of the
    /// affected node, so this region is the same in the old and new trees.
    pub region: Vec<usize>,
}

/// Draw one structural proposal. `None` is an infeasible draw: the caller
/// counts it as a rejected Metropolis step.
///
/// Randomness order is fixed: move kind, then node, then (for grow/change)
/// covariate and threshold. `index` must be built from this `data`.
#[allow(clippy::too_many_arguments)]
pub fn propose_move(
    tree: &TreeStructure,
    data: &[Vec<f64>],
    index: &DataIndex,
    scratch: &mut IndexScratch,
    n_rows: usize,
    min_leaf: usize,
    move_probs: &[f64; 4],
    rng: &mut RngStream,
) -> Option<Proposal> {
    let k = data.len();
    let kind = {
        let u = rng.uniform();
        let mut acc = 0.0;
        let kinds = [MoveKind::Grow, MoveKind::Prune, MoveKind::Change, MoveKind::Swap];
        let mut chosen = MoveKind::Swap;
        for (p, kd) in move_probs.iter().zip(kinds) {
            acc += p;
            if u < acc {
                chosen = kd;
                break;
            }
        }
        chosen
    };

    match kind {
        MoveKind::Grow => {
            let leaves = tree.leaves();
            let v = leaves[rng.index(leaves.len())];
            let cov = rng.index(k);
            let rows = tree.region_of(data, n_rows, v);
            let cands = index.candidates(scratch, cov, &rows);
            if cands.is_empty() {
                return None;
            }
            let thr = cands[rng.index(cands.len())];
            let n_cands = cands.len();
            let n_left = rows.iter().filter(|&&r| data[cov][r] <= thr).count();
            if n_left < min_leaf || rows.len() - n_left < min_leaf {
                return None;
            }
            let mut new = tree.clone();
            let left = new.nodes.len();
            new.nodes.push(Node::Leaf { value: 0.0 });
            let right = new.nodes.len();
            new.nodes.push(Node::Leaf { value: 0.0 });
            new.nodes[v] = Node::Internal {
                rule: SplitRule {
                    covariate: cov,
                    threshold: thr,
                },
                left,
                right,
            };
            // Reverse move is a prune of v in the new tree.
            let correction = move_probs[1].ln() - (new.prunable().len() as f64).ln()
                - (move_probs[0].ln()
                    - (leaves.len() as f64).ln()
                    - (k as f64).ln()
                    - (n_cands as f64).ln());
            Some(Proposal {
                tree: new,
                kind,
                correction,
                affected: v,
                region: rows,
            })
        }
        MoveKind::Prune => {
            let prunable = tree.prunable();
            if prunable.is_empty() {
                return None;
            }
            let v = prunable[rng.index(prunable.len())];
            let Node::Internal { rule, .. } = tree.nodes[v] else {
                unreachable!()
            };
            let rows = tree.region_of(data, n_rows, v);
            let m = index.candidate_count(scratch, rule.covariate, &rows);
            let mut new = tree.clone();
            new.nodes[v] = Node::Leaf { value: 0.0 };
            // Reverse move grows v back with the same rule.
            let n_leaves_new = tree.leaves().len() - 1;
            let correction = move_probs[0].ln()
                - (n_leaves_new as f64).ln()
                - (k as f64).ln()
                - (m as f64).ln()
                - (move_probs[1].ln() - (prunable.len() as f64).ln());
            Some(Proposal {
                tree: new,
                kind,
                correction,
                affected: v,
                region: rows,
            })
        }
        MoveKind::Change => {
            let internals = tree.internals();
            if internals.is_empty() {
                return None;
            }
            let v = internals[rng.index(internals.len())];
            let cov_new = rng.index(k);
            let rows = tree.region_of(data, n_rows, v);
            let cands_new = index.candidates(scratch, cov_new, &rows);
            if cands_new.is_empty() {
                return None;
            }
            let thr_new = cands_new[rng.index(cands_new.len())];
            let m_new = cands_new.len();
            let Node::Internal {
                rule: old_rule,
                left,
                right,
            } = tree.nodes[v]
            else {
                unreachable!()
            };
            let mut new = tree.clone();
            new.nodes[v] = Node::Internal {
                rule: SplitRule {
                    covariate: cov_new,
                    threshold: thr_new,
                },
                left,
                right,
            };
            if !subtree_feasible(&new, v, &rows, data, min_leaf) {
                return None;
            }
            let m_old = if old_rule.covariate == cov_new {
                m_new
            } else {
                index.candidate_count(scratch, old_rule.covariate, &rows)
            };
            // Node and covariate pools are identical in both directions;
            // only the candidate counts differ.
            let correction = (m_new as f64).ln() - (m_old as f64).ln();
            Some(Proposal {
                tree: new,
                kind,
                correction,
                affected: v,
                region: rows,
            })
        }
        MoveKind::Swap => {
            let pairs = tree.internal_pairs();
            if pairs.is_empty() {
                return None;
            }
            let (parent, child) = pairs[rng.index(pairs.len())];
            let Node::Internal {
                rule: parent_rule,
                left: pl,
                right: pr,
            } = tree.nodes[parent]
            else {
                unreachable!()
            };
            let Node::Internal {
                rule: child_rule,
                left: cl,
                right: cr,
            } = tree.nodes[child]
            else {
                unreachable!()
            };
            let mut new = tree.clone();
            new.nodes[parent] = Node::Internal {
                rule: child_rule,
                left: pl,
                right: pr,
            };
            new.nodes[child] = Node::Internal {
                rule: parent_rule,
                left: cl,
                right: cr,
            };
            let rows = tree.region_of(data, n_rows, parent);
            if !subtree_feasible(&new, parent, &rows, data, min_leaf) {
                return None;
            }
            // Same structure, same pair count both ways: symmetric.
            Some(Proposal {
                tree: new,
                kind,
                correction: 0.0,
                affected: parent,
                region: rows,
            })
        }
    }
}

/// Shared by unit tests here and in the sampler module: exhaustive
/// enumeration of the tree prior on tiny datasets.
#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Enumerate every tree on `rows` up to `max_depth` as (structure,
    /// generative probability), computing the probability by direct
    /// recursion over the generating process - independently of
    /// log_tree_prior's arena walk.
    pub(crate) fn enumerate_trees(
        data: &[Vec<f64>],
        rows: &[usize],
        depth: usize,
        max_depth: usize,
        prior: &TreePrior,
    ) -> Vec<(TreeJson, f64)> {
        let p_split = prior.split_prob(depth);
        let mut out = vec![(TreeJson::Leaf { value: 0.0 }, 1.0 - p_split)];
        if depth == max_depth {
            return out;
        }
        let k = data.len();
        for cov in 0..k {
            let cands = candidate_thresholds(rows.iter().map(|&r| data[cov][r]).collect());
            for &thr in &cands {
                let (mut l_rows, mut r_rows) = (Vec::new(), Vec::new());
                for &r in rows {
                    if data[cov][r] <= thr {
                        l_rows.push(r);
                    } else {
                        r_rows.push(r);
                    }
                }
                let rule_prob = p_split / (k as f64 * cands.len() as f64);
                let lefts = enumerate_trees(data, &l_rows, depth + 1, max_depth, prior);
                let rights = enumerate_trees(data, &r_rows, depth + 1, max_depth, prior);
                for (lt, lp) in &lefts {
                    for (rt, rp) in &rights {
                        out.push((
                            TreeJson::Split {
                                covariate: cov,
                                threshold: thr,
                                left: Box::new(lt.clone()),
                                right: Box::new(rt.clone()),
                            },
                            rule_prob * lp * rp,
                        ));
                    }
                }
            }
        }
        out
    }
}
