//! Clustering-based backpacking: per-cluster best sequences for every
//! length, a grouped knapsack over those sequences, and storyline assembly.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster_materials, ClusterAssignment, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::features::{MaterialSet, DEFAULT_INCENTIVE};
use crate::model::{wundt_eval, ChannelState, LwcModel};
use crate::scalar::Scalar;
use crate::seed::{sub_seed, CLUSTERING};

pub const STORYLINE_VERSION: &str = "wbp-storyline-v1";
pub const DEFAULT_N_MAX: usize = 8;
pub const DEFAULT_EXHAUSTIVE_THRESHOLD: usize = 8;
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;
pub const DEFAULT_BEAM_WIDTH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum SearchMethod {
    Exact,
    Beam { width: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestSequence<T> {
    pub order: Vec<String>,
    pub value: T,
}

/// Best ordering of each length `1..=entries.len()` within one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSequenceRow<T> {
    pub entries: Vec<BestSequence<T>>,
    pub method: SearchMethod,
}

impl<T: Scalar> BestSequenceRow<T> {
    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Entry for length `l` (1-based).
    pub fn get(&self, l: usize) -> Option<&BestSequence<T>> {
        l.checked_sub(1).and_then(|i| self.entries.get(i))
    }
}

/// Number of ordered arrangements of lengths `1..=max_len` drawn from `m`
/// items, saturating.
pub fn arrangement_count(m: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for l in 0..max_len.min(m) {
        term = term.saturating_mul((m - l) as u128);
        total = total.saturating_add(term);
    }
    total
}

/// Cluster members as set indices, sorted by id so index order is id order.
fn sorted_members<S: AsRef<str>>(cluster: &[S], set: &MaterialSet) -> Result<Vec<usize>> {
    let mut idx = set.resolve_ids(cluster)?;
    idx.sort_by(|&a, &b| set.get(a).id.cmp(&set.get(b).id));
    Ok(idx)
}

fn ids_of(set: &MaterialSet, order: &[usize]) -> Vec<String> {
    order.iter().map(|&i| set.get(i).id.clone()).collect()
}

struct ExactSearch<'a, T> {
    set: &'a MaterialSet,
    model: &'a LwcModel<T>,
    members: &'a [usize],
    incentive: f64,
    max_len: usize,
    best: Vec<Option<(Vec<usize>, T)>>,
}

impl<T: Scalar> ExactSearch<'_, T> {
    // Visits arrangements in lexicographic id order, so keeping only strict
    // improvements leaves the smallest id sequence among ties.
    fn visit(&mut self, prefix: &mut Vec<usize>, used: &mut [bool], state: ChannelState<T>) -> Result<()> {
        for (local, &i) in self.members.iter().enumerate() {
            if used[local] {
                continue;
            }
            let step = self.set.step::<T>(prefix.last().copied(), i, self.incentive);
            let next = state.push(&step, &self.model.accum);
            let value = wundt_eval(&self.model.wundt, next.intensity(&self.model.accum))?;
            prefix.push(i);
            let slot = &mut self.best[prefix.len() - 1];
            if slot.as_ref().is_none_or(|(_, v)| value > *v) {
                *slot = Some((prefix.clone(), value));
            }
            if prefix.len() < self.max_len {
                used[local] = true;
                self.visit(prefix, used, next)?;
                used[local] = false;
            }
            prefix.pop();
        }
        Ok(())
    }
}

/// Enumerates every ordered arrangement of every length up to `max_len`.
pub fn best_sequences_exact<T: Scalar, S: AsRef<str>>(
    cluster: &[S],
    set: &MaterialSet,
    model: &LwcModel<T>,
    max_len: usize,
    incentive: f64,
    threshold: usize,
) -> Result<BestSequenceRow<T>> {
    if cluster.is_empty() {
        return Err(Error::usage("cluster must not be empty"));
    }
    if cluster.len() > threshold {
        return Err(Error::usage(format!(
            "cluster of {} exceeds the exhaustive threshold {threshold}; use beam search",
            cluster.len()
        )));
    }
    let members = sorted_members(cluster, set)?;
    let max_len = max_len.min(members.len());
    let mut search = ExactSearch {
        set,
        model,
        members: &members,
        incentive,
        max_len,
        best: vec![None; max_len],
    };
    if max_len > 0 {
        let mut used = vec![false; members.len()];
        search.visit(&mut Vec::with_capacity(max_len), &mut used, ChannelState::default())?;
    }
    let entries = search
        .best
        .into_iter()
        .map(|b| {
            let (order, value) = b.expect("every length up to the cluster size is reachable");
            BestSequence {
                order: ids_of(set, &order),
                value,
            }
        })
        .collect();
    Ok(BestSequenceRow {
        entries,
        method: SearchMethod::Exact,
    })
}

#[derive(Clone)]
struct Partial<T> {
    /// Local ranks (positions in the id-sorted member list).
    order: Vec<usize>,
    used: Vec<bool>,
    state: ChannelState<T>,
    score: T,
}

fn by_score_then_ids<T: Scalar>(a: &Partial<T>, b: &Partial<T>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.order.cmp(&b.order))
}

/// Left-to-right beam search keeping the `beam_width` highest-scoring
/// partial orderings per length. Heuristic: the Wundt curve is not monotone,
/// so a pruned prefix may have led to the optimum.
pub fn best_sequences_beam<T: Scalar, S: AsRef<str>>(
    cluster: &[S],
    set: &MaterialSet,
    model: &LwcModel<T>,
    max_len: usize,
    incentive: f64,
    beam_width: usize,
) -> Result<BestSequenceRow<T>> {
    if beam_width == 0 {
        return Err(Error::usage("beam width must be at least 1"));
    }
    if cluster.is_empty() {
        return Err(Error::usage("cluster must not be empty"));
    }
    let members = sorted_members(cluster, set)?;
    let m = members.len();
    let max_len = max_len.min(m);
    let mut beam = vec![Partial {
        order: Vec::new(),
        used: vec![false; m],
        state: ChannelState::default(),
        score: T::zero(),
    }];
    let mut entries = Vec::with_capacity(max_len);
    for _ in 0..max_len {
        let mut next = Vec::new();
        for p in &beam {
            let prev = p.order.last().map(|&r| members[r]);
            for r in 0..m {
                if p.used[r] {
                    continue;
                }
                let step = set.step::<T>(prev, members[r], incentive);
                let state = p.state.push(&step, &model.accum);
                let score = wundt_eval(&model.wundt, state.intensity(&model.accum))?;
                let mut order = p.order.clone();
                order.push(r);
                let mut used = p.used.clone();
                used[r] = true;
                next.push(Partial {
                    order,
                    used,
                    state,
                    score,
                });
            }
        }
        next.sort_by(by_score_then_ids);
        next.truncate(beam_width);
        let best = &next[0];
        entries.push(BestSequence {
            order: best.order.iter().map(|&r| set.get(members[r]).id.clone()).collect(),
            value: best.score,
        });
        beam = next;
    }
    Ok(BestSequenceRow {
        entries,
        method: SearchMethod::Beam { width: beam_width },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution<T> {
    /// Chosen length per cluster; 0 means the cluster is left out.
    pub chosen: Vec<usize>,
    pub total_value: T,
    pub total_length: usize,
}

/// Grouped knapsack over per-cluster sequences: item `l` of group `j` weighs
/// `l` and is worth `values[j][l - 1]`, at most one item per group, total
/// weight at most `n_max`. The state is the exact used weight, held in one
/// array updated in place from high weight to low; each state carries the
/// lengths that reached it so the answer needs no backtracking.
pub fn grouped_knapsack<T: Scalar>(values: &[Vec<T>], n_max: usize) -> Result<KnapsackSolution<T>> {
    if values.is_empty() {
        return Err(Error::usage("grouped knapsack needs at least one group"));
    }
    if n_max == 0 {
        return Err(Error::usage("n_max must be at least 1"));
    }
    let k = values.len();
    let mut dp: Vec<Option<T>> = vec![None; n_max + 1];
    let mut choice: Vec<Vec<usize>> = vec![vec![0; k]; n_max + 1];
    dp[0] = Some(T::zero());
    for (j, group) in values.iter().enumerate() {
        for i in (1..=n_max).rev() {
            for l in 1..=group.len().min(i) {
                let Some(base) = dp[i - l] else { continue };
                let cand = base + group[l - 1];
                if dp[i].is_none_or(|cur| cand > cur) {
                    dp[i] = Some(cand);
                    let mut c = choice[i - l].clone();
                    c[j] = l;
                    choice[i] = c;
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n_max {
        if let (Some(v), Some(b)) = (dp[i], dp[best]) {
            if v > b {
                best = i;
            }
        }
    }
    Ok(KnapsackSolution {
        chosen: choice[best].clone(),
        total_value: dp[best].expect("dp[0] is always feasible"),
        total_length: best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub cluster: usize,
    pub ids: Vec<String>,
    pub score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoryItem {
    pub id: String,
    pub cluster: usize,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSolve {
    pub cluster: usize,
    pub size: usize,
    #[serde(flatten)]
    pub method: SearchMethod,
    pub arrangements: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverMeta {
    pub k: usize,
    pub n_max: usize,
    pub seed: u64,
    pub clustering_seed: u64,
    pub exhaustive_threshold: usize,
    pub enumeration_cap: String,
    pub beam_width: usize,
    pub incentive: f64,
    pub clusters: Vec<ClusterSolve>,
}

/// Cluster-contiguous selection. Blocks run in descending score order with
/// ties broken by cluster index; the objective is the sum of block scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Storyline<T> {
    pub blocks: Vec<Block<T>>,
    pub items: Vec<StoryItem>,
    pub total_objective: T,
    pub meta: Option<SolverMeta>,
}

#[derive(Serialize)]
struct BlockDoc<'a> {
    cluster: usize,
    ids: &'a [String],
    score: f64,
}

#[derive(Serialize)]
struct StorylineDoc<'a> {
    version: &'static str,
    items: &'a [StoryItem],
    blocks: Vec<BlockDoc<'a>>,
    total_objective: f64,
    total_duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver: Option<&'a SolverMeta>,
}

impl<T: Scalar> Storyline<T> {
    /// Orders blocks for presentation, drops empty ones and lays out items.
    pub fn from_blocks(mut blocks: Vec<Block<T>>, set: &MaterialSet) -> Result<Self> {
        blocks.retain(|b| !b.ids.is_empty());
        blocks.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then(a.cluster.cmp(&b.cluster))
        });
        let mut items = Vec::new();
        for b in &blocks {
            for id in &b.ids {
                let i = set
                    .index_of(id)
                    .ok_or_else(|| Error::usage(format!("unknown material id `{id}`")))?;
                items.push(StoryItem {
                    id: id.clone(),
                    cluster: b.cluster,
                    duration_s: set.get(i).duration_s,
                });
            }
        }
        let total_objective = blocks.iter().fold(T::zero(), |acc, b| acc + b.score);
        Ok(Self {
            blocks,
            items,
            total_objective,
            meta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.id.as_str()).collect()
    }

    /// Checks the budget, one contiguous block per cluster, and that the
    /// objective is the sum of block scores to within `1e-12`.
    pub fn check(&self, n_max: usize) -> Result<()> {
        if self.items.len() > n_max {
            return Err(Error::Domain(format!(
                "{} items exceed the budget {n_max}",
                self.items.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for w in self.items.windows(2) {
            if w[0].cluster != w[1].cluster && !seen.insert(w[0].cluster) {
                return Err(Error::Domain(format!("cluster {} is split", w[0].cluster)));
            }
        }
        if let Some(last) = self.items.last() {
            if seen.contains(&last.cluster) {
                return Err(Error::Domain(format!("cluster {} is split", last.cluster)));
            }
        }
        let sum = self.blocks.iter().fold(T::zero(), |acc, b| acc + b.score);
        if (sum - self.total_objective).abs().as_f64() > 1e-12 {
            return Err(Error::Domain("objective differs from the block sum".into()));
        }
        Ok(())
    }

    /// `wbp-storyline-v1` JSON document.
    pub fn to_json(&self) -> String {
        let doc = StorylineDoc {
            version: STORYLINE_VERSION,
            items: &self.items,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    cluster: b.cluster,
                    ids: &b.ids,
                    score: b.score.as_f64(),
                })
                .collect(),
            total_objective: self.total_objective.as_f64(),
            total_duration_s: self.items.iter().map(|i| i.duration_s).sum(),
            solver: self.meta.as_ref(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("storyline serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorylineConfig {
    pub k: usize,
    pub n_max: usize,
    /// Master seed; clustering uses a named sub-seed of it.
    pub seed: u64,
    pub exhaustive_threshold: usize,
    pub enumeration_cap: u128,
    pub beam_width: usize,
    pub incentive: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for StorylineConfig {
    fn default() -> Self {
        Self {
            k: crate::clustering::DEFAULT_K,
            n_max: DEFAULT_N_MAX,
            seed: 0,
            exhaustive_threshold: DEFAULT_EXHAUSTIVE_THRESHOLD,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            beam_width: DEFAULT_BEAM_WIDTH,
            incentive: DEFAULT_INCENTIVE,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }
}

impl StorylineConfig {
    pub fn clustering_seed(&self) -> u64 {
        sub_seed(self.seed, CLUSTERING)
    }

    /// Exact enumeration when the cluster is small and its arrangement count
    /// fits under the cap; beam search otherwise.
    pub fn method_for(&self, size: usize) -> SearchMethod {
        let max_len = size.min(self.n_max);
        if size <= self.exhaustive_threshold && arrangement_count(size, max_len) <= self.enumeration_cap {
            SearchMethod::Exact
        } else {
            SearchMethod::Beam {
                width: self.beam_width,
            }
        }
    }
}

/// Clusters the set, then runs [`generate_storyline_with`].
pub fn generate_storyline<T: Scalar>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    cfg: &StorylineConfig,
) -> Result<(Storyline<T>, ClusterAssignment<T>)> {
    if cfg.k == 0 || cfg.k > set.len() {
        return Err(Error::usage(format!(
            "k = {} must lie in [1, {}]",
            cfg.k,
            set.len()
        )));
    }
    let assignment = cluster_materials(set, cfg.k, cfg.clustering_seed(), cfg.max_iter, T::lit(cfg.tol))?;
    let story = generate_storyline_with(set, model, &assignment, cfg)?;
    Ok((story, assignment))
}

/// Best-sequence rows per cluster (in parallel), the grouped knapsack over
/// them, and block assembly, for a given cluster assignment.
pub fn generate_storyline_with<T: Scalar>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    assignment: &ClusterAssignment<T>,
    cfg: &StorylineConfig,
) -> Result<Storyline<T>> {
    if cfg.n_max == 0 {
        return Err(Error::usage("n_max must be at least 1"));
    }
    if !(cfg.incentive >= 0.0 && cfg.incentive.is_finite()) {
        return Err(Error::usage("incentive must be non-negative"));
    }
    let k = assignment.k();
    let clusters: Vec<Vec<&str>> = (0..k)
        .map(|j| {
            assignment
                .members(j)
                .into_iter()
                .map(|i| assignment.ids[i].as_str())
                .collect()
        })
        .collect();
    let rows: Vec<Option<BestSequenceRow<T>>> = clusters
        .par_iter()
        .map(|members| {
            if members.is_empty() {
                return Ok(None);
            }
            let row = match cfg.method_for(members.len()) {
                SearchMethod::Exact => best_sequences_exact(
                    members,
                    set,
                    model,
                    cfg.n_max,
                    cfg.incentive,
                    cfg.exhaustive_threshold,
                )?,
                SearchMethod::Beam { width } => {
                    best_sequences_beam(members, set, model, cfg.n_max, cfg.incentive, width)?
                }
            };
            Ok(Some(row))
        })
        .collect::<Result<_>>()?;

    let values: Vec<Vec<T>> = rows
        .iter()
        .map(|r| r.as_ref().map(|r| r.values()).unwrap_or_default())
        .collect();
    let solution = grouped_knapsack(&values, cfg.n_max)?;
    let blocks = solution
        .chosen
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0)
        .map(|(j, &l)| {
            let entry = rows[j].as_ref().and_then(|r| r.get(l)).expect("chosen length exists");
            Block {
                cluster: j,
                ids: entry.order.clone(),
                score: entry.value,
            }
        })
        .collect();
    let mut story = Storyline::from_blocks(blocks, set)?;
    story.meta = Some(SolverMeta {
        k,
        n_max: cfg.n_max,
        seed: cfg.seed,
        clustering_seed: cfg.clustering_seed(),
        exhaustive_threshold: cfg.exhaustive_threshold,
        enumeration_cap: cfg.enumeration_cap.to_string(),
        beam_width: cfg.beam_width,
        incentive: cfg.incentive,
        clusters: clusters
            .iter()
            .zip(&rows)
            .enumerate()
            .map(|(j, (members, row))| ClusterSolve {
                cluster: j,
                size: members.len(),
                method: row.as_ref().map_or(SearchMethod::Exact, |r| r.method),
                arrangements: arrangement_count(members.len(), cfg.n_max).to_string(),
            })
            .collect(),
    });
    Ok(story)
}
