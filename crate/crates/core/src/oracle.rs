//! Exhaustive reference solver, naive baselines and the expected revenue
//! uplift calculator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::features::{DissimilarityMatrix, Material, MaterialSet};
use crate::model::{sequence_score, LwcModel};
use crate::scalar::Scalar;
use crate::sequencer::{Block, Storyline};

/// Largest instance [`brute_force_storyline`] accepts.
pub const MAX_ORACLE_MATERIALS: usize = 8;
pub const MAX_ORACLE_CLUSTERS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce<T> {
    pub storyline: Storyline<T>,
    /// Feasible per-cluster choice tuples examined.
    pub enumerated: u64,
}

fn score_ids<T: Scalar>(set: &MaterialSet, model: &LwcModel<T>, ids: &[&str], incentive: f64) -> Result<T> {
    let seq = crate::features::sequence_features::<T, _>(ids, set, incentive)?;
    sequence_score(model, &seq)
}

/// Every ordered arrangement of every length (including the empty one),
/// in lexicographic order of the sorted input.
fn arrangements<'a>(items: &[&'a str], max_len: usize) -> Vec<Vec<&'a str>> {
    fn rec<'a>(items: &[&'a str], used: &mut [bool], cur: &mut Vec<&'a str>, max_len: usize, out: &mut Vec<Vec<&'a str>>) {
        out.push(cur.clone());
        if cur.len() == max_len {
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                cur.push(items[i]);
                rec(items, used, cur, max_len, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut sorted = items.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    rec(&sorted, &mut vec![false; sorted.len()], &mut Vec::new(), max_len, &mut out);
    out
}

/// Exact optimum of the summed per-cluster objective under the budget, by
/// enumerating every combination of per-cluster arrangements.
pub fn brute_force_storyline<T: Scalar>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    labels: &ClusterAssignment<T>,
    n_max: usize,
    incentive: f64,
) -> Result<BruteForce<T>> {
    if set.len() > MAX_ORACLE_MATERIALS || labels.k() > MAX_ORACLE_CLUSTERS {
        return Err(Error::usage(format!(
            "oracle handles at most {MAX_ORACLE_MATERIALS} materials in {MAX_ORACLE_CLUSTERS} clusters, got {} in {}",
            set.len(),
            labels.k()
        )));
    }
    if n_max == 0 {
        return Err(Error::usage("n_max must be at least 1"));
    }
    let k = labels.k();
    let mut options: Vec<Vec<(Vec<&str>, T)>> = Vec::with_capacity(k);
    for j in 0..k {
        let members: Vec<&str> = labels
            .ids
            .iter()
            .zip(&labels.labels)
            .filter(|(_, &l)| l == j)
            .map(|(id, _)| id.as_str())
            .collect();
        let mut opts = Vec::new();
        for arr in arrangements(&members, n_max) {
            let v = if arr.is_empty() {
                T::zero()
            } else {
                score_ids(set, model, &arr, incentive)?
            };
            opts.push((arr, v));
        }
        options.push(opts);
    }

    let mut best: Option<(Vec<usize>, T)> = None;
    let mut enumerated = 0u64;
    let mut pick = vec![0usize; k];
    loop {
        let len: usize = pick.iter().enumerate().map(|(j, &p)| options[j][p].0.len()).sum();
        if len <= n_max {
            enumerated += 1;
            let total = pick
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (j, &p)| acc + options[j][p].1);
            if best.as_ref().is_none_or(|(_, b)| total > *b) {
                best = Some((pick.clone(), total));
            }
        }
        // Odometer increment over the choice tuple.
        let mut j = k;
        loop {
            if j == 0 {
                let (choice, _) = best.expect("the empty selection is always feasible");
                let blocks = choice
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| Block {
                        cluster: j,
                        ids: options[j][p].0.iter().map(|s| s.to_string()).collect(),
                        score: options[j][p].1,
                    })
                    .collect();
                return Ok(BruteForce {
                    storyline: Storyline::from_blocks(blocks, set)?,
                    enumerated,
                });
            }
            j -= 1;
            pick[j] += 1;
            if pick[j] < options[j].len() {
                break;
            }
            pick[j] = 0;
        }
    }
}

fn single_block<T: Scalar>(set: &MaterialSet, model: &LwcModel<T>, order: Vec<String>, incentive: f64) -> Result<Storyline<T>> {
    let score = if order.is_empty() {
        T::zero()
    } else {
        let refs: Vec<&str> = order.iter().map(String::as_str).collect();
        score_ids(set, model, &refs, incentive)?
    };
    Storyline::from_blocks(
        vec![Block {
            cluster: 0,
            ids: order,
            score,
        }],
        set,
    )
}

/// Uniformly random subset of `min(n_max, |set|)` materials in random order,
/// scored as one sequence.
pub fn baseline_random<T: Scalar>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    n_max: usize,
    seed: u64,
    incentive: f64,
) -> Result<Storyline<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..set.len()).collect();
    idx.shuffle(&mut rng);
    idx.truncate(n_max.min(set.len()));
    let order = idx.iter().map(|&i| set.get(i).id.clone()).collect();
    single_block(set, model, order, incentive)
}

/// Appends whichever material most raises the running score, stopping when
/// nothing improves it, the budget is used, or the set is exhausted. Ignores
/// clusters.
pub fn baseline_greedy<T: Scalar>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    n_max: usize,
    incentive: f64,
) -> Result<Storyline<T>> {
    let mut ids: Vec<&str> = set.materials().iter().map(|m| m.id.as_str()).collect();
    ids.sort();
    let mut order: Vec<&str> = Vec::new();
    let mut current = T::neg_infinity();
    while order.len() < n_max {
        let mut best: Option<(&str, T)> = None;
        for id in &ids {
            if order.contains(id) {
                continue;
            }
            let mut cand = order.clone();
            cand.push(id);
            let v = score_ids(set, model, &cand, incentive)?;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((id, v));
            }
        }
        match best {
            Some((id, v)) if v > current => {
                order.push(id);
                current = v;
            }
            _ => break,
        }
    }
    single_block(set, model, order.into_iter().map(String::from).collect(), incentive)
}

/// Summed per-cluster objective of an ordering when it keeps each cluster in
/// one contiguous run; `None` when it splits a cluster.
pub fn contiguous_objective<T: Scalar, S: AsRef<str>>(
    set: &MaterialSet,
    model: &LwcModel<T>,
    labels: &ClusterAssignment<T>,
    order: &[S],
    incentive: f64,
) -> Result<Option<T>> {
    let mut runs: Vec<(usize, Vec<&str>)> = Vec::new();
    for id in order {
        let id = id.as_ref();
        let c = labels
            .label_of(id)
            .ok_or_else(|| Error::usage(format!("unlabelled material `{id}`")))?;
        match runs.last_mut() {
            Some((last, run)) if *last == c => run.push(id),
            _ => {
                if runs.iter().any(|(l, _)| *l == c) {
                    return Ok(None);
                }
                runs.push((c, vec![id]));
            }
        }
    }
    let mut total = T::zero();
    for (_, run) in &runs {
        total = total + score_ids(set, model, run, incentive)?;
    }
    Ok(Some(total))
}

/// Best total value over every choice of at most one length per group
/// within the budget, by direct enumeration of all combinations.
pub fn knapsack_exhaustive<T: Scalar>(values: &[Vec<T>], n_max: usize) -> T {
    fn rec<T: Scalar>(values: &[Vec<T>], budget: usize) -> T {
        let Some((group, rest)) = values.split_first() else {
            return T::zero();
        };
        let mut best = rec(rest, budget);
        for (l, &v) in group.iter().enumerate().take(budget) {
            let cand = v + rec(rest, budget - (l + 1));
            if cand > best {
                best = cand;
            }
        }
        best
    }
    rec(values, n_max)
}

/// Random frame-free material set of `n` items for fuzzing: scores uniform in
/// `[0, 1]`, roughly a quarter videos, 4-d embeddings and a random symmetric
/// dissimilarity matrix.
pub fn random_instance(seed: u64, n: usize) -> Result<MaterialSet> {
    if n == 0 {
        return Err(Error::usage("instance needs at least one material"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embed = |rng: &mut ChaCha8Rng| (0..4).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let mut materials = Vec::with_capacity(n);
    for i in 0..n {
        let (a, e) = (rng.random::<f64>(), rng.random::<f64>());
        let m = if rng.random_bool(0.25) {
            Material::video(format!("m{i}"), vec![format!("m{i}/0"), format!("m{i}/1")], 4.0, a, e)
                .with_embeddings(vec![embed(&mut rng), embed(&mut rng)])
        } else {
            Material::image(format!("m{i}"), format!("m{i}"), a, e).with_embeddings(vec![embed(&mut rng)])
        };
        materials.push(m);
    }
    // Upper triangle in row-major order, mirrored below the diagonal.
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.random()).collect();
    let at = |i: usize, j: usize| upper[i * n - i * (i + 1) / 2 + (j - i - 1)];
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => at(i, j),
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => at(j, i),
                })
                .collect()
        })
        .collect();
    MaterialSet::new(materials, DissimilarityMatrix::from_rows(rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueCategory<T> {
    pub name: String,
    /// Share of revenue.
    pub weight: T,
    /// Score achieved by the method under evaluation.
    pub x: T,
    /// Score achieved by the comparison method.
    pub y: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevenueInput<T> {
    pub categories: Vec<RevenueCategory<T>>,
}

impl<T: Scalar> RevenueInput<T> {
    pub fn validate(&self) -> Result<()> {
        let mut sum = T::zero();
        for c in &self.categories {
            if !(c.weight >= T::zero() && c.weight <= T::one()) {
                return Err(Error::usage(format!("{}: weight {} outside [0, 1]", c.name, c.weight)));
            }
            if !(c.y > T::zero() && c.y.is_finite()) {
                return Err(Error::usage(format!("{}: comparison score must be positive", c.name)));
            }
            if !(c.x > T::zero() && c.x.is_finite()) {
                return Err(Error::usage(format!("{}: score must be positive", c.name)));
            }
            sum = sum + c.weight;
        }
        if sum.as_f64() > 1.0 + 1e-9 {
            return Err(Error::usage(format!("weights sum to {sum} > 1")));
        }
        Ok(())
    }

    /// Parses `name,weight,x,y` rows. An optional header row and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if categories.is_empty() && fields.first() == Some(&"name") {
                continue;
            }
            let at = format!("line {}", n + 1);
            if fields.len() != 4 {
                return Err(Error::load(at, "expected name,weight,x,y"));
            }
            let num = |i: usize| -> Result<T> {
                fields[i]
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::load(format!("{at} field {}", i + 1), e.to_string()))
            };
            categories.push(RevenueCategory {
                name: fields[0].to_string(),
                weight: num(1)?,
                x: num(2)?,
                y: num(3)?,
            });
        }
        let input = Self { categories };
        input.validate()?;
        Ok(input)
    }
}

/// Revenue-weighted relative improvement `sum_i w_i (x_i - y_i) / y_i`.
pub fn expected_revenue_uplift<T: Scalar>(r: &RevenueInput<T>) -> Result<T> {
    r.validate()?;
    Ok(r
        .categories
        .iter()
        .fold(T::zero(), |acc, c| acc + c.weight * (c.x - c.y) / c.y))
}
