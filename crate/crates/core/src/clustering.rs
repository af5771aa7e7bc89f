//! k-means with k-means++ seeding, used to split materials into topic
//! sections.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{representative, MaterialSet};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment<T> {
    /// Material ids in input order.
    pub ids: Vec<String>,
    /// Cluster of `ids[i]`.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    pub inertia: T,
    /// Inertia after each assignment step.
    pub history: Vec<T>,
}

impl<T: Scalar> ClusterAssignment<T> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.labels[i])
    }

    pub fn label_map(&self) -> BTreeMap<String, usize> {
        self.ids.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    /// Member indices (into `ids`) of cluster `j`, ascending by id.
    pub fn members(&self, j: usize) -> Vec<usize> {
        let mut m: Vec<usize> = (0..self.ids.len()).filter(|&i| self.labels[i] == j).collect();
        m.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        m
    }

    /// `id<TAB>cluster` lines in input order.
    pub fn to_text(&self) -> String {
        self.ids
            .iter()
            .zip(&self.labels)
            .map(|(id, l)| format!("{id}\t{l}\n"))
            .collect()
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .fold(T::zero(), |acc, v| acc + v)
}

/// Nearest centroid and its squared distance; ties go to the lower index.
fn nearest<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0]).as_f64()).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && r < *w {
                    chosen = i;
                    break;
                }
                r -= w;
            }
            // Rounding can walk past the last positive weight.
            if d2[chosen] == 0.0 {
                chosen = (0..n).rev().find(|&i| d2[i] > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[pick]).as_f64());
        }
    }
    centroids
}

/// Lloyd iterations from a seeded k-means++ start. Stops when no centroid
/// moves by `tol` or more, or after `max_iter` updates. An empty cluster is
/// re-seeded with the point farthest from its centroid. Labels are finally
/// renumbered so cluster 0 holds the smallest id, cluster 1 the smallest id
/// among the rest, and so on.
pub fn kmeans<T: Scalar>(
    points: &[(String, Vec<T>)],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: T,
) -> Result<ClusterAssignment<T>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::usage(format!("k = {k} must lie in [1, {n}]")));
    }
    let dim = points[0].1.len();
    if points.iter().any(|(_, v)| v.len() != dim) {
        return Err(Error::usage("points have differing dimensions"));
    }
    let vecs: Vec<Vec<T>> = points.iter().map(|(_, v)| v.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(&vecs, k, &mut rng);

    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    let assign = |centroids: &[Vec<T>], labels: &mut [usize]| -> (T, Vec<T>) {
        let mut inertia = T::zero();
        let mut dists = Vec::with_capacity(n);
        for (i, p) in vecs.iter().enumerate() {
            let (j, d) = nearest(p, centroids);
            labels[i] = j;
            inertia = inertia + d;
            dists.push(d);
        }
        (inertia, dists)
    };

    let (mut inertia, mut dists) = assign(&centroids, &mut labels);
    history.push(inertia);
    for _ in 0..max_iter {
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in vecs.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(p) {
                *s = *s + *v;
            }
        }
        let mut next = centroids.clone();
        let mut taken = vec![false; n];
        for j in 0..k {
            if counts[j] > 0 {
                let c = T::lit(counts[j] as f64);
                next[j] = sums[j].iter().map(|s| *s / c).collect();
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    });
                if let Some(i) = far {
                    taken[i] = true;
                    next[j] = vecs[i].clone();
                }
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(T::zero(), T::max);
        centroids = next;
        let (new_inertia, new_dists) = assign(&centroids, &mut labels);
        inertia = new_inertia;
        dists = new_dists;
        history.push(inertia);
        if shift < tol {
            break;
        }
    }

    // Canonical renumbering by smallest member id; empty clusters go last.
    let mut first_id: Vec<(Option<&str>, usize)> = (0..k)
        .map(|j| {
            let min = (0..n)
                .filter(|&i| labels[i] == j)
                .map(|i| points[i].0.as_str())
                .min();
            (min, j)
        })
        .collect();
    first_id.sort_by(|a, b| match (a.0, b.0) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.1.cmp(&b.1),
    });
    let mut remap = vec![0; k];
    for (new, (_, old)) in first_id.iter().enumerate() {
        remap[*old] = new;
    }
    let mut ordered = vec![Vec::new(); k];
    for (old, c) in centroids.into_iter().enumerate() {
        ordered[remap[old]] = c;
    }
    Ok(ClusterAssignment {
        ids: points.iter().map(|(id, _)| id.clone()).collect(),
        labels: labels.iter().map(|&l| remap[l]).collect(),
        centroids: ordered,
        inertia,
        history,
    })
}

/// Clusters a material set on representative vectors (the image embedding or
/// the mean of a video's frame embeddings).
pub fn cluster_materials<T: Scalar>(
    set: &MaterialSet,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: T,
) -> Result<ClusterAssignment<T>> {
    let points: Vec<(String, Vec<T>)> = set
        .materials()
        .iter()
        .map(|m| (m.id.clone(), representative(m).into_iter().map(T::lit).collect()))
        .collect();
    kmeans(&points, k, seed, max_iter, tol)
}

/// Section count for a product category, defaulting to three.
pub fn choose_k(category: &str, table: &BTreeMap<String, usize>) -> usize {
    match table.get(category) {
        Some(&k) => k,
        None => {
            log::info!("category `{category}` has no configured k; using {DEFAULT_K}");
            DEFAULT_K
        }
    }
}

/// Built-in category table.
pub fn default_k_table() -> BTreeMap<String, usize> {
    BTreeMap::from([("clothes".to_string(), 3)])
}
