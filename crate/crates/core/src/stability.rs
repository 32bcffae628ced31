//! Stability of topic estimates across runs.
//!
//! A topic is viewed as a ranking, either of vocabulary words (rows of the
//! topic-word matrix) or of documents (columns of the document-topic
//! matrix). The distance between two runs is the total topic distance: the
//! mean of per-topic ranking distances under the minimum-cost bipartite
//! matching of topics. Over a run set, the m(m-1)/2 pairwise totals form
//! the stability distribution; smaller is more stable.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::run_io::{RunBundle, RunSet};
use crate::stats::{self, TTest};
use crate::{Error, Result, Scalar};

/// Which estimate matrix a stability measurement ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Rows of the topic-word matrix, ranking vocabulary items.
    B,
    /// Columns of the document-topic matrix, ranking documents.
    Theta,
}

/// Ranking distance between two topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMetric {
    Rbo,
    AvgJaccard,
}

/// Indices of the top-scoring items of one topic, best first, truncated.
/// Ties are broken by ascending index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    items: Vec<usize>,
}

impl RankedList {
    pub fn new(items: Vec<usize>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        if !items.iter().all(|i| seen.insert(*i)) {
            return Err(Error::InvalidArgument(
                "ranked list contains duplicate items".into(),
            ));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Indices of the `depth` largest entries of `scores`, descending, ties by
/// ascending index.
pub fn rank_topic_words<T: Scalar>(scores: &[T], depth: usize) -> RankedList {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        match scores[b].partial_cmp(&scores[a]) {
            Some(ord) if ord != std::cmp::Ordering::Equal => ord,
            _ => a.cmp(&b),
        }
    });
    idx.truncate(depth);
    RankedList { items: idx }
}

/// Prefix overlap sizes X_d for d = 1..=min(|s|, |l|).
fn prefix_overlaps(s: &RankedList, l: &RankedList) -> Vec<usize> {
    let k = s.len().min(l.len());
    let mut seen_s = HashSet::with_capacity(k);
    let mut seen_l = HashSet::with_capacity(k);
    let mut x = 0usize;
    let mut out = Vec::with_capacity(k);
    for d in 0..k {
        let (a, b) = (s.items[d], l.items[d]);
        if a == b {
            x += 1;
        } else {
            if seen_l.contains(&a) {
                x += 1;
            }
            if seen_s.contains(&b) {
                x += 1;
            }
        }
        seen_s.insert(a);
        seen_l.insert(b);
        out.push(x);
    }
    out
}

/// Extrapolated rank-biased overlap of two truncated rankings.
///
/// With X_d the overlap of the depth-d prefixes and k = min(|s|, |l|):
/// `(X_k / k) p^k + ((1 - p) / p) * sum_d (X_d / d) p^d`. Symmetric,
/// in [0, 1], and top-weighted: agreement at early ranks dominates.
pub fn rbo_similarity<T: Scalar>(s: &RankedList, l: &RankedList, p: T) -> Result<T> {
    if s.is_empty() || l.is_empty() {
        return Err(Error::InvalidArgument(
            "ranked lists must be nonempty".into(),
        ));
    }
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::InvalidArgument(format!(
            "rbo persistence must be in (0, 1), got {p}"
        )));
    }
    let overlaps = prefix_overlaps(s, l);
    let k = overlaps.len();
    let mut sum = T::zero();
    let mut p_pow = T::one();
    for (d, &x) in overlaps.iter().enumerate() {
        p_pow = p_pow * p;
        sum = sum + T::from_usize(x).unwrap() / T::from_usize(d + 1).unwrap() * p_pow;
    }
    // p_pow is now p^k
    let agreement_k = T::from_usize(overlaps[k - 1]).unwrap() / T::from_usize(k).unwrap();
    Ok(agreement_k * p_pow + (T::one() - p) / p * sum)
}

/// Mean prefix Jaccard over d = 1..=min(|s|, |l|).
pub fn average_jaccard<T: Scalar>(s: &RankedList, l: &RankedList) -> Result<T> {
    if s.is_empty() || l.is_empty() {
        return Err(Error::InvalidArgument(
            "ranked lists must be nonempty".into(),
        ));
    }
    let overlaps = prefix_overlaps(s, l);
    let k = overlaps.len();
    let mut sum = T::zero();
    for (d, &x) in overlaps.iter().enumerate() {
        // |union of the two d-prefixes| = 2d - X_d
        let union = 2 * (d + 1) - x;
        sum = sum + T::from_usize(x).unwrap() / T::from_usize(union).unwrap();
    }
    Ok(sum / T::from_usize(k).unwrap())
}

/// `1 - similarity` under the chosen metric; in [0, 1].
pub fn topic_distance<T: Scalar>(
    t1: &RankedList,
    t2: &RankedList,
    metric: RankMetric,
    p: T,
) -> Result<T> {
    let sim = match metric {
        RankMetric::Rbo => rbo_similarity(t1, t2, p)?,
        RankMetric::AvgJaccard => average_jaccard(t1, t2)?,
    };
    Ok(T::one() - sim)
}

/// Minimum-cost matching of one run's topics onto another's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMatching<T> {
    /// `permutation[k]` is the matched topic for topic k.
    pub permutation: Vec<usize>,
    /// Distance of each matched pair, indexed by k.
    pub distances: Vec<T>,
    /// Mean matched distance: the total topic distance.
    pub total: T,
}

/// Solve the assignment problem on a K x K topic-distance matrix.
/// `total` is the minimum summed cost divided by K.
pub fn match_topics<T: Scalar>(cost: &Matrix<T>) -> Result<TopicMatching<T>> {
    let (permutation, sum) = crate::assignment::solve(cost)?;
    let k = cost.rows();
    let distances: Vec<T> = (0..k).map(|i| cost.get(i, permutation[i])).collect();
    Ok(TopicMatching {
        permutation,
        distances,
        total: sum / T::from_usize(k.max(1)).unwrap(),
    })
}

/// Ranked views of one run's topics for the given target.
fn ranked_topics<T: Scalar>(run: &RunBundle<T>, target: Target, depth: usize) -> Vec<RankedList> {
    match target {
        Target::B => (0..run.meta.k)
            .map(|k| rank_topic_words(run.b.row(k), depth))
            .collect(),
        Target::Theta => (0..run.meta.k)
            .map(|k| rank_topic_words(&run.theta.column(k), depth))
            .collect(),
    }
}

fn distance_matrix<T: Scalar>(
    a: &[RankedList],
    b: &[RankedList],
    metric: RankMetric,
    p: T,
) -> Result<Matrix<T>> {
    let k = a.len();
    let mut cost = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            cost.set(i, j, topic_distance(&a[i], &b[j], metric, p)?);
        }
    }
    Ok(cost)
}

/// Total topic distance between two runs (mean matched ranking distance).
pub fn total_topic_distance<T: Scalar>(
    run_i: &RunBundle<T>,
    run_j: &RunBundle<T>,
    target: Target,
    metric: RankMetric,
    p: T,
    depth: usize,
) -> Result<TopicMatching<T>> {
    if run_i.meta.k != run_j.meta.k {
        return Err(Error::ContextMismatch(format!(
            "K differs: {} vs {}",
            run_i.meta.k, run_j.meta.k
        )));
    }
    match target {
        Target::B if run_i.meta.v != run_j.meta.v => {
            return Err(Error::ContextMismatch(format!(
                "V differs: {} vs {}",
                run_i.meta.v, run_j.meta.v
            )))
        }
        Target::Theta if run_i.meta.n != run_j.meta.n => {
            return Err(Error::ContextMismatch(format!(
                "N differs: {} vs {}",
                run_i.meta.n, run_j.meta.n
            )))
        }
        _ => {}
    }
    let ranked_i = ranked_topics(run_i, target, depth);
    let ranked_j = ranked_topics(run_j, target, depth);
    let cost = distance_matrix(&ranked_i, &ranked_j, metric, p)?;
    match_topics(&cost)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance<T> {
    pub i: usize,
    pub j: usize,
    pub td: T,
    pub permutation: Vec<usize>,
}

/// All pairwise total topic distances over a run set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport<T> {
    pub target: Target,
    pub metric: RankMetric,
    pub p: T,
    #[serde(rename = "T")]
    pub depth: usize,
    pub pairs: Vec<PairDistance<T>>,
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> StabilityReport<T> {
    pub fn distances(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.td).collect()
    }

    pub fn distances_f64(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .map(|p| p.td.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

/// Pairwise totals for every unordered run pair, ordered (i, j) with i < j.
pub fn runset_stability<T: Scalar>(
    runset: &RunSet<T>,
    target: Target,
    metric: RankMetric,
    p: T,
    depth: usize,
) -> Result<StabilityReport<T>> {
    let m = runset.m();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "stability needs at least 2 runs, got {m}"
        )));
    }
    let ranked: Vec<Vec<RankedList>> = runset
        .runs
        .par_iter()
        .map(|r| ranked_topics(r, target, depth))
        .collect();

    let index_pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();
    let pairs: Vec<PairDistance<T>> = index_pairs
        .par_iter()
        .map(|&(i, j)| {
            let cost = distance_matrix(&ranked[i], &ranked[j], metric, p)?;
            let matching = match_topics(&cost)?;
            Ok(PairDistance {
                i,
                j,
                td: matching.total,
                permutation: matching.permutation,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let distances: Vec<f64> = pairs
        .iter()
        .map(|p| p.td.to_f64().unwrap_or(f64::NAN))
        .collect();
    let mean = T::from_f64(stats::mean(&distances)).unwrap();
    let std = T::from_f64(stats::std_dev(&distances)).unwrap();
    Ok(StabilityReport {
        target,
        metric,
        p,
        depth,
        pairs,
        mean,
        std,
    })
}

/// Welch comparison of two stability distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityComparison {
    pub t: f64,
    pub p_value: f64,
    pub a_is_smaller: bool,
}

pub fn compare_stability<T: Scalar>(
    a: &StabilityReport<T>,
    b: &StabilityReport<T>,
) -> Result<StabilityComparison> {
    let da = a.distances_f64();
    let db = b.distances_f64();
    let test: TTest = stats::welch_t_test(&da, &db)?;
    Ok(StabilityComparison {
        t: test.t,
        p_value: test.p_value,
        a_is_smaller: stats::mean(&da) < stats::mean(&db),
    })
}
