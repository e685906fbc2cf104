//! Distribution summaries, conditioning and the two-sample KS test.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::pedigree::LabeledPair;
use crate::error::{Error, Result};
use crate::model::Sex;

/// Summary over the finite values of a sample; infinite values are only counted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub infinite: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1`); 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolated quantile of sorted values.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary of `values`; an empty (or all-infinite) sample has `count = 0` and NaN statistics.
pub fn summarize(values: &[f64]) -> Summary {
    let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let n = finite.len();
    let infinite = values.len() - n;
    let mean = finite.iter().sum::<f64>() / n as f64;
    let sd = match n {
        0 => f64::NAN,
        1 => 0.0,
        _ => (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt(),
    };
    Summary {
        count: n,
        infinite,
        mean,
        sd,
        min: finite.first().copied().unwrap_or(f64::NAN),
        q1: quantile(&finite, 0.25),
        median: quantile(&finite, 0.5),
        q3: quantile(&finite, 0.75),
        max: finite.last().copied().unwrap_or(f64::NAN),
    }
}

/// How pairs are partitioned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grouping {
    Label,
    /// Four cells of same/different race and sex: `R,S`, `!R,S`, `R,!S`, `!R,!S`.
    Demographic,
    /// `MM`, `FF` or `MF`.
    SexPair,
    /// Bins of `|delta age|` with the given width in years, keyed by lower edge.
    AgeBin(f64),
}

/// Samples and summary of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDistribution {
    pub key: String,
    pub values: Vec<f64>,
    pub summary: Summary,
}

fn group_key(p: &LabeledPair, grouping: Grouping) -> (i64, String) {
    match grouping {
        Grouping::Label => (
            crate::model::PairLabel::ALL.iter().position(|l| *l == p.label).unwrap_or(0) as i64,
            p.label.to_string(),
        ),
        Grouping::Demographic => {
            let r = if p.same_race { "R" } else { "!R" };
            let s = if p.same_sex { "S" } else { "!S" };
            let order = (!p.same_sex as i64) * 2 + !p.same_race as i64;
            (order, format!("{r},{s}"))
        }
        Grouping::SexPair => match p.sexes {
            (Sex::M, Sex::M) => (0, "MM".into()),
            (Sex::F, Sex::F) => (1, "FF".into()),
            _ => (2, "MF".into()),
        },
        Grouping::AgeBin(width) => {
            let bin = (p.delta_age / width).floor() as i64;
            (bin, format!("{}", bin as f64 * width))
        }
    }
}

/// Exhaustive, disjoint partition of `pairs`, ordered by group.
pub fn conditional_distributions(pairs: &[LabeledPair], grouping: Grouping) -> Vec<GroupDistribution> {
    let mut groups: BTreeMap<(i64, String), Vec<f64>> = BTreeMap::new();
    for p in pairs {
        groups.entry(group_key(p, grouping)).or_default().push(p.distance);
    }
    groups
        .into_iter()
        .map(|((_, key), values)| GroupDistribution {
            summary: summarize(&values),
            key,
            values,
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `sup |F_x - F_y|` evaluated at every pooled sample point.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let v = if xs[i].total_cmp(&ys[j]).is_le() { xs[i] } else { ys[j] };
        while i < xs.len() && xs[i].total_cmp(&v).is_eq() {
            i += 1;
        }
        while j < ys.len() && ys[j].total_cmp(&v).is_eq() {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov survival function `Q(lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    // the series converges slowly near 0, where Q is 1 to within 1e-8
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-300 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-tailed test with the asymptotic p-value at effective size `nm / (n + m)`.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(x, y)?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let lambda = (n * m / (n + m)).sqrt() * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// Same statistic with a permutation p-value `(1 + #{D* >= D}) / (1 + permutations)`.
pub fn ks_permutation(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<KsResult> {
    let d = ks_statistic(x, y)?;
    let mut pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..permutations {
        pooled.shuffle(&mut rng);
        let (a, b) = pooled.split_at(x.len());
        if ks_statistic(a, b)? >= d - 1e-12 {
            hits += 1;
        }
    }
    Ok(KsResult {
        statistic: d,
        p_value: (1 + hits) as f64 / (1 + permutations) as f64,
    })
}
