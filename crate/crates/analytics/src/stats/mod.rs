//! Hypothesis tests used by the reports.
//!
//! Group-comparison functions take `&[Vec<f64>]` and refer to groups by index;
//! callers attach names.

mod exact;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use exact::multinomial_count;
pub use special::{chi_square_sf, gamma_p, gamma_q, ln_gamma, normal_two_sided_p};

/// Above this many distinct rank assignments `Auto` falls back to the
/// asymptotic distribution.
pub const EXACT_LIMIT: f64 = 50_000.0;
/// Hard cap for an explicitly requested exact p-value.
pub const EXACT_HARD_LIMIT: f64 = 5_000_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("an expected count is zero")]
    ZeroExpectedCount,
    #[error("exact p-value needs {0} permutations")]
    ExactTooLarge(f64),
}

/// How p-values of rank tests are obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PValueMethod {
    /// Exact when the permutation space has at most [`EXACT_LIMIT`] elements.
    #[default]
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub group_a: usize,
    pub group_b: usize,
    pub statistic: f64,
    pub raw_p: f64,
    pub corrected_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test_name: String,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    /// `exact` or `asymptotic`; never `auto`.
    pub method: PValueMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posthoc: Option<Vec<PairwiseResult>>,
}

/// Bonferroni correction: p ↦ min(1, p·m).
pub fn bonferroni(p_values: &[f64], m: usize) -> Result<Vec<f64>, StatsError> {
    if m < p_values.len() {
        return Err(StatsError::InvalidInput(format!(
            "m = {m} is smaller than the number of p-values ({})",
            p_values.len()
        )));
    }
    Ok(p_values.iter().map(|p| (p * m as f64).min(1.0)).collect())
}

/// Pearson χ² test of independence on an r×c table of counts.
pub fn chi_square_independence(table: &[Vec<u64>], yates: bool) -> Result<StatTestResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(StatsError::InvalidInput("table must be at least 2×2".into()));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::InvalidInput("ragged table".into()));
    }
    if yates && (rows, cols) != (2, 2) {
        return Err(StatsError::InvalidInput("continuity correction only applies to 2×2 tables".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64).collect();
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &observed) in row.iter().enumerate() {
            let expected = row_sums[r] * col_sums[c] / total;
            if !(expected > 0.0) {
                return Err(StatsError::ZeroExpectedCount);
            }
            let mut diff = (observed as f64 - expected).abs();
            if yates {
                diff = (diff - 0.5).max(0.0);
            }
            statistic += diff * diff / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    Ok(StatTestResult {
        test_name: "chi-square independence".into(),
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        method: PValueMethod::Asymptotic,
        posthoc: None,
    })
}

/// Pairwise χ² tests between rows, Bonferroni-corrected over all row pairs.
///
/// Columns empty in both rows are dropped; a pair with fewer than two
/// non-empty columns shows no difference and gets statistic 0, p = 1.
pub fn chi_square_pairwise_rows(table: &[Vec<u64>]) -> Result<Vec<PairwiseResult>, StatsError> {
    let k = table.len();
    let m = k * (k - 1) / 2;
    let mut out = Vec::with_capacity(m);
    for a in 0..k {
        for b in a + 1..k {
            let cols: Vec<usize> = (0..table[a].len()).filter(|&c| table[a][c] + table[b][c] > 0).collect();
            let sub: Vec<Vec<u64>> = [a, b].iter().map(|&r| cols.iter().map(|&c| table[r][c]).collect()).collect();
            let (statistic, raw_p) = if cols.len() < 2 {
                (0.0, 1.0)
            } else {
                match chi_square_independence(&sub, false) {
                    Ok(r) => (r.statistic, r.p_value),
                    // One row empty: nothing to compare.
                    Err(StatsError::ZeroExpectedCount) => (0.0, 1.0),
                    Err(e) => return Err(e),
                }
            };
            out.push(PairwiseResult {
                group_a: a,
                group_b: b,
                statistic,
                raw_p,
                corrected_p: (raw_p * m as f64).min(1.0),
            });
        }
    }
    Ok(out)
}

fn check_groups(groups: &[Vec<f64>], min_total: usize) -> Result<usize, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InvalidInput("need at least two groups".into()));
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(StatsError::InvalidInput(format!("group {i} is empty")));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite value".into()));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    if n < min_total {
        return Err(StatsError::InvalidInput(format!("need at least {min_total} observations, got {n}")));
    }
    Ok(n)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn sorted_pool(groups: &[Vec<f64>]) -> Vec<f64> {
    let mut pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled
}

/// Per-group counts above vs. at-or-below the pooled median.
pub fn median_table(groups: &[Vec<f64>]) -> (f64, Vec<Vec<u64>>) {
    let grand = median(&sorted_pool(groups));
    let table = groups
        .iter()
        .map(|g| {
            let above = g.iter().filter(|&&v| v > grand).count() as u64;
            vec![above, g.len() as u64 - above]
        })
        .collect();
    (grand, table)
}

/// Mood's median test (no continuity correction).
pub fn moods_median_test(groups: &[Vec<f64>]) -> Result<StatTestResult, StatsError> {
    check_groups(groups, 2)?;
    let (grand, table) = median_table(groups);
    if table.iter().all(|r| r[0] == 0) {
        return Err(StatsError::DegenerateData(format!("no value lies above the pooled median {grand}")));
    }
    let mut result = chi_square_independence(&table, false)?;
    result.test_name = "Mood's median test".into();
    Ok(result)
}

/// Mood's median test on every pair of groups (each pair uses its own pooled
/// median), Bonferroni-corrected. A pair whose values are all equal gets p = 1.
pub fn moods_pairwise(groups: &[Vec<f64>]) -> Result<Vec<PairwiseResult>, StatsError> {
    check_groups(groups, 2)?;
    let k = groups.len();
    let m = k * (k - 1) / 2;
    let mut out = Vec::with_capacity(m);
    for a in 0..k {
        for b in a + 1..k {
            let pair = [groups[a].clone(), groups[b].clone()];
            let (statistic, raw_p) = match moods_median_test(&pair) {
                Ok(r) => (r.statistic, r.p_value),
                Err(StatsError::DegenerateData(_)) => (0.0, 1.0),
                Err(e) => return Err(e),
            };
            out.push(PairwiseResult {
                group_a: a,
                group_b: b,
                statistic,
                raw_p,
                corrected_p: (raw_p * m as f64).min(1.0),
            });
        }
    }
    Ok(out)
}

/// Average ranks (1-based) of the pooled values, in pooled order, plus the tie
/// sizes.
struct Ranked {
    /// `ranks[g][i]` is the rank of `groups[g][i]`.
    ranks: Vec<Vec<f64>>,
    ties: Vec<usize>,
    n: usize,
}

fn rank(groups: &[Vec<f64>]) -> Ranked {
    let mut pooled: Vec<(f64, usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, vals)| vals.iter().enumerate().map(move |(i, &v)| (v, g, i)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut ties = Vec::new();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &(_, g, i) in &pooled[start..end] {
            ranks[g][i] = avg;
        }
        ties.push(end - start);
        start = end;
    }
    Ranked {
        ranks,
        ties,
        n: pooled.len(),
    }
}

impl Ranked {
    fn sizes(&self) -> Vec<usize> {
        self.ranks.iter().map(Vec::len).collect()
    }

    fn rank_sums(&self) -> Vec<f64> {
        self.ranks.iter().map(|r| r.iter().sum()).collect()
    }

    fn flat(&self) -> Vec<f64> {
        self.ranks.iter().flatten().copied().collect()
    }

    /// Σ(t³ − t) over tie groups.
    fn tie_sum(&self) -> f64 {
        self.ties.iter().map(|&t| (t * t * t - t) as f64).sum()
    }

    fn kw_correction(&self) -> f64 {
        let n = self.n as f64;
        1.0 - self.tie_sum() / (n * n * n - n)
    }

    fn h(&self, sums: &[f64], sizes: &[usize]) -> f64 {
        let n = self.n as f64;
        let raw = 12.0 / (n * (n + 1.0)) * sums.iter().zip(sizes).map(|(r, &k)| r * r / k as f64).sum::<f64>()
            - 3.0 * (n + 1.0);
        (raw / self.kw_correction()).max(0.0)
    }

    fn dunn_variance_term(&self) -> f64 {
        let n = self.n as f64;
        n * (n + 1.0) / 12.0 - self.tie_sum() / (12.0 * (n - 1.0))
    }
}

fn resolve(method: PValueMethod, sizes: &[usize]) -> Result<PValueMethod, StatsError> {
    let count = multinomial_count(sizes);
    match method {
        PValueMethod::Asymptotic => Ok(PValueMethod::Asymptotic),
        PValueMethod::Auto if count <= EXACT_LIMIT => Ok(PValueMethod::Exact),
        PValueMethod::Auto => Ok(PValueMethod::Asymptotic),
        PValueMethod::Exact if count <= EXACT_HARD_LIMIT => Ok(PValueMethod::Exact),
        PValueMethod::Exact => Err(StatsError::ExactTooLarge(count)),
    }
}

/// Kruskal–Wallis H test with average ranks and tie correction.
pub fn kruskal_wallis(groups: &[Vec<f64>], method: PValueMethod) -> Result<StatTestResult, StatsError> {
    check_groups(groups, 3)?;
    let ranked = rank(groups);
    if ranked.ties.len() == 1 {
        return Err(StatsError::DegenerateData("all values are equal".into()));
    }
    let sizes = ranked.sizes();
    let statistic = ranked.h(&ranked.rank_sums(), &sizes);
    let df = (groups.len() - 1) as f64;
    let method = resolve(method, &sizes)?;
    let p_value = match method {
        PValueMethod::Exact => {
            let (mut hits, mut total) = (0u64, 0u64);
            exact::for_each_assignment(&ranked.flat(), &sizes, |sums| {
                total += 1;
                if exact::at_least(ranked.h(sums, &sizes), statistic) {
                    hits += 1;
                }
            });
            hits as f64 / total as f64
        }
        _ => chi_square_sf(statistic, df),
    };
    Ok(StatTestResult {
        test_name: "Kruskal-Wallis H".into(),
        statistic,
        df,
        p_value,
        method,
        posthoc: None,
    })
}

/// Dunn's pairwise test after Kruskal–Wallis, Bonferroni-corrected over
/// k(k−1)/2 pairs. `statistic` is the signed z of group_a minus group_b.
pub fn dunn_posthoc(groups: &[Vec<f64>], method: PValueMethod) -> Result<Vec<PairwiseResult>, StatsError> {
    check_groups(groups, 3)?;
    let ranked = rank(groups);
    let variance = ranked.dunn_variance_term();
    if ranked.ties.len() == 1 || !(variance > 0.0) {
        return Err(StatsError::DegenerateData("all values are equal".into()));
    }
    let sizes = ranked.sizes();
    let sums = ranked.rank_sums();
    let k = groups.len();
    let m = k * (k - 1) / 2;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let mean_diff = |sums: &[f64], a: usize, b: usize| sums[a] / sizes[a] as f64 - sums[b] / sizes[b] as f64;
    let z: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| {
            mean_diff(&sums, a, b) / (variance * (1.0 / sizes[a] as f64 + 1.0 / sizes[b] as f64)).sqrt()
        })
        .collect();

    let raw: Vec<f64> = match resolve(method, &sizes)? {
        PValueMethod::Exact => {
            // |z| is monotone in |mean-rank difference| for a fixed pair.
            let observed: Vec<f64> = pairs.iter().map(|&(a, b)| mean_diff(&sums, a, b).abs()).collect();
            let mut hits = vec![0u64; pairs.len()];
            let mut total = 0u64;
            exact::for_each_assignment(&ranked.flat(), &sizes, |perm| {
                total += 1;
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    if exact::at_least(mean_diff(perm, a, b).abs(), observed[i]) {
                        hits[i] += 1;
                    }
                }
            });
            hits.iter().map(|&h| h as f64 / total as f64).collect()
        }
        _ => z.iter().map(|&z| normal_two_sided_p(z)).collect(),
    };
    let corrected = bonferroni(&raw, m)?;
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| PairwiseResult {
            group_a: a,
            group_b: b,
            statistic: z[i],
            raw_p: raw[i],
            corrected_p: corrected[i],
        })
        .collect())
}

/// Binomial standard error sqrt(p(1−p)/n).
pub fn binomial_se(successes: u64, n: u64) -> Option<f64> {
    if n == 0 {
        return None;
    }
    let p = successes as f64 / n as f64;
    Some((p * (1.0 - p) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bonferroni_examples() {
        let out = bonferroni(&[0.01, 0.02], 3).unwrap();
        assert!(close(out[0], 0.03, 1e-15) && close(out[1], 0.06, 1e-15));
        assert_eq!(bonferroni(&[0.5], 3).unwrap(), vec![1.0]);
        assert_eq!(bonferroni(&[0.123, 0.7], 2).unwrap()[0], 0.246);
        assert_eq!(bonferroni(&[0.123], 1).unwrap(), vec![0.123]);
        assert!(bonferroni(&[0.1, 0.2], 1).is_err());
    }

    #[test]
    fn chi_square_two_by_two() {
        let r = chi_square_independence(&[vec![10, 20], vec![20, 10]], false).unwrap();
        assert!(close(r.statistic, 20.0 / 3.0, 1e-12));
        assert_eq!(r.df, 1.0);
        assert!(close(r.p_value, 0.009_823, 1e-5), "{}", r.p_value);
        let uniform = chi_square_independence(&[vec![5, 5], vec![5, 5]], false).unwrap();
        assert_eq!(uniform.statistic, 0.0);
        assert_eq!(uniform.p_value, 1.0);
    }

    #[test]
    fn yates_shrinks_the_statistic() {
        let plain = chi_square_independence(&[vec![10, 20], vec![20, 10]], false).unwrap();
        let yates = chi_square_independence(&[vec![10, 20], vec![20, 10]], true).unwrap();
        // |O−E| = 5 → 4.5 in each cell, E = 15.
        assert!(close(yates.statistic, 4.0 * 4.5 * 4.5 / 15.0, 1e-12));
        assert!(yates.statistic < plain.statistic);
        assert!(chi_square_independence(&[vec![1, 2, 3], vec![3, 2, 1]], true).is_err());
    }

    #[test]
    fn zero_expected_count() {
        assert_eq!(
            chi_square_independence(&[vec![0, 5], vec![0, 7]], false).unwrap_err(),
            StatsError::ZeroExpectedCount
        );
    }

    #[test]
    fn mood_worked_example() {
        let groups = vec![vec![1.0, 2.0, 3.0, 10.0], vec![4.0, 11.0, 12.0, 13.0]];
        let (grand, table) = median_table(&groups);
        assert_eq!(grand, 7.0);
        assert_eq!(table, vec![vec![1, 3], vec![3, 1]]);
        let r = moods_median_test(&groups).unwrap();
        assert!(close(r.statistic, 2.0, 1e-12));
    }

    #[test]
    fn mood_identical_groups_and_degenerate() {
        let g = vec![1.0, 2.0, 3.0, 4.0];
        let r = moods_median_test(&[g.clone(), g]).unwrap();
        assert!(close(r.p_value, 1.0, 1e-12));
        assert!(matches!(
            moods_median_test(&[vec![2.0, 2.0], vec![2.0]]),
            Err(StatsError::DegenerateData(_))
        ));
        let three = moods_median_test(&[vec![1.0, 5.0], vec![2.0, 6.0], vec![3.0, 7.0]]).unwrap();
        assert_eq!(three.df, 2.0);
    }

    #[test]
    fn kruskal_wallis_separated_groups() {
        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let r = kruskal_wallis(&groups, PValueMethod::Asymptotic).unwrap();
        assert!(close(r.statistic, 7.2, 1e-12));
        assert!(close(r.p_value, (-3.6f64).exp(), 1e-12));
        let exact = kruskal_wallis(&groups, PValueMethod::Auto).unwrap();
        assert_eq!(exact.method, PValueMethod::Exact);
        // Only the 3! orderings of the three blocks reach H = 7.2.
        assert!(close(exact.p_value, 6.0 / 1680.0, 1e-12));
    }

    #[test]
    fn kruskal_wallis_degenerate() {
        assert!(matches!(
            kruskal_wallis(&[vec![1.0, 1.0], vec![1.0]], PValueMethod::Auto),
            Err(StatsError::DegenerateData(_))
        ));
        assert!(kruskal_wallis(&[vec![1.0], vec![2.0]], PValueMethod::Auto).is_err());
    }

    #[test]
    fn dunn_identical_and_correction() {
        let same = dunn_posthoc(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]], PValueMethod::Asymptotic).unwrap();
        assert_eq!(same[0].statistic, 0.0);
        assert_eq!(same[0].raw_p, 1.0);

        let groups = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        for method in [PValueMethod::Asymptotic, PValueMethod::Exact] {
            let out = dunn_posthoc(&groups, method).unwrap();
            assert_eq!(out.len(), 3);
            let extreme = out.iter().find(|p| (p.group_a, p.group_b) == (0, 2)).unwrap();
            assert!(extreme.statistic.abs() > 0.0);
            assert!(close(extreme.corrected_p, 3.0 * extreme.raw_p, 1e-15));
        }
    }

    #[test]
    fn exact_limit_is_enforced() {
        let big: Vec<Vec<f64>> = (0..3).map(|g| (0..10).map(|i| f64::from(g * 10 + i)).collect()).collect();
        assert_eq!(kruskal_wallis(&big, PValueMethod::Auto).unwrap().method, PValueMethod::Asymptotic);
        assert!(matches!(kruskal_wallis(&big, PValueMethod::Exact), Err(StatsError::ExactTooLarge(_))));
    }

    #[test]
    fn binomial_se_example() {
        assert!(close(binomial_se(6, 10).unwrap(), (0.024f64).sqrt(), 1e-15));
        assert_eq!(binomial_se(0, 0), None);
    }
}
