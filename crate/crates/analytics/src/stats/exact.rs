//! Exhaustive enumeration of rank-to-group assignments for small samples.

use super::special::ln_gamma;

/// Number of distinct assignments of N pooled observations to groups of the
/// given sizes: N! / ∏ n_i!.
pub fn multinomial_count(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    let ln = ln_gamma(n as f64 + 1.0) - sizes.iter().map(|&s| ln_gamma(s as f64 + 1.0)).sum::<f64>();
    ln.exp().round()
}

/// Calls `visit` with the per-group rank sums of every distinct assignment of
/// `ranks` to groups of `sizes`.
pub fn for_each_assignment(ranks: &[f64], sizes: &[usize], mut visit: impl FnMut(&[f64])) {
    let mut remaining = sizes.to_vec();
    let mut sums = vec![0.0; sizes.len()];
    recurse(ranks, 0, &mut remaining, &mut sums, &mut visit);
}

fn recurse(ranks: &[f64], pos: usize, remaining: &mut [usize], sums: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    if pos == ranks.len() {
        visit(sums);
        return;
    }
    for g in 0..remaining.len() {
        if remaining[g] == 0 {
            continue;
        }
        remaining[g] -= 1;
        sums[g] += ranks[pos];
        recurse(ranks, pos + 1, remaining, sums, visit);
        sums[g] -= ranks[pos];
        remaining[g] += 1;
    }
}

/// `candidate ≥ observed` up to floating-point noise in rank sums.
pub fn at_least(candidate: f64, observed: f64) -> bool {
    candidate >= observed - 1e-9 * observed.abs().max(1.0)
}
