//! Deterministic reductions.

/// Pairwise (cascade) summation; result depends only on the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_exactly_on_integers() {
        let v: Vec<f64> = (1..=10_000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 50_005_000.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn beats_naive_on_small_increments() {
        let v = vec![0.1; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - exact).abs() <= (naive - exact).abs());
    }
}
