//! Small deterministic reductions and fits.

/// Pairwise (tree) summation; the result depends only on the input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Linear-interpolated quantile of already sorted data, `q ∈ [0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}

pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn median(v: &[f64]) -> f64 {
    quantile_sorted(&sorted(v), 0.5)
}

/// Observed convergence order from errors at refinement ratio `ratio`.
pub fn observed_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// Richardson extrapolation of `f(h) = f0 + C h^p` from two levels
/// `h` and `h/ratio`. Returns `(f0, error_estimate)`; the error bar is
/// the size of the correction.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> (f64, f64) {
    let k = ratio.powf(order);
    let corr = (fine - coarse) / (k - 1.0);
    (fine + corr, corr.abs())
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_and_quantiles() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let (s, c) = linear_fit(&pts);
        assert!((s + 2.0).abs() < 1e-14 && (c - 3.0).abs() < 1e-14);
        let q = sorted(&[3.0, 1.0, 2.0, 4.0]);
        assert_eq!(quantile_sorted(&q, 0.5), 2.5);
        assert_eq!(quantile_sorted(&q, 1.0), 4.0);
        assert_eq!(pairwise_sum(&vec![0.1; 1000]), pairwise_sum(&vec![0.1; 1000]));
        assert!((pairwise_sum(&vec![0.5; 1000]) - 500.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_recovers_limit() {
        let f = |h: f64| 2.0 + 0.3 * h * h;
        let (f0, _) = richardson(f(0.2), f(0.1), 2.0, 2.0);
        assert!((f0 - 2.0).abs() < 1e-14);
        assert!((observed_order(f(0.2) - 2.0, f(0.1) - 2.0, 2.0) - 2.0).abs() < 1e-12);
    }
}
