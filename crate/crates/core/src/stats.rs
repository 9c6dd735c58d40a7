//! Small numeric helpers shared by the studies.

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept: my - slope * mx, r_squared }
}

/// Customer counts `round(10^(2 + k/8))` up to `total`, always ending at
/// `total`.
pub fn checkpoint_grid(total: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut k = 0;
    loop {
        let c = 10f64.powf(2.0 + k as f64 / 8.0).round() as u64;
        if c >= total {
            break;
        }
        grid.push(c);
        k += 1;
    }
    grid.push(total);
    grid
}

/// Batch-means standard error for a correlated series.
pub fn batch_means_stderr(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    mean_stderr(&means).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0];
        let fit = linear_fit(&xs, &[3.0, 5.0, 7.0]);
        assert!((fit.slope - 2.0).abs() < 1e-15 && (fit.intercept - 1.0).abs() < 1e-15);
        assert!((fit.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_shape() {
        assert_eq!(checkpoint_grid(1), vec![1]);
        assert_eq!(checkpoint_grid(100), vec![100]);
        let g = checkpoint_grid(100_000);
        assert_eq!(g.first(), Some(&100));
        assert_eq!(g.last(), Some(&100_000));
        assert_eq!(g.len(), 25);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
