pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

pub fn sharpe(returns: &[f64], periods_per_year: f64, rf_annual: f64) -> f64 {
    let rf = (1.0 + rf_annual).powf(1.0 / periods_per_year) - 1.0;
    let excess: Vec<f64> = returns.iter().map(|r| r - rf).collect();
    mean(&excess) / sample_std(returns) * periods_per_year.sqrt()
}

pub fn volatility(returns: &[f64], periods_per_year: f64) -> f64 {
    sample_std(returns) * periods_per_year.sqrt()
}

/// Worst `E[j] / E[i] - 1` over all `i <= j`.
pub fn brute_drawdown(equity: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..equity.len() {
        for i in 0..=j {
            worst = worst.min(equity[j] / equity[i] - 1.0);
        }
    }
    worst
}
