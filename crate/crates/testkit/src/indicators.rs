//! Direct per-window evaluations. `None` marks positions where the indicator
//! is not yet defined.

pub fn returns(close: &[f64], lag: usize) -> Vec<Option<f64>> {
    (0..close.len())
        .map(|t| (t >= lag).then(|| close[t] / close[t - lag] - 1.0))
        .collect()
}

/// RSI built by carrying the averaged gain and loss forward bar by bar.
pub fn rsi(close: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = close.len();
    let mut out = vec![None; n];
    let gains: Vec<f64> = (1..n).map(|t| (close[t] - close[t - 1]).max(0.0)).collect();
    let losses: Vec<f64> = (1..n).map(|t| (close[t - 1] - close[t]).max(0.0)).collect();
    let value = |g: f64, l: f64| {
        if l == 0.0 && g == 0.0 {
            50.0
        } else if l == 0.0 {
            100.0
        } else if g == 0.0 {
            0.0
        } else {
            let rs = g / l;
            100.0 - 100.0 / (1.0 + rs)
        }
    };
    let mut g: f64 = gains[..period].iter().sum::<f64>() / period as f64;
    let mut l: f64 = losses[..period].iter().sum::<f64>() / period as f64;
    out[period] = Some(value(g, l));
    for t in period + 1..n {
        g = ((period - 1) as f64 * g + gains[t - 1]) / period as f64;
        l = ((period - 1) as f64 * l + losses[t - 1]) / period as f64;
        out[t] = Some(value(g, l));
    }
    out
}

/// ADX with Wilder's running-sum smoothing (`S - S/p + x`), the textbook
/// presentation. DI ratios are identical to the mean-form smoothing.
pub fn adx(high: &[f64], low: &[f64], close: &[f64], period: usize) -> Vec<Option<f64>> {
    let n = close.len();
    let p = period as f64;
    let mut tr = Vec::with_capacity(n);
    let mut pdm = Vec::with_capacity(n);
    let mut mdm = Vec::with_capacity(n);
    for t in 1..n {
        let hl = high[t] - low[t];
        let hc = (high[t] - close[t - 1]).abs();
        let lc = (low[t] - close[t - 1]).abs();
        tr.push(hl.max(hc).max(lc));
        let up = high[t] - high[t - 1];
        let down = low[t - 1] - low[t];
        pdm.push(if up > down && up > 0.0 { up } else { 0.0 });
        mdm.push(if down > up && down > 0.0 { down } else { 0.0 });
    }
    // tr[k] belongs to bar k + 1
    let mut s_tr: f64 = tr[..period].iter().sum();
    let mut s_p: f64 = pdm[..period].iter().sum();
    let mut s_m: f64 = mdm[..period].iter().sum();
    let mut dx = vec![None; n];
    let dx_of = |sp: f64, sm: f64, st: f64| {
        if st == 0.0 {
            return 0.0;
        }
        let dip = 100.0 * sp / st;
        let dim = 100.0 * sm / st;
        if dip + dim == 0.0 {
            0.0
        } else {
            100.0 * (dip - dim).abs() / (dip + dim)
        }
    };
    dx[period] = Some(dx_of(s_p, s_m, s_tr));
    for t in period + 1..n {
        s_tr = s_tr - s_tr / p + tr[t - 1];
        s_p = s_p - s_p / p + pdm[t - 1];
        s_m = s_m - s_m / p + mdm[t - 1];
        dx[t] = Some(dx_of(s_p, s_m, s_tr));
    }
    let mut out = vec![None; n];
    let first = 2 * period - 1;
    let mut a = (period..=first).map(|t| dx[t].unwrap()).sum::<f64>() / p;
    out[first] = Some(a);
    for t in first + 1..n {
        a = (a * (p - 1.0) + dx[t].unwrap()) / p;
        out[t] = Some(a);
    }
    out
}

pub fn sma(values: &[f64], period: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|t| {
            (t + 1 >= period).then(|| {
                let mut s = 0.0;
                for v in &values[t + 1 - period..=t] {
                    s += v;
                }
                s / period as f64
            })
        })
        .collect()
}

pub fn sma_close_ratio(close: &[f64], period: usize) -> Vec<Option<f64>> {
    sma(close, period)
        .into_iter()
        .zip(close)
        .map(|(s, c)| s.map(|s| s / c))
        .collect()
}

/// Pearson correlation via `cov / (sd_x * sd_y)` with population moments.
pub fn sma_close_corr(close: &[f64], period: usize) -> Vec<Option<f64>> {
    let avg = sma(close, period);
    (0..close.len())
        .map(|t| {
            if t + 2 < 2 * period {
                return None;
            }
            let xs: Vec<f64> = (t + 1 - period..=t).map(|i| avg[i].unwrap()).collect();
            let ys = &close[t + 1 - period..=t];
            let n = period as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let cov = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
            let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
            let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
            if vx == 0.0 || vy == 0.0 {
                Some(0.0)
            } else {
                Some(cov / vx.sqrt() / vy.sqrt())
            }
        })
        .collect()
}

pub fn rolling_std(values: &[Option<f64>], period: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|t| {
            if t + 1 < period {
                return None;
            }
            let w: Option<Vec<f64>> = values[t + 1 - period..=t].iter().copied().collect();
            let w = w?;
            let m = w.iter().sum::<f64>() / period as f64;
            let var = w.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (period as f64 - 1.0);
            Some(var.sqrt())
        })
        .collect()
}

pub fn vwap_close_ratio(high: &[f64], low: &[f64], close: &[f64], volume: &[f64], period: usize) -> Vec<Option<f64>> {
    (0..close.len())
        .map(|t| {
            if t + 1 < period {
                return None;
            }
            let mut pv = 0.0;
            let mut v = 0.0;
            let mut tp_sum = 0.0;
            for i in t + 1 - period..=t {
                let tp = (high[i] + low[i] + close[i]) / 3.0;
                pv += tp * volume[i];
                v += volume[i];
                tp_sum += tp;
            }
            let vwap = if v == 0.0 { tp_sum / period as f64 } else { pv / v };
            Some(vwap / close[t])
        })
        .collect()
}

/// Largest absolute difference over positions where both are defined, and
/// whether the definedness patterns agree.
pub fn max_abs_diff(engine: &[f64], oracle: &[Option<f64>]) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut same_shape = engine.len() == oracle.len();
    for (e, o) in engine.iter().zip(oracle) {
        match o {
            Some(o) if !e.is_nan() => worst = worst.max((e - o).abs()),
            None if e.is_nan() => {}
            _ => same_shape = false,
        }
    }
    (worst, same_shape)
}
