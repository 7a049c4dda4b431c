//! Exponential decay fitting of autocorrelation series with plateau
//! subtraction.

/// Outcome category of a decay fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitFlag {
    /// A log-linear fit was performed.
    Ok,
    /// Every value beyond t = 0 is numerically zero.
    IdenticallyZero,
    /// The series is constant (after the first step) at a nonzero value.
    Constant,
    /// Too few usable points above the noise floor.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct DecayFit {
    /// Decay rate per series step (positive for decay), from the slope of
    /// `ln |C(t) - plateau|`.
    pub rate: Option<f64>,
    /// Detected long-time plateau (0 when the tail keeps decaying).
    pub plateau: f64,
    /// Index window `[t_min, t_max]` the regression used.
    pub window: Option<(usize, usize)>,
    /// RMS residual of the regression in log scale.
    pub residual: Option<f64>,
    pub flag: FitFlag,
}

const NOISE_FLOOR: f64 = 1e-13;

/// Fit `C(t) ~ plateau + a exp(-rate t)` on a series indexed by t = 0, 1, ..
/// (one entry per full period for circuit autocorrelations).
///
/// The plateau is the median of the last quartile when that tail is flat,
/// otherwise zero; the fit is linear regression of `ln |C - plateau|` on the
/// points above the noise floor, starting at t = 1.
pub fn fit_decay(series: &[f64]) -> DecayFit {
    let n = series.len();
    let mut fit = DecayFit {
        rate: None,
        plateau: 0.0,
        window: None,
        residual: None,
        flag: FitFlag::Degenerate,
    };
    if n < 3 {
        return fit;
    }

    if series[1..].iter().all(|c| c.abs() < 1e-12) {
        fit.flag = FitFlag::IdenticallyZero;
        return fit;
    }

    // Constant series: already settled from the first step on.
    let last = series[n - 1];
    if last.abs() > 1e-8 && series[1..].iter().all(|c| (c - last).abs() < 1e-10) {
        fit.flag = FitFlag::Constant;
        fit.plateau = last;
        fit.rate = Some(0.0);
        return fit;
    }

    fit.plateau = detect_plateau(series);

    let usable: Vec<(usize, f64)> = (1..n)
        .map(|t| (t, series[t] - fit.plateau))
        .filter(|(_, r)| r.abs() > NOISE_FLOOR)
        .collect();
    if usable.len() < 4 {
        fit.flag = FitFlag::Degenerate;
        return fit;
    }

    // Least squares on (t, ln|r|).
    let m = usable.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, r) in &usable {
        let x = t as f64;
        let y = r.abs().ln();
        st += x;
        sy += y;
        stt += x * x;
        sty += x * y;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-30 {
        fit.flag = FitFlag::Degenerate;
        return fit;
    }
    let slope = (m * sty - st * sy) / denom;
    let intercept = (sy - slope * st) / m;
    let mut ss = 0.0;
    for &(t, r) in &usable {
        let e = r.abs().ln() - (slope * t as f64 + intercept);
        ss += e * e;
    }
    fit.rate = Some(-slope);
    fit.residual = Some((ss / m).sqrt());
    fit.window = Some((usable[0].0, usable[usable.len() - 1].0));
    fit.flag = FitFlag::Ok;
    fit
}

/// Median of the last quartile, accepted as a plateau only when that tail is
/// actually flat; a still-decaying tail yields plateau 0.
fn detect_plateau(series: &[f64]) -> f64 {
    let n = series.len();
    let tail_start = n - (n / 4).max(2).min(n);
    let mut tail: Vec<f64> = series[tail_start..].to_vec();
    tail.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = tail[tail.len() / 2];
    let spread = tail[tail.len() - 1] - tail[0];
    if spread <= NOISE_FLOOR.max(1e-6 * median.abs()) {
        median
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_geometric_series() {
        let lambda: f64 = 0.6;
        let series: Vec<f64> = (0..30).map(|t| 0.8 * lambda.powi(t)).collect();
        let fit = fit_decay(&series);
        assert_eq!(fit.flag, FitFlag::Ok);
        assert_abs_diff_eq!(fit.rate.unwrap(), -lambda.ln(), epsilon = 1e-10);
        assert!(fit.residual.unwrap() < 1e-10);
        assert_eq!(fit.plateau, 0.0);
    }

    #[test]
    fn geometric_with_plateau() {
        let lambda: f64 = 0.5;
        let plateau = 0.03125;
        let series: Vec<f64> = (0..80).map(|t| plateau + lambda.powi(t)).collect();
        let fit = fit_decay(&series);
        assert_eq!(fit.flag, FitFlag::Ok);
        assert_abs_diff_eq!(fit.plateau, plateau, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.rate.unwrap(), -lambda.ln(), epsilon = 1e-6);
    }

    #[test]
    fn zero_after_first_step_is_identically_zero() {
        let mut series = vec![0.0; 20];
        series[0] = 1.0;
        let fit = fit_decay(&series);
        assert_eq!(fit.flag, FitFlag::IdenticallyZero);
    }

    #[test]
    fn constant_series() {
        let series = vec![1.0; 20];
        let fit = fit_decay(&series);
        assert_eq!(fit.flag, FitFlag::Constant);
        assert_eq!(fit.rate, Some(0.0));
        assert_abs_diff_eq!(fit.plateau, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn short_series_is_degenerate() {
        let fit = fit_decay(&[1.0, 0.5]);
        assert_eq!(fit.flag, FitFlag::Degenerate);
    }
}
