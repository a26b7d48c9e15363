use serde::{Deserialize, Serialize};

/// Rates at or below this count as "no convergence".
pub const NO_CONVERGENCE_RATE: f64 = 0.1;

/// Least-squares fit of log err = log C + rate·log ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateFit {
    Fitted {
        rate: f64,
        log_constant: f64,
        /// Root-mean-square residual of the log-log fit.
        residual: f64,
        converging: bool,
    },
    Skipped {
        notice: String,
    },
}

impl RateFit {
    pub fn rate(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { rate, .. } => Some(*rate),
            RateFit::Skipped { .. } => None,
        }
    }
}

pub fn fit_rate(eps: &[f64], err: &[f64]) -> RateFit {
    if eps.len() != err.len() {
        return RateFit::Skipped { notice: format!("{} eps values but {} errors", eps.len(), err.len()) };
    }
    if eps.len() < 3 {
        return RateFit::Skipped { notice: format!("need at least 3 points, got {}", eps.len()) };
    }
    if let Some((e, v)) = eps.iter().zip(err).find(|(e, v)| !(**e > 0.0 && **v > 0.0 && v.is_finite())) {
        return RateFit::Skipped { notice: format!("non-positive value (eps {e}, err {v}); fit skipped") };
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return RateFit::Skipped { notice: "all eps values coincide".into() };
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let rate = sxy / sxx;
    let log_constant = my - rate * mx;
    let ss: f64 = x.iter().zip(&y).map(|(a, b)| (b - log_constant - rate * a).powi(2)).sum();
    RateFit::Fitted { rate, log_constant, residual: (ss / n).sqrt(), converging: rate > NO_CONVERGENCE_RATE }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

    #[test]
    fn exact_power_laws() {
        for p in [1.0, 0.5] {
            let err: Vec<f64> = EPS.iter().map(|e| e.powf(p)).collect();
            match fit_rate(&EPS, &err) {
                RateFit::Fitted { rate, log_constant, residual, converging } => {
                    assert!((rate - p).abs() < 1e-12);
                    assert!(log_constant.abs() < 1e-12);
                    assert!(residual < 1e-12);
                    assert!(converging);
                }
                s => panic!("{s:?}"),
            }
        }
    }

    #[test]
    fn constant_errors_flagged() {
        match fit_rate(&EPS, &[0.3; 4]) {
            RateFit::Fitted { rate, converging, .. } => {
                assert!(rate.abs() < 1e-12);
                assert!(!converging);
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn skips_bad_input() {
        assert!(matches!(fit_rate(&EPS, &[0.1, 0.0, 0.1, 0.1]), RateFit::Skipped { .. }));
        assert!(matches!(fit_rate(&EPS[..2], &[0.1, 0.2]), RateFit::Skipped { .. }));
    }
}
