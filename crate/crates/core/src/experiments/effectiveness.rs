use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::linalg::vector::compensated_sum;

/// Loss-decrease summary of a sequence over a window `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessReport {
    pub window_m: usize,
    /// `L(t+m) < L(t)` for every valid `t`.
    pub windowed_decrease_ok: bool,
    /// The width-`m` moving average strictly decreases.
    pub avg_loss_monotone_ok: bool,
    /// `L(t+1) < L(t)` for every `t`.
    pub instantaneous_monotone_ok: bool,
    /// Number of `t` with `L(t+m) ≥ L(t)`.
    pub violation_count: usize,
    /// Number of `t` with `L(t+1) ≥ L(t)`.
    pub increase_count: usize,
}

pub fn check_effectiveness(losses: &[f64], window_m: usize) -> Result<EffectivenessReport, ExperimentError> {
    if window_m == 0 {
        return Err(ExperimentError::Config("window m must be at least 1".into()));
    }
    if losses.len() <= window_m {
        return Err(ExperimentError::TooShort {
            len: losses.len(),
            window: window_m,
        });
    }
    if let Some(v) = losses.iter().find(|v| !v.is_finite()) {
        return Err(ExperimentError::Config(format!(
            "loss sequence contains non-finite value {v}"
        )));
    }
    let violation_count = losses.windows(window_m + 1).filter(|w| !(w[window_m] < w[0])).count();
    let increase_count = losses.windows(2).filter(|w| !(w[1] < w[0])).count();
    let m = window_m as f64;
    let averages: Vec<f64> = losses
        .windows(window_m)
        .map(|w| compensated_sum(w.iter().copied()) / m)
        .collect();
    let avg_loss_monotone_ok = averages.windows(2).all(|w| w[1] < w[0]);
    Ok(EffectivenessReport {
        window_m,
        windowed_decrease_ok: violation_count == 0,
        avg_loss_monotone_ok,
        instantaneous_monotone_ok: increase_count == 0,
        violation_count,
        increase_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_sequence_passes_everything() {
        let l: Vec<f64> = (0..20).map(|i| 1.0 / (1.0 + i as f64)).collect();
        for m in [1, 3, 19] {
            let r = check_effectiveness(&l, m).unwrap();
            assert!(r.windowed_decrease_ok && r.avg_loss_monotone_ok && r.instantaneous_monotone_ok);
            assert_eq!(r.violation_count, 0);
        }
    }

    #[test]
    fn seesaw_is_windowed_but_not_instantaneous() {
        let l = [1.0, 1.2, 0.8, 1.0, 0.6, 0.8, 0.4];
        let r = check_effectiveness(&l, 2).unwrap();
        assert!(r.windowed_decrease_ok);
        assert!(r.avg_loss_monotone_ok);
        assert!(!r.instantaneous_monotone_ok);
        assert_eq!(r.increase_count, 3);
        let r1 = check_effectiveness(&l, 1).unwrap();
        assert!(!r1.windowed_decrease_ok);
        assert_eq!(r1.violation_count, 3);
    }

    #[test]
    fn constant_sequence_is_not_effective() {
        let r = check_effectiveness(&[2.0; 6], 2).unwrap();
        assert!(!r.windowed_decrease_ok);
        assert!(!r.avg_loss_monotone_ok);
        assert_eq!(r.violation_count, 4);
    }

    #[test]
    fn short_or_zero_window_rejected() {
        assert!(matches!(
            check_effectiveness(&[1.0, 0.5], 2),
            Err(ExperimentError::TooShort { len: 2, window: 2 })
        ));
        assert!(check_effectiveness(&[1.0, 0.5], 0).is_err());
        assert!(check_effectiveness(&[1.0, f64::NAN, 0.5], 1).is_err());
    }
}
