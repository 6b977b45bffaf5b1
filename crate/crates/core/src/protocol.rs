//! Early-stopping and learning-rate switch rules shared by both trainers.

/// How the learning rate reacts to the previous change in training cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSwitch {
    /// Always the base rate.
    Off,
    /// Base rate when the training cost went up, a tenth of it otherwise.
    OnIncrease,
    /// A tenth of the base rate when the training cost went up, the base
    /// rate otherwise.
    OnDecrease,
}

impl LrSwitch {
    /// Rate for the current epoch. `previous` is the training cost of the
    /// epoch before; without one the "otherwise" branch applies.
    pub fn select(self, base: f64, previous: Option<f64>, current: f64) -> f64 {
        let increased = previous.is_some_and(|p| current - p > 0.0);
        match self {
            LrSwitch::Off => base,
            LrSwitch::OnIncrease => {
                if increased {
                    base
                } else {
                    base / 10.0
                }
            }
            LrSwitch::OnDecrease => {
                if increased {
                    base / 10.0
                } else {
                    base
                }
            }
        }
    }
}

/// True once the validation cost moved by less than `epsilon` between two
/// consecutive epochs.
pub fn early_stop_fires(previous: Option<f64>, current: f64, epsilon: f64) -> bool {
    previous.is_some_and(|p| (current - p).abs() < epsilon)
}

/// Replays [`early_stop_fires`] over a cost sequence and returns the 1-based
/// epoch at which training would stop.
pub fn stopping_epoch(validation_costs: &[f64], epsilon: f64) -> Option<usize> {
    validation_costs
        .windows(2)
        .position(|w| early_stop_fires(Some(w[0]), w[1], epsilon))
        .map(|i| i + 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_as_written() {
        let s = LrSwitch::OnIncrease;
        assert_eq!(s.select(0.1, None, 5.0), 0.01);
        assert_eq!(s.select(0.1, Some(1.0), 2.0), 0.1);
        assert_eq!(s.select(0.1, Some(2.0), 1.0), 0.01);
        // no change is not an increase
        assert_eq!(s.select(0.1, Some(2.0), 2.0), 0.01);
    }

    #[test]
    fn switch_inverted_and_off() {
        let s = LrSwitch::OnDecrease;
        assert_eq!(s.select(0.1, None, 5.0), 0.1);
        assert_eq!(s.select(0.1, Some(1.0), 2.0), 0.01);
        assert_eq!(s.select(0.1, Some(2.0), 1.0), 0.1);
        assert_eq!(LrSwitch::Off.select(0.1, Some(1.0), 2.0), 0.1);
    }

    #[test]
    fn early_stop_threshold_is_strict() {
        assert!(!early_stop_fires(None, 1.0, 1.0));
        assert!(early_stop_fires(Some(1.0), 1.5, 0.6));
        assert!(!early_stop_fires(Some(1.0), 1.5, 0.5));
        assert_eq!(stopping_epoch(&[3.0, 2.0, 1.5, 1.45, 1.0], 0.1), Some(4));
        assert_eq!(stopping_epoch(&[3.0, 2.0], 0.1), None);
    }
}
