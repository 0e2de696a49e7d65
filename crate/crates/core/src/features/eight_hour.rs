//! Eight-hour running means of ozone.
//!
//! A window is labelled by its first hour and averages that hour and the
//! following seven. Only start hours 0..=16 are formed, so the last window
//! ends at 23:00 of the same day.

use crate::ingest::HOURS_PER_DAY;

pub const WINDOW_HOURS: usize = 8;
pub const N_WINDOWS: usize = HOURS_PER_DAY - WINDOW_HOURS + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EightHourMeans {
    /// Mean of the window starting at hour `h`, for h in 0..17.
    pub means: [f64; N_WINDOWS],
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl EightHourMeans {
    /// Start hour of the highest window; the earliest one on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (h, &m) in self.means.iter().enumerate() {
            if m > self.means[best] {
                best = h;
            }
        }
        best
    }
}

pub fn eight_hour_means(hours: &[f64; HOURS_PER_DAY]) -> EightHourMeans {
    let mut means = [0.0; N_WINDOWS];
    for (h, m) in means.iter_mut().enumerate() {
        *m = hours[h..h + WINDOW_HOURS].iter().sum::<f64>() / WINDOW_HOURS as f64;
    }
    let (max, min, mean) = max_min_mean(&means);
    EightHourMeans {
        means,
        max,
        min,
        mean,
    }
}

/// Strict policy: any missing hour makes the day unusable.
pub fn eight_hour_means_strict(hours: &[Option<f64>]) -> Option<EightHourMeans> {
    if hours.len() < HOURS_PER_DAY {
        return None;
    }
    let mut vals = [0.0; HOURS_PER_DAY];
    for (v, h) in vals.iter_mut().zip(hours) {
        *v = (*h)?;
    }
    Some(eight_hour_means(&vals))
}

pub(crate) fn max_min_mean(values: &[f64]) -> (f64, f64, f64) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max, min, mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_day() {
        let m = eight_hour_means(&[10.0; 24]);
        assert!(m.means.iter().all(|&v| v == 10.0));
        assert_eq!((m.max, m.min, m.mean), (10.0, 10.0, 10.0));
    }

    #[test]
    fn first_window_of_small_ramp() {
        let mut hours = [0.0; 24];
        for (h, v) in hours.iter_mut().enumerate().take(8) {
            *v = h as f64;
        }
        assert_eq!(eight_hour_means(&hours).means[0], 3.5);
    }

    #[test]
    fn full_ramp() {
        let mut hours = [0.0; 24];
        for (h, v) in hours.iter_mut().enumerate() {
            *v = h as f64;
        }
        let m = eight_hour_means(&hours);
        // hand computation: (h + h+1 + ... + h+7) / 8 = h + 3.5
        let expected: Vec<f64> = (0..17).map(|h| h as f64 + 3.5).collect();
        assert_eq!(m.means.to_vec(), expected);
        assert_eq!(m.max, 19.5);
        assert_eq!(m.argmax(), 16);
        assert_eq!(m.min, 3.5);
        assert_eq!(m.mean, 11.5);
    }

    #[test]
    fn strict_policy_rejects_missing_hour() {
        let mut hours = vec![Some(1.0); 24];
        assert!(eight_hour_means_strict(&hours).is_some());
        hours[20] = None;
        assert!(eight_hour_means_strict(&hours).is_none());
    }
}
