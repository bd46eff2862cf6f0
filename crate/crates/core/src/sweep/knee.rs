use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_KNEE_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeResult {
    pub knee_angle_deg: f64,
    /// `mse[i] / mse[i + 1]` for each consecutive pair.
    pub improvement_ratios: Vec<f64>,
    pub threshold: f64,
}

/// Finds where refining the angle stops paying off.
///
/// `series` holds `(angle, mse)` sorted by descending angle. The knee is the
/// angle reached by the last step whose improvement ratio is at least
/// `threshold`; with no such step it is the largest angle.
pub fn detect_knee(series: &[(f64, f64)], threshold: f64) -> Result<KneeResult> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::config(format!(
            "knee threshold must be positive, got {threshold}"
        )));
    }
    if series.len() < 2 {
        return Err(Error::data("knee detection needs at least two points"));
    }
    if let Some((a, m)) = series.iter().find(|(_, m)| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::data(format!("MSE at {a}° must be positive, got {m}")));
    }
    if series.windows(2).any(|w| !(w[0].0 > w[1].0)) {
        return Err(Error::data("series must be sorted by strictly descending angle"));
    }
    let improvement_ratios: Vec<f64> = series.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let knee_angle_deg = match improvement_ratios.iter().rposition(|r| *r >= threshold) {
        Some(i) => series[i + 1].0,
        None => series[0].0,
    };
    Ok(KneeResult {
        knee_angle_deg,
        improvement_ratios,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Series over 90°, 45°, ... whose consecutive ratios are `ratios`.
    fn series_from_ratios(ratios: &[f64]) -> Vec<(f64, f64)> {
        let mut mse = 1.0;
        let mut out = vec![(90.0, mse)];
        for (i, r) in ratios.iter().enumerate() {
            mse /= r;
            out.push((90.0 / 2f64.powi(i as i32 + 1), mse));
        }
        out
    }

    #[test]
    fn narrative_sequence_gives_eleven_and_a_quarter() {
        let s = series_from_ratios(&[2.0, 2.0, 1.6, 1.05, 1.02, 1.01, 1.0]);
        let k = detect_knee(&s, 1.5).unwrap();
        assert_eq!(k.knee_angle_deg, 11.25);
        assert_eq!(k.improvement_ratios.len(), 7);
    }

    #[test]
    fn flat_and_steep_extremes() {
        assert_eq!(
            detect_knee(&series_from_ratios(&[1.0; 5]), 1.5).unwrap().knee_angle_deg,
            90.0
        );
        assert_eq!(
            detect_knee(&series_from_ratios(&[2.0; 7]), 1.5).unwrap().knee_angle_deg,
            0.703125
        );
    }

    #[test]
    fn invalid_series_rejected() {
        assert!(matches!(
            detect_knee(&[(90.0, 1.0), (45.0, 0.0)], 1.5),
            Err(Error::Data(_))
        ));
        assert!(matches!(detect_knee(&[(90.0, 1.0)], 1.5), Err(Error::Data(_))));
        assert!(matches!(
            detect_knee(&[(45.0, 1.0), (90.0, 0.5)], 1.5),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            detect_knee(&[(90.0, 1.0), (45.0, 0.5)], 0.0),
            Err(Error::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn knee_is_scale_invariant_and_on_the_grid(
            ratios in proptest::collection::vec(0.8f64..3.0, 1..8),
            k in 1e-3f64..1e3,
        ) {
            let s = series_from_ratios(&ratios);
            let scaled: Vec<_> = s.iter().map(|(a, m)| (*a, m * k)).collect();
            let a = detect_knee(&s, 1.5).unwrap();
            let b = detect_knee(&scaled, 1.5).unwrap();
            prop_assert!(s.iter().any(|(ang, _)| *ang == a.knee_angle_deg));
            // Ratios may move by an ulp under scaling; only a ratio sitting on the threshold could flip.
            if ratios.iter().all(|r| (r - 1.5).abs() > 1e-9) {
                prop_assert_eq!(a.knee_angle_deg, b.knee_angle_deg);
            }
        }
    }
}
