//! Normalised score and empty-volume KPI.

use boxopt::{Error, Result};
use serde::{Deserialize, Serialize};

/// Objective normalised by total packing-unit volume, and the average empty
/// volume per box volume derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub objective: i64,
    pub total_unit_volume: i64,
    pub score: f64,
    pub kpi: f64,
    /// `score` to 4 significant digits.
    pub score_display: String,
    /// `kpi` as a percentage to 4 significant digits.
    pub kpi_display: String,
}

/// `kpi = score / (1 + score)`.
pub fn kpi(score: f64) -> f64 {
    score / (1.0 + score)
}

/// Inverse of [`kpi`].
pub fn score_of_kpi(kpi: f64) -> f64 {
    kpi / (1.0 - kpi)
}

pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn report(objective: i64, total_unit_volume: i64) -> Result<Score> {
    if total_unit_volume <= 0 {
        return Err(Error::Domain(format!(
            "total packing-unit volume must be positive, got {total_unit_volume}"
        )));
    }
    if objective < 0 {
        return Err(Error::Domain(format!("objective must be nonnegative, got {objective}")));
    }
    let score = objective as f64 / total_unit_volume as f64;
    let k = kpi(score);
    Ok(Score {
        objective,
        total_unit_volume,
        score,
        kpi: k,
        score_display: significant(score, 4),
        kpi_display: format!("{}%", significant(k * 100.0, 4)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let v = 1_000_000;
        let a = report(829_000, v).unwrap();
        assert!((a.kpi * 100.0 - 45.33).abs() < 0.01);
        assert_eq!(a.kpi_display, "45.33%");
        let b = report(836_000, v).unwrap();
        assert!((b.kpi * 100.0 - 45.53).abs() < 0.01);
        assert_eq!(report(0, v).unwrap().kpi, 0.0);
    }

    #[test]
    fn zero_volume_is_a_domain_error() {
        assert!(matches!(report(5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn round_trip_and_monotone() {
        let mut last = -1.0;
        for i in 0..200 {
            let s = i as f64 * 0.05;
            let k = kpi(s);
            assert!(k > last && (0.0..1.0).contains(&k));
            assert!((score_of_kpi(k) - s).abs() < 1e-9);
            last = k;
        }
    }

    #[test]
    fn four_digits() {
        assert_eq!(significant(0.82912, 4), "0.8291");
        assert_eq!(significant(45.3253, 4), "45.33");
        assert_eq!(significant(1234.4, 4), "1234");
    }
}
