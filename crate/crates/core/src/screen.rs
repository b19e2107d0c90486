//! Pre-analysis screen for flat or decreasing dose-response patterns.

use serde::{Deserialize, Serialize};

use crate::data::QuantalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenResult {
    pub passed: bool,
    /// Largest slope `R̃_E(d_i)/d_i`, scaled-dose units.
    pub s_max: f64,
    /// 1-based index of the dose group attaining `s_max`.
    pub argmax_index: usize,
}

/// `(p_i − p_1)/(1 − p_1)` with `p_i = Y_i/N_i`.
pub fn empirical_extra_risk(data: &QuantalDataset) -> Result<Vec<f64>> {
    let p = data.proportions();
    let p1 = p[0];
    if p1 >= 1.0 {
        return Err(Error::DegenerateBackground);
    }
    Ok(p.iter()
        .enumerate()
        .map(|(i, &pi)| if i == 0 { 0.0 } else { (pi - p1) / (1.0 - p1) })
        .collect())
}

pub fn screen(data: &QuantalDataset) -> Result<ScreenResult> {
    let extra = empirical_extra_risk(data)?;
    let doses = data.doses();
    let mut s_max = f64::NEG_INFINITY;
    let mut argmax = 2;
    for i in 1..extra.len() {
        let slope = extra[i] / doses[i];
        // Strict comparison keeps the smallest index on ties.
        if slope > s_max {
            s_max = slope;
            argmax = i + 1;
        }
    }
    Ok(ScreenResult {
        passed: s_max > 0.0,
        s_max,
        argmax_index: argmax,
    })
}

impl ScreenResult {
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::DataFailure { s_max: self.s_max })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::cumene;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cumene_slopes() {
        let data = cumene();
        let extra = empirical_extra_risk(&data).unwrap();
        assert_eq!(extra[0], 0.0);
        assert_abs_diff_eq!(extra[2], 0.76 / 0.92, epsilon = 1e-12);
        assert_abs_diff_eq!(extra[2], 0.826_087, epsilon = 1e-6);
        let s = screen(&data).unwrap();
        assert!(s.passed);
        assert_eq!(s.argmax_index, 2);
        assert_abs_diff_eq!(s.s_max, 2.347_826, epsilon = 1e-6);
        assert_abs_diff_eq!(extra[3] / 1.0, 0.913_043, epsilon = 1e-6);
        assert_abs_diff_eq!(extra[2] / 0.5, 1.652_174, epsilon = 1e-6);
    }

    #[test]
    fn flat_data_fails() {
        let data = QuantalDataset::new(&[0.0, 1.0, 2.0, 4.0], &[5, 5, 5, 5], &[50; 4]).unwrap();
        assert!(empirical_extra_risk(&data)
            .unwrap()
            .iter()
            .all(|&e| e == 0.0));
        let s = screen(&data).unwrap();
        assert_eq!(s.s_max, 0.0);
        assert!(!s.passed);
        assert_eq!(s.argmax_index, 2);
        assert!(matches!(s.into_result(), Err(Error::DataFailure { .. })));
    }

    #[test]
    fn decreasing_data_fails() {
        let data = QuantalDataset::new(&[0.0, 1.0, 2.0, 4.0], &[10, 5, 3, 1], &[50; 4]).unwrap();
        let s = screen(&data).unwrap();
        assert!(s.s_max < 0.0 && !s.passed);
    }

    #[test]
    fn saturated_background_is_degenerate() {
        let data = QuantalDataset::new(&[0.0, 1.0], &[10, 10], &[10, 10]).unwrap();
        assert!(matches!(screen(&data), Err(Error::DegenerateBackground)));
    }
}
