use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of times a sweep window is doubled before giving up.
pub const MAX_WIDEN: usize = 4;

/// Zero crossing of a swept signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub estimate: f64,
    /// Signal slope across the bracketing pair.
    pub slope: f64,
    /// Half-width of the final sweep window.
    pub window: f64,
    /// Every (parameter, signal) point evaluated, sorted by parameter.
    pub scan: Vec<(f64, f64)>,
}

/// Sweep `f` over `center ± window`, widening on failure, and locate the sign
/// change nearest the center by linear interpolation.
pub fn find_crossing<F: FnMut(f64) -> Result<f64>>(
    center: f64,
    window: f64,
    center_value: Option<f64>,
    mut f: F,
) -> Result<Crossing> {
    if !(window > 0.0) || !center.is_finite() {
        return Err(Error::Param(format!("bad sweep center {center} / window {window}")));
    }
    let y0 = match center_value {
        Some(v) => v,
        None => f(center)?,
    };
    let mut pts = vec![(center, y0)];
    let mut w = window;
    for _ in 0..=MAX_WIDEN {
        pts.push((center - w, f(center - w)?));
        pts.push((center + w, f(center + w)?));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<(f64, f64)> = None;
        for p in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (p[0], p[1]);
            if !(y0.is_finite() && y1.is_finite()) {
                continue;
            }
            let root = if y0 == 0.0 {
                x0
            } else if y1 == 0.0 {
                x1
            } else if y0.signum() != y1.signum() {
                x0 - y0 * (x1 - x0) / (y1 - y0)
            } else {
                continue;
            };
            let slope = (y1 - y0) / (x1 - x0);
            if best.map_or(true, |(r, _)| (root - center).abs() < (r - center).abs()) {
                best = Some((root, slope));
            }
        }
        if let Some((estimate, slope)) = best {
            return Ok(Crossing { estimate, slope, window: w, scan: pts });
        }
        w *= 2.0;
    }
    Err(Error::Calibration(format!(
        "no crossing within ±{} of {center}; scan {:?}",
        w / 2.0,
        pts
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_signal_exact() {
        let c = find_crossing(1.0, 0.1, None, |x| Ok(3.0 * (x - 1.02))).unwrap();
        assert!((c.estimate - 1.02).abs() < 1e-12);
        assert!((c.slope - 3.0).abs() < 1e-12);
    }

    #[test]
    fn widens_then_fails() {
        let c = find_crossing(0.0, 0.1, None, |x| Ok(x - 0.35)).unwrap();
        assert!((c.estimate - 0.35).abs() < 1e-12);
        assert!(c.window > 0.1);
        assert!(matches!(find_crossing(0.0, 0.1, None, |_| Ok(1.0)), Err(Error::Calibration(_))));
    }
}
