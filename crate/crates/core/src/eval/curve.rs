use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Roc,
    AucVsThreshold,
    AccVsObservation,
    PrecisionRecall,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::Roc => "roc",
            CurveKind::AucVsThreshold => "auc_vs_threshold",
            CurveKind::AccVsObservation => "acc_vs_observation",
            CurveKind::PrecisionRecall => "precision_recall",
        }
    }
}

/// An ordered evaluation curve with strictly increasing x.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalCurve {
    pub kind: CurveKind,
    pub overlap_threshold: f64,
    pub points: Vec<(f64, f64)>,
}

impl EvalCurve {
    pub fn new(kind: CurveKind, overlap_threshold: f64, points: Vec<(f64, f64)>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidInput(format!(
                    "curve x values must strictly increase ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if points.iter().any(|&(_, y)| !(0.0..=1.0).contains(&y)) {
            return Err(Error::InvalidInput("curve y values must lie in [0, 1]".into()));
        }
        Ok(EvalCurve {
            kind,
            overlap_threshold,
            points,
        })
    }

    /// Trapezoidal area under the curve over its x range.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| (p[1].0 - p[0].0) * 0.5 * (p[0].1 + p[1].1))
            .sum()
    }

    /// CSV with a header naming the curve; x,y per line. The false-positive
    /// rate denominator convention is recorded for ROC curves.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        write!(
            out,
            "# kind={} theta={}",
            self.kind.as_str(),
            self.overlap_threshold
        )
        .unwrap();
        if self.kind == CurveKind::Roc {
            out.push_str(" fpr_denominator=fp_plus_tn_slots");
        }
        out.push('\n');
        out.push_str("x,y\n");
        for &(x, y) in &self.points {
            writeln!(out, "{x},{y}").unwrap();
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_auc_is_half() {
        let c = EvalCurve::new(CurveKind::Roc, 0.2, vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!((c.auc() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_top_auc_is_one() {
        let c = EvalCurve::new(CurveKind::Roc, 0.2, vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!((c.auc() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_step_curve_matches_riemann_oracle() {
        let xs = [0.0, 0.11, 0.35, 0.5, 0.78, 1.0];
        let ys = [0.0, 0.3, 0.42, 0.42, 0.9, 0.97];
        let pts: Vec<(f64, f64)> = xs.iter().cloned().zip(ys.iter().cloned()).collect();
        let c = EvalCurve::new(CurveKind::PrecisionRecall, 0.2, pts).unwrap();
        // dense Riemann sum over linear interpolation
        let mut sum = 0.0;
        let n = 2_000_000usize;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            let seg = xs.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap();
            let t = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
            sum += (ys[seg] * (1.0 - t) + ys[seg + 1] * t) / n as f64;
        }
        assert!((c.auc() - sum).abs() < 1e-6, "{} vs {}", c.auc(), sum);
    }

    #[test]
    fn non_monotone_x_rejected() {
        assert!(EvalCurve::new(CurveKind::Roc, 0.2, vec![(0.5, 0.0), (0.5, 1.0)]).is_err());
    }
}
