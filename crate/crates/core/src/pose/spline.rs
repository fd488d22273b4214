//! Penalized least-squares piecewise-cubic fits of joint trajectories.
//!
//! Each visible joint gets one fit per coordinate over the window. The basis
//! is a cubic polynomial plus truncated cubics at interior frames; only the
//! truncated coefficients carry the ridge penalty, so any cubic polynomial
//! is representable penalty-free. Consequences relied upon by tests:
//! trajectories that are exactly polynomial (degree <= 3) are reproduced,
//! and the fit residual never exceeds that of the best global cubic.

use crate::error::{Error, Result};
use crate::pose::Pose;

/// One coordinate's fitted curve over normalized window time. Outside the
/// fitted time span the curve extends linearly from the boundary (the
/// natural-spline convention), which keeps held-out endpoint evaluation
/// from running away with the cubic tail.
#[derive(Clone, Debug)]
struct CoordFit {
    /// polynomial coefficients, lowest degree first
    poly: Vec<f64>,
    /// (knot position, coefficient) pairs for (t - knot)^3 terms, t > knot
    knots: Vec<(f64, f64)>,
    /// fitted time span in normalized units
    span: (f64, f64),
}

impl CoordFit {
    fn eval_inner(&self, t: f64) -> f64 {
        let mut v = 0.0;
        let mut p = 1.0;
        for &c in &self.poly {
            v += c * p;
            p *= t;
        }
        for &(k, c) in &self.knots {
            if t > k {
                v += c * (t - k).powi(3);
            }
        }
        v
    }

    /// Mean slope over the fitted span; exact for straight trajectories and
    /// far less noisy than the local cubic derivative at a boundary.
    fn secant_slope(&self) -> f64 {
        let (lo, hi) = self.span;
        if hi > lo {
            (self.eval_inner(hi) - self.eval_inner(lo)) / (hi - lo)
        } else {
            0.0
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let (lo, hi) = self.span;
        if t < lo {
            self.eval_inner(lo) + self.secant_slope() * (t - lo)
        } else if t > hi {
            self.eval_inner(hi) + self.secant_slope() * (t - hi)
        } else {
            self.eval_inner(t)
        }
    }
}

#[derive(Clone, Debug)]
pub struct JointSpline {
    /// true when the joint was visible in fewer than two frames and the fit
    /// degenerated to a constant at the last seen location
    pub degenerate: bool,
    x: CoordFit,
    y: CoordFit,
}

/// Per-joint trajectory fits over frames `window_start..=window_end`.
#[derive(Clone, Debug)]
pub struct JointSplines {
    pub window_start: u32,
    pub window_end: u32,
    pub joints: Vec<JointSpline>,
}

impl JointSplines {
    fn norm(&self, frame: f64) -> f64 {
        let span = (self.window_end - self.window_start) as f64;
        if span <= 0.0 {
            0.0
        } else {
            (frame - self.window_start as f64) / span
        }
    }

    /// Predicted (x, y) of one joint at an (integer or fractional) frame.
    pub fn eval(&self, joint: usize, frame: f64) -> (f64, f64) {
        let t = self.norm(frame);
        (self.joints[joint].x.eval(t), self.joints[joint].y.eval(t))
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    /// Vertical extrema of every joint curve sampled at each integer frame
    /// of the window: the y-span of the box circumscribing all fits.
    pub fn vertical_envelope(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for frame in self.window_start..=self.window_end {
            for j in 0..self.joints.len() {
                let (_, y) = self.eval(j, frame as f64);
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        (lo, hi)
    }
}

/// Solve the symmetric system via Gaussian elimination with partial
/// pivoting; dimensions here stay around the window length.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::InvalidInput(
                "singular system in spline fit (coincident frame times?)".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Ok(x)
}

fn fit_coord(times: &[f64], values: &[f64], smoothing: f64) -> Result<CoordFit> {
    let n = times.len();
    debug_assert!(n >= 1);
    if n == 1 {
        return Ok(CoordFit {
            poly: vec![values[0]],
            knots: Vec::new(),
            span: (times[0], times[0]),
        });
    }
    // polynomial degree: exact interpolation while points fit inside the
    // cubic's degrees of freedom, knotted fit beyond that. Knots come in
    // only when the window clearly outnumbers the cubic's dof; short
    // windows stay a single least-squares piece so the fit can average
    // jitter instead of threading through it.
    let degree = (n - 1).min(3);
    let interior: Vec<f64> = if n > 6 {
        times[2..n - 2].to_vec()
    } else {
        Vec::new()
    };
    let dim = degree + 1 + interior.len();
    let basis = |t: f64| -> Vec<f64> {
        let mut row = Vec::with_capacity(dim);
        let mut p = 1.0;
        for _ in 0..=degree {
            row.push(p);
            p *= t;
        }
        for &k in &interior {
            row.push(if t > k { (t - k).powi(3) } else { 0.0 });
        }
        row
    };
    // normal equations with ridge on the truncated block only
    let mut ata = vec![vec![0.0; dim]; dim];
    let mut atb = vec![0.0; dim];
    for (&t, &v) in times.iter().zip(values) {
        let row = basis(t);
        for i in 0..dim {
            atb[i] += row[i] * v;
            for j in 0..dim {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    for i in degree + 1..dim {
        ata[i][i] += smoothing;
    }
    let coefs = solve(ata, atb)?;
    Ok(CoordFit {
        poly: coefs[..=degree].to_vec(),
        knots: interior
            .iter()
            .zip(&coefs[degree + 1..])
            .map(|(&k, &c)| (k, c))
            .collect(),
        span: (times[0], times[n - 1]),
    })
}

/// Fit per-joint trajectory curves to the selected poses of a window.
/// Occluded joints are excluded from their fit; a joint visible in fewer
/// than two frames degenerates to a constant at its last seen location
/// (window midpoint when never seen) and is flagged.
pub fn fit_joint_splines(selected: &[Pose], smoothing: f64) -> Result<JointSplines> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("empty pose window".into()));
    }
    let window_start = selected.first().unwrap().frame_index;
    let window_end = selected.last().unwrap().frame_index;
    let joint_count = selected[0].joints.len();
    let span = ((window_end - window_start) as f64).max(1.0);

    let mut joints = Vec::with_capacity(joint_count);
    for j in 0..joint_count {
        let mut times = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for pose in selected {
            debug_assert_eq!(pose.joints.len(), joint_count);
            let joint = &pose.joints[j];
            if !joint.occluded {
                times.push((pose.frame_index - window_start) as f64 / span);
                xs.push(joint.x);
                ys.push(joint.y);
            }
        }
        if times.len() < 2 {
            let (cx, cy) = match (xs.last(), ys.last()) {
                (Some(&x), Some(&y)) => (x, y),
                _ => (0.0, 0.0),
            };
            if times.len() < 2 {
                log::debug!("joint {j} visible in {} frames; constant fit", times.len());
            }
            joints.push(JointSpline {
                degenerate: true,
                x: CoordFit {
                    poly: vec![cx],
                    knots: Vec::new(),
                    span: (0.0, 1.0),
                },
                y: CoordFit {
                    poly: vec![cy],
                    knots: Vec::new(),
                    span: (0.0, 1.0),
                },
            });
            continue;
        }
        joints.push(JointSpline {
            degenerate: false,
            x: fit_coord(&times, &xs, smoothing)?,
            y: fit_coord(&times, &ys, smoothing)?,
        });
    }
    Ok(JointSplines {
        window_start,
        window_end,
        joints,
    })
}
