//! Soft-margin binary SVM trained by sequential minimal optimization on the
//! dual, with linear and histogram-intersection kernels. Deterministic:
//! fixed sweep order and tie-breaks, no randomness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const KKT_TOLERANCE: f64 = 1e-6;
const ALPHA_EPS: f64 = 1e-9;
const MAX_PASSES: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    HistogramIntersection,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::HistogramIntersection => a.iter().zip(b).map(|(x, y)| x.min(*y)).sum(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::HistogramIntersection => "histogram_intersection",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear" => Some(Kernel::Linear),
            "histogram_intersection" => Some(Kernel::HistogramIntersection),
            _ => None,
        }
    }
}

/// A trained binary classifier. Linear models collapse the dual expansion
/// into an explicit weight vector; kernel models keep their support vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub bias: f64,
    pub weights: Vec<f64>,
    /// (alpha * y, support vector); empty for linear models
    pub support: Vec<(f64, Vec<f64>)>,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        match self.kernel {
            Kernel::Linear => {
                self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
            }
            Kernel::HistogramIntersection => {
                self.support
                    .iter()
                    .map(|(coef, sv)| coef * self.kernel.eval(sv, x))
                    .sum::<f64>()
                    + self.bias
            }
        }
    }
}

struct SmoState<'a> {
    ys: &'a [f64],
    gram: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    bias: f64,
    c: f64,
}

impl<'a> SmoState<'a> {
    fn decision(&self, i: usize) -> f64 {
        let mut f = self.bias;
        for (j, &a) in self.alphas.iter().enumerate() {
            if a > 0.0 {
                f += a * self.ys[j] * self.gram[j][i];
            }
        }
        f
    }

    fn error(&self, i: usize) -> f64 {
        self.decision(i) - self.ys[i]
    }

    fn optimize_pair(&mut self, i: usize, j: usize, e_i: f64) -> bool {
        if i == j {
            return false;
        }
        let e_j = self.error(j);
        let (ai_old, aj_old) = (self.alphas[i], self.alphas[j]);
        let (lo, hi) = if self.ys[i] == self.ys[j] {
            ((ai_old + aj_old - self.c).max(0.0), (ai_old + aj_old).min(self.c))
        } else {
            ((aj_old - ai_old).max(0.0), (self.c + aj_old - ai_old).min(self.c))
        };
        if hi - lo < ALPHA_EPS {
            return false;
        }
        let eta = 2.0 * self.gram[i][j] - self.gram[i][i] - self.gram[j][j];
        if eta >= -1e-12 {
            return false;
        }
        let mut aj = aj_old - self.ys[j] * (e_i - e_j) / eta;
        aj = aj.clamp(lo, hi);
        if (aj - aj_old).abs() < ALPHA_EPS {
            return false;
        }
        let ai = ai_old + self.ys[i] * self.ys[j] * (aj_old - aj);
        self.alphas[i] = ai;
        self.alphas[j] = aj;

        let b1 = self.bias
            - e_i
            - self.ys[i] * (ai - ai_old) * self.gram[i][i]
            - self.ys[j] * (aj - aj_old) * self.gram[i][j];
        let b2 = self.bias
            - e_j
            - self.ys[i] * (ai - ai_old) * self.gram[i][j]
            - self.ys[j] * (aj - aj_old) * self.gram[j][j];
        self.bias = if ai > 0.0 && ai < self.c {
            b1
        } else if aj > 0.0 && aj < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        true
    }
}

/// Train on (+1 / -1)-labeled vectors. Needs at least one example of each
/// sign; solves the dual to the KKT tolerance.
pub fn train_binary_svm(
    xs: &[Vec<f64>],
    ys: &[f64],
    c: f64,
    kernel: Kernel,
) -> Result<BinarySvm> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::InvalidInput("svm needs aligned, non-empty data".into()));
    }
    if !ys.iter().any(|&y| y > 0.0) || !ys.iter().any(|&y| y < 0.0) {
        return Err(Error::InvalidInput(
            "svm needs at least one example per sign".into(),
        ));
    }
    let n = xs.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| kernel.eval(&xs[i], &xs[j])).collect())
        .collect();
    let mut state = SmoState {
        ys,
        gram,
        alphas: vec![0.0; n],
        bias: 0.0,
        c,
    };

    let mut passes = 0usize;
    let mut examine_all = true;
    while passes < MAX_PASSES {
        let mut changed = 0usize;
        for i in 0..n {
            if !examine_all {
                let a = state.alphas[i];
                if a <= ALPHA_EPS || a >= state.c - ALPHA_EPS {
                    continue;
                }
            }
            let e_i = state.error(i);
            let r = e_i * state.ys[i];
            let violates = (r < -KKT_TOLERANCE && state.alphas[i] < state.c - ALPHA_EPS)
                || (r > KKT_TOLERANCE && state.alphas[i] > ALPHA_EPS);
            if !violates {
                continue;
            }
            // second index: largest |E_i - E_j|, lowest index on ties
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e_i - state.error(j)).abs();
                if best.map_or(true, |(g, _)| gap > g) {
                    best = Some((gap, j));
                }
            }
            if let Some((_, j)) = best {
                if state.optimize_pair(i, j, e_i) {
                    changed += 1;
                    continue;
                }
            }
            // deterministic fallback scan
            for j in 0..n {
                if j != i && state.optimize_pair(i, j, e_i) {
                    changed += 1;
                    break;
                }
            }
        }
        passes += 1;
        if changed == 0 {
            if examine_all {
                break;
            }
            examine_all = true;
        } else {
            examine_all = false;
        }
    }

    let support: Vec<(f64, Vec<f64>)> = state
        .alphas
        .iter()
        .enumerate()
        .filter(|&(_, &a)| a > ALPHA_EPS)
        .map(|(i, &a)| (a * ys[i], xs[i].clone()))
        .collect();
    let model = match kernel {
        Kernel::Linear => {
            let dim = xs[0].len();
            let mut w = vec![0.0; dim];
            for (coef, sv) in &support {
                for (wk, &v) in w.iter_mut().zip(sv) {
                    *wk += coef * v;
                }
            }
            BinarySvm {
                kernel,
                bias: state.bias,
                weights: w,
                support: Vec::new(),
            }
        }
        Kernel::HistogramIntersection => BinarySvm {
            kernel,
            bias: state.bias,
            weights: Vec::new(),
            support,
        },
    };
    Ok(model)
}

/// Primal objective of a linear model: regularizer plus C-weighted hinge.
pub fn primal_objective(model: &BinarySvm, xs: &[Vec<f64>], ys: &[f64], c: f64) -> f64 {
    let reg: f64 = 0.5 * model.weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y * model.decision(x)).max(0.0))
        .sum();
    reg + c * hinge
}
