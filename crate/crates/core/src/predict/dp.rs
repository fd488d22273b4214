//! Dynamic-programming combination of per-segment SVM scores: the alignment
//! either stays in its segment or advances by one at each interval, and the
//! class confidence is the best product of sigmoid scores along any such
//! path.

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Table recursion over sigmoid scores. `scores[k][z]` is the sigmoid score
/// of interval k (0-based) under segment model z + 1. Returns the full table
/// (rows = intervals 0..=T, cols = segments 0..=M; row 0 is the base case)
/// and the final confidence max_z F[T][z].
pub fn dp_confidence_table(scores: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let t = scores.len();
    let m = scores.first().map(|r| r.len()).unwrap_or(0);
    let mut table = vec![vec![0.0f64; m + 1]; t + 1];
    table[0][0] = 1.0;
    for k in 1..=t {
        for z in 1..=m {
            let stay = table[k - 1][z];
            let advance = table[k - 1][z - 1];
            table[k][z] = stay.max(advance) * scores[k - 1][z - 1];
        }
    }
    let confidence = table[t].iter().cloned().fold(0.0f64, f64::max);
    (table, confidence)
}

/// Streaming form: feed one interval of segment scores at a time and read
/// the best confidence so far. Confidence persisting below the floor for
/// several consecutive intervals resets the alignment, which keeps the
/// recursion usable on untrimmed streams where the action starts late.
#[derive(Clone, Debug)]
pub struct DpStream {
    row: Vec<f64>,
    confidence: f64,
    low_streak: usize,
    reset_floor: f64,
    reset_patience: usize,
}

pub const DP_RESET_FLOOR: f64 = 0.01;
pub const DP_RESET_PATIENCE: usize = 3;

impl DpStream {
    pub fn new(segment_count: usize) -> Self {
        let mut row = vec![0.0; segment_count + 1];
        row[0] = 1.0;
        DpStream {
            row,
            confidence: 0.0,
            low_streak: 0,
            reset_floor: DP_RESET_FLOOR,
            reset_patience: DP_RESET_PATIENCE,
        }
    }

    /// `interval_scores[z]` is the sigmoid score of the just-finished
    /// interval under segment model z + 1.
    pub fn push_interval(&mut self, interval_scores: &[f64]) -> f64 {
        let m = self.row.len() - 1;
        debug_assert_eq!(interval_scores.len(), m);
        let prev = self.row.clone();
        for z in (1..=m).rev() {
            self.row[z] = prev[z].max(prev[z - 1]) * interval_scores[z - 1];
        }
        self.row[0] = 0.0;
        self.confidence = self.row.iter().cloned().fold(0.0f64, f64::max);
        if self.confidence < self.reset_floor {
            self.low_streak += 1;
            if self.low_streak >= self.reset_patience {
                self.row.iter_mut().for_each(|v| *v = 0.0);
                self.row[0] = 1.0;
                self.low_streak = 0;
            }
        } else {
            self.low_streak = 0;
        }
        self.confidence
    }

    /// Last computed confidence; between interval boundaries the value of
    /// the last completed interval is reported.
    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

/// Every stay-or-advance alignment path enumerated explicitly; the test
/// oracle for the recursion. Paths start in segment 1 and never skip.
pub fn enumerate_alignments(scores: &[Vec<f64>]) -> f64 {
    let t = scores.len();
    let m = scores.first().map(|r| r.len()).unwrap_or(0);
    if t == 0 || m == 0 {
        return 0.0;
    }
    let mut best = 0.0f64;
    let mut path = Vec::with_capacity(t);
    fn recurse(
        scores: &[Vec<f64>],
        path: &mut Vec<usize>,
        m: usize,
        best: &mut f64,
    ) {
        let k = path.len();
        if k == scores.len() {
            let product: f64 = path
                .iter()
                .enumerate()
                .map(|(i, &z)| scores[i][z - 1])
                .product();
            if product > *best {
                *best = product;
            }
            return;
        }
        let options: &[usize] = if k == 0 { &[1] } else { &[0, 1] };
        for &step in options {
            let z = if k == 0 { 1 } else { path[k - 1] + step };
            if z <= m {
                path.push(z);
                recurse(scores, path, m, best);
                path.pop();
            }
        }
    }
    recurse(scores, &mut path, m, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn single_segment_chains_products() {
        // M = 1, scores 0.8 then 0.9: confidence 0.72
        let scores = vec![vec![0.8], vec![0.9]];
        let (_, conf) = dp_confidence_table(&scores);
        assert!((conf - 0.72).abs() < 1e-12);
    }

    #[test]
    fn table_matches_alignment_enumeration() {
        let mut seed = 999u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            (seed >> 40) as f64 / (1u64 << 24) as f64
        };
        for _ in 0..50 {
            let t = 1 + (next() * 5.0) as usize;
            let m = 1 + (next() * 3.0) as usize;
            let scores: Vec<Vec<f64>> =
                (0..t).map(|_| (0..m).map(|_| next()).collect()).collect();
            let (_, conf) = dp_confidence_table(&scores);
            let oracle = enumerate_alignments(&scores);
            assert!(
                (conf - oracle).abs() < 1e-12,
                "dp {conf} vs enumeration {oracle}"
            );
        }
    }

    #[test]
    fn values_stay_in_unit_interval_and_are_monotone_in_scores() {
        let scores = vec![vec![0.9, 0.4], vec![0.7, 0.8], vec![0.2, 0.95]];
        let (table, conf) = dp_confidence_table(&scores);
        for row in &table {
            for &v in row {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // lowering any single score cannot raise the confidence
        for k in 0..3 {
            for z in 0..2 {
                let mut lowered = scores.clone();
                lowered[k][z] *= 0.5;
                let (_, conf2) = dp_confidence_table(&lowered);
                assert!(conf2 <= conf + 1e-15);
            }
        }
    }

    #[test]
    fn streaming_matches_batch() {
        let scores = vec![vec![0.6, 0.3, 0.9], vec![0.5, 0.8, 0.1], vec![0.4, 0.7, 0.6]];
        let mut stream = DpStream::new(3);
        let mut last = 0.0;
        for row in &scores {
            last = stream.push_interval(row);
        }
        let (_, batch) = dp_confidence_table(&scores);
        assert!((last - batch).abs() < 1e-15);
        assert_eq!(stream.confidence(), last);
    }

    #[test]
    fn sustained_low_confidence_resets_the_stream() {
        let mut stream = DpStream::new(2);
        for _ in 0..DP_RESET_PATIENCE {
            stream.push_interval(&[0.001, 0.001]);
        }
        // after the reset the row is back at the base case, so one good
        // interval scores as if the action just started
        let c = stream.push_interval(&[0.9, 0.1]);
        assert!((c - 0.9).abs() < 1e-12);
    }
}
