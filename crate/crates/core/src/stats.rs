//! Small statistical helpers for the validation harness and the experiment
//! reports.

/// Sample mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 with fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of a binomial proportion estimated from `successes/trials`.
pub fn binomial_stderr(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// z statistic of a two-sample proportion test, pooled variance.
pub fn two_proportion_z(successes_a: u64, trials_a: u64, successes_b: u64, trials_b: u64) -> f64 {
    let pa = successes_a as f64 / trials_a as f64;
    let pb = successes_b as f64 / trials_b as f64;
    let pool = (successes_a + successes_b) as f64 / (trials_a + trials_b) as f64;
    let se = (pool * (1.0 - pool) * (1.0 / trials_a as f64 + 1.0 / trials_b as f64)).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (pa - pb) / se
    }
}

/// Welch's t statistic for mean(a) - mean(b).
pub fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let se = (variance(a) / a.len() as f64 + variance(b) / b.len() as f64).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (mean(a) - mean(b)) / se
    }
}

/// One-sided 0.05-level critical values of Student's t for small degrees of
/// freedom; beyond the table the normal value applies.
const T_CRIT_05: [f64; 30] = [
    6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595, 1.8331, 1.8125, 1.7959,
    1.7823, 1.7709, 1.7613, 1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247, 1.7207, 1.7171,
    1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973,
];

/// One-sided two-sample test of mean(a) > mean(b) at the 0.05 level.
///
/// Uses Welch's statistic against the critical value for the conservative
/// `min(len(a), len(b)) - 1` degrees of freedom, so a rejection here is also
/// a rejection under the exact Welch-Satterthwaite df.
pub fn mean_greater_at_05(a: &[f64], b: &[f64]) -> bool {
    let df = a.len().min(b.len()).saturating_sub(1);
    if df == 0 {
        return false;
    }
    let crit = T_CRIT_05.get(df - 1).copied().unwrap_or(1.6449);
    welch_t(a, b) > crit
}

/// Centered moving average with the given odd window; edges shrink the
/// window symmetrically.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    assert!(window % 2 == 1, "window must be odd");
    let half = window / 2;
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(xs.len() - 1);
            mean(&xs[lo..=hi])
        })
        .collect()
}

/// Number of sign changes in the first differences of `xs`, ignoring zero
/// differences.
pub fn sign_changes_in_differences(xs: &[f64]) -> usize {
    let mut changes = 0;
    let mut prev_sign = 0i8;
    for pair in xs.windows(2) {
        let d = pair[1] - pair[0];
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        if sign != 0 {
            if prev_sign != 0 && sign != prev_sign {
                changes += 1;
            }
            prev_sign = sign;
        }
    }
    changes
}
