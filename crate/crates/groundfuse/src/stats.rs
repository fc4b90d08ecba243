//! Two-sided t-tests on top of `statrs`.

use groundfuse_core::eval::{paired_stats, EvalError};
use groundfuse_core::math::{mean, sample_sd};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided p-value of `t` with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

/// Without spread the test degenerates: equal means give 1, anything else 0.
fn degenerate_p(diff: f64) -> f64 {
    if diff == 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test of `mean(a) != mean(b)`.
pub fn welch(a: &[f64], b: &[f64]) -> WelchTest {
    assert!(a.len() >= 2 && b.len() >= 2, "welch needs two samples of at least two values");
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_sd(a).powi(2) / a.len() as f64, sample_sd(b).powi(2) / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        return WelchTest { mean_a: ma, mean_b: mb, t: f64::NAN, df: f64::NAN, p: degenerate_p(ma - mb) };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    WelchTest { mean_a: ma, mean_b: mb, t, df, p: two_sided_p(t, df) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub a: String,
    pub b: String,
    pub n: usize,
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub t: Option<f64>,
    pub p: f64,
}

pub fn paired(a_name: &str, a: &[f64], b_name: &str, b: &[f64]) -> Result<PairedTest, EvalError> {
    let s = paired_stats(a, b)?;
    let p = match s.t {
        Some(t) => two_sided_p(t, s.df as f64),
        None => degenerate_p(s.mean_diff),
    };
    Ok(PairedTest { a: a_name.into(), b: b_name.into(), n: s.n, mean_diff: s.mean_diff, t: s.t, p })
}

/// Paired tests for every ordered pair `i < j` of named per-point vectors.
pub fn compare(models: &[(String, Vec<f64>)]) -> Result<Vec<PairedTest>, EvalError> {
    let mut out = Vec::new();
    for (i, (an, a)) in models.iter().enumerate() {
        for (bn, b) in &models[i + 1..] {
            out.push(paired(an, a, bn, b)?);
        }
    }
    Ok(out)
}

/// Tab-separated summary table of `compare` results.
pub fn comparison_table(tests: &[PairedTest]) -> String {
    let mut s = String::from("a\tb\tn\tmean_diff\tt\tp\n");
    for t in tests {
        let tv = t.t.map(|v| format!("{v:.6}")).unwrap_or_else(|| "nan".into());
        s.push_str(&format!("{}\t{}\t{}\t{:.6}\t{}\t{:.6e}\n", t.a, t.b, t.n, t.mean_diff, tv, t.p));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use groundfuse_core::rng::seeded;
    use rand::Rng;

    fn uniform(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = seeded(seed, 0);
        (0..n).map(|_| rng.gen_range(f64::MIN_POSITIVE..1.0)).collect()
    }

    #[test]
    fn t_distribution_reference_values() {
        // two-sided 5% critical values
        assert!((two_sided_p(2.228138851986274, 10.0) - 0.05).abs() < 1e-9);
        assert!((two_sided_p(1.959963984540054, 1e9) - 0.05).abs() < 1e-6);
        assert_eq!(two_sided_p(0.0, 5.0), 1.0);
    }

    #[test]
    fn welch_matches_hand_computation() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        let w = welch(&a, &b);
        // va = (5/3)/4, vb = 10/5
        let (va, vb) = (5.0 / 12.0, 2.0);
        assert!((w.t - (2.5 - 6.0) / (va + vb as f64).sqrt()).abs() < 1e-12);
        let df = (va + vb) * (va + vb) / (va * va / 3.0 + vb * vb / 4.0);
        assert!((w.df - df).abs() < 1e-12);
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        assert!((w.p - 0.06913359319239236).abs() < 1e-9, "{}", w.p);
    }

    #[test]
    fn model_against_itself() {
        let a = uniform(1, 50);
        let t = paired("m", &a, "m", &a).unwrap();
        assert_eq!((t.mean_diff, t.p), (0.0, 1.0));
    }

    #[test]
    fn chance_versus_near_perfect() {
        let chance: Vec<f64> = uniform(2, 10_000).into_iter().map(|u| -u.ln()).collect();
        let good: Vec<f64> = uniform(3, 10_000).into_iter().map(|u| 0.01 + 0.02 * u).collect();
        let t = paired("chance", &chance, "good", &good).unwrap();
        assert!(t.p < 1e-6 && t.mean_diff > 0.9);
        let back = paired("good", &good, "chance", &chance).unwrap();
        assert_eq!(back.mean_diff, -t.mean_diff);
        assert_eq!(back.p, t.p);
    }

    #[test]
    fn compare_covers_pairs_and_rejects_mismatch() {
        let models = vec![("a".to_string(), uniform(4, 20)), ("b".to_string(), uniform(5, 20)), ("c".to_string(), uniform(6, 20))];
        let table = compare(&models).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(comparison_table(&table).lines().count(), 4);
        let bad = vec![("a".to_string(), uniform(4, 20)), ("b".to_string(), uniform(5, 19))];
        assert_eq!(compare(&bad).unwrap_err(), EvalError::LengthMismatch(20, 19));
    }
}
