//! Segmentation and classification metrics, spectral features and densities.

mod assignment;
mod density;
mod spectral;

pub use assignment::max_weight_assignment;
pub use density::{silverman_bandwidth, GaussianKde, KdeEstimate};
pub use spectral::{spectral_features, SpectralEstimator, SpectralFeatures, ALPHA_BAND};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Alignment of inferred labels to true labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMatch {
    /// Indexed by inferred label: the true label it maps to.
    pub assignment: Vec<Option<usize>>,
    pub accuracy: f64,
    /// Observations carried by inferred states left without a partner.
    pub unmatched_occupancy: usize,
}

impl StateMatch {
    /// Indexed by true label: the inferred label mapped onto it.
    pub fn inverse(&self, true_states: usize) -> Vec<Option<usize>> {
        let mut inv = vec![None; true_states];
        for (a, t) in self.assignment.iter().enumerate() {
            if let Some(t) = t {
                if *t < true_states {
                    inv[*t] = Some(a);
                }
            }
        }
        inv
    }
}

/// `confusion[a][k]` = number of indices with inferred `a` and true `k`.
pub fn confusion_matrix(inferred: &[usize], truth: &[usize], inferred_states: usize, true_states: usize) -> Result<Vec<Vec<usize>>> {
    check_len(truth.len(), inferred.len())?;
    let mut c = vec![vec![0usize; true_states]; inferred_states];
    for (&a, &k) in inferred.iter().zip(truth) {
        if a >= inferred_states {
            return Err(Error::StateOutOfRange { state: a, states: inferred_states });
        }
        if k >= true_states {
            return Err(Error::StateOutOfRange { state: k, states: true_states });
        }
        c[a][k] += 1;
    }
    Ok(c)
}

/// Fraction of agreeing indices under the best injective relabeling of
/// inferred states onto true states.
pub fn matched_state_accuracy(inferred: &[usize], truth: &[usize]) -> Result<StateMatch> {
    check_len(truth.len(), inferred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("state sequences".into()));
    }
    let l = inferred.iter().max().unwrap() + 1;
    let k = truth.iter().max().unwrap() + 1;
    let c = confusion_matrix(inferred, truth, l, k)?;
    let score: Vec<Vec<f64>> = c.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let mut assignment = max_weight_assignment(&score);
    let mut hits = 0;
    let mut unmatched = 0;
    for (a, row) in c.iter().enumerate() {
        let occ: usize = row.iter().sum();
        if occ == 0 {
            assignment[a] = None;
        }
        match assignment[a] {
            Some(t) => hits += row[t],
            None => unmatched += occ,
        }
    }
    Ok(StateMatch { assignment, accuracy: hits as f64 / truth.len() as f64, unmatched_occupancy: unmatched })
}

/// Mean squared entrywise difference over the K×K block aligned by `matching`.
/// True states without an inferred partner compare against a zero row and
/// column.
pub fn transition_mse(estimated: &[Vec<f64>], actual: &[Vec<f64>], matching: &StateMatch) -> Result<f64> {
    let k = actual.len();
    if k == 0 {
        return Err(Error::Empty("true transition matrix".into()));
    }
    for row in actual {
        check_len(k, row.len())?;
    }
    for row in estimated {
        check_len(estimated.len(), row.len())?;
    }
    if matching.assignment.len() > estimated.len() {
        return Err(Error::Dimension { expected: estimated.len(), got: matching.assignment.len() });
    }
    let inv = matching.inverse(k);
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let est = match (inv[i], inv[j]) {
                (Some(a), Some(b)) => estimated[a][b],
                _ => 0.0,
            };
            total += (est - actual[i][j]).powi(2);
        }
    }
    Ok(total / (k * k) as f64)
}

/// Mean per-class recall over classes `0..classes`.
pub fn balanced_accuracy(predicted: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    check_len(truth.len(), predicted.len())?;
    let mut hit = vec![0usize; classes];
    let mut count = vec![0usize; classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if t >= classes {
            return Err(Error::StateOutOfRange { state: t, states: classes });
        }
        count[t] += 1;
        if p == t {
            hit[t] += 1;
        }
    }
    if let Some(c) = count.iter().position(|&n| n == 0) {
        return Err(Error::Empty(format!("true class {c} has no examples")));
    }
    Ok((0..classes).map(|c| hit[c] as f64 / count[c] as f64).sum::<f64>() / classes as f64)
}

/// Balanced accuracy from a square confusion matrix (`rows` = true class).
pub fn balanced_accuracy_from_confusion(confusion: &[Vec<usize>]) -> Result<f64> {
    let k = confusion.len();
    let mut total = 0.0;
    for (c, row) in confusion.iter().enumerate() {
        check_len(k, row.len())?;
        let n: usize = row.iter().sum();
        if n == 0 {
            return Err(Error::Empty(format!("true class {c} has no examples")));
        }
        total += row[c] as f64 / n as f64;
    }
    Ok(total / k as f64)
}

/// Per-true-class normalized histograms of a confidence in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceHistogram {
    pub edges: Vec<f64>,
    /// `None` for a class without examples.
    pub mass: Vec<Option<Vec<f64>>>,
    pub counts: Vec<usize>,
}

impl ConfidenceHistogram {
    pub fn empty_classes(&self) -> Vec<usize> {
        self.mass.iter().enumerate().filter(|(_, m)| m.is_none()).map(|(c, _)| c).collect()
    }
}

/// Equal-width bins over [0, 1]; a confidence of exactly 1 lands in the last bin.
pub fn confidence_histogram(confidence: &[f64], truth: &[usize], classes: usize, bins: usize) -> Result<ConfidenceHistogram> {
    check_len(truth.len(), confidence.len())?;
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let mut raw = vec![vec![0usize; bins]; classes];
    let mut counts = vec![0usize; classes];
    for (&p, &t) in confidence.iter().zip(truth) {
        if t >= classes {
            return Err(Error::StateOutOfRange { state: t, states: classes });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("confidence {p} outside [0, 1]")));
        }
        let b = ((p * bins as f64) as usize).min(bins - 1);
        raw[t][b] += 1;
        counts[t] += 1;
    }
    let mass = raw
        .iter()
        .zip(&counts)
        .map(|(r, &n)| (n > 0).then(|| r.iter().map(|&c| c as f64 / n as f64).collect()))
        .collect();
    let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    Ok(ConfidenceHistogram { edges, mass, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    /// Best agreement over all injective inferred → true maps.
    fn brute_force_accuracy(inferred: &[usize], truth: &[usize]) -> f64 {
        let l = inferred.iter().max().unwrap() + 1;
        let k = truth.iter().max().unwrap() + 1;
        let c = confusion_matrix(inferred, truth, l, k).unwrap();
        fn go(a: usize, c: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if a == c.len() {
                return 0;
            }
            let mut best = go(a + 1, c, used);
            for t in 0..used.len() {
                if !used[t] {
                    used[t] = true;
                    best = best.max(c[a][t] + go(a + 1, c, used));
                    used[t] = false;
                }
            }
            best
        }
        go(0, &c, &mut vec![false; k]) as f64 / truth.len() as f64
    }

    #[test]
    fn identical_sequences_match_perfectly() {
        let z = vec![0, 0, 1, 2, 2, 1];
        let m = matched_state_accuracy(&z, &z).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.assignment, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn relabeled_copy_matches_perfectly() {
        let z = vec![0, 0, 1, 2, 2, 1];
        let relabeled: Vec<usize> = z.iter().map(|&k| [2, 0, 1][k]).collect();
        assert_eq!(matched_state_accuracy(&relabeled, &z).unwrap().accuracy, 1.0);
    }

    #[test]
    fn three_inferred_two_true_hand_case() {
        let truth = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let inferred = vec![2, 2, 2, 0, 1, 1, 0, 1];
        let m = matched_state_accuracy(&inferred, &truth).unwrap();
        assert_eq!(m.accuracy, brute_force_accuracy(&inferred, &truth));
        assert_eq!(m.accuracy, 6.0 / 8.0);
        assert_eq!(m.unmatched_occupancy, 2);
        assert!(matched_state_accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn transition_mse_examples() {
        let ident = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let unif = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let m = matched_state_accuracy(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(transition_mse(&ident, &ident, &m).unwrap(), 0.0);
        assert!((transition_mse(&unif, &ident, &m).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn transition_mse_is_permutation_invariant() {
        let mut rng = seeded(2);
        let a: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let b: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let ident = matched_state_accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap();
        let p = [1, 2, 0];
        let permute = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> { p.iter().map(|&i| p.iter().map(|&j| m[i][j]).collect()).collect() };
        let x = transition_mse(&a, &b, &ident).unwrap();
        let y = transition_mse(&permute(&a), &permute(&b), &ident).unwrap();
        assert!((x - y).abs() < 1e-15);
    }

    #[test]
    fn transition_mse_follows_matching() {
        let actual = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        // inferred label 1 is true 0 and vice versa
        let est = vec![vec![0.8, 0.2], vec![0.1, 0.9]];
        let m = matched_state_accuracy(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert!(transition_mse(&est, &actual, &m).unwrap() < 1e-30);
    }

    #[test]
    fn balanced_accuracy_examples() {
        assert_eq!(balanced_accuracy(&[0, 1, 1], &[0, 1, 1], 2).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&[1, 1, 1, 1], &[0, 1, 1, 1], 2).unwrap(), 0.5);
        let c = vec![vec![8, 2], vec![1, 9]];
        assert!((balanced_accuracy_from_confusion(&c).unwrap() - 0.85).abs() < 1e-15);
        assert!(balanced_accuracy(&[0, 0], &[0, 0], 2).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = confidence_histogram(&[1.0, 1.0], &[0, 0], 1, 4).unwrap();
        assert_eq!(h.mass[0].as_ref().unwrap(), &vec![0.0, 0.0, 0.0, 1.0]);
        let conf = [0.1, 0.3, 0.95, 0.9, 0.7, 0.05];
        let truth = [0, 0, 0, 1, 1, 1];
        let mirrored: Vec<f64> = conf.iter().map(|c| 1.0 - c).collect();
        let mirrored_truth: Vec<usize> = truth.iter().map(|t| 1 - t).collect();
        let a = confidence_histogram(&conf, &truth, 2, 5).unwrap();
        let b = confidence_histogram(&mirrored, &mirrored_truth, 2, 5).unwrap();
        for c in 0..2 {
            let mut rev = b.mass[1 - c].clone().unwrap();
            rev.reverse();
            assert_eq!(a.mass[c].as_ref().unwrap(), &rev);
        }
        let e = confidence_histogram(&[0.5], &[1], 2, 3).unwrap();
        assert_eq!(e.empty_classes(), vec![0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matching_equals_exhaustive_search(seed in any::<u64>(), l in 1usize..5, k in 1usize..5, n in 1usize..40) {
            let mut rng = seeded(seed);
            let inferred: Vec<usize> = (0..n).map(|_| rng.random_range(0..l)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let m = matched_state_accuracy(&inferred, &truth).unwrap();
            prop_assert!((m.accuracy - brute_force_accuracy(&inferred, &truth)).abs() < 1e-12);
            let raw = inferred.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / n as f64;
            prop_assert!(m.accuracy >= raw);
        }

        #[test]
        fn histogram_masses_sum_to_one(seed in any::<u64>(), n in 1usize..200, bins in 1usize..30) {
            let mut rng = seeded(seed);
            let conf: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let h = confidence_histogram(&conf, &truth, 2, bins).unwrap();
            for m in h.mass.iter().flatten() {
                prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn balanced_accuracy_ignores_class_duplication(seed in any::<u64>(), n in 2usize..60, dup in 1usize..4) {
            let mut rng = seeded(seed);
            let mut truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            truth[0] = 0;
            truth[1] = 1;
            let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let base = balanced_accuracy(&pred, &truth, 2).unwrap();
            let (mut p2, mut t2) = (pred.clone(), truth.clone());
            for _ in 0..dup {
                for (p, t) in pred.iter().zip(&truth).filter(|(_, t)| **t == 1) {
                    p2.push(*p);
                    t2.push(*t);
                }
            }
            prop_assert!((balanced_accuracy(&p2, &t2, 2).unwrap() - base).abs() < 1e-12);
        }
    }
}
