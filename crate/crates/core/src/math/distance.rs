use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Dissimilarity between a lagged window and a basis center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Manhattan,
    /// `1 - cos(a, b)`, in `[0, 2]`.
    CosineDissimilarity,
}

impl DistanceMetric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len(a.len(), b.len())?;
        match self {
            DistanceMetric::Euclidean => Ok(a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()),
            DistanceMetric::Manhattan => Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()),
            DistanceMetric::CosineDissimilarity => {
                let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                }
                if na == 0.0 || nb == 0.0 {
                    return Err(Error::Degenerate("cosine dissimilarity of a zero vector".into()));
                }
                let cos = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
                Ok(1.0 - cos)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Manhattan => "manhattan",
            DistanceMetric::CosineDissimilarity => "cosine",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        let e = DistanceMetric::Euclidean.distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(e, 0.0);
        let m = DistanceMetric::Manhattan.distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(m, 2.0);
        let c = DistanceMetric::CosineDissimilarity
            .distance(&[1.0, 2.0, 2.0], &[2.0, 4.0, 4.0])
            .unwrap();
        assert!(c.abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            DistanceMetric::Euclidean.distance(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            DistanceMetric::CosineDissimilarity.distance(&[0.0, 0.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn antiparallel_cosine_is_two() {
        let c = DistanceMetric::CosineDissimilarity.distance(&[1.0, -1.0], &[-2.0, 2.0]).unwrap();
        assert!((c - 2.0).abs() < 1e-15);
    }

    fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn metric_axioms((a, b) in pair()) {
            for m in [DistanceMetric::Euclidean, DistanceMetric::Manhattan] {
                let d = m.distance(&a, &b).unwrap();
                prop_assert!(d >= 0.0);
                prop_assert!((d - m.distance(&b, &a).unwrap()).abs() < 1e-12);
                prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
                if a != b {
                    prop_assert!(d > 0.0);
                }
            }
        }

        #[test]
        fn cosine_range((a, b) in pair()) {
            prop_assume!(a.iter().any(|v| *v != 0.0) && b.iter().any(|v| *v != 0.0));
            let m = DistanceMetric::CosineDissimilarity;
            let d = m.distance(&a, &b).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert!((d - m.distance(&b, &a).unwrap()).abs() < 1e-12);
            let scaled: Vec<f64> = a.iter().map(|v| 3.5 * v).collect();
            prop_assert!(m.distance(&a, &scaled).unwrap() < 1e-12);
        }
    }
}
