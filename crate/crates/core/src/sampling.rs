//! Independent-Bernoulli subset distribution p(z | alpha): sampling, PMF,
//! leave-one-out PMF, importance weights and effective sample size.

use rand::Rng;

use crate::data::{FeatureSubset, SelectionProbs};
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Partial products beyond this switch the weight computation to log space.
const LOG_SPACE_THRESHOLD: f64 = 1e12;

pub fn sample_subset(alpha: &SelectionProbs, rng: &mut StreamRng) -> FeatureSubset {
    FeatureSubset::from_mask(
        alpha
            .as_slice()
            .iter()
            .map(|&a| rng.random::<f64>() < a)
            .collect(),
    )
}

#[inline]
fn factor(selected: bool, a: f64) -> f64 {
    if selected {
        a
    } else {
        1.0 - a
    }
}

/// p(z | alpha), with 0^0 = 1.
pub fn pmf(subset: &FeatureSubset, alpha: &SelectionProbs) -> f64 {
    debug_assert_eq!(subset.len(), alpha.len());
    subset
        .mask()
        .iter()
        .zip(alpha.as_slice())
        .map(|(&z, &a)| factor(z, a))
        .product()
}

/// p(z_{-j} | alpha_{-j}): the PMF with the factor for feature `j` omitted.
pub fn pmf_without(subset: &FeatureSubset, alpha: &SelectionProbs, j: usize) -> f64 {
    subset
        .mask()
        .iter()
        .zip(alpha.as_slice())
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, (&z, &a))| factor(z, a))
        .product()
}

fn ratio_product(
    subset: &FeatureSubset,
    alpha: &SelectionProbs,
    beta: &SelectionProbs,
    skip: Option<usize>,
) -> Result<f64> {
    let mut prod = 1.0;
    let mut log_acc = 0.0;
    let mut in_log = false;
    for (k, (&z, (&a, &b))) in subset
        .mask()
        .iter()
        .zip(alpha.as_slice().iter().zip(beta.as_slice()))
        .enumerate()
    {
        if Some(k) == skip {
            continue;
        }
        let den = factor(z, a);
        if den == 0.0 {
            return Err(Error::DegenerateRatio { feature: k });
        }
        let r = factor(z, b) / den;
        if r == 0.0 {
            return Ok(0.0);
        }
        prod *= r;
        if prod > LOG_SPACE_THRESHOLD {
            in_log = true;
            log_acc += prod.ln();
            prod = 1.0;
        }
    }
    Ok(if in_log {
        (log_acc + prod.ln()).exp()
    } else {
        prod
    })
}

/// p(z | beta) / p(z | alpha), computed factor by factor.
pub fn importance_weight(subset: &FeatureSubset, alpha: &SelectionProbs, beta: &SelectionProbs) -> Result<f64> {
    ratio_product(subset, alpha, beta, None)
}

/// p(z_{-j} | beta_{-j}) / p(z_{-j} | alpha_{-j}).
pub fn importance_weight_without(
    subset: &FeatureSubset,
    alpha: &SelectionProbs,
    beta: &SelectionProbs,
    j: usize,
) -> Result<f64> {
    ratio_product(subset, alpha, beta, Some(j))
}

/// (sum w)^2 / sum w^2.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 == 0.0 || !s2.is_finite() {
        return Err(Error::WeightCollapse);
    }
    Ok(s * s / s2)
}

/// The T subsets drawn from the snapshot distribution and their current
/// importance weights relative to a moving target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceState {
    alpha: SelectionProbs,
    subsets: Vec<FeatureSubset>,
    weights: Vec<f64>,
    t_eff: f64,
}

impl ImportanceState {
    pub fn new(alpha: SelectionProbs, subsets: Vec<FeatureSubset>) -> Self {
        let t = subsets.len();
        ImportanceState {
            alpha,
            subsets,
            weights: vec![1.0; t],
            t_eff: t as f64,
        }
    }

    pub fn alpha(&self) -> &SelectionProbs {
        &self.alpha
    }

    pub fn subsets(&self) -> &[FeatureSubset] {
        &self.subsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn t_eff(&self) -> f64 {
        self.t_eff
    }

    /// Recomputes every weight against `beta` and refreshes T_eff.
    pub fn update(&mut self, beta: &SelectionProbs) -> Result<f64> {
        for (w, z) in self.weights.iter_mut().zip(&self.subsets) {
            *w = importance_weight(z, &self.alpha, beta)?;
        }
        self.t_eff = effective_sample_size(&self.weights)?;
        Ok(self.t_eff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn probs(v: &[f64]) -> SelectionProbs {
        SelectionProbs::new(v.to_vec()).unwrap()
    }

    #[test]
    fn degenerate_alphas_give_degenerate_masks() {
        let mut rng = crate::rng::stream(0, 0);
        assert_eq!(sample_subset(&probs(&[1.0; 7]), &mut rng).count(), 7);
        assert_eq!(sample_subset(&probs(&[0.0; 7]), &mut rng).count(), 0);
    }

    #[test]
    fn bit_frequencies_match_half() {
        let mut rng = crate::rng::stream(1, 0);
        let a = probs(&[0.5; 20]);
        let mut counts = [0usize; 20];
        for _ in 0..10_000 {
            for &j in sample_subset(&a, &mut rng).active() {
                counts[j] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / 10_000.0 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn pmf_examples() {
        let a = probs(&[0.5, 0.5]);
        let total: f64 = (0..4).map(|b| pmf(&FeatureSubset::from_bits(2, b), &a)).sum();
        assert_eq!(total, 1.0);
        for b in 0..4 {
            assert_eq!(pmf(&FeatureSubset::from_bits(2, b), &a), 0.25);
        }
        let z = FeatureSubset::from_mask(vec![true, false]);
        assert!((pmf(&z, &probs(&[0.3, 0.8])) - 0.06).abs() < 1e-15);
        // 0^0 = 1 on degenerate coordinates.
        assert_eq!(pmf(&z, &probs(&[1.0, 0.0])), 1.0);
    }

    #[test]
    fn weight_examples() {
        let z = FeatureSubset::from_mask(vec![true]);
        assert_eq!(importance_weight(&z, &probs(&[0.5]), &probs(&[0.25])).unwrap(), 0.5);
        let a = probs(&[0.3, 0.6, 0.1]);
        for b in 0..8 {
            assert_eq!(importance_weight(&FeatureSubset::from_bits(3, b), &a, &a).unwrap(), 1.0);
        }
        let bad = importance_weight(&z, &probs(&[0.0]), &probs(&[0.5]));
        assert!(matches!(bad, Err(Error::DegenerateRatio { feature: 0 })));
    }

    #[test]
    fn weights_are_unbiased() {
        let mut rng = crate::rng::stream(2, 0);
        let a = probs(&[0.2, 0.5, 0.7, 0.4]);
        let b = probs(&[0.3, 0.45, 0.6, 0.5]);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| importance_weight(&sample_subset(&a, &mut rng), &a, &b).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 1e-2, "{mean}");
    }

    #[test]
    fn log_space_fallback_matches_direct_product() {
        let m = 40;
        let z = FeatureSubset::full(m);
        let a = SelectionProbs::new(vec![0.05; m]).unwrap();
        let b = SelectionProbs::new(vec![0.1; m]).unwrap();
        let w = importance_weight(&z, &a, &b).unwrap();
        let direct = 2f64.powi(m as i32);
        assert!((w / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ess_examples() {
        assert_eq!(effective_sample_size(&[1.0; 100]).unwrap(), 100.0);
        let mut one = vec![0.0; 100];
        one[0] = 1.0;
        assert_eq!(effective_sample_size(&one).unwrap(), 1.0);
        assert!((effective_sample_size(&[2.0, 1.0, 1.0]).unwrap() - 16.0 / 6.0).abs() < 1e-15);
        assert!(matches!(effective_sample_size(&[0.0, 0.0]), Err(Error::WeightCollapse)));
    }

    #[test]
    fn state_update_tracks_beta() {
        let a = probs(&[0.5, 0.5]);
        let subsets = vec![FeatureSubset::from_bits(2, 0b01), FeatureSubset::from_bits(2, 0b10)];
        let mut s = ImportanceState::new(a, subsets);
        assert_eq!(s.t_eff(), 2.0);
        let t = s.update(&probs(&[0.75, 0.25])).unwrap();
        // w = (1.5 * 1.5, 0.5 * 0.5)
        assert_eq!(s.weights(), &[2.25, 0.25]);
        assert!((t - 2.5f64.powi(2) / (2.25f64.powi(2) + 0.0625)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pmf_normalizes(alpha in proptest::collection::vec(0.0f64..=1.0, 1..=10)) {
            let m = alpha.len();
            let a = probs(&alpha);
            let total: f64 = (0..1u64 << m).map(|b| pmf(&FeatureSubset::from_bits(m, b), &a)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pmf_factorizes(alpha in proptest::collection::vec(0.0f64..=1.0, 1..=8), bits in any::<u64>()) {
            let m = alpha.len();
            let a = probs(&alpha);
            let z = FeatureSubset::from_bits(m, bits);
            let p = pmf(&z, &a);
            for j in 0..m {
                let f = if z.contains(j) { alpha[j] } else { 1.0 - alpha[j] };
                prop_assert!((p - pmf_without(&z, &a, j) * f).abs() < 1e-15);
            }
        }

        #[test]
        fn ess_bounds_and_scale(w in proptest::collection::vec(0.0f64..10.0, 1..50), c in 0.01f64..100.0) {
            prop_assume!(w.iter().any(|&x| x > 0.0));
            let t = effective_sample_size(&w).unwrap();
            prop_assert!(t >= 1.0 - 1e-12 && t <= w.len() as f64 + 1e-9);
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let ts = effective_sample_size(&scaled).unwrap();
            prop_assert!((t - ts).abs() <= 1e-9 * t);
        }
    }
}
