//! Distributions over a finite label set and the divergences used by the
//! objective functions: Shannon entropy, KL, cross-entropy, and the
//! Bregman family generated by a convex scalar function psi.
//!
//! All logarithms are natural. The convention 0 * ln 0 = 0 applies
//! throughout, and +inf is a legal value (a zero in the second argument
//! hit by mass in the first).

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for validating that entries sum to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A probability distribution over label indices 0..L-1.
///
/// Entries are non-negative and sum to one within [`SIMPLEX_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("bad entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes non-negative weights into a distribution.
    /// Errors if the weights are negative or sum to zero.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("bad weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// The uniform distribution over `num_labels` labels.
    pub fn uniform(num_labels: usize) -> Self {
        assert!(num_labels > 0, "need at least one label");
        Self(vec![1.0 / num_labels as f64; num_labels])
    }

    /// All mass on `label`.
    pub fn point_mass(label: usize, num_labels: usize) -> Self {
        assert!(
            label < num_labels,
            "label {label} out of range {num_labels}"
        );
        let mut p = vec![0.0; num_labels];
        p[label] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, label: usize) -> f64 {
        self.0[label]
    }

    /// Index of the largest entry; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, p) in self.0.iter().enumerate().skip(1) {
            if *p > self.0[best] {
                best = j;
            }
        }
        best
    }

    /// Exact test against the uniform distribution. Holds by construction
    /// for values produced by `uniform` and for entrywise means of
    /// symmetric inputs; it is not a tolerance check.
    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.0.len() as f64;
        self.0.iter().all(|p| *p == u)
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Shannon entropy H(p) = -sum_j p_j ln p_j.
pub fn shannon_entropy(p: &LabelDistribution) -> f64 {
    p.probs()
        .iter()
        .map(|&pj| if pj > 0.0 { -pj * pj.ln() } else { 0.0 })
        .sum()
}

/// KL divergence D(p || q). Returns +inf when p puts mass where q has none.
pub fn kl_divergence(p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut d = 0.0;
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if pj > 0.0 {
            if qj == 0.0 {
                return f64::INFINITY;
            }
            d += pj * (pj / qj).ln();
        }
    }
    d
}

/// Cross-entropy H(p || q) = -sum_j p_j ln q_j = H(p) + D(p || q).
pub fn cross_entropy(p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut h = 0.0;
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if pj > 0.0 {
            if qj == 0.0 {
                return f64::INFINITY;
            }
            h -= pj * qj.ln();
        }
    }
    h
}

/// Generator of the Bregman family used by the objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiKind {
    /// psi(t) = t^2. Bregman distance becomes squared euclidean distance.
    Quadratic,
    /// psi(t) = t ln t (0 at t = 0). Bregman distance becomes KL.
    NegEntropy,
}

impl PsiKind {
    pub fn psi(self, t: f64) -> f64 {
        match self {
            PsiKind::Quadratic => t * t,
            PsiKind::NegEntropy => {
                if t > 0.0 {
                    t * t.ln()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn psi_prime(self, t: f64) -> f64 {
        match self {
            PsiKind::Quadratic => 2.0 * t,
            PsiKind::NegEntropy => 1.0 + t.ln(),
        }
    }

    pub fn psi_double_prime(self, t: f64) -> f64 {
        match self {
            PsiKind::Quadratic => 2.0,
            PsiKind::NegEntropy => 1.0 / t,
        }
    }
}

/// Bregman distance B_psi(p, q) = sum_j psi(p_j) - psi(q_j) - psi'(q_j)(p_j - q_j).
///
/// Quadratic psi gives the squared euclidean distance; NegEntropy gives KL
/// (+inf when p has mass on a zero of q).
pub fn bregman_distance(psi: PsiKind, p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut b = 0.0;
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        match psi {
            PsiKind::Quadratic => {
                let d = pj - qj;
                b += d * d;
            }
            PsiKind::NegEntropy => {
                // limits at zero: the p side contributes q_j, the q side diverges
                if pj > 0.0 && qj > 0.0 {
                    b += pj * (pj / qj).ln() + qj - pj;
                } else if pj > 0.0 {
                    return f64::INFINITY;
                } else {
                    b += qj;
                }
            }
        }
    }
    b
}

/// psi-entropy H_psi(p) = -sum_j psi(p_j).
///
/// NegEntropy recovers Shannon entropy, Quadratic gives -sum p_j^2.
pub fn psi_entropy(psi: PsiKind, p: &LabelDistribution) -> f64 {
    -p.probs().iter().map(|&pj| psi.psi(pj)).sum::<f64>()
}

/// psi-cross-entropy H_psi(p || q) = H_psi(p) + B_psi(p, q).
///
/// For Quadratic this reduces to sum_j q_j^2 - 2 p_j q_j; for NegEntropy it
/// is the ordinary cross-entropy.
pub fn psi_cross_entropy(psi: PsiKind, p: &LabelDistribution, q: &LabelDistribution) -> f64 {
    psi_entropy(psi, p) + bregman_distance(psi, p, q)
}

/// Uniform sample from the simplex (symmetric Dirichlet with concentration 1),
/// drawn by normalizing exponential variates.
pub fn sample_simplex<R: Rng>(rng: &mut R, num_labels: usize) -> LabelDistribution {
    loop {
        let w: Vec<f64> = (0..num_labels)
            .map(|_| {
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                -u.ln()
            })
            .collect();
        if let Ok(d) = LabelDistribution::from_weights(w) {
            return d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_entropy_is_log_l() {
        for l in [2usize, 3, 5, 8] {
            let h = shannon_entropy(&LabelDistribution::uniform(l));
            assert!((h - (l as f64).ln()).abs() < 1e-12, "H(u_{l}) = ln {l}");
        }
    }

    #[test]
    fn point_mass_entropy_is_zero() {
        assert_eq!(shannon_entropy(&LabelDistribution::point_mass(1, 4)), 0.0);
    }

    #[test]
    fn kl_point_mass_vs_uniform() {
        let p = LabelDistribution::point_mass(0, 2);
        let u = LabelDistribution::uniform(2);
        assert!((kl_divergence(&p, &u) - 2.0f64.ln()).abs() < 1e-12);
        // reverse direction hits a zero of q
        assert_eq!(kl_divergence(&u, &p), f64::INFINITY);
    }

    #[test]
    fn cross_entropy_infinite_on_missing_support() {
        let p = LabelDistribution::new(vec![0.5, 0.5]).unwrap();
        let q = LabelDistribution::point_mass(0, 2);
        assert_eq!(cross_entropy(&p, &q), f64::INFINITY);
    }

    #[test]
    fn quadratic_bregman_is_squared_distance() {
        let p = LabelDistribution::new(vec![0.3, 0.7]).unwrap();
        let q = LabelDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!((bregman_distance(PsiKind::Quadratic, &p, &q) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn quadratic_psi_entropy_value() {
        let u = LabelDistribution::uniform(2);
        assert!((psi_entropy(PsiKind::Quadratic, &u) - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_psi_cross_entropy_closed_form() {
        let p = LabelDistribution::point_mass(0, 2);
        let q = LabelDistribution::new(vec![0.75, 0.25]).unwrap();
        // sum q^2 - 2 p q = 0.625 - 1.5
        let got = psi_cross_entropy(PsiKind::Quadratic, &p, &q);
        assert!((got - (-0.875)).abs() < 1e-12);
    }

    #[test]
    fn negentropy_bregman_handles_shared_zeros() {
        let p = LabelDistribution::new(vec![1.0, 0.0]).unwrap();
        let q = LabelDistribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(bregman_distance(PsiKind::NegEntropy, &p, &q), 0.0);
    }

    #[test]
    fn argmax_tie_takes_lowest_index() {
        let p = LabelDistribution::new(vec![0.25, 0.375, 0.375]).unwrap();
        assert_eq!(p.argmax(), 1);
        let u = LabelDistribution::uniform(3);
        assert_eq!(u.argmax(), 0);
    }

    #[test]
    fn validation_rejects_bad_vectors() {
        assert!(LabelDistribution::new(vec![0.6, 0.6]).is_err());
        assert!(LabelDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(LabelDistribution::new(vec![]).is_err());
        assert!(LabelDistribution::from_weights(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn sampled_simplex_points_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for l in [2usize, 3, 5] {
            for _ in 0..200 {
                let d = sample_simplex(&mut rng, l);
                let sum: f64 = d.probs().iter().sum();
                assert!((sum - 1.0).abs() <= SIMPLEX_TOL);
                assert!(d.probs().iter().all(|p| *p >= 0.0));
            }
        }
    }

    fn simplex(l: usize) -> impl Strategy<Value = LabelDistribution> {
        prop::collection::vec(1e-9f64..1.0, l)
            .prop_map(|w| LabelDistribution::from_weights(w).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bregman_nonnegative(p in simplex(3), q in simplex(3)) {
            for psi in [PsiKind::Quadratic, PsiKind::NegEntropy] {
                let b = bregman_distance(psi, &p, &q);
                prop_assert!(b >= -1e-12, "B_psi must be nonnegative, got {b}");
            }
        }

        #[test]
        fn cross_entropy_additivity(p in simplex(4), q in simplex(4)) {
            let lhs = cross_entropy(&p, &q);
            let rhs = shannon_entropy(&p) + kl_divergence(&p, &q);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn psi_cross_entropy_negentropy_matches_cross_entropy(p in simplex(3), q in simplex(3)) {
            let lhs = psi_cross_entropy(PsiKind::NegEntropy, &p, &q);
            let rhs = cross_entropy(&p, &q);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn quadratic_cross_entropy_closed_form_matches(p in simplex(4), q in simplex(4)) {
            let lhs = psi_cross_entropy(PsiKind::Quadratic, &p, &q);
            let rhs: f64 = p.probs().iter().zip(q.probs())
                .map(|(&pj, &qj)| qj * qj - 2.0 * pj * qj)
                .sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        #[test]
        fn point_mass_minimizes_psi_cross_entropy_at_argmax(q in simplex(4)) {
            // over point masses p, H_psi(p || q) is minimized at argmax q
            for psi in [PsiKind::Quadratic, PsiKind::NegEntropy] {
                let vals: Vec<f64> = (0..4)
                    .map(|j| psi_cross_entropy(psi, &LabelDistribution::point_mass(j, 4), &q))
                    .collect();
                let best = vals[q.argmax()];
                for v in &vals {
                    prop_assert!(best <= v + 1e-12);
                }
            }
        }
    }
}
