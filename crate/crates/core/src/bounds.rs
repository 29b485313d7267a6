//! Computable forms of the analytic quantities: per-distance error
//! exponents, labeling counts, the union bound on the exact-ML error
//! probability, and the change-of-measure diagnostics around the
//! impossibility bound.
//!
//! All bound arithmetic stays in log-domain with a single final
//! exponentiation; underflow flushes to zero.

use serde::Serialize;

use crate::divergence::{kl, renyi_half, TiltedPair};
use crate::error::{Error, Result};
use crate::model::{check_assumptions, MvsbmParams};
use crate::sampler::{sample_labeling, sample_tensor_psi, SeedSpec};

fn check_k(n: usize, k: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::OddN(n));
    }
    let max = n / 2 - 1;
    if k < 1 || k > max {
        return Err(Error::KOutOfRange { k, max });
    }
    Ok(())
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let lg = |x: usize| libm::lgamma((x + 1) as f64);
    lg(n) - lg(k) - lg(n - k)
}

/// Log of the exact number of balanced labelings at misclassification
/// distance `2k` from a reference: `ln C(n/2, k)^2`.
pub fn labeling_count_log(n: usize, k: usize) -> Result<f64> {
    check_k(n, k)?;
    Ok(2.0 * ln_choose(n / 2, k))
}

/// Log of the relaxed count `(e n / 2k)^{2k}` that the analysis chains
/// through; always at least [`labeling_count_log`].
pub fn labeling_count_log_relaxed(n: usize, k: usize) -> Result<f64> {
    check_k(n, k)?;
    let kf = k as f64;
    Ok(2.0 * kf * (1.0 + (n as f64).ln() - (2.0 * kf).ln()))
}

/// Per-distance error exponent: the probability that a labeling at
/// distance `2k` beats the truth is at most `exp(-k (n - 2k) I)`.
/// Returns 0 when the divergence is infinite.
pub fn lemma1_term(n: usize, k: usize, renyi: f64) -> Result<f64> {
    check_k(n, k)?;
    if renyi < 0.0 || renyi.is_nan() {
        return Err(Error::NegativeDivergence(renyi));
    }
    if renyi.is_infinite() {
        return Ok(0.0);
    }
    let kf = k as f64;
    Ok((-kf * (n as f64 - 2.0 * kf) * renyi).exp())
}

/// One distance class of the union bound.
#[derive(Debug, Clone, Serialize)]
pub struct PerKTerm {
    pub k: usize,
    /// `ln C(n/2, k)^2`, the exact labeling count in log-domain.
    pub count_log: f64,
    /// `-k (n - 2k) I`.
    pub exponent: f64,
    /// `exp(count_log + exponent)`.
    pub term: f64,
}

/// Union bound on the exact-ML failure probability plus the margin of
/// the threshold condition.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub renyi_half: f64,
    pub per_k_terms: Vec<PerKTerm>,
    /// `min(1, sum_k term(k) / 2)`: each unordered partition {x, -x}
    /// appears twice among labelings (once at distance 2k, once at
    /// 2(n/2 - k)) with identical likelihood and identical exponent,
    /// so the partition-level union bound is half the labeling-level
    /// sum.
    pub union_bound: f64,
    /// The `eps` with `I = 2 (1 + eps) ln n / n`; negative below the
    /// threshold.
    pub epsilon_margin: f64,
}

/// Evaluates the union bound with exact counts over every distance
/// class `k` in `[1, n/2 - 1]`.
pub fn ml_union_bound(params: &MvsbmParams) -> Result<BoundReport> {
    let n = params.n();
    let renyi = renyi_half(params.within(), params.across())?;
    let mut per_k_terms = Vec::with_capacity(n / 2 - 1);
    let mut total = 0.0f64;
    for k in 1..n / 2 {
        let count_log = labeling_count_log(n, k)?;
        let kf = k as f64;
        let exponent = if renyi.is_infinite() {
            f64::NEG_INFINITY
        } else {
            -kf * (n as f64 - 2.0 * kf) * renyi
        };
        let term = (count_log + exponent).exp();
        total += term;
        per_k_terms.push(PerKTerm { k, count_log, exponent, term });
    }
    let epsilon_margin = if renyi.is_infinite() {
        f64::INFINITY
    } else {
        n as f64 * renyi / (2.0 * (n as f64).ln()) - 1.0
    };
    Ok(BoundReport {
        n,
        renyi_half: renyi,
        per_k_terms,
        union_bound: (total / 2.0).min(1.0),
        epsilon_margin,
    })
}

/// Deterministic pieces of the change-of-measure argument for one
/// instance and tilt.
#[derive(Debug, Clone, Serialize)]
pub struct PsiDiagnostics {
    /// `(n-1)/2 * (KL(p~||p) + KL(q~||q))`, the lower bracket on the
    /// expected log-likelihood ratio under the auxiliary model.
    pub e_psi_r_lower: f64,
    /// `n/2 * (KL(p~||p) + KL(q~||q))`, the upper bracket.
    pub e_psi_r_upper: f64,
    /// Variance bound `(n/2) ln(rho) (KL sum) + ((2n-1)/4) (KL sum)^2`.
    pub var_upper: f64,
    /// Right-hand side of the necessary condition:
    /// `e_psi_r_upper + sqrt(4 var_upper)`.
    pub necessary_rhs: f64,
    /// `ln(n / expected_mis) - 2 ln 2`.
    pub f_n: f64,
}

/// Computes the deterministic diagnostics; `expected_mis` is supplied
/// externally (a Monte Carlo estimate or a hypothesis value), never
/// estimated silently here.
pub fn psi_diagnostics(
    params: &MvsbmParams,
    tilt: &TiltedPair,
    expected_mis: f64,
) -> Result<PsiDiagnostics> {
    if expected_mis <= 0.0 || expected_mis.is_nan() {
        return Err(Error::NonpositiveMis(expected_mis));
    }
    let residual = tilt.balance_residual(params);
    if residual > 1e-8 || residual.is_nan() {
        return Err(Error::InvalidTilt(residual));
    }
    let n = params.n() as f64;
    let kl_sum = kl(&tilt.p_tilt, params.within())? + kl(&tilt.q_tilt, params.across())?;
    let rho = check_assumptions(params).rho;
    let var_upper = if kl_sum == 0.0 {
        0.0
    } else {
        n / 2.0 * rho.ln() * kl_sum + (2.0 * n - 1.0) / 4.0 * kl_sum * kl_sum
    };
    let e_psi_r_upper = n / 2.0 * kl_sum;
    Ok(PsiDiagnostics {
        e_psi_r_lower: (n - 1.0) / 2.0 * kl_sum,
        e_psi_r_upper,
        var_upper,
        necessary_rhs: e_psi_r_upper + (4.0 * var_upper).sqrt(),
        f_n: (n / expected_mis).ln() - 2.0 * std::f64::consts::LN_2,
    })
}

/// Log-likelihood ratio `R = sum_{v != 0} ln(P_psi(A_0v) / P_phi(A_0v))`
/// of a tensor with respect to the auxiliary and true models.
///
/// Per node-0 pair: the auxiliary mass is `p~(A)` when the partner is
/// positive and `q~(A)` otherwise; the true mass is `p(A)` when the
/// partner shares node 0's sign and `q(A)` otherwise.
pub fn log_likelihood_ratio(
    params: &MvsbmParams,
    tilt: &TiltedPair,
    truth: &crate::sampler::Labeling,
    tensor: &crate::sampler::AdjacencyTensor,
) -> Result<f64> {
    if truth.len() != params.n() {
        return Err(Error::LengthMismatch(truth.len(), params.n()));
    }
    let n = params.n();
    let mut r = 0.0;
    for v in 1..n {
        let mask = tensor.mask(0, v);
        let psi_mass = if truth.sign(v) == 1 {
            tilt.p_tilt.prob(mask)
        } else {
            tilt.q_tilt.prob(mask)
        };
        let phi_mass = if truth.sign(0) == truth.sign(v) {
            params.within().prob(mask)
        } else {
            params.across().prob(mask)
        };
        if psi_mass == 0.0 || phi_mass == 0.0 {
            return Err(Error::ZeroZeroMass { mask });
        }
        r += (psi_mass / phi_mass).ln();
    }
    Ok(r)
}

/// Monte Carlo estimate of `P_psi(R <= f_n)`: each trial samples a
/// balanced labeling and an auxiliary-model tensor, computes `R`, and
/// counts threshold crossings. Trial `t` uses the stream
/// `(master_seed, trial_index + t)`.
pub fn estimate_lemma2_lhs(
    params: &MvsbmParams,
    tilt: &TiltedPair,
    f_n: f64,
    trials: u64,
    seed: SeedSpec,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::BadTrials);
    }
    let mut hits = 0u64;
    for t in 0..trials {
        let trial_seed = SeedSpec::new(seed.master_seed, seed.trial_index.wrapping_add(t));
        let truth = sample_labeling(params.n(), trial_seed)?;
        let tensor = sample_tensor_psi(params, tilt, &truth, trial_seed)?;
        let r = log_likelihood_ratio(params, tilt, &truth, &tensor)?;
        if r <= f_n {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::geometric_tilt;
    use crate::model::make_bernoulli_sbm;

    const I_SWAP: f64 = 0.4462871026284194;

    fn int_choose(n: u64, k: u64) -> u128 {
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc
    }

    #[test]
    fn count_log_hand_values() {
        assert!((labeling_count_log(8, 1).unwrap() - 16f64.ln()).abs() < 1e-12);
        // Binomial symmetry k <-> n/2 - k.
        assert!(
            (labeling_count_log(8, 3).unwrap() - labeling_count_log(8, 1).unwrap()).abs()
                < 1e-12
        );
        assert!((labeling_count_log(20, 5).unwrap() - 11.058858175022847).abs() < 1e-10);
        assert!(matches!(
            labeling_count_log(8, 4),
            Err(Error::KOutOfRange { k: 4, max: 3 })
        ));
        assert!(matches!(labeling_count_log(8, 0), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn count_log_matches_integer_binomials() {
        for n in (4..=30).step_by(2) {
            let mut total: u128 = 0;
            for k in 1..n / 2 {
                let exact = int_choose((n / 2) as u64, k as u64).pow(2);
                total += exact;
                let log_value = labeling_count_log(n, k).unwrap();
                assert!(
                    (log_value - (exact as f64).ln()).abs() < 1e-9,
                    "n={n} k={k}"
                );
                assert!(log_value <= labeling_count_log_relaxed(n, k).unwrap() + 1e-12);
            }
            // All non-identity, non-flip balanced labelings accounted.
            assert_eq!(total, int_choose(n as u64, (n / 2) as u64) - 2, "n={n}");
        }
    }

    #[test]
    fn exact_count_below_relaxed_count_up_to_n_200() {
        for n in (4..=200).step_by(2) {
            for k in 1..n / 2 {
                assert!(
                    labeling_count_log(n, k).unwrap()
                        <= labeling_count_log_relaxed(n, k).unwrap() + 1e-12,
                    "n={n} k={k}"
                );
            }
        }
    }

    #[test]
    fn lemma1_term_values() {
        assert_eq!(lemma1_term(20, 1, 0.0).unwrap(), 1.0);
        assert_eq!(lemma1_term(20, 9, 0.0).unwrap(), 1.0);
        assert!((lemma1_term(20, 1, I_SWAP).unwrap() - 3.2451855365842725e-4).abs() < 1e-12);
        assert_eq!(lemma1_term(20, 3, f64::INFINITY).unwrap(), 0.0);
        assert!(matches!(lemma1_term(20, 10, 0.1), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn union_bound_hand_value() {
        let params = make_bernoulli_sbm(0.8, 0.2, 20).unwrap();
        let report = ml_union_bound(&params).unwrap();
        assert_eq!(report.per_k_terms.len(), 9);
        let k1 = &report.per_k_terms[0];
        assert!((k1.term - 0.032451855365842726).abs() < 1e-10);
        assert!((report.union_bound - 0.03385558129892984).abs() < 1e-10);
        // Summation oracle with exact binomials.
        let mut oracle = 0.0;
        for k in 1..10u64 {
            let count = int_choose(10, k).pow(2) as f64;
            oracle += count * (-(k as f64) * (20.0 - 2.0 * k as f64) * I_SWAP).exp();
        }
        assert!((report.union_bound - oracle / 2.0).abs() < 1e-12);
    }

    #[test]
    fn union_bound_degenerate_and_margin() {
        let flat = make_bernoulli_sbm(0.3, 0.3, 20).unwrap();
        let report = ml_union_bound(&flat).unwrap();
        assert_eq!(report.union_bound, 1.0);
        assert!((report.epsilon_margin + 1.0).abs() < 1e-12);

        // epsilon_margin is 0 exactly when the threshold statistic is 2.
        let n = 20f64;
        let target = 2.0 * n.ln() / n;
        let q1: f64 = 0.01;
        let (mut lo, mut hi) = (q1, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let coeff = (mid * q1).sqrt() + ((1.0 - mid) * (1.0 - q1)).sqrt();
            if -2.0 * coeff.ln() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let params = make_bernoulli_sbm(lo, q1, 20).unwrap();
        let report = ml_union_bound(&params).unwrap();
        assert!(report.epsilon_margin.abs() < 1e-6);

        let noiseless = crate::model::make_identical_views(1.0, 0.0, 2, 20).unwrap();
        let report = ml_union_bound(&noiseless).unwrap();
        assert_eq!(report.union_bound, 0.0);
    }

    #[test]
    fn psi_diagnostics_hand_values() {
        let params = make_bernoulli_sbm(0.8, 0.2, 20).unwrap();
        let tilt = geometric_tilt(params.within(), params.across()).unwrap();
        let diag = psi_diagnostics(&params, &tilt, 1.0).unwrap();
        assert!((diag.e_psi_r_upper - 4.462871026284194).abs() < 1e-12);
        assert!((diag.e_psi_r_lower - 4.2397274749699845).abs() < 1e-12);
        assert!(diag.e_psi_r_lower <= diag.e_psi_r_upper);
        assert!((diag.f_n - 1.6094379124341003).abs() < 1e-12);
        // var bound: 10 ln(4) I + 39/4 I^2
        let expected_var = 10.0 * 4.0f64.ln() * I_SWAP + 39.0 / 4.0 * I_SWAP * I_SWAP;
        assert!((diag.var_upper - expected_var).abs() < 1e-12);
        assert!(
            (diag.necessary_rhs - (diag.e_psi_r_upper + (4.0 * diag.var_upper).sqrt())).abs()
                < 1e-12
        );

        assert!(matches!(
            psi_diagnostics(&params, &tilt, 0.0),
            Err(Error::NonpositiveMis(_))
        ));
        // An asymmetric pair breaks the balance identity (any p~ == q~
        // satisfies it trivially, so the bad pair must differ).
        let bad_tilt = TiltedPair {
            p_tilt: params.within().clone(),
            q_tilt: tilt.q_tilt.clone(),
        };
        assert!(matches!(
            psi_diagnostics(&params, &bad_tilt, 1.0),
            Err(Error::InvalidTilt(_))
        ));
    }

    #[test]
    fn psi_diagnostics_degenerate_zero() {
        let params = make_bernoulli_sbm(0.4, 0.4, 20).unwrap();
        let tilt = geometric_tilt(params.within(), params.across()).unwrap();
        let diag = psi_diagnostics(&params, &tilt, 1.0).unwrap();
        assert_eq!(diag.e_psi_r_lower, 0.0);
        assert_eq!(diag.e_psi_r_upper, 0.0);
        assert_eq!(diag.var_upper, 0.0);
        assert_eq!(diag.necessary_rhs, 0.0);
    }

    #[test]
    fn eq51_ratio_is_one_under_geometric_tilt() {
        let params = make_bernoulli_sbm(0.8, 0.2, 20).unwrap();
        let tilt = geometric_tilt(params.within(), params.across()).unwrap();
        let kl_sum = kl(&tilt.p_tilt, params.within()).unwrap()
            + kl(&tilt.q_tilt, params.across()).unwrap();
        let ratio = kl_sum / renyi_half(params.within(), params.across()).unwrap();
        assert!((ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lemma2_lhs_degenerate_r() {
        // With p == q the degenerate tilt equals both distributions and
        // R is identically zero.
        let params = make_bernoulli_sbm(0.5, 0.5, 10).unwrap();
        let tilt = TiltedPair {
            p_tilt: params.within().clone(),
            q_tilt: params.across().clone(),
        };
        let seed = SeedSpec::new(77, 0);
        assert_eq!(estimate_lemma2_lhs(&params, &tilt, -1.0, 200, seed).unwrap(), 0.0);
        assert_eq!(estimate_lemma2_lhs(&params, &tilt, 1.0, 200, seed).unwrap(), 1.0);
        assert!(matches!(
            estimate_lemma2_lhs(&params, &tilt, 0.0, 0, seed),
            Err(Error::BadTrials)
        ));
    }

    #[test]
    fn lemma2_lhs_certain_event() {
        let params = make_bernoulli_sbm(0.8, 0.2, 20).unwrap();
        let tilt = geometric_tilt(params.within(), params.across()).unwrap();
        let seed = SeedSpec::new(78, 0);
        let estimate = estimate_lemma2_lhs(&params, &tilt, 1e6, 500, seed).unwrap();
        assert_eq!(estimate, 1.0);
    }
}
