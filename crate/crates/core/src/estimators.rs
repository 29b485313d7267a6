//! Likelihood machinery and community estimators: the pairwise
//! log-likelihood-ratio matrix, the balanced-partition score it induces,
//! exact maximum likelihood by revolving-door enumeration, a spectral +
//! local-search heuristic, and misclassification metrics.
//!
//! Minimizing the negative log-likelihood over balanced labelings is
//! equivalent to maximizing the same-side LLR sum: the all-pairs term
//! is labeling-independent, so `score` is the only quantity estimators
//! need.

use crate::error::{Error, Result};
use crate::model::MvsbmParams;
use crate::sampler::{pair_rank, AdjacencyTensor, Labeling};

/// Clamp for log-likelihood ratios when one-sided zero masses make the
/// ratio infinite; stays below the overflow threshold of `exp`.
pub const LLR_CLAMP: f64 = 700.0;

/// Score gap under which two labelings count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Upper-triangular matrix of pairwise log-likelihood ratios
/// `w_ij = ln(p(A_ij) / q(A_ij))`, clamped to `[-700, 700]`.
#[derive(Debug, Clone)]
pub struct LlrMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl LlrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the unordered pair `(i, j)`, any order.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.weights[pair_rank(self.n, i, j)]
    }

    /// Dense symmetric form with zero diagonal, row-major `n x n`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[pair_rank(n, i, j)];
                dense[i * n + j] = w;
                dense[j * n + i] = w;
            }
        }
        dense
    }
}

/// Builds the LLR matrix for a tensor under the given parameters.
///
/// A mask carrying zero mass under both distributions signals corrupted
/// input (it cannot occur under the declared model) and is an error;
/// one-sided zeros clamp to the edge of the finite range.
pub fn llr_matrix(params: &MvsbmParams, tensor: &AdjacencyTensor) -> Result<LlrMatrix> {
    if tensor.n() != params.n() || tensor.num_views() != params.num_views() {
        return Err(Error::DimensionMismatch(tensor.num_views(), params.num_views()));
    }
    let num_masks = params.within().num_masks();
    let table: Vec<f64> = (0..num_masks)
        .map(|mask| {
            let p = params.within().prob(mask as u16);
            let q = params.across().prob(mask as u16);
            if p == 0.0 && q == 0.0 {
                f64::NAN
            } else if p == 0.0 {
                -LLR_CLAMP
            } else if q == 0.0 {
                LLR_CLAMP
            } else {
                (p.ln() - q.ln()).clamp(-LLR_CLAMP, LLR_CLAMP)
            }
        })
        .collect();
    let mut weights = Vec::with_capacity(tensor.pair_masks().len());
    for &mask in tensor.pair_masks() {
        let w = table[mask as usize];
        if w.is_nan() {
            return Err(Error::ZeroZeroMass { mask });
        }
        weights.push(w);
    }
    Ok(LlrMatrix { n: params.n(), weights })
}

/// Same-side LLR sum of a balanced labeling; the maximization target of
/// the ML estimator. Invariant under the global sign flip.
pub fn score(labeling: &Labeling, llr: &LlrMatrix) -> Result<f64> {
    if labeling.len() != llr.n {
        return Err(Error::LengthMismatch(labeling.len(), llr.n));
    }
    let total: i64 = labeling.signs().iter().map(|&s| s as i64).sum();
    if total != 0 {
        return Err(Error::Unbalanced(total));
    }
    let n = llr.n;
    let mut sum = 0.0;
    let mut rank = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if labeling.sign(i) == labeling.sign(j) {
                sum += llr.weights[rank];
            }
            rank += 1;
        }
    }
    Ok(sum)
}

/// Output of an estimator run.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    /// Estimated labeling, canonicalized so node 0 carries `+1`.
    pub labeling: Labeling,
    /// Exact same-side LLR sum of the returned labeling, in nats.
    pub score: f64,
    /// Number of candidate labelings examined.
    pub num_candidates_scanned: u64,
    /// Whether at least two candidates attained the maximum within
    /// [`TIE_TOL`]; the lexicographically smallest sign sequence is
    /// returned in that case.
    pub tie: bool,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Emits the swap sequence of the revolving-door (constant-weight Gray
/// code) order over k-subsets of `{1..m}`: each call to `visit(a, b)`
/// moves one element `a` out and one element `b` in, and consecutive
/// subsets differ by exactly that exchange. Starting subset is
/// `{1..k}`.
fn revolving_door_forward(m: usize, k: usize, visit: &mut impl FnMut(usize, usize)) {
    if k == 0 || k == m {
        return;
    }
    revolving_door_forward(m - 1, k, visit);
    if k == 1 {
        visit(m - 1, m);
    } else {
        visit(k - 1, m);
    }
    revolving_door_backward(m - 1, k - 1, visit);
}

fn revolving_door_backward(m: usize, k: usize, visit: &mut impl FnMut(usize, usize)) {
    if k == 0 || k == m {
        return;
    }
    revolving_door_forward(m - 1, k - 1, visit);
    if k == 1 {
        visit(m, m - 1);
    } else {
        visit(m, k - 1);
    }
    revolving_door_backward(m - 1, k, visit);
}

/// Incremental state for balanced-partition enumeration: membership
/// plus per-node same-side / other-side weight sums, giving O(n) work
/// per visited candidate.
struct SwapWalker<'a> {
    n: usize,
    dense: &'a [f64],
    in_positive: Vec<bool>,
    /// Sum of weights from each node to the positive side (excluding
    /// itself).
    to_positive: Vec<f64>,
    /// Sum of weights from each node to the negative side.
    to_negative: Vec<f64>,
    score: f64,
}

impl<'a> SwapWalker<'a> {
    /// Starts from the split `{0..=half-1} | {half..n}`.
    fn new(llr: &'a LlrMatrix, dense: &'a [f64]) -> Self {
        let half = llr.n / 2;
        Self::with_membership(llr, dense, (0..llr.n).map(|v| v < half).collect())
    }

    fn with_membership(llr: &'a LlrMatrix, dense: &'a [f64], in_positive: Vec<bool>) -> Self {
        let n = llr.n;
        let mut to_positive = vec![0.0; n];
        let mut to_negative = vec![0.0; n];
        let mut score = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = dense[i * n + j];
                if in_positive[j] {
                    to_positive[i] += w;
                } else {
                    to_negative[i] += w;
                }
            }
            if in_positive[i] {
                score += to_positive[i];
            } else {
                score += to_negative[i];
            }
        }
        // Every same-side pair was counted from both endpoints.
        score *= 0.5;
        Self { n, dense, in_positive, to_positive, to_negative, score }
    }

    fn w(&self, a: usize, b: usize) -> f64 {
        self.dense[a * self.n + b]
    }

    /// Moves `a` from the positive side to the negative and `b` the
    /// other way, updating the score in O(n).
    fn swap(&mut self, a: usize, b: usize) {
        debug_assert!(self.in_positive[a] && !self.in_positive[b]);
        let w_ab = self.w(a, b);
        self.score += self.to_positive[b] - self.to_positive[a] + self.to_negative[a]
            - self.to_negative[b]
            - 2.0 * w_ab;
        for v in 0..self.n {
            if v == a || v == b {
                continue;
            }
            let shift = self.w(v, b) - self.w(v, a);
            self.to_positive[v] += shift;
            self.to_negative[v] -= shift;
        }
        self.to_positive[a] += w_ab;
        self.to_negative[a] -= w_ab;
        self.to_positive[b] -= w_ab;
        self.to_negative[b] += w_ab;
        self.in_positive[a] = false;
        self.in_positive[b] = true;
    }

    fn signs(&self) -> Vec<i8> {
        self.in_positive.iter().map(|&p| if p { 1 } else { -1 }).collect()
    }

    /// Best strictly-improving balanced 2-swap, if any.
    fn best_swap(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..self.n {
            if !self.in_positive[a] {
                continue;
            }
            for b in 0..self.n {
                if self.in_positive[b] {
                    continue;
                }
                let delta = self.to_positive[b] - self.to_positive[a] + self.to_negative[a]
                    - self.to_negative[b]
                    - 2.0 * self.w(a, b);
                if delta > 0.0 && best.is_none_or(|(_, _, d)| delta > d) {
                    best = Some((a, b, delta));
                }
            }
        }
        best
    }
}

/// Exact maximum-likelihood estimation by enumerating all
/// `C(n-1, n/2-1)` balanced labelings with node 0 fixed positive
/// (quotienting the global sign flip), walking a revolving-door order
/// with incremental score updates.
///
/// Ties within [`TIE_TOL`] of the maximum are resolved to the
/// lexicographically smallest sign sequence and flagged.
pub fn ml_exact(params: &MvsbmParams, tensor: &AdjacencyTensor) -> Result<EstimateResult> {
    let n = params.n();
    if n > 32 {
        return Err(Error::TooLargeForExact(n));
    }
    let llr = llr_matrix(params, tensor)?;
    ml_exact_from_llr(&llr)
}

pub(crate) fn ml_exact_from_llr(llr: &LlrMatrix) -> Result<EstimateResult> {
    let n = llr.n;
    if n > 32 {
        return Err(Error::TooLargeForExact(n));
    }
    let dense = llr.to_dense();
    let m = n - 1;
    let k = n / 2 - 1;

    // Pass 1: maximum incremental score over the enumeration.
    let mut walker = SwapWalker::new(llr, &dense);
    let mut best = walker.score;
    revolving_door_forward(m, k, &mut |a, b| {
        walker.swap(a, b);
        if walker.score > best {
            best = walker.score;
        }
    });

    // Pass 2: identical walk; collect ties and the lexicographic
    // minimum among candidates within tolerance of the maximum.
    let mut walker = SwapWalker::new(llr, &dense);
    let mut ties = 0u64;
    let mut winner: Option<Vec<i8>> = None;
    let mut consider = |w: &SwapWalker| {
        if best - w.score <= TIE_TOL {
            let signs = w.signs();
            match &winner {
                Some(current) if *current <= signs => {}
                _ => winner = Some(signs),
            }
            ties += 1;
        }
    };
    consider(&walker);
    revolving_door_forward(m, k, &mut |a, b| {
        walker.swap(a, b);
        consider(&walker);
    });

    let labeling = Labeling::new(winner.expect("enumeration visits at least one candidate"))?;
    let exact_score = score(&labeling, llr)?;
    Ok(EstimateResult {
        labeling,
        score: exact_score,
        num_candidates_scanned: binomial(m as u64, k as u64),
        tie: ties >= 2,
    })
}

/// Scalable surrogate for the exact estimator: spectral initialization
/// (power iteration on the zero-diagonal LLR matrix), median split, and
/// greedy best-improvement balanced 2-swaps, taking the best result
/// over seeded restarts. The recovery guarantees evaluated by the
/// bounds module apply to the exact estimator only; this is a speed
/// path for n beyond enumeration reach.
pub fn ml_heuristic(
    params: &MvsbmParams,
    tensor: &AdjacencyTensor,
    restarts: usize,
) -> Result<EstimateResult> {
    if restarts == 0 {
        return Err(Error::BadRestarts);
    }
    let llr = llr_matrix(params, tensor)?;
    let dense = llr.to_dense();

    let mut best: Option<(f64, Labeling, bool)> = None;
    let mut scanned = 0u64;
    for restart in 0..restarts {
        let labeling = heuristic_single(&llr, &dense, restart as u64, &mut scanned);
        let value = score(&labeling, &llr)?;
        match &mut best {
            None => best = Some((value, labeling, false)),
            Some((best_value, best_labeling, tie)) => {
                if value > *best_value + TIE_TOL {
                    *best_value = value;
                    *best_labeling = labeling;
                    *tie = false;
                } else if (value - *best_value).abs() <= TIE_TOL && labeling != *best_labeling {
                    *tie = true;
                    if labeling.signs() < best_labeling.signs() {
                        *best_labeling = labeling;
                        *best_value = value;
                    }
                }
            }
        }
    }
    let (value, labeling, tie) = best.expect("restarts >= 1");
    Ok(EstimateResult {
        labeling,
        score: value,
        num_candidates_scanned: scanned,
        tie,
    })
}

const POWER_ITERATIONS: usize = 200;
const POWER_TOL: f64 = 1e-10;

fn heuristic_single(
    llr: &LlrMatrix,
    dense: &[f64],
    restart: u64,
    scanned: &mut u64,
) -> Labeling {
    let n = llr.n;

    // Deterministic perturbed start: restart 0 is the flat vector,
    // later restarts add fixed-key noise.
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            if restart == 0 {
                1.0
            } else {
                let r = crate::sampler::SeedSpec::new(0x6D76_7362_6D68_6575, restart)
                    .raw(2, i as u64);
                1.0 + ((r >> 11) as f64 * (1.0 / (1u64 << 53) as f64) - 0.5)
            }
        })
        .collect();
    normalize(&mut v);

    let mut next = vec![0.0; n];
    for _ in 0..POWER_ITERATIONS {
        matvec(dense, &v, &mut next, n);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            break;
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let diff_plus: f64 =
            v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let diff_minus: f64 =
            v.iter().zip(&next).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if diff_plus.min(diff_minus) <= POWER_TOL {
            break;
        }
    }

    // Median split: top half by eigenvector value goes positive, index
    // order breaking ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));
    let mut signs = vec![-1i8; n];
    for &node in order.iter().take(n / 2) {
        signs[node] = 1;
    }
    *scanned += 1;

    // Greedy best-improvement 2-swaps from the spectral split.
    let membership = signs.iter().map(|&s| s == 1).collect();
    let mut walker = SwapWalker::with_membership(llr, dense, membership);
    while let Some((a, b, _)) = walker.best_swap() {
        walker.swap(a, b);
        *scanned += 1;
    }
    let mut signs = walker.signs();
    if signs[0] == -1 {
        signs.iter_mut().for_each(|s| *s = -*s);
    }
    Labeling::new(signs).expect("swaps preserve balance")
}

fn matvec(dense: &[f64], v: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        out[i] = dense[i * n..(i + 1) * n]
            .iter()
            .zip(v)
            .map(|(w, x)| w * x)
            .sum();
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Misclassification metrics between an estimate and the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryMetrics {
    /// Hamming distance minimized over the global sign flip; at most
    /// n/2 for balanced labelings.
    pub mis_count: usize,
    /// Whether the partition was recovered exactly.
    pub exact: bool,
}

pub fn recovery_metrics(estimate: &Labeling, truth: &Labeling) -> Result<RecoveryMetrics> {
    if estimate.len() != truth.len() {
        return Err(Error::LengthMismatch(estimate.len(), truth.len()));
    }
    for labeling in [estimate, truth] {
        let total: i64 = labeling.signs().iter().map(|&s| s as i64).sum();
        if total != 0 {
            return Err(Error::Unbalanced(total));
        }
    }
    let direct = estimate.hamming(truth)?;
    let mis_count = direct.min(estimate.len() - direct);
    Ok(RecoveryMetrics { mis_count, exact: mis_count == 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_bernoulli_sbm, DistributionOnHypercube, MvsbmParams};
    use crate::sampler::{sample_labeling, sample_tensor, AdjacencyTensor, SeedSpec};

    const LN_9: f64 = 2.1972245773362196;

    fn planted_n4() -> (MvsbmParams, AdjacencyTensor) {
        // Edges on within-pairs (0,1) and (2,3), absent elsewhere.
        let params = make_bernoulli_sbm(0.9, 0.1, 4).unwrap();
        let mut masks = vec![0u16; 6];
        masks[pair_rank(4, 0, 1)] = 1;
        masks[pair_rank(4, 2, 3)] = 1;
        let tensor = AdjacencyTensor::from_parts(4, 1, masks).unwrap();
        (params, tensor)
    }

    #[test]
    fn llr_hand_values() {
        let (params, tensor) = planted_n4();
        let llr = llr_matrix(&params, &tensor).unwrap();
        assert!((llr.weight(0, 1) - LN_9).abs() < 1e-12);
        assert!((llr.weight(0, 2) + LN_9).abs() < 1e-12);

        let flat = make_bernoulli_sbm(0.5, 0.5, 4).unwrap();
        let llr = llr_matrix(&flat, &tensor).unwrap();
        assert!(llr.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn llr_one_sided_zero_clamps() {
        // q(0) = 0 while p(0) > 0: the ratio at mask 0 clamps high.
        let within = DistributionOnHypercube::validate(vec![0.5, 0.5], 1).unwrap();
        let across = DistributionOnHypercube::validate(vec![0.0, 1.0], 1).unwrap();
        let params = MvsbmParams::new(4, within, across).unwrap();
        let tensor = AdjacencyTensor::from_parts(4, 1, vec![0, 1, 1, 1, 1, 0]).unwrap();
        let llr = llr_matrix(&params, &tensor).unwrap();
        assert_eq!(llr.weight(0, 1), LLR_CLAMP);
        assert!((llr.weight(0, 2) - 0.5f64.ln()).abs() < 1e-15);

        // p(0) = 0 while q(0) > 0: clamps low.
        let within = DistributionOnHypercube::validate(vec![0.0, 1.0], 1).unwrap();
        let across = DistributionOnHypercube::validate(vec![0.5, 0.5], 1).unwrap();
        let params = MvsbmParams::new(4, within, across).unwrap();
        let tensor = AdjacencyTensor::from_parts(4, 1, vec![0, 1, 1, 1, 1, 0]).unwrap();
        let llr = llr_matrix(&params, &tensor).unwrap();
        assert_eq!(llr.weight(0, 1), -LLR_CLAMP);
    }

    #[test]
    fn llr_zero_zero_mass_rejected() {
        let within = DistributionOnHypercube::validate(vec![1.0, 0.0], 1).unwrap();
        let across = DistributionOnHypercube::validate(vec![1.0, 0.0], 1).unwrap();
        let params = MvsbmParams::new(4, within, across).unwrap();
        let tensor = AdjacencyTensor::from_parts(4, 1, vec![0, 1, 0, 0, 0, 0]).unwrap();
        assert!(matches!(
            llr_matrix(&params, &tensor),
            Err(Error::ZeroZeroMass { mask: 1 })
        ));
    }

    #[test]
    fn score_brute_values_n4() {
        let (params, tensor) = planted_n4();
        let llr = llr_matrix(&params, &tensor).unwrap();
        let planted = Labeling::new(vec![1, 1, -1, -1]).unwrap();
        assert!((score(&planted, &llr).unwrap() - 2.0 * LN_9).abs() < 1e-12);
        for signs in [vec![1, -1, 1, -1], vec![1, -1, -1, 1]] {
            let lab = Labeling::new(signs).unwrap();
            assert!((score(&lab, &llr).unwrap() + 2.0 * LN_9).abs() < 1e-12);
        }
        // Flip invariance.
        assert_eq!(
            score(&planted, &llr).unwrap(),
            score(&planted.flipped(), &llr).unwrap()
        );
        let unbalanced = Labeling::new(vec![1, 1, -1, -1]).unwrap();
        let short = LlrMatrix { n: 6, weights: vec![0.0; 15] };
        assert!(matches!(
            score(&unbalanced, &short),
            Err(Error::LengthMismatch(4, 6))
        ));
    }

    #[test]
    fn ml_exact_recovers_planted_n4() {
        let (params, tensor) = planted_n4();
        let result = ml_exact(&params, &tensor).unwrap();
        assert_eq!(result.labeling.signs(), &[1, 1, -1, -1]);
        assert!((result.score - 2.0 * LN_9).abs() < 1e-12);
        assert!(!result.tie);
        assert_eq!(result.num_candidates_scanned, 3);
    }

    #[test]
    fn ml_exact_degenerate_all_ties() {
        let params = make_bernoulli_sbm(0.5, 0.5, 8).unwrap();
        let truth = Labeling::first_half_positive(8).unwrap();
        let tensor = sample_tensor(&params, &truth, SeedSpec::new(2, 0)).unwrap();
        let result = ml_exact(&params, &tensor).unwrap();
        assert!(result.tie);
        assert_eq!(result.score, 0.0);
        // Lexicographic minimum with node 0 positive: the remaining
        // negatives pack into the earliest positions.
        assert_eq!(result.labeling.signs(), &[1, -1, -1, -1, -1, 1, 1, 1]);
        assert_eq!(result.num_candidates_scanned, 35);
    }

    #[test]
    fn ml_exact_guard() {
        let params = make_bernoulli_sbm(0.9, 0.1, 34).unwrap();
        let truth = Labeling::first_half_positive(34).unwrap();
        let tensor = sample_tensor(&params, &truth, SeedSpec::new(3, 0)).unwrap();
        assert!(matches!(ml_exact(&params, &tensor), Err(Error::TooLargeForExact(34))));
    }

    /// Independent oracle: enumerate canonical balanced labelings by
    /// plain combinations and score each from scratch.
    fn brute_force_argmax(llr: &LlrMatrix) -> (f64, Vec<Vec<i8>>) {
        let n = llr.n;
        let mut best = f64::NEG_INFINITY;
        let mut winners: Vec<Vec<i8>> = Vec::new();
        let k = n / 2 - 1;
        let mut chosen: Vec<usize> = (0..k).collect();
        loop {
            let mut signs = vec![-1i8; n];
            signs[0] = 1;
            for &c in &chosen {
                signs[c + 1] = 1;
            }
            let lab = Labeling::new(signs.clone()).unwrap();
            let value = score(&lab, llr).unwrap();
            if value > best + TIE_TOL {
                best = value;
                winners = vec![signs];
            } else if (value - best).abs() <= TIE_TOL {
                winners.push(signs);
            }
            // next combination of k elements from {0..n-2}
            let mut idx = k;
            loop {
                if idx == 0 {
                    return (best, winners);
                }
                idx -= 1;
                if chosen[idx] != idx + (n - 1) - k {
                    chosen[idx] += 1;
                    for later in idx + 1..k {
                        chosen[later] = chosen[later - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn ml_exact_matches_brute_force_oracle() {
        for (trial, n) in [(0u64, 6usize), (1, 8), (2, 10), (3, 12), (4, 12)] {
            let params = make_bernoulli_sbm(0.85, 0.15, n).unwrap();
            let truth = sample_labeling(n, SeedSpec::new(100 + trial, 0)).unwrap();
            let tensor = sample_tensor(&params, &truth, SeedSpec::new(200 + trial, 0)).unwrap();
            let llr = llr_matrix(&params, &tensor).unwrap();
            let (oracle_best, oracle_winners) = brute_force_argmax(&llr);
            let result = ml_exact(&params, &tensor).unwrap();
            assert!((result.score - oracle_best).abs() <= TIE_TOL);
            assert!(
                oracle_winners.iter().any(|w| w.as_slice() == result.labeling.signs()),
                "winner not in oracle argmax set"
            );
            if !result.tie {
                assert_eq!(oracle_winners.len(), 1);
            }
        }
    }

    #[test]
    fn ml_exact_permutation_invariant() {
        let n = 8usize;
        let params = make_bernoulli_sbm(0.85, 0.15, n).unwrap();
        let truth = sample_labeling(n, SeedSpec::new(7, 0)).unwrap();
        let tensor = sample_tensor(&params, &truth, SeedSpec::new(8, 0)).unwrap();
        let perm = [3usize, 1, 4, 0, 7, 2, 6, 5];
        let mut masks = vec![0u16; n * (n - 1) / 2];
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                masks[pair_rank(n, a, b)] = tensor.mask(i, j);
            }
        }
        let permuted_tensor = AdjacencyTensor::from_parts(n, 1, masks).unwrap();
        let base = ml_exact(&params, &tensor).unwrap();
        let permuted = ml_exact(&params, &permuted_tensor).unwrap();
        let expected: Vec<i8> = {
            let mut signs = vec![0i8; n];
            for v in 0..n {
                signs[perm[v]] = base.labeling.sign(v);
            }
            signs
        };
        let expected = Labeling::new(expected).unwrap().canonical();
        assert_eq!(permuted.labeling.signs(), expected.signs());
        assert!((permuted.score - base.score).abs() < 1e-9);
    }

    #[test]
    fn objective_equivalence_negative_log_likelihood() {
        // L(A|x) + score(x) is labeling-independent when all masses are
        // positive; checked over the full balanced enumeration.
        for (n, master) in [(8usize, 9u64), (10, 11)] {
            let params = make_bernoulli_sbm(0.7, 0.25, n).unwrap();
            let truth = sample_labeling(n, SeedSpec::new(master, 0)).unwrap();
            let tensor = sample_tensor(&params, &truth, SeedSpec::new(master + 1, 0)).unwrap();
            let llr = llr_matrix(&params, &tensor).unwrap();

            let neg_log_likelihood = |lab: &Labeling| -> f64 {
                let mut total = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        let mass = if lab.sign(i) == lab.sign(j) {
                            params.within().prob(tensor.mask(i, j))
                        } else {
                            params.across().prob(tensor.mask(i, j))
                        };
                        total -= mass.ln();
                    }
                }
                total
            };

            let mut reference = None;
            // Every subset of size n/2 containing node 0, plus the flip,
            // covers all balanced labelings.
            for bits in 0u32..1 << (n - 1) {
                if bits.count_ones() as usize != n / 2 - 1 {
                    continue;
                }
                let mut signs = vec![-1i8; n];
                signs[0] = 1;
                for (v, sign) in signs.iter_mut().enumerate().skip(1) {
                    if bits >> (v - 1) & 1 == 1 {
                        *sign = 1;
                    }
                }
                let lab = Labeling::new(signs).unwrap();
                let value = neg_log_likelihood(&lab) + score(&lab, &llr).unwrap();
                match reference {
                    None => reference = Some(value),
                    Some(r) => assert!((value - r).abs() < 1e-9, "n={n}"),
                }
                let flipped = lab.flipped();
                let value = neg_log_likelihood(&flipped) + score(&flipped, &llr).unwrap();
                assert!((value - reference.unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn heuristic_zero_matrix_returns_initialization() {
        let params = make_bernoulli_sbm(0.5, 0.5, 8).unwrap();
        let truth = Labeling::first_half_positive(8).unwrap();
        let tensor = sample_tensor(&params, &truth, SeedSpec::new(1, 0)).unwrap();
        let result = ml_heuristic(&params, &tensor, 1).unwrap();
        assert_eq!(result.score, 0.0);
        assert_eq!(result.num_candidates_scanned, 1);
    }

    #[test]
    fn heuristic_recovers_planted_n4() {
        let (params, tensor) = planted_n4();
        let result = ml_heuristic(&params, &tensor, 3).unwrap();
        assert_eq!(result.labeling.signs(), &[1, 1, -1, -1]);
    }

    #[test]
    fn heuristic_tracks_exact_on_strong_signal() {
        let n = 16;
        let params = make_bernoulli_sbm(0.9, 0.1, n).unwrap();
        let mut agree = 0usize;
        let trials = 200u64;
        for t in 0..trials {
            let truth = sample_labeling(n, SeedSpec::new(300, t)).unwrap();
            let tensor = sample_tensor(&params, &truth, SeedSpec::new(301, t)).unwrap();
            let exact = ml_exact(&params, &tensor).unwrap();
            let heur = ml_heuristic(&params, &tensor, 4).unwrap();
            assert!(
                heur.score <= exact.score + TIE_TOL,
                "heuristic exceeded the exact maximum"
            );
            if heur.labeling.signs() == exact.labeling.signs() {
                agree += 1;
            }
        }
        assert!(agree as f64 >= 0.95 * trials as f64, "agreement {agree}/{trials}");
    }

    #[test]
    fn recovery_metric_cases() {
        let truth = Labeling::first_half_positive(8).unwrap();
        assert_eq!(
            recovery_metrics(&truth, &truth).unwrap(),
            RecoveryMetrics { mis_count: 0, exact: true }
        );
        assert_eq!(
            recovery_metrics(&truth.flipped(), &truth).unwrap(),
            RecoveryMetrics { mis_count: 0, exact: true }
        );
        // Differs at positions 0 and 4 (one per side): distance 2 to
        // truth, 6 to its flip.
        let shifted = Labeling::new(vec![-1, 1, 1, 1, 1, -1, -1, -1]).unwrap();
        let metrics = recovery_metrics(&shifted, &truth).unwrap();
        assert_eq!(metrics.mis_count, 2);
        assert!(!metrics.exact);
    }

    #[test]
    fn revolving_door_visits_every_subset_once() {
        for (m, k) in [(5usize, 2usize), (6, 3), (7, 3), (9, 4)] {
            let mut in_set = vec![false; m + 1];
            in_set[1..=k].fill(true);
            let mut seen = std::collections::HashSet::new();
            let encode = |s: &[bool]| -> u32 {
                s.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i))
            };
            seen.insert(encode(&in_set));
            let mut steps = 0usize;
            revolving_door_forward(m, k, &mut |a, b| {
                assert!(in_set[a] && !in_set[b], "invalid swap {a} -> {b}");
                in_set[a] = false;
                in_set[b] = true;
                assert!(seen.insert(encode(&in_set)), "subset revisited");
                steps += 1;
            });
            assert_eq!(steps as u64 + 1, binomial(m as u64, k as u64));
        }
    }
}
