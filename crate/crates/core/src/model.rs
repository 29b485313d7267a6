//! Model parameters for the multi-view stochastic block model.
//!
//! A model instance is a node count `n` plus two distributions over
//! `{0,1}^D` connection vectors: `within` governs node pairs in the same
//! community, `across` governs pairs in different communities. Bitmask
//! index convention (normative for every interface of this crate): bit
//! `i` of a mask is the edge indicator in view `i`, with view 0 in the
//! least significant bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of views above which mass arrays stop being cheap; masks must
/// fit in a `u16`.
pub const MAX_VIEWS: usize = 16;

/// Absolute tolerance on `sum(mass) == 1`. Constructors produce exactly
/// normalized masses in double precision; looser input is a user error.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability mass function over `{0,1}^D` connection vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionOnHypercube {
    num_views: usize,
    mass: Vec<f64>,
}

impl DistributionOnHypercube {
    /// Validates a mass array as a distribution over `{0,1}^num_views`.
    ///
    /// Normalization is never performed silently: out-of-tolerance input
    /// is rejected rather than rescaled.
    pub fn validate(mass: Vec<f64>, num_views: usize) -> Result<Self> {
        if !(1..=MAX_VIEWS).contains(&num_views) {
            return Err(Error::ViewsOutOfRange(num_views));
        }
        let expected = 1usize << num_views;
        if mass.len() != expected {
            return Err(Error::BadLength { got: mass.len(), expected });
        }
        for (index, &value) in mass.iter().enumerate() {
            if value < 0.0 || value.is_nan() {
                return Err(Error::NegativeMass { index, value });
            }
        }
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { num_views, mass })
    }

    pub fn num_views(&self) -> usize {
        self.num_views
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass of one connection vector, indexed by bitmask.
    pub fn prob(&self, mask: u16) -> f64 {
        self.mass[mask as usize]
    }

    pub fn num_masks(&self) -> usize {
        self.mass.len()
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.num_views == other.num_views
            && self
                .mass
                .iter()
                .zip(&other.mass)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Cumulative mass table for inverse-CDF sampling: `cdf[m]` is the
    /// total mass of masks `0..=m`.
    pub(crate) fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.mass
            .iter()
            .map(|&m| {
                acc += m;
                acc
            })
            .collect()
    }
}

/// Validated parameters of an MVSBM instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MvsbmParams {
    n: usize,
    within: DistributionOnHypercube,
    across: DistributionOnHypercube,
}

impl MvsbmParams {
    /// Builds a parameter set from a node count and the two connection
    /// distributions.
    ///
    /// One-sided zero entries (`p(d) = 0 != q(d)`) are permitted here:
    /// they violate assumption A1, which [`check_assumptions`] reports
    /// (`rho` infinite) instead of this constructor rejecting.
    pub fn new(
        n: usize,
        within: DistributionOnHypercube,
        across: DistributionOnHypercube,
    ) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::BadNodeCount(n));
        }
        if within.num_views() != across.num_views() {
            return Err(Error::DimensionMismatch(
                within.num_views(),
                across.num_views(),
            ));
        }
        Ok(Self { n, within, across })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_views(&self) -> usize {
        self.within.num_views()
    }

    /// Distribution of connection vectors for same-community pairs (p).
    pub fn within(&self) -> &DistributionOnHypercube {
        &self.within
    }

    /// Distribution of connection vectors for cross-community pairs (q).
    pub fn across(&self) -> &DistributionOnHypercube {
        &self.across
    }

    /// Number of unordered node pairs, n(n-1)/2.
    pub fn num_pairs(&self) -> usize {
        self.n * (self.n - 1) / 2
    }
}

/// Instance-level diagnostics for the paper's assumptions A1 and A2.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// Tightest constant bounding both likelihood ratios, `+inf` when a
    /// one-sided zero makes A1 unsatisfiable.
    pub rho: f64,
    /// Maximum probability of observing at least one edge: the largest
    /// mass either distribution puts on a nonzero connection vector.
    pub p_bar: f64,
    /// The A2 ratio `sum_{d != 0} (p(d) - q(d))^2 / p_bar^2`; 0 when
    /// `p_bar == 0`.
    pub separation: f64,
    pub a1_holds: bool,
    pub a2_value_positive: bool,
}

/// Reports the tightest A1 constant, the maximum edge mass, and the A2
/// separation ratio. Never rejects: degenerate inputs yield sentinel
/// values (`rho = +inf`, `separation = 0`).
pub fn check_assumptions(params: &MvsbmParams) -> AssumptionReport {
    let p = params.within().mass();
    let q = params.across().mass();

    let mut rho = 1.0f64;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a == 0.0 || b == 0.0 {
            rho = f64::INFINITY;
            break;
        }
        rho = rho.max(a / b).max(b / a);
    }

    let mut p_bar = 0.0f64;
    let mut diff_sq = 0.0f64;
    for mask in 1..p.len() {
        p_bar = p_bar.max(p[mask]).max(q[mask]);
        diff_sq += (p[mask] - q[mask]) * (p[mask] - q[mask]);
    }
    let separation = if p_bar > 0.0 { diff_sq / (p_bar * p_bar) } else { 0.0 };

    AssumptionReport {
        rho,
        p_bar,
        separation,
        a1_holds: rho.is_finite(),
        a2_value_positive: separation > 0.0,
    }
}

fn bernoulli_mass(edge_prob: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&edge_prob) || !edge_prob.is_finite() {
        return Err(Error::ProbabilityOutOfRange(edge_prob));
    }
    Ok(vec![1.0 - edge_prob, edge_prob])
}

/// The standard two-community SBM: one view, edge probabilities `p1`
/// within and `q1` across.
pub fn make_bernoulli_sbm(p1: f64, q1: f64, n: usize) -> Result<MvsbmParams> {
    let within = DistributionOnHypercube::validate(bernoulli_mass(p1)?, 1)?;
    let across = DistributionOnHypercube::validate(bernoulli_mass(q1)?, 1)?;
    MvsbmParams::new(n, within, across)
}

/// All `num_views` graphs identical: every connection vector is either
/// all-ones (probability `alpha` within / `beta` across) or all-zeros.
pub fn make_identical_views(
    alpha: f64,
    beta: f64,
    num_views: usize,
    n: usize,
) -> Result<MvsbmParams> {
    if !(1..=MAX_VIEWS).contains(&num_views) {
        return Err(Error::ViewsOutOfRange(num_views));
    }
    let point_mass = |edge_prob: f64| -> Result<DistributionOnHypercube> {
        if !(0.0..=1.0).contains(&edge_prob) || !edge_prob.is_finite() {
            return Err(Error::ProbabilityOutOfRange(edge_prob));
        }
        let len = 1usize << num_views;
        let mut mass = vec![0.0; len];
        mass[0] = 1.0 - edge_prob;
        mass[len - 1] += edge_prob;
        DistributionOnHypercube::validate(mass, num_views)
    };
    MvsbmParams::new(n, point_mass(alpha)?, point_mass(beta)?)
}

/// Independent views: the joint mass is the product of per-view
/// Bernoulli marginals.
pub fn make_independent_views(p_list: &[f64], q_list: &[f64], n: usize) -> Result<MvsbmParams> {
    if p_list.len() != q_list.len() {
        return Err(Error::LengthMismatch(p_list.len(), q_list.len()));
    }
    let num_views = p_list.len();
    if !(1..=MAX_VIEWS).contains(&num_views) {
        return Err(Error::ViewsOutOfRange(num_views));
    }
    let product_mass = |edge_probs: &[f64]| -> Result<DistributionOnHypercube> {
        for &prob in edge_probs {
            if !(0.0..=1.0).contains(&prob) || !prob.is_finite() {
                return Err(Error::ProbabilityOutOfRange(prob));
            }
        }
        let mass = (0..1usize << num_views)
            .map(|mask| {
                edge_probs
                    .iter()
                    .enumerate()
                    .map(|(view, &prob)| if mask >> view & 1 == 1 { prob } else { 1.0 - prob })
                    .product()
            })
            .collect();
        DistributionOnHypercube::validate(mass, num_views)
    };
    MvsbmParams::new(n, product_mass(p_list)?, product_mass(q_list)?)
}

/// JSON model specification accepted by every CLI subcommand.
///
/// `{"n": ..., "D": ..., "kind": "explicit" | "bernoulli" | "identical"
/// | "independent", ...kind-specific fields}`. Bit `i` of a mass-array
/// index is the edge indicator in view `i` (view 0 = least significant
/// bit).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    #[serde(rename = "D")]
    pub num_views: usize,
    #[serde(flatten)]
    pub kind: ModelKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Explicit { p_mass: Vec<f64>, q_mass: Vec<f64> },
    Bernoulli { p1: f64, q1: f64 },
    Identical { alpha: f64, beta: f64 },
    Independent { p_list: Vec<f64>, q_list: Vec<f64> },
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidJson(e.to_string()))
    }

    /// Realizes the spec as validated parameters, checking that the
    /// declared `D` matches the kind-specific payload.
    pub fn to_params(&self) -> Result<MvsbmParams> {
        let check_views = |got: usize| -> Result<()> {
            if got != self.num_views {
                return Err(Error::BadModelSpec(format!(
                    "declared D = {} but payload implies D = {}",
                    self.num_views, got
                )));
            }
            Ok(())
        };
        match &self.kind {
            ModelKind::Explicit { p_mass, q_mass } => {
                let within =
                    DistributionOnHypercube::validate(p_mass.clone(), self.num_views)?;
                let across =
                    DistributionOnHypercube::validate(q_mass.clone(), self.num_views)?;
                MvsbmParams::new(self.n, within, across)
            }
            ModelKind::Bernoulli { p1, q1 } => {
                check_views(1)?;
                make_bernoulli_sbm(*p1, *q1, self.n)
            }
            ModelKind::Identical { alpha, beta } => {
                make_identical_views(*alpha, *beta, self.num_views, self.n)
            }
            ModelKind::Independent { p_list, q_list } => {
                check_views(p_list.len())?;
                make_independent_views(p_list, q_list, self.n)
            }
        }
    }
}
