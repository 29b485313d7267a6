//! Seeded generation of ground-truth labelings and adjacency tensors,
//! plus the auxiliary change-of-measure model in which node 1's edges
//! follow the tilted distributions.
//!
//! # Determinism contract
//!
//! Every random draw is a pure function of `(master_seed, trial_index,
//! domain, counter)` through the SplitMix64 finalizer (the keyed
//! counter-based scheme in [`SeedSpec::raw`]). Pair `(i, j)`, `i < j`,
//! consumes the single counter equal to its row-major rank; the
//! labeling shuffle consumes counters `0..n-1` in its own domain.
//! Because draws are counter-addressed rather than sequential, tensors
//! are reproducible bit for bit across platforms and may be generated
//! in parallel over pair blocks. The scheme is part of the tensor file
//! format contract.

use std::fs;
use std::path::Path;

use crate::divergence::TiltedPair;
use crate::error::{Error, Result};
use crate::model::MvsbmParams;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Vigna's constants); the sole mixing primitive
/// of the sampling contract.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream domains; fixed constants, part of the format contract.
#[derive(Debug, Clone, Copy)]
pub enum StreamDomain {
    /// Fisher-Yates shuffle that produces the ground-truth labeling.
    Labeling = 0,
    /// Per-pair connection-vector draws (shared by the true model and
    /// the auxiliary model so the two tensors are maximally coupled).
    Pairs = 1,
}

/// Identifies one trial's random stream: a master seed plus a trial
/// index. Distinct trial indices give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64) -> Self {
        Self { master_seed, trial_index }
    }

    /// The trial for global counter `offset` under the same master seed.
    pub fn for_trial(master_seed: u64, trial_index: u64) -> Self {
        Self::new(master_seed, trial_index)
    }

    /// Keyed 64-bit value for `(domain, counter)`:
    ///
    /// ```text
    /// k1 = mix64(master_seed + GOLDEN)
    /// k2 = mix64(k1 ^ (trial_index * GOLDEN + 0xD1342543DE82EF95))
    /// k3 = mix64(k2 ^ (domain      * GOLDEN + 0x8CB92BA72F3D8DD7))
    /// out = mix64(k3 ^ (counter    * GOLDEN + 0x2545F4914F6CDD1D))
    /// ```
    ///
    /// with `mix64` the SplitMix64 finalizer and all arithmetic mod 2^64.
    pub fn raw(&self, domain: u64, counter: u64) -> u64 {
        let k1 = mix64(self.master_seed.wrapping_add(GOLDEN));
        let k2 = mix64(
            k1 ^ self
                .trial_index
                .wrapping_mul(GOLDEN)
                .wrapping_add(0xD134_2543_DE82_EF95),
        );
        let k3 = mix64(
            k2 ^ domain
                .wrapping_mul(GOLDEN)
                .wrapping_add(0x8CB9_2BA7_2F3D_8DD7),
        );
        mix64(
            k3 ^ counter
                .wrapping_mul(GOLDEN)
                .wrapping_add(0x2545_F491_4F6C_DD1D),
        )
    }

    /// Uniform value in `[0, 1)` for `(domain, counter)`, using the top
    /// 53 bits of [`SeedSpec::raw`].
    pub fn uniform(&self, domain: StreamDomain, counter: u64) -> f64 {
        (self.raw(domain as u64, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// The uniform driving the connection-vector draw of the pair with
    /// the given row-major rank. Exposed because reindexing these
    /// uniforms is how node-relabeling equivariance is stated.
    pub fn pair_uniform(&self, pair_rank: u64) -> f64 {
        self.uniform(StreamDomain::Pairs, pair_rank)
    }

    /// Unbiased-to-2^-64 bounded integer in `[0, bound)` via the
    /// multiply-high reduction; `u128` arithmetic keeps it exact on
    /// every platform.
    fn bounded(&self, domain: StreamDomain, counter: u64, bound: u64) -> u64 {
        ((self.raw(domain as u64, counter) as u128 * bound as u128) >> 64) as u64
    }
}

/// A balanced assignment of `n` nodes to two communities, stored as
/// signs in `{-1, +1}` summing to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    signs: Vec<i8>,
}

impl Labeling {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if !signs.len().is_multiple_of(2) {
            return Err(Error::OddN(signs.len()));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Unbalanced(
                signs.iter().map(|&s| s as i64).sum::<i64>(),
            ));
        }
        let total: i64 = signs.iter().map(|&s| s as i64).sum();
        if total != 0 {
            return Err(Error::Unbalanced(total));
        }
        Ok(Self { signs })
    }

    /// The canonical labeling `(+1, ..., +1, -1, ..., -1)`.
    pub fn first_half_positive(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) || n == 0 {
            return Err(Error::OddN(n));
        }
        let mut signs = vec![1i8; n];
        signs[n / 2..].fill(-1);
        Self::new(signs)
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn sign(&self, node: usize) -> i8 {
        self.signs[node]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// The same partition with every sign flipped.
    pub fn flipped(&self) -> Self {
        Self { signs: self.signs.iter().map(|&s| -s).collect() }
    }

    /// Representative of the partition with node 0 positive.
    pub fn canonical(&self) -> Self {
        if self.signs[0] == 1 { self.clone() } else { self.flipped() }
    }

    /// Number of positions where the two labelings differ.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self
            .signs
            .iter()
            .zip(&other.signs)
            .filter(|(a, b)| a != b)
            .count())
    }
}

/// Per-pair connection vectors for all unordered node pairs, upper
/// triangle in row-major order. Bit `d` of a mask is the edge indicator
/// in view `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyTensor {
    n: usize,
    num_views: usize,
    pair_masks: Vec<u16>,
}

/// Row-major rank of the unordered pair `(i, j)`, `i < j`, among the
/// `n(n-1)/2` pairs.
pub fn pair_rank(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl AdjacencyTensor {
    pub fn from_parts(n: usize, num_views: usize, pair_masks: Vec<u16>) -> Result<Self> {
        if !(1..=crate::model::MAX_VIEWS).contains(&num_views) {
            return Err(Error::ViewsOutOfRange(num_views));
        }
        if pair_masks.len() != n * (n - 1) / 2 {
            return Err(Error::LengthMismatch(pair_masks.len(), n * (n - 1) / 2));
        }
        let limit = 1u32 << num_views;
        if pair_masks.iter().any(|&m| (m as u32) >= limit) {
            return Err(Error::BadTensorFile(format!(
                "connection vector out of range for D = {num_views}"
            )));
        }
        Ok(Self { n, num_views, pair_masks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_views(&self) -> usize {
        self.num_views
    }

    pub fn pair_masks(&self) -> &[u16] {
        &self.pair_masks
    }

    /// Connection vector of the unordered pair `(i, j)`, any order.
    pub fn mask(&self, i: usize, j: usize) -> u16 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pair_masks[pair_rank(self.n, i, j)]
    }

    /// Whether nodes `i` and `j` are connected in the given view.
    pub fn edge(&self, view: usize, i: usize, j: usize) -> bool {
        self.mask(i, j) >> view & 1 == 1
    }
}

/// Uniform draw from the balanced labelings: a Fisher-Yates shuffle of
/// the canonical labeling, one counter per step.
pub fn sample_labeling(n: usize, seed: SeedSpec) -> Result<Labeling> {
    let mut labeling = Labeling::first_half_positive(n)?;
    let signs = &mut labeling.signs;
    for step in 0..n - 1 {
        let i = n - 1 - step;
        let j = seed.bounded(StreamDomain::Labeling, step as u64, (i + 1) as u64) as usize;
        signs.swap(i, j);
    }
    Ok(labeling)
}

fn draw_mask(cdf: &[f64], mass: &[f64], u: f64) -> u16 {
    let mut idx = cdf.partition_point(|&c| c <= u);
    // Float cumsum can fall a hair short of 1; clamp to the last mask
    // that actually carries mass so zero-mass vectors are never emitted.
    if idx >= cdf.len() || mass[idx] == 0.0 {
        idx = mass
            .iter()
            .rposition(|&m| m > 0.0)
            .expect("validated distribution has positive mass");
    }
    idx as u16
}

/// Samples the adjacency tensor given ground truth: pair `(i, j)` draws
/// from `within` when the signs agree and `across` otherwise.
pub fn sample_tensor(
    params: &MvsbmParams,
    truth: &Labeling,
    seed: SeedSpec,
) -> Result<AdjacencyTensor> {
    if truth.len() != params.n() {
        return Err(Error::LengthMismatch(truth.len(), params.n()));
    }
    let within_cdf = params.within().cdf();
    let across_cdf = params.across().cdf();
    let n = params.n();
    let mut masks = Vec::with_capacity(params.num_pairs());
    let mut rank = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let u = seed.pair_uniform(rank);
            let mask = if truth.sign(i) == truth.sign(j) {
                draw_mask(&within_cdf, params.within().mass(), u)
            } else {
                draw_mask(&across_cdf, params.across().mass(), u)
            };
            masks.push(mask);
            rank += 1;
        }
    }
    AdjacencyTensor::from_parts(n, params.num_views(), masks)
}

/// Samples a tensor under the auxiliary model: pairs `(0, v)` draw from
/// `p_tilt` when `truth(v) = +1` and `q_tilt` when `truth(v) = -1`
/// (regardless of node 0's own sign); all other pairs draw exactly as
/// under the true model, reusing the same per-pair uniforms, so the two
/// tensors under one seed are maximally coupled.
pub fn sample_tensor_psi(
    params: &MvsbmParams,
    tilt: &TiltedPair,
    truth: &Labeling,
    seed: SeedSpec,
) -> Result<AdjacencyTensor> {
    if truth.len() != params.n() {
        return Err(Error::LengthMismatch(truth.len(), params.n()));
    }
    if tilt.p_tilt.num_views() != params.num_views() {
        return Err(Error::DimensionMismatch(
            tilt.p_tilt.num_views(),
            params.num_views(),
        ));
    }
    let within_cdf = params.within().cdf();
    let across_cdf = params.across().cdf();
    let p_tilt_cdf = tilt.p_tilt.cdf();
    let q_tilt_cdf = tilt.q_tilt.cdf();
    let n = params.n();
    let mut masks = Vec::with_capacity(params.num_pairs());
    let mut rank = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let u = seed.pair_uniform(rank);
            let mask = if i == 0 {
                if truth.sign(j) == 1 {
                    draw_mask(&p_tilt_cdf, tilt.p_tilt.mass(), u)
                } else {
                    draw_mask(&q_tilt_cdf, tilt.q_tilt.mass(), u)
                }
            } else if truth.sign(i) == truth.sign(j) {
                draw_mask(&within_cdf, params.within().mass(), u)
            } else {
                draw_mask(&across_cdf, params.across().mass(), u)
            };
            masks.push(mask);
            rank += 1;
        }
    }
    AdjacencyTensor::from_parts(n, params.num_views(), masks)
}

// ---------------------------------------------------------------------
// Binary tensor format
//
// Header: magic "MVSB", version u16, n u32, D u16, master_seed u64,
// trial_index u64, all little-endian, followed by n(n-1)/2 u16 masks in
// row-major (i, j) order.
// ---------------------------------------------------------------------

const TENSOR_MAGIC: &[u8; 4] = b"MVSB";
const TENSOR_VERSION: u16 = 1;

/// Serializes a tensor (with the seed that produced it) into the binary
/// format.
pub fn tensor_to_bytes(tensor: &AdjacencyTensor, seed: SeedSpec) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + 2 * tensor.pair_masks.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensor.n as u32).to_le_bytes());
    out.extend_from_slice(&(tensor.num_views as u16).to_le_bytes());
    out.extend_from_slice(&seed.master_seed.to_le_bytes());
    out.extend_from_slice(&seed.trial_index.to_le_bytes());
    for &mask in &tensor.pair_masks {
        out.extend_from_slice(&mask.to_le_bytes());
    }
    out
}

/// Parses the binary tensor format, returning the tensor and the seed
/// recorded in its header.
pub fn tensor_from_bytes(bytes: &[u8]) -> Result<(AdjacencyTensor, SeedSpec)> {
    let bad = |msg: &str| Error::BadTensorFile(msg.to_string());
    if bytes.len() < 28 {
        return Err(bad("truncated header"));
    }
    if &bytes[0..4] != TENSOR_MAGIC {
        return Err(bad("bad magic, expected \"MVSB\""));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != TENSOR_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let num_views = u16::from_le_bytes(bytes[10..12].try_into().unwrap()) as usize;
    let master_seed = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let trial_index = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    if n < 2 {
        return Err(bad("node count below 2"));
    }
    let num_pairs = n * (n - 1) / 2;
    let body = &bytes[28..];
    if body.len() != 2 * num_pairs {
        return Err(bad(&format!(
            "body holds {} bytes, expected {}",
            body.len(),
            2 * num_pairs
        )));
    }
    let masks = body
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    let tensor = AdjacencyTensor::from_parts(n, num_views, masks)?;
    Ok((tensor, SeedSpec::new(master_seed, trial_index)))
}

pub fn write_tensor(tensor: &AdjacencyTensor, seed: SeedSpec, path: &Path) -> Result<()> {
    fs::write(path, tensor_to_bytes(tensor, seed))?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<(AdjacencyTensor, SeedSpec)> {
    tensor_from_bytes(&fs::read(path)?)
}

/// Textual edge-list export: one line `view i j` per set bit, pairs in
/// row-major order, views ascending, all indices zero-based.
pub fn write_edge_list(tensor: &AdjacencyTensor, mut out: impl std::io::Write) -> Result<()> {
    let n = tensor.n();
    for i in 0..n {
        for j in i + 1..n {
            let mask = tensor.mask(i, j);
            for view in 0..tensor.num_views() {
                if mask >> view & 1 == 1 {
                    writeln!(out, "{view} {i} {j}")?;
                }
            }
        }
    }
    Ok(())
}

pub fn edge_list_string(tensor: &AdjacencyTensor) -> String {
    let mut buf = Vec::new();
    write_edge_list(tensor, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("edge list is ASCII")
}
