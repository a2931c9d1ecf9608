//! Multilabel and ranking losses with their affine decompositions
//! `L(z, y) = F_z · U_y + c`.
//!
//! | loss    | Z            | Y                 | r            |
//! |---------|--------------|-------------------|--------------|
//! | 0-1     | subsets      | subsets           | 2^m          |
//! | block   | subsets      | subsets           | b            |
//! | hamming | subsets      | subsets           | m            |
//! | prec@k  | k-subsets    | subsets           | m            |
//! | fscore  | subsets      | subsets           | m² + 1       |
//! | ndcg    | permutations | {0..R}^m          | m            |
//! | pd      | permutations | subsets           | m(m-1)/2     |
//! | map     | permutations | subsets           | m(m+1)/2     |
//!
//! Observations whose normalizer vanishes carry no preference information and
//! are lost by no ranking. For ndcg (all gains zero) and map (no relevant item)
//! the loss is 0, realized by a constant embedding because `Σ_j F_σj` does not
//! depend on `σ`. For pd (`|y| ∈ {0, m}`) every `F_σ` has a mirror `-F_σ'`, so
//! the only exact choice is a zero embedding with loss `c = 1/2`.

mod constants;

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use constants::{
    enumerated_constant, exact_constant, fscore_p_side_f_norm, fscore_published_pair, sharp_constant, ConstantKind,
    SharpConstant,
};

use crate::error::{Error, Result};
use crate::label::{self, Observation, OutputLabel, Permutation, Subset};
use crate::math;

/// Subset spaces above this many labels are not enumerated.
pub const MAX_ENUM_SUBSET_M: usize = 10;
/// Permutation spaces above this many items are not enumerated.
pub const MAX_ENUM_PERMUTATION_M: usize = 8;
/// Largest relevance grid `(R + 1)^m` that is enumerated.
pub const MAX_ENUM_RELEVANCE: u128 = 4096;
/// Dense embeddings of the 0-1 and block losses index all `2^m` subsets.
pub const MAX_DENSE_SUBSET_M: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FScoreSide {
    /// Regress `P_{jℓ} = P([y]_j = 1, |y| = ℓ)`; decoding converts to `A` in `O(m³)`.
    #[default]
    P,
    /// Regress `A_{jk} = Σ_ℓ P_{jℓ} / (ℓ + k)` directly; decoding is `O(m²)`.
    A,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainPreset {
    /// `G(t) = 2^t - 1`
    Exp2,
    /// `G(t) = t`
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Preset(GainPreset),
    /// `G(t) = max(t - neutral, 0)`
    Eru { neutral: f64 },
    /// `G(t)` listed for `t = 0..=R`.
    Table(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountPreset {
    /// `D_j = 1 / log2(j + 1)`
    Log2,
    /// `D_j = 2^{1-j}`
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiscountSpec {
    Preset(DiscountPreset),
    Table(Vec<f64>),
}

/// Serializable loss description, as found in the CLI config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub name: String,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Blocks of the block 0-1 loss, each a list of subsets given by their label indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<DiscountSpec>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub max_relevance: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fscore_side: Option<FScoreSide>,
}

impl LossConfig {
    pub fn new(name: &str, m: usize) -> Self {
        Self {
            name: name.to_string(),
            m,
            k: None,
            b: None,
            partition: None,
            gain: None,
            discount: None,
            max_relevance: None,
            fscore_side: None,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_max_relevance(mut self, r: u32) -> Self {
        self.max_relevance = Some(r);
        self
    }

    pub fn with_partition(mut self, partition: Vec<Vec<Vec<usize>>>) -> Self {
        self.b = Some(partition.len());
        self.partition = Some(partition);
        self
    }

    pub fn with_fscore_side(mut self, side: FScoreSide) -> Self {
        self.fscore_side = Some(side);
        self
    }

    pub fn build(&self) -> Result<DiscreteLoss> {
        make_loss(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    ZeroOne,
    Block { block_of: Vec<usize>, first: Vec<usize>, blocks: usize },
    Hamming,
    PrecAtK { k: usize },
    FScore { side: FScoreSide },
    Ndcg { gains: Vec<f64>, discount: Vec<f64> },
    Pairwise,
    MeanAveragePrecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossFamily {
    ZeroOne,
    Block,
    Hamming,
    PrecAtK,
    FScore,
    NdcgType,
    PairwiseDisagreement,
    MeanAveragePrecision,
}

/// Which family of prediction space a loss uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputSpace {
    Subsets,
    KSubsets(usize),
    Permutations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationSpace {
    Subsets,
    Relevance(u32),
}

/// A loss with evaluator, affine decomposition and enumerable spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLoss {
    config: LossConfig,
    m: usize,
    kind: Kind,
    offset_error: f64,
}

/// The canonical spelling of a loss name or alias.
pub fn canonical_name(name: &str) -> Option<&'static str> {
    let lower = name.to_ascii_lowercase();
    Some(match lower.as_str() {
        "0-1" | "zero_one" | "zero-one" | "01" => "0-1",
        "block" | "block_0-1" | "block0-1" | "block_zero_one" => "block",
        "hamming" => "hamming",
        "prec@k" | "precision_at_k" | "prec_at_k" | "preck" => "prec@k",
        "fscore" | "f-score" | "f1" | "f_score" => "fscore",
        "ndcg" => "ndcg",
        "eru" => "eru",
        "ndcg_type" | "ndcg-type" => "ndcg_type",
        "pd" | "pairwise" | "pairwise_disagreement" => "pd",
        "map" | "mean_average_precision" => "map",
        _ => return None,
    })
}

pub const LOSS_NAMES: [&str; 10] = [
    "0-1", "block", "hamming", "prec@k", "fscore", "ndcg", "eru", "ndcg_type", "pd", "map",
];

fn gains_from(spec: &GainSpec, max_relevance: u32) -> Result<Vec<f64>> {
    let levels = max_relevance as usize + 1;
    let gains: Vec<f64> = match spec {
        GainSpec::Preset(GainPreset::Exp2) => (0..levels)
            .map(|t| math::powf(2.0, t as f64) - 1.0)
            .collect(),
        GainSpec::Preset(GainPreset::Linear) => (0..levels).map(|t| t as f64).collect(),
        GainSpec::Eru { neutral } => (0..levels)
            .map(|t| (t as f64 - neutral).max(0.0))
            .collect(),
        GainSpec::Table(v) => {
            if v.len() != levels {
                return Err(Error::invalid(alloc::format!(
                    "gain table needs R + 1 = {levels} values, got {}",
                    v.len()
                )));
            }
            v.clone()
        }
    };
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(Error::invalid("gain values must be finite and non-negative"));
    }
    if gains.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("gain must be non-decreasing in the relevance"));
    }
    Ok(gains)
}

fn discount_from(spec: &DiscountSpec, m: usize) -> Result<Vec<f64>> {
    let d: Vec<f64> = match spec {
        DiscountSpec::Preset(DiscountPreset::Log2) => {
            (1..=m).map(|j| 1.0 / math::log2(j as f64 + 1.0)).collect()
        }
        DiscountSpec::Preset(DiscountPreset::Exponential) => {
            (1..=m).map(|j| math::powf(2.0, 1.0 - j as f64)).collect()
        }
        DiscountSpec::Table(v) => {
            if v.len() != m {
                return Err(Error::invalid(alloc::format!(
                    "discount table needs m = {m} values, got {}",
                    v.len()
                )));
            }
            v.clone()
        }
    };
    if d.first().is_some_and(|&d1| (d1 - 1.0).abs() > 1e-12) {
        return Err(Error::invalid("discount must satisfy D_1 = 1"));
    }
    if d.iter().any(|x| !x.is_finite() || *x < 0.0) || d.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("discount must be non-negative and non-increasing"));
    }
    Ok(d)
}

fn block_table(m: usize, partition: &[Vec<Vec<usize>>]) -> Result<Vec<usize>> {
    if m > MAX_DENSE_SUBSET_M {
        return Err(Error::invalid(alloc::format!(
            "block 0-1 partitions are limited to m <= {MAX_DENSE_SUBSET_M}"
        )));
    }
    let total = 1usize << m;
    let mut block_of = vec![usize::MAX; total];
    for (b, block) in partition.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::invalid(alloc::format!("block {b} is empty")));
        }
        for members in block {
            let s = Subset::from_indices(m, members)
                .map_err(|_| Error::invalid(alloc::format!("block {b} has a label index >= m")))?;
            let code = s.code().expect("m <= 20") as usize;
            if block_of[code] != usize::MAX {
                return Err(Error::invalid(alloc::format!(
                    "subset {s} appears in blocks {} and {b}",
                    block_of[code]
                )));
            }
            block_of[code] = b;
        }
    }
    if let Some(code) = block_of.iter().position(|&b| b == usize::MAX) {
        return Err(Error::invalid(alloc::format!(
            "partition does not cover subset {}",
            Subset::from_code(m, code as u64)
        )));
    }
    Ok(block_of)
}

/// Builds a loss from its configuration, validating every parameter.
pub fn make_loss(config: &LossConfig) -> Result<DiscreteLoss> {
    let name = canonical_name(&config.name)
        .ok_or_else(|| Error::invalid(alloc::format!("unknown loss {:?}", config.name)))?;
    let m = config.m;
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let kind = match name {
        "0-1" => {
            if m > MAX_DENSE_SUBSET_M {
                return Err(Error::invalid(alloc::format!(
                    "0-1 loss embeds all 2^m subsets; m <= {MAX_DENSE_SUBSET_M} required"
                )));
            }
            Kind::ZeroOne
        }
        "block" => {
            let partition = config
                .partition
                .as_ref()
                .ok_or_else(|| Error::invalid("block 0-1 loss needs a partition"))?;
            if let Some(b) = config.b {
                if b != partition.len() {
                    return Err(Error::invalid(alloc::format!(
                        "b = {b} but the partition has {} blocks",
                        partition.len()
                    )));
                }
            }
            let block_of = block_table(m, partition)?;
            let mut first = vec![usize::MAX; partition.len()];
            for (code, &b) in block_of.iter().enumerate() {
                first[b] = first[b].min(code);
            }
            Kind::Block {
                block_of,
                first,
                blocks: partition.len(),
            }
        }
        "hamming" => Kind::Hamming,
        "prec@k" => {
            let k = config.k.ok_or_else(|| Error::invalid("prec@k needs k"))?;
            if k == 0 || k > m {
                return Err(Error::invalid(alloc::format!("prec@k needs 1 <= k <= m, got k = {k}")));
            }
            Kind::PrecAtK { k }
        }
        "fscore" => Kind::FScore {
            side: config.fscore_side.unwrap_or_default(),
        },
        "ndcg" | "eru" | "ndcg_type" => {
            let r = config.max_relevance.unwrap_or(3);
            if r == 0 {
                return Err(Error::invalid("relevance scale needs R >= 1"));
            }
            let (gain, discount) = match name {
                "ndcg" => (
                    config.gain.clone().unwrap_or(GainSpec::Preset(GainPreset::Exp2)),
                    config
                        .discount
                        .clone()
                        .unwrap_or(DiscountSpec::Preset(DiscountPreset::Log2)),
                ),
                "eru" => (
                    config.gain.clone().unwrap_or(GainSpec::Eru { neutral: 0.0 }),
                    config
                        .discount
                        .clone()
                        .unwrap_or(DiscountSpec::Preset(DiscountPreset::Exponential)),
                ),
                _ => (
                    config
                        .gain
                        .clone()
                        .ok_or_else(|| Error::invalid("ndcg_type needs a gain"))?,
                    config
                        .discount
                        .clone()
                        .ok_or_else(|| Error::invalid("ndcg_type needs a discount"))?,
                ),
            };
            Kind::Ndcg {
                gains: gains_from(&gain, r)?,
                discount: discount_from(&discount, m)?,
            }
        }
        "pd" => {
            if m < 2 {
                return Err(Error::invalid("pairwise disagreement needs m >= 2"));
            }
            Kind::Pairwise
        }
        "map" => Kind::MeanAveragePrecision,
        _ => unreachable!(),
    };
    let mut config = config.clone();
    config.name = name.to_string();
    Ok(DiscreteLoss {
        config,
        m,
        kind,
        offset_error: 0.0,
    })
}

pub(crate) fn fscore_index(m: usize, j: usize, level: usize) -> usize {
    // level in 1..=m
    (level - 1) * m + j
}

pub(crate) fn pair_index_lt(m: usize, j: usize, l: usize) -> usize {
    // j < l, row-major over the strict upper triangle
    j * (2 * m - j - 1) / 2 + (l - j - 1)
}

pub(crate) fn pair_index_le(j: usize, l: usize) -> usize {
    // l <= j, row-major over the lower triangle including the diagonal
    j * (j + 1) / 2 + l
}

impl DiscreteLoss {
    pub fn config(&self) -> &LossConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Embedding dimension `r`.
    pub fn r(&self) -> usize {
        let m = self.m;
        match &self.kind {
            Kind::ZeroOne => 1 << m,
            Kind::Block { blocks, .. } => *blocks,
            Kind::Hamming | Kind::PrecAtK { .. } | Kind::Ndcg { .. } => m,
            Kind::FScore { .. } => m * m + 1,
            Kind::Pairwise => m * (m - 1) / 2,
            Kind::MeanAveragePrecision => m * (m + 1) / 2,
        }
    }

    /// Offset `c` of the decomposition.
    pub fn c(&self) -> f64 {
        let base = match &self.kind {
            // F_z · U_y = -1/2 + d(z, y)/m
            Kind::Hamming | Kind::Pairwise => 0.5,
            _ => 1.0,
        };
        base + self.offset_error
    }

    /// Copy of the loss whose reported offset is off by `delta`, used to check
    /// that verification harnesses detect a broken decomposition.
    #[doc(hidden)]
    pub fn with_offset_error(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.offset_error = delta;
        out
    }

    pub fn output_space(&self) -> OutputSpace {
        match &self.kind {
            Kind::PrecAtK { k } => OutputSpace::KSubsets(*k),
            Kind::Ndcg { .. } | Kind::Pairwise | Kind::MeanAveragePrecision => {
                OutputSpace::Permutations
            }
            _ => OutputSpace::Subsets,
        }
    }

    pub fn observation_space(&self) -> ObservationSpace {
        match &self.kind {
            Kind::Ndcg { gains, .. } => ObservationSpace::Relevance(gains.len() as u32 - 1),
            _ => ObservationSpace::Subsets,
        }
    }

    pub fn fscore_side(&self) -> Option<FScoreSide> {
        match &self.kind {
            Kind::FScore { side } => Some(*side),
            _ => None,
        }
    }

    pub fn prec_k(&self) -> Option<usize> {
        match &self.kind {
            Kind::PrecAtK { k } => Some(*k),
            _ => None,
        }
    }

    pub fn block_count(&self) -> Option<usize> {
        match &self.kind {
            Kind::Block { blocks, .. } => Some(*blocks),
            _ => None,
        }
    }

    pub fn family(&self) -> LossFamily {
        match &self.kind {
            Kind::ZeroOne => LossFamily::ZeroOne,
            Kind::Block { .. } => LossFamily::Block,
            Kind::Hamming => LossFamily::Hamming,
            Kind::PrecAtK { .. } => LossFamily::PrecAtK,
            Kind::FScore { .. } => LossFamily::FScore,
            Kind::Ndcg { .. } => LossFamily::NdcgType,
            Kind::Pairwise => LossFamily::PairwiseDisagreement,
            Kind::MeanAveragePrecision => LossFamily::MeanAveragePrecision,
        }
    }

    /// Smallest subset code of each block of a block 0-1 loss.
    pub(crate) fn block_first_codes(&self) -> Option<&[usize]> {
        match &self.kind {
            Kind::Block { first, .. } => Some(first),
            _ => None,
        }
    }

    /// Gains `G(t)` for `t = 0..=R` and the discount vector of NDCG-type losses.
    pub fn ndcg_params(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            Kind::Ndcg { gains, discount } => Some((gains, discount)),
            _ => None,
        }
    }

    pub fn is_permutation_loss(&self) -> bool {
        self.output_space() == OutputSpace::Permutations
    }

    pub fn validate_observation(&self, y: &Observation) -> Result<()> {
        match (self.observation_space(), y) {
            (ObservationSpace::Subsets, Observation::Subset(s)) if s.m() == self.m => Ok(()),
            (ObservationSpace::Relevance(r), Observation::Relevance(v)) if v.len() == self.m => {
                if let Some(bad) = v.iter().find(|&&t| t > r) {
                    Err(Error::label(None, alloc::format!("relevance {bad} exceeds R = {r}")))
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::label(
                None,
                alloc::format!("observation does not belong to the {} loss with m = {}", self.name(), self.m),
            )),
        }
    }

    pub fn validate_output(&self, z: &OutputLabel) -> Result<()> {
        let ok = match (self.output_space(), z) {
            (OutputSpace::Subsets, OutputLabel::Subset(s)) => s.m() == self.m,
            (OutputSpace::KSubsets(k), OutputLabel::KSubset { bits, k: kz }) => {
                bits.m() == self.m && *kz == k && bits.count() == k
            }
            (OutputSpace::Permutations, OutputLabel::Permutation(p)) => p.m() == self.m,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::label(
                None,
                alloc::format!("prediction does not belong to the {} loss with m = {}", self.name(), self.m),
            ))
        }
    }

    /// `N(r) = max_σ Σ_j G([r]_j) D_σ(j)`.
    fn ndcg_normalizer(gains: &[f64], discount: &[f64], rel: &[u32]) -> f64 {
        let mut g: Vec<f64> = rel.iter().map(|&t| gains[t as usize]).collect();
        g.sort_by(|a, b| b.total_cmp(a));
        g.iter().zip(discount).map(|(a, d)| a * d).sum()
    }

    /// Evaluates `L(z, y)`. Panics if the labels do not belong to the loss's
    /// spaces; use [`Self::eval`] for checked evaluation.
    pub fn eval_unchecked(&self, z: &OutputLabel, y: &Observation) -> f64 {
        let m = self.m as f64;
        match &self.kind {
            Kind::ZeroOne => {
                let (z, y) = (z.as_subset().unwrap(), y.as_subset().unwrap());
                if z == y {
                    0.0
                } else {
                    1.0
                }
            }
            Kind::Block { block_of, .. } => {
                let (z, y) = (z.as_subset().unwrap(), y.as_subset().unwrap());
                let bz = block_of[z.code().unwrap() as usize];
                let by = block_of[y.code().unwrap() as usize];
                if bz == by {
                    0.0
                } else {
                    1.0
                }
            }
            Kind::Hamming => {
                let (z, y) = (z.as_subset().unwrap(), y.as_subset().unwrap());
                z.hamming_distance(y) as f64 / m
            }
            Kind::PrecAtK { k } => {
                let (z, y) = (z.as_subset().unwrap(), y.as_subset().unwrap());
                1.0 - z.intersection_count(y) as f64 / *k as f64
            }
            Kind::FScore { .. } => {
                let (z, y) = (z.as_subset().unwrap(), y.as_subset().unwrap());
                if y.is_empty() {
                    if z.is_empty() {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    let inter = z.intersection_count(y) as f64;
                    1.0 - 2.0 * inter / (z.count() + y.count()) as f64
                }
            }
            Kind::Ndcg { gains, discount } => {
                let sigma = z.as_permutation().unwrap();
                let rel = y.as_relevance().unwrap();
                let norm = Self::ndcg_normalizer(gains, discount, rel);
                if norm <= 0.0 {
                    return 0.0;
                }
                let gain: f64 = sigma
                    .order()
                    .iter()
                    .zip(discount)
                    .map(|(&item, d)| gains[rel[item] as usize] * d)
                    .sum();
                1.0 - gain / norm
            }
            Kind::Pairwise => {
                let sigma = z.as_permutation().unwrap();
                let y = y.as_subset().unwrap();
                let rel = y.count();
                let norm = rel * (self.m - rel);
                if norm == 0 {
                    return 0.5;
                }
                let mut discordant = 0usize;
                for j in 0..self.m {
                    if y.contains(j) {
                        continue;
                    }
                    for l in y.ones() {
                        if sigma.rank(j) < sigma.rank(l) {
                            discordant += 1;
                        }
                    }
                }
                discordant as f64 / norm as f64
            }
            Kind::MeanAveragePrecision => {
                let sigma = z.as_permutation().unwrap();
                let y = y.as_subset().unwrap();
                let rel = y.count();
                if rel == 0 {
                    return 0.0;
                }
                let mut hits = 0usize;
                let mut total = 0.0;
                for (p, item) in sigma.order().into_iter().enumerate() {
                    if y.contains(item) {
                        hits += 1;
                        total += hits as f64 / (p + 1) as f64;
                    }
                }
                1.0 - total / rel as f64
            }
        }
    }

    pub fn eval(&self, z: &OutputLabel, y: &Observation) -> Result<f64> {
        self.validate_output(z)?;
        self.validate_observation(y)?;
        Ok(self.eval_unchecked(z, y))
    }

    /// `ψ(y) = U_y`.
    pub fn embed(&self, y: &Observation) -> Result<Vec<f64>> {
        self.validate_observation(y)?;
        Ok(self.embed_unchecked(y))
    }

    pub(crate) fn embed_unchecked(&self, y: &Observation) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; self.r()];
        match &self.kind {
            Kind::ZeroOne => {
                u[y.as_subset().unwrap().code().unwrap() as usize] = 1.0;
            }
            Kind::Block { block_of, .. } => {
                u[block_of[y.as_subset().unwrap().code().unwrap() as usize]] = 1.0;
            }
            Kind::Hamming => {
                let y = y.as_subset().unwrap();
                for (j, v) in u.iter_mut().enumerate() {
                    *v = if y.contains(j) { 1.0 } else { -1.0 };
                }
            }
            Kind::PrecAtK { .. } => {
                for j in y.as_subset().unwrap().ones() {
                    u[j] = 1.0;
                }
            }
            Kind::FScore { side } => {
                let y = y.as_subset().unwrap();
                let size = y.count();
                if size == 0 {
                    u[m * m] = 1.0;
                } else {
                    match side {
                        FScoreSide::P => {
                            for j in y.ones() {
                                u[fscore_index(m, j, size)] = 1.0;
                            }
                        }
                        FScoreSide::A => {
                            for j in y.ones() {
                                for level in 1..=m {
                                    u[fscore_index(m, j, level)] = 2.0 / (size + level) as f64;
                                }
                            }
                        }
                    }
                }
            }
            Kind::Ndcg { gains, discount } => {
                let rel = y.as_relevance().unwrap();
                let norm = Self::ndcg_normalizer(gains, discount, rel);
                if norm > 0.0 {
                    for (v, &t) in u.iter_mut().zip(rel) {
                        *v = gains[t as usize] / norm;
                    }
                } else {
                    let total: f64 = discount.iter().sum();
                    u.iter_mut().for_each(|v| *v = 1.0 / total);
                }
            }
            Kind::Pairwise => {
                let y = y.as_subset().unwrap();
                let rel = y.count();
                let norm = (rel * (m - rel)) as f64;
                if norm > 0.0 {
                    for j in 0..m {
                        for l in j + 1..m {
                            let a = y.contains(l) as i32 - y.contains(j) as i32;
                            u[pair_index_lt(m, j, l)] = 2.0 * a as f64 / norm;
                        }
                    }
                }
            }
            Kind::MeanAveragePrecision => {
                let y = y.as_subset().unwrap();
                let rel = y.count();
                if rel > 0 {
                    let w = -1.0 / rel as f64;
                    for j in y.ones() {
                        for l in y.ones().take_while(|&l| l <= j) {
                            u[pair_index_le(j, l)] = w;
                        }
                    }
                } else {
                    // each position p contributes p entries equal to 1/p, so Σ F_σ = m
                    u.iter_mut().for_each(|v| *v = -1.0 / m as f64);
                }
            }
        }
        u
    }

    /// `φ(z) = F_z`.
    pub fn f_row(&self, z: &OutputLabel) -> Result<Vec<f64>> {
        self.validate_output(z)?;
        Ok(self.f_row_unchecked(z))
    }

    pub(crate) fn f_row_unchecked(&self, z: &OutputLabel) -> Vec<f64> {
        let m = self.m;
        let mut f = vec![0.0; self.r()];
        match &self.kind {
            Kind::ZeroOne => {
                f[z.as_subset().unwrap().code().unwrap() as usize] = -1.0;
            }
            Kind::Block { block_of, .. } => {
                f[block_of[z.as_subset().unwrap().code().unwrap() as usize]] = -1.0;
            }
            Kind::Hamming => {
                let z = z.as_subset().unwrap();
                let scale = 1.0 / (2.0 * m as f64);
                for (j, v) in f.iter_mut().enumerate() {
                    *v = if z.contains(j) { -scale } else { scale };
                }
            }
            Kind::PrecAtK { k } => {
                for j in z.as_subset().unwrap().ones() {
                    f[j] = -1.0 / *k as f64;
                }
            }
            Kind::FScore { side } => {
                let z = z.as_subset().unwrap();
                let size = z.count();
                if size == 0 {
                    f[m * m] = -1.0;
                } else {
                    match side {
                        FScoreSide::P => {
                            for j in z.ones() {
                                for level in 1..=m {
                                    f[fscore_index(m, j, level)] = -2.0 / (size + level) as f64;
                                }
                            }
                        }
                        FScoreSide::A => {
                            for j in z.ones() {
                                f[fscore_index(m, j, size)] = -1.0;
                            }
                        }
                    }
                }
            }
            Kind::Ndcg { discount, .. } => {
                let sigma = z.as_permutation().unwrap();
                for (j, v) in f.iter_mut().enumerate() {
                    *v = -discount[sigma.rank(j)];
                }
            }
            Kind::Pairwise => {
                let sigma = z.as_permutation().unwrap();
                for j in 0..m {
                    for l in j + 1..m {
                        // +1/4 when j is ranked above l
                        f[pair_index_lt(m, j, l)] =
                            if sigma.rank(j) < sigma.rank(l) { 0.25 } else { -0.25 };
                    }
                }
            }
            Kind::MeanAveragePrecision => {
                let sigma = z.as_permutation().unwrap();
                for j in 0..m {
                    for l in 0..=j {
                        let pos = sigma.rank(j).max(sigma.rank(l)) + 1;
                        f[pair_index_le(j, l)] = 1.0 / pos as f64;
                    }
                }
            }
        }
        f
    }

    /// `|Z|`, saturating.
    pub fn output_space_size(&self) -> u128 {
        let m = self.m as u32;
        match self.output_space() {
            OutputSpace::Subsets => 1u128.checked_shl(m).unwrap_or(u128::MAX),
            OutputSpace::KSubsets(k) => binomial(self.m, k),
            OutputSpace::Permutations => label::factorial(self.m),
        }
    }

    /// `|Y|`, saturating.
    pub fn observation_space_size(&self) -> u128 {
        match self.observation_space() {
            ObservationSpace::Subsets => 1u128.checked_shl(self.m as u32).unwrap_or(u128::MAX),
            ObservationSpace::Relevance(r) => {
                (r as u128 + 1).checked_pow(self.m as u32).unwrap_or(u128::MAX)
            }
        }
    }

    fn output_limit(&self) -> u128 {
        match self.output_space() {
            OutputSpace::Subsets | OutputSpace::KSubsets(_) => 1u128 << MAX_ENUM_SUBSET_M,
            OutputSpace::Permutations => label::factorial(MAX_ENUM_PERMUTATION_M),
        }
    }

    /// Every `z ∈ Z` in canonical order.
    pub fn enumerate_outputs(&self) -> Result<Vec<OutputLabel>> {
        self.enumerate_outputs_within(self.output_limit())
    }

    pub fn enumerate_outputs_within(&self, limit: u128) -> Result<Vec<OutputLabel>> {
        let size = self.output_space_size();
        if size > limit {
            return Err(Error::SpaceTooLarge {
                what: "output space",
                size,
                limit,
            });
        }
        let m = self.m;
        Ok(match self.output_space() {
            OutputSpace::Subsets => label::subsets(m).map(OutputLabel::Subset).collect(),
            OutputSpace::KSubsets(k) => label::k_subsets(m, k)
                .map(|bits| OutputLabel::KSubset { bits, k })
                .collect(),
            OutputSpace::Permutations => label::permutations(m).map(OutputLabel::Permutation).collect(),
        })
    }

    /// Every `y ∈ Y` in canonical order.
    pub fn enumerate_observations(&self) -> Result<Vec<Observation>> {
        let size = self.observation_space_size();
        let limit = match self.observation_space() {
            ObservationSpace::Subsets => 1u128 << MAX_ENUM_SUBSET_M,
            ObservationSpace::Relevance(_) => MAX_ENUM_RELEVANCE,
        };
        if size > limit {
            return Err(Error::SpaceTooLarge {
                what: "observation space",
                size,
                limit,
            });
        }
        Ok(match self.observation_space() {
            ObservationSpace::Subsets => label::subsets(self.m).map(Observation::Subset).collect(),
            ObservationSpace::Relevance(r) => label::relevance_grid(self.m, r)
                .map(Observation::Relevance)
                .collect(),
        })
    }

    /// The prediction with zero loss against `y`, when one exists.
    pub fn ideal_prediction(&self, y: &Observation) -> Option<OutputLabel> {
        match (&self.kind, y) {
            (Kind::PrecAtK { k }, Observation::Subset(s)) => {
                if s.count() != *k {
                    return None;
                }
                Some(OutputLabel::KSubset { bits: s.clone(), k: *k })
            }
            (Kind::ZeroOne | Kind::Block { .. } | Kind::Hamming | Kind::FScore { .. }, Observation::Subset(s)) => {
                Some(OutputLabel::Subset(s.clone()))
            }
            (Kind::Ndcg { gains, .. }, Observation::Relevance(r)) => {
                let mut order: Vec<usize> = (0..self.m).collect();
                order.sort_by(|&a, &b| gains[r[b] as usize].total_cmp(&gains[r[a] as usize]));
                Permutation::from_order(&order).ok().map(OutputLabel::Permutation)
            }
            (Kind::Pairwise | Kind::MeanAveragePrecision, Observation::Subset(s)) => {
                let mut order: Vec<usize> = s.ones().collect();
                order.extend((0..self.m).filter(|&j| !s.contains(j)));
                Permutation::from_order(&order).ok().map(OutputLabel::Permutation)
            }
            _ => None,
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// `max_{z,y} |F_z · U_y + c − L(z, y)|` by full enumeration.
pub fn decomposition_check(loss: &DiscreteLoss) -> Result<f64> {
    let limit = match loss.output_space() {
        OutputSpace::Permutations => label::factorial(7),
        _ => 1u128 << MAX_ENUM_SUBSET_M,
    };
    let outputs = loss.enumerate_outputs_within(limit)?;
    let observations = loss.enumerate_observations()?;
    let embedded: Vec<Vec<f64>> = observations.iter().map(|y| loss.embed_unchecked(y)).collect();
    let c = loss.c();
    let mut worst: f64 = 0.0;
    for z in &outputs {
        let f = loss.f_row_unchecked(z);
        for (y, u) in observations.iter().zip(&embedded) {
            let affine = math::dot(&f, u) + c;
            worst = worst.max((affine - loss.eval_unchecked(z, y)).abs());
        }
    }
    Ok(worst)
}
