//! Sharp constants `A = √r · ‖F‖∞ · U_max`, where `‖F‖∞ = max_z ‖F_z‖₂` and
//! `U_max = max_{y,j} |U_yj|`.

use serde::{Deserialize, Serialize};

use super::{DiscreteLoss, FScoreSide, Kind};
use crate::error::Result;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// Attained by the implemented decomposition.
    Exact,
    /// The published closed form, which is an upper bound and may not match
    /// the implemented decomposition.
    PublishedBound,
    /// Measured by enumerating both spaces.
    Enumerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstant {
    pub r: usize,
    pub f_inf_norm: f64,
    pub u_max: f64,
    pub a: f64,
    pub kind: ConstantKind,
}

impl SharpConstant {
    fn new(r: usize, f_inf_norm: f64, u_max: f64, kind: ConstantKind) -> Self {
        Self {
            r,
            f_inf_norm,
            u_max,
            a: math::sqrt(r as f64) * f_inf_norm * u_max,
            kind,
        }
    }

    /// Builds a constant from a published `A`, attributing the slack to `U_max`
    /// so that `A = √r ‖F‖∞ U_max` still holds.
    fn published(r: usize, f_inf_norm: f64, a: f64) -> Self {
        Self {
            r,
            f_inf_norm,
            u_max: a / (math::sqrt(r as f64) * f_inf_norm),
            a,
            kind: ConstantKind::PublishedBound,
        }
    }
}

fn harmonic(m: usize) -> f64 {
    (1..=m).map(|p| 1.0 / p as f64).sum()
}

/// `max_z ‖F_z‖₂` of the P-side F-score decomposition. A nonempty `z` with
/// `|z| = s` has `s·m` entries `2/(s+ℓ)`, `ℓ = 1..m`; `z = ∅` has a single `1`.
pub fn fscore_p_side_f_norm(m: usize) -> f64 {
    let mut best: f64 = 1.0;
    for s in 1..=m {
        let sum: f64 = (1..=m).map(|l| 1.0 / ((s + l) * (s + l)) as f64).sum();
        best = best.max(2.0 * math::sqrt(s as f64 * sum));
    }
    best
}

/// The two published F-score bounds `(A₁, A₂) = (√(m²+1), √(m(m²+1)))`.
pub fn fscore_published_pair(m: usize) -> (f64, f64) {
    let r = (m * m + 1) as f64;
    (math::sqrt(r), math::sqrt(m as f64 * r))
}

fn ndcg_u_max(gains: &[f64], discount: &[f64]) -> f64 {
    let g0 = gains[0];
    let g_top = *gains.last().unwrap();
    let tail: f64 = discount.iter().skip(1).sum();
    let mut u: f64 = 0.0;
    if g_top > 0.0 {
        // one item at the top relevance, all others at the bottom
        u = g_top / (g_top + g0 * tail);
    }
    if g0 == 0.0 {
        let total: f64 = discount.iter().sum();
        u = u.max(1.0 / total);
    }
    u
}

/// The constant of the implemented decomposition, in closed form.
pub fn exact_constant(loss: &DiscreteLoss) -> SharpConstant {
    let m = loss.m();
    let r = loss.r();
    let mf = m as f64;
    let (f, u) = match &loss.kind {
        Kind::ZeroOne | Kind::Block { .. } => (1.0, 1.0),
        Kind::Hamming => (1.0 / (2.0 * math::sqrt(mf)), 1.0),
        Kind::PrecAtK { k } => (1.0 / math::sqrt(*k as f64), 1.0),
        Kind::FScore { side: FScoreSide::P } => (fscore_p_side_f_norm(m), 1.0),
        Kind::FScore { side: FScoreSide::A } => (math::sqrt(mf).max(1.0), 1.0),
        Kind::Ndcg { gains, discount } => (math::norm2(discount), ndcg_u_max(gains, discount)),
        Kind::Pairwise => (math::sqrt(r as f64) / 4.0, 2.0 / (mf - 1.0)),
        Kind::MeanAveragePrecision => (math::sqrt(harmonic(m)), 1.0),
    };
    SharpConstant::new(r, f, u, ConstantKind::Exact)
}

/// The tabulated constant: exact where the closed form is attained, the
/// published bound for F-score (`min(A₁, A₂)`) and MAP (`½ m √ln(m+1)`).
pub fn sharp_constant(loss: &DiscreteLoss) -> SharpConstant {
    let m = loss.m();
    let r = loss.r();
    match &loss.kind {
        Kind::FScore { .. } => {
            let (a1, a2) = fscore_published_pair(m);
            SharpConstant::published(r, 1.0, a1.min(a2))
        }
        Kind::MeanAveragePrecision => {
            let mf = m as f64;
            let f = math::sqrt(math::ln(mf + 1.0));
            SharpConstant::published(r, f, 0.5 * mf * f)
        }
        _ => exact_constant(loss),
    }
}

/// `√r · max_z ‖F_z‖₂ · max_{y,j} |U_yj|` by enumerating both spaces.
pub fn enumerated_constant(loss: &DiscreteLoss) -> Result<SharpConstant> {
    let outputs = loss.enumerate_outputs()?;
    let observations = loss.enumerate_observations()?;
    let f = outputs
        .iter()
        .map(|z| math::norm2(&loss.f_row_unchecked(z)))
        .fold(0.0, f64::max);
    let u = observations
        .iter()
        .flat_map(|y| loss.embed_unchecked(y))
        .fold(0.0, |acc: f64, v| acc.max(v.abs()));
    Ok(SharpConstant::new(loss.r(), f, u, ConstantKind::Enumerated))
}

impl DiscreteLoss {
    /// Cost of the fast decoder as a function of `m`.
    pub fn decoder_complexity(&self) -> &'static str {
        match &self.kind {
            Kind::ZeroOne => "O(2^m)",
            Kind::Block { .. } => "O(b)",
            Kind::Hamming => "O(m)",
            Kind::PrecAtK { .. } => "O(m log k)",
            Kind::FScore { side: FScoreSide::P } => "O(m^3)",
            Kind::FScore { side: FScoreSide::A } => "O(m^2)",
            Kind::Ndcg { .. } => "O(m log m)",
            Kind::Pairwise => "NP-hard (feedback arc set)",
            Kind::MeanAveragePrecision => "NP-hard (quadratic assignment)",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::all_test_losses;
    use super::*;
    use crate::losses::LossConfig;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn table_values() {
        for m in 1..=12 {
            let ham = LossConfig::new("hamming", m).build().unwrap();
            assert!(close(sharp_constant(&ham).a, 0.5));
        }
        let p = LossConfig::new("prec@k", 4).with_k(2).build().unwrap();
        assert!(close(sharp_constant(&p).a, 2f64.sqrt()));
        let p = LossConfig::new("prec@k", 9).with_k(4).build().unwrap();
        assert!(close(sharp_constant(&p).a, 1.5));
        let z = LossConfig::new("0-1", 4).build().unwrap();
        assert!(close(sharp_constant(&z).a, 4.0));
        let pd = LossConfig::new("pd", 8).build().unwrap();
        assert!(close(sharp_constant(&pd).a, 2.0));
        let map = LossConfig::new("map", 3).build().unwrap();
        let expected = 0.5 * 3.0 * 4f64.ln().sqrt();
        assert!(close(sharp_constant(&map).a, expected));
        assert!((expected - 1.76612).abs() < 1e-5);
        assert_eq!(sharp_constant(&map).kind, ConstantKind::PublishedBound);
    }

    #[test]
    fn product_identity_holds() {
        for loss in all_test_losses(4, 4) {
            for c in [sharp_constant(&loss), exact_constant(&loss)] {
                let prod = (c.r as f64).sqrt() * c.f_inf_norm * c.u_max;
                assert!(close(c.a, prod), "{}", loss.name());
            }
        }
    }

    #[test]
    fn exact_matches_enumeration() {
        for loss in all_test_losses(4, 4).into_iter().chain(all_test_losses(3, 5)) {
            let e = enumerated_constant(&loss).unwrap();
            let x = exact_constant(&loss);
            assert!(close(e.f_inf_norm, x.f_inf_norm), "{} F {} vs {}", loss.name(), e.f_inf_norm, x.f_inf_norm);
            assert!(close(e.u_max, x.u_max), "{} U {} vs {}", loss.name(), e.u_max, x.u_max);
        }
    }

    #[test]
    fn fscore_p_side_norm_brute_force() {
        // independent recomputation over every cardinality
        for m in 1..=8usize {
            let mut best: f64 = 1.0;
            for s in 1..=m {
                let mut sq = 0.0;
                for _j in 0..s {
                    for l in 1..=m {
                        let v = 2.0 / (s + l) as f64;
                        sq += v * v;
                    }
                }
                best = best.max(sq.sqrt());
            }
            assert!(close(fscore_p_side_f_norm(m), best));
        }
        let (a1, a2) = fscore_published_pair(5);
        assert!(close(a1, 26f64.sqrt()) && a1 <= a2 && a1 <= 2f64.sqrt() * 5.0);
    }
}
