//! Heuristics for the NP-hard ranking decoders.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::label::Permutation;
use crate::matrix::Matrix;

/// `Σ γ[j][ℓ]` over pairs where `j` is ranked after `ℓ`.
pub fn arcset_objective(weights: &Matrix, sigma: &Permutation) -> f64 {
    let m = sigma.m();
    let mut s = 0.0;
    for j in 0..m {
        for l in 0..m {
            if j != l && sigma.rank(j) > sigma.rank(l) {
                s += weights[(j, l)];
            }
        }
    }
    s
}

/// Greedy feedback arc set ordering followed by adjacent-swap improvement.
///
/// `weights[(j, ℓ)] ≥ 0` is paid when `j` ends up after `ℓ`. Items with no
/// remaining incoming mass go first, items with no outgoing mass go last,
/// otherwise the item with the largest out-minus-in mass is placed next.
/// Ties go to the lowest index.
pub fn greedy_arcset(weights: &Matrix) -> Permutation {
    let m = weights.rows();
    let mut remaining: Vec<bool> = alloc::vec![true; m];
    let mut front = Vec::with_capacity(m);
    let mut back = Vec::new();
    let mass = |v: usize, remaining: &[bool]| {
        let mut out = 0.0;
        let mut inc = 0.0;
        for u in (0..m).filter(|&u| u != v && remaining[u]) {
            out += weights[(v, u)];
            inc += weights[(u, v)];
        }
        (out, inc)
    };
    for _ in 0..m {
        let live: Vec<usize> = (0..m).filter(|&v| remaining[v]).collect();
        let masses: Vec<(f64, f64)> = live.iter().map(|&v| mass(v, &remaining)).collect();
        let pick = if let Some(i) = masses.iter().position(|&(_, inc)| inc <= 0.0) {
            front.push(live[i]);
            live[i]
        } else if let Some(i) = masses.iter().position(|&(out, _)| out <= 0.0) {
            back.push(live[i]);
            live[i]
        } else {
            let mut best = 0;
            for i in 1..live.len() {
                if masses[i].0 - masses[i].1 > masses[best].0 - masses[best].1 {
                    best = i;
                }
            }
            front.push(live[best]);
            live[best]
        };
        remaining[pick] = false;
    }
    front.extend(back.into_iter().rev());
    let mut order = front;
    loop {
        let mut changed = false;
        for p in 0..m.saturating_sub(1) {
            let (a, b) = (order[p], order[p + 1]);
            if weights[(a, b)] < weights[(b, a)] {
                order.swap(p, p + 1);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Permutation::from_order(&order).expect("greedy order is a permutation")
}

/// `Σ_{jℓ} W_{jℓ} D_{σ(j)σ(ℓ)}`, i.e. `Tr(Wᵀ P D Pᵀ)`.
pub fn qap_objective(w: &Matrix, d: &Matrix, sigma: &Permutation) -> f64 {
    let r = sigma.ranks();
    let m = r.len();
    let mut s = 0.0;
    for j in 0..m {
        for l in 0..m {
            s += w[(j, l)] * d[(r[j], r[l])];
        }
    }
    s
}

fn touched(w: &Matrix, d: &Matrix, r: &[usize], a: usize, b: usize) -> f64 {
    let m = r.len();
    let mut s = 0.0;
    for k in 0..m {
        s += w[(a, k)] * d[(r[a], r[k])] + w[(k, a)] * d[(r[k], r[a])];
        if k != a {
            s += w[(b, k)] * d[(r[b], r[k])] + w[(k, b)] * d[(r[k], r[b])];
        }
    }
    // the diagonal terms (a, a) and (b, b) were counted twice
    s - w[(a, a)] * d[(r[a], r[a])] - w[(b, b)] * d[(r[b], r[b])]
}

const MAX_SWEEPS: usize = 10_000;

/// Maximizes the QAP objective by first-improvement pairwise swaps, keeping
/// the best local optimum over `restarts` starts. The first start is the
/// identity; the others are shuffles drawn from `seed`.
pub fn qap_local_search(w: &Matrix, d: &Matrix, restarts: usize, seed: u64) -> Permutation {
    let m = w.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..restarts.max(1) {
        let mut r: Vec<usize> = (0..m).collect();
        if restart > 0 {
            r.shuffle(&mut rng);
        }
        for _ in 0..MAX_SWEEPS {
            let mut improved = false;
            for a in 0..m {
                for b in a + 1..m {
                    let before = touched(w, d, &r, a, b);
                    r.swap(a, b);
                    let after = touched(w, d, &r, a, b);
                    if after - before > 1e-13 * (1.0 + before.abs()) {
                        improved = true;
                    } else {
                        r.swap(a, b);
                    }
                }
            }
            if !improved {
                break;
            }
        }
        let sigma = Permutation::from_ranks(r.clone()).expect("swaps keep a permutation");
        let value = qap_objective(w, d, &sigma);
        let better = match &best {
            None => true,
            Some((bv, br)) => value > *bv || (value == *bv && r < *br),
        };
        if better {
            best = Some((value, r));
        }
    }
    Permutation::from_ranks(best.expect("at least one restart").1).expect("valid ranks")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::permutations;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn touched_delta_matches_full_objective() {
        let mut s = 7u64;
        let m = 5;
        let w = Matrix::from_vec(m, m, (0..m * m).map(|_| lcg(&mut s) - 0.5).collect()).unwrap();
        let d = Matrix::from_vec(m, m, (0..m * m).map(|_| lcg(&mut s)).collect()).unwrap();
        let mut r: Vec<usize> = vec![3, 0, 4, 1, 2];
        for (a, b) in [(0, 1), (1, 4), (2, 3)] {
            let full0 = qap_objective(&w, &d, &Permutation::from_ranks(r.clone()).unwrap());
            let t0 = touched(&w, &d, &r, a, b);
            r.swap(a, b);
            let full1 = qap_objective(&w, &d, &Permutation::from_ranks(r.clone()).unwrap());
            let t1 = touched(&w, &d, &r, a, b);
            assert!(((full1 - full0) - (t1 - t0)).abs() < 1e-12);
        }
    }

    #[test]
    fn acyclic_instance_recovers_order() {
        // items should appear in the order 2, 0, 3, 1
        let target = [2usize, 0, 3, 1];
        let m = 4;
        let mut g = Matrix::zeros(m, m);
        for (p, &a) in target.iter().enumerate() {
            for &b in &target[p + 1..] {
                g[(a, b)] = 1.0 + (a + b) as f64;
            }
        }
        let sigma = greedy_arcset(&g);
        assert_eq!(sigma.order(), target.to_vec());
        assert_eq!(arcset_objective(&g, &sigma), 0.0);
    }

    #[test]
    fn symmetric_weights_give_identity() {
        let m = 5;
        let mut g = Matrix::zeros(m, m);
        for j in 0..m {
            for l in 0..m {
                if j != l {
                    g[(j, l)] = 0.3;
                }
            }
        }
        assert_eq!(greedy_arcset(&g), Permutation::identity(m));
        assert_eq!(greedy_arcset(&Matrix::zeros(m, m)), Permutation::identity(m));
    }

    #[test]
    fn qap_trivial_and_aligned() {
        let one = Matrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(qap_local_search(&one, &one, 3, 1), Permutation::identity(1));
        let mut s = 11u64;
        for m in 2..=6 {
            let mut d = Matrix::zeros(m, m);
            for j in 0..m {
                for l in 0..m {
                    d[(j, l)] = lcg(&mut s);
                }
            }
            let sigma = qap_local_search(&d, &d, 4, 9);
            assert_eq!(sigma, Permutation::identity(m));
            let best = permutations(m)
                .map(|p| qap_objective(&d, &d, &p))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((qap_objective(&d, &d, &sigma) - best).abs() < 1e-12);
        }
    }

    #[test]
    fn qap_is_deterministic_per_seed() {
        let mut s = 5u64;
        let m = 9;
        let w = Matrix::from_vec(m, m, (0..m * m).map(|_| lcg(&mut s) - 0.5).collect()).unwrap();
        let d = Matrix::from_vec(m, m, (0..m * m).map(|_| lcg(&mut s)).collect()).unwrap();
        assert_eq!(qap_local_search(&w, &d, 5, 42), qap_local_search(&w, &d, 5, 42));
    }
}
