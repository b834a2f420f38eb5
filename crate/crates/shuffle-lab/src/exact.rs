//! Exact distribution computations over S_n for small n.
//!
//! Permutations are indexed by the lexicographic Lehmer rank of the one-line
//! vector `[sigma(1), ..., sigma(n)]`, where `sigma(c)` is the position of
//! card c. All CSV dumps use this rank order.
//!
//! Probability evolution is matrix-free: each step pushes mass through all
//! n^2 (removal, insertion) moves with weight 1/n^2. Enumeration-based
//! oracles (`conditional_position_law`, `pair_law`, `conditioned_path_law`,
//! `decomposition_check`) count move sequences with exact integers and
//! divide once at the end.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// n! as u64; n <= 20.
pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Lexicographic Lehmer rank of a permutation given in one-line notation
/// (entries are a permutation of 1..=n).
pub fn lehmer_rank(perm: &[u32]) -> u64 {
    let n = perm.len();
    let mut rank = 0u64;
    for a in 0..n {
        let mut smaller_later = 0u64;
        for b in a + 1..n {
            if perm[b] < perm[a] {
                smaller_later += 1;
            }
        }
        rank += smaller_later * factorial(n - 1 - a);
    }
    rank
}

/// Inverse of [`lehmer_rank`].
pub fn lehmer_unrank(n: usize, mut rank: u64) -> Vec<u32> {
    let mut avail: Vec<u32> = (1..=n as u32).collect();
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let f = factorial(n - 1 - a);
        let idx = (rank / f) as usize;
        rank %= f;
        out.push(avail.remove(idx));
    }
    out
}

/// New position of a card at `pos` after the move "remove position i,
/// reinsert at position j" (the cycle c_{i,j} acting on positions).
#[inline]
pub fn move_position_map(i: usize, j: usize, pos: usize) -> usize {
    if pos == i {
        j
    } else if i < j && pos > i && pos <= j {
        pos - 1
    } else if i > j && pos >= j && pos < i {
        pos + 1
    } else {
        pos
    }
}

/// Exact probability vector over S_n, indexed by Lehmer rank of sigma.
#[derive(Clone, Debug)]
pub struct DistributionVector {
    pub n: usize,
    pub probs: Vec<f64>,
}

impl DistributionVector {
    pub fn point_mass_identity(n: usize) -> DistributionVector {
        let mut probs = vec![0.0; factorial(n) as usize];
        probs[0] = 1.0; // identity has rank 0
        DistributionVector { n, probs }
    }

    pub fn uniform(n: usize) -> DistributionVector {
        let m = factorial(n) as usize;
        DistributionVector {
            n,
            probs: vec![1.0 / m as f64; m],
        }
    }

    /// Checks non-negativity and normalization within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let sum: f64 = self.probs.iter().sum();
        (sum - 1.0).abs() <= tol && self.probs.iter().all(|&p| p >= -tol)
    }
}

/// Total variation distance to the uniform measure.
pub fn tv_to_uniform(dist: &DistributionVector) -> f64 {
    let u = 1.0 / dist.probs.len() as f64;
    0.5 * dist.probs.iter().map(|&p| (p - u).abs()).sum::<f64>()
}

/// Total variation distance between two vectors on the same S_n.
pub fn tv_distance(a: &DistributionVector, b: &DistributionVector) -> f64 {
    assert_eq!(a.n, b.n);
    0.5 * a
        .probs
        .iter()
        .zip(&b.probs)
        .map(|(&p, &q)| (p - q).abs())
        .sum::<f64>()
}

pub const DEFAULT_EVOLVE_CAP: usize = 8;
const HARD_EVOLVE_CAP: usize = 9;

/// One-step pushforward engine with a precomputed rank-transition table.
pub struct Evolver {
    pub n: usize,
    nfact: usize,
    /// targets[r * n^2 + k] = rank after applying move k to permutation r.
    targets: Vec<u32>,
}

// Chunk size for the fixed summation tree: partial accumulators are always
// formed over these source ranges and folded in index order, so the result
// is bit-identical for any worker count.
const EVOLVE_CHUNK: usize = 8192;

impl Evolver {
    pub fn new(n: usize) -> Result<Evolver> {
        Self::with_cap(n, DEFAULT_EVOLVE_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Evolver> {
        let cap = cap.min(HARD_EVOLVE_CAP);
        if n < 2 || n > cap {
            return Err(Error::CapExceeded {
                what: "exact evolution size",
                detail: format!("n={n}, cap={cap}"),
            });
        }
        let nfact = factorial(n) as usize;
        let n2 = n * n;
        let targets: Vec<u32> = (0..nfact)
            .into_par_iter()
            .flat_map_iter(|r| {
                let sigma = lehmer_unrank(n, r as u64);
                let mut row = Vec::with_capacity(n2);
                let mut new_sigma = vec![0u32; n];
                for i in 1..=n {
                    for j in 1..=n {
                        for c in 0..n {
                            new_sigma[c] =
                                move_position_map(i, j, sigma[c] as usize) as u32;
                        }
                        row.push(lehmer_rank(&new_sigma) as u32);
                    }
                }
                row
            })
            .collect();
        Ok(Evolver { n, nfact, targets })
    }

    /// One exact shuffle step. Parallel over fixed source chunks, merged in
    /// chunk order (result independent of worker count).
    pub fn step(&self, dist: &DistributionVector) -> DistributionVector {
        assert_eq!(dist.n, self.n);
        let n2 = self.n * self.n;
        let w = 1.0 / n2 as f64;
        let partials: Vec<Vec<f64>> = dist
            .probs
            .par_chunks(EVOLVE_CHUNK)
            .enumerate()
            .map(|(chunk_idx, chunk)| {
                let base = chunk_idx * EVOLVE_CHUNK;
                let mut acc = vec![0.0f64; self.nfact];
                for (off, &p) in chunk.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let pw = p * w;
                    let row = &self.targets[(base + off) * n2..(base + off + 1) * n2];
                    for &tr in row {
                        acc[tr as usize] += pw;
                    }
                }
                acc
            })
            .collect();
        let mut probs = vec![0.0f64; self.nfact];
        for acc in partials {
            for (dst, v) in probs.iter_mut().zip(acc) {
                *dst += v;
            }
        }
        DistributionVector { n: self.n, probs }
    }

    /// Exact law of the walk after `t` steps from the identity.
    pub fn evolve(&self, t: u64) -> DistributionVector {
        let mut dist = DistributionVector::point_mass_identity(self.n);
        for _ in 0..t {
            dist = self.step(&dist);
        }
        dist
    }
}

/// Exact law of Pi_t from the identity (n <= 8 by default).
pub fn evolve(n: usize, t: u64) -> Result<DistributionVector> {
    Ok(Evolver::new(n)?.evolve(t))
}

const COND_N_CAP: usize = 6;
const COND_T_CAP: u64 = 5;

fn check_cond_caps(n: usize, t: u64) -> Result<()> {
    if n < 2 || n > COND_N_CAP || t > COND_T_CAP {
        return Err(Error::CapExceeded {
            what: "conditional enumeration",
            detail: format!("n={n} (cap {COND_N_CAP}), t={t} (cap {COND_T_CAP})"),
        });
    }
    Ok(())
}

/// Per-state move counts of the surviving-card position chain: from position
/// p there are n(n-1) allowed (removal, insertion) pairs; entry p' holds how
/// many land on p'. Obtained by counting moves, not from the closed-form
/// kernel.
fn conditional_move_counts(n: usize, p: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1]; // 1-indexed
    for i in 1..=n {
        if i == p {
            continue; // would remove the tracked card
        }
        let p_tmp = if i < p { p - 1 } else { p };
        for ins in 1..=n {
            let p_new = if ins <= p_tmp { p_tmp + 1 } else { p_tmp };
            counts[p_new] += 1;
        }
    }
    counts
}

/// Exact law of Pi_t(j) given j in A^t, by counting all allowed move
/// sequences with exact integers. Returns the vector indexed by position 1..n.
pub fn conditional_position_law(n: usize, j: usize, t: u64) -> Result<Vec<f64>> {
    check_cond_caps(n, t)?;
    if j < 1 || j > n {
        return Err(Error::OutOfRange { pos: j, n });
    }
    let mut counts = vec![0u128; n + 1];
    counts[j] = 1;
    for _ in 0..t {
        let mut next = vec![0u128; n + 1];
        for p in 1..=n {
            if counts[p] == 0 {
                continue;
            }
            for (p_new, &c) in conditional_move_counts(n, p).iter().enumerate() {
                if c > 0 {
                    next[p_new] += counts[p] * c as u128;
                }
            }
        }
        counts = next;
    }
    let total = (n as u128 * (n as u128 - 1)).pow(t as u32);
    Ok((1..=n).map(|p| counts[p] as f64 / total as f64).collect())
}

/// Joint law over [n] x [n] of the positions of two never-removed cards.
#[derive(Clone, Debug)]
pub struct PairLawTable {
    pub n: usize,
    pub t_prime: u64,
    /// Start pair (m1, m2): m1 in [n-1] is the position of card i in the
    /// (n-1)-card deck without j; m2 in [n] is j's insertion position.
    pub start: (usize, usize),
    /// Row-major over (pos_i, pos_j): index (pi-1) * n + (pj-1).
    pub probs: Vec<f64>,
}

impl PairLawTable {
    pub fn prob(&self, pi: usize, pj: usize) -> f64 {
        self.probs[(pi - 1) * self.n + (pj - 1)]
    }

    /// Mass of a product set A x B of positions.
    pub fn mass<FA: Fn(usize) -> bool, FB: Fn(usize) -> bool>(&self, in_a: FA, in_b: FB) -> f64 {
        let mut s = 0.0;
        for pi in 1..=self.n {
            if !in_a(pi) {
                continue;
            }
            for pj in 1..=self.n {
                if in_b(pj) {
                    s += self.prob(pi, pj);
                }
            }
        }
        s
    }
}

const PAIR_N_CAP: usize = 7;
const PAIR_T_CAP: u64 = 4;

/// Exact P^{n,t'}_{m1,m2}: evolve the positions of two marked cards for t'
/// steps, conditioned on never removing either, starting from j at position
/// m2 and i at position m1 among the other n-1 cards.
pub fn pair_law(n: usize, t_prime: u64, start: (usize, usize)) -> Result<PairLawTable> {
    let (m1, m2) = start;
    if n < 3 || n > PAIR_N_CAP || t_prime > PAIR_T_CAP {
        return Err(Error::CapExceeded {
            what: "pair-law enumeration",
            detail: format!("n={n} (cap {PAIR_N_CAP}), t'={t_prime} (cap {PAIR_T_CAP})"),
        });
    }
    if m1 < 1 || m1 > n - 1 {
        return Err(Error::OutOfRange { pos: m1, n: n - 1 });
    }
    if m2 < 1 || m2 > n {
        return Err(Error::OutOfRange { pos: m2, n });
    }
    // Insert j at m2 into the (n-1)-deck where i sits at m1.
    let pos_i0 = if m2 <= m1 { m1 + 1 } else { m1 };
    let idx = |pi: usize, pj: usize| (pi - 1) * n + (pj - 1);
    let mut counts = vec![0u128; n * n];
    counts[idx(pos_i0, m2)] = 1;
    for _ in 0..t_prime {
        let mut next = vec![0u128; n * n];
        for pi in 1..=n {
            for pj in 1..=n {
                let c = counts[idx(pi, pj)];
                if c == 0 {
                    continue;
                }
                for r in 1..=n {
                    if r == pi || r == pj {
                        continue;
                    }
                    let ti = if r < pi { pi - 1 } else { pi };
                    let tj = if r < pj { pj - 1 } else { pj };
                    for ins in 1..=n {
                        let ni = if ins <= ti { ti + 1 } else { ti };
                        let nj = if ins <= tj { tj + 1 } else { tj };
                        next[idx(ni, nj)] += c;
                    }
                }
            }
        }
        counts = next;
    }
    let total = (n as u128 * (n as u128 - 2)).pow(t_prime as u32);
    let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(PairLawTable {
        n,
        t_prime,
        start,
        probs,
    })
}

/// Average of the pair law over all n(n-1) start pairs; stationarity says
/// this is uniform on distinct position pairs.
pub fn pair_law_start_average(n: usize, t_prime: u64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; n * n];
    let mut count = 0usize;
    for m1 in 1..=n - 1 {
        for m2 in 1..=n {
            let tbl = pair_law(n, t_prime, (m1, m2))?;
            for (a, p) in acc.iter_mut().zip(&tbl.probs) {
                *a += p;
            }
            count += 1;
        }
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    Ok(acc)
}

/// Exact path law of (Pi_m(j))_{m=0..t} conditioned on j in A^t, computed by
/// brute-force replay of every (removal, insertion) sequence on a plain
/// vector deck. Independent of both the treap deck and the closed-form
/// kernel; used as the oracle for both.
pub fn conditioned_path_law(n: usize, j: usize, t: u64) -> Result<BTreeMap<Vec<u8>, f64>> {
    check_cond_caps(n, t)?;
    if j < 1 || j > n {
        return Err(Error::OutOfRange { pos: j, n });
    }
    let t = t as usize;
    let mut paths: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let n_moves = n * n;
    let total_seqs = (n_moves as u64).pow(t as u32);
    let mut surviving = 0u64;
    let mut deck: Vec<u32>;
    for seq in 0..total_seqs {
        deck = (1..=n as u32).collect();
        let mut code = seq;
        let mut path = Vec::with_capacity(t + 1);
        path.push(j as u8);
        let mut alive = true;
        for _ in 0..t {
            let mv = (code % n_moves as u64) as usize;
            code /= n_moves as u64;
            let (i, ins) = (mv / n + 1, mv % n + 1);
            let card = deck.remove(i - 1);
            if card as usize == j {
                alive = false;
                break;
            }
            deck.insert(ins - 1, card);
            let pos = deck.iter().position(|&c| c as usize == j).unwrap() + 1;
            path.push(pos as u8);
        }
        if alive {
            surviving += 1;
            *paths.entry(path).or_insert(0) += 1;
        }
    }
    Ok(paths
        .into_iter()
        .map(|(k, v)| (k, v as f64 / surviving as f64))
        .collect())
}

/// Marginal at time t of [`conditioned_path_law`].
pub fn conditioned_marginal_from_paths(
    paths: &BTreeMap<Vec<u8>, f64>,
    n: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (path, &p) in paths {
        out[*path.last().unwrap() as usize - 1] += p;
    }
    out
}

/// Full report of the mixture-decomposition identity for the pair law
/// conditioned on last-removal times (tau_i, tau_j) = (t1, t2).
#[derive(Clone, Debug)]
pub struct DecompositionReport {
    /// q^+_m for m = 1..n (index m-1); P(Pi_{t2-1}(i) = m, Pi_{t2-1}(j) > m).
    pub q_plus: Vec<f64>,
    /// q^-_m likewise with j below m.
    pub q_minus: Vec<f64>,
    /// max_m |q^+_m + q^-_m - 1/n|.
    pub q_sum_max_dev: f64,
    /// max abs difference between the enumerated conditional pair law and
    /// the q-weighted mixture of pair laws.
    pub identity_max_dev: f64,
    /// Number of move sequences satisfying the conditioning event.
    pub conditioned_sequences: u64,
}

/// Enumerates every move sequence of length t on the full deck and checks
/// the decomposition of the (tau_i = t1, tau_j = t2)-conditioned pair law
/// into a q-weighted mixture of never-removed pair laws.
pub fn decomposition_check(
    n: usize,
    card_i: usize,
    card_j: usize,
    t1: u64,
    t2: u64,
    t: u64,
) -> Result<DecompositionReport> {
    if !(1 <= t1 && t1 < t2 && t2 <= t) {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= t1 < t2 <= t, got t1={t1}, t2={t2}, t={t}"
        )));
    }
    if card_i == card_j || card_i < 1 || card_j < 1 || card_i > n || card_j > n {
        return Err(Error::InvalidConfig("need distinct cards i, j in [n]".into()));
    }
    if n > 5 || t > 4 {
        return Err(Error::CapExceeded {
            what: "decomposition enumeration",
            detail: format!("n={n} (cap 5), t={t} (cap 4)"),
        });
    }
    let t = t as usize;
    let n_moves = n * n;
    let total_seqs = (n_moves as u64).pow(t as u32);
    let mut cond = 0u64;
    let mut mu_counts = vec![0u64; n * n];
    let mut qp_counts = vec![0u64; n];
    let mut qm_counts = vec![0u64; n];
    for seq in 0..total_seqs {
        let mut deck: Vec<u32> = (1..=n as u32).collect();
        let mut code = seq;
        let mut last_i = 0u64;
        let mut last_j = 0u64;
        let mut snap = (0usize, 0usize); // positions at time t2-1
        for step in 1..=t {
            let mv = (code % n_moves as u64) as usize;
            code /= n_moves as u64;
            let (i, ins) = (mv / n + 1, mv % n + 1);
            let card = deck.remove(i - 1);
            deck.insert(ins - 1, card);
            if card as usize == card_i {
                last_i = step as u64;
            } else if card as usize == card_j {
                last_j = step as u64;
            }
            if step as u64 == t2 - 1 {
                let pi = deck.iter().position(|&c| c as usize == card_i).unwrap() + 1;
                let pj = deck.iter().position(|&c| c as usize == card_j).unwrap() + 1;
                snap = (pi, pj);
            }
        }
        if last_i != t1 || last_j != t2 {
            continue;
        }
        cond += 1;
        let pi = deck.iter().position(|&c| c as usize == card_i).unwrap();
        let pj = deck.iter().position(|&c| c as usize == card_j).unwrap();
        mu_counts[pi * n + pj] += 1;
        let (m, pj_snap) = snap;
        if pj_snap > m {
            qp_counts[m - 1] += 1;
        } else {
            qm_counts[m - 1] += 1;
        }
    }
    if cond == 0 {
        return Err(Error::InvalidConfig(
            "conditioning event has zero probability".into(),
        ));
    }
    let cf = cond as f64;
    let q_plus: Vec<f64> = qp_counts.iter().map(|&c| c as f64 / cf).collect();
    let q_minus: Vec<f64> = qm_counts.iter().map(|&c| c as f64 / cf).collect();
    let q_sum_max_dev = (0..n)
        .map(|m| (q_plus[m] + q_minus[m] - 1.0 / n as f64).abs())
        .fold(0.0, f64::max);

    // Mixture side: (1/n) sum_{m2} { sum_{m1<=n-1} q+_{m1} P_{m1,m2}
    //                               + sum_{m1>=2} q-_{m1} P_{m1-1,m2} }.
    let tp = t as u64 - t2;
    let mut mix = vec![0.0f64; n * n];
    for m2 in 1..=n {
        for m1 in 1..=n {
            if m1 <= n - 1 && q_plus[m1 - 1] > 0.0 {
                let tbl = pair_law(n, tp, (m1, m2))?;
                for (dst, &p) in mix.iter_mut().zip(&tbl.probs) {
                    *dst += q_plus[m1 - 1] * p / n as f64;
                }
            }
            if m1 >= 2 && q_minus[m1 - 1] > 0.0 {
                let tbl = pair_law(n, tp, (m1 - 1, m2))?;
                for (dst, &p) in mix.iter_mut().zip(&tbl.probs) {
                    *dst += q_minus[m1 - 1] * p / n as f64;
                }
            }
        }
    }
    let identity_max_dev = mu_counts
        .iter()
        .zip(&mix)
        .map(|(&c, &m)| (c as f64 / cf - m).abs())
        .fold(0.0, f64::max);
    Ok(DecompositionReport {
        q_plus,
        q_minus,
        q_sum_max_dev,
        identity_max_dev,
        conditioned_sequences: cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_unrank_roundtrip_small() {
        for n in 1..=6usize {
            for r in 0..factorial(n) {
                let p = lehmer_unrank(n, r);
                assert_eq!(lehmer_rank(&p), r);
            }
        }
    }

    #[test]
    fn evolve_t0_is_point_mass() {
        let d = evolve(4, 0).unwrap();
        assert_eq!(d.probs[0], 1.0);
        assert_eq!(d.probs.iter().filter(|&&p| p > 0.0).count(), 1);
    }

    #[test]
    fn one_step_law_n3_matches_increment_table() {
        // mass 1/3 on id, 2/9 on each adjacent transposition, 1/9 on each
        // 3-cycle.
        let d = evolve(3, 1).unwrap();
        let by_perm: Vec<(Vec<u32>, f64)> = (0..6)
            .map(|r| (lehmer_unrank(3, r), d.probs[r as usize]))
            .collect();
        let expect = |perm: &[u32]| -> f64 {
            match perm {
                [1, 2, 3] => 1.0 / 3.0,
                [2, 1, 3] | [1, 3, 2] => 2.0 / 9.0,
                [3, 1, 2] | [2, 3, 1] => 1.0 / 9.0,
                [3, 2, 1] => 0.0, // |i-j| = 2 transposition is not a cycle c_{i,j}
                _ => unreachable!(),
            }
        };
        for (perm, p) in by_perm {
            assert!(
                (p - expect(&perm)).abs() < 1e-15,
                "perm {perm:?} has mass {p}"
            );
        }
    }

    #[test]
    fn uniform_is_stationary() {
        let ev = Evolver::new(5).unwrap();
        let u = DistributionVector::uniform(5);
        let stepped = ev.step(&u);
        for (&a, &b) in u.probs.iter().zip(&stepped.probs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_preserves_validity() {
        let ev = Evolver::new(5).unwrap();
        let mut d = DistributionVector::point_mass_identity(5);
        for _ in 0..25 {
            d = ev.step(&d);
            assert!(d.is_valid(1e-12));
        }
    }

    #[test]
    fn tv_point_mass_n4() {
        let d = DistributionVector::point_mass_identity(4);
        assert!((tv_to_uniform(&d) - (1.0 - 1.0 / 24.0)).abs() < 1e-15);
        assert!(tv_to_uniform(&DistributionVector::uniform(4)) < 1e-15);
    }

    #[test]
    fn tv_curve_monotone_nonincreasing_n5() {
        let ev = Evolver::new(5).unwrap();
        let mut d = DistributionVector::point_mass_identity(5);
        let mut prev = tv_to_uniform(&d);
        for _ in 1..=60 {
            d = ev.step(&d);
            let cur = tv_to_uniform(&d);
            assert!(cur <= prev + 1e-12);
            prev = cur;
        }
        assert!(prev < 0.05, "d_5(60) = {prev}");
    }

    #[test]
    fn conditional_law_t0_is_point_mass() {
        let law = conditional_position_law(5, 3, 0).unwrap();
        assert_eq!(law[2], 1.0);
    }

    #[test]
    fn conditional_law_n4_one_step() {
        // Kernel values at n=4, i=2: (1/4, 5/12, 1/3) for down/stay/up.
        let law = conditional_position_law(4, 2, 1).unwrap();
        assert!((law[0] - 0.25).abs() < 1e-15);
        assert!((law[1] - 5.0 / 12.0).abs() < 1e-15);
        assert!((law[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(law[3].abs() < 1e-15);
    }

    #[test]
    fn conditional_law_matches_full_deck_bruteforce() {
        for (n, j, t) in [(4usize, 2usize, 3u64), (5, 3, 2), (5, 1, 3)] {
            let law = conditional_position_law(n, j, t).unwrap();
            let paths = conditioned_path_law(n, j, t).unwrap();
            let marg = conditioned_marginal_from_paths(&paths, n);
            for (a, b) in law.iter().zip(&marg) {
                assert!((a - b).abs() < 1e-12, "n={n} j={j} t={t}");
            }
        }
    }

    #[test]
    fn pair_law_t0_point_mass() {
        let tbl = pair_law(5, 0, (2, 4)).unwrap();
        // m2=4 > m1=2, so i starts at 2 and j at 4.
        assert_eq!(tbl.prob(2, 4), 1.0);
        let tbl2 = pair_law(5, 0, (2, 1)).unwrap();
        // m2=1 <= m1=2: i shifts to 3.
        assert_eq!(tbl2.prob(3, 1), 1.0);
    }

    #[test]
    fn pair_law_rows_normalized_and_distinct() {
        let tbl = pair_law(5, 2, (3, 2)).unwrap();
        let sum: f64 = tbl.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for p in 1..=5 {
            assert!(tbl.prob(p, p) == 0.0);
        }
    }

    #[test]
    fn pair_law_average_is_uniform_on_distinct_pairs() {
        let n = 5;
        let avg = pair_law_start_average(n, 2).unwrap();
        let u = 1.0 / (n * (n - 1)) as f64;
        for pi in 1..=n {
            for pj in 1..=n {
                let v = avg[(pi - 1) * n + (pj - 1)];
                let want = if pi == pj { 0.0 } else { u };
                assert!((v - want).abs() < 1e-12, "({pi},{pj}): {v}");
            }
        }
    }

    #[test]
    fn decomposition_identity_holds_n4() {
        let rep = decomposition_check(4, 1, 2, 1, 2, 3).unwrap();
        assert!(rep.q_sum_max_dev < 1e-12, "{}", rep.q_sum_max_dev);
        assert!(rep.identity_max_dev < 1e-10, "{}", rep.identity_max_dev);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn rank_unrank_roundtrip_n8(r in 0u64..40320) {
            let p = lehmer_unrank(8, r);
            prop_assert_eq!(lehmer_rank(&p), r);
        }

        #[test]
        fn move_map_is_bijection(n in 2usize..9, i in 1usize..9, j in 1usize..9) {
            let (i, j) = (i.min(n), j.min(n));
            let mut seen = vec![false; n + 1];
            for p in 1..=n {
                let q = move_position_map(i, j, p);
                prop_assert!((1..=n).contains(&q));
                prop_assert!(!seen[q]);
                seen[q] = true;
            }
        }
    }
}
