//! The band-localization statistic, its exact uniform-measure moments, the
//! time schedule for the lower-bound experiment, and empirical CLT /
//! delocalization tests for the conditioned single-card chain.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::deck::{Deck, SurvivorSet};
use crate::error::{Error, Result};
use crate::kernel::{normal_tail, ConditionalKernel};
use crate::rng::{self, tag};

/// Central band D^n = [n] ∩ [n(1-eps)/2, n(1+eps)/2] and displacement
/// radius alpha * sqrt(n ln n). A card j in the band is counted when its
/// position is within the radius of j.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct BandConfig {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    /// first card of the band: ceil(n(1-eps)/2)
    pub lo: usize,
    /// last card of the band: floor(n(1+eps)/2)
    pub hi: usize,
    /// alpha * sqrt(n ln n), unrounded
    pub radius: f64,
}

impl BandConfig {
    pub fn new(n: usize, epsilon: f64, alpha: f64) -> Result<BandConfig> {
        if !(0.0 < epsilon && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("epsilon {epsilon} not in (0,1)")));
        }
        if alpha <= 0.0 || n < 2 {
            return Err(Error::InvalidConfig(format!("alpha {alpha} / n {n} invalid")));
        }
        let lo = ((n as f64 * (1.0 - epsilon) / 2.0).ceil() as usize).max(1);
        let hi = ((n as f64 * (1.0 + epsilon) / 2.0).floor() as usize).min(n);
        if lo > hi {
            return Err(Error::InvalidConfig(format!("band empty: lo {lo} > hi {hi}")));
        }
        let radius = alpha * (n as f64 * (n as f64).ln()).sqrt();
        if radius <= 0.0 {
            return Err(Error::InvalidConfig("zero displacement radius".into()));
        }
        Ok(BandConfig {
            n,
            epsilon,
            alpha,
            lo,
            hi,
            radius,
        })
    }

    pub fn band_size(&self) -> usize {
        self.hi - self.lo + 1
    }

    #[inline]
    pub fn card_counts(&self, j: usize, position: usize) -> bool {
        (position as f64 - j as f64).abs() <= self.radius
    }
}

/// Cards of the band within the radius, split by whether they were ever
/// removed during the shuffle.
#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct DeltaCounts {
    pub total: u64,
    pub survivors: u64,
    pub removed: u64,
}

/// Counts the statistic on a shuffled deck.
pub fn delta_counts(deck: &Deck, survivors: &SurvivorSet, band: &BandConfig) -> Result<DeltaCounts> {
    if deck.n() != band.n {
        return Err(Error::InvalidConfig(format!(
            "deck size {} does not match band n {}",
            deck.n(),
            band.n
        )));
    }
    let mut c = DeltaCounts::default();
    for j in band.lo..=band.hi {
        if band.card_counts(j, deck.position_of(j as u32)) {
            c.total += 1;
            if survivors.contains(j as u32) {
                c.survivors += 1;
            } else {
                c.removed += 1;
            }
        }
    }
    Ok(c)
}

/// Total count from a position table: positions[j-1] is the position of
/// card j. Used for sampling under the uniform measure.
pub fn delta_total_from_positions(positions: &[u32], band: &BandConfig) -> u64 {
    (band.lo..=band.hi)
        .filter(|&j| band.card_counts(j, positions[j - 1] as usize))
        .count() as u64
}

/// Uniform random position table via Fisher-Yates.
pub fn sample_uniform_positions(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<u32> {
    let mut pos: Vec<u32> = (1..=n as u32).collect();
    pos.shuffle(rng);
    pos
}

/// Exact mean and a variance upper bound of the statistic under the uniform
/// measure: mean = |D| (1 + 2 floor(radius)) / n, variance bounded by
/// mean + mean^2/(n-1). `formula_valid` is false when the band sits too
/// close to the deck edge for the per-card probability to be exact.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct UniformMoments {
    pub mean: f64,
    pub variance_bound: f64,
    pub formula_valid: bool,
}

pub fn uniform_delta_moments(band: &BandConfig) -> UniformMoments {
    let n = band.n as f64;
    let per_card = (1.0 + 2.0 * band.radius.floor()) / n;
    let mean = band.band_size() as f64 * per_card;
    UniformMoments {
        mean,
        variance_bound: mean + mean * mean / (n - 1.0),
        formula_valid: n * (1.0 - band.epsilon) / 2.0 >= band.radius,
    }
}

/// True iff total - 2 eps alpha sqrt(n ln n) >= k sqrt(2 eps alpha) (n ln n)^{1/4}.
pub fn threshold_event(counts: &DeltaCounts, band: &BandConfig, k: f64) -> bool {
    let nlogn = band.n as f64 * (band.n as f64).ln();
    let lhs = counts.total as f64 - 2.0 * band.epsilon * band.alpha * nlogn.sqrt();
    lhs >= k * (2.0 * band.epsilon * band.alpha).sqrt() * nlogn.powf(0.25)
}

/// v(alpha) = 1 - 4 * normal_tail(alpha * sqrt(8/3)).
pub fn v_alpha(alpha: f64) -> f64 {
    1.0 - 4.0 * normal_tail(alpha * (8.0f64 / 3.0).sqrt())
}

/// The experiment's time schedule and derived survival quantities.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ScheduleParams {
    pub n: usize,
    pub c_n: f64,
    /// floor(3/4 n ln n - 1/4 n ln ln n - c_n n)
    pub t_n: u64,
    /// ((n-1)/n)^{t_n}: per-card survival probability
    pub p_t_n: f64,
    /// n p_t_n / (n ln n)^{1/4}; its log should be close to c_n
    pub scaled_survival: f64,
    /// ln(scaled_survival) - c_n
    pub residual: f64,
}

pub fn schedule(n: usize, c_n: f64) -> Result<ScheduleParams> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("n {n} too small for a schedule")));
    }
    let nf = n as f64;
    let raw = 0.75 * nf * nf.ln() - 0.25 * nf * nf.ln().ln() - c_n * nf;
    if raw < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "schedule time is negative at n={n}, c_n={c_n}"
        )));
    }
    let t_n = raw.floor() as u64;
    let p_t_n = ((nf - 1.0) / nf).powi(t_n as i32);
    let scaled_survival = nf * p_t_n / (nf * nf.ln()).powf(0.25);
    Ok(ScheduleParams {
        n,
        c_n,
        t_n,
        p_t_n,
        scaled_survival,
        residual: scaled_survival.ln() - c_n,
    })
}

impl ScheduleParams {
    /// Expected number of band survivors: |D| * p_t_n.
    pub fn expected_band_survivors(&self, band: &BandConfig) -> f64 {
        band.band_size() as f64 * self.p_t_n
    }
}

/// Scaling factor for the single-card CLT: j(n-j)/n^2 covers the edge,
/// interior, and boundary regimes at finite n.
pub fn clt_lambda(n: usize, j: usize) -> f64 {
    let (n, j) = (n as f64, j as f64);
    j * (n - j) / (n * n)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CltResult {
    pub n: usize,
    pub j: usize,
    pub t: u64,
    pub replicas: u64,
    pub lambda: f64,
    /// Kolmogorov-Smirnov distance of the standardized sample to N(0,1).
    pub ks: f64,
    /// n^2 / (t j (n-j)): must be small for the normal limit to be in force
    pub condition_lower: f64,
    /// t / (j (n-j)): must be small likewise
    pub condition_upper: f64,
    pub degenerate: bool,
}

/// KS distance of a sample to the standard normal.
pub fn ks_to_standard_normal(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = 1.0 - normal_tail(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max((f - (i as f64 + 1.0) / n).abs());
    }
    d
}

/// Samples the conditioned chain from j for t steps, standardizes the final
/// displacement by sqrt(2 t lambda), and measures normality. The conditioned
/// chain has exactly the law of the card position given survival, so no
/// full-deck rejection sampling is needed.
pub fn clt_test(n: usize, j: usize, t: u64, replicas: u64, seed: u64) -> Result<CltResult> {
    let kernel = ConditionalKernel::new(n)?;
    if j < 1 || j > n {
        return Err(Error::OutOfRange { pos: j, n });
    }
    if replicas == 0 {
        return Err(Error::InvalidConfig("need at least one replica".into()));
    }
    let lambda = clt_lambda(n, j);
    let (nf, jf, tf) = (n as f64, j as f64, t as f64);
    let degenerate = t == 0 || lambda == 0.0;
    if degenerate {
        return Ok(CltResult {
            n,
            j,
            t,
            replicas,
            lambda,
            ks: f64::NAN,
            condition_lower: f64::INFINITY,
            condition_upper: f64::INFINITY,
            degenerate,
        });
    }
    let sd = (2.0 * tf * lambda).sqrt();
    let mut samples: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::CHAIN, rep);
            let mut state = j;
            for _ in 0..t {
                state = kernel.sample_step(state, &mut rng);
            }
            (state as f64 - jf) / sd
        })
        .collect();
    Ok(CltResult {
        n,
        j,
        t,
        replicas,
        lambda,
        ks: ks_to_standard_normal(&mut samples),
        condition_lower: nf * nf / (tf * jf * (nf - jf)),
        condition_upper: tf / (jf * (nf - jf)),
        degenerate,
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DelocalizationResult {
    pub n: usize,
    pub t: u64,
    pub alpha: f64,
    pub replicas: u64,
    /// threshold alpha * sqrt(t/2)
    pub threshold: f64,
    /// 4 * normal_tail(alpha): the uniform-in-j limit bound
    pub bound: f64,
    /// (j, exceedance frequency) over the sampled grid
    pub per_j: Vec<(usize, f64)>,
    pub max_frequency: f64,
}

/// For j on a grid over [n], estimates the probability that the conditioned
/// card path ever strays more than alpha * sqrt(t/2) from its start.
pub fn delocalization_test(
    n: usize,
    t: u64,
    alpha: f64,
    replicas: u64,
    seed: u64,
) -> Result<DelocalizationResult> {
    let kernel = ConditionalKernel::new(n)?;
    if replicas == 0 || t == 0 {
        return Err(Error::InvalidConfig("need replicas >= 1 and t >= 1".into()));
    }
    let threshold = alpha * (t as f64 / 2.0).sqrt();
    let grid: Vec<usize> = {
        let mut g: Vec<usize> = (0..20).map(|k| 1 + k * (n - 1) / 19).collect();
        g.dedup();
        g
    };
    let per_j: Vec<(usize, f64)> = grid
        .iter()
        .enumerate()
        .map(|(gi, &j)| {
            let hits: u64 = (0..replicas)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = rng::stream(seed, tag::CHAIN, gi as u64 * replicas + rep);
                    let mut state = j;
                    let mut exceeded = false;
                    for _ in 0..t {
                        state = kernel.sample_step(state, &mut rng);
                        if (state as f64 - j as f64).abs() > threshold {
                            exceeded = true;
                            break;
                        }
                    }
                    exceeded as u64
                })
                .sum();
            (j, hits as f64 / replicas as f64)
        })
        .collect();
    let max_frequency = per_j.iter().map(|&(_, f)| f).fold(0.0, f64::max);
    Ok(DelocalizationResult {
        n,
        t,
        alpha,
        replicas,
        threshold,
        bound: 4.0 * normal_tail(alpha),
        per_j,
        max_frequency,
    })
}

/// Samples the statistic under the uniform measure.
pub fn sample_uniform_totals(band: &BandConfig, replicas: u64, seed: u64) -> Vec<u64> {
    (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::UNIFORM, rep);
            let pos = sample_uniform_positions(band.n, &mut rng);
            delta_total_from_positions(&pos, band)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deck::{Deck, Move, SurvivorSet};

    #[test]
    fn band_bounds_n100() {
        let b = BandConfig::new(100, 0.5, 1.0).unwrap();
        assert_eq!((b.lo, b.hi), (25, 75));
        assert_eq!(b.band_size(), 51);
        // radius = sqrt(100 ln 100) = 21.459...
        assert!((b.radius - 21.4597).abs() < 1e-3);
    }

    #[test]
    fn identity_deck_counts_whole_band() {
        let b = BandConfig::new(100, 0.5, 1.0).unwrap();
        let deck = Deck::identity(100);
        let surv = SurvivorSet::full(100);
        let c = delta_counts(&deck, &surv, &b).unwrap();
        assert_eq!(c.total, 51);
        assert_eq!(c.survivors, 51);
        assert_eq!(c.removed, 0);
    }

    #[test]
    fn reversal_permutation_count() {
        // positions[j-1] = n + 1 - j; |n + 1 - 2j| <= 21.459 gives j in 40..=61
        let b = BandConfig::new(100, 0.5, 1.0).unwrap();
        let positions: Vec<u32> = (1..=100).map(|j| 101 - j).collect();
        assert_eq!(delta_total_from_positions(&positions, &b), 22);
    }

    #[test]
    fn counts_split_by_survival() {
        let b = BandConfig::new(10, 0.9, 1.0).unwrap();
        let mut deck = Deck::identity(10);
        let mut surv = SurvivorSet::full(10);
        // remove card at position 3 (card 3), reinsert at position 3
        deck.apply_move(Move { i: 3, j: 3 }).unwrap();
        surv.mark_removed(3);
        let c = delta_counts(&deck, &surv, &b).unwrap();
        assert_eq!(c.total, c.survivors + c.removed);
        assert_eq!(c.removed, 1);
    }

    #[test]
    fn uniform_moments_example() {
        let b = BandConfig::new(100, 0.5, 1.0).unwrap();
        let m = uniform_delta_moments(&b);
        assert!((m.mean - 51.0 * 0.43).abs() < 1e-12);
        assert!((m.variance_bound - (m.mean + m.mean * m.mean / 99.0)).abs() < 1e-12);
        // validity: 100*0.25 = 25 >= 21.46
        assert!(m.formula_valid);
    }

    #[test]
    fn uniform_moments_match_monte_carlo() {
        let b = BandConfig::new(100, 0.5, 1.0).unwrap();
        let m = uniform_delta_moments(&b);
        let reps = 20_000u64;
        let totals = sample_uniform_totals(&b, reps, 11);
        let emp: f64 = totals.iter().sum::<u64>() as f64 / reps as f64;
        let se = (m.variance_bound / reps as f64).sqrt();
        assert!(
            (emp - m.mean).abs() < 3.0 * se,
            "empirical {emp} vs exact {} (3se = {})",
            m.mean,
            3.0 * se
        );
    }

    #[test]
    fn threshold_example_n20000() {
        // 2 eps alpha sqrt(n ln n) + 2 (n ln n)^{1/4} at eps=.5, alpha=1, k=2
        let b = BandConfig::new(20_000, 0.5, 1.0).unwrap();
        let nlogn = 20_000.0 * (20_000.0f64).ln();
        let cut = nlogn.sqrt() + 2.0 * nlogn.powf(0.25);
        assert!((cut - 487.3).abs() < 0.2, "{cut}");
        let just_below = DeltaCounts {
            total: cut.floor() as u64,
            survivors: 0,
            removed: cut.floor() as u64,
        };
        let just_above = DeltaCounts {
            total: cut.ceil() as u64 + 1,
            survivors: 0,
            removed: 0,
        };
        assert!(!threshold_event(&just_below, &b, 2.0));
        assert!(threshold_event(&just_above, &b, 2.0));
    }

    #[test]
    fn uniform_threshold_frequency_chebyshev() {
        // under the uniform measure the event fires with frequency <= 1/k^2
        let b = BandConfig::new(2_000, 0.5, 1.0).unwrap();
        let k = 3.0;
        let reps = 10_000u64;
        let totals = sample_uniform_totals(&b, reps, 5);
        let freq = totals
            .iter()
            .filter(|&&tot| {
                threshold_event(
                    &DeltaCounts {
                        total: tot,
                        survivors: 0,
                        removed: tot,
                    },
                    &b,
                    k,
                )
            })
            .count() as f64
            / reps as f64;
        let se = (freq.max(1e-4) * (1.0 - freq) / reps as f64).sqrt();
        assert!(freq <= 1.0 / (k * k) + 3.0 * se, "freq {freq}");
    }

    #[test]
    fn schedule_n20000() {
        let s = schedule(20_000, 3.0).unwrap();
        assert_eq!(s.t_n, 77_087);
        let np = 20_000.0 * s.p_t_n;
        assert!((np - 424.0).abs() < 1.0, "{np}");
        assert!(s.residual.abs() < 0.05, "residual {}", s.residual);
        assert!(s.p_t_n > 0.0 && s.p_t_n <= 1.0);
    }

    #[test]
    fn schedule_t0_edge() {
        // pick c_n so the bracket is barely nonnegative: t_n = 0, p = 1
        let n = 100usize;
        let nf = n as f64;
        let c = (0.75 * nf * nf.ln() - 0.25 * nf * nf.ln().ln()) / nf;
        let s = schedule(n, c).unwrap();
        assert_eq!(s.t_n, 0);
        assert_eq!(s.p_t_n, 1.0);
        assert!(schedule(n, c + 0.1).is_err());
    }

    #[test]
    fn v_alpha_value() {
        assert!((v_alpha(1.0) - 0.795).abs() < 5e-4, "{}", v_alpha(1.0));
        assert!(v_alpha(3.0) > 0.999);
    }

    #[test]
    fn ks_of_degenerate_sample_is_large() {
        let mut zeros = vec![0.0; 100];
        assert!(ks_to_standard_normal(&mut zeros) >= 0.5 - 1e-9);
    }

    #[test]
    fn clt_small_case_and_determinism() {
        let r1 = clt_test(200, 100, 2_000, 2_000, 9).unwrap();
        let r2 = clt_test(200, 100, 2_000, 2_000, 9).unwrap();
        assert_eq!(r1.ks, r2.ks);
        assert!(r1.ks < 0.08, "ks {}", r1.ks);
        let d = clt_test(200, 100, 0, 10, 9).unwrap();
        assert!(d.degenerate && d.ks.is_nan());
    }

    #[test]
    fn delocalization_huge_alpha_never_exceeds() {
        let r = delocalization_test(500, 300, 6.0, 500, 3).unwrap();
        assert_eq!(r.max_frequency, 0.0);
        assert!(r.bound < 1e-8);
    }
}
