//! Monte Carlo estimation of the total-variation lower bound through the
//! band-statistic threshold event, with exact small-n validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deck;
use crate::error::{Error, Result};
use crate::exact;
use crate::rng::{self, tag};
use crate::stats::{
    self, delta_total_from_positions, threshold_event, BandConfig, DeltaCounts, ScheduleParams,
};

/// z for a two-sided 99% interval.
pub const Z99: f64 = 2.5758293035489004;

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson_ci(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (nf, p) = (n as f64, hits as f64 / n as f64);
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Full description of one threshold-separation experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub k: f64,
    /// schedule constant; ignored when `t` is set explicitly
    pub c_n: Option<f64>,
    /// explicit number of shuffles, overriding the schedule
    pub t: Option<u64>,
    pub shuffle_replicas: u64,
    pub uniform_replicas: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shuffle_replicas < 100 || self.uniform_replicas < 100 {
            return Err(Error::InvalidConfig(
                "replica counts must be at least 100".into(),
            ));
        }
        if self.c_n.is_none() && self.t.is_none() {
            return Err(Error::InvalidConfig("need either c_n or an explicit t".into()));
        }
        BandConfig::new(self.n, self.epsilon, self.alpha)?;
        Ok(())
    }

    /// The number of shuffles this experiment runs.
    pub fn resolve_t(&self) -> Result<u64> {
        match self.t {
            Some(t) => Ok(t),
            None => Ok(stats::schedule(self.n, self.c_n.unwrap())?.t_n),
        }
    }

    /// Stable fingerprint of the serialized config, for provenance lines.
    pub fn hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in bytes {
            h = rng::mix64(h ^ b as u64);
        }
        h
    }
}

/// Frequencies, confidence intervals, and the resulting TV lower bound.
#[derive(Clone, Debug, Serialize)]
pub struct MCResult {
    pub config: ExperimentConfig,
    pub config_hash: u64,
    pub t: u64,
    /// schedule diagnostics when c_n was used
    pub schedule: Option<ScheduleParams>,
    pub p_shuffle: f64,
    pub ci_shuffle: (f64, f64),
    pub p_uniform: f64,
    pub ci_uniform: (f64, f64),
    /// max(0, shuffle CI low - uniform CI high)
    pub tv_lower: f64,
    /// 1 - 2/k^2 - 4(v(alpha)^{-2} - 1): the asymptotic separation the
    /// threshold argument guarantees at these (k, alpha)
    pub analytic_reference: f64,
}

/// Runs the experiment: the event frequency under the shuffle at time t
/// versus under uniform permutations. Replica-indexed RNG streams and
/// commutative count aggregation make the result worker-count invariant.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MCResult> {
    config.validate()?;
    let band = BandConfig::new(config.n, config.epsilon, config.alpha)?;
    let t = config.resolve_t()?;
    let schedule = match (config.t, config.c_n) {
        (None, Some(c)) => Some(stats::schedule(config.n, c)?),
        _ => None,
    };
    let shuffle_hits: u64 = (0..config.shuffle_replicas)
        .into_par_iter()
        .map(|rep| {
            let child = rng::child_seed(config.seed, tag::SHUFFLE, rep);
            let (deck, survivors) = deck::simulate(config.n, t, child).expect("valid sim");
            let counts = stats::delta_counts(&deck, &survivors, &band).expect("sizes match");
            threshold_event(&counts, &band, config.k) as u64
        })
        .sum();
    let uniform_hits: u64 = (0..config.uniform_replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(config.seed, tag::UNIFORM, rep);
            let total = delta_total_from_positions(
                &stats::sample_uniform_positions(config.n, &mut rng),
                &band,
            );
            let counts = DeltaCounts {
                total,
                survivors: 0,
                removed: total,
            };
            threshold_event(&counts, &band, config.k) as u64
        })
        .sum();
    let p_shuffle = shuffle_hits as f64 / config.shuffle_replicas as f64;
    let p_uniform = uniform_hits as f64 / config.uniform_replicas as f64;
    let ci_shuffle = wilson_ci(shuffle_hits, config.shuffle_replicas, Z99);
    let ci_uniform = wilson_ci(uniform_hits, config.uniform_replicas, Z99);
    let v = stats::v_alpha(config.alpha);
    Ok(MCResult {
        config: config.clone(),
        config_hash: config.hash(),
        t,
        schedule,
        p_shuffle,
        ci_shuffle,
        p_uniform,
        ci_uniform,
        tv_lower: (ci_shuffle.0 - ci_uniform.1).max(0.0),
        analytic_reference: 1.0 - 2.0 / (config.k * config.k)
            - 4.0 * (1.0 / (v * v) - 1.0),
    })
}

/// Runs the experiment over a grid of explicit times.
pub fn cutoff_scan(base: &ExperimentConfig, times: &[u64]) -> Result<Vec<MCResult>> {
    times
        .iter()
        .map(|&t| {
            let mut cfg = base.clone();
            cfg.t = Some(t);
            cfg.c_n = None;
            run_experiment(&cfg)
        })
        .collect()
}

/// Exact versus Monte Carlo cross-check at exhaustively enumerable sizes.
#[derive(Clone, Debug, Serialize)]
pub struct SmallNValidation {
    pub n: usize,
    pub t: u64,
    pub exact_p_shuffle: f64,
    pub exact_p_uniform: f64,
    pub mc_p_shuffle: f64,
    pub mc_p_uniform: f64,
    /// exact TV distance between the deck law at t and uniform
    pub exact_tv: f64,
    pub tv_lower: f64,
    /// MC frequencies within 4 standard errors of the exact values, and
    /// tv_lower does not exceed the exact TV
    pub pass: bool,
}

/// Event probability under an exact distribution vector over S_n.
fn exact_event_probability(
    dist: &exact::DistributionVector,
    band: &BandConfig,
    k: f64,
) -> f64 {
    let n = dist.n;
    let mut p = 0.0;
    for (r, &pr) in dist.probs.iter().enumerate() {
        if pr == 0.0 {
            continue;
        }
        let sigma = exact::lehmer_unrank(n, r as u64);
        let total = delta_total_from_positions(&sigma, band);
        let counts = DeltaCounts {
            total,
            survivors: 0,
            removed: total,
        };
        if threshold_event(&counts, band, k) {
            p += pr;
        }
    }
    p
}

pub fn exact_small_n_validation(config: &ExperimentConfig) -> Result<SmallNValidation> {
    config.validate()?;
    let band = BandConfig::new(config.n, config.epsilon, config.alpha)?;
    let t = config.resolve_t()?;
    let dist = exact::evolve(config.n, t)?;
    let exact_p_shuffle = exact_event_probability(&dist, &band, config.k);
    let uniform = exact::DistributionVector::uniform(config.n);
    let exact_p_uniform = exact_event_probability(&uniform, &band, config.k);
    let exact_tv = exact::tv_to_uniform(&dist);
    let mc = run_experiment(config)?;
    let se = |p: f64, n: u64| (p.max(1.0 / n as f64) * (1.0 - p).max(1.0 / n as f64) / n as f64).sqrt();
    let pass = (mc.p_shuffle - exact_p_shuffle).abs()
        <= 4.0 * se(exact_p_shuffle, config.shuffle_replicas)
        && (mc.p_uniform - exact_p_uniform).abs()
            <= 4.0 * se(exact_p_uniform, config.uniform_replicas)
        && mc.tv_lower <= exact_tv + 1e-12;
    Ok(SmallNValidation {
        n: config.n,
        t,
        exact_p_shuffle,
        exact_p_uniform,
        mc_p_shuffle: mc.p_shuffle,
        mc_p_uniform: mc.p_uniform,
        exact_tv,
        tv_lower: mc.tv_lower,
        pass,
    })
}
