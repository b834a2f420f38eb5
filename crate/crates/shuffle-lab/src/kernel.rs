//! Conditioned single-card position chain, its truncation, the (S, X, Y)
//! decomposition, dominating walks, and numeric tail-bound evaluators.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Transition law of the position of a card conditioned on never being
/// removed: from state i it moves to i+1 w.p. i(n-i)/(n(n-1)), to i-1 w.p.
/// (i-1)(n-i+1)/(n(n-1)), and stays otherwise.
#[derive(Clone, Copy, Debug)]
pub struct ConditionalKernel {
    pub n: usize,
}

impl ConditionalKernel {
    pub fn new(n: usize) -> Result<ConditionalKernel> {
        if n < 2 {
            return Err(Error::InvalidConfig(format!("deck size {n} < 2")));
        }
        Ok(ConditionalKernel { n })
    }

    /// (p_down, p_stay, p_up) at state i in [n].
    pub fn probs(&self, i: usize) -> Result<(f64, f64, f64)> {
        if i < 1 || i > self.n {
            return Err(Error::OutOfRange { pos: i, n: self.n });
        }
        Ok(self.probs_unchecked(i))
    }

    #[inline]
    fn probs_unchecked(&self, i: usize) -> (f64, f64, f64) {
        let (n, i) = (self.n as f64, i as f64);
        let den = n * (n - 1.0);
        let up = i * (n - i) / den;
        let down = (i - 1.0) * (n - i + 1.0) / den;
        let stay = ((i - 1.0) * (i - 1.0) + (n - i) * (n - i)) / den;
        (down, stay, up)
    }

    /// One step from state i using a single uniform draw.
    pub fn sample_step(&self, i: usize, rng: &mut ChaCha8Rng) -> usize {
        let (down, stay, _) = self.probs_unchecked(i);
        let u: f64 = rng.random();
        if u < down {
            i - 1
        } else if u < down + stay {
            i
        } else {
            i + 1
        }
    }
}

/// The chain frozen outside the window [n] ∩ [j-M, j+M]: inside the window
/// it uses the kernel at the current state, outside it uses the kernel at j.
/// States live on all of Z.
#[derive(Clone, Copy, Debug)]
pub struct TruncatedChain {
    pub n: usize,
    pub j: usize,
    pub m_radius: i64,
    kernel: ConditionalKernel,
}

impl TruncatedChain {
    pub fn new(n: usize, j: usize, m_radius: i64) -> Result<TruncatedChain> {
        let kernel = ConditionalKernel::new(n)?;
        if j < 1 || j > n {
            return Err(Error::OutOfRange { pos: j, n });
        }
        if m_radius <= 0 {
            return Err(Error::InvalidConfig(format!(
                "truncation radius {m_radius} must be positive"
            )));
        }
        Ok(TruncatedChain {
            n,
            j,
            m_radius,
            kernel,
        })
    }

    #[inline]
    fn in_window(&self, i: i64) -> bool {
        i >= 1 && i <= self.n as i64 && (i - self.j as i64).abs() <= self.m_radius
    }

    /// (p_down, p_stay, p_up) at any integer state.
    #[inline]
    pub fn probs_at(&self, i: i64) -> (f64, f64, f64) {
        if self.in_window(i) {
            self.kernel.probs_unchecked(i as usize)
        } else {
            self.kernel.probs_unchecked(self.j)
        }
    }

    pub fn sample_step(&self, i: i64, rng: &mut ChaCha8Rng) -> i64 {
        let (down, stay, _) = self.probs_at(i);
        let u: f64 = rng.random();
        if u < down {
            i - 1
        } else if u < down + stay {
            i
        } else {
            i + 1
        }
    }
}

/// Simulates a length-t path of the truncated chain; path[0] = j.
pub fn simulate_zeta(n: usize, j: usize, m_radius: i64, t: u64, seed: u64) -> Result<Vec<i64>> {
    let chain = TruncatedChain::new(n, j, m_radius)?;
    let mut rng = rng::stream(seed, tag::CHAIN, 0);
    let mut path = Vec::with_capacity(t as usize + 1);
    let mut state = j as i64;
    path.push(state);
    for _ in 0..t {
        state = chain.sample_step(state, &mut rng);
        path.push(state);
    }
    Ok(path)
}

/// Exact marginal law of the truncated chain at time t (state -> mass).
pub fn zeta_marginal(n: usize, j: usize, m_radius: i64, t: u64) -> Result<BTreeMap<i64, f64>> {
    let chain = TruncatedChain::new(n, j, m_radius)?;
    let mut cur: BTreeMap<i64, f64> = BTreeMap::new();
    cur.insert(j as i64, 1.0);
    for _ in 0..t {
        let mut next: BTreeMap<i64, f64> = BTreeMap::new();
        for (&i, &p) in &cur {
            let (down, stay, up) = chain.probs_at(i);
            *next.entry(i - 1).or_insert(0.0) += p * down;
            *next.entry(i).or_insert(0.0) += p * stay;
            *next.entry(i + 1).or_insert(0.0) += p * up;
        }
        cur = next;
    }
    Ok(cur)
}

/// Exact path law of the truncated chain up to time t (3^t branches).
pub fn zeta_path_law(
    n: usize,
    j: usize,
    m_radius: i64,
    t: u64,
) -> Result<BTreeMap<Vec<i64>, f64>> {
    let chain = TruncatedChain::new(n, j, m_radius)?;
    if t > 12 {
        return Err(Error::CapExceeded {
            what: "path enumeration depth",
            detail: format!("t={t} (cap 12)"),
        });
    }
    let mut out = BTreeMap::new();
    let mut path = vec![j as i64];
    fn recur(
        chain: &TruncatedChain,
        path: &mut Vec<i64>,
        prob: f64,
        left: u64,
        out: &mut BTreeMap<Vec<i64>, f64>,
    ) {
        if left == 0 {
            out.insert(path.clone(), prob);
            return;
        }
        let i = *path.last().unwrap();
        let (down, stay, up) = chain.probs_at(i);
        for (k, p) in [(-1i64, down), (0, stay), (1, up)] {
            if p > 0.0 {
                path.push(i + k);
                recur(chain, path, prob * p, left - 1, out);
                path.pop();
            }
        }
    }
    recur(&chain, &mut path, 1.0, t, &mut out);
    Ok(out)
}

/// P(max_m |path_m - j| > u) under an exact path law.
pub fn path_exceedance<S>(paths: &BTreeMap<Vec<S>, f64>, j: i64, u: i64) -> f64
where
    S: Copy + Into<i64> + Ord,
{
    paths
        .iter()
        .filter(|(p, _)| p.iter().any(|&s| (s.into() - j).abs() > u))
        .map(|(_, &pr)| pr)
        .sum()
}

/// The truncated chain split into a symmetric lazy walk S, a homogeneity
/// defect X, and an asymmetry defect Y; S + X + Y has the law of zeta - j.
#[derive(Clone, Copy, Debug)]
pub struct SxyChain {
    chain: TruncatedChain,
    q_j: f64,
}

/// Six-case transition at displacement i = S + X + Y: each row is
/// ((dS, dX, dY), probability). Fixed order; the last row is the residual.
pub type SxyRows = [((i64, i64, i64), f64); 6];

impl SxyChain {
    pub fn new(n: usize, j: usize, m_radius: i64) -> Result<SxyChain> {
        let chain = TruncatedChain::new(n, j, m_radius)?;
        let (down, _, up) = chain.probs_at(j as i64);
        Ok(SxyChain {
            chain,
            q_j: down.min(up),
        })
    }

    /// q at displaced state j + i (min of the two move probabilities).
    pub fn q(&self, i: i64) -> f64 {
        let (down, _, up) = self.chain.probs_at(self.chain.j as i64 + i);
        down.min(up)
    }

    /// r at displaced state j + i (max of the two move probabilities).
    pub fn r(&self, i: i64) -> f64 {
        let (down, _, up) = self.chain.probs_at(self.chain.j as i64 + i);
        down.max(up)
    }

    pub fn q_origin(&self) -> f64 {
        self.q_j
    }

    /// Transition rows at total displacement i. The residual is asserted
    /// non-negative (it is, for every reachable state).
    pub fn rows(&self, i: i64) -> SxyRows {
        let (down, _, up) = self.chain.probs_at(self.chain.j as i64 + i);
        let (q_i, r_i) = (down.min(up), down.max(up));
        let q_min = q_i.min(self.q_j);
        let diff = (self.q_j - q_i).abs();
        // ties resolved to +1; both choices carry zero mass at a tie
        let w = if up >= down { 1 } else { -1 };
        let z_plus = self.q_j >= q_i;
        let x_up_s = if z_plus { 1 } else { 0 };
        let x_dn_s = if z_plus { -1 } else { 0 };
        let residual = 1.0 - (2.0 * q_min + 2.0 * diff + (r_i - q_i));
        assert!(
            residual >= -1e-12,
            "negative residual {residual} at displacement {i}"
        );
        [
            ((1, 0, 0), q_min),
            ((-1, 0, 0), q_min),
            ((x_up_s, -1, 0), diff),
            ((x_dn_s, 1, 0), diff),
            ((0, 0, w as i64), r_i - q_i),
            ((0, 0, 0), residual.max(0.0)),
        ]
    }

    /// One step from (S, X, Y) using a single uniform draw walked through
    /// the six rows in order.
    pub fn sample_step(&self, state: (i64, i64, i64), rng: &mut ChaCha8Rng) -> (i64, i64, i64) {
        let (s, x, y) = state;
        let rows = self.rows(s + x + y);
        let mut u: f64 = rng.random();
        for ((ds, dx, dy), p) in rows {
            if u < p {
                return (s + ds, x + dx, y + dy);
            }
            u -= p;
        }
        state // guarded against f64 rounding at the very top of [0,1)
    }
}

/// Simulates the decomposed chain; path[0] = (0,0,0).
pub fn simulate_sxy(
    n: usize,
    j: usize,
    m_radius: i64,
    t: u64,
    seed: u64,
) -> Result<Vec<(i64, i64, i64)>> {
    let chain = SxyChain::new(n, j, m_radius)?;
    let mut rng = rng::stream(seed, tag::CHAIN, 1);
    let mut path = Vec::with_capacity(t as usize + 1);
    let mut state = (0i64, 0i64, 0i64);
    path.push(state);
    for _ in 0..t {
        state = chain.sample_step(state, &mut rng);
        path.push(state);
    }
    Ok(path)
}

/// Exact joint law of (S_t, X_t, Y_t) by dynamic programming.
pub fn sxy_exact_law(
    n: usize,
    j: usize,
    m_radius: i64,
    t: u64,
) -> Result<BTreeMap<(i64, i64, i64), f64>> {
    let chain = SxyChain::new(n, j, m_radius)?;
    if t > 16 {
        return Err(Error::CapExceeded {
            what: "joint-law time horizon",
            detail: format!("t={t} (cap 16)"),
        });
    }
    let mut cur: BTreeMap<(i64, i64, i64), f64> = BTreeMap::new();
    cur.insert((0, 0, 0), 1.0);
    for _ in 0..t {
        let mut next: BTreeMap<(i64, i64, i64), f64> = BTreeMap::new();
        for (&(s, x, y), &p) in &cur {
            for ((ds, dx, dy), pr) in chain.rows(s + x + y) {
                if pr > 0.0 {
                    *next.entry((s + ds, x + dx, y + dy)).or_insert(0.0) += p * pr;
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Lazy symmetric walk that dominates X: steps ±1 each w.p. M/(n-1).
pub fn simulate_w(n: usize, m_radius: i64, t: u64, seed: u64) -> Result<Vec<i64>> {
    let rate = m_radius as f64 / (n as f64 - 1.0);
    if !(0.0..=0.5).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "walk rate M/(n-1) = {rate} outside [0, 1/2]"
        )));
    }
    let mut rng = rng::stream(seed, tag::WALK, 0);
    let mut path = Vec::with_capacity(t as usize + 1);
    let mut s = 0i64;
    path.push(s);
    for _ in 0..t {
        let u: f64 = rng.random();
        if u < rate {
            s += 1;
        } else if u < 2.0 * rate {
            s -= 1;
        }
        path.push(s);
    }
    Ok(path)
}

/// P(Bin(t, p) >= k) for real thresholds (k <= 0 gives 1).
pub fn binomial_upper_tail(t: u64, p: f64, k: f64) -> f64 {
    if k <= 0.0 {
        return 1.0;
    }
    let k_int = k.ceil() as u64;
    if k_int > t {
        return 0.0;
    }
    let bin = Binomial::new(p, t).expect("valid binomial parameters");
    bin.sf(k_int - 1)
}

/// Upper tail of the standard normal, via the complementary error function.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Default Berry-Esseen constant used in reported bounds.
pub const BERRY_ESSEEN_C: f64 = 0.4748;

/// Artifact default for the truncation radius: ceil(sqrt(t*j/n) * ln n).
/// One valid instance of the scale separation the analysis requires; not a
/// prescribed formula.
pub fn default_truncation_radius(n: usize, j: usize, t: u64) -> i64 {
    let v = (t as f64 * j as f64 / n as f64).sqrt() * (n as f64).ln();
    (v.ceil() as i64).max(1)
}

/// Artifact default for the split parameter: ceil(sqrt(t*M/n) * ln n).
pub fn default_delta(n: usize, m_radius: i64, t: u64) -> f64 {
    ((t as f64 * m_radius as f64 / n as f64).sqrt() * (n as f64).ln()).ceil()
}

/// Every named term of the one-sided tail sandwich and of the window-escape
/// bound, reported separately.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoundTerms {
    pub n: usize,
    pub j: usize,
    pub m_radius: i64,
    pub t: u64,
    pub delta: f64,
    pub u: f64,
    pub berry_esseen_c: f64,
    /// q at the start state: min of up/down move probabilities.
    pub q_j: f64,
    /// Normal tail at (u - delta) / sqrt(2 t q_j).
    pub psi_upper: f64,
    /// Normal tail at (u + delta) / sqrt(2 t q_j).
    pub psi_lower: f64,
    /// C / sqrt(2 t q_j).
    pub berry_esseen_term: f64,
    /// 32 M t / (delta^2 (n-1)); Chebyshev on the dominating walk W.
    pub x_term: f64,
    /// (t/n)((n-1)/n) / (delta/2 - t/n)^2; Chebyshev on the counter N_t.
    /// Infinite (vacuous) when delta/2 <= t/n.
    pub y_term: f64,
    /// Upper bound on P(zeta_t - j >= u).
    pub upper: f64,
    /// Lower bound on P(zeta_t - j >= u) (may be negative; then vacuous).
    pub lower: f64,
    /// 8 t q_j / (M - delta)^2; infinite (vacuous) when M <= delta.
    pub s_term_escape: f64,
    /// Upper bound on P(max_m |zeta_m - j| >= M).
    pub escape_total: f64,
    pub vacuous_y_term: bool,
    pub vacuous_s_term: bool,
}

/// Evaluates the explicit tail bounds. Violated preconditions flag the
/// affected terms as vacuous (infinite) instead of erroring.
pub fn bound_evaluators(
    n: usize,
    j: usize,
    m_radius: i64,
    t: u64,
    delta: f64,
    u: f64,
    berry_esseen_c: f64,
) -> Result<BoundTerms> {
    let kernel = ConditionalKernel::new(n)?;
    let (down, _, up) = kernel.probs(j)?;
    let q_j = down.min(up);
    let (nf, tf, mf) = (n as f64, t as f64, m_radius as f64);
    let sd = (2.0 * tf * q_j).sqrt();
    let (psi_upper, psi_lower, berry_esseen_term) = if sd > 0.0 {
        (
            normal_tail((u - delta) / sd),
            normal_tail((u + delta) / sd),
            berry_esseen_c / sd,
        )
    } else {
        (
            if u - delta <= 0.0 { 1.0 } else { 0.0 },
            if u + delta <= 0.0 { 1.0 } else { 0.0 },
            f64::INFINITY,
        )
    };
    let x_term = 32.0 * mf * tf / (delta * delta * (nf - 1.0));
    let y_margin = delta / 2.0 - tf / nf;
    let vacuous_y_term = y_margin <= 0.0;
    let y_term = if vacuous_y_term {
        f64::INFINITY
    } else {
        (tf / nf) * ((nf - 1.0) / nf) / (y_margin * y_margin)
    };
    let s_margin = mf - delta;
    let vacuous_s_term = s_margin <= 0.0;
    let s_term_escape = if vacuous_s_term {
        f64::INFINITY
    } else {
        8.0 * tf * q_j / (s_margin * s_margin)
    };
    Ok(BoundTerms {
        n,
        j,
        m_radius,
        t,
        delta,
        u,
        berry_esseen_c,
        q_j,
        psi_upper,
        psi_lower,
        berry_esseen_term,
        x_term,
        y_term,
        upper: psi_upper + berry_esseen_term + x_term + y_term,
        lower: psi_lower - berry_esseen_term - x_term - y_term,
        s_term_escape,
        escape_total: s_term_escape + x_term + y_term,
        vacuous_y_term,
        vacuous_s_term,
    })
}
