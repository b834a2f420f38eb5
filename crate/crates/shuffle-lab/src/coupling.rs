//! The two deck couplings: the neighbor-transposed pair (decks A/B) used to
//! bracket a marked card's position, and the size-n / size-(n-1) pair
//! (decks 1/2) whose positions satisfy the sandwich J - I <= M <= J - 1.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::deck::Deck;
use crate::error::{Error, Result};

/// Which neighbor of card i deck B transposes at initialization: `Lower`
/// swaps i with the card one position above it in the listing (position - 1),
/// so deck B tracks the lower bracket; `Higher` the opposite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Lower,
    Higher,
}

/// Decks A and B: B starts as A with card i transposed with a neighbor, and
/// both are then shuffled in lockstep (matched removal, same insertion).
/// Cards i and j are never removed.
#[derive(Clone, Debug)]
pub struct PairedDecksAB {
    pub deck_a: Deck,
    pub deck_b: Deck,
    pub card_i: u32,
    pub card_j: u32,
    pub branch: Branch,
}

/// Per-step monitor of the bracketing relations.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct AbMonitor {
    pub pos_i_a: usize,
    pub pos_i_b: usize,
    pub pos_j_a: usize,
    pub pos_j_b: usize,
    /// positions of j agree and B's i is on the branch side of A's i
    pub ok: bool,
}

/// Position p's rank among positions with the two marked positions deleted.
#[inline]
fn unmarked_rank(p: usize, m1: usize, m2: usize) -> usize {
    p - (m1 < p) as usize - (m2 < p) as usize
}

/// Inverse of [`unmarked_rank`] for marked positions m1 < m2.
#[inline]
fn unmarked_select(r: usize, m1: usize, m2: usize) -> usize {
    let mut p = r;
    if p >= m1 {
        p += 1;
    }
    if p >= m2 {
        p += 1;
    }
    p
}

impl PairedDecksAB {
    /// Builds the pair from a given state of deck A. Fails when i sits at
    /// the deck edge on the branch side or its neighbor is card j (the
    /// branch event excludes both configurations).
    pub fn init(deck_a: Deck, card_i: u32, card_j: u32, branch: Branch) -> Result<PairedDecksAB> {
        let n = deck_a.n();
        if card_i == card_j || card_i < 1 || card_j < 1 || card_i as usize > n || card_j as usize > n
        {
            return Err(Error::InvalidConfig("need distinct marked cards in [n]".into()));
        }
        let pos_i = deck_a.position_of(card_i);
        let neighbor_pos = match branch {
            Branch::Lower => {
                if pos_i == 1 {
                    return Err(Error::BranchRejected(
                        "card i is at the top of the deck".into(),
                    ));
                }
                pos_i - 1
            }
            Branch::Higher => {
                if pos_i == n {
                    return Err(Error::BranchRejected(
                        "card i is at the bottom of the deck".into(),
                    ));
                }
                pos_i + 1
            }
        };
        let neighbor = deck_a.card_at(neighbor_pos);
        if neighbor == card_j {
            return Err(Error::BranchRejected(
                "the neighbor of card i is card j".into(),
            ));
        }
        let mut order = deck_a.order();
        order.swap(pos_i - 1, neighbor_pos - 1);
        let deck_b = Deck::from_order(&order)?;
        Ok(PairedDecksAB {
            deck_a,
            deck_b,
            card_i,
            card_j,
            branch,
        })
    }

    fn monitor(&self) -> AbMonitor {
        let pos_i_a = self.deck_a.position_of(self.card_i);
        let pos_i_b = self.deck_b.position_of(self.card_i);
        let pos_j_a = self.deck_a.position_of(self.card_j);
        let pos_j_b = self.deck_b.position_of(self.card_j);
        let order_ok = match self.branch {
            Branch::Lower => pos_i_b <= pos_i_a,
            Branch::Higher => pos_i_b >= pos_i_a,
        };
        AbMonitor {
            pos_i_a,
            pos_i_b,
            pos_j_a,
            pos_j_b,
            ok: pos_j_a == pos_j_b && order_ok,
        }
    }

    /// One lockstep shuffle: the unmarked card of rank `r` (1-based, in
    /// position order, marked cards skipped) is removed from deck A, its
    /// positional match from deck B, and both are reinserted at position
    /// `d`. Cards i and j cannot be chosen, by construction.
    pub fn step_with(&mut self, r: usize, d: usize) -> Result<AbMonitor> {
        let n = self.deck_a.n();
        if r < 1 || r > n - 2 || d < 1 || d > n {
            return Err(Error::InvalidConfig(format!(
                "rank {r} or insertion {d} out of range for n={n}"
            )));
        }
        let (ia, ja) = (
            self.deck_a.position_of(self.card_i),
            self.deck_a.position_of(self.card_j),
        );
        let p_a = unmarked_select(r, ia.min(ja), ia.max(ja));
        let (ib, jb) = (
            self.deck_b.position_of(self.card_i),
            self.deck_b.position_of(self.card_j),
        );
        let p_b = unmarked_select(r, ib.min(jb), ib.max(jb));
        debug_assert_eq!(unmarked_rank(p_a, ia.min(ja), ia.max(ja)), r);
        let card_a = self.deck_a.remove_at(p_a);
        let card_b = self.deck_b.remove_at(p_b);
        debug_assert!(card_a != self.card_i && card_a != self.card_j);
        debug_assert!(card_b != self.card_i && card_b != self.card_j);
        self.deck_a.insert_at(d, card_a);
        self.deck_b.insert_at(d, card_b);
        Ok(self.monitor())
    }

    /// Random lockstep shuffle (uniform unmarked card, uniform insertion).
    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> AbMonitor {
        let n = self.deck_a.n();
        let r = rng.random_range(1..=n - 2);
        let d = rng.random_range(1..=n);
        self.step_with(r, d).expect("in-range random step")
    }

    /// (position of i in A, position of i in B, shared position of j).
    pub fn positions(&self) -> (usize, usize, usize) {
        let m = self.monitor();
        (m.pos_i_a, m.pos_i_b, m.pos_j_a)
    }
}

/// Deck 1 (n cards, marked i and j starting at positions 1 and m+1) coupled
/// with deck 2 (n-1 cards, marked m starting at position m) so that
/// J - I <= M <= J - 1 at every step while both decks individually perform
/// the never-remove-the-marked-cards shuffle.
#[derive(Clone, Debug)]
pub struct PairedDecks12 {
    pub deck1: Deck,
    pub deck2: Deck,
    pub card_i: u32,
    pub card_j: u32,
    pub card_m: u32,
    steps: u64,
}

/// Per-step monitor row; serializes to the CSV columns step,I,J,M,violation.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct SandwichMonitor {
    pub step: u64,
    pub i: usize,
    pub j: usize,
    pub m: usize,
    pub violation: bool,
}

/// Deck-2 slot matched to the unmarked deck-1 card at position `p`, given
/// marked positions I < J in deck 1 and M in deck 2. Cards strictly between
/// i and j map below m; below-m slots are filled by below-j cards (between
/// cards first, then cards above i); the rest map above m in order.
fn bijection_slot(p: usize, i_pos: usize, j_pos: usize, m_pos: usize) -> usize {
    debug_assert!(i_pos < j_pos && p != i_pos && p != j_pos);
    let between_count = j_pos - i_pos - 1;
    if p > i_pos && p < j_pos {
        // between-index, 0-based, into the first below-m slots
        p - i_pos
    } else if p < i_pos {
        let a = p - 1; // 0-based index among cards above i
        let spare_below_m = m_pos - 1 - between_count;
        if a < spare_below_m {
            between_count + a + 1
        } else {
            m_pos + 1 + (a - spare_below_m)
        }
    } else {
        let used_above_i = (i_pos - 1).min(m_pos - 1 - between_count);
        let leftover_above_i = i_pos - 1 - used_above_i;
        m_pos + 1 + leftover_above_i + (p - j_pos - 1)
    }
}

impl PairedDecks12 {
    /// Initial states: deck 1 has card i at position 1 and card j at
    /// position m+1 (cards i and j are taken to be the two highest numbers,
    /// which is immaterial to the tracked positions); deck 2 is the identity
    /// on n-1 cards, so card m sits at position m.
    pub fn init(n: usize, m: usize) -> Result<PairedDecks12> {
        if n < 4 || m < 1 || m > n - 1 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 4 and m in [n-1]; got n={n}, m={m}"
            )));
        }
        let card_i = (n - 1) as u32;
        let card_j = n as u32;
        let mut order = Vec::with_capacity(n);
        order.push(card_i);
        let mut next = 1u32;
        for pos in 2..=n {
            if pos == m + 1 {
                order.push(card_j);
            } else {
                order.push(next);
                next += 1;
            }
        }
        Ok(PairedDecks12 {
            deck1: Deck::from_order(&order)?,
            deck2: Deck::identity(n - 1),
            card_i,
            card_j,
            card_m: m as u32,
            steps: 0,
        })
    }

    /// (I, J, M): current positions of the three marked cards.
    pub fn positions(&self) -> (usize, usize, usize) {
        (
            self.deck1.position_of(self.card_i),
            self.deck1.position_of(self.card_j),
            self.deck2.position_of(self.card_m),
        )
    }

    pub fn sandwich_holds(&self) -> bool {
        let (i, j, m) = self.positions();
        i < j && j - i <= m && m <= j - 1
    }

    /// One coupled shuffle driven by (unmarked rank r, single uniform u,
    /// residual slot fractions f1 in deck 1 and f2 in deck 2). Random
    /// callers pass fresh draws; exact enumeration integrates them out.
    fn step_with(&mut self, r: usize, u: f64, f1: f64, f2: f64) -> Result<SandwichMonitor> {
        let n = self.deck1.n();
        let (i_pos, j_pos, m_pos) = self.positions();
        debug_assert!(i_pos < j_pos);
        // matched removal through the bijection
        let p1 = unmarked_select(r, i_pos, j_pos);
        let slot2 = bijection_slot(p1, i_pos, j_pos, m_pos);
        let c1 = self.deck1.remove_at(p1);
        let c2 = self.deck2.remove_at(slot2);
        debug_assert!(c1 != self.card_i && c1 != self.card_j && c2 != self.card_m);
        // positions in the shrunken decks
        let i_bar = i_pos - (p1 < i_pos) as usize;
        let j_bar = j_pos - (p1 < j_pos) as usize;
        let m_bar = m_pos - (slot2 < m_pos) as usize;
        assert!(
            j_bar > i_bar && j_bar - i_bar <= m_bar && m_bar <= j_bar - 1,
            "post-removal sandwich violated: I={i_bar} J={j_bar} M={m_bar}"
        );
        // nested thresholds of the single uniform draw
        let q1 = (j_bar - i_bar) as f64 / n as f64;
        let q2 = m_bar as f64 / (n as f64 - 1.0);
        let q3 = j_bar as f64 / n as f64;
        assert!(
            q1 <= q2 + 1e-15 && q2 <= q3 + 1e-15,
            "threshold ordering broken: {q1} {q2} {q3}"
        );
        // deck-1 insertion: between i and j if u < q1, above i if u < q3,
        // else below j; uniform within the chosen slot range
        let pick = |lo: usize, hi: usize, f: f64| lo + ((hi - lo + 1) as f64 * f) as usize;
        let d1 = if u < q1 {
            pick(i_bar + 1, j_bar, f1)
        } else if u < q3 {
            pick(1, i_bar, f1)
        } else {
            pick(j_bar + 1, n, f1)
        };
        // deck-2 insertion: below card m iff u < q2
        let d2 = if u < q2 {
            pick(1, m_bar, f2)
        } else {
            pick(m_bar + 1, n - 1, f2)
        };
        self.deck1.insert_at(d1, c1);
        self.deck2.insert_at(d2, c2);
        self.steps += 1;
        let ok = self.sandwich_holds();
        let (i, j, m) = self.positions();
        Ok(SandwichMonitor {
            step: self.steps,
            i,
            j,
            m,
            violation: !ok,
        })
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> SandwichMonitor {
        let n = self.deck1.n();
        let r = rng.random_range(1..=n - 2);
        let u: f64 = rng.random();
        let f1: f64 = rng.random();
        let f2: f64 = rng.random();
        self.step_with(r, u, f1, f2).expect("in-range random step")
    }
}

/// Exact law of (I, J, M) after t coupled steps, by integrating the step
/// construction over all removals and insertion regions.
pub fn exact_coupled_ijm_law(
    n: usize,
    m: usize,
    t: u64,
) -> Result<std::collections::BTreeMap<(usize, usize, usize), f64>> {
    use std::collections::BTreeMap;
    if n > 7 || t > 4 {
        return Err(Error::CapExceeded {
            what: "coupled-state enumeration",
            detail: format!("n={n} (cap 7), t={t} (cap 4)"),
        });
    }
    PairedDecks12::init(n, m)?; // validates parameters
    let mut cur: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    cur.insert((1, m + 1, m), 1.0);
    let nf = n as f64;
    for _ in 0..t {
        let mut next: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for (&(i_pos, j_pos, m_pos), &pr) in &cur {
            let w = pr / (n as f64 - 2.0);
            for r in 1..=n - 2 {
                let p1 = unmarked_select(r, i_pos, j_pos);
                let slot2 = bijection_slot(p1, i_pos, j_pos, m_pos);
                let i_bar = i_pos - (p1 < i_pos) as usize;
                let j_bar = j_pos - (p1 < j_pos) as usize;
                let m_bar = m_pos - (slot2 < m_pos) as usize;
                let q1 = (j_bar - i_bar) as f64 / nf;
                let q2 = m_bar as f64 / (nf - 1.0);
                let q3 = j_bar as f64 / nf;
                // (region mass, deck-1 slots, deck-2 slots); within a region
                // the two insertions are independent and uniform
                let regions: [(f64, (usize, usize), (usize, usize)); 4] = [
                    (q1, (i_bar + 1, j_bar), (1, m_bar)),
                    (q2 - q1, (1, i_bar), (1, m_bar)),
                    (q3 - q2, (1, i_bar), (m_bar + 1, n - 1)),
                    (1.0 - q3, (j_bar + 1, n), (m_bar + 1, n - 1)),
                ];
                for (mass, (lo1, hi1), (lo2, hi2)) in regions {
                    if mass <= 1e-15 {
                        continue;
                    }
                    let w1 = 1.0 / (hi1 - lo1 + 1) as f64;
                    let w2 = 1.0 / (hi2 - lo2 + 1) as f64;
                    for d1 in lo1..=hi1 {
                        let i_new = i_bar + (d1 <= i_bar) as usize;
                        let j_new = j_bar + (d1 <= j_bar) as usize;
                        for d2 in lo2..=hi2 {
                            let m_new = m_bar + (d2 <= m_bar) as usize;
                            *next.entry((i_new, j_new, m_new)).or_insert(0.0) +=
                                w * mass * w1 * w2;
                        }
                    }
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Tail-domination comparison: the n-deck two-card probability
/// P(pos_j within j +/- delta) from start (1, m+1) against the sum of two
/// (n-1)-deck single-card conditional probabilities.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct DominationCheck {
    pub lhs: f64,
    pub rhs_escape: f64,
    pub rhs_window: f64,
    pub pass: bool,
}

/// Exact version at small n using the enumeration engines.
pub fn tail_domination_exact(
    n: usize,
    m: usize,
    t: u64,
    r: usize,
    delta: f64,
    j_center: usize,
) -> Result<DominationCheck> {
    let pair = crate::exact::pair_law(n, t, (1, m + 1))?;
    let lhs = pair.mass(
        |_| true,
        |pj| (pj as f64 - j_center as f64).abs() <= delta,
    );
    let one = crate::exact::conditional_position_law(n - 1, 1, t)?;
    let rhs_escape: f64 = (1..=n - 1).filter(|&p| p > r).map(|p| one[p - 1]).sum();
    let mm = crate::exact::conditional_position_law(n - 1, m, t)?;
    let rhs_window: f64 = (1..=n - 1)
        .filter(|&p| (p as f64 - j_center as f64).abs() <= delta + r as f64)
        .map(|p| mm[p - 1])
        .sum();
    let rhs = rhs_escape + rhs_window;
    Ok(DominationCheck {
        lhs,
        rhs_escape,
        rhs_window,
        pass: lhs <= rhs + 1e-12,
    })
}

/// Monte Carlo version: samples the coupled pair for the left side and the
/// (n-1)-deck conditional chain for the right side. `pass` allows 3
/// combined standard errors of slack.
pub fn tail_domination_mc(
    n: usize,
    m: usize,
    t: u64,
    r: usize,
    delta: f64,
    j_center: usize,
    replicas: u64,
    seed: u64,
) -> Result<DominationCheck> {
    use rayon::prelude::*;
    use crate::kernel::ConditionalKernel;
    use crate::rng::{self, tag};
    PairedDecks12::init(n, m)?;
    let kernel = ConditionalKernel::new(n - 1)?;
    let counts: (u64, u64, u64) = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::COUPLING, rep);
            let mut pair = PairedDecks12::init(n, m).unwrap();
            for _ in 0..t {
                pair.step(&mut rng);
            }
            let (_, j_pos, _) = pair.positions();
            let lhs_hit = ((j_pos as f64 - j_center as f64).abs() <= delta) as u64;
            let mut s1 = 1usize;
            let mut sm = m;
            for _ in 0..t {
                s1 = kernel.sample_step(s1, &mut rng);
                sm = kernel.sample_step(sm, &mut rng);
            }
            let esc_hit = (s1 > r) as u64;
            let win_hit = ((sm as f64 - j_center as f64).abs() <= delta + r as f64) as u64;
            (lhs_hit, esc_hit, win_hit)
        })
        .reduce(
            || (0, 0, 0),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );
    let rf = replicas as f64;
    let (lhs, rhs_escape, rhs_window) = (
        counts.0 as f64 / rf,
        counts.1 as f64 / rf,
        counts.2 as f64 / rf,
    );
    let se = |p: f64| (p.max(1.0 / rf) * (1.0 - p).max(1.0 / rf) / rf).sqrt();
    let slack = 3.0 * (se(lhs) + se(rhs_escape) + se(rhs_window));
    Ok(DominationCheck {
        lhs,
        rhs_escape,
        rhs_window,
        pass: lhs <= rhs_escape + rhs_window + slack,
    })
}
