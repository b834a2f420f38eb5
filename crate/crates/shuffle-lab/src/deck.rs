//! Deck model and fast simulation of random-to-random insertion shuffles.
//!
//! The deck is stored as an implicit order-statistic treap: in-order
//! traversal gives the deck from top (position 1) to bottom (position n).
//! Node index `card - 1` is the card's permanent arena slot, so both
//! rank -> card (select) and card -> rank (climb to root) run in O(log n).
//! Priorities are a fixed hash of the card number, which keeps the tree
//! shape independent of the simulation's random stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, mix64};

const NIL: u32 = u32::MAX;

// Guard rails for `simulate`: fail loudly instead of thrashing.
const MAX_N: usize = 1 << 24;
const MAX_STEPS: u64 = 1 << 40;

#[derive(Clone, Copy, Debug)]
struct Node {
    left: u32,
    right: u32,
    parent: u32,
    size: u32,
    prio: u64,
}

/// A deck of `n` cards; equivalently a permutation of [n] with dual
/// card <-> position lookup.
#[derive(Clone, Debug)]
pub struct Deck {
    n: usize,
    root: u32,
    nodes: Vec<Node>,
}

/// One shuffle move: remove the card at position `i`, reinsert it so that it
/// ends up at position `j`. `i == j` is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub i: usize,
    pub j: usize,
}

fn card_prio(card_idx: u32) -> u64 {
    mix64(card_idx as u64 ^ 0xd6e8_feb8_6659_fd93)
}

impl Deck {
    /// The identity deck: card c at position c.
    pub fn identity(n: usize) -> Deck {
        let order: Vec<u32> = (1..=n as u32).collect();
        Deck::from_order(&order).expect("identity order is valid")
    }

    /// Builds a deck from an explicit top-to-bottom ordering
    /// (`order[p-1]` is the card at position p).
    pub fn from_order(order: &[u32]) -> Result<Deck> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &c in order {
            if c == 0 || c as usize > n || seen[c as usize - 1] {
                return Err(Error::InvalidConfig(format!(
                    "order is not a permutation of 1..={n}"
                )));
            }
            seen[c as usize - 1] = true;
        }
        let mut nodes = vec![
            Node {
                left: NIL,
                right: NIL,
                parent: NIL,
                size: 1,
                prio: 0,
            };
            n
        ];
        for idx in 0..n as u32 {
            nodes[idx as usize].prio = card_prio(idx);
        }
        // Cartesian-tree build over the in-order sequence, O(n).
        let mut spine: Vec<u32> = Vec::with_capacity(64);
        for &c in order {
            let x = c - 1;
            let mut last = NIL;
            while let Some(&top) = spine.last() {
                if nodes[top as usize].prio < nodes[x as usize].prio {
                    last = top;
                    spine.pop();
                } else {
                    break;
                }
            }
            nodes[x as usize].left = last;
            if last != NIL {
                nodes[last as usize].parent = x;
            }
            if let Some(&top) = spine.last() {
                nodes[top as usize].right = x;
                nodes[x as usize].parent = top;
            } else {
                nodes[x as usize].parent = NIL;
            }
            spine.push(x);
        }
        let root = if n == 0 { NIL } else { spine[0] };
        let mut deck = Deck { n, root, nodes };
        if n > 0 {
            deck.recompute_sizes(root);
        }
        Ok(deck)
    }

    fn recompute_sizes(&mut self, from: u32) {
        // Iterative post-order.
        let mut stack = vec![(from, false)];
        while let Some((x, expanded)) = stack.pop() {
            if x == NIL {
                continue;
            }
            let node = self.nodes[x as usize];
            if expanded {
                self.nodes[x as usize].size = self.size(node.left) + self.size(node.right) + 1;
            } else {
                stack.push((x, true));
                stack.push((node.left, false));
                stack.push((node.right, false));
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn size(&self, x: u32) -> u32 {
        if x == NIL {
            0
        } else {
            self.nodes[x as usize].size
        }
    }

    fn rotate_up(&mut self, x: u32) {
        let p = self.nodes[x as usize].parent;
        debug_assert!(p != NIL);
        let g = self.nodes[p as usize].parent;
        if self.nodes[p as usize].left == x {
            let b = self.nodes[x as usize].right;
            self.nodes[p as usize].left = b;
            if b != NIL {
                self.nodes[b as usize].parent = p;
            }
            self.nodes[x as usize].right = p;
        } else {
            let b = self.nodes[x as usize].left;
            self.nodes[p as usize].right = b;
            if b != NIL {
                self.nodes[b as usize].parent = p;
            }
            self.nodes[x as usize].left = p;
        }
        self.nodes[p as usize].parent = x;
        self.nodes[x as usize].parent = g;
        if g == NIL {
            self.root = x;
        } else if self.nodes[g as usize].left == p {
            self.nodes[g as usize].left = x;
        } else {
            self.nodes[g as usize].right = x;
        }
        let pn = self.nodes[p as usize];
        self.nodes[p as usize].size = self.size(pn.left) + self.size(pn.right) + 1;
        let xn = self.nodes[x as usize];
        self.nodes[x as usize].size = self.size(xn.left) + self.size(xn.right) + 1;
    }

    fn select(&self, pos: usize) -> u32 {
        debug_assert!(pos >= 1 && pos as u32 <= self.size(self.root));
        let mut cur = self.root;
        let mut k = pos as u32;
        loop {
            let lsz = self.size(self.nodes[cur as usize].left);
            if k == lsz + 1 {
                return cur;
            }
            if k <= lsz {
                cur = self.nodes[cur as usize].left;
            } else {
                k -= lsz + 1;
                cur = self.nodes[cur as usize].right;
            }
        }
    }

    /// The card at position `pos` (1-indexed).
    pub fn card_at(&self, pos: usize) -> u32 {
        self.select(pos) + 1
    }

    /// The position of `card` (1-indexed); sigma(card).
    pub fn position_of(&self, card: u32) -> usize {
        let mut cur = card - 1;
        let mut pos = self.size(self.nodes[cur as usize].left) + 1;
        loop {
            let p = self.nodes[cur as usize].parent;
            if p == NIL {
                return pos as usize;
            }
            if self.nodes[p as usize].right == cur {
                pos += self.size(self.nodes[p as usize].left) + 1;
            }
            cur = p;
        }
    }

    /// Removes and returns the card at position `pos`. The deck shrinks by one.
    pub fn remove_at(&mut self, pos: usize) -> u32 {
        let x = self.select(pos);
        loop {
            let node = self.nodes[x as usize];
            if node.left == NIL && node.right == NIL {
                break;
            }
            let child = if node.left == NIL {
                node.right
            } else if node.right == NIL {
                node.left
            } else if self.nodes[node.left as usize].prio >= self.nodes[node.right as usize].prio {
                node.left
            } else {
                node.right
            };
            self.rotate_up(child);
        }
        let p = self.nodes[x as usize].parent;
        if p == NIL {
            self.root = NIL;
        } else if self.nodes[p as usize].left == x {
            self.nodes[p as usize].left = NIL;
        } else {
            self.nodes[p as usize].right = NIL;
        }
        let mut cur = p;
        while cur != NIL {
            self.nodes[cur as usize].size -= 1;
            cur = self.nodes[cur as usize].parent;
        }
        self.nodes[x as usize].parent = NIL;
        x + 1
    }

    /// Inserts `card` (currently outside the deck) so it lands at position
    /// `pos` in 1..=len+1. The deck grows by one.
    pub fn insert_at(&mut self, pos: usize, card: u32) {
        let x = card - 1;
        self.nodes[x as usize] = Node {
            left: NIL,
            right: NIL,
            parent: NIL,
            size: 1,
            prio: card_prio(x),
        };
        if self.root == NIL {
            self.root = x;
            return;
        }
        debug_assert!(pos >= 1 && pos as u32 <= self.size(self.root) + 1);
        let mut cur = self.root;
        let mut k = pos as u32;
        loop {
            self.nodes[cur as usize].size += 1;
            let node = self.nodes[cur as usize];
            let lsz = self.size(node.left);
            if k <= lsz + 1 {
                if node.left == NIL {
                    self.nodes[cur as usize].left = x;
                    self.nodes[x as usize].parent = cur;
                    break;
                }
                cur = node.left;
            } else {
                k -= lsz + 1;
                if node.right == NIL {
                    self.nodes[cur as usize].right = x;
                    self.nodes[x as usize].parent = cur;
                    break;
                }
                cur = node.right;
            }
        }
        while self.nodes[x as usize].parent != NIL
            && self.nodes[x as usize].prio
                > self.nodes[self.nodes[x as usize].parent as usize].prio
        {
            self.rotate_up(x);
        }
    }

    /// Applies one remove/reinsert move in place.
    pub fn apply_move(&mut self, m: Move) -> Result<()> {
        if m.i < 1 || m.i > self.n {
            return Err(Error::OutOfRange { pos: m.i, n: self.n });
        }
        if m.j < 1 || m.j > self.n {
            return Err(Error::OutOfRange { pos: m.j, n: self.n });
        }
        if m.i == m.j {
            return Ok(());
        }
        let card = self.remove_at(m.i);
        self.insert_at(m.j, card);
        Ok(())
    }

    /// Top-to-bottom card order, O(n).
    pub fn order(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n);
        let mut stack = Vec::with_capacity(64);
        let mut cur = self.root;
        while cur != NIL || !stack.is_empty() {
            while cur != NIL {
                stack.push(cur);
                cur = self.nodes[cur as usize].left;
            }
            let x = stack.pop().unwrap();
            out.push(x + 1);
            cur = self.nodes[x as usize].right;
        }
        out
    }

    /// card -> position map: `sigma()[c-1]` is the position of card c. O(n).
    pub fn sigma(&self) -> Vec<u32> {
        let order = self.order();
        let mut sig = vec![0u32; order.len()];
        for (p, &c) in order.iter().enumerate() {
            sig[c as usize - 1] = p as u32 + 1;
        }
        sig
    }

    /// Full-scan structural check used by tests: the stored tree describes a
    /// bijection consistent with both lookup directions.
    pub fn check_bijection(&self) -> bool {
        let order = self.order();
        if order.len() != self.n {
            return false;
        }
        let mut seen = vec![false; self.n];
        for (p, &c) in order.iter().enumerate() {
            let ci = c as usize - 1;
            if seen[ci] || self.position_of(c) != p + 1 || self.card_at(p + 1) != c {
                return false;
            }
            seen[ci] = true;
        }
        true
    }
}

/// The set A^t of cards never chosen for removal up to time t.
#[derive(Clone, Debug)]
pub struct SurvivorSet {
    n: usize,
    t: u64,
    alive: Vec<bool>,
    count: usize,
}

impl SurvivorSet {
    pub fn full(n: usize) -> SurvivorSet {
        SurvivorSet {
            n,
            t: 0,
            alive: vec![true; n],
            count: n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn contains(&self, card: u32) -> bool {
        self.alive[card as usize - 1]
    }

    pub fn mark_removed(&mut self, card: u32) {
        let slot = &mut self.alive[card as usize - 1];
        if *slot {
            *slot = false;
            self.count -= 1;
        }
    }
}

/// One shuffle step: removal position and insertion position drawn
/// independently and uniformly on [n]. Returns (removed card, insertion
/// position).
pub fn shuffle_step<R: Rng>(
    deck: &mut Deck,
    survivors: &mut SurvivorSet,
    rng: &mut R,
) -> (u32, usize) {
    let n = deck.n();
    let i = rng.random_range(1..=n);
    let j = rng.random_range(1..=n);
    let card = deck.remove_at(i);
    deck.insert_at(j, card);
    survivors.mark_removed(card);
    survivors.t += 1;
    (card, j)
}

/// A recorded run: replaying `steps` from the identity deck reproduces the
/// final deck exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub seed: u64,
    /// (removed card c_t, insertion position d_t), in step order.
    pub steps: Vec<(u32, u32)>,
}

impl Trajectory {
    pub fn replay(&self) -> (Deck, SurvivorSet) {
        let mut deck = Deck::identity(self.n);
        let mut surv = SurvivorSet::full(self.n);
        for &(card, dpos) in &self.steps {
            let i = deck.position_of(card);
            deck.remove_at(i);
            deck.insert_at(dpos as usize, card);
            surv.mark_removed(card);
            surv.t += 1;
        }
        (deck, surv)
    }
}

fn check_sim_budget(n: usize, t: u64) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::CapExceeded {
            what: "deck size",
            detail: format!("n={n}, supported 1..={MAX_N}"),
        });
    }
    if t > MAX_STEPS {
        return Err(Error::CapExceeded {
            what: "step count",
            detail: format!("t={t}, supported <= {MAX_STEPS}"),
        });
    }
    Ok(())
}

/// Runs `t` shuffle steps from the identity deck; deterministic in
/// `(n, t, seed)`.
pub fn simulate(n: usize, t: u64, seed: u64) -> Result<(Deck, SurvivorSet)> {
    check_sim_budget(n, t)?;
    let mut rng = rng::stream(seed, rng::tag::SHUFFLE, 0);
    let mut deck = Deck::identity(n);
    let mut surv = SurvivorSet::full(n);
    for _ in 0..t {
        shuffle_step(&mut deck, &mut surv, &mut rng);
    }
    Ok((deck, surv))
}

/// As `simulate`, additionally recording the trajectory.
pub fn simulate_recorded(n: usize, t: u64, seed: u64) -> Result<(Deck, SurvivorSet, Trajectory)> {
    check_sim_budget(n, t)?;
    let mut rng = rng::stream(seed, rng::tag::SHUFFLE, 0);
    let mut deck = Deck::identity(n);
    let mut surv = SurvivorSet::full(n);
    let mut steps = Vec::with_capacity(t as usize);
    for _ in 0..t {
        let (card, dpos) = shuffle_step(&mut deck, &mut surv, &mut rng);
        steps.push((card, dpos as u32));
    }
    Ok((deck, surv, Trajectory { n, seed, steps }))
}
