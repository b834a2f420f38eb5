use std::time::Instant;
fn main() {
    let (n, t) = (20_000usize, 77_087u64);
    let start = Instant::now();
    let mut acc = 0u64;
    for rep in 0..10u64 {
        let (deck, survivors) = shuffle_lab::deck::simulate(n, t, rep).unwrap();
        acc += deck.card_at(1) as u64 + survivors.count() as u64;
    }
    let el = start.elapsed();
    println!("10 replicas of n={n}, t={t}: {:?} ({:.0} ns/move) [{acc}]",
        el, el.as_nanos() as f64 / (10.0 * t as f64));
}
