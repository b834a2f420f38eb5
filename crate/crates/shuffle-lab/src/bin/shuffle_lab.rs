//! Command-line front end: every experiment as a subcommand with
//! reproducible seeds and CSV/JSON outputs.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 when the run completed
//! but a checked statistical/exactness property failed.

use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shuffle_lab::coupling::{Branch, PairedDecksAB, PairedDecks12};
use shuffle_lab::deck::{self, Deck, SurvivorSet};
use shuffle_lab::exact;
use shuffle_lab::kernel::{self, ConditionalKernel, BERRY_ESSEEN_C};
use shuffle_lab::rng::{self, parse_seed, tag};
use shuffle_lab::stats;
use shuffle_lab::tv::{self, ExperimentConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "shuffle-lab", version, about = "random-to-random insertion shuffle laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Master seed (decimal or 0x-hex); falls back to $SHUFFLE_LAB_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the primary CSV/JSON payload to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Also write a gnuplot script referencing the --out CSV
    #[arg(long, global = true)]
    plot: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact TV distance to uniform over t = 0..t_max (CSV: n,t,tv)
    ExactTv {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t_max: u64,
    },
    /// Simulate full decks; CSV: replica,survivors (plus final order if --emit-order)
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        /// print the final top-to-bottom order of each replica
        #[arg(long)]
        emit_order: bool,
    },
    /// Empirical conditioned single-card transition frequencies vs the formula
    KernelCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 5e-3)]
        tol: f64,
    },
    /// Truncated-chain identities (exact at small n) and a sampled path dump
    ZetaCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        t: u64,
    },
    /// Decomposition checks: S+X+Y law vs the truncated chain, path dump
    SxyCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        t: u64,
    },
    /// Normal-limit test of the conditioned chain (JSON summary)
    Clt {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 20_000)]
        reps: u64,
        /// fail (exit 2) when the KS distance reaches this value
        #[arg(long)]
        ks_tol: Option<f64>,
    },
    /// Path-maximum exceedance frequencies over a grid of start positions
    Delocalization {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
    },
    /// Band-statistic samples under the shuffle (CSV: replica,total,survivors,removed)
    DeltaStat {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        t: Option<u64>,
        #[arg(long)]
        cn: Option<f64>,
        #[arg(long, default_value_t = 1_000)]
        reps: u64,
    },
    /// Neighbor-transposed deck pair: run monitors (exit 2 on any violation)
    CouplingAb {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long, default_value_t = 1_000)]
        runs: u64,
    },
    /// Sandwich-coupled deck pair: monitor log (CSV: step,I,J,M,violation)
    #[command(name = "coupling-12")]
    Coupling12 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long, default_value_t = 1_000)]
        runs: u64,
    },
    /// Threshold-event separation experiment (JSON with tv_lower and CIs)
    TvBound {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long)]
        cn: Option<f64>,
        #[arg(long)]
        t: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
    },
    /// tv-bound over a grid of times or schedule constants (CSV table)
    CutoffScan {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// comma-separated explicit times
        #[arg(long)]
        t_grid: Option<String>,
        /// comma-separated schedule constants
        #[arg(long)]
        cn_grid: Option<String>,
        #[arg(long, default_value_t = 1_000)]
        reps: u64,
    },
}

fn resolve_seed(cli_seed: &Option<String>) -> Result<u64, String> {
    let raw = match cli_seed {
        Some(s) => s.clone(),
        None => match std::env::var("SHUFFLE_LAB_SEED") {
            Ok(s) => s,
            Err(_) => return Ok(0),
        },
    };
    parse_seed(&raw).map_err(|e| e.to_string())
}

fn provenance(cmd_line: &str, seed: u64) -> String {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in cmd_line.bytes() {
        h = rng::mix64(h ^ b as u64);
    }
    format!("# shuffle-lab v{VERSION} seed={seed} config-hash={h:#018x}\n# {cmd_line}")
}

fn emit(out: &Option<std::path::PathBuf>, payload: &str) -> std::io::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(payload.as_bytes())?;
            f.write_all(b"\n")
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe (e.g. `| head`) is not an error for us
            match writeln!(stdout, "{payload}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
    }
}

fn emit_plot(
    plot: &Option<std::path::PathBuf>,
    out: &Option<std::path::PathBuf>,
    title: &str,
    using: &str,
) -> std::io::Result<()> {
    let Some(plot_path) = plot else { return Ok(()) };
    let data = out
        .as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "data.csv".into());
    let script = format!(
        "set datafile separator comma\nset key outside\nset title \"{title}\"\nplot \"{data}\" {using}\n"
    );
    std::fs::write(plot_path, script)
}

/// Outcome of a subcommand: Ok(property_failed?) or a runtime error string.
type CmdResult = Result<bool, String>;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success, anything else is usage error
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let seed = match resolve_seed(&cli.seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    println!("{}", provenance(&argv[1..].join(" "), seed));
    let res = run(&cli, seed);
    match res {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("FAILED: a checked property did not hold (see output)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli, seed: u64) -> CmdResult {
    match &cli.cmd {
        Cmd::ExactTv { n, t_max } => exact_tv(*n, *t_max, &cli.out, &cli.plot),
        Cmd::Simulate {
            n,
            t,
            reps,
            emit_order,
        } => simulate_cmd(*n, *t, *reps, *emit_order, seed, &cli.out),
        Cmd::KernelCheck { n, j, t, reps, tol } => kernel_check(*n, *j, *t, *reps, *tol, seed, &cli.out),
        Cmd::ZetaCheck { n, j, m, t } => zeta_check(*n, *j, *m, *t, seed, &cli.out),
        Cmd::SxyCheck { n, j, m, t } => sxy_check(*n, *j, *m, *t, seed, &cli.out),
        Cmd::Clt {
            n,
            j,
            t,
            reps,
            ks_tol,
        } => clt_cmd(*n, *j, *t, *reps, *ks_tol, seed, &cli.out),
        Cmd::Delocalization { n, t, alpha, reps } => {
            delocalization_cmd(*n, *t, *alpha, *reps, seed, &cli.out, &cli.plot)
        }
        Cmd::DeltaStat {
            n,
            eps,
            alpha,
            t,
            cn,
            reps,
        } => delta_stat(*n, *eps, *alpha, *t, *cn, *reps, seed, &cli.out),
        Cmd::CouplingAb { n, steps, runs } => coupling_ab(*n, *steps, *runs, seed, &cli.out),
        Cmd::Coupling12 { n, m, steps, runs } => coupling_12(*n, *m, *steps, *runs, seed, &cli.out),
        Cmd::TvBound {
            n,
            eps,
            alpha,
            k,
            cn,
            t,
            reps,
        } => tv_bound(*n, *eps, *alpha, *k, *cn, *t, *reps, seed, &cli.out),
        Cmd::CutoffScan {
            n,
            eps,
            alpha,
            k,
            t_grid,
            cn_grid,
            reps,
        } => cutoff_scan_cmd(*n, *eps, *alpha, *k, t_grid, cn_grid, *reps, seed, &cli.out, &cli.plot),
    }
}

fn exact_tv(
    n: usize,
    t_max: u64,
    out: &Option<std::path::PathBuf>,
    plot: &Option<std::path::PathBuf>,
) -> CmdResult {
    let ev = exact::Evolver::new(n).map_err(|e| e.to_string())?;
    let mut dist = exact::DistributionVector::point_mass_identity(n);
    let mut csv = String::from("n,t,tv");
    for t in 0..=t_max {
        if t > 0 {
            dist = ev.step(&dist);
        }
        let _ = write!(csv, "\n{n},{t},{:.12}", exact::tv_to_uniform(&dist));
    }
    emit(out, &csv).map_err(|e| e.to_string())?;
    emit_plot(plot, out, "exact TV to uniform", "using 2:3 with lines skip 1")
        .map_err(|e| e.to_string())?;
    Ok(false)
}

fn simulate_cmd(
    n: usize,
    t: u64,
    reps: u64,
    emit_order: bool,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let mut csv = String::from(if emit_order {
        "replica,survivors,order"
    } else {
        "replica,survivors"
    });
    for rep in 0..reps {
        let child = rng::child_seed(seed, tag::SHUFFLE, rep);
        let (deck, survivors) = deck::simulate(n, t, child).map_err(|e| e.to_string())?;
        if emit_order {
            let order: Vec<String> = deck.order().iter().map(|c| c.to_string()).collect();
            let _ = write!(csv, "\n{rep},{},{}", survivors.count(), order.join(" "));
        } else {
            let _ = write!(csv, "\n{rep},{}", survivors.count());
        }
    }
    emit(out, &csv).map_err(|e| e.to_string())?;
    Ok(false)
}

fn kernel_check(
    n: usize,
    j: usize,
    t: u64,
    reps: u64,
    tol: f64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let kernel = ConditionalKernel::new(n).map_err(|e| e.to_string())?;
    if j < 1 || j > n {
        return Err(format!("j={j} out of range"));
    }
    use rayon::prelude::*;
    // per-state transition counts: [down, stay, up], conditioned on the
    // tracked card not being the one removed this step
    let buckets: Vec<[u64; 3]> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::SHUFFLE, rep);
            let mut deck = Deck::identity(n);
            let mut survivors = SurvivorSet::full(n);
            let mut local = vec![[0u64; 3]; n + 1];
            let mut pos = j;
            for _ in 0..t {
                let (card, _) = deck::shuffle_step(&mut deck, &mut survivors, &mut rng);
                let new_pos = deck.position_of(j as u32);
                if card as usize != j {
                    let slot = (new_pos as i64 - pos as i64 + 1) as usize;
                    local[pos][slot] += 1;
                }
                pos = new_pos;
            }
            local
        })
        .reduce(
            || vec![[0u64; 3]; n + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    for k in 0..3 {
                        x[k] += y[k];
                    }
                }
                a
            },
        );
    let mut max_dev: f64 = 0.0;
    let mut considered = 0usize;
    for i in 1..=n {
        let total: u64 = buckets[i].iter().sum();
        if total < 1_000 {
            continue; // too few visits for a meaningful frequency
        }
        considered += 1;
        let (d, s, u) = kernel.probs(i).map_err(|e| e.to_string())?;
        for (kk, want) in [(0usize, d), (1, s), (2, u)] {
            let got = buckets[i][kk] as f64 / total as f64;
            max_dev = max_dev.max((got - want).abs());
        }
    }
    let failed = max_dev >= tol || considered == 0;
    let payload = serde_json::json!({
        "n": n, "j": j, "t": t, "replicas": reps,
        "states_with_enough_visits": considered,
        "max_abs_deviation": max_dev,
        "tolerance": tol,
        "pass": !failed,
    });
    emit(out, &serde_json::to_string_pretty(&payload).unwrap()).map_err(|e| e.to_string())?;
    Ok(failed)
}

fn zeta_check(
    n: usize,
    j: usize,
    m: i64,
    t: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let mut report = serde_json::Map::new();
    let mut failed = false;
    // sampled path dump (always available)
    let path = kernel::simulate_zeta(n, j, m, t, seed).map_err(|e| e.to_string())?;
    let mut csv = String::from("m,state");
    for (step, s) in path.iter().enumerate() {
        let _ = write!(csv, "\n{step},{s}");
    }
    report.insert("path_csv".into(), serde_json::Value::String(csv));
    // exact identities at enumerable sizes
    if n <= 6 && t <= 5 {
        let marg = kernel::zeta_marginal(n, j, m, t).map_err(|e| e.to_string())?;
        if m >= t as i64 {
            let law = exact::conditional_position_law(n, j, t).map_err(|e| e.to_string())?;
            let dev = (1..=n)
                .map(|p| (marg.get(&(p as i64)).copied().unwrap_or(0.0) - law[p - 1]).abs())
                .fold(0.0f64, f64::max);
            report.insert("untruncated_marginal_dev".into(), dev.into());
            failed |= dev >= 1e-12;
        }
        let zeta_paths = kernel::zeta_path_law(n, j, m, t).map_err(|e| e.to_string())?;
        let cond_paths = exact::conditioned_path_law(n, j, t).map_err(|e| e.to_string())?;
        for u in 1..=m.min(n as i64) {
            let z = kernel::path_exceedance(&zeta_paths, j as i64, u);
            let c = kernel::path_exceedance(&cond_paths, j as i64, u);
            failed |= (z - c).abs() >= 1e-12;
        }
        report.insert(
            "escape_probability".into(),
            kernel::path_exceedance(&zeta_paths, j as i64, m).into(),
        );
        report.insert("exceedance_identity_checked".into(), true.into());
    }
    // closed-form tail bounds at the default window/deviation parameters
    let delta = kernel::default_delta(n, m, t);
    let terms =
        kernel::bound_evaluators(n, j, m, t, delta, m as f64, BERRY_ESSEEN_C).map_err(|e| e.to_string())?;
    report.insert("bound_terms".into(), serde_json::to_value(&terms).unwrap());
    report.insert("pass".into(), (!failed).into());
    emit(
        out,
        &serde_json::to_string_pretty(&serde_json::Value::Object(report)).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    Ok(failed)
}

fn sxy_check(
    n: usize,
    j: usize,
    m: i64,
    t: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let mut failed = false;
    let mut report = serde_json::Map::new();
    let path = kernel::simulate_sxy(n, j, m, t, seed).map_err(|e| e.to_string())?;
    let mut csv = String::from("m,S,X,Y");
    for (step, (s, x, y)) in path.iter().enumerate() {
        let _ = write!(csv, "\n{step},{s},{x},{y}");
    }
    report.insert("path_csv".into(), serde_json::Value::String(csv));
    if t <= 10 {
        let joint = kernel::sxy_exact_law(n, j, m, t).map_err(|e| e.to_string())?;
        let mut sum_law = std::collections::BTreeMap::new();
        for (&(s, x, y), &p) in &joint {
            *sum_law.entry(s + x + y).or_insert(0.0) += p;
        }
        let zeta = kernel::zeta_marginal(n, j, m, t).map_err(|e| e.to_string())?;
        let mut tv = 0.0;
        for (&k, &p) in &zeta {
            tv += 0.5 * (sum_law.get(&(k - j as i64)).copied().unwrap_or(0.0) - p).abs();
        }
        report.insert("sum_vs_zeta_tv".into(), tv.into());
        failed |= tv >= 1e-12;
    }
    report.insert("pass".into(), (!failed).into());
    emit(
        out,
        &serde_json::to_string_pretty(&serde_json::Value::Object(report)).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    Ok(failed)
}

fn clt_cmd(
    n: usize,
    j: usize,
    t: u64,
    reps: u64,
    ks_tol: Option<f64>,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let r = stats::clt_test(n, j, t, reps, seed).map_err(|e| e.to_string())?;
    emit(out, &serde_json::to_string_pretty(&r).unwrap()).map_err(|e| e.to_string())?;
    Ok(match ks_tol {
        Some(tol) => r.degenerate || r.ks >= tol,
        None => false,
    })
}

fn delocalization_cmd(
    n: usize,
    t: u64,
    alpha: f64,
    reps: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
    plot: &Option<std::path::PathBuf>,
) -> CmdResult {
    let r = stats::delocalization_test(n, t, alpha, reps, seed).map_err(|e| e.to_string())?;
    let se = (r.bound.max(1.0 / reps as f64) / reps as f64).sqrt();
    let failed = r.max_frequency > r.bound + 3.0 * se;
    emit(out, &serde_json::to_string_pretty(&r).unwrap()).map_err(|e| e.to_string())?;
    emit_plot(plot, out, "path-maximum exceedance by start position", "using 1:2 with points")
        .map_err(|e| e.to_string())?;
    Ok(failed)
}

#[allow(clippy::too_many_arguments)]
fn delta_stat(
    n: usize,
    eps: f64,
    alpha: f64,
    t: Option<u64>,
    cn: Option<f64>,
    reps: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    use rayon::prelude::*;
    let band = stats::BandConfig::new(n, eps, alpha).map_err(|e| e.to_string())?;
    let t = match (t, cn) {
        (Some(t), _) => t,
        (None, Some(c)) => stats::schedule(n, c).map_err(|e| e.to_string())?.t_n,
        (None, None) => return Err("need --t or --cn".into()),
    };
    let rows: Vec<stats::DeltaCounts> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let child = rng::child_seed(seed, tag::SHUFFLE, rep);
            let (deck, survivors) = deck::simulate(n, t, child).expect("valid sim");
            stats::delta_counts(&deck, &survivors, &band).expect("sizes match")
        })
        .collect();
    let mut csv = String::from("replica,total,survivors,removed");
    for (rep, c) in rows.iter().enumerate() {
        let _ = write!(csv, "\n{rep},{},{},{}", c.total, c.survivors, c.removed);
    }
    let mean_total = rows.iter().map(|c| c.total as f64).sum::<f64>() / reps as f64;
    let moments = stats::uniform_delta_moments(&band);
    let _ = write!(
        csv,
        "\n# t={t} mean_total={mean_total:.4} uniform_mean={:.4} uniform_variance_bound={:.4}",
        moments.mean, moments.variance_bound
    );
    emit(out, &csv).map_err(|e| e.to_string())?;
    Ok(false)
}

fn coupling_ab(
    n: usize,
    steps: u64,
    runs: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    use rayon::prelude::*;
    if n < 5 {
        return Err("need n >= 5".into());
    }
    let (card_i, card_j) = ((n / 2) as u32, (n / 2 + 2) as u32);
    let violations: u64 = (0..runs)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::COUPLING, rep);
            // randomize the starting state with ordinary shuffles first
            let child = rng::child_seed(seed, tag::SHUFFLE, rep);
            let (deck, _) = deck::simulate(n, 3 * n as u64, child).expect("valid sim");
            let branch = if rep % 2 == 0 { Branch::Lower } else { Branch::Higher };
            let Ok(mut pair) = PairedDecksAB::init(deck, card_i, card_j, branch) else {
                return 0; // branch event not available from this start
            };
            let mut v = 0u64;
            for _ in 0..steps {
                if !pair.step(&mut rng).ok {
                    v += 1;
                }
            }
            v
        })
        .sum();
    let payload = serde_json::json!({
        "n": n, "steps": steps, "runs": runs,
        "violations": violations,
        "pass": violations == 0,
    });
    emit(out, &serde_json::to_string_pretty(&payload).unwrap()).map_err(|e| e.to_string())?;
    Ok(violations > 0)
}

fn coupling_12(
    n: usize,
    m: usize,
    steps: u64,
    runs: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    use rayon::prelude::*;
    let violations: u64 = (0..runs)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, tag::COUPLING, rep);
            let mut pair = PairedDecks12::init(n, m).expect("valid init");
            let mut v = 0u64;
            for _ in 0..steps {
                if pair.step(&mut rng).violation {
                    v += 1;
                }
            }
            v
        })
        .sum();
    // monitor log of one representative run
    let mut csv = String::from("step,I,J,M,violation");
    let mut rng0 = rng::stream(seed, tag::COUPLING, 0);
    let mut pair = PairedDecks12::init(n, m).map_err(|e| e.to_string())?;
    for _ in 0..steps.min(10_000) {
        let mon = pair.step(&mut rng0);
        let _ = write!(csv, "\n{},{},{},{},{}", mon.step, mon.i, mon.j, mon.m, mon.violation as u8);
    }
    let _ = write!(csv, "\n# runs={runs} total_violations={violations}");
    emit(out, &csv).map_err(|e| e.to_string())?;
    Ok(violations > 0)
}

#[allow(clippy::too_many_arguments)]
fn tv_bound(
    n: usize,
    eps: f64,
    alpha: f64,
    k: f64,
    cn: Option<f64>,
    t: Option<u64>,
    reps: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
) -> CmdResult {
    let cfg = ExperimentConfig {
        n,
        epsilon: eps,
        alpha,
        k,
        c_n: cn,
        t,
        shuffle_replicas: reps,
        uniform_replicas: reps,
        seed,
    };
    let r = tv::run_experiment(&cfg).map_err(|e| e.to_string())?;
    emit(out, &serde_json::to_string_pretty(&r).unwrap()).map_err(|e| e.to_string())?;
    Ok(false)
}

#[allow(clippy::too_many_arguments)]
fn cutoff_scan_cmd(
    n: usize,
    eps: f64,
    alpha: f64,
    k: f64,
    t_grid: &Option<String>,
    cn_grid: &Option<String>,
    reps: u64,
    seed: u64,
    out: &Option<std::path::PathBuf>,
    plot: &Option<std::path::PathBuf>,
) -> CmdResult {
    let parse_grid = |s: &str| -> Result<Vec<f64>, String> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect()
    };
    let times: Vec<u64> = match (t_grid, cn_grid) {
        (Some(tg), _) => parse_grid(tg)?.into_iter().map(|x| x as u64).collect(),
        (None, Some(cg)) => parse_grid(cg)?
            .into_iter()
            .map(|c| stats::schedule(n, c).map(|s| s.t_n).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?,
        (None, None) => return Err("need --t-grid or --cn-grid".into()),
    };
    let base = ExperimentConfig {
        n,
        epsilon: eps,
        alpha,
        k,
        c_n: None,
        t: Some(0),
        shuffle_replicas: reps,
        uniform_replicas: reps,
        seed,
    };
    let results = tv::cutoff_scan(&base, &times).map_err(|e| e.to_string())?;
    let mut csv = String::from("n,t,p_shuffle,p_uniform,tv_lower");
    for r in &results {
        let _ = write!(
            csv,
            "\n{n},{},{:.6},{:.6},{:.6}",
            r.t, r.p_shuffle, r.p_uniform, r.tv_lower
        );
    }
    emit(out, &csv).map_err(|e| e.to_string())?;
    emit_plot(plot, out, "TV lower bound vs time", "using 2:5 with linespoints skip 1")
        .map_err(|e| e.to_string())?;
    Ok(false)
}
