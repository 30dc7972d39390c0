//! Acceptance suite: eight system-level checks, each printing one
//! `[acceptance] <name>: PASS|FAIL` line (run with `--nocapture` to see them
//! as they happen). Tolerances and instance counts are pinned as constants
//! next to each check.

mod common;

use std::time::Instant;

use common::{
    grid_best_cellular, grid_best_dedicated, grid_best_reuse_in_class, random_channel,
    random_windows,
};
use d2dvid::channel::{sample_gain, sample_slot, FadingConfig, Link};
use d2dvid::optimizer::{solve_all, solve_reuse, solve_reuse_interior, RateWindowPair};
use d2dvid::rate::{rates_reuse, Mode, RadioParams};
use d2dvid::sim::{run, Scenario};
use d2dvid::trace::{build_curves, synthetic_trace, SyntheticTraceSpec, VideoTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn radio() -> RadioParams {
    RadioParams {
        bandwidth: 1.0e6,
        noise_density: 1.0e-6,
        p_bmax: 1.584_893_192_461_113_5, // 2 dB
        p_dmax: 1.0,                     // 0 dB
    }
}

fn report(name: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "[acceptance] {name} failed: {detail}");
}

// ---------------------------------------------------------------------------

/// Whenever the interior reuse solver returns a power vector, evaluating the
/// rate law at those powers must reproduce both window ceilings.
#[test]
fn reuse_interior_solutions_reproduce_both_ceilings() {
    const INSTANCES: usize = 100_000;
    const REL_TOL: f64 = 1e-9;
    const BUDGET_S: f64 = 10.0;

    let p = radio();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE01);
    let start = Instant::now();
    let mut solved = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let ch = random_channel(&mut rng);
        let w = random_windows(&mut rng, p.bandwidth);
        if let Some(powers) = solve_reuse_interior(&p, &ch, &w) {
            solved += 1;
            let r = rates_reuse(&p, &ch, &powers);
            let e1 = (r.r1 - w.beta1).abs() / w.beta1;
            let e2 = (r.r2 - w.beta2).abs() / w.beta2;
            worst = worst.max(e1).max(e2);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < REL_TOL && elapsed < BUDGET_S && solved > 0;
    report(
        "reuse interior round-trip",
        pass,
        &format!(
            "{solved}/{INSTANCES} interior-feasible, worst rel err {worst:.3e}, {elapsed:.2}s"
        ),
    );
}

/// On boundary instances (interior infeasible), a dense power grid restricted
/// to the solver's returned priority class must not beat its sum rate.
#[test]
fn reuse_boundary_endpoints_beat_a_dense_power_grid() {
    const INSTANCES: usize = 10_000;
    const GRID: usize = 500;
    const REL_TOL: f64 = 1e-3;
    const BUDGET_S: f64 = 60.0;

    let p = radio();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE02);
    let start = Instant::now();
    let mut tested = 0usize;
    let mut scored = 0usize;
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    while tested < INSTANCES {
        let ch = random_channel(&mut rng);
        let w = random_windows(&mut rng, p.bandwidth);
        if solve_reuse_interior(&p, &ch, &w).is_some() {
            continue; // boundary cases only
        }
        tested += 1;
        let decision = solve_reuse(&p, &ch, &w);
        if let Some(grid_best) = grid_best_reuse_in_class(&p, &ch, &w, decision.priority, GRID) {
            scored += 1;
            let own = decision.total_rate();
            let excess = (grid_best - own) / own.abs().max(1.0);
            if excess > REL_TOL {
                violations += 1;
                if violations <= 5 {
                    println!(
                        "  violation: grid {grid_best:.6e} vs solver {own:.6e} \
                         (excess {excess:.3e}) at priority {:?}",
                        decision.priority
                    );
                }
            }
            worst = worst.max(excess);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = violations == 0 && scored > 0 && elapsed < BUDGET_S;
    report(
        "reuse boundary endpoint optimality",
        pass,
        &format!(
            "{tested} boundary instances ({scored} with in-class grid cells), \
             {GRID}x{GRID} grid, {violations} violations, worst excess {worst:.3e}, {elapsed:.1}s"
        ),
    );
}

/// The relay and dedicated closed forms must match an exhaustive per-power
/// scan under the same ceilings and caps.
#[test]
fn relay_and_dedicated_closed_forms_match_grid_search() {
    const INSTANCES: usize = 10_000;
    const GRID: usize = 500;
    const REL_TOL: f64 = 1e-6;
    const BUDGET_S: f64 = 30.0;

    let p = radio();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE03);
    let start = Instant::now();
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let ch = random_channel(&mut rng);
        let w = random_windows(&mut rng, p.bandwidth);
        let all = solve_all(&p, &ch, &w);
        let pairs = [
            (all[0].total_rate(), grid_best_cellular(&p, &ch, &w, GRID)),
            (all[1].total_rate(), grid_best_dedicated(&p, &ch, &w, GRID)),
        ];
        for (own, grid_best) in pairs {
            let excess = (grid_best - own) / own.abs().max(1.0);
            worst = worst.max(excess);
            if excess > REL_TOL {
                violations += 1;
                if violations <= 5 {
                    println!("  violation: grid {grid_best:.9e} vs closed form {own:.9e}");
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = violations == 0 && elapsed < BUDGET_S;
    report(
        "orthogonal-mode closed forms vs grid",
        pass,
        &format!(
            "{INSTANCES} instances, {violations} violations, worst excess {worst:.3e}, \
             {elapsed:.1}s"
        ),
    );
}

/// Random traces driven with rates inside their own windows must never
/// underflow or overflow.
#[test]
fn in_window_schedules_never_underflow_or_overflow() {
    const TRACES: usize = 1_000;
    const MAX_FRAMES: usize = 200;

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE04);
    let start = Instant::now();
    let mut underflows = 0usize;
    let mut clips = 0usize;
    let mut slots = 0usize;
    for _ in 0..TRACES {
        let frames: Vec<u64> = (0..rng.gen_range(1..=MAX_FRAMES))
            .map(|_| rng.gen_range(0..200_000))
            .collect();
        let trace = VideoTrace::new(30.0, frames).unwrap();
        let buffer = rng.gen_range(1.0..2.0) * trace.max_frame_bits().max(1) as f64;
        let curves = build_curves(&trace, buffer);
        let mut a = 0.0f64;
        for t in 1..=curves.len() {
            let (alpha, beta) = curves.rate_window(t, a);
            let rate = alpha + rng.gen::<f64>() * (beta - alpha).max(0.0);
            let step = curves.advance(t, a, rate);
            underflows += step.underflow as usize;
            clips += step.clipped as usize;
            a = step.a;
            slots += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = underflows == 0 && clips == 0;
    report(
        "feasible-window buffer sandwich",
        pass,
        &format!("{TRACES} traces / {slots} slots, {underflows} underflows, {clips} clips, {elapsed:.2}s"),
    );
}

/// At every slot of a selection run the chosen mode's priority matches the
/// minimum over all three modes re-solved from the same state, and its sum
/// rate is maximal within that class.
#[test]
fn per_slot_selection_dominates_every_pinned_mode() {
    const SLOTS: usize = 10_000;
    const REL_TOL: f64 = 1e-9;

    let spec = SyntheticTraceSpec {
        frames: SLOTS,
        median_frame_bits: 2.0e4,
        ..SyntheticTraceSpec::default()
    };
    let sc = Scenario {
        trace_c1: synthetic_trace(&spec, 0xD05),
        trace_d2: synthetic_trace(&spec, 0xD06),
        radio: radio(),
        fading: FadingConfig::with_seed(0xACCE05),
        buffer_factor: 1.5,
        prefetch_slots: 0,
        forced_mode: None,
    };
    let start = Instant::now();
    let result = run(&sc).unwrap();
    let mut violations = 0usize;
    for rec in &result.records {
        let per_mode = rec.per_mode.as_ref().expect("selection run");
        // Independent re-solve from the recorded pre-slot state.
        let ch = sample_slot(&sc.fading, rec.t as u64);
        let w = RateWindowPair::new(rec.alpha1, rec.beta1, rec.alpha2, rec.beta2);
        let fresh = solve_all(&sc.radio, &ch, &w);
        let min_rank = fresh.iter().map(|d| d.priority.rank()).min().unwrap();
        let best_in_class = fresh
            .iter()
            .filter(|d| d.priority.rank() == min_rank)
            .map(|d| d.total_rate())
            .fold(f64::NEG_INFINITY, f64::max);
        let own_rate = rec.r1 + rec.r2;
        let ok = rec.priority == min_rank
            && per_mode
                .iter()
                .zip(&fresh)
                .all(|(logged, d)| logged.priority == d.priority.rank())
            && own_rate >= best_in_class - REL_TOL * best_in_class.abs().max(1.0);
        if !ok {
            violations += 1;
            if violations <= 5 {
                println!(
                    "  violation at t={}: picked {:?} rank {} rate {own_rate:.4e}, \
                     min rank {min_rank}, best {best_in_class:.4e}",
                    rec.t, rec.mode, rec.priority
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "per-slot selection dominance",
        violations == 0,
        &format!("{SLOTS} slots, {violations} violations, {elapsed:.2}s"),
    );
}

/// Over a shared-seed Monte Carlo sweep, per-slot mode selection must match
/// or beat the best pinned mode on mean underflow probability at both
/// receivers.
#[test]
fn mode_selection_minimizes_mean_underflow_probability() {
    const FRAMES: usize = 5_000;
    const SEEDS: u64 = 32;
    const SLACK: f64 = 0.005;
    const BUDGET_S: f64 = 120.0;

    let spec = SyntheticTraceSpec {
        frames: FRAMES,
        median_frame_bits: 2.0e4,
        ..SyntheticTraceSpec::default()
    };
    let base = Scenario {
        trace_c1: synthetic_trace(&spec, 0xFEED1),
        trace_d2: synthetic_trace(&spec, 0xFEED2),
        radio: radio(),
        fading: FadingConfig::with_seed(0),
        buffer_factor: 1.5,
        prefetch_slots: 0,
        forced_mode: None,
    };

    let start = Instant::now();
    let strategies: [Option<Mode>; 4] = [
        Some(Mode::Cellular),
        Some(Mode::Dedicated),
        Some(Mode::Reuse),
        None,
    ];
    // means[strategy] = (mean underflow probability at c1, at d2)
    let mut means = [[0.0f64; 2]; 4];
    for (si, strategy) in strategies.into_iter().enumerate() {
        let sc = base.with_forced_mode(strategy);
        for seed in 0..SEEDS {
            let result = run(&sc.with_seed(seed)).unwrap();
            means[si][0] += result.summary.c1.underflow_probability / SEEDS as f64;
            means[si][1] += result.summary.d2.underflow_probability / SEEDS as f64;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();

    let best_single_c1 = means[0][0].min(means[1][0]).min(means[2][0]);
    let best_single_d2 = means[0][1].min(means[1][1]).min(means[2][1]);
    let (sel_c1, sel_d2) = (means[3][0], means[3][1]);
    let pass =
        sel_c1 <= best_single_c1 + SLACK && sel_d2 <= best_single_d2 + SLACK && elapsed < BUDGET_S;
    report(
        "mode selection minimizes underflow",
        pass,
        &format!(
            "mean underflow over {SEEDS} seeds: \
             c1 [cell {:.4}, ded {:.4}, reuse {:.4}, select {:.4}] \
             d2 [cell {:.4}, ded {:.4}, reuse {:.4}, select {:.4}], {elapsed:.1}s",
            means[0][0], means[1][0], means[2][0], sel_c1,
            means[0][1], means[1][1], means[2][1], sel_d2,
        ),
    );
}

/// Sampled gains must match the configured exponential law: means within 1%
/// per link at a million draws, and a Kolmogorov-Smirnov check at the 1%
/// level on a hundred thousand draws.
#[test]
fn fading_gains_follow_the_configured_exponential_law() {
    const MEAN_N: u64 = 1_000_000;
    const MEAN_REL_TOL: f64 = 0.01;
    const KS_N: usize = 100_000;
    const KS_CRIT_1PCT: f64 = 1.6276; // asymptotic critical value / sqrt(n)
    const BUDGET_S: f64 = 10.0;

    let config = FadingConfig::with_seed(0xACCE07);
    let start = Instant::now();

    let mut worst_rel = 0.0f64;
    for (li, link) in Link::ALL.into_iter().enumerate() {
        let mut sum = 0.0f64;
        for slot in 0..MEAN_N {
            sum += sample_gain(&config, slot, link);
        }
        let mean = sum / MEAN_N as f64;
        let rel = (mean - config.mean_gain[li]).abs() / config.mean_gain[li];
        worst_rel = worst_rel.max(rel);
    }

    // KS distance on the D2D link, standardized to Exp(1).
    let mut u: Vec<f64> = (0..KS_N as u64)
        .map(|slot| {
            let z = sample_gain(&config, slot, Link::D1ToD2);
            1.0 - (-z / config.mean_gain[Link::D1ToD2 as usize]).exp()
        })
        .collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = u.len() as f64;
    let mut d = 0.0f64;
    for (i, &ui) in u.iter().enumerate() {
        d = d.max(((i + 1) as f64 / n - ui).abs());
        d = d.max((ui - i as f64 / n).abs());
    }
    let ks_limit = KS_CRIT_1PCT / n.sqrt();

    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_rel < MEAN_REL_TOL && d < ks_limit && elapsed < BUDGET_S;
    report(
        "fading matches the exponential law",
        pass,
        &format!(
            "worst mean rel err {worst_rel:.4} (tol {MEAN_REL_TOL}), \
             KS {d:.5} < {ks_limit:.5}, {elapsed:.1}s"
        ),
    );
}

/// Running `compare` twice with the same config must produce byte-identical
/// CSV and JSON outputs.
#[test]
fn comparison_outputs_are_byte_reproducible() {
    const SEEDS: &str = "4";

    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticTraceSpec {
        frames: 200,
        median_frame_bits: 2.0e4,
        ..SyntheticTraceSpec::default()
    };
    for (name, seed) in [("cu.txt", 0xBEEF1u64), ("du.txt", 0xBEEF2)] {
        let trace = synthetic_trace(&spec, seed);
        let mut text = format!("{}\n", trace.frame_rate());
        for f in trace.frames() {
            text.push_str(&format!("{f}\n"));
        }
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let config = dir.path().join("scenario.toml");
    std::fs::write(
        &config,
        "[traces]\nc1 = \"cu.txt\"\nd2 = \"du.txt\"\n\n[fading]\nseed = 3\n",
    )
    .unwrap();

    let start = Instant::now();
    let run_once = |out_name: &str| {
        let out_dir = dir.path().join(out_name);
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_d2dvid"))
            .args(["compare", "--seeds", SEEDS, "--config"])
            .arg(&config)
            .arg("--output-dir")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "compare failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let a = run_once("first");
    let b = run_once("second");

    let files = [
        "compare_summary.json",
        "slots_cellular.csv",
        "slots_dedicated.csv",
        "slots_reuse.csv",
        "slots_selection.csv",
    ];
    let mut mismatches = Vec::new();
    for name in files {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        if x != y {
            mismatches.push(name);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "comparison outputs byte-reproducible",
        mismatches.is_empty(),
        &format!(
            "{} files compared, mismatches: {mismatches:?}, {elapsed:.1}s",
            files.len()
        ),
    );
}
