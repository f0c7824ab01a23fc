//! The twelve acceptance criteria. Runs without the libtest harness so every
//! `criterion N: PASS|FAIL` line is printed; exits non-zero if any fails.

use std::fs;
use std::time::{Duration, Instant};

use shadowlab::dimension::{full_space_entropy, moran_entropy_estimate, upper_bracket, BallMode};
use shadowlab::moran::{
    ball_mass, brute_force_log_mass, count_points, exhaustive_level, level_log_mass, membership_check,
    point_log_weight, r_bound_check, sample_point, MoranConfig, MoranSchedule, PlanOptions,
};
use shadowlab::numeric::DEFAULT_CAP;
use shadowlab::symbolic::{Sft, Target, Word};
use shadowlab::thermo::{
    definitional_pressure, katok_mass, solve_pressure_root, transfer_pressure, variational_ratio, KatokMode,
    MarkovMeasure, Potential,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(id: u32, elapsed: Duration, limit_s: f64) -> String {
    let secs = elapsed.as_secs_f64();
    assert!(secs < limit_s, "criterion {id} took {secs:.2} s, limit {limit_s} s");
    format!("({secs:.3} s)")
}

/// Runs the built binary with captured output and returns its exit code.
fn shadowlab(args: &[&str]) -> i32 {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_shadowlab")).args(args).output().unwrap();
    out.status.code().unwrap_or(-1)
}

fn zeros(sft: &Sft) -> Target {
    Target::new(Word::empty(), Word::new(vec![0]), sft).unwrap()
}

fn full2_const1(eta: f64) -> MoranConfig {
    let sft = Sft::full(2, 2.0).unwrap();
    let f = Potential::constant(&sft, 1.0);
    let target = zeros(&sft);
    MoranConfig::with_equilibrium(sft, f, target, eta, 1).unwrap()
}

fn golden_step(eta: f64) -> MoranConfig {
    let sft = Sft::golden_mean(2.0);
    let f = Potential::from_symbol_values(&sft, &[0.0, 1.0]).unwrap();
    let target = Target::new(Word::empty(), Word::new(vec![0, 1]), &sft).unwrap();
    MoranConfig::with_equilibrium(sft, f, target, eta, 1).unwrap()
}

fn default_schedule(cfg: &MoranConfig) -> MoranSchedule {
    MoranSchedule::plan(cfg, &PlanOptions::default()).unwrap()
}

fn criterion_01_root_formula() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in [2usize, 3, 4] {
        let sft = Sft::full(k, 2.0).unwrap();
        for alpha in [0.5, 1.0, 2.0] {
            let s0 = solve_pressure_root(&sft, &Potential::constant(&sft, alpha), 1e-13).unwrap();
            worst = worst.max((s0 - (k as f64).ln() / (1.0 + alpha)).abs());
        }
    }
    let t = within(1, start.elapsed(), 1.0);
    verdict(worst <= 1e-9, format!("max |s₀ − log k/(1+α)| = {worst:.2e} over 9 cells {t}"))
}

fn criterion_02_variational_oracle() -> Outcome {
    let start = Instant::now();
    let sft = Sft::full(2, 2.0).unwrap();
    let f = Potential::from_symbol_values(&sft, &[0.0, 1.0]).unwrap();
    let s0 = solve_pressure_root(&sft, &f, 1e-13).unwrap();
    let oracle = variational_ratio(&sft, &f, 10_000, DEFAULT_CAP).unwrap().ratio;
    // e^{-s} solves x + x² = 1, so e^{s} is the golden ratio
    let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let gap = (s0 - oracle).abs();
    let exact = (s0 - golden).abs();
    let t = within(2, start.elapsed(), 5.0);
    verdict(gap <= 1e-3 && exact <= 1e-9, format!("oracle gap {gap:.2e}, |s₀ − log φ| = {exact:.2e} {t}"))
}

fn criterion_03_definitional_pressure() -> Outcome {
    let start = Instant::now();
    let full = Sft::full(2, 2.0).unwrap();
    let zero = Potential::zero(&full);
    let mut worst: f64 = 0.0;
    for n in 6..=14 {
        let d = definitional_pressure(&full, &zero, n, 3, DEFAULT_CAP).unwrap();
        worst = worst.max(((d - 2f64.ln()).abs() - 3.0 / n as f64 * 2f64.ln()).abs());
    }
    let golden = Sft::golden_mean(2.0);
    let gzero = Potential::zero(&golden);
    let disc = definitional_pressure(&golden, &gzero, 14, 3, DEFAULT_CAP).unwrap()
        - transfer_pressure(&golden, &gzero).unwrap();
    let t = within(3, start.elapsed(), 10.0);
    verdict(
        worst <= 1e-12 && disc.abs() <= 0.05,
        format!("full-shift identity error {worst:.2e}; golden-mean discrepancy at n=14 is {disc:.4} (limit 0.05) {t}"),
    )
}

fn criterion_04_generalized_balls() -> Outcome {
    let grid: Vec<usize> = (1..=12).collect();
    let mut worst: f64 = 0.0;
    for sft in [Sft::full(2, 2.0).unwrap(), Sft::golden_mean(2.0)] {
        for t in [1, 2, 3] {
            let a = full_space_entropy(&sft, &grid, t, BallMode::Standard, DEFAULT_CAP).unwrap();
            let b = full_space_entropy(&sft, &grid, t, BallMode::Generalized, DEFAULT_CAP).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.0, y.0);
                worst = worst.max((x.1 - y.1).abs());
            }
        }
    }
    verdict(worst <= 1e-9, format!("max |standard − generalized| = {worst:.2e}, n ≤ 12, t ∈ 1..=3"))
}

fn criterion_05_structural_entropy() -> Outcome {
    let start = Instant::now();
    let sch = default_schedule(&full2_const1(0.2));
    let target = 2f64.ln() / 2.0;
    let level1 = moran_entropy_estimate(&sch, 1);
    let level3 = moran_entropy_estimate(&sch, 3);
    let rel = (level3 - target).abs() / target;
    let t = within(5, start.elapsed(), 30.0);
    verdict(
        sch.depth() == 3 && (level1 - target).abs() <= 1e-12 && rel <= 0.10,
        format!("level 1 = {level1:.12}, level 3 = {level3:.6} ({:.2}% below (log 2)/2) {t}", rel * 100.0),
    )
}

fn criterion_06_membership() -> Outcome {
    let start = Instant::now();
    let sch = default_schedule(&full2_const1(0.2));
    let mut failures = 0;
    let mut checkpoints = 0;
    for i in 0..1000 {
        let p = sample_point(&sch, 6, i, 3).unwrap();
        let reports = membership_check(&p, &sch).unwrap();
        checkpoints += reports.len();
        failures += reports.iter().filter(|r| !r.pass).count();
    }
    let t = within(6, start.elapsed(), 60.0);
    verdict(failures == 0, format!("{failures} failures over 1000 samples, {checkpoints} checkpoints {t}"))
}

/// Tiny schedules whose levels can be enumerated.
fn tiny_schedules() -> Vec<(&'static str, MoranSchedule)> {
    let a = full2_const1(0.2);
    let b = golden_step(0.3);
    let c = {
        let sft = Sft::full(3, 2.0).unwrap();
        let f = Potential::from_symbol_values(&sft, &[0.0, 0.5, 1.0]).unwrap();
        let target = Target::new(Word::new(vec![2]), Word::new(vec![1, 0]), &sft).unwrap();
        MoranConfig::with_equilibrium(sft, f, target, 0.4, 1).unwrap()
    };
    vec![
        ("full2 f=1 [(2,2),(2,3)]", MoranSchedule::manual(&a, &[(2, 2), (2, 3)], DEFAULT_CAP).unwrap()),
        ("full2 f=1 [(3,1),(2,2),(2,1)]", MoranSchedule::manual(&a, &[(3, 1), (2, 2), (2, 1)], DEFAULT_CAP).unwrap()),
        ("golden step [(4,2),(4,2)]", MoranSchedule::manual(&b, &[(4, 2), (4, 2)], DEFAULT_CAP).unwrap()),
        ("full3 ramp [(2,2),(2,1)]", MoranSchedule::manual(&c, &[(2, 2), (2, 1)], DEFAULT_CAP).unwrap()),
    ]
}

fn criterion_07_kappa_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = Vec::new();
    for (name, sch) in tiny_schedules() {
        for k in 1..=sch.depth() {
            let count = count_points(&sch, k);
            assert!(count <= 100_000u32.into(), "{name}: level {k} has {count} points");
            let level = exhaustive_level(&sch, k, 100_000).unwrap();
            let closed = level_log_mass(&sch, k);
            let brute = brute_force_log_mass(&level, &sch);
            worst = worst.max(((closed - brute) / closed.abs()).abs());
        }
        cases.push(format!("{name}: {} points", count_points(&sch, sch.depth())));
    }
    verdict(worst <= 1e-12, format!("max relative error {worst:.2e} over {}", cases.join("; ")))
}

fn criterion_08_ball_mass() -> Outcome {
    let start = Instant::now();
    let mut balls = 0usize;
    let mut failures = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let mut equalities = 0usize;
    for (name, sch) in tiny_schedules() {
        let sch = if sch.depth() > 2 {
            let plan: Vec<(usize, usize)> = sch.levels[..2].iter().map(|l| (l.n, l.big_n)).collect();
            MoranSchedule::manual(&sch.cfg, &plan, DEFAULT_CAP).unwrap()
        } else {
            sch
        };
        assert!(count_points(&sch, 2) <= 10_000u32.into(), "{name} too large");
        let level = exhaustive_level(&sch, 2, 10_000).unwrap();
        let (l1, l2) = (sch.level(1).l, sch.level(2).l);
        let shortest = level.iter().map(|z| z.len()).min().unwrap();
        for t in [1usize, 2, 3] {
            // deeper balls depend on symbols no level-2 prefix has fixed yet
            for n in l1..l2.min(shortest.saturating_sub(t) + 1) {
                let mut seen = std::collections::BTreeSet::new();
                for z in &level {
                    // in an ultrametric every ball meeting the level is centred at a level point
                    if !seen.insert(z.prefix[..n + t].to_vec()) {
                        continue;
                    }
                    balls += 1;
                    let b = ball_mass(&level, &sch, &z.prefix, n, t).unwrap();
                    let bound = b.mother_log_bound.map(f64::exp);
                    // a ball holding every child of its mother meets the bound with equality, so
                    // the comparison allows the rounding error of summing `hits` exponentials
                    let slack = (b.hits as f64 + 2.0) * f64::EPSILON;
                    let ok = b.mothers == 1 && bound.is_some_and(|bd| b.mass <= bd * (1.0 + slack));
                    if let Some(bd) = bound {
                        max_ratio = max_ratio.max(b.mass / bd);
                        equalities += usize::from(b.mass > bd);
                    }
                    if !ok {
                        failures.push(format!("{name} n={n} t={t}: mothers {} mass {} bound {bound:?}", b.mothers, b.mass));
                    }
                    // the z_1 weight route gives the same bound
                    let direct = point_log_weight(&shadowlab::moran::point_from_lineage(&sch, &z.lineage[..1]).unwrap(), &sch)
                        - level_log_mass(&sch, 1);
                    assert!((direct - b.mother_log_bound.unwrap_or(direct)).abs() <= 1e-9);
                }
            }
        }
    }
    let t = within(8, start.elapsed(), 60.0);
    verdict(
        failures.is_empty(),
        format!(
            "{balls} balls, {} violations, max μ₂(B)/bound = {max_ratio:.15} ({equalities} equality cases above 1 by rounding only) {t}",
            failures.len()
        ),
    )
}

fn criterion_09_upper_bracket() -> Outcome {
    let start = Instant::now();
    let sft = Sft::full(2, 2.0).unwrap();
    let f = Potential::constant(&sft, 1.0);
    let b = upper_bracket(&sft, &f, 0.01, (1, 20), 3, 0.0, 2f64.ln(), 0.05, DEFAULT_CAP).unwrap();
    let t = within(9, start.elapsed(), 10.0);
    verdict(
        b.width() <= 0.05 && b.contains(0.346574),
        format!("bracket [{:.6}, {:.6}], width {:.4}, {} classifications {t}", b.lo, b.hi, b.width(), b.evaluations),
    )
}

fn criterion_10_hausdorff_conversion() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("verify.cfg");
    fs::write(&cfg, "ks = 2\nalphas = 1\nbeta = 2\nstruct_tol = 0.1\n").unwrap();
    let out = dir.path().join("out");
    let code = shadowlab(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    let dim = report["results"]["cells"][0]["hausdorff"]["dimension"].as_f64().unwrap();
    // criterion 5's 10% relative tolerance on (log 2)/2, divided by log 2
    let tol = 0.10 * (2f64.ln() / 2.0) / 2f64.ln();
    verdict(
        code == 0 && (dim - 0.5).abs() <= tol,
        format!("dim_H = {dim:.6}, |dim_H − 0.5| = {:.4} (tol {tol:.4}), exit {code}", (dim - 0.5).abs()),
    )
}

fn criterion_11_katok_trend() -> Outcome {
    let start = Instant::now();
    let sft = Sft::full(2, 2.0).unwrap();
    let m = MarkovMeasure::bernoulli(&sft, &[0.5, 0.5]).unwrap();
    let zero = Potential::zero(&sft);
    let rates: Vec<f64> = [4usize, 8, 12]
        .iter()
        .map(|&n| {
            let r = katok_mass(&sft, &m, &zero, 0.5, 2, n, KatokMode::Greedy, DEFAULT_CAP).unwrap();
            assert!(r.exact);
            r.log_value / n as f64
        })
        .collect();
    let ln2 = 2f64.ln();
    let gaps: Vec<f64> = rates.iter().map(|r| (r - ln2).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let final_rel = gaps[2] / ln2;
    let first_exact = (rates[0] - 33f64.ln() / 4.0).abs() <= 1e-12;
    let t = within(11, start.elapsed(), 10.0);
    verdict(
        monotone && final_rel <= 0.10 && first_exact,
        format!("rates {rates:.6?}, final discrepancy {:.2}%, n=4 vs log 33/4 exact: {first_exact} {t}", final_rel * 100.0),
    )
}

fn criterion_12_r_bound() -> Outcome {
    let mut checked = 0usize;
    let mut failures = 0usize;
    let mut configs: Vec<MoranConfig> = vec![full2_const1(0.2), golden_step(0.3)];
    for k in [2usize, 3] {
        for alpha in [0.5, 1.0, 2.0] {
            let sft = Sft::full(k, 2.0).unwrap();
            let f = Potential::constant(&sft, alpha);
            let target = zeros(&sft);
            configs.push(MoranConfig::with_equilibrium(sft, f, target, 0.2, 1).unwrap());
        }
    }
    for cfg in &configs {
        let sch = default_schedule(cfg);
        for i in 0..25 {
            let p = sample_point(&sch, 12, i, sch.depth()).unwrap();
            for b in r_bound_check(&p, &sch) {
                checked += 1;
                failures += usize::from(!b.pass);
            }
        }
    }
    // the bound is a consequence of the schedule conditions, so schedules breaking them are out of scope
    let mut skipped = 0;
    for (_, sch) in tiny_schedules() {
        if !sch.is_valid() {
            skipped += 1;
            continue;
        }
        let level = exhaustive_level(&sch, sch.depth(), 100_000).unwrap();
        for p in &level {
            for b in r_bound_check(p, &sch) {
                checked += 1;
                failures += usize::from(!b.pass);
            }
        }
    }

    // the same check gates cmd_moran's exit code
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.sft"), "2 2\n1 1\n1 1\n").unwrap();
    fs::write(dir.path().join("f.pot"), "1\n0 1\n1 1\n").unwrap();
    fs::write(dir.path().join("x.target"), "-\n0\n").unwrap();
    let cfg = dir.path().join("moran.cfg");
    fs::write(&cfg, "sft_file = s.sft\npotential_file = f.pot\ntarget_file = x.target\nlevels = 2\nseed = 7\n").unwrap();
    let out = dir.path().join("out");
    let code = shadowlab(&["moran", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("moran.json")).unwrap()).unwrap();
    let asserted = report["checks"].as_array().unwrap().iter().any(|c| c["name"] == "r_bound" && c["pass"] == true);
    verdict(
        failures == 0 && code == 0 && asserted,
        format!(
            "{failures} violations over {checked} level checks ({skipped} tiny schedules skipped as invalid); cmd_moran r_bound verdict present: {asserted}"
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_01_root_formula),
        (2, criterion_02_variational_oracle),
        (3, criterion_03_definitional_pressure),
        (4, criterion_04_generalized_balls),
        (5, criterion_05_structural_entropy),
        (6, criterion_06_membership),
        (7, criterion_07_kappa_identity),
        (8, criterion_08_ball_mass),
        (9, criterion_09_upper_bracket),
        (10, criterion_10_hausdorff_conversion),
        (11, criterion_11_katok_trend),
        (12, criterion_12_r_bound),
    ];
    let mut failed = 0;
    for (id, run) in criteria {
        match std::panic::catch_unwind(run) {
            Ok(o) => {
                println!("criterion {id}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
                failed += usize::from(!o.pass);
            }
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {id}: FAIL panicked: {msg}");
                failed += 1;
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
