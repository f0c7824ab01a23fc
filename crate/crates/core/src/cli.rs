//! Command-line orchestration: config handling, the five experiment commands
//! and their reports.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical or invariant check
//! fails, 2 on usage, parse or input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dimension::{
    hausdorff_dimension, level_point_slope, moran_entropy_estimate, moran_entropy_from_fields, upper_bracket,
    upper_cover_series, Bracket,
};
use crate::error::Error;
use crate::io::{parse_potential, parse_sft, parse_target, read_text, write_atomic, KeyValues};
use crate::moran::{
    brute_force_log_mass, count_points, exhaustive_level, level_log_mass, membership_check, nesting_check,
    point_from_lineage, r_bound_check, sample_point, MoranConfig, MoranSchedule, PlanOptions,
};
use crate::numeric::{effective_cap, DEFAULT_CAP};
use crate::symbolic::{Sft, Target, Word};
use crate::thermo::{
    definitional_pressure, grid_scan, solve_pressure_root, topological_entropy, transfer_pressure, variational_ratio,
    Potential,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "shadowlab", version, about = "Pressure, Moran constructions and Bowen entropy on subshifts of finite type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral versus spanning-set pressure over an n-grid.
    Pressure(Overrides),
    /// Root of the pressure equation against the variational oracle.
    Root(Overrides),
    /// Builds the Moran schedule, samples points and checks the construction.
    Moran(Overrides),
    /// Structural, sampled and cover-series entropy estimates.
    Dimension(Overrides),
    /// End-to-end check of h = log k / (1 + α) over a (k, α) matrix.
    Verify(Overrides),
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Word length(s): a comma list for `pressure`, the series end for `dimension`.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

type CmdResult<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn check(self) -> CmdResult<T>;
}

impl<T> Classify<T> for crate::error::Result<T> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Usage(e.to_string()))
    }
    fn check(self) -> CmdResult<T> {
        self.map_err(|e| Failure::Check(e.to_string()))
    }
}

/// One named verdict in a report.
#[derive(Debug, Clone, serde::Serialize)]
struct Verdict {
    name: String,
    pass: bool,
    detail: String,
}

struct Report {
    command: &'static str,
    results: Value,
    verdicts: Vec<Verdict>,
    /// Extra files `(name, contents)` written next to the JSON report.
    files: Vec<(String, Vec<u8>)>,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Report { command, results: Value::Null, verdicts: Vec::new(), files: Vec::new() }
    }

    fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.into(), pass, detail: detail.into() });
    }

    fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Config plus everything read on its behalf, for the inputs digest.
struct Ctx {
    kv: KeyValues,
    hasher: Sha256,
}

const COMMON_KEYS: &[&str] = &["out", "cap", "seed"];

impl Ctx {
    fn load(path: &Path) -> CmdResult<Self> {
        let text = read_text(path).usage()?;
        let kv = KeyValues::parse(&text, path.parent().map(Path::to_path_buf).unwrap_or_default()).usage()?;
        Ok(Ctx { kv, hasher: Sha256::new() })
    }

    fn apply(&mut self, o: &Overrides) {
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                self.kv.set(k, v);
            }
        };
        set("seed", o.seed.map(|x| x.to_string()));
        set("levels", o.levels.map(|x| x.to_string()));
        set("n", o.n.clone());
        set("t", o.t.map(|x| x.to_string()));
        set("eta", o.eta.map(|x| x.to_string()));
        set("tol", o.tol.map(|x| x.to_string()));
    }

    fn allow(&self, keys: &[&str]) -> CmdResult<()> {
        let all: Vec<&str> = keys.iter().chain(COMMON_KEYS).copied().collect();
        self.kv.reject_unknown(&all).usage()
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> CmdResult<T> {
        self.kv.parsed(key, default).usage()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> CmdResult<Vec<T>> {
        self.kv.list(key, default).usage()
    }

    fn positive(&self, key: &str, default: f64) -> CmdResult<f64> {
        let v: f64 = self.get(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::Usage(format!("config key '{key}' must be positive, got {v}")));
        }
        Ok(v)
    }

    fn cap(&self) -> CmdResult<u64> {
        let c: u64 = self.get("cap", DEFAULT_CAP)?;
        if c == 0 {
            return Err(Failure::Usage("cap must be positive".into()));
        }
        Ok(effective_cap(c))
    }

    fn read_file(&mut self, key: &str) -> CmdResult<Option<String>> {
        let Some(path) = self.kv.path(key) else { return Ok(None) };
        let text = read_text(&path).usage()?;
        self.hasher.update(key.as_bytes());
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
        Ok(Some(text))
    }

    fn sft(&mut self) -> CmdResult<Sft> {
        let text = self.read_file("sft_file")?.ok_or_else(|| Failure::Usage("config needs sft_file".into()))?;
        parse_sft(&text).usage()
    }

    /// The potential file, or the zero potential when none is configured.
    fn potential(&mut self, sft: &Sft) -> CmdResult<Potential> {
        match self.read_file("potential_file")? {
            Some(text) => parse_potential(&text, sft).usage(),
            None => Ok(Potential::zero(sft)),
        }
    }

    fn target(&mut self, sft: &Sft) -> CmdResult<Target> {
        let text =
            self.read_file("target_file")?.ok_or_else(|| Failure::Usage("config needs target_file".into()))?;
        parse_target(&text, sft).usage()
    }

    fn digest(&self) -> String {
        let mut h = self.hasher.clone();
        for (k, v) in &self.kv.entries {
            if k != "out" {
                h.update(format!("{k}={v}\n").as_bytes());
            }
        }
        hex(&h.finalize())
    }

    fn out_dir(&self, o: &Overrides) -> PathBuf {
        match (&o.out, self.kv.path("out")) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => p,
            (None, None) => self.kv.base_dir.join("out"),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let (name, o) = match &cli.command {
        Command::Pressure(o) => ("pressure", o),
        Command::Root(o) => ("root", o),
        Command::Moran(o) => ("moran", o),
        Command::Dimension(o) => ("dimension", o),
        Command::Verify(o) => ("verify", o),
    };
    let outcome = Ctx::load(&o.config).and_then(|mut ctx| {
        ctx.apply(o);
        let report = match &cli.command {
            Command::Pressure(_) => cmd_pressure(&mut ctx),
            Command::Root(_) => cmd_root(&mut ctx),
            Command::Moran(_) => cmd_moran(&mut ctx),
            Command::Dimension(_) => cmd_dimension(&mut ctx),
            Command::Verify(_) => cmd_verify(&mut ctx),
        }?;
        write_report(&ctx, o, &report)?;
        Ok(report)
    });
    let code = match outcome {
        Ok(report) => {
            for v in &report.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAIL
        }
    };
    // runtime goes to stderr so written reports stay byte-identical across runs
    eprintln!("{name}: finished in {:.3} s", start.elapsed().as_secs_f64());
    code
}

fn write_report(ctx: &Ctx, o: &Overrides, report: &Report) -> CmdResult<()> {
    let dir = ctx.out_dir(o);
    let body = json!({
        "command": report.command,
        "inputs_digest": ctx.digest(),
        "parameters": ctx.kv.entries.iter().filter(|(k, _)| k.as_str() != "out").collect::<std::collections::BTreeMap<_, _>>(),
        "results": report.results,
        "checks": report.verdicts,
        "verdict": if report.passed() { "PASS" } else { "FAIL" },
    });
    let mut text = serde_json::to_string_pretty(&body).expect("reports serialize");
    text.push('\n');
    let io_err = |e: std::io::Error| Failure::Usage(format!("cannot write to {}: {e}", dir.display()));
    write_atomic(&dir.join(format!("{}.json", report.command)), text.as_bytes()).map_err(io_err)?;
    for (name, contents) in &report.files {
        write_atomic(&dir.join(name), contents).map_err(io_err)?;
    }
    Ok(())
}

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> Vec<u8> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s.into_bytes()
}

fn cmd_pressure(ctx: &mut Ctx) -> CmdResult<Report> {
    ctx.allow(&["sft_file", "potential_file", "n", "t"])?;
    let sft = ctx.sft()?;
    let phi = ctx.potential(&sft)?;
    let ns: Vec<usize> = ctx.list("n", vec![6, 8, 10, 12, 14])?;
    let t: usize = ctx.get("t", 3usize.max(phi.depth().saturating_sub(1)))?;
    let cap = ctx.cap()?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Failure::Usage("n values must be positive".into()));
    }
    let transfer = transfer_pressure(&sft, &phi).check()?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &n in &ns {
        let def = definitional_pressure(&sft, &phi, n, t, cap).check()?;
        rows.push((n, def, def - transfer));
        table.push(json!({"n": n, "t": t, "definitional": def, "discrepancy": def - transfer}));
    }
    let mut report = Report::new("pressure");
    if sft.is_full() && phi.depth() == 1 {
        let k = sft.alphabet_size() as f64;
        let worst = rows.iter().map(|&(n, _, d)| (d - t as f64 / n as f64 * k.ln()).abs()).fold(0.0, f64::max);
        report.verdict("definitional_identity", worst <= 1e-12, format!("max |gap − (t/n) log k| = {worst:.3e}"));
    } else {
        let mut sorted = rows.clone();
        sorted.sort_by_key(|r| r.0);
        let monotone = sorted.windows(2).all(|w| w[1].2.abs() <= w[0].2.abs() + 1e-12);
        report.verdict("discrepancy_trend", monotone, format!("|discrepancy| non-increasing over n = {ns:?}"));
    }
    report.results = json!({
        "transfer_pressure": transfer,
        "power_iteration_tolerance": 1e-14,
        "t": t,
        "n_grid": ns,
        "table": table,
    });
    report.files.push((
        "pressure.csv".into(),
        csv("n,t,transfer,definitional,discrepancy", rows.iter().map(|(n, d, g)| format!("{n},{t},{transfer},{d},{g}"))),
    ));
    Ok(report)
}

fn cmd_root(ctx: &mut Ctx) -> CmdResult<Report> {
    ctx.allow(&["sft_file", "potential_file", "tol", "grid", "root_tol"])?;
    let sft = ctx.sft()?;
    let f = ctx.potential(&sft)?;
    let tol = ctx.positive("tol", 1e-3)?;
    let root_tol = ctx.positive("root_tol", 1e-12)?;
    let grid: u32 = ctx.get("grid", 600)?;
    let cap = ctx.cap()?;
    if !f.is_nonnegative() {
        return Err(Failure::Usage(Error::NegativePotential { value: f.min_value() }.to_string()));
    }
    let s0 = solve_pressure_root(&sft, &f, root_tol).check()?;
    let h = topological_entropy(&sft).check()?;
    let mut report = Report::new("root");
    let residual = transfer_pressure(&sft, &f.affine(-s0, -s0)).check()?;
    report.verdict("pressure_residual", residual.abs() <= root_tol, format!("P(−s₀(f+1)) = {residual:.3e}"));
    let mut results = json!({
        "s0": s0,
        "root_tolerance": root_tol,
        "h_top": h,
        "pressure_residual": residual,
    });
    if f.depth() <= 2 {
        let vr = variational_ratio(&sft, &f, grid, cap).check()?;
        let (_, points) = grid_scan(&sft, &f, grid, cap).check()?;
        let worst = points.iter().map(|p| p.entropy - s0 * (1.0 + p.integral)).fold(f64::NEG_INFINITY, f64::max);
        let gap = (s0 - vr.ratio).abs();
        report.verdict("oracle_gap", gap <= tol, format!("|s₀ − oracle| = {gap:.3e} (tol {tol:e}, grid 1/{grid})"));
        report.verdict("oracle_one_sided", vr.ratio <= s0 + 1e-12, format!("oracle {:.9} ≤ s₀ {s0:.9}", vr.ratio));
        report.verdict(
            "variational_inequality",
            worst <= 1e-8,
            format!("max h_μ − s₀(1+∫f dμ) = {worst:.3e} over {} grid measures", points.len()),
        );
        results["oracle"] = json!({
            "ratio": vr.ratio,
            "grid": grid,
            "family": format!("{:?}", vr.family).to_lowercase(),
            "measures": vr.points,
            "argmax_stationary": vr.measure.stationary(),
            "argmax_transition": vr.measure.transition(),
            "gap": gap,
            "tolerance": tol,
            "max_variational_excess": worst,
        });
    } else {
        report.verdict("oracle_skipped", true, format!("potential depth {} > 2 has no first-order oracle", f.depth()));
    }
    report.results = results;
    Ok(report)
}

const MORAN_KEYS: &[&str] = &[
    "sft_file",
    "potential_file",
    "target_file",
    "eta",
    "margin",
    "levels",
    "growth_K",
    "samples",
    "min_n",
    "max_n",
    "max_multiplicity",
    "max_length",
    "sample_prefix",
    "exhaustive_cap",
];

struct MoranSetup {
    cfg: MoranConfig,
    sch: MoranSchedule,
    seed: u64,
    samples: u64,
}

fn plan_options(ctx: &Ctx) -> CmdResult<PlanOptions> {
    let d = PlanOptions::default();
    let opts = PlanOptions {
        levels: ctx.get("levels", d.levels)?,
        growth: ctx.get("growth_K", d.growth)?,
        min_n: ctx.get("min_n", d.min_n)?,
        max_n: ctx.get("max_n", d.max_n)?,
        max_multiplicity: ctx.get("max_multiplicity", d.max_multiplicity)?,
        max_length: ctx.get("max_length", d.max_length)?,
        cap: ctx.cap()?,
    };
    if opts.levels == 0 || !(opts.growth >= 1.0) {
        return Err(Failure::Usage("levels must be ≥ 1 and growth_K ≥ 1".into()));
    }
    Ok(opts)
}

fn moran_setup(ctx: &mut Ctx, default_samples: u64) -> CmdResult<MoranSetup> {
    let sft = ctx.sft()?;
    let f = ctx.potential(&sft)?;
    let target = ctx.target(&sft)?;
    let eta = ctx.positive("eta", 0.2)?;
    let margin: usize = ctx.get("margin", f.depth())?;
    let seed: u64 = ctx.get("seed", 0)?;
    let samples: u64 = ctx.get("samples", default_samples)?;
    let opts = plan_options(ctx)?;
    if !f.is_nonnegative() {
        return Err(Failure::Usage(Error::NegativePotential { value: f.min_value() }.to_string()));
    }
    let cfg = MoranConfig::with_equilibrium(sft, f, target, eta, margin).usage()?;
    let sch = MoranSchedule::plan(&cfg, &opts).check()?;
    Ok(MoranSetup { cfg, sch, seed, samples })
}

fn schedule_json(sch: &MoranSchedule) -> Value {
    let levels: Vec<Value> = sch
        .levels
        .iter()
        .enumerate()
        .map(|(i, lv)| {
            json!({
                "level": i + 1,
                "n": lv.n,
                "N": lv.big_n,
                "typical_words": lv.size(),
                "log_M": lv.log_m(),
                "log_M_floor": lv.typical.mass_floor,
                "l": lv.l,
                "R": lv.r,
                "l_range": [lv.l_range.0, lv.l_range.1],
                "R_range": [lv.r_range.0, lv.r_range.1],
                "structural_entropy": moran_entropy_estimate(sch, i + 1),
            })
        })
        .collect();
    json!({
        "gap": sch.gap,
        "eta": sch.cfg.eta,
        "margin": sch.cfg.margin,
        "growth_K": sch.growth,
        "base_measure": {
            "entropy": sch.cfg.entropy(),
            "integral": sch.cfg.integral(),
            "level_C": sch.cfg.level(),
            "stationary": sch.cfg.mu.stationary(),
        },
        "levels": levels,
    })
}

fn schedule_csv(sch: &MoranSchedule) -> Vec<u8> {
    csv(
        "level,n,N,typical_words,log_M,l,R,structural_entropy",
        sch.levels.iter().enumerate().map(|(i, lv)| {
            format!(
                "{},{},{},{},{},{},{},{}",
                i + 1,
                lv.n,
                lv.big_n,
                lv.size(),
                lv.log_m(),
                lv.l,
                lv.r,
                moran_entropy_estimate(sch, i + 1)
            )
        }),
    )
}

/// Samples points and runs membership, shadow-length and nesting checks.
struct SampleOutcome {
    lines: Vec<u8>,
    membership_failures: usize,
    r_bound_failures: usize,
    nesting_failures: usize,
    count: u64,
}

fn run_samples(sch: &MoranSchedule, seed: u64, count: u64, prefix_max: usize) -> CmdResult<SampleOutcome> {
    let k = sch.depth();
    let mut out = SampleOutcome { lines: Vec::new(), membership_failures: 0, r_bound_failures: 0, nesting_failures: 0, count };
    for i in 0..count {
        let p = sample_point(sch, seed, i, k).check()?;
        let checkpoints = membership_check(&p, sch).check()?;
        let bounds = r_bound_check(&p, sch);
        let nested = if k > 1 {
            let mother = point_from_lineage(sch, &p.lineage[..k - 1]).check()?;
            nesting_check(&p, &mother)
        } else {
            true
        };
        let member = checkpoints.iter().all(|c| c.pass);
        let bounded = bounds.iter().all(|b| b.pass);
        out.membership_failures += usize::from(!member);
        out.r_bound_failures += usize::from(!bounded);
        out.nesting_failures += usize::from(!nested);
        let mut lineage_hash = Sha256::new();
        for tuple in &p.lineage {
            for &x in tuple {
                lineage_hash.update(x.to_le_bytes());
            }
            lineage_hash.update([0xff]);
        }
        let shown = p.prefix.len().min(prefix_max);
        let record = json!({
            "index": i,
            "seed": seed,
            "level": k,
            "length": p.len(),
            "prefix": Word::from(&p.prefix[..shown]).to_string(),
            "prefix_truncated": shown < p.len(),
            "prefix_sha256": hex(&Sha256::digest(p.prefix.symbols())),
            "lineage_sha256": hex(&lineage_hash.finalize()),
            "checkpoints": checkpoints.iter().map(|c| json!({
                "level": c.level, "l": c.l, "R": c.r, "profile": c.profile, "clipped": c.clipped,
                "slack": c.slack, "floor": c.floor, "pass": c.pass,
            })).collect::<Vec<_>>(),
            "r_bounds": bounds.iter().map(|b| json!({"level": b.level, "R": b.r, "bound": b.bound, "pass": b.pass})).collect::<Vec<_>>(),
            "nested": nested,
            "pass": member && bounded && nested,
        });
        out.lines.extend(serde_json::to_string(&record).expect("records serialize").bytes());
        out.lines.push(b'\n');
    }
    Ok(out)
}

fn cmd_moran(ctx: &mut Ctx) -> CmdResult<Report> {
    ctx.allow(MORAN_KEYS)?;
    let setup = moran_setup(ctx, 100)?;
    let prefix_max: usize = ctx.get("sample_prefix", 512)?;
    let exhaustive_cap: u64 = ctx.get("exhaustive_cap", 100_000)?;
    let sch = &setup.sch;
    let mut report = Report::new("moran");
    for c in sch.invariants() {
        report.verdict(format!("schedule:{}@{}", c.name, c.level), c.pass, c.detail);
    }

    // the mass identity is checked on a tiny schedule with the same word length
    let n1 = sch.level(1).n;
    let tiny_plan: Vec<(usize, usize)> = vec![(n1, 1); sch.depth().min(2)];
    let kappa = match MoranSchedule::manual(&setup.cfg, &tiny_plan, exhaustive_cap) {
        Ok(tiny) => match exhaustive_level(&tiny, tiny.depth(), exhaustive_cap) {
            Ok(level) => {
                let closed = level_log_mass(&tiny, tiny.depth());
                let brute = brute_force_log_mass(&level, &tiny);
                let rel = ((closed - brute) / closed.abs().max(f64::MIN_POSITIVE)).abs();
                report.verdict(
                    "kappa_identity",
                    rel <= 1e-12,
                    format!("relative error {rel:.3e} over {} points (plan {tiny_plan:?})", level.len()),
                );
                json!({"plan": tiny_plan, "points": level.len(), "closed_form": closed, "brute_force": brute, "relative_error": rel})
            }
            Err(e) => json!({"skipped": e.to_string()}),
        },
        Err(e) => json!({"skipped": e.to_string()}),
    };

    let samples = run_samples(sch, setup.seed, setup.samples, prefix_max)?;
    report.verdict(
        "membership",
        samples.membership_failures == 0,
        format!("{} of {} samples failed a checkpoint", samples.membership_failures, samples.count),
    );
    report.verdict(
        "r_bound",
        samples.r_bound_failures == 0,
        format!("{} of {} samples exceeded the shadow-length bound", samples.r_bound_failures, samples.count),
    );
    report.verdict(
        "nesting",
        samples.nesting_failures == 0,
        format!("{} of {} samples do not extend their mother", samples.nesting_failures, samples.count),
    );
    let k = sch.depth();
    report.results = json!({
        "schedule": schedule_json(sch),
        "count_points_log": crate::numeric::big_ln(&count_points(sch, k)),
        "kappa": kappa,
        "samples": {"count": samples.count, "seed": setup.seed, "file": "samples.jsonl"},
    });
    report.files.push(("samples.jsonl".into(), samples.lines));
    report.files.push(("schedule.csv".into(), schedule_csv(sch)));
    Ok(report)
}

struct BracketOutcome {
    raw: Bracket,
    adjusted: (f64, f64),
    eta: f64,
    n_range: (usize, usize),
    t: usize,
}

fn cover_bracket(ctx: &Ctx, sft: &Sft, f: &Potential) -> CmdResult<BracketOutcome> {
    let eta = ctx.positive("series_eta", 0.01)?;
    if eta >= 1.0 {
        return Err(Failure::Usage("series_eta must be below 1".into()));
    }
    let n_max: usize = ctx.get("n", 20)?;
    let t: usize = ctx.get("t", 3)?;
    let tol = ctx.positive("bracket_tol", 0.05)?;
    let cap = ctx.cap()?;
    if n_max < 6 {
        return Err(Failure::Usage("series range needs n ≥ 6".into()));
    }
    let h = topological_entropy(sft).check()?;
    // the cover series turns at most at h/(1 − η)
    let s_hi = h / (1.0 - eta) + 0.1;
    let raw = upper_bracket(sft, f, eta, (1, n_max), t, 0.0, s_hi, tol, cap).check()?;
    // s₀ lies in [(1 − η) s_η, s_η] for the series' critical exponent s_η
    Ok(BracketOutcome { raw, adjusted: ((1.0 - eta) * raw.lo, raw.hi), eta, n_range: (1, n_max), t })
}

fn bracket_json(b: &BracketOutcome) -> Value {
    json!({
        "series_eta": b.eta,
        "n_range": [b.n_range.0, b.n_range.1],
        "t": b.t,
        "raw": [b.raw.lo, b.raw.hi],
        "raw_width": b.raw.width(),
        "adjusted": [b.adjusted.0, b.adjusted.1],
        "classifications": b.raw.evaluations,
    })
}

fn cmd_dimension(ctx: &mut Ctx) -> CmdResult<Report> {
    let mut keys = MORAN_KEYS.to_vec();
    keys.extend(["series_eta", "n", "t", "bracket_tol", "slope_n"]);
    ctx.allow(&keys)?;
    let setup = moran_setup(ctx, 200)?;
    let sch = &setup.sch;
    let k = sch.depth();
    let beta = setup.cfg.sft.beta();
    let structural: Vec<f64> = (1..=k).map(|i| moran_entropy_estimate(sch, i)).collect();
    let consistency = (1..=k).map(|i| (structural[i - 1] - moran_entropy_from_fields(sch, i)).abs()).fold(0.0, f64::max);

    let l1 = sch.level(1).l;
    let default_slope: Vec<usize> = (1..=l1.min(12)).collect();
    let slope_n: Vec<usize> = ctx.list("slope_n", default_slope)?;
    let points: Vec<_> =
        (0..setup.samples).map(|i| sample_point(sch, setup.seed, i, k)).collect::<crate::error::Result<_>>().check()?;
    let slope = level_point_slope(&points, &slope_n).check()?;

    let bracket = cover_bracket(ctx, &setup.cfg.sft, &setup.cfg.f)?;
    let best = *structural.last().expect("at least one level");
    let dim = hausdorff_dimension(best, beta).usage()?;

    let mut report = Report::new("dimension");
    report.verdict("structural_consistency", consistency <= 1e-12, format!("max field mismatch {consistency:.3e}"));
    let width_tol = ctx.positive("bracket_tol", 0.05)?;
    report.verdict(
        "bracket_width",
        bracket.raw.width() <= width_tol,
        format!("width {:.4} over n ≤ {}", bracket.raw.width(), bracket.n_range.1),
    );
    report.verdict(
        "structural_below_upper",
        best <= bracket.adjusted.1,
        format!("structural {best:.6} ≤ upper {:.6}", bracket.adjusted.1),
    );

    let cap = ctx.cap()?;
    let mut rows = Vec::new();
    for s in [bracket.raw.lo, bracket.raw.hi] {
        let series =
            upper_cover_series(&setup.cfg.sft, &setup.cfg.f, s, bracket.eta, bracket.n_range, bracket.t, cap).check()?;
        for (i, n) in series.ns().into_iter().enumerate() {
            rows.push(format!("{s},{n},{},{}", series.log_terms[i], series.log_partial_sums[i]));
        }
    }
    report.results = json!({
        "schedule": schedule_json(sch),
        "structural": structural.iter().enumerate().map(|(i, v)| json!({"level": i + 1, "entropy": v, "prefix_length": sch.prefix_len(i + 1)})).collect::<Vec<_>>(),
        "sample_slope": {
            "slope": slope.slope,
            "samples": slope.samples,
            "n_list": slope_n,
            "distinct": slope.distinct,
            "saturated": slope.saturated,
            "seed": setup.seed,
        },
        "upper_bracket": bracket_json(&bracket),
        "hausdorff": {
            "beta": beta,
            "structural_dimension": dim,
            "upper_dimension": hausdorff_dimension(bracket.adjusted.1, beta).usage()?,
            "levels": k,
        },
    });
    report.files.push(("series.csv".into(), csv("s,n,log_term,log_partial_sum", rows)));
    Ok(report)
}

fn cmd_verify(ctx: &mut Ctx) -> CmdResult<Report> {
    ctx.allow(&[
        "ks",
        "alphas",
        "beta",
        "tol",
        "grid",
        "struct_tol",
        "eta",
        "levels",
        "growth_K",
        "samples",
        "min_n",
        "max_n",
        "max_multiplicity",
        "max_length",
        "series_eta",
        "n",
        "t",
        "bracket_tol",
    ])?;
    let ks: Vec<usize> = ctx.list("ks", vec![2, 3])?;
    let alphas: Vec<f64> = ctx.list("alphas", vec![0.5, 1.0, 2.0])?;
    let beta = ctx.positive("beta", 2.0)?;
    let tol = ctx.positive("tol", 1e-3)?;
    let grid: u32 = ctx.get("grid", 600)?;
    let struct_tol: f64 = ctx.get("struct_tol", 0.1)?;
    let eta = ctx.positive("eta", 0.2)?;
    let seed: u64 = ctx.get("seed", 0)?;
    let samples: u64 = ctx.get("samples", 20)?;
    let opts = plan_options(ctx)?;
    let cap = ctx.cap()?;
    if beta <= 1.0 || struct_tol < 0.0 || ks.contains(&0) || alphas.iter().any(|a| !(*a >= 0.0)) {
        return Err(Failure::Usage("need beta > 1, struct_tol ≥ 0, k ≥ 1 and α ≥ 0".into()));
    }

    let mut report = Report::new("verify");
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &k in &ks {
        for &alpha in &alphas {
            let tag = format!("k={k},alpha={alpha}");
            let sft = Sft::full(k, beta).usage()?;
            let f = Potential::constant(&sft, alpha);
            let expected = (k as f64).ln() / (1.0 + alpha);

            let s0 = solve_pressure_root(&sft, &f, 1e-13).check()?;
            let oracle = variational_ratio(&sft, &f, grid, cap).check()?.ratio;
            let root_ok = (s0 - expected).abs() <= 1e-9;
            let oracle_ok = (s0 - oracle).abs() <= tol;

            let target = Target::new(Word::empty(), Word::new(vec![0]), &sft).usage()?;
            let cfg = MoranConfig::with_equilibrium(sft.clone(), f.clone(), target, eta, 1).usage()?;
            let sch = MoranSchedule::plan(&cfg, &opts).check()?;
            let invariants_ok = sch.is_valid();
            let structural = moran_entropy_estimate(&sch, sch.depth());
            let structural_ok = (structural - expected).abs() <= struct_tol * expected;
            let sampled = run_samples(&sch, seed, samples, 0)?;
            let samples_ok = sampled.membership_failures + sampled.r_bound_failures + sampled.nesting_failures == 0;

            let bracket = cover_bracket(ctx, &sft, &f)?;
            let bracket_ok = bracket.adjusted.0 <= expected && expected <= bracket.adjusted.1;

            let dim = hausdorff_dimension(structural, beta).usage()?;
            let dim_expected = expected / beta.ln();
            let dim_tol = struct_tol * expected / beta.ln();
            let dim_ok = (dim - dim_expected).abs() <= dim_tol;

            report.verdict(format!("{tag}:root"), root_ok, format!("s₀ = {s0:.12}, log k/(1+α) = {expected:.12}"));
            report.verdict(format!("{tag}:oracle"), oracle_ok, format!("|s₀ − oracle| = {:.3e} (grid 1/{grid})", (s0 - oracle).abs()));
            report.verdict(format!("{tag}:schedule"), invariants_ok, format!("{} levels", sch.depth()));
            report.verdict(
                format!("{tag}:structural"),
                structural_ok,
                format!("{structural:.6} vs {expected:.6} (relative tol {struct_tol}, level {})", sch.depth()),
            );
            report.verdict(format!("{tag}:samples"), samples_ok, format!("{samples} samples, all checkpoints"));
            report.verdict(
                format!("{tag}:bracket"),
                bracket_ok,
                format!("[{:.6}, {:.6}] over n ≤ {}", bracket.adjusted.0, bracket.adjusted.1, bracket.n_range.1),
            );
            report.verdict(
                format!("{tag}:hausdorff"),
                dim_ok,
                format!("dim_H = {dim:.6} vs {dim_expected:.6} (tol {dim_tol:.4})"),
            );
            let pass = root_ok && oracle_ok && invariants_ok && structural_ok && samples_ok && bracket_ok && dim_ok;
            rows.push(format!(
                "{k},{alpha},{expected},{s0},{oracle},{structural},{},{},{dim},{}",
                bracket.adjusted.0,
                bracket.adjusted.1,
                if pass { "PASS" } else { "FAIL" }
            ));
            cells.push(json!({
                "k": k,
                "alpha": alpha,
                "expected": expected,
                "s0": s0,
                "oracle": oracle,
                "structural": structural,
                "structural_levels": sch.depth(),
                "prefix_length": sch.prefix_len(sch.depth()),
                "bracket": bracket_json(&bracket),
                "hausdorff": {"beta": beta, "dimension": dim, "expected": dim_expected, "tolerance": dim_tol},
                "pass": pass,
            }));
        }
    }
    report.results = json!({
        "cells": cells,
        "tolerances": {"oracle": tol, "grid": grid, "structural_relative": struct_tol, "root": 1e-9},
        "eta": eta,
        "samples_per_cell": samples,
    });
    report.files.push((
        "verify.csv".into(),
        csv("k,alpha,expected,s0,oracle,structural,bracket_lo,bracket_hi,dim_h,verdict", rows),
    ));
    Ok(report)
}
