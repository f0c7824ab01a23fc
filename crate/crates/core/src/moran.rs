//! The Moran construction of a fractal inside the shadowing level set.
//!
//! A level-`k` point glues `N_i` typical words of length `n_i` per level,
//! separated by bridges of `m` symbols, and after each level `i` copies the
//! first `R_i` symbols of the target. Level `i` ends at the checkpoint `l_i`,
//! where the shadow block `[l_i, l_i + R_i)` starts.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{check_cap, log_sum_exp, LogSum};
use crate::symbolic::{shadow_profile, Sft, Splicer, Target, Word};
use crate::thermo::{solve_pressure_root, MarkovMeasure, Potential};

/// Everything the construction is parameterised by.
#[derive(Debug, Clone)]
pub struct MoranConfig {
    pub sft: Sft,
    pub f: Potential,
    pub target: Target,
    pub mu: MarkovMeasure,
    pub eta: f64,
    /// Ball margin `t`, with radius `β^{-t}`.
    pub margin: usize,
}

impl MoranConfig {
    pub fn new(sft: Sft, f: Potential, target: Target, mu: MarkovMeasure, eta: f64, margin: usize) -> Result<Self> {
        if !sft.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        if !f.is_nonnegative() {
            return Err(Error::NegativePotential { value: f.min_value() });
        }
        if f.alphabet_size() != sft.alphabet_size() || mu.alphabet_size() != sft.alphabet_size() {
            return Err(Error::InvalidArgument("shift, potential and measure disagree on the alphabet".into()));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta = {eta} must be positive")));
        }
        if margin < f.depth() {
            return Err(Error::InvalidArgument(format!("margin {margin} must be at least the depth {}", f.depth())));
        }
        if !mu.is_irreducible() {
            return Err(Error::InvalidMeasure("base measure must be irreducible".into()));
        }
        Ok(MoranConfig { sft, f, target, mu, eta, margin })
    }

    /// Uses the equilibrium state of `−s₀(f+1)` as base measure, which attains
    /// the variational supremum (the Parry measure when `f` is constant).
    pub fn with_equilibrium(sft: Sft, f: Potential, target: Target, eta: f64, margin: usize) -> Result<Self> {
        let s0 = solve_pressure_root(&sft, &f, 1e-13)?;
        let mu = MarkovMeasure::equilibrium(&sft, &f.affine(-s0, -s0))?;
        MoranConfig::new(sft, f, target, mu, eta, margin)
    }

    /// Bridge length: the mixing gap, widened so that a Birkhoff sum ending at a
    /// word boundary never reads past the following bridge.
    pub fn gap(&self) -> Result<usize> {
        Ok(self.sft.mixing_gap()?.max(self.f.depth() - 1))
    }

    pub fn entropy(&self) -> f64 {
        self.mu.entropy()
    }

    pub fn integral(&self) -> f64 {
        self.mu.integral(&self.f)
    }

    /// `C = h_μ / (1 + ∫f dμ)`, the entropy level the construction aims at.
    pub fn level(&self) -> f64 {
        self.entropy() / (1.0 + self.integral())
    }

    /// `S_n f` of a word of length `n`, read on the word followed by its least
    /// admissible continuation so that it depends on the word alone.
    pub fn word_sum(&self, w: &[u8]) -> f64 {
        let r = self.f.depth();
        if r == 1 {
            return self.f.birkhoff_sum(w, w.len()).expect("admissible word");
        }
        let mut ext = w.to_vec();
        ext.extend(self.sft.least_continuation(w.last().copied(), r - 1));
        self.f.birkhoff_sum(&ext, w.len()).expect("admissible extension")
    }
}

/// The separated set `S` of typical words at one length, with its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalSet {
    pub n: usize,
    pub words: Vec<Word>,
    /// `S_n f(w)` per word.
    pub sums: Vec<f64>,
    /// `log M = log Σ_{w∈S} exp S_n(f+1)(w)`.
    pub log_mass: f64,
    /// `n (h_μ + 1 + ∫f dμ − η)`.
    pub mass_floor: f64,
}

impl TypicalSet {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn mass_bound_holds(&self) -> bool {
        self.log_mass >= self.mass_floor
    }

    /// `S_n(f+1)(w)` for the word at `index`.
    pub fn log_weight(&self, index: usize) -> f64 {
        self.n as f64 + self.sums[index]
    }
}

/// Admissible `n`-words whose Birkhoff average lies strictly within `η` of `∫f dμ`.
pub fn typical_words(cfg: &MoranConfig, n: usize, cap: u64) -> Result<TypicalSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("word length must be positive".into()));
    }
    let integral = cfg.integral();
    let nf = n as f64;
    let mut words = Vec::new();
    let mut sums = Vec::new();
    let mut acc = LogSum::new();
    cfg.sft.for_each_word(n, cap, |w| {
        let s = cfg.word_sum(w);
        if (s - nf * integral).abs() < nf * cfg.eta {
            words.push(Word::from(w));
            sums.push(s);
            acc.add(nf + s);
        }
    })?;
    if words.is_empty() {
        return Err(Error::EmptyTypicalSet { n, eta: cfg.eta });
    }
    Ok(TypicalSet {
        n,
        words,
        sums,
        log_mass: acc.value(),
        mass_floor: nf * (cfg.entropy() + 1.0 + integral - cfg.eta),
    })
}

fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// `R = ⌈S_{l−m} f(prefix)⌉`; sums within `1e-9` relative of an integer count as that integer.
pub fn compute_r(prefix: &[u8], f: &Potential, l: usize, m: usize) -> Result<usize> {
    if m > l {
        return Err(Error::InvalidArgument(format!("gap {m} exceeds checkpoint {l}")));
    }
    let s = f.birkhoff_sum(prefix, l - m)?;
    Ok(snapped_ceil(s).max(0.0) as usize)
}

/// The shadow length actually used. For potentials of depth ≥ 2 it is at least 1,
/// so the bridge before a checkpoint always leads into the target and the
/// Birkhoff sum behind `R` is fixed before the shadow block is written.
fn shadow_length(prefix: &[u8], f: &Potential, l: usize, m: usize) -> Result<usize> {
    let r = compute_r(prefix, f, l, m)?;
    Ok(if f.depth() >= 2 { r.max(1) } else { r })
}

/// Offsets of one level inside a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelBlock {
    /// Offset of the first word of this level.
    pub words_start: usize,
    /// Checkpoint `l_i`.
    pub l: usize,
    /// Shadow length `R_i`.
    pub r: usize,
}

/// A finite prefix of a point of `C_k` together with its lineage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPoint {
    pub prefix: Word,
    /// Chosen word indices into the typical set of each level.
    pub lineage: Vec<Vec<u32>>,
    pub blocks: Vec<LevelBlock>,
}

impl LevelPoint {
    pub fn level(&self) -> usize {
        self.lineage.len()
    }

    /// `l_k + R_k` of the last level.
    pub fn len(&self) -> usize {
        self.prefix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty()
    }

    pub fn block(&self, level: usize) -> &LevelBlock {
        &self.blocks[level - 1]
    }
}

/// Per-level bookkeeping of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpec {
    pub n: usize,
    pub big_n: usize,
    pub typical: TypicalSet,
    /// `l_k` and `R_k` of the representative (all word indices 0).
    pub l: usize,
    pub r: usize,
    /// Ranges of `l_k` and `R_k` over all branches.
    pub l_range: (usize, usize),
    pub r_range: (usize, usize),
}

impl LevelSpec {
    pub fn size(&self) -> usize {
        self.typical.len()
    }

    pub fn log_m(&self) -> f64 {
        self.typical.log_mass
    }
}

/// Options for automatic schedule construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    pub levels: usize,
    /// Accuracy knob `K`: `N_{k+1} n_{k+1} ≥ K (l_k + R_k)`.
    pub growth: f64,
    pub min_n: usize,
    pub max_n: usize,
    pub max_multiplicity: usize,
    pub max_length: usize,
    /// Enumeration cap for typical sets.
    pub cap: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            levels: 3,
            growth: 20.0,
            min_n: 2,
            max_n: 24,
            max_multiplicity: 50_000_000,
            max_length: 1 << 28,
            cap: crate::numeric::DEFAULT_CAP,
        }
    }
}

/// The construction's bookkeeping: `n_k, N_k, m, l_k, R_k, M_k`.
#[derive(Debug, Clone)]
pub struct MoranSchedule {
    pub cfg: MoranConfig,
    pub gap: usize,
    pub levels: Vec<LevelSpec>,
    /// `Some(K)` for automatic schedules; `None` for manual ones, whose
    /// invariants are reported but not enforced.
    pub growth: Option<f64>,
    /// Representative point of the deepest level.
    pub representative: LevelPoint,
}

/// One named invariant evaluated at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub level: usize,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, level: usize, pass: bool, detail: String) -> Self {
        Check { name, level, pass, detail }
    }
}

fn range_r(cfg: &MoranConfig, l_range: (usize, usize), m: usize) -> (usize, usize) {
    let (lo, hi) = l_range;
    let r_lo = snapped_ceil((lo - m) as f64 * cfg.f.min_value()).max(0.0) as usize;
    let r_hi = snapped_ceil((hi - m) as f64 * cfg.f.max_value()).max(0.0) as usize;
    if cfg.f.depth() >= 2 {
        (r_lo.max(1), r_hi.max(1))
    } else {
        (r_lo, r_hi)
    }
}

impl MoranSchedule {
    /// Builds the smallest schedule meeting every invariant.
    pub fn plan(cfg: &MoranConfig, opts: &PlanOptions) -> Result<Self> {
        if opts.levels == 0 {
            return Err(Error::InvalidArgument("at least one level is required".into()));
        }
        if !(opts.growth >= 1.0) {
            return Err(Error::InvalidArgument(format!("growth K = {} must be at least 1", opts.growth)));
        }
        let m = cfg.gap()?;
        let r = cfg.f.depth();
        let norm = cfg.f.norm();
        let quarter = cfg.eta / 4.0;

        // one word length for every level: the least meeting the gap and mass conditions
        let mut chosen = None;
        for n in opts.min_n.max(1)..=opts.max_n {
            if (m + r - 1) as f64 * norm / n as f64 >= quarter {
                continue;
            }
            match typical_words(cfg, n, opts.cap) {
                Ok(ts) if ts.mass_bound_holds() => {
                    chosen = Some(ts);
                    break;
                }
                Ok(_) | Err(Error::EmptyTypicalSet { .. }) => continue,
                Err(Error::CapExceeded { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        let typical = chosen.ok_or_else(|| {
            Error::Infeasible(format!(
                "no word length in [{}, {}] within the enumeration cap meets the gap and mass conditions",
                opts.min_n, opts.max_n
            ))
        })?;
        let n = typical.n;

        let mut levels: Vec<LevelSpec> = Vec::new();
        let mut rep: Option<LevelPoint> = None;
        for k in 1..=opts.levels {
            let (prev_lo, prev_hi) = match levels.last() {
                Some(p) => (p.l_range.0 + p.r_range.0, p.l_range.1 + p.r_range.1),
                None => (0, 0),
            };
            let sum_l_hi: usize = levels.iter().map(|p| p.l_range.1).sum();
            let lead = if k == 1 { 0 } else { prev_lo + m };
            let l_lo_of = |big_n: usize| lead + big_n * (n + m);

            let mut big_n = (4.0 / cfg.eta).floor() as usize + 1;
            big_n = big_n.max(k * n);
            if k >= 2 {
                big_n = big_n.max((opts.growth * prev_hi as f64 / n as f64).ceil() as usize);
            }
            let ok = |big_n: usize| {
                let l_lo = l_lo_of(big_n) as f64;
                1.0 / (big_n as f64) < quarter
                    && (k == 1 || (prev_hi as f64 * norm) / l_lo < quarter)
                    && (k == 1 || (sum_l_hi as f64) < l_lo)
            };
            if !ok(big_n) {
                // every condition is monotone in N: solve the linear bounds, then settle strictness
                let mut need = big_n as f64;
                if k >= 2 {
                    let per = (n + m) as f64;
                    need = need.max((prev_hi as f64 * norm / quarter - lead as f64) / per);
                    need = need.max((sum_l_hi as f64 - lead as f64) / per);
                }
                big_n = (need.floor().max(0.0) as usize).max(big_n);
                while !ok(big_n) {
                    big_n += 1;
                    if big_n > opts.max_multiplicity {
                        break;
                    }
                }
            }
            if big_n > opts.max_multiplicity {
                return Err(Error::Infeasible(format!(
                    "level {k} needs N > {} (multiplicity cap)",
                    opts.max_multiplicity
                )));
            }
            let l_range = if k == 1 {
                (big_n * (n + m), big_n * (n + m))
            } else {
                (prev_lo + m + big_n * (n + m), prev_hi + m + big_n * (n + m))
            };
            let r_range = range_r(cfg, l_range, m);
            if l_range.1 + r_range.1 > opts.max_length {
                return Err(Error::Infeasible(format!(
                    "level {k} prefix may reach {} symbols (length cap {})",
                    l_range.1 + r_range.1,
                    opts.max_length
                )));
            }
            let point = build_level(cfg, m, rep.as_ref(), &typical, n, &vec![0; big_n])?;
            let block = *point.blocks.last().expect("one block per level");
            levels.push(LevelSpec {
                n,
                big_n,
                typical: typical.clone(),
                l: block.l,
                r: block.r,
                l_range,
                r_range,
            });
            rep = Some(point);
        }
        Ok(MoranSchedule {
            cfg: cfg.clone(),
            gap: m,
            levels,
            growth: Some(opts.growth),
            representative: rep.expect("at least one level"),
        })
    }

    /// A schedule with explicit `(n_k, N_k)`, for tiny exhaustive experiments.
    pub fn manual(cfg: &MoranConfig, plan: &[(usize, usize)], cap: u64) -> Result<Self> {
        if plan.is_empty() {
            return Err(Error::InvalidArgument("at least one level is required".into()));
        }
        let m = cfg.gap()?;
        let mut levels: Vec<LevelSpec> = Vec::new();
        let mut rep: Option<LevelPoint> = None;
        for &(n, big_n) in plan {
            if big_n == 0 {
                return Err(Error::InvalidArgument("multiplicity must be positive".into()));
            }
            let typical = typical_words(cfg, n, cap)?;
            let l_range = match levels.last() {
                None => (big_n * (n + m), big_n * (n + m)),
                Some(p) => (
                    p.l_range.0 + p.r_range.0 + m + big_n * (n + m),
                    p.l_range.1 + p.r_range.1 + m + big_n * (n + m),
                ),
            };
            let point = build_level(cfg, m, rep.as_ref(), &typical, n, &vec![0; big_n])?;
            let block = *point.blocks.last().expect("one block per level");
            levels.push(LevelSpec {
                n,
                big_n,
                typical,
                l: block.l,
                r: block.r,
                l_range,
                r_range: range_r(cfg, l_range, m),
            });
            rep = Some(point);
        }
        Ok(MoranSchedule { cfg: cfg.clone(), gap: m, levels, growth: None, representative: rep.expect("non-empty plan") })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, k: usize) -> &LevelSpec {
        &self.levels[k - 1]
    }

    /// Representative `l_k + R_k`.
    pub fn prefix_len(&self, k: usize) -> usize {
        self.level(k).l + self.level(k).r
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.depth() {
            return Err(Error::InvalidArgument(format!("level {k} outside 1..={}", self.depth())));
        }
        Ok(())
    }

    /// Evaluates every schedule invariant.
    pub fn invariants(&self) -> Vec<Check> {
        let cfg = &self.cfg;
        let m = self.gap;
        let norm = cfg.f.norm();
        let quarter = cfg.eta / 4.0;
        let r = cfg.f.depth();
        let mut out = Vec::new();
        let rep = &self.representative;
        for (i, lv) in self.levels.iter().enumerate() {
            let k = i + 1;
            let block = rep.block(k);
            if k == 1 {
                let want = lv.big_n * (lv.n + m);
                out.push(Check::new("l1", k, lv.l == want, format!("l_1 = {}, N_1(n_1+m) = {want}", lv.l)));
            } else {
                let p = &self.levels[i - 1];
                let want = p.l + p.r + m + lv.big_n * (lv.n + m);
                out.push(Check::new("l_recursion", k, lv.l == want, format!("l_{k} = {}, expected {want}", lv.l)));
                let ratio = (p.l_range.1 + p.r_range.1) as f64 * norm / lv.l_range.0 as f64;
                out.push(Check::new("overlap", k, ratio < quarter, format!("(l+R)‖f‖/l_next ≤ {ratio:.6}")));
                let sum_hi: usize = self.levels[..=i].iter().map(|x| x.l_range.1).sum();
                out.push(Check::new(
                    "sum_l",
                    k,
                    sum_hi < 2 * lv.l_range.0,
                    format!("Σ l_i ≤ {sum_hi}, 2 l_{k} ≥ {}", 2 * lv.l_range.0),
                ));
                if let Some(growth) = self.growth {
                    let need = growth * (p.l_range.1 + p.r_range.1) as f64;
                    let have = (lv.big_n * lv.n) as f64;
                    out.push(Check::new("accuracy", k, have >= need, format!("N n = {have}, K (l+R) ≤ {need}")));
                }
            }
            let inv_n = 1.0 / lv.big_n as f64;
            out.push(Check::new("multiplicity", k, inv_n < quarter, format!("1/N = {inv_n:.6}")));
            let g = (m + r - 1) as f64 * norm / lv.n as f64;
            out.push(Check::new("gap_over_n", k, g < quarter, format!("(m+r-1)‖f‖/n = {g:.6}")));
            if let Some(next) = self.levels.get(i + 1) {
                out.push(Check::new(
                    "n_over_N",
                    k,
                    k * next.n <= lv.big_n,
                    format!("n_next/N = {}/{}", next.n, lv.big_n),
                ));
            }
            out.push(Check::new(
                "mass_bound",
                k,
                lv.typical.mass_bound_holds(),
                format!("log M = {:.6}, floor = {:.6}", lv.typical.log_mass, lv.typical.mass_floor),
            ));
            let recomputed = shadow_length(&rep.prefix, &cfg.f, block.l, m).ok();
            out.push(Check::new(
                "r_ceiling",
                k,
                recomputed == Some(lv.r),
                format!("R_{k} = {}, recomputed {recomputed:?}", lv.r),
            ));
            out.push(Check::new(
                "ranges",
                k,
                lv.l_range.0 <= lv.l && lv.l <= lv.l_range.1 && lv.r_range.0 <= lv.r && lv.r <= lv.r_range.1,
                format!("l ∈ {:?}, R ∈ {:?}", lv.l_range, lv.r_range),
            ));
        }
        out
    }

    /// True iff every invariant holds.
    pub fn is_valid(&self) -> bool {
        self.invariants().iter().all(|c| c.pass)
    }
}

/// Appends one level to `mother` (or starts level 1) with the given word indices.
fn build_level(
    cfg: &MoranConfig,
    m: usize,
    mother: Option<&LevelPoint>,
    typical: &TypicalSet,
    n: usize,
    indices: &[u32],
) -> Result<LevelPoint> {
    let (mut sp, mut lineage, mut blocks) = match mother {
        Some(p) => {
            let mut sp = Splicer::from_prefix(&cfg.sft, p.prefix.symbols().to_vec());
            sp.gap(m);
            (sp, p.lineage.clone(), p.blocks.clone())
        }
        None => (Splicer::new(&cfg.sft), Vec::new(), Vec::new()),
    };
    let words_start = sp.len();
    for (j, &idx) in indices.iter().enumerate() {
        if j > 0 {
            sp.gap(m);
        }
        let w = typical
            .words
            .get(idx as usize)
            .ok_or_else(|| Error::InvalidArgument(format!("word index {idx} out of range")))?;
        sp.segment(w)?;
    }
    debug_assert_eq!(sp.len(), words_start + indices.len() * (n + m) - m);
    let l = sp.len() + m;
    let v0 = cfg.target.symbol(0);
    let r = if cfg.f.depth() >= 2 {
        // the bridge into the shadow block is fixed once R ≥ 1, which depth ≥ 2 guarantees
        let mut probe = sp.symbols().to_vec();
        let last = *probe.last().expect("at least one word");
        probe.extend(cfg.sft.bridge(last, v0, m)?);
        shadow_length(&probe, &cfg.f, l, m)?
    } else {
        shadow_length(sp.symbols(), &cfg.f, l, m)?
    };
    sp.gap(m);
    sp.segment(&cfg.target.expand(r))?;
    let prefix = sp.finish();
    debug_assert_eq!(prefix.len(), l + r);
    lineage.push(indices.to_vec());
    blocks.push(LevelBlock { words_start, l, r });
    Ok(LevelPoint { prefix, lineage, blocks })
}

impl LevelPoint {
    /// The child of `self` obtained from the given level-`(k+1)` word indices.
    pub fn extend(&self, sch: &MoranSchedule, indices: &[u32]) -> Result<LevelPoint> {
        let k = self.level() + 1;
        sch.check_level(k)?;
        let lv = sch.level(k);
        if indices.len() != lv.big_n {
            return Err(Error::InvalidArgument(format!("level {k} needs {} indices", lv.big_n)));
        }
        build_level(&sch.cfg, sch.gap, Some(self), &lv.typical, lv.n, indices)
    }
}

/// The level-1 point for the given word indices.
pub fn root_point(sch: &MoranSchedule, indices: &[u32]) -> Result<LevelPoint> {
    let lv = sch.level(1);
    if indices.len() != lv.big_n {
        return Err(Error::InvalidArgument(format!("level 1 needs {} indices", lv.big_n)));
    }
    build_level(&sch.cfg, sch.gap, None, &lv.typical, lv.n, indices)
}

/// Builds the point with an explicit lineage.
pub fn point_from_lineage(sch: &MoranSchedule, lineage: &[Vec<u32>]) -> Result<LevelPoint> {
    let (first, rest) = lineage.split_first().ok_or_else(|| Error::InvalidArgument("empty lineage".into()))?;
    let mut p = root_point(sch, first)?;
    for tuple in rest {
        p = p.extend(sch, tuple)?;
    }
    Ok(p)
}

/// Random generator for sample `index` under `seed`: independent streams of one key.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A uniformly drawn level-`k` point; reproducible from `(seed, index)`.
pub fn sample_point(sch: &MoranSchedule, seed: u64, index: u64, k: usize) -> Result<LevelPoint> {
    sch.check_level(k)?;
    let mut rng = sample_rng(seed, index);
    let lineage: Vec<Vec<u32>> = sch.levels[..k]
        .iter()
        .map(|lv| (0..lv.big_n).map(|_| rng.gen_range(0..lv.size() as u32)).collect())
        .collect();
    point_from_lineage(sch, &lineage)
}

/// `#C_k = Π_i (#S_i)^{N_i}`.
pub fn count_points(sch: &MoranSchedule, k: usize) -> BigUint {
    sch.levels[..k].iter().fold(BigUint::from(1u32), |acc, lv| acc * BigUint::from(lv.size()).pow(lv.big_n as u32))
}

/// `log κ_k = Σ_i N_i log M_i`.
pub fn level_log_mass(sch: &MoranSchedule, k: usize) -> f64 {
    sch.levels[..k].iter().map(|lv| lv.big_n as f64 * lv.log_m()).sum()
}

/// `log L_k(z) = Σ_i Σ_s S_{n_i}(1+f)(x^i_s)`.
pub fn point_log_weight(p: &LevelPoint, sch: &MoranSchedule) -> f64 {
    p.lineage
        .iter()
        .zip(&sch.levels)
        .map(|(tuple, lv)| tuple.iter().map(|&i| lv.typical.log_weight(i as usize)).sum::<f64>())
        .sum()
}

/// Every level-`k` point, in lexicographic order of lineage.
pub fn exhaustive_level(sch: &MoranSchedule, k: usize, cap: u64) -> Result<Vec<LevelPoint>> {
    sch.check_level(k)?;
    let total = count_points(sch, k);
    let needed = u128::try_from(&total).unwrap_or(u128::MAX);
    check_cap("level points", needed, cap)?;
    let tuples = |lv: &LevelSpec| -> Vec<Vec<u32>> {
        let base = lv.size() as u32;
        let mut out = Vec::new();
        let mut cur = vec![0u32; lv.big_n];
        loop {
            out.push(cur.clone());
            let mut pos = lv.big_n;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                cur[pos] += 1;
                if cur[pos] < base {
                    break;
                }
                cur[pos] = 0;
            }
        }
    };
    let mut points: Vec<LevelPoint> =
        tuples(sch.level(1)).iter().map(|t| root_point(sch, t)).collect::<Result<_>>()?;
    for level in 2..=k {
        let ts = tuples(sch.level(level));
        let mut next = Vec::with_capacity(points.len() * ts.len());
        for p in &points {
            for t in &ts {
                next.push(p.extend(sch, t)?);
            }
        }
        points = next;
    }
    Ok(points)
}

/// `log Σ_z L_k(z)` over an enumerated level.
pub fn brute_force_log_mass(level: &[LevelPoint], sch: &MoranSchedule) -> f64 {
    log_sum_exp(level.iter().map(|p| point_log_weight(p, sch)))
}

/// Measure of a Bowen ball under the level measure `μ_k`, with the data behind
/// the mass bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMass {
    pub mass: f64,
    pub hits: usize,
    /// The `k` with `l_k ≤ n < l_{k+1}` for the points hit (0 when `n < l_1`).
    pub level: usize,
    /// 1 for `l_k ≤ n ≤ l_k + R_k + m`, 2 otherwise.
    pub case: u8,
    /// Distinct level-`k` ancestors among the points hit.
    pub mothers: usize,
    /// `log L_k(z_k) − Σ_{i≤k} N_i log M_i` for the unique mother.
    pub mother_log_bound: Option<f64>,
    /// `exp(−n(C − 4η − 3Cη))`.
    pub asymptotic_bound: f64,
}

/// `μ_k(B_n(q, β^{-t}))` over an enumerated level.
pub fn ball_mass(level: &[LevelPoint], sch: &MoranSchedule, q: &[u8], n: usize, t: usize) -> Result<BallMass> {
    let depth = n + t;
    if q.len() < depth {
        return Err(Error::InsufficientLength { needed: depth, available: q.len() });
    }
    let base = &q[..depth];
    let kk = level.first().map_or(0, |p| p.level());
    let log_kappa = level_log_mass(sch, kk);
    let mut hits: Vec<&LevelPoint> = Vec::new();
    for p in level {
        if p.len() < depth {
            return Err(Error::InsufficientLength { needed: depth, available: p.len() });
        }
        if &p.prefix[..depth] == base {
            hits.push(p);
        }
    }
    let mass = hits.iter().map(|p| (point_log_weight(p, sch) - log_kappa).exp()).sum();
    let (level_k, case) = match hits.first() {
        None => (0, 1),
        Some(p) => {
            let k = p.blocks.iter().take_while(|b| b.l <= n).count();
            let case = match k {
                0 => 1,
                _ => {
                    let b = p.block(k);
                    if n <= b.l + b.r + sch.gap {
                        1
                    } else {
                        2
                    }
                }
            };
            (k, case)
        }
    };
    let mut mothers: Vec<&[Vec<u32>]> = hits.iter().map(|p| &p.lineage[..level_k]).collect();
    mothers.sort();
    mothers.dedup();
    let mother_log_bound = match (mothers.len(), hits.first()) {
        (1, Some(p)) if level_k > 0 => {
            let weight: f64 = p.lineage[..level_k]
                .iter()
                .zip(&sch.levels)
                .map(|(tuple, lv)| tuple.iter().map(|&i| lv.typical.log_weight(i as usize)).sum::<f64>())
                .sum();
            Some(weight - level_log_mass(sch, level_k))
        }
        _ => None,
    };
    let c = sch.cfg.level();
    let eta = sch.cfg.eta;
    Ok(BallMass {
        mass,
        hits: hits.len(),
        level: level_k,
        case,
        mothers: mothers.len(),
        mother_log_bound,
        asymptotic_bound: (-(n as f64) * (c - 4.0 * eta - 3.0 * c * eta)).exp(),
    })
}

/// Outcome at one checkpoint `l_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointReport {
    pub level: usize,
    pub l: usize,
    pub r: usize,
    pub profile: usize,
    pub clipped: bool,
    /// `(R_i − S_{l_i} f)/l_i`.
    pub slack: f64,
    /// `−(m‖f‖ + 1)/l_i`.
    pub floor: f64,
    pub pass: bool,
}

/// Shadowing and Birkhoff checks at every checkpoint of `p`.
pub fn membership_check(p: &LevelPoint, sch: &MoranSchedule) -> Result<Vec<CheckpointReport>> {
    let cfg = &sch.cfg;
    let r = cfg.f.depth();
    // evaluation needs a few symbols past the last shadow block
    let mut w = p.prefix.symbols().to_vec();
    w.extend(cfg.sft.least_continuation(w.last().copied(), r.max(2) - 1));
    let floor_num = sch.gap as f64 * cfg.f.norm() + 1.0;
    let mut out = Vec::with_capacity(p.blocks.len());
    for (i, b) in p.blocks.iter().enumerate() {
        let sh = shadow_profile(&w, &cfg.target, b.l)?;
        // agreement past l + R may run into the continuation; cap it at the recorded prefix
        let available = p.len() - b.l;
        let profile = sh.length.min(available);
        let clipped = sh.length >= available;
        let s = cfg.f.birkhoff_sum(&w, b.l)?;
        let l = b.l as f64;
        let slack = (b.r as f64 - s) / l;
        let floor = -floor_num / l;
        out.push(CheckpointReport {
            level: i + 1,
            l: b.l,
            r: b.r,
            profile,
            clipped,
            slack,
            floor,
            pass: profile >= b.r && slack >= floor,
        });
    }
    Ok(out)
}

/// The child's prefix extends the mother's `l_k + R_k` symbols verbatim.
pub fn nesting_check(child: &LevelPoint, mother: &LevelPoint) -> bool {
    child.len() >= mother.len() && child.prefix[..mother.len()] == mother.prefix[..]
}

/// One evaluation of `R_k ≤ Σ_s S_{n_k} f(x_s) + l_k η`.
#[derive(Debug, Clone, PartialEq)]
pub struct RBound {
    pub level: usize,
    pub r: usize,
    pub bound: f64,
    pub pass: bool,
}

/// Shadow-length bound at every level of a point.
pub fn r_bound_check(p: &LevelPoint, sch: &MoranSchedule) -> Vec<RBound> {
    p.blocks
        .iter()
        .zip(&p.lineage)
        .zip(&sch.levels)
        .enumerate()
        .map(|(i, ((b, tuple), lv))| {
            let sums: f64 = tuple.iter().map(|&j| lv.typical.sums[j as usize]).sum();
            let bound = sums + b.l as f64 * sch.cfg.eta;
            RBound { level: i + 1, r: b.r, bound, pass: (b.r as f64) <= bound }
        })
        .collect()
}
