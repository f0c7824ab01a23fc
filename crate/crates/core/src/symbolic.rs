//! Shift spaces over finite alphabets, the β-adic metric and cylinder geometry.
//!
//! Distances are represented by an integer margin `t` with `ε = β^{-t}`. In the
//! ultrametric `d(ω, ω') = β^{-|ω∧ω'|}` a Bowen ball `B_n(x, β^{-t})` is then
//! exactly the cylinder of depth `n + t` around `x`, so all ball and cover
//! geometry reduces to prefix arithmetic on words.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::thermo::Potential;

/// Largest supported alphabet; symbols are stored as `u8`.
pub const MAX_ALPHABET: usize = 256;

/// A finite word over `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn push(&mut self, s: u8) {
        self.0.push(s);
    }

    pub fn extend_from_slice(&mut self, s: &[u8]) {
        self.0.extend_from_slice(s);
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    /// The first `len` symbols, or an error if the word is shorter.
    pub fn prefix(&self, len: usize) -> Result<Word> {
        if len > self.0.len() {
            return Err(Error::InsufficientLength { needed: len, available: self.0.len() });
        }
        Ok(Word(self.0[..len].to_vec()))
    }

    /// `σ^i` applied to the word (drops the first `i` symbols).
    pub fn shift(&self, i: usize) -> Word {
        Word(self.0.get(i..).unwrap_or(&[]).to_vec())
    }

    pub fn check_alphabet(&self, k: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s as usize >= k) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, k }),
            None => Ok(()),
        }
    }
}

impl Deref for Word {
    type Target = [u8];

    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

impl From<&[u8]> for Word {
    fn from(v: &[u8]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Parses either a digit string (`"0110"`) or a comma/space separated list
/// (`"0,1,12"`). `"-"` and the empty string denote the empty word.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(Word::empty());
        }
        let parse = |tok: &str| {
            tok.parse::<u8>().map_err(|_| Error::Parse(format!("bad symbol {tok:?} in word {s:?}")))
        };
        if s.contains(',') || s.contains(char::is_whitespace) {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(parse)
                .collect::<Result<Vec<u8>>>()
                .map(Word)
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as u8)
                        .ok_or_else(|| Error::Parse(format!("bad symbol {c:?} in word {s:?}")))
                })
                .collect::<Result<Vec<u8>>>()
                .map(Word)
        }
    }
}

type BoolMatrix = Vec<Vec<bool>>;

fn bool_mul(a: &BoolMatrix, b: &BoolMatrix) -> BoolMatrix {
    let k = a.len();
    let mut out = vec![vec![false; k]; k];
    for i in 0..k {
        for l in 0..k {
            if a[i][l] {
                for j in 0..k {
                    out[i][j] |= b[l][j];
                }
            }
        }
    }
    out
}

fn all_true(m: &BoolMatrix) -> bool {
    m.iter().all(|row| row.iter().all(|&x| x))
}

/// A one-sided subshift of finite type given by a 0/1 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sft {
    k: usize,
    adjacency: BoolMatrix,
    beta: f64,
    gap: Option<usize>,
}

impl Sft {
    /// Builds a shift from `k×k` 0/1 rows. Every symbol needs a successor and a
    /// predecessor; `beta` is the metric base and must exceed 1.
    pub fn new(rows: Vec<Vec<u8>>, beta: f64) -> Result<Self> {
        let k = rows.len();
        if k == 0 || k > MAX_ALPHABET {
            return Err(Error::InvalidSft(format!("alphabet size {k} outside 1..={MAX_ALPHABET}")));
        }
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(Error::InvalidSft(format!("metric base beta = {beta} must be > 1")));
        }
        let mut adjacency = vec![vec![false; k]; k];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSft(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            for (j, &x) in row.iter().enumerate() {
                adjacency[i][j] = match x {
                    0 => false,
                    1 => true,
                    _ => return Err(Error::InvalidSft(format!("entry ({i},{j}) = {x} is not 0/1"))),
                };
            }
        }
        for a in 0..k {
            if !adjacency[a].iter().any(|&x| x) {
                return Err(Error::InvalidSft(format!("symbol {a} has no successor")));
            }
            if !(0..k).any(|b| adjacency[b][a]) {
                return Err(Error::InvalidSft(format!("symbol {a} has no predecessor")));
            }
        }
        let gap = primitive_gap(&adjacency);
        Ok(Sft { k, adjacency, beta, gap })
    }

    /// The full shift on `k` symbols.
    pub fn full(k: usize, beta: f64) -> Result<Self> {
        Sft::new(vec![vec![1; k]; k], beta)
    }

    /// The golden-mean shift (no factor `11`).
    pub fn golden_mean(beta: f64) -> Self {
        Sft::new(vec![vec![1, 1], vec![1, 0]], beta).expect("golden mean matrix is valid")
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.adjacency[a as usize][b as usize]
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<u8>> {
        self.adjacency.iter().map(|r| r.iter().map(|&x| x as u8).collect()).collect()
    }

    pub fn is_full(&self) -> bool {
        all_true(&self.adjacency)
    }

    /// True iff some power of the adjacency matrix is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        self.gap.is_some()
    }

    /// Least `g` such that `adjacency^{g+1}` is entrywise positive: any two symbols
    /// can be joined by an admissible filler of exactly `g` symbols.
    pub fn mixing_gap(&self) -> Result<usize> {
        self.gap.ok_or(Error::NotPrimitive)
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        w.iter().all(|&s| (s as usize) < self.k) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn check_word(&self, w: &[u8]) -> Result<()> {
        if let Some(&symbol) = w.iter().find(|&&s| s as usize >= self.k) {
            return Err(Error::SymbolOutOfRange { symbol, k: self.k });
        }
        match w.windows(2).position(|p| !self.allowed(p[0], p[1])) {
            Some(i) => Err(Error::NotAdmissible { position: i + 1 }),
            None => Ok(()),
        }
    }

    /// Exact number of admissible words of length `n` (`k` for `n = 1`, 1 for `n = 0`).
    pub fn count_words(&self, n: usize) -> BigUint {
        if n == 0 {
            return BigUint::from(1u8);
        }
        let mut v: Vec<BigUint> = vec![BigUint::from(1u8); self.k];
        for _ in 1..n {
            v = (0..self.k)
                .map(|a| {
                    (0..self.k)
                        .filter(|&b| self.adjacency[a][b])
                        .fold(BigUint::from(0u8), |acc, b| acc + &v[b])
                })
                .collect();
        }
        v.into_iter().sum()
    }

    /// Number of admissible words of length `len` whose first symbol is `a`.
    pub fn count_from(&self, a: u8, len: usize) -> BigUint {
        if len == 0 {
            return BigUint::from(1u8);
        }
        let mut v: Vec<BigUint> = vec![BigUint::from(1u8); self.k];
        for _ in 1..len {
            v = (0..self.k)
                .map(|x| {
                    (0..self.k)
                        .filter(|&y| self.adjacency[x][y])
                        .fold(BigUint::from(0u8), |acc, y| acc + &v[y])
                })
                .collect();
        }
        v[a as usize].clone()
    }

    /// Visits every admissible word of length `n` in lexicographic order.
    /// Fails before visiting anything if the count exceeds `cap`.
    pub fn for_each_word<F: FnMut(&[u8])>(&self, n: usize, cap: u64, mut visit: F) -> Result<()> {
        let count = self.count_words(n);
        let needed: u128 = u128::try_from(&count).unwrap_or(u128::MAX);
        crate::numeric::check_cap("admissible words", needed, cap)?;
        if n == 0 {
            visit(&[]);
            return Ok(());
        }
        let mut buf = vec![0u8; n];
        self.visit_rec(&mut buf, 0, &mut visit);
        Ok(())
    }

    fn visit_rec<F: FnMut(&[u8])>(&self, buf: &mut [u8], pos: usize, visit: &mut F) {
        if pos == buf.len() {
            visit(buf);
            return;
        }
        for s in 0..self.k as u8 {
            if pos == 0 || self.allowed(buf[pos - 1], s) {
                buf[pos] = s;
                self.visit_rec(buf, pos + 1, visit);
            }
        }
    }

    pub fn words(&self, n: usize, cap: u64) -> Result<Vec<Word>> {
        let mut out = Vec::new();
        self.for_each_word(n, cap, |w| out.push(Word::from(w)))?;
        Ok(out)
    }

    /// `reach[g][a][b]`: an admissible word `a·x·b` with `|x| = g` exists.
    fn reachability(&self, max_gap: usize) -> Vec<BoolMatrix> {
        let mut out = Vec::with_capacity(max_gap + 1);
        let mut m = self.adjacency.clone();
        out.push(m.clone());
        for _ in 0..max_gap {
            m = bool_mul(&m, &self.adjacency);
            out.push(m.clone());
        }
        out
    }

    /// Lexicographically least filler `x` of length `gap` with `from·x·to` admissible.
    pub fn bridge(&self, from: u8, to: u8, gap: usize) -> Result<Vec<u8>> {
        let reach = self.reachability(gap);
        if !reach[gap][from as usize][to as usize] {
            return Err(Error::NoBridge { from, to, gap });
        }
        let mut out = Vec::with_capacity(gap);
        let mut cur = from;
        for remaining in (0..gap).rev() {
            // pick the least symbol that still reaches `to` in `remaining` fillers
            let next = (0..self.k as u8)
                .find(|&s| self.allowed(cur, s) && reach[remaining][s as usize][to as usize])
                .expect("reachability guarantees a next symbol");
            out.push(next);
            cur = next;
        }
        Ok(out)
    }

    /// Lexicographically least admissible continuation of `len` symbols after `last`
    /// (after nothing when `last` is `None`).
    pub fn least_continuation(&self, last: Option<u8>, len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len);
        let mut cur = last;
        for _ in 0..len {
            let s = match cur {
                None => 0,
                Some(c) => (0..self.k as u8).find(|&s| self.allowed(c, s)).expect("no dead symbols"),
            };
            out.push(s);
            cur = Some(s);
        }
        out
    }
}

fn primitive_gap(adjacency: &BoolMatrix) -> Option<usize> {
    let k = adjacency.len();
    // Wielandt: a primitive k×k matrix has A^p > 0 for some p ≤ (k-1)^2 + 1.
    let bound = (k - 1) * (k - 1) + 1;
    let mut m = adjacency.clone();
    for p in 1..=bound {
        if all_true(&m) {
            return Some(p - 1);
        }
        m = bool_mul(&m, adjacency);
    }
    None
}

/// Length of the longest common prefix.
pub fn lcp(u: &[u8], w: &[u8]) -> usize {
    u.iter().zip(w).take_while(|(a, b)| a == b).count()
}

/// `d_n(u, w) = max_{0≤i<n} β^{-|σ^i u ∧ σ^i w|}` for the points whose prefixes
/// are `u` and `w`. Identical words are treated as the same point (distance 0).
///
/// If the words first differ at position `L < n` the distance is `1`; otherwise it
/// is `β^{-(L-n+1)}`. The value is undecidable when one word is a proper prefix
/// of the other or either is shorter than `n`.
pub fn bowen_distance(u: &[u8], w: &[u8], n: usize, beta: f64) -> Result<f64> {
    let short = u.len().min(w.len());
    if short < n {
        return Err(Error::InsufficientLength { needed: n, available: short });
    }
    if u == w {
        return Ok(0.0);
    }
    let l = lcp(u, w);
    if l == short {
        return Err(Error::InsufficientLength { needed: short + 1, available: short });
    }
    if n == 0 {
        return Ok(0.0);
    }
    if l < n {
        Ok(1.0)
    } else {
        Ok(beta.powi(-((l - n + 1) as i32)))
    }
}

/// The set of points whose prefix of length `depth` equals `base`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cylinder {
    base: Word,
}

impl Cylinder {
    pub fn new(base: Word) -> Self {
        Cylinder { base }
    }

    pub fn base(&self) -> &Word {
        &self.base
    }

    pub fn depth(&self) -> usize {
        self.base.len()
    }

    /// Whether the point with prefix `w` lies in the cylinder (`w` must be at
    /// least as long as the cylinder to decide; shorter words are rejected).
    pub fn contains(&self, w: &[u8]) -> bool {
        w.len() >= self.base.len() && w[..self.base.len()] == self.base[..]
    }

    pub fn is_nonempty_in(&self, sft: &Sft) -> bool {
        sft.is_admissible(&self.base)
    }
}

/// `B_n(x, β^{-t})`, which is the cylinder of depth `n + t` on `x`.
pub fn bowen_ball(x: &[u8], n: usize, t: usize) -> Result<Cylinder> {
    let depth = n + t;
    if x.len() < depth {
        return Err(Error::InsufficientLength { needed: depth, available: x.len() });
    }
    Ok(Cylinder::new(Word::from(&x[..depth])))
}

/// Centers `σ^i x` for `i < n`, each truncated to the `t + 1` symbols that a
/// generalized ball of margin `t` inspects.
pub fn orbit_centers(x: &[u8], n: usize, t: usize) -> Result<Vec<Word>> {
    if x.len() < n + t {
        return Err(Error::InsufficientLength { needed: n + t, available: x.len() });
    }
    Ok((0..n).map(|i| Word::from(&x[i..i + t + 1])).collect())
}

/// `B(x_0, …, x_{n-1}; β^{-t}) = {y : d(σ^i y, x_i) < β^{-t}, 0 ≤ i < n}`.
///
/// `d(σ^i y, x_i) < β^{-t}` means `y` agrees with `x_i` on positions `i..=i+t`, so
/// each center contributes `t + 1` constraints. Returns `None` when the
/// constraints contradict each other or force an inadmissible word.
pub fn generalized_ball(sft: &Sft, centers: &[Word], t: usize) -> Result<Option<Cylinder>> {
    let n = centers.len();
    if n == 0 {
        return Ok(Some(Cylinder::new(Word::empty())));
    }
    let depth = n + t;
    let mut slots: Vec<Option<u8>> = vec![None; depth];
    for (i, c) in centers.iter().enumerate() {
        if c.len() < t + 1 {
            return Err(Error::InsufficientLength { needed: t + 1, available: c.len() });
        }
        c.check_alphabet(sft.alphabet_size())?;
        for j in 0..=t {
            match slots[i + j] {
                None => slots[i + j] = Some(c[j]),
                Some(s) if s == c[j] => {}
                Some(_) => return Ok(None),
            }
        }
    }
    let base: Vec<u8> = slots.into_iter().map(|s| s.expect("windows cover every slot")).collect();
    if !sft.is_admissible(&base) {
        return Ok(None);
    }
    Ok(Some(Cylinder::new(Word::new(base))))
}

/// Builds an admissible word from fixed segments separated by bridge gaps.
///
/// Pending gaps accumulate until the next non-empty segment arrives, so an empty
/// segment between two gaps yields a single bridge of the combined length.
#[derive(Debug, Clone)]
pub struct Splicer<'a> {
    sft: &'a Sft,
    word: Vec<u8>,
    pending_gap: usize,
}

impl<'a> Splicer<'a> {
    pub fn new(sft: &'a Sft) -> Self {
        Splicer { sft, word: Vec::new(), pending_gap: 0 }
    }

    pub fn from_prefix(sft: &'a Sft, prefix: Vec<u8>) -> Self {
        Splicer { sft, word: prefix, pending_gap: 0 }
    }

    pub fn len(&self) -> usize {
        self.word.len() + self.pending_gap
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gap(&mut self, g: usize) -> &mut Self {
        self.pending_gap += g;
        self
    }

    pub fn segment(&mut self, seg: &[u8]) -> Result<&mut Self> {
        if seg.is_empty() {
            return Ok(self);
        }
        self.sft.check_word(seg)?;
        if let Some(&last) = self.word.last() {
            let filler = self.sft.bridge(last, seg[0], self.pending_gap)?;
            self.word.extend_from_slice(&filler);
        } else if self.pending_gap > 0 {
            // leading gap: least lead-in x with x·seg admissible
            let g = self.pending_gap;
            let start = (0..self.sft.alphabet_size() as u8)
                .find(|&a| self.sft.bridge(a, seg[0], g - 1).is_ok())
                .ok_or(Error::NoBridge { from: 0, to: seg[0], gap: g })?;
            self.word.push(start);
            self.word.extend(self.sft.bridge(start, seg[0], g - 1)?);
        }
        self.pending_gap = 0;
        self.word.extend_from_slice(seg);
        Ok(self)
    }

    /// Current symbols (excluding any trailing pending gap).
    pub fn symbols(&self) -> &[u8] {
        &self.word
    }

    /// Finishes the word; a trailing gap is filled with the least admissible continuation.
    pub fn finish(mut self) -> Word {
        let tail = self.sft.least_continuation(self.word.last().copied(), self.pending_gap);
        self.word.extend(tail);
        Word::new(self.word)
    }
}

/// Concatenates `segments` with bridges of exactly `gap` symbols between consecutive
/// segments; segment `j` starts at offset `Σ_{i<j} (len_i + gap)`.
pub fn glue(segments: &[Word], gap: usize, sft: &Sft) -> Result<Word> {
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidArgument("glue segments must be non-empty".into()));
    }
    let mut sp = Splicer::new(sft);
    for (j, seg) in segments.iter().enumerate() {
        if j > 0 {
            sp.gap(gap);
        }
        sp.segment(seg)?;
    }
    Ok(sp.finish())
}

/// An eventually periodic point `preperiod · period^∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    preperiod: Word,
    period: Word,
}

impl Target {
    /// Validates that the infinite expansion is admissible in `sft`, including the
    /// preperiod/period junction and the period wraparound.
    pub fn new(preperiod: Word, period: Word, sft: &Sft) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidTarget("period must be non-empty".into()));
        }
        let target = Target { preperiod, period };
        let probe = target.expand(target.preperiod.len() + 2 * target.period.len() + 1);
        sft.check_word(&probe).map_err(|e| Error::InvalidTarget(format!("expansion not admissible: {e}")))?;
        Ok(target)
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    pub fn symbol(&self, i: usize) -> u8 {
        let p = self.preperiod.len();
        if i < p {
            self.preperiod[i]
        } else {
            self.period[(i - p) % self.period.len()]
        }
    }

    /// The first `len` symbols of the expansion.
    pub fn expand(&self, len: usize) -> Word {
        Word::new((0..len).map(|i| self.symbol(i)).collect())
    }
}

/// Outcome of a shadowing-time measurement on a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shadow {
    pub length: usize,
    /// The agreement ran to the end of the word; `length` is then a lower bound.
    pub clipped: bool,
}

/// `|σ^n ω ∧ v|` measured on the prefix `w` of `ω`.
pub fn shadow_profile(w: &[u8], v: &Target, n: usize) -> Result<Shadow> {
    if n >= w.len() {
        return Err(Error::InsufficientLength { needed: n + 1, available: w.len() });
    }
    let tail = &w[n..];
    let length = tail.iter().enumerate().take_while(|&(i, &s)| s == v.symbol(i)).count();
    Ok(Shadow { length, clipped: length == tail.len() })
}

/// `max_n (shadow_profile(w, v, n) − S_n f(w)) / n` over the given checkpoints.
pub fn membership_score(w: &[u8], v: &Target, f: &Potential, checkpoints: &[usize]) -> Result<f64> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidArgument("no checkpoints".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for &n in checkpoints {
        if n == 0 {
            return Err(Error::InvalidArgument("checkpoint 0 has no normalisation".into()));
        }
        let profile = shadow_profile(w, v, n)?;
        let sum = f.birkhoff_sum(w, n)?;
        best = best.max((profile.length as f64 - sum) / n as f64);
    }
    Ok(best)
}
