//! Locally constant potentials, Markov measures and topological pressure.
//!
//! Pressure is computed spectrally: for a potential of depth `r` the weighted
//! transition graph on admissible `(r-1)`-words has Perron root `e^{P(φ)}`.
//! The spanning-set definition is available separately as a finite-`n`
//! estimator and is only used to validate the spectral value.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numeric::{check_cap, LogSum};
use crate::symbolic::{Sft, Word};

/// Largest table a potential may carry (`k^r` entries).
pub const MAX_TABLE: usize = 1 << 22;

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 200_000;

/// A function of the first `r` symbols, tabulated over admissible `r`-words.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    k: usize,
    depth: usize,
    /// Indexed by the base-`k` value of the word; `None` marks inadmissible words.
    table: Vec<Option<f64>>,
    norm: f64,
}

fn word_index(k: usize, w: &[u8]) -> usize {
    w.iter().fold(0usize, |acc, &s| acc * k + s as usize)
}

impl Potential {
    /// Tabulates `value` on every admissible word of length `depth`.
    pub fn from_fn<F: FnMut(&[u8]) -> f64>(sft: &Sft, depth: usize, mut value: F) -> Result<Self> {
        let k = sft.alphabet_size();
        if depth == 0 {
            return Err(Error::InvalidPotential("depth must be at least 1".into()));
        }
        let size = k.checked_pow(depth as u32).filter(|&s| s <= MAX_TABLE).ok_or_else(|| {
            Error::InvalidPotential(format!("table of {k}^{depth} entries exceeds {MAX_TABLE}"))
        })?;
        let mut table = vec![None; size];
        let mut bad = None;
        sft.for_each_word(depth, u64::MAX, |w| {
            let v = value(w);
            if !v.is_finite() && bad.is_none() {
                bad = Some(Word::from(w));
            }
            table[word_index(k, w)] = Some(v);
        })?;
        if let Some(w) = bad {
            return Err(Error::InvalidPotential(format!("non-finite value on word {w}")));
        }
        let norm = table.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Potential { k, depth, table, norm })
    }

    pub fn constant(sft: &Sft, c: f64) -> Self {
        Potential::from_fn(sft, 1, |_| c).expect("depth-1 table always fits")
    }

    pub fn zero(sft: &Sft) -> Self {
        Potential::constant(sft, 0.0)
    }

    /// Depth-1 potential `f(a) = values[a]`.
    pub fn from_symbol_values(sft: &Sft, values: &[f64]) -> Result<Self> {
        if values.len() != sft.alphabet_size() {
            return Err(Error::InvalidPotential(format!(
                "{} symbol values for alphabet of size {}",
                values.len(),
                sft.alphabet_size()
            )));
        }
        Potential::from_fn(sft, 1, |w| values[w[0] as usize])
    }

    /// Builds a depth-`depth` potential from explicit entries, which must cover
    /// exactly the admissible words of that length.
    pub fn from_entries(sft: &Sft, depth: usize, entries: &[(Word, f64)]) -> Result<Self> {
        let mut map: HashMap<&[u8], f64> = HashMap::new();
        for (w, v) in entries {
            if w.len() != depth {
                return Err(Error::InvalidPotential(format!("word {w} has length {}, expected {depth}", w.len())));
            }
            if !sft.is_admissible(w) {
                return Err(Error::InvalidPotential(format!("word {w} is not admissible")));
            }
            if map.insert(w.symbols(), *v).is_some() {
                return Err(Error::InvalidPotential(format!("word {w} listed twice")));
            }
        }
        let mut missing = None;
        let p = Potential::from_fn(sft, depth, |w| match map.get(w) {
            Some(&v) => v,
            None => {
                missing.get_or_insert_with(|| Word::from(w));
                0.0
            }
        })?;
        if let Some(w) = missing {
            return Err(Error::InvalidPotential(format!("no value for admissible word {w}")));
        }
        Ok(p)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    /// `‖f‖ = max |f|`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn min_value(&self) -> f64 {
        self.table.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.min_value() >= 0.0
    }

    pub fn is_constant(&self) -> bool {
        self.min_value() == self.max_value()
    }

    /// Value on an admissible word of length `depth`.
    pub fn value(&self, w: &[u8]) -> f64 {
        debug_assert_eq!(w.len(), self.depth);
        self.table[word_index(self.k, w)].expect("potential evaluated on an inadmissible word")
    }

    pub fn get(&self, w: &[u8]) -> Option<f64> {
        if w.len() != self.depth || w.iter().any(|&s| s as usize >= self.k) {
            return None;
        }
        self.table[word_index(self.k, w)]
    }

    /// `(word, value)` pairs in lexicographic order.
    pub fn entries(&self) -> Vec<(Word, f64)> {
        let mut out = Vec::new();
        for (idx, v) in self.table.iter().enumerate() {
            if let Some(v) = v {
                let mut w = vec![0u8; self.depth];
                let mut x = idx;
                for slot in w.iter_mut().rev() {
                    *slot = (x % self.k) as u8;
                    x /= self.k;
                }
                out.push((Word::new(w), *v));
            }
        }
        out
    }

    /// `x ↦ scale·f(x) + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Potential {
        let table: Vec<Option<f64>> = self.table.iter().map(|v| v.map(|x| scale * x + shift)).collect();
        let norm = table.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        Potential { k: self.k, depth: self.depth, table, norm }
    }

    /// `S_n f(w) = Σ_{i<n} f(w_i … w_{i+r-1})`; needs `n + r - 1` symbols.
    pub fn birkhoff_sum(&self, w: &[u8], n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let needed = n + self.depth - 1;
        if w.len() < needed {
            return Err(Error::InsufficientLength { needed, available: w.len() });
        }
        let mut sum = 0.0;
        for i in 0..n {
            sum += self.get(&w[i..i + self.depth]).ok_or(Error::NotAdmissible { position: i })?;
        }
        Ok(sum)
    }

    /// `max |f(u) − f(w)|` over admissible `r`-words sharing at least `t` leading symbols.
    pub fn variation_modulus(&self, t: usize) -> f64 {
        if t >= self.depth {
            return 0.0;
        }
        let mut groups: HashMap<Vec<u8>, (f64, f64)> = HashMap::new();
        for (w, v) in self.entries() {
            let e = groups.entry(w[..t].to_vec()).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
        groups.values().fold(0.0, |m, (lo, hi)| m.max(hi - lo))
    }
}

pub fn birkhoff_sum(f: &Potential, w: &[u8], n: usize) -> Result<f64> {
    f.birkhoff_sum(w, n)
}

pub fn variation_modulus(f: &Potential, t: usize) -> f64 {
    f.variation_modulus(t)
}

/// The weighted transition graph whose Perron root is `e^{P(φ)}`.
struct WeightedGraph {
    /// Outgoing `(target, log-weight)` per state.
    edges: Vec<Vec<(usize, f64)>>,
}

const MAX_STATES: usize = 1 << 14;

impl WeightedGraph {
    fn new(sft: &Sft, phi: &Potential) -> Result<Self> {
        if phi.alphabet_size() != sft.alphabet_size() {
            return Err(Error::InvalidPotential("potential and shift use different alphabets".into()));
        }
        let k = sft.alphabet_size();
        let r = phi.depth();
        if r <= 2 {
            let mut edges = vec![Vec::new(); k];
            for a in 0..k as u8 {
                for b in 0..k as u8 {
                    if sft.allowed(a, b) {
                        let w = if r == 1 { phi.value(&[a]) } else { phi.value(&[a, b]) };
                        edges[a as usize].push((b as usize, w));
                    }
                }
            }
            return Ok(WeightedGraph { edges });
        }
        // higher-block recoding on admissible (r-1)-words
        let labels = sft.words(r - 1, MAX_STATES as u64)?;
        let index: HashMap<&[u8], usize> = labels.iter().enumerate().map(|(i, w)| (w.symbols(), i)).collect();
        let mut edges = vec![Vec::new(); labels.len()];
        let mut buf = vec![0u8; r];
        for (i, u) in labels.iter().enumerate() {
            let last = u[r - 2];
            for b in 0..k as u8 {
                if sft.allowed(last, b) {
                    buf[..r - 1].copy_from_slice(u);
                    buf[r - 1] = b;
                    let j = index[&buf[1..]];
                    edges[i].push((j, phi.value(&buf)));
                }
            }
        }
        Ok(WeightedGraph { edges })
    }

    fn len(&self) -> usize {
        self.edges.len()
    }

    /// Perron root and right eigenvector by power iteration, stopped once the
    /// Collatz–Wielandt bounds agree to `POWER_TOL` relative. The root is
    /// returned in log form; weights are shifted by their maximum for stability.
    fn perron(&self) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        let shift = self.edges.iter().flatten().fold(f64::NEG_INFINITY, |m, &(_, w)| m.max(w));
        let weights: Vec<Vec<(usize, f64)>> =
            self.edges.iter().map(|row| row.iter().map(|&(j, w)| (j, (w - shift).exp())).collect()).collect();
        let mut x = vec![1.0; n];
        let mut y = vec![0.0; n];
        for _ in 0..POWER_MAX_ITER {
            for (i, row) in weights.iter().enumerate() {
                y[i] = row.iter().map(|&(j, w)| w * x[j]).sum();
            }
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..n {
                let ratio = y[i] / x[i];
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            let scale = y.iter().cloned().fold(0.0f64, f64::max);
            for i in 0..n {
                x[i] = y[i] / scale;
            }
            if lo > 0.0 && (hi - lo) <= POWER_TOL * lo {
                let rho = 0.5 * (lo + hi);
                return Ok((rho.ln() + shift, x));
            }
        }
        Err(Error::NoConvergence { iterations: POWER_MAX_ITER })
    }
}

/// `P(φ)` as the log spectral radius of the weighted transition matrix.
pub fn transfer_pressure(sft: &Sft, phi: &Potential) -> Result<f64> {
    if !sft.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    Ok(WeightedGraph::new(sft, phi)?.perron()?.0)
}

/// `h_top` of the shift.
pub fn topological_entropy(sft: &Sft) -> Result<f64> {
    transfer_pressure(sft, &Potential::zero(sft))
}

/// `(1/n) log Q_n(φ, β^{-t})` with the minimal spanning set taken to be one point
/// per admissible `(n+t)`-cylinder, which is exact in the ultrametric.
pub fn definitional_pressure(sft: &Sft, phi: &Potential, n: usize, t: usize, cap: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if t < 1.max(phi.depth() - 1) {
        return Err(Error::InvalidArgument(format!(
            "margin t = {t} must be at least max(1, depth - 1) = {}",
            1.max(phi.depth() - 1)
        )));
    }
    let mut acc = LogSum::new();
    let mut err = None;
    sft.for_each_word(n + t, cap, |w| match phi.birkhoff_sum(w, n) {
        Ok(s) => acc.add(s),
        Err(e) => {
            err.get_or_insert(e);
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(acc.value() / n as f64)
}

/// Solves `x (P - I) = 0`, `Σ x = 1` by Gaussian elimination with partial pivoting.
fn stationary_vector(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = p.len();
    // rows of the transposed system; last equation replaced by normalisation
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[k - 1][j] = 1.0;
    }
    a[k - 1][k] = 1.0;
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..k {
            if row != col {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    for c in col..=k {
                        a[row][c] -= factor * a[col][c];
                    }
                }
            }
        }
    }
    let x: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    Some(x.into_iter().map(|v| if v.abs() < 1e-300 { 0.0 } else { v }).collect())
}

/// A first-order Markov measure supported on the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl MarkovMeasure {
    /// Validates a row-stochastic matrix supported on the adjacency and computes
    /// its stationary vector.
    pub fn new(sft: &Sft, transition: Vec<Vec<f64>>) -> Result<Self> {
        let k = sft.alphabet_size();
        if transition.len() != k || transition.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidMeasure(format!("transition matrix must be {k}×{k}")));
        }
        for (a, row) in transition.iter().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidMeasure(format!("row {a} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMeasure(format!("row {a} sums to {sum}")));
            }
            for (b, &x) in row.iter().enumerate() {
                if x > 0.0 && !sft.allowed(a as u8, b as u8) {
                    return Err(Error::InvalidMeasure(format!("transition {a}→{b} is forbidden by the shift")));
                }
            }
        }
        let stationary = stationary_vector(&transition)
            .ok_or_else(|| Error::InvalidMeasure("stationary vector is not unique".into()))?;
        let m = MarkovMeasure { transition, stationary };
        m.check_stationary()?;
        Ok(m)
    }

    fn check_stationary(&self) -> Result<()> {
        let k = self.stationary.len();
        if self.stationary.iter().any(|&x| x < -STATIONARY_TOL) {
            return Err(Error::InvalidMeasure("stationary vector has negative entries".into()));
        }
        for b in 0..k {
            let lhs: f64 = (0..k).map(|a| self.stationary[a] * self.transition[a][b]).sum();
            if (lhs - self.stationary[b]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidMeasure(format!("πP ≠ π at coordinate {b}")));
            }
        }
        Ok(())
    }

    /// The Bernoulli measure with symbol probabilities `probs` on a full shift.
    pub fn bernoulli(sft: &Sft, probs: &[f64]) -> Result<Self> {
        if !sft.is_full() {
            return Err(Error::InvalidMeasure("Bernoulli measures need a full shift".into()));
        }
        let k = sft.alphabet_size();
        if probs.len() != k {
            return Err(Error::InvalidMeasure(format!("{} probabilities for {k} symbols", probs.len())));
        }
        MarkovMeasure::new(sft, vec![probs.to_vec(); k])
    }

    /// The equilibrium state of a potential of depth ≤ 2:
    /// `P_ab = B_ab v_b / (λ v_a)` for the weighted matrix `B` with right Perron vector `v`.
    pub fn equilibrium(sft: &Sft, phi: &Potential) -> Result<Self> {
        if phi.depth() > 2 {
            return Err(Error::InvalidPotential("equilibrium states are built for depth ≤ 2".into()));
        }
        if !sft.is_primitive() {
            return Err(Error::NotPrimitive);
        }
        let graph = WeightedGraph::new(sft, phi)?;
        let (log_rho, v) = graph.perron()?;
        let k = sft.alphabet_size();
        let mut transition = vec![vec![0.0; k]; k];
        for (a, row) in graph.edges.iter().enumerate() {
            for &(b, w) in row {
                transition[a][b] = (w - log_rho).exp() * v[b] / v[a];
            }
            let sum: f64 = transition[a].iter().sum();
            for x in transition[a].iter_mut() {
                *x /= sum;
            }
        }
        MarkovMeasure::new(sft, transition)
    }

    /// The measure of maximal entropy (Parry measure).
    pub fn parry(sft: &Sft) -> Result<Self> {
        MarkovMeasure::equilibrium(sft, &Potential::zero(sft))
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn alphabet_size(&self) -> usize {
        self.stationary.len()
    }

    /// True iff the transition graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let k = self.alphabet_size();
        let reach_all = |forward: bool| {
            let mut seen = vec![false; k];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(a) = stack.pop() {
                for b in 0..k {
                    let p = if forward { self.transition[a][b] } else { self.transition[b][a] };
                    if p > 0.0 && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        reach_all(true) && reach_all(false)
    }

    /// `μ([w]) = π_{w_0} Π P_{w_i w_{i+1}}`.
    pub fn cylinder_mass(&self, w: &[u8]) -> f64 {
        match w.first() {
            None => 1.0,
            Some(&a) => w.windows(2).fold(self.stationary[a as usize], |m, p| m * self.transition[p[0] as usize][p[1] as usize]),
        }
    }

    /// `h_μ = −Σ_a π_a Σ_b P_ab log P_ab`.
    pub fn entropy(&self) -> f64 {
        let mut h = 0.0;
        for (a, row) in self.transition.iter().enumerate() {
            for &p in row {
                if p > 0.0 {
                    h -= self.stationary[a] * p * p.ln();
                }
            }
        }
        h
    }

    /// `∫ f dμ` for a locally constant `f` of any depth.
    pub fn integral(&self, f: &Potential) -> f64 {
        f.entries().iter().map(|(w, v)| self.cylinder_mass(w) * v).sum()
    }
}

pub fn measure_entropy(m: &MarkovMeasure) -> f64 {
    m.entropy()
}

pub fn measure_integral(f: &Potential, m: &MarkovMeasure) -> f64 {
    m.integral(f)
}

/// Root `s₀` of `s ↦ P(−s(f+1))` by bisection on `[0, h_top]`.
///
/// The map is strictly decreasing with slope at most −1 because `f + 1 ≥ 1`, so
/// the bracket always holds a sign change and the root error is bounded by the
/// bracket width plus the pressure error.
pub fn solve_pressure_root(sft: &Sft, f: &Potential, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    if !f.is_nonnegative() {
        return Err(Error::NegativePotential { value: f.min_value() });
    }
    let h = topological_entropy(sft)?;
    let pressure_at = |s: f64| transfer_pressure(sft, &f.affine(-s, -s));
    let (mut lo, mut hi) = (0.0, h.max(0.0));
    if hi == 0.0 {
        return Ok(0.0);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pressure_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One measure visited by the variational grid scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// Integer grid coordinates (row by row for Markov families).
    pub params: Vec<u32>,
    pub entropy: f64,
    pub integral: f64,
}

impl GridPoint {
    pub fn ratio(&self) -> f64 {
        self.entropy / (1.0 + self.integral)
    }
}

/// Which family of measures the grid scan covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureFamily {
    Bernoulli,
    Markov,
}

#[derive(Debug, Clone)]
pub struct VariationalResult {
    pub ratio: f64,
    pub measure: MarkovMeasure,
    pub family: MeasureFamily,
    pub grid: u32,
    pub points: usize,
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(total: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=total {
            cur.push(x);
            rec(total - x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: u64, r: u64) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// The family used for `f`: Bernoulli on full shifts with depth-1 `f` (the
/// equilibrium state is then Bernoulli), first-order Markov otherwise.
pub fn measure_family(sft: &Sft, f: &Potential) -> MeasureFamily {
    if sft.is_full() && f.depth() == 1 {
        MeasureFamily::Bernoulli
    } else {
        MeasureFamily::Markov
    }
}

/// Enumerates grid measures with probabilities in multiples of `1/grid`, in
/// lexicographic order of their integer coordinates.
pub fn grid_scan(sft: &Sft, f: &Potential, grid: u32, cap: u64) -> Result<(MeasureFamily, Vec<GridPoint>)> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    if f.depth() > 2 {
        return Err(Error::InvalidPotential("variational scan supports depth ≤ 2".into()));
    }
    let k = sft.alphabet_size();
    let family = measure_family(sft, f);
    let g = grid as f64;
    let mut out = Vec::new();
    match family {
        MeasureFamily::Bernoulli => {
            check_cap("grid measures", binomial(grid as u64 + k as u64 - 1, k as u64 - 1), cap)?;
            for c in compositions(grid, k) {
                let p: Vec<f64> = c.iter().map(|&x| x as f64 / g).collect();
                let entropy = -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>();
                let integral = p.iter().enumerate().map(|(a, &x)| x * f.value(&[a as u8])).sum();
                out.push(GridPoint { params: c, entropy, integral });
            }
        }
        MeasureFamily::Markov => {
            let succ: Vec<Vec<usize>> =
                (0..k).map(|a| (0..k).filter(|&b| sft.allowed(a as u8, b as u8)).collect()).collect();
            let needed = succ.iter().fold(1u128, |acc, s| {
                acc.saturating_mul(binomial(grid as u64 + s.len() as u64 - 1, s.len() as u64 - 1))
            });
            check_cap("grid measures", needed, cap)?;
            let rows: Vec<Vec<Vec<u32>>> = succ.iter().map(|s| compositions(grid, s.len())).collect();
            let mut idx = vec![0usize; k];
            'outer: loop {
                let mut transition = vec![vec![0.0; k]; k];
                let mut params = Vec::new();
                for a in 0..k {
                    let c = &rows[a][idx[a]];
                    params.extend_from_slice(c);
                    for (pos, &b) in succ[a].iter().enumerate() {
                        transition[a][b] = c[pos] as f64 / g;
                    }
                }
                if let Ok(m) = MarkovMeasure::new(sft, transition) {
                    out.push(GridPoint { params, entropy: m.entropy(), integral: m.integral(f) });
                }
                // odometer, last row fastest
                for a in (0..k).rev() {
                    idx[a] += 1;
                    if idx[a] < rows[a].len() {
                        continue 'outer;
                    }
                    idx[a] = 0;
                }
                break;
            }
        }
    }
    Ok((family, out))
}

fn grid_measure(sft: &Sft, family: MeasureFamily, params: &[u32], grid: u32) -> Result<MarkovMeasure> {
    let k = sft.alphabet_size();
    let g = grid as f64;
    match family {
        MeasureFamily::Bernoulli => {
            let p: Vec<f64> = params.iter().map(|&x| x as f64 / g).collect();
            MarkovMeasure::bernoulli(sft, &p)
        }
        MeasureFamily::Markov => {
            let mut transition = vec![vec![0.0; k]; k];
            let mut it = params.iter();
            for a in 0..k {
                for b in 0..k {
                    if sft.allowed(a as u8, b as u8) {
                        transition[a][b] = *it.next().expect("params cover the support") as f64 / g;
                    }
                }
            }
            MarkovMeasure::new(sft, transition)
        }
    }
}

/// `max h_μ / (1 + ∫f dμ)` over the grid; a lower bound for the variational
/// supremum. Ties keep the lexicographically first grid point.
pub fn variational_ratio(sft: &Sft, f: &Potential, grid: u32, cap: u64) -> Result<VariationalResult> {
    let (family, points) = grid_scan(sft, f, grid, cap)?;
    let mut best: Option<&GridPoint> = None;
    for p in &points {
        if best.is_none_or(|b| p.ratio() > b.ratio()) {
            best = Some(p);
        }
    }
    let best = best.ok_or_else(|| Error::InvalidMeasure("grid contains no valid measure".into()))?;
    Ok(VariationalResult {
        ratio: best.ratio(),
        measure: grid_measure(sft, family, &best.params, grid)?,
        family,
        grid,
        points: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KatokMode {
    /// Brute force over all cylinder subsets (tiny instances only).
    Exact,
    /// Mass-descending greedy; exact for `φ = 0`, an upper bound otherwise.
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KatokResult {
    /// `log N^μ(φ, γ, β^{-t}, n)`.
    pub log_value: f64,
    /// Whether `log_value` is the true minimum (false: greedy upper bound).
    pub exact: bool,
    pub cylinders: usize,
    pub covered_mass: f64,
}

impl KatokResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Largest cylinder count brute-forced by [`KatokMode::Exact`].
pub const KATOK_EXACT_MAX: usize = 22;

/// Minimal `Σ exp(S_n φ)` over collections of `(n+t)`-cylinders with total
/// `μ`-mass above `1 − γ`.
pub fn katok_mass(
    sft: &Sft,
    m: &MarkovMeasure,
    phi: &Potential,
    gamma: f64,
    t: usize,
    n: usize,
    mode: KatokMode,
    cap: u64,
) -> Result<KatokResult> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if t + 1 < phi.depth() {
        return Err(Error::InvalidArgument(format!("margin t = {t} below depth - 1 = {}", phi.depth() - 1)));
    }
    let mut cyl: Vec<(f64, f64, Word)> = Vec::new();
    let mut err = None;
    sft.for_each_word(n + t, cap, |w| {
        let mass = m.cylinder_mass(w);
        if mass > 0.0 {
            match phi.birkhoff_sum(w, n) {
                Ok(s) => cyl.push((mass, s, Word::from(w))),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let threshold = 1.0 - gamma;
    match mode {
        KatokMode::Greedy => {
            cyl.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut covered = 0.0;
            let mut acc = LogSum::new();
            let mut used = 0;
            for (mass, s, _) in &cyl {
                if covered > threshold {
                    break;
                }
                covered += mass;
                acc.add(*s);
                used += 1;
            }
            Ok(KatokResult { log_value: acc.value(), exact: phi.is_constant(), cylinders: used, covered_mass: covered })
        }
        KatokMode::Exact => {
            if cyl.len() > KATOK_EXACT_MAX {
                return Err(Error::CapExceeded {
                    what: "cylinders for exact Katok search",
                    needed: cyl.len() as u128,
                    cap: KATOK_EXACT_MAX as u64,
                });
            }
            let mut best: Option<(f64, usize, f64)> = None;
            for mask in 1u64..(1u64 << cyl.len()) {
                let mut covered = 0.0;
                let mut acc = LogSum::new();
                for (i, (mass, s, _)) in cyl.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        covered += mass;
                        acc.add(*s);
                    }
                }
                if covered > threshold {
                    let v = acc.value();
                    if best.is_none_or(|(b, _, _)| v < b) {
                        best = Some((v, mask.count_ones() as usize, covered));
                    }
                }
            }
            let (log_value, cylinders, covered_mass) = best.unwrap_or_else(|| {
                let all = crate::numeric::log_sum_exp(cyl.iter().map(|c| c.1));
                (all, cyl.len(), cyl.iter().map(|c| c.0).sum())
            });
            Ok(KatokResult { log_value, exact: true, cylinders, covered_mass })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: u64 = 1 << 22;

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    fn full2() -> Sft {
        Sft::full(2, 2.0).unwrap()
    }

    fn indicator(sft: &Sft) -> Potential {
        Potential::from_symbol_values(sft, &[0.0, 1.0]).unwrap()
    }

    #[test]
    fn birkhoff_sum_examples() {
        let s = full2();
        let f = Potential::constant(&s, 0.7);
        assert!((f.birkhoff_sum(&[0, 1, 1, 0, 1], 5).unwrap() - 3.5).abs() < 1e-12);
        assert_eq!(indicator(&s).birkhoff_sum(&[0, 1, 1, 0], 4).unwrap(), 2.0);
        assert_eq!(f.birkhoff_sum(&[], 0).unwrap(), 0.0);
        let g = Potential::from_fn(&s, 2, |w| (w[0] * 2 + w[1]) as f64).unwrap();
        assert!(matches!(g.birkhoff_sum(&[0, 1, 1], 3), Err(Error::InsufficientLength { needed: 4, .. })));
        assert_eq!(g.birkhoff_sum(&[0, 1, 1, 0], 3).unwrap(), 1.0 + 3.0 + 2.0);
    }

    #[test]
    fn variation_modulus_examples() {
        let s = full2();
        let f = indicator(&s);
        assert_eq!(f.variation_modulus(1), 0.0);
        assert_eq!(f.variation_modulus(0), 1.0);
        assert_eq!(Potential::constant(&s, 3.0).variation_modulus(0), 0.0);
        let g = Potential::from_fn(&s, 2, |w| (w[0] * 2 + w[1]) as f64).unwrap();
        assert_eq!(g.variation_modulus(1), 1.0);
        assert_eq!(g.variation_modulus(0), 3.0);
        assert_eq!(g.variation_modulus(5), 0.0);
    }

    #[test]
    fn potential_from_entries_must_cover_admissible_words() {
        let gm = Sft::golden_mean(2.0);
        let entries = vec![("00".parse().unwrap(), 1.0), ("01".parse().unwrap(), 2.0), ("10".parse().unwrap(), 3.0)];
        let p = Potential::from_entries(&gm, 2, &entries).unwrap();
        assert_eq!(p.value(&[1, 0]), 3.0);
        assert_eq!(p.get(&[1, 1]), None);
        assert!(Potential::from_entries(&gm, 2, &entries[..2]).is_err());
        let mut bad = entries.clone();
        bad.push(("11".parse().unwrap(), 0.0));
        assert!(Potential::from_entries(&gm, 2, &bad).is_err());
    }

    #[test]
    fn transfer_pressure_examples() {
        let s = full2();
        assert!((transfer_pressure(&s, &Potential::zero(&s)).unwrap() - 2f64.ln()).abs() < 1e-12);
        let gm = Sft::golden_mean(2.0);
        assert!((transfer_pressure(&gm, &Potential::zero(&gm)).unwrap() - golden().ln()).abs() < 1e-12);
        let p = transfer_pressure(&s, &indicator(&s)).unwrap();
        assert!((p - (1.0 + 1f64.exp()).ln()).abs() < 1e-12);
    }

    #[test]
    fn depth_three_recoding_matches_depth_two() {
        // a depth-2 potential rewritten as a depth-3 table must keep its pressure
        let gm = Sft::golden_mean(2.0);
        let two = Potential::from_fn(&gm, 2, |w| 0.3 * w[0] as f64 + 0.1 * w[1] as f64).unwrap();
        let three = Potential::from_fn(&gm, 3, |w| 0.3 * w[0] as f64 + 0.1 * w[1] as f64).unwrap();
        let a = transfer_pressure(&gm, &two).unwrap();
        let b = transfer_pressure(&gm, &three).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn transfer_pressure_rejects_non_primitive() {
        let cyc = Sft::new(vec![vec![0, 1], vec![1, 0]], 2.0).unwrap();
        assert_eq!(transfer_pressure(&cyc, &Potential::zero(&cyc)), Err(Error::NotPrimitive));
    }

    #[test]
    fn definitional_pressure_examples() {
        let s = full2();
        let v = definitional_pressure(&s, &Potential::zero(&s), 10, 3, CAP).unwrap();
        assert!((v - 1.3 * 2f64.ln()).abs() < 1e-12);
        for (n, t) in [(5, 1), (8, 2), (11, 4)] {
            let v = definitional_pressure(&s, &indicator(&s), n, t, CAP).unwrap();
            let expected = (1.0 + 1f64.exp()).ln() + t as f64 / n as f64 * 2f64.ln();
            assert!((v - expected).abs() < 1e-12);
        }
        assert!(definitional_pressure(&s, &Potential::zero(&s), 10, 0, CAP).is_err());
        assert!(matches!(
            definitional_pressure(&s, &Potential::zero(&s), 30, 3, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn measure_entropy_examples() {
        let s = full2();
        let half = MarkovMeasure::bernoulli(&s, &[0.5, 0.5]).unwrap();
        assert!((half.entropy() - 2f64.ln()).abs() < 1e-15);
        let p = 0.3f64;
        let b = MarkovMeasure::bernoulli(&s, &[1.0 - p, p]).unwrap();
        assert!((b.entropy() + p * p.ln() + (1.0 - p) * (1.0 - p).ln()).abs() < 1e-15);
        let det = MarkovMeasure::new(&s, vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(det.entropy(), 0.0);
        assert_eq!(det.stationary(), &[0.5, 0.5]);
    }

    #[test]
    fn measure_integral_examples() {
        let s = full2();
        let b = MarkovMeasure::bernoulli(&s, &[0.6, 0.4]).unwrap();
        assert!((b.integral(&Potential::constant(&s, 2.5)) - 2.5).abs() < 1e-15);
        assert!((b.integral(&indicator(&s)) - 0.4).abs() < 1e-15);
        let g = Potential::from_fn(&s, 2, |w| (w[0] + w[1]) as f64).unwrap();
        assert!((b.integral(&g) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn measure_validation() {
        let gm = Sft::golden_mean(2.0);
        assert!(MarkovMeasure::new(&gm, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
        assert!(MarkovMeasure::new(&gm, vec![vec![0.5, 0.6], vec![1.0, 0.0]]).is_err());
        let m = MarkovMeasure::new(&gm, vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert!((m.stationary()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.is_irreducible());
        assert!(MarkovMeasure::bernoulli(&gm, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn parry_measure_has_maximal_entropy() {
        let gm = Sft::golden_mean(2.0);
        let m = MarkovMeasure::parry(&gm).unwrap();
        assert!((m.entropy() - golden().ln()).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_state_attains_pressure() {
        // h_μ + ∫φ dμ = P(φ) at the equilibrium state
        let gm = Sft::golden_mean(2.0);
        let phi = Potential::from_fn(&gm, 2, |w| 0.4 * w[0] as f64 - 0.2 * w[1] as f64 + 0.1).unwrap();
        let m = MarkovMeasure::equilibrium(&gm, &phi).unwrap();
        let p = transfer_pressure(&gm, &phi).unwrap();
        assert!((m.entropy() + m.integral(&phi) - p).abs() < 1e-12);
    }

    #[test]
    fn pressure_root_examples() {
        let s = full2();
        let r = solve_pressure_root(&s, &Potential::constant(&s, 1.0), 1e-13).unwrap();
        assert!((r - 2f64.ln() / 2.0).abs() < 1e-12);
        let r = solve_pressure_root(&s, &Potential::zero(&s), 1e-13).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-12);
        let r = solve_pressure_root(&s, &indicator(&s), 1e-13).unwrap();
        assert!((r - golden().ln()).abs() < 1e-12);
        let neg = Potential::from_symbol_values(&s, &[-0.5, 1.0]).unwrap();
        assert!(matches!(solve_pressure_root(&s, &neg, 1e-9), Err(Error::NegativePotential { .. })));
    }

    #[test]
    fn trivial_shift_has_zero_root_and_ratio() {
        let one = Sft::full(1, 2.0).unwrap();
        let f = Potential::constant(&one, 1.0);
        assert_eq!(solve_pressure_root(&one, &f, 1e-9).unwrap(), 0.0);
        assert_eq!(variational_ratio(&one, &f, 10, CAP).unwrap().ratio, 0.0);
    }

    #[test]
    fn variational_ratio_examples() {
        let s = full2();
        let f = Potential::constant(&s, 1.0);
        let v = variational_ratio(&s, &f, 100, CAP).unwrap();
        assert!((v.ratio - 2f64.ln() / 2.0).abs() < 1e-15);
        assert_eq!(v.measure.stationary(), &[0.5, 0.5]);

        let v = variational_ratio(&s, &indicator(&s), 10_000, CAP).unwrap();
        assert!((v.ratio - golden().ln()).abs() < 1e-6);
        let p1 = v.measure.stationary()[1];
        // argmax is the equilibrium weight e^{-2 s0} = φ^{-2}
        assert!((p1 - golden().powi(-2)).abs() < 2e-4, "{p1}");
    }

    #[test]
    fn markov_grid_on_golden_mean() {
        let gm = Sft::golden_mean(2.0);
        let f = Potential::constant(&gm, 0.0);
        let v = variational_ratio(&gm, &f, 200, CAP).unwrap();
        assert_eq!(v.family, MeasureFamily::Markov);
        assert!(v.ratio <= golden().ln() + 1e-12);
        assert!((v.ratio - golden().ln()).abs() < 1e-4);
    }

    #[test]
    fn katok_examples() {
        let s = full2();
        let m = MarkovMeasure::bernoulli(&s, &[0.5, 0.5]).unwrap();
        let z = Potential::zero(&s);
        let r = katok_mass(&s, &m, &z, 0.5, 2, 4, KatokMode::Greedy, CAP).unwrap();
        assert_eq!(r.cylinders, 33);
        assert!((r.log_value - 33f64.ln()).abs() < 1e-12);
        assert!(r.exact);
        // γ → 0⁺ needs every cylinder: the count behind Q_n
        let r = katok_mass(&s, &m, &z, 1e-9, 2, 4, KatokMode::Greedy, CAP).unwrap();
        assert_eq!(r.cylinders, 64);
    }

    #[test]
    fn katok_greedy_is_an_upper_bound_of_exact() {
        let s = full2();
        let m = MarkovMeasure::bernoulli(&s, &[0.3, 0.7]).unwrap();
        let phi = Potential::from_symbol_values(&s, &[1.5, -0.5]).unwrap();
        for gamma in [0.1, 0.3, 0.6] {
            let g = katok_mass(&s, &m, &phi, gamma, 1, 3, KatokMode::Greedy, CAP).unwrap();
            let e = katok_mass(&s, &m, &phi, gamma, 1, 3, KatokMode::Exact, CAP).unwrap();
            assert!(!g.exact && e.exact);
            assert!(e.log_value <= g.log_value + 1e-12);
            assert!(e.covered_mass > 1.0 - gamma);
        }
        let z = Potential::zero(&s);
        let g = katok_mass(&s, &m, &z, 0.3, 1, 3, KatokMode::Greedy, CAP).unwrap();
        let e = katok_mass(&s, &m, &z, 0.3, 1, 3, KatokMode::Exact, CAP).unwrap();
        assert!((g.log_value - e.log_value).abs() < 1e-12);
    }
}
