//! Bowen entropy at finite scale: cover sums, the upper-bound cover series,
//! structural and sampled Moran estimates, and the Hausdorff conversion.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::moran::{count_points, LevelPoint, MoranSchedule};
use crate::numeric::{big_ln, check_cap, ls_fit, ls_slope, LogSum};
use crate::symbolic::{generalized_ball, orbit_centers, Cylinder, Sft, Word};
use crate::thermo::Potential;

/// One Bowen ball `B_n(x, β^{-t})` of a cover, as its cylinder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverItem {
    pub cylinder: Cylinder,
    pub n: usize,
    pub t: usize,
}

impl CoverItem {
    pub fn new(cylinder: Cylinder, n: usize, t: usize) -> Result<Self> {
        if cylinder.depth() != n + t {
            return Err(Error::InvalidArgument(format!(
                "cylinder depth {} differs from n + t = {}",
                cylinder.depth(),
                n + t
            )));
        }
        Ok(CoverItem { cylinder, n, t })
    }
}

/// Extremes of `S_n φ` over a cylinder. Symbols the base leaves free are
/// resolved by trying every admissible extension (at most `depth − 1` symbols).
fn birkhoff_extremes(sft: &Sft, phi: &Potential, base: &[u8], n: usize) -> Result<(f64, f64)> {
    let needed = n + phi.depth() - 1;
    if base.len() >= needed {
        let s = phi.birkhoff_sum(base, n)?;
        return Ok((s, s));
    }
    if base.len() < n {
        return Err(Error::InsufficientLength { needed: n, available: base.len() });
    }
    sft.check_word(base)?;
    let k = sft.alphabet_size() as u8;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut buf = base.to_vec();
    fn rec(sft: &Sft, phi: &Potential, n: usize, needed: usize, k: u8, buf: &mut Vec<u8>, lo: &mut f64, hi: &mut f64) {
        if buf.len() == needed {
            let s = phi.birkhoff_sum(buf, n).expect("admissible extension");
            *lo = lo.min(s);
            *hi = hi.max(s);
            return;
        }
        let last = *buf.last().expect("non-empty base");
        for b in 0..k {
            if sft.allowed(last, b) {
                buf.push(b);
                rec(sft, phi, n, needed, k, buf, lo, hi);
                buf.pop();
            }
        }
    }
    if buf.is_empty() {
        for a in 0..k {
            buf.push(a);
            rec(sft, phi, n, needed, k, &mut buf, &mut lo, &mut hi);
            buf.pop();
        }
    } else {
        rec(sft, phi, n, needed, k, &mut buf, &mut lo, &mut hi);
    }
    Ok((lo, hi))
}

/// `sup` of `S_n φ` over a cylinder.
pub fn sup_birkhoff(sft: &Sft, phi: &Potential, base: &[u8], n: usize) -> Result<f64> {
    Ok(birkhoff_extremes(sft, phi, base, n)?.1)
}

/// `inf` of `S_n φ` over a cylinder.
pub fn inf_birkhoff(sft: &Sft, phi: &Potential, base: &[u8], n: usize) -> Result<f64> {
    Ok(birkhoff_extremes(sft, phi, base, n)?.0)
}

/// `log Σ_i exp(−s n_i + sup S_{n_i} φ)`; `φ = None` means the zero potential.
pub fn cover_weight(sft: &Sft, cover: &[CoverItem], s: f64, phi: Option<&Potential>) -> Result<f64> {
    let mut acc = LogSum::new();
    for item in cover {
        let sup = match phi {
            Some(p) => sup_birkhoff(sft, p, item.cylinder.base(), item.n)?,
            None => 0.0,
        };
        acc.add(-s * item.n as f64 + sup);
    }
    Ok(acc.value())
}

/// The `s` with `cover_weight(s) = 0`, by bisection (all `n_i ≥ 1`).
pub fn critical_exponent(sft: &Sft, cover: &[CoverItem], phi: Option<&Potential>) -> Result<f64> {
    if cover.is_empty() {
        return Err(Error::InvalidArgument("empty cover".into()));
    }
    if cover.iter().any(|c| c.n == 0) {
        return Err(Error::InvalidArgument("cover items need n ≥ 1".into()));
    }
    let w = |s: f64| cover_weight(sft, cover, s, phi);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while w(lo)? < 0.0 {
        lo *= 2.0;
    }
    while w(hi)? > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if w(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallMode {
    /// Ordinary Bowen balls `B_n(x, β^{-t})`.
    Standard,
    /// Generalized balls along orbit centers `σ^i x`.
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrend {
    pub t: usize,
    /// `(n, critical s)` per grid point.
    pub values: Vec<(usize, f64)>,
    /// Intercept of the least-squares line of `s_n` against `1/n`.
    pub extrapolated: Option<f64>,
}

/// Critical exponent of minimal covers of the whole space, per `n`.
pub fn full_space_entropy(sft: &Sft, n_grid: &[usize], t: usize, mode: BallMode, cap: u64) -> Result<EntropyTrend> {
    let mut values = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        let s = match mode {
            BallMode::Standard => big_ln(&sft.count_words(n + t)) / n as f64,
            BallMode::Generalized => {
                let mut cover = Vec::new();
                let mut err = None;
                sft.for_each_word(n + t, cap, |w| {
                    let built = orbit_centers(w, n, t).and_then(|c| generalized_ball(sft, &c, t));
                    match built {
                        Ok(Some(cyl)) => cover.push(CoverItem { cylinder: cyl, n, t }),
                        Ok(None) => {}
                        Err(e) => {
                            err.get_or_insert(e);
                        }
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                cover.sort_by(|a, b| a.cylinder.base().cmp(b.cylinder.base()));
                cover.dedup();
                critical_exponent(sft, &cover, None)?
            }
        };
        values.push((n, s));
    }
    let xs: Vec<f64> = values.iter().map(|&(n, _)| 1.0 / n as f64).collect();
    let ys: Vec<f64> = values.iter().map(|&(_, s)| s).collect();
    let extrapolated = ls_fit(&xs, &ys).map(|(_, b)| b);
    Ok(EntropyTrend { t, values, extrapolated })
}

/// Decay classification of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesClass {
    Decaying,
    Growing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSeries {
    pub s_value: f64,
    pub eta: f64,
    pub t: usize,
    pub n_range: (usize, usize),
    /// `log term_n` for each `n` in range.
    pub log_terms: Vec<f64>,
    /// Running `log Σ_{n' ≤ n} term_{n'}`.
    pub log_partial_sums: Vec<f64>,
}

impl CoverSeries {
    pub fn ns(&self) -> Vec<usize> {
        (self.n_range.0..=self.n_range.1).collect()
    }

    /// Least-squares slope of `log term_n` over the tail half of the range;
    /// decaying iff it is negative.
    pub fn classify(&self) -> Result<SeriesClass> {
        let len = self.log_terms.len();
        let tail = len.div_ceil(2).max(3.min(len));
        if tail < 3 {
            return Err(Error::Unclassifiable(format!("{len} terms, at least 3 needed in the tail")));
        }
        let start = len - tail;
        let xs: Vec<f64> = (start..len).map(|i| (self.n_range.0 + i) as f64).collect();
        let ys = &self.log_terms[start..];
        let slope = ls_slope(&xs, ys).ok_or_else(|| Error::Unclassifiable("degenerate range".into()))?;
        Ok(if slope < -1e-12 { SeriesClass::Decaying } else { SeriesClass::Growing })
    }
}

/// Distribution of `S_n f` over admissible `(n + r − 1)`-words, grouped by the
/// last `max(r − 1, 1)` symbols: `(state, sum, count)` triples. Sums that agree
/// to `1e-9` are merged.
fn birkhoff_histogram(sft: &Sft, f: &Potential, n: usize) -> Result<Vec<(Vec<u8>, f64, f64)>> {
    let r = f.depth();
    let k = sft.alphabet_size() as u8;
    let key = |x: f64| (x * 1e9).round() as i64;
    let mut cur: BTreeMap<(Vec<u8>, i64), (f64, f64)> = BTreeMap::new();
    if r == 1 {
        for a in 0..k {
            let v = f.value(&[a]);
            cur.insert((vec![a], key(v)), (v, 1.0));
        }
    } else {
        for w in sft.words(r - 1, MAX_HISTOGRAM_STATES)? {
            cur.insert((w.into_inner(), 0), (0.0, 1.0));
        }
    }
    let steps = if r == 1 { n - 1 } else { n };
    let mut window = Vec::with_capacity(r);
    for _ in 0..steps {
        let mut next: BTreeMap<(Vec<u8>, i64), (f64, f64)> = BTreeMap::new();
        for ((state, _), (sum, count)) in &cur {
            let last = *state.last().expect("non-empty state");
            for b in 0..k {
                if !sft.allowed(last, b) {
                    continue;
                }
                window.clear();
                window.extend_from_slice(state);
                window.push(b);
                let (add, new_state) =
                    if r == 1 { (f.value(&[b]), vec![b]) } else { (f.value(&window), window[1..].to_vec()) };
                let s = sum + add;
                let e = next.entry((new_state, key(s))).or_insert((s, 0.0));
                e.1 += count;
            }
        }
        check_cap("histogram cells", next.len() as u128, MAX_HISTOGRAM_STATES)?;
        cur = next;
    }
    Ok(cur.into_iter().map(|((state, _), (sum, count))| (state, sum, count)).collect())
}

const MAX_HISTOGRAM_STATES: u64 = 1 << 22;

fn snapped_floor(x: f64) -> f64 {
    (x + 1e-9 * x.abs().max(1.0)).floor()
}

/// Terms `Σ_y exp(−s (n + t_n^y))` over admissible `(n+t)`-words `y`, with
/// `t_n^y = max(0, ⌊inf S_n f − nη⌋)`.
pub fn upper_cover_series(
    sft: &Sft,
    f: &Potential,
    s_val: f64,
    eta: f64,
    n_range: (usize, usize),
    t: usize,
    cap: u64,
) -> Result<CoverSeries> {
    let (n1, n2) = n_range;
    if n1 == 0 || n1 > n2 {
        return Err(Error::InvalidArgument(format!("bad n range {n1}..={n2}")));
    }
    let r = f.depth();
    let k = sft.alphabet_size();
    let mut log_terms = Vec::new();
    for n in n1..=n2 {
        let mut acc = LogSum::new();
        let mut err = None;
        let nf = n as f64;
        if t + 1 >= r {
            // S_n f is fixed by the first n + r − 1 symbols; count the remaining extensions
            let free = t + 1 - r;
            let ext: Vec<f64> = (0..k as u8).map(|a| big_ln(&sft.count_from(a, free + 1))).collect();
            for (state, sum, count) in birkhoff_histogram(sft, f, n)? {
                let tn = snapped_floor(sum - nf * eta).max(0.0);
                acc.add(-s_val * (nf + tn) + count.ln() + ext[*state.last().expect("non-empty state") as usize]);
            }
        } else {
            sft.for_each_word(n + t, cap, |w| match inf_birkhoff(sft, f, w, n) {
                Ok(s) => {
                    let tn = snapped_floor(s - nf * eta).max(0.0);
                    acc.add(-s_val * (nf + tn));
                }
                Err(e) => {
                    err.get_or_insert(e);
                }
            })?;
        }
        if let Some(e) = err {
            return Err(e);
        }
        log_terms.push(acc.value());
    }
    let mut running = LogSum::new();
    let log_partial_sums = log_terms
        .iter()
        .map(|&x| {
            running.add(x);
            running.value()
        })
        .collect();
    Ok(CoverSeries { s_value: s_val, eta, t, n_range, log_terms, log_partial_sums })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    /// Largest `s` classified growing.
    pub lo: f64,
    /// Smallest `s` classified decaying.
    pub hi: f64,
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Bisects `[s_lo, s_hi]` on the classification returned by `classify` until
/// the bracket is at most `tol` wide.
pub fn bracket_entropy<F>(mut classify: F, s_lo: f64, s_hi: f64, tol: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<SeriesClass>,
{
    if !(s_lo < s_hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("need s_lo < s_hi and tol > 0, got [{s_lo}, {s_hi}], {tol}")));
    }
    let mut evaluations = 2;
    if classify(s_lo)? != SeriesClass::Growing {
        return Err(Error::Unclassifiable(format!("series already decays at s = {s_lo}")));
    }
    if classify(s_hi)? != SeriesClass::Decaying {
        return Err(Error::Unclassifiable(format!("series still grows at s = {s_hi}")));
    }
    let (mut lo, mut hi) = (s_lo, s_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        evaluations += 1;
        match classify(mid)? {
            SeriesClass::Growing => lo = mid,
            SeriesClass::Decaying => hi = mid,
        }
    }
    Ok(Bracket { lo, hi, evaluations })
}

/// Brackets the critical `s` of the upper-bound cover series.
pub fn upper_bracket(
    sft: &Sft,
    f: &Potential,
    eta: f64,
    n_range: (usize, usize),
    t: usize,
    s_lo: f64,
    s_hi: f64,
    tol: f64,
    cap: u64,
) -> Result<Bracket> {
    bracket_entropy(|s| upper_cover_series(sft, f, s, eta, n_range, t, cap)?.classify(), s_lo, s_hi, tol)
}

/// `log #C_k / (l_k + R_k)` for the schedule's representative layout.
pub fn moran_entropy_estimate(sch: &MoranSchedule, k: usize) -> f64 {
    big_ln(&count_points(sch, k)) / sch.prefix_len(k) as f64
}

/// The same estimate from the raw per-level fields, `Σ N_i log #S_i / (l_k + R_k)`.
pub fn moran_entropy_from_fields(sch: &MoranSchedule, k: usize) -> f64 {
    let num: f64 = sch.levels[..k].iter().map(|lv| lv.big_n as f64 * (lv.size() as f64).ln()).sum();
    num / (sch.level(k).l + sch.level(k).r) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub samples: usize,
    /// `#distinct n-prefixes` per `n`.
    pub distinct: Vec<(usize, usize)>,
    /// The distinct count came within 10% of the sample count.
    pub saturated: bool,
}

/// Least-squares slope of `log #distinct n-prefixes` against `n`.
pub fn sample_cylinder_slope(samples: &[&[u8]], n_list: &[usize]) -> Result<SlopeEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut distinct = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut prefixes: Vec<&[u8]> = Vec::with_capacity(samples.len());
        for s in samples {
            if s.len() < n {
                return Err(Error::InsufficientLength { needed: n, available: s.len() });
            }
            prefixes.push(&s[..n]);
        }
        prefixes.sort_unstable();
        prefixes.dedup();
        distinct.push((n, prefixes.len()));
    }
    let xs: Vec<f64> = distinct.iter().map(|&(n, _)| n as f64).collect();
    let ys: Vec<f64> = distinct.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let slope = ls_slope(&xs, &ys).ok_or_else(|| Error::InvalidArgument("n list needs two distinct values".into()))?;
    let max = distinct.iter().map(|&(_, c)| c).max().unwrap_or(0);
    Ok(SlopeEstimate { slope, samples: samples.len(), distinct, saturated: max * 10 >= samples.len() * 9 })
}

/// Convenience wrapper over level points.
pub fn level_point_slope(points: &[LevelPoint], n_list: &[usize]) -> Result<SlopeEstimate> {
    let words: Vec<&[u8]> = points.iter().map(|p| p.prefix.symbols()).collect();
    sample_cylinder_slope(&words, n_list)
}

/// `dim_H = h / log β`.
pub fn hausdorff_dimension(h: f64, beta: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must exceed 1")));
    }
    Ok(h / beta.ln())
}

/// Cover of all `(n+t)`-cylinders at Bowen length `n`.
pub fn partition_cover(sft: &Sft, n: usize, t: usize, cap: u64) -> Result<Vec<CoverItem>> {
    Ok(sft.words(n + t, cap)?.into_iter().map(|w: Word| CoverItem { cylinder: Cylinder::new(w), n, t }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moran::{MoranConfig, PlanOptions};
    use crate::symbolic::Target;

    const CAP: u64 = 1 << 22;
    const LN2: f64 = std::f64::consts::LN_2;

    fn full2() -> Sft {
        Sft::full(2, 2.0).unwrap()
    }

    #[test]
    fn cover_weight_examples() {
        let s = full2();
        let item = CoverItem::new(Cylinder::new("0110".parse().unwrap()), 3, 1).unwrap();
        assert!((cover_weight(&s, &[item], 0.4, None).unwrap() + 1.2).abs() < 1e-15);
        let cover = partition_cover(&s, 5, 2, CAP).unwrap();
        assert!((cover_weight(&s, &cover, 0.3, None).unwrap() - (7.0 * LN2 - 1.5)).abs() < 1e-12);
        let crit = LN2 * 7.0 / 5.0;
        assert!(cover_weight(&s, &cover, crit, None).unwrap().abs() < 1e-12);
        assert!((critical_exponent(&s, &cover, None).unwrap() - crit).abs() < 1e-12);
        assert!(CoverItem::new(Cylinder::new("01".parse().unwrap()), 3, 1).is_err());
    }

    #[test]
    fn sup_uses_free_symbols() {
        let s = full2();
        let phi = Potential::from_fn(&s, 3, |w| w[2] as f64).unwrap();
        // the base fixes two symbols; S_2 φ reads positions 2 and 3
        assert_eq!(sup_birkhoff(&s, &phi, &[0, 0], 2).unwrap(), 2.0);
        assert_eq!(inf_birkhoff(&s, &phi, &[0, 0], 2).unwrap(), 0.0);
        assert_eq!(sup_birkhoff(&s, &phi, &[0, 0, 1, 0], 2).unwrap(), 1.0);
    }

    #[test]
    fn full_space_entropy_modes_agree() {
        for sft in [full2(), Sft::golden_mean(2.0)] {
            let grid: Vec<usize> = (4..=10).collect();
            let a = full_space_entropy(&sft, &grid, 2, BallMode::Standard, CAP).unwrap();
            let b = full_space_entropy(&sft, &grid, 2, BallMode::Generalized, CAP).unwrap();
            for ((_, x), (_, y)) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        let a = full_space_entropy(&full2(), &[4, 8], 2, BallMode::Standard, CAP).unwrap();
        assert!((a.values[0].1 - 1.5 * LN2).abs() < 1e-12);
        assert!((a.extrapolated.unwrap() - LN2).abs() < 1e-12);
    }

    #[test]
    fn upper_series_closed_form() {
        let s = full2();
        let f = Potential::constant(&s, 1.0);
        let (eta, t, sv) = (0.3, 2, 0.4);
        let series = upper_cover_series(&s, &f, sv, eta, (1, 12), t, CAP).unwrap();
        for (i, n) in series.ns().into_iter().enumerate() {
            let tn = (n as f64 * 0.7).floor();
            let expected = (n + t) as f64 * LN2 - sv * (n as f64 + tn);
            assert!((series.log_terms[i] - expected).abs() < 1e-12, "n = {n}");
        }
        let zero = upper_cover_series(&s, &f, 0.0, eta, (1, 6), t, CAP).unwrap();
        assert!((zero.log_terms[5] - 8.0 * LN2).abs() < 1e-12);
        assert_eq!(zero.classify().unwrap(), SeriesClass::Growing);
        let high = upper_cover_series(&s, &f, 0.5, eta, (1, 12), t, CAP).unwrap();
        assert_eq!(high.classify().unwrap(), SeriesClass::Decaying);
    }

    #[test]
    fn bracket_contains_root() {
        let s = full2();
        let f = Potential::constant(&s, 1.0);
        let b = upper_bracket(&s, &f, 0.01, (1, 20), 3, 0.0, LN2, 0.05, CAP).unwrap();
        assert!(b.width() <= 0.05 && b.contains(LN2 / 2.0), "{b:?}");
        let zero = Potential::zero(&s);
        let b = upper_bracket(&s, &zero, 0.01, (1, 20), 3, 0.1, 1.0, 0.01, CAP).unwrap();
        assert!(b.contains(LN2), "{b:?}");
        let short = upper_cover_series(&s, &f, 0.2, 0.01, (1, 2), 3, CAP).unwrap();
        assert!(matches!(short.classify(), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn moran_estimates() {
        let s = full2();
        let f = Potential::constant(&s, 1.0);
        let v = Target::new(Word::empty(), "0".parse().unwrap(), &s).unwrap();
        let cfg = MoranConfig::with_equilibrium(s, f, v, 0.5, 1).unwrap();
        let sch = MoranSchedule::manual(&cfg, &[(2, 21), (2, 378)], CAP).unwrap();
        assert!((moran_entropy_estimate(&sch, 1) - LN2 / 2.0).abs() < 1e-15);
        assert_eq!(sch.prefix_len(2), 1680);
        assert!((moran_entropy_estimate(&sch, 2) - 798.0 / 1680.0 * LN2).abs() < 1e-12);
        for k in 1..=2 {
            assert!((moran_entropy_estimate(&sch, k) - moran_entropy_from_fields(&sch, k)).abs() < 1e-12);
        }
        let auto = MoranSchedule::plan(&cfg, &PlanOptions { levels: 2, ..Default::default() }).unwrap();
        assert!(moran_entropy_estimate(&auto, 2) <= LN2 / 2.0);
    }

    #[test]
    fn slope_examples() {
        let same: Vec<&[u8]> = vec![&[0, 1, 1, 0]; 5];
        assert_eq!(sample_cylinder_slope(&same, &[1, 2, 3]).unwrap().slope, 0.0);
        let all: Vec<Vec<u8>> = (0..16u8).map(|x| (0..4).map(|i| (x >> (3 - i)) & 1).collect()).collect();
        let refs: Vec<&[u8]> = all.iter().map(|v| v.as_slice()).collect();
        let est = sample_cylinder_slope(&refs, &[1, 2, 3, 4]).unwrap();
        assert!((est.slope - LN2).abs() < 1e-12);
        assert!(est.saturated);
        assert!(sample_cylinder_slope(&refs, &[2, 2]).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        assert!((hausdorff_dimension(LN2, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((hausdorff_dimension(LN2 / 2.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(hausdorff_dimension(0.0, 3.0).unwrap(), 0.0);
        assert!(hausdorff_dimension(1.0, 1.0).is_err());
    }
}
