//! Plain-text input formats and atomic output.
//!
//! * shift file: `k beta`, then `k` rows of `k` entries in {0, 1};
//! * target file: preperiod line (`-` or blank for none), then period line;
//! * potential file: depth `r`, then one `word value` line per admissible `r`-word;
//! * config file: `key = value` lines, `#` starts a comment.
//!
//! Words are written as digit strings (`0110`) or comma-separated symbols.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::symbolic::{Sft, Target, Word};
use crate::thermo::Potential;

/// Lines with comments and surrounding blanks removed; line numbers are 1-based.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse(format!("line {line}: cannot read {what} from '{tok}'")))
}

pub fn parse_sft(text: &str) -> Result<Sft> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty shift file".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::Parse(format!("line {ln}: expected 'k beta'")));
    }
    let k: usize = parse_num(toks[0], "alphabet size", ln)?;
    let beta: f64 = parse_num(toks[1], "beta", ln)?;
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, line) = lines.next().ok_or_else(|| Error::Parse(format!("expected {k} adjacency rows")))?;
        let row: Vec<u8> = line.split_whitespace().map(|t| parse_num(t, "adjacency entry", ln)).collect::<Result<_>>()?;
        if row.len() != k {
            return Err(Error::Parse(format!("line {ln}: expected {k} entries, found {}", row.len())));
        }
        rows.push(row);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse(format!("line {ln}: unexpected content after the adjacency matrix")));
    }
    Sft::new(rows, beta)
}

pub fn parse_target(text: &str, sft: &Sft) -> Result<Target> {
    // blank lines are meaningful here (an empty preperiod), so comments are stripped per line
    let lines: Vec<&str> = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).collect();
    let meaningful: Vec<&str> = {
        let mut v = lines.clone();
        while v.last().is_some_and(|l| l.is_empty()) {
            v.pop();
        }
        v
    };
    let (pre, period) = match meaningful.len() {
        2 => (meaningful[0], meaningful[1]),
        _ => return Err(Error::Parse("target file needs a preperiod line and a period line".into())),
    };
    let pre: Word = pre.parse()?;
    let period: Word = period.parse()?;
    pre.check_alphabet(sft.alphabet_size())?;
    period.check_alphabet(sft.alphabet_size())?;
    Target::new(pre, period, sft)
}

pub fn parse_potential(text: &str, sft: &Sft) -> Result<Potential> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty potential file".into()))?;
    let depth: usize = parse_num(header, "depth", ln)?;
    let mut entries = Vec::new();
    for (ln, line) in lines {
        let (word, value) = line
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse(format!("line {ln}: expected 'word value'")))?;
        let w: Word = word.trim().parse()?;
        w.check_alphabet(sft.alphabet_size())?;
        entries.push((w, parse_num::<f64>(value, "value", ln)?));
    }
    Potential::from_entries(sft, depth, &entries)
}

/// Serializes a potential in the format read by [`parse_potential`].
pub fn format_potential(f: &Potential) -> String {
    let mut out = format!("{}\n", f.depth());
    for (w, v) in f.entries() {
        out.push_str(&format!("{w} {v}\n"));
    }
    out
}

/// Serializes a shift in the format read by [`parse_sft`].
pub fn format_sft(sft: &Sft) -> String {
    let mut out = format!("{} {}\n", sft.alphabet_size(), sft.beta());
    for row in sft.adjacency_rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

/// A parsed `key = value` file remembering its directory for relative paths.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValues {
    pub entries: BTreeMap<String, String>,
    pub base_dir: PathBuf,
}

impl KeyValues {
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (ln, line) in content_lines(text) {
            let (key, value) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {ln}: expected 'key = value'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse(format!("line {ln}: empty key")));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {ln}: duplicate key '{key}'")));
            }
        }
        Ok(KeyValues { entries, base_dir })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        KeyValues::parse(&text, dir)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Parse(format!("config key '{key}': cannot read '{v}'"))),
        }
    }

    pub fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("config key '{key}': cannot read '{x}'"))))
                .collect(),
        }
    }

    /// A path value resolved against the config's directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| self.base_dir.join(v))
    }

    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Parse(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
