//! Markov sources, cylinder counts and generalized Rényi entropies.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// A finite word over `{0, .., alphabet - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolSequence {
    symbols: Vec<u8>,
    alphabet: usize,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<u8>, alphabet: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 256 {
            return Err(Error::AlphabetMismatch(format!(
                "alphabet size {alphabet} not in 1..=256"
            )));
        }
        if let Some(&s) = symbols.iter().find(|&&s| usize::from(s) >= alphabet) {
            return Err(Error::SymbolOutOfRange { symbol: s, alphabet });
        }
        Ok(SymbolSequence { symbols, alphabet })
    }

    /// Parses a string of decimal digits, e.g. `"0110"`.
    pub fn from_digits(digits: &str, alphabet: usize) -> Result<Self> {
        let symbols = digits
            .bytes()
            .map(|b| {
                if b.is_ascii_digit() {
                    Ok(b - b'0')
                } else {
                    Err(Error::AlphabetMismatch(format!("not a digit: {:?}", b as char)))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(symbols, alphabet)
    }

    /// Reads one symbol per byte.
    pub fn read(path: impl AsRef<Path>, alphabet: usize) -> Result<Self> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::new(bytes, alphabet)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.symbols
    }
}

/// Finite-state Markov chain with its stationary law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct MarkovModel {
    rows: Vec<Vec<f64>>,
    stationary: Option<Vec<f64>>,
    period: Option<usize>,
}

impl TryFrom<Vec<Vec<f64>>> for MarkovModel {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        MarkovModel::new(rows)
    }
}

impl From<MarkovModel> for Vec<Vec<f64>> {
    fn from(m: MarkovModel) -> Self {
        m.rows
    }
}

impl MarkovModel {
    /// Accepts any stochastic matrix; irreducibility and the period are
    /// recorded and checked by the operations that need them.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let a = rows.len();
        if !(2..=256).contains(&a) {
            return Err(Error::InvalidMatrix(format!("alphabet size {a} not in 2..=256")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != a {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {a}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidMatrix(format!(
                    "entry {p} in row {i} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {sum}")));
            }
        }
        let period = if strongly_connected(&rows) {
            Some(period(&rows))
        } else {
            None
        };
        let stationary = match period {
            Some(_) => Some(solve_stationary(&rows)?),
            None => None,
        };
        Ok(MarkovModel {
            rows,
            stationary,
            period,
        })
    }

    /// I.i.d. source: every row equals `p`.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        Self::new(vec![p.to_vec(); p.len()])
    }

    /// Uniform i.i.d. source on `a` symbols.
    pub fn uniform(a: usize) -> Result<Self> {
        Self::bernoulli(&vec![1.0 / a as f64; a])
    }

    pub fn alphabet(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_irreducible(&self) -> bool {
        self.period.is_some()
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == Some(1)
    }

    pub fn stationary(&self) -> Result<&[f64]> {
        self.stationary.as_deref().ok_or(Error::NotIrreducible)
    }

    /// Errors unless the chain is irreducible and aperiodic.
    pub fn require_ergodic(&self) -> Result<()> {
        match self.period {
            None => Err(Error::NotIrreducible),
            Some(1) => Ok(()),
            Some(period) => Err(Error::NotAperiodic { period }),
        }
    }

    /// Entrywise power `P_ij^k`.
    pub fn entrywise_power(&self, k: usize) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|p| p.powi(k as i32)).collect())
            .collect()
    }
}

fn adjacency(rows: &[Vec<f64>]) -> Vec<Vec<usize>> {
    rows.iter()
        .map(|row| (0..row.len()).filter(|&j| row[j] > 0.0).collect())
        .collect()
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].map(|l| l + 1);
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = next;
                queue.push_back(v);
            }
        }
    }
    level
}

fn strongly_connected(rows: &[Vec<f64>]) -> bool {
    let adj = adjacency(rows);
    let mut rev = vec![Vec::new(); adj.len()];
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            rev[v].push(u);
        }
    }
    bfs_levels(&adj, 0).iter().all(Option::is_some) && bfs_levels(&rev, 0).iter().all(Option::is_some)
}

/// Period of an irreducible chain: gcd of `level(u) + 1 - level(v)` over edges.
fn period(rows: &[Vec<f64>]) -> usize {
    let adj = adjacency(rows);
    let level = bfs_levels(&adj, 0);
    let mut g = 0usize;
    for (u, out) in adj.iter().enumerate() {
        for &v in out {
            let (lu, lv) = (level[u].unwrap(), level[v].unwrap());
            g = gcd(g, (lu + 1).abs_diff(lv));
        }
    }
    g
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `π P = π`, `Σ π = 1` for a stochastic matrix.
pub fn stationary_distribution(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    MarkovModel::new(rows.to_vec())?.stationary().map(<[f64]>::to_vec)
}

fn solve_stationary(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let a = rows.len();
    if a <= 8 {
        // (P^T - I) π = 0 with the last equation replaced by Σ π = 1.
        let mut m: Vec<Vec<f64>> = (0..a)
            .map(|i| {
                let mut eq: Vec<f64> = (0..a)
                    .map(|j| rows[j][i] - if i == j { 1.0 } else { 0.0 })
                    .collect();
                eq.push(0.0);
                eq
            })
            .collect();
        m[a - 1] = vec![1.0; a + 1];
        for col in 0..a {
            let pivot = (col..a)
                .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
                .unwrap();
            if m[pivot][col].abs() < 1e-300 {
                return Err(Error::NotIrreducible);
            }
            m.swap(col, pivot);
            for r in 0..a {
                if r != col {
                    let f = m[r][col] / m[col][col];
                    if f != 0.0 {
                        let pivot_row = m[col].clone();
                        for (x, p) in m[r][col..].iter_mut().zip(&pivot_row[col..]) {
                            *x -= f * p;
                        }
                    }
                }
            }
        }
        let pi: Vec<f64> = (0..a).map(|i| (m[i][a] / m[i][i]).max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        return Ok(pi.into_iter().map(|p| p / s).collect());
    }
    // Lazy chain (P + I)/2 has the same π and is aperiodic.
    let mut pi = vec![1.0 / a as f64; a];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; a];
        for (i, row) in rows.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                next[j] += pi[i] * p;
            }
        }
        for (n, p) in next.iter_mut().zip(&pi) {
            *n = 0.5 * (*n + p);
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let diff = next
            .iter()
            .zip(&pi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        pi = next;
        if diff < 1e-15 {
            return Ok(pi);
        }
    }
    Err(Error::NotIrreducible)
}

/// Stationary trajectory: `x_0 ~ π`, `x_{t+1} ~ P[x_t, .]`.
pub fn sample_markov<R: Rng + ?Sized>(model: &MarkovModel, n: usize, rng: &mut R) -> Result<SymbolSequence> {
    model.require_ergodic()?;
    let cumulative = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    };
    let start = cumulative(model.stationary()?);
    let rows: Vec<Vec<f64>> = model.rows.iter().map(|r| cumulative(r)).collect();
    let draw = |cum: &[f64], u: f64| -> u8 {
        // Guard against the last partial sum landing just below 1.
        cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1) as u8
    };
    let mut symbols = Vec::with_capacity(n);
    if n > 0 {
        let mut s = draw(&start, rng.gen());
        symbols.push(s);
        for _ in 1..n {
            s = draw(&rows[usize::from(s)], rng.gen());
            symbols.push(s);
        }
    }
    SymbolSequence::new(symbols, model.alphabet())
}

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 100_000;

/// Dominant eigenvalue of a non-negative square matrix by power iteration,
/// stopped when the Collatz–Wielandt bounds agree to relative `1e-12`.
/// A periodic matrix is retried with the shift `M + I`.
pub fn perron_eigenvalue(m: &[Vec<f64>]) -> Result<f64> {
    let a = m.len();
    if a == 0 || m.iter().any(|row| row.len() != a) {
        return Err(Error::InvalidMatrix("matrix must be square and non-empty".into()));
    }
    if m.iter().flatten().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidMatrix(
            "entries must be finite and non-negative".into(),
        ));
    }
    match power_iteration(m, 0.0) {
        Ok(l) => Ok(l),
        Err(_) => power_iteration(m, 1.0).map(|l| l - 1.0),
    }
}

fn power_iteration(m: &[Vec<f64>], shift: f64) -> Result<f64> {
    let a = m.len();
    let mut v = vec![1.0; a];
    let mut w = vec![0.0; a];
    for _ in 0..PERRON_MAX_ITER {
        for (i, row) in m.iter().enumerate() {
            w[i] = shift * v[i] + row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (wi, vi) in w.iter().zip(&v) {
            let ratio = wi / vi;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if hi == 0.0 {
            return Ok(0.0);
        }
        if hi - lo <= PERRON_TOL * hi {
            return Ok(0.5 * (lo + hi));
        }
        let norm = w.iter().fold(0.0f64, |acc, x| acc.max(*x));
        for (vi, wi) in v.iter_mut().zip(&w) {
            // Keep v strictly positive so the ratios stay defined.
            *vi = (wi / norm).max(f64::MIN_POSITIVE);
        }
    }
    Err(Error::NoConvergence {
        iterations: PERRON_MAX_ITER,
    })
}

/// `H_k = -log λ_k / (k - 1)` with `λ_k` the Perron root of `(P_ij^k)`.
pub fn renyi_entropy_markov(model: &MarkovModel, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    let lambda = perron_eigenvalue(&model.entrywise_power(k))?;
    Ok(-lambda.ln() / (k - 1) as f64)
}

/// `-log(Σ p_i^k) / (k - 1)`.
pub fn bernoulli_renyi(p: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("{p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    let s: f64 = p.iter().map(|x| x.powi(k as i32)).sum();
    Ok(-s.ln() / (k - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Keys {
    /// `len * bits <= 64`: words packed big-endian into a u64.
    Packed {
        bits: u32,
        entries: Vec<(u64, u64)>,
    },
    Bytes(Vec<(Vec<u8>, u64)>),
}

/// Counts of length-`len` words, sorted by word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderTable {
    len: usize,
    alphabet: usize,
    keys: Keys,
    total: u64,
}

fn bits_for(alphabet: usize) -> u32 {
    (usize::BITS - (alphabet.max(2) - 1).leading_zeros()).max(1)
}

impl CylinderTable {
    /// Builds a table from explicit word counts (duplicates are summed).
    pub fn from_counts<I>(len: usize, alphabet: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, u64)>,
    {
        let mut merged: FxHashMap<Vec<u8>, u64> = FxHashMap::default();
        for (word, c) in counts {
            if word.len() != len {
                return Err(Error::InvalidDistribution(format!(
                    "word of length {} in a length-{len} table",
                    word.len()
                )));
            }
            if let Some(&s) = word.iter().find(|&&s| usize::from(s) >= alphabet) {
                return Err(Error::SymbolOutOfRange { symbol: s, alphabet });
            }
            *merged.entry(word).or_default() += c;
        }
        merged.retain(|_, c| *c > 0);
        let bits = bits_for(alphabet);
        let keys = if len as u32 * bits <= 64 {
            let mut entries: Vec<(u64, u64)> = merged.into_iter().map(|(w, c)| (pack(&w, bits), c)).collect();
            entries.sort_unstable();
            Keys::Packed { bits, entries }
        } else {
            let mut entries: Vec<(Vec<u8>, u64)> = merged.into_iter().collect();
            entries.sort_unstable();
            Keys::Bytes(entries)
        };
        let total = match &keys {
            Keys::Packed { entries, .. } => entries.iter().map(|e| e.1).sum(),
            Keys::Bytes(entries) => entries.iter().map(|e| e.1).sum(),
        };
        Ok(CylinderTable {
            len,
            alphabet,
            keys,
            total,
        })
    }

    pub fn cylinder_len(&self) -> usize {
        self.len
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct words.
    pub fn distinct(&self) -> usize {
        match &self.keys {
            Keys::Packed { entries, .. } => entries.len(),
            Keys::Bytes(entries) => entries.len(),
        }
    }

    pub fn get(&self, word: &[u8]) -> u64 {
        if word.len() != self.len {
            return 0;
        }
        match &self.keys {
            Keys::Packed { bits, entries } => {
                if word.iter().any(|&s| usize::from(s) >= self.alphabet) {
                    return 0;
                }
                let key = pack(word, *bits);
                entries
                    .binary_search_by_key(&key, |e| e.0)
                    .map_or(0, |i| entries[i].1)
            }
            Keys::Bytes(entries) => entries
                .binary_search_by(|e| e.0.as_slice().cmp(word))
                .map_or(0, |i| entries[i].1),
        }
    }

    /// Counts in word order.
    pub fn counts(&self) -> Vec<u64> {
        match &self.keys {
            Keys::Packed { entries, .. } => entries.iter().map(|e| e.1).collect(),
            Keys::Bytes(entries) => entries.iter().map(|e| e.1).collect(),
        }
    }

    /// `(word, count)` pairs in word order.
    pub fn entries(&self) -> Vec<(Vec<u8>, u64)> {
        match &self.keys {
            Keys::Packed { bits, entries } => entries
                .iter()
                .map(|&(key, c)| (unpack(key, *bits, self.len), c))
                .collect(),
            Keys::Bytes(entries) => entries.clone(),
        }
    }
}

fn pack(word: &[u8], bits: u32) -> u64 {
    word.iter().fold(0u64, |acc, &s| (acc << bits) | u64::from(s))
}

fn unpack(key: u64, bits: u32, len: usize) -> Vec<u8> {
    let mask = (1u64 << bits) - 1;
    (0..len)
        .rev()
        .map(|i| ((key >> (i as u32 * bits)) & mask) as u8)
        .collect()
}

const CHUNK: usize = 1 << 16;

/// Overlapping-window counts of all length-`len` factors.
pub fn cylinder_counts(seq: &SymbolSequence, len: usize) -> Result<CylinderTable> {
    if len == 0 || len > seq.len() {
        return Err(Error::CylinderTooLong {
            len,
            seq_len: seq.len(),
        });
    }
    let s = seq.symbols();
    let windows = s.len() - len + 1;
    let bits = bits_for(seq.alphabet());
    if len as u32 * bits > 64 {
        return CylinderTable::from_counts(len, seq.alphabet(), s.windows(len).map(|w| (w.to_vec(), 1)));
    }
    let mask = if len as u32 * bits == 64 {
        u64::MAX
    } else {
        (1u64 << (len as u32 * bits)) - 1
    };
    let starts: Vec<usize> = (0..windows).step_by(CHUNK).collect();
    let merged = starts
        .into_par_iter()
        .map(|from| {
            let to = (from + CHUNK).min(windows);
            let mut counts: FxHashMap<u64, u64> = FxHashMap::default();
            let mut key = pack(&s[from..from + len - 1], bits);
            for i in from..to {
                key = ((key << bits) | u64::from(s[i + len - 1])) & mask;
                *counts.entry(key).or_default() += 1;
            }
            counts
        })
        .reduce(FxHashMap::default, |mut a, b| {
            for (key, c) in b {
                *a.entry(key).or_default() += c;
            }
            a
        });
    let mut entries: Vec<(u64, u64)> = merged.into_iter().collect();
    entries.sort_unstable();
    Ok(CylinderTable {
        len,
        alphabet: seq.alphabet(),
        keys: Keys::Packed { bits, entries },
        total: windows as u64,
    })
}

/// `-log(Σ_C (count_C / total)^k) / ((k - 1) len)`.
pub fn empirical_renyi(table: &CylinderTable, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    if table.total == 0 {
        return Err(Error::EmptyTable);
    }
    let total = table.total as f64;
    let s: f64 = table
        .counts()
        .iter()
        .map(|&c| (c as f64 / total).powi(k as i32))
        .sum();
    Ok(-s.ln() / ((k - 1) * table.len) as f64)
}
