//! Longest common substring `M_n` of `k` sequences, encoders, and the
//! stochastic scrabble score `V_n`.
//!
//! `M_n` is the largest `m` such that one word of length `m` starts at a
//! position `<= n - m` in every sequence. The fast path binary-searches `m`
//! with polynomial fingerprints modulo 2^61 - 1; every reported length comes with a
//! character-verified witness, and a fingerprint collision inside one
//! sequence triggers an exact slice-keyed recount.

use std::hash::Hash;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{gcd, perron_eigenvalue, MarkovModel, SymbolSequence};

fn check_inputs(seqs: &[SymbolSequence], n: usize) -> Result<()> {
    if seqs.len() < 2 {
        return Err(Error::KTooSmall(seqs.len()));
    }
    for s in seqs {
        if n > s.len() {
            return Err(Error::NTooLarge { n, len: s.len() });
        }
    }
    Ok(())
}

/// `M_n` by enumerating start tuples whose first symbols agree.
pub fn lcs_k_bruteforce(seqs: &[SymbolSequence], n: usize) -> Result<usize> {
    check_inputs(seqs, n)?;
    let slices: Vec<&[u8]> = seqs.iter().map(|s| &s.symbols()[..n]).collect();
    let mut starts = vec![0usize; slices.len()];
    let mut best = 0;
    for i in 0..n {
        starts[0] = i;
        brute_extend(&slices, n, 1, &mut starts, &mut best);
    }
    Ok(best)
}

fn brute_extend(slices: &[&[u8]], n: usize, level: usize, starts: &mut [usize], best: &mut usize) {
    if level == slices.len() {
        let far = *starts.iter().max().unwrap();
        let mut m = 0;
        // A word of length m needs every start <= n - m.
        while far + m < n
            && starts
                .iter()
                .zip(slices)
                .all(|(&i, s)| s[i + m] == slices[0][starts[0] + m])
        {
            m += 1;
        }
        *best = (*best).max(m);
        return;
    }
    let first = slices[0][starts[0]];
    for i in 0..n {
        if slices[level][i] == first {
            starts[level] = i;
            brute_extend(slices, n, level + 1, starts, best);
        }
    }
}

/// A verified common word: `word` occurs at `starts[l]` in sequence `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcsWitness {
    pub len: usize,
    pub word: Vec<u8>,
    pub starts: Vec<usize>,
}

impl LcsWitness {
    /// Re-checks the witness against the sequences and the window `n`.
    pub fn verify(&self, seqs: &[SymbolSequence], n: usize) -> bool {
        self.word.len() == self.len
            && self.starts.len() == seqs.len()
            && self.starts.iter().zip(seqs).all(|(&i, s)| {
                i + self.len <= n && s.symbols().get(i..i + self.len) == Some(self.word.as_slice())
            })
    }
}

const M61: u64 = (1 << 61) - 1;
const B1: u64 = 0x0000_1f35_7a4b_9c3d;

fn mul61(a: u64, b: u64) -> u64 {
    let p = u128::from(a) * u128::from(b);
    let s = (p as u64 & M61) + (p >> 61) as u64;
    if s >= M61 {
        s - M61
    } else {
        s
    }
}

/// Prefix fingerprints of one sequence modulo 2^61 - 1. Keys only filter
/// candidates; every reported match is compared symbol by symbol.
struct Fingerprints {
    h: Vec<u64>,
}

impl Fingerprints {
    fn new(s: &[u8]) -> Self {
        let mut h = Vec::with_capacity(s.len() + 1);
        let mut a = 0u64;
        h.push(0);
        for &c in s {
            a = mul61(a, B1) + u64::from(c) + 1;
            if a >= M61 {
                a -= M61;
            }
            h.push(a);
        }
        Fingerprints { h }
    }
}

/// `B^m` modulo 2^61 - 1.
fn power(m: usize) -> u64 {
    let (mut p, mut b, mut e) = (1u64, B1, m);
    while e > 0 {
        if e & 1 == 1 {
            p = mul61(p, b);
        }
        b = mul61(b, b);
        e >>= 1;
    }
    p
}

fn window_key(fp: &Fingerprints, pw: u64, i: usize, m: usize) -> u64 {
    let a = fp.h[i + m] + M61 - mul61(fp.h[i], pw);
    if a >= M61 {
        a - M61
    } else {
        a
    }
}

enum Probe {
    /// Verified start tuples (first occurrence in each sequence).
    Found(Vec<Vec<usize>>),
    /// Two different windows of one sequence shared a key.
    Collision,
}

/// Common words of length `m`, with starts in sequence `l` ranging over
/// `0..=limits[l]`. Each sequence maps key -> first start; only keys already
/// present in every earlier sequence are kept.
fn common_words<K: Hash + Eq + Copy>(
    slices: &[&[u8]],
    limits: &[usize],
    m: usize,
    key: impl Fn(usize, usize) -> K,
    first_only: bool,
) -> Probe {
    let mut maps: Vec<FxHashMap<K, usize>> = Vec::with_capacity(slices.len());
    for (l, s) in slices.iter().enumerate() {
        let mut map: FxHashMap<K, usize> = FxHashMap::default();
        if l == 0 {
            map.reserve(limits[0] + 1);
        }
        for i in 0..=limits[l] {
            let kk = key(l, i);
            if l > 0 && !maps[l - 1].contains_key(&kk) {
                continue;
            }
            if first_only && l + 1 == slices.len() && l > 0 {
                let starts: Vec<usize> = maps.iter().map(|mp| mp[&kk]).chain([i]).collect();
                let w = &s[i..i + m];
                if starts.iter().zip(slices).all(|(&j, t)| &t[j..j + m] == w) {
                    return Probe::Found(vec![starts]);
                }
            }
            match map.get(&kk) {
                None => {
                    map.insert(kk, i);
                }
                Some(&j) => {
                    if s[j..j + m] != s[i..i + m] {
                        return Probe::Collision;
                    }
                }
            }
        }
        if map.is_empty() {
            return Probe::Found(Vec::new());
        }
        maps.push(map);
    }
    let last = maps.last().unwrap();
    let mut found = Vec::new();
    // Sorted by the first sequence's start so the result is independent of
    // the map's iteration order.
    let mut keys: Vec<(usize, K)> = last.keys().map(|kk| (maps[0][kk], *kk)).collect();
    keys.sort_unstable_by_key(|e| e.0);
    for (_, kk) in keys {
        let starts: Vec<usize> = maps.iter().map(|mp| mp[&kk]).collect();
        let w = &slices[0][starts[0]..starts[0] + m];
        // Keys can collide across sequences; those candidates are skipped.
        if starts.iter().zip(slices).all(|(&i, s)| &s[i..i + m] == w) {
            found.push(starts);
            if first_only {
                break;
            }
        }
    }
    Probe::Found(found)
}

/// Fingerprinted probe with the exact fallback.
struct Matcher<'a> {
    slices: Vec<&'a [u8]>,
    prints: Vec<Fingerprints>,
}

impl<'a> Matcher<'a> {
    fn new(slices: Vec<&'a [u8]>) -> Self {
        let prints = slices.iter().map(|s| Fingerprints::new(s)).collect();
        Matcher { slices, prints }
    }

    fn words(&self, m: usize, limits: &[usize], first_only: bool) -> Vec<Vec<usize>> {
        if m == 0 {
            return vec![vec![0; self.slices.len()]];
        }
        let pw = power(m);
        let hashed = common_words(
            &self.slices,
            limits,
            m,
            |l, i| window_key(&self.prints[l], pw, i, m),
            first_only,
        );
        match hashed {
            Probe::Found(f) => f,
            Probe::Collision => {
                let slices = &self.slices;
                match common_words(slices, limits, m, |l, i| &slices[l][i..i + m], first_only) {
                    Probe::Found(f) => f,
                    Probe::Collision => unreachable!("slice keys cannot collide"),
                }
            }
        }
    }

    /// Start limits for words of length `m` inside the first `n` symbols.
    fn feasible(&self, n: usize, m: usize) -> bool {
        m <= n && !self.words(m, &vec![n - m; self.slices.len()], true).is_empty()
    }
}

/// `M_n`, exactly equal to [`lcs_k_bruteforce`].
pub fn lcs_k_fast(seqs: &[SymbolSequence], n: usize) -> Result<usize> {
    lcs_k_fast_witness(seqs, n).map(|w| w.len)
}

/// `M_n` with its lexicographically smallest witness word.
pub fn lcs_k_fast_witness(seqs: &[SymbolSequence], n: usize) -> Result<LcsWitness> {
    lcs_k_fast_from(seqs, n, 0)
}

/// As [`lcs_k_fast_witness`], given a known lower bound on `M_n` (for
/// example `M_{n'}` for some `n' <= n`). The search gallops up from it.
pub fn lcs_k_fast_from(seqs: &[SymbolSequence], n: usize, lower: usize) -> Result<LcsWitness> {
    check_inputs(seqs, n)?;
    let matcher = Matcher::new(seqs.iter().map(|s| &s.symbols()[..n]).collect());
    let mut lo = lower.min(n);
    if !matcher.feasible(n, lo) {
        lo = 0;
    }
    // Invariant: lo feasible, hi infeasible (n + 1 always is).
    let mut step = 1;
    let mut hi = loop {
        let probe = lo + step;
        if probe > n {
            break n + 1;
        }
        if matcher.feasible(n, probe) {
            lo = probe;
            step *= 2;
        } else {
            break probe;
        }
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if matcher.feasible(n, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let words = matcher.words(lo, &vec![n - lo; seqs.len()], false);
    let starts = words
        .into_iter()
        .min_by(|a, b| matcher.slices[0][a[0]..a[0] + lo].cmp(&matcher.slices[0][b[0]..b[0] + lo]))
        .expect("feasible length has a witness");
    let witness = LcsWitness {
        len: lo,
        word: matcher.slices[0][starts[0]..starts[0] + lo].to_vec(),
        starts,
    };
    debug_assert!(witness.verify(seqs, n));
    Ok(witness)
}

/// A map between sequence spaces, applied letter by letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EncoderSpec {
    Identity,
    /// Letter `a` becomes `a` repeated `weights[a]` times.
    LetterRepetition {
        weights: Vec<u32>,
    },
    /// Letter `a` becomes `words[a]`, a word over `output_alphabet` symbols.
    BlockSubstitution {
        words: Vec<Vec<u8>>,
        output_alphabet: usize,
    },
}

impl EncoderSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EncoderSpec::Identity => Ok(()),
            EncoderSpec::LetterRepetition { weights } => validate_weights(weights),
            EncoderSpec::BlockSubstitution {
                words,
                output_alphabet,
            } => {
                if words.is_empty() || words.iter().any(Vec::is_empty) {
                    return Err(Error::InvalidWeights(
                        "substitution words must be non-empty".into(),
                    ));
                }
                if !(1..=256).contains(output_alphabet) {
                    return Err(Error::InvalidWeights(format!(
                        "output alphabet {output_alphabet} not in 1..=256"
                    )));
                }
                match words
                    .iter()
                    .flatten()
                    .find(|&&s| usize::from(s) >= *output_alphabet)
                {
                    Some(&symbol) => Err(Error::SymbolOutOfRange {
                        symbol,
                        alphabet: *output_alphabet,
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncoderSpec::Identity => "identity",
            EncoderSpec::LetterRepetition { .. } => "letter-repetition",
            EncoderSpec::BlockSubstitution { .. } => "block-substitution",
        }
    }

    /// Required input alphabet, if fixed.
    pub fn input_alphabet(&self) -> Option<usize> {
        match self {
            EncoderSpec::Identity => None,
            EncoderSpec::LetterRepetition { weights } => Some(weights.len()),
            EncoderSpec::BlockSubstitution { words, .. } => Some(words.len()),
        }
    }

    /// Longest image of a single letter; bounds the growth `h(n) <= n * max_len`.
    pub fn max_image_len(&self) -> usize {
        match self {
            EncoderSpec::Identity => 1,
            EncoderSpec::LetterRepetition { weights } => weights.iter().copied().max().unwrap_or(1) as usize,
            EncoderSpec::BlockSubstitution { words, .. } => words.iter().map(Vec::len).max().unwrap_or(1),
        }
    }
}

fn validate_weights(weights: &[u32]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    if weights.contains(&0) {
        return Err(Error::InvalidWeights("weights must be >= 1".into()));
    }
    Ok(())
}

/// Encodes `seq` letter by letter.
pub fn apply_encoder(enc: &EncoderSpec, seq: &SymbolSequence) -> Result<SymbolSequence> {
    enc.validate()?;
    if let Some(a) = enc.input_alphabet() {
        if a != seq.alphabet() {
            return Err(Error::AlphabetMismatch(format!(
                "{} expects alphabet {a}, sequence has {}",
                enc.name(),
                seq.alphabet()
            )));
        }
    }
    match enc {
        EncoderSpec::Identity => Ok(seq.clone()),
        EncoderSpec::LetterRepetition { weights } => {
            let out = seq
                .symbols()
                .iter()
                .flat_map(|&s| std::iter::repeat_n(s, weights[usize::from(s)] as usize))
                .collect();
            SymbolSequence::new(out, seq.alphabet())
        }
        EncoderSpec::BlockSubstitution {
            words,
            output_alphabet,
        } => {
            let out = seq
                .symbols()
                .iter()
                .flat_map(|&s| words[usize::from(s)].iter().copied())
                .collect();
            SymbolSequence::new(out, *output_alphabet)
        }
    }
}

/// `M_n^f`: `M_n` of the encoded sequences, start positions counted in the
/// encoded sequences.
pub fn lcs_encoded(enc: &EncoderSpec, seqs: &[SymbolSequence], n: usize) -> Result<usize> {
    let encoded = seqs
        .iter()
        .map(|s| apply_encoder(enc, s))
        .collect::<Result<Vec<_>>>()?;
    for e in &encoded {
        if e.len() < n {
            return Err(Error::EncodedTooShort {
                len: e.len(),
                needed: n,
            });
        }
    }
    lcs_k_fast(&encoded, n)
}

/// Where the `n - m` start bound of `V_n` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// Starts `<= n - |z|` in the original sequences.
    #[default]
    Original,
    /// The occurrence of `f(z)` under letter repetition starts `<= n - V(z)`
    /// in the encoded sequences; the convention under which `V_n = M_n^f`.
    Encoded,
}

fn score(word: &[u8], weights: &[u32]) -> usize {
    word.iter().map(|&s| weights[usize::from(s)] as usize).sum()
}

fn check_weights(seqs: &[SymbolSequence], weights: &[u32]) -> Result<()> {
    validate_weights(weights)?;
    for s in seqs {
        if let Some(&symbol) = s.symbols().iter().find(|&&x| usize::from(x) >= weights.len()) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                alphabet: weights.len(),
            });
        }
    }
    Ok(())
}

/// Encoded offset of every original position: `E[i] = Σ_{j<i} v(x_j)`.
fn offsets(s: &[u8], weights: &[u32]) -> Vec<usize> {
    let mut acc = 0;
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(0);
    for &c in s {
        acc += weights[usize::from(c)] as usize;
        out.push(acc);
    }
    out
}

/// `V_n` with the original-sequence window.
pub fn scrabble_vn(seqs: &[SymbolSequence], weights: &[u32], n: usize) -> Result<usize> {
    scrabble_vn_window(seqs, weights, n, Window::Original)
}

/// Highest score `Σ v(z_j)` of a word `z` common to all sequences, found by
/// extending common words one letter at a time. Prefixes of a valid word are
/// valid, so the search stops at the first length with none.
pub fn scrabble_vn_window(
    seqs: &[SymbolSequence],
    weights: &[u32],
    n: usize,
    window: Window,
) -> Result<usize> {
    check_weights(seqs, weights)?;
    match window {
        Window::Original => {
            check_inputs(seqs, n)?;
            let matcher = Matcher::new(seqs.iter().map(|s| &s.symbols()[..n]).collect());
            let mut best = 0;
            for m in 1..=n {
                let words = matcher.words(m, &vec![n - m; seqs.len()], false);
                if words.is_empty() {
                    break;
                }
                for st in words {
                    best = best.max(score(&matcher.slices[0][st[0]..st[0] + m], weights));
                }
            }
            Ok(best)
        }
        Window::Encoded => {
            if seqs.len() < 2 {
                return Err(Error::KTooSmall(seqs.len()));
            }
            let offs: Vec<Vec<usize>> = seqs.iter().map(|s| offsets(s.symbols(), weights)).collect();
            for o in &offs {
                let len = *o.last().unwrap();
                if len < n {
                    return Err(Error::EncodedTooShort { len, needed: n });
                }
            }
            // Original positions whose letter starts inside the encoded prefix.
            let lens: Vec<usize> = offs.iter().map(|o| o.partition_point(|&e| e < n)).collect();
            let matcher = Matcher::new(seqs.iter().zip(&lens).map(|(s, &l)| &s.symbols()[..l]).collect());
            let mut best = 0;
            for m in 1..=n {
                if lens.iter().any(|&l| l < m) {
                    break;
                }
                let limits: Vec<usize> = lens.iter().map(|&l| l - m).collect();
                let mut any = false;
                // First occurrences have the smallest encoded offsets.
                for st in matcher.words(m, &limits, false) {
                    let z = &matcher.slices[0][st[0]..st[0] + m];
                    let v = score(z, weights);
                    if st.iter().zip(&offs).all(|(&i, o)| o[i] + v <= n) {
                        any = true;
                        best = best.max(v);
                    }
                }
                if !any {
                    break;
                }
            }
            Ok(best)
        }
    }
}

/// `V_n` by enumerating every start tuple (test oracle).
pub fn scrabble_vn_bruteforce(
    seqs: &[SymbolSequence],
    weights: &[u32],
    n: usize,
    window: Window,
) -> Result<usize> {
    check_weights(seqs, weights)?;
    if seqs.len() < 2 {
        return Err(Error::KTooSmall(seqs.len()));
    }
    let offs: Vec<Vec<usize>> = seqs.iter().map(|s| offsets(s.symbols(), weights)).collect();
    if window == Window::Original {
        check_inputs(seqs, n)?;
    }
    let k = seqs.len();
    let mut starts = vec![0usize; k];
    let mut best = 0;
    let lens: Vec<usize> = seqs.iter().map(SymbolSequence::len).collect();
    loop {
        let mut m = 0;
        loop {
            let next = m + 1;
            let inside = (0..k).all(|l| starts[l] + next <= lens[l]);
            if !inside {
                break;
            }
            let c = seqs[0].symbols()[starts[0] + m];
            if !(0..k).all(|l| seqs[l].symbols()[starts[l] + m] == c) {
                break;
            }
            let z = &seqs[0].symbols()[starts[0]..starts[0] + next];
            let v = score(z, weights);
            let ok = match window {
                Window::Original => starts.iter().all(|&i| i + next <= n),
                Window::Encoded => (0..k).all(|l| offs[l][starts[l]] + v <= n),
            };
            if !ok {
                break;
            }
            best = best.max(v);
            m = next;
        }
        // Odometer over all start tuples.
        let mut l = 0;
        loop {
            if l == k {
                return Ok(best);
            }
            starts[l] += 1;
            if starts[l] < lens[l] {
                break;
            }
            starts[l] = 0;
            l += 1;
        }
    }
}

/// Whether some longest common word of the encoded prefixes occurs
/// block-aligned (starting and ending on letter boundaries, start
/// `<= n - M_n^f`) in every sequence. For such instances `V_n` under
/// [`Window::Encoded`] must equal `M_n^f`.
pub fn encoded_optimum_is_aligned(seqs: &[SymbolSequence], weights: &[u32], n: usize) -> Result<bool> {
    check_weights(seqs, weights)?;
    let enc = EncoderSpec::LetterRepetition {
        weights: weights.to_vec(),
    };
    let encoded = seqs
        .iter()
        .map(|s| {
            let e = apply_encoder(&enc, &SymbolSequence::new(s.symbols().to_vec(), weights.len())?)?;
            if e.len() < n {
                return Err(Error::EncodedTooShort {
                    len: e.len(),
                    needed: n,
                });
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = lcs_k_fast(&encoded, n)?;
    if m == 0 {
        return Ok(true);
    }
    let boundaries: Vec<Vec<bool>> = seqs
        .iter()
        .map(|s| {
            let o = offsets(s.symbols(), weights);
            let mut b = vec![false; o.last().unwrap() + 1];
            for e in o {
                b[e] = true;
            }
            b
        })
        .collect();
    let first = &encoded[0].symbols()[..n];
    let mut words: Vec<&[u8]> = (0..=n - m).map(|i| &first[i..i + m]).collect();
    words.sort_unstable();
    words.dedup();
    Ok(words.iter().any(|w| {
        encoded
            .iter()
            .zip(&boundaries)
            .all(|(e, b)| (0..=n - m).any(|i| b[i] && b[i + m] && &e.symbols()[i..i + m] == *w))
    }))
}

/// Markov source with letter weights for the stochastic scrabble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrabbleSpec {
    pub model: MarkovModel,
    pub weights: Vec<u32>,
}

impl ScrabbleSpec {
    pub fn new(model: MarkovModel, weights: Vec<u32>) -> Result<Self> {
        let spec = ScrabbleSpec { model, weights };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        validate_weights(&self.weights)?;
        if self.weights.len() != self.model.alphabet() {
            return Err(Error::AlphabetMismatch(format!(
                "{} weights for an alphabet of {}",
                self.weights.len(),
                self.model.alphabet()
            )));
        }
        let g = self.weights.iter().fold(0usize, |g, &w| gcd(g, w as usize));
        if g != 1 {
            return Err(Error::GcdNotOne { gcd: g as u32 });
        }
        Ok(())
    }

    /// Chain on `Σ v(i)` states `(i, j)`, `j < v(i)`: `(i, j) -> (i, j + 1)`
    /// with probability 1 inside a block, `(i, v(i) - 1) -> (l, 0)` with
    /// probability `p_il`.
    pub fn expanded_matrix(&self) -> Vec<Vec<f64>> {
        let mut first = Vec::with_capacity(self.weights.len());
        let mut size = 0;
        for &w in &self.weights {
            first.push(size);
            size += w as usize;
        }
        let mut q = vec![vec![0.0; size]; size];
        for (i, &w) in self.weights.iter().enumerate() {
            let w = w as usize;
            for j in 0..w - 1 {
                q[first[i] + j][first[i] + j + 1] = 1.0;
            }
            for (l, &p) in self.model.rows()[i].iter().enumerate() {
                q[first[i] + w - 1][first[l]] = p;
            }
        }
        q
    }

    /// Perron root `q` of the entrywise `k`-th power of the expanded matrix.
    pub fn perron_root(&self, k: usize) -> Result<f64> {
        if k < 2 {
            return Err(Error::KTooSmall(k));
        }
        self.validate()?;
        self.model.require_ergodic()?;
        let qk: Vec<Vec<f64>> = self
            .expanded_matrix()
            .into_iter()
            .map(|row| row.into_iter().map(|x| x.powi(k as i32)).collect())
            .collect();
        perron_eigenvalue(&qk)
    }
}

/// `lim V_n / log n = k / (-log q)`.
pub fn scrabble_limit_constant(spec: &ScrabbleSpec, k: usize) -> Result<f64> {
    Ok(k as f64 / -spec.perron_root(k)?.ln())
}

/// `lim M_n / log n = k / (-log λ_k)` for a Markov source.
pub fn lcs_limit_constant(model: &MarkovModel, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    model.require_ergodic()?;
    let lambda = perron_eigenvalue(&model.entrywise_power(k))?;
    Ok(k as f64 / -lambda.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::renyi_entropy_markov;

    fn seq(d: &str, a: usize) -> SymbolSequence {
        SymbolSequence::from_digits(d, a).unwrap()
    }

    #[test]
    fn hand_examples() {
        // a=0, b=1, c=2
        let xs = [seq("01201", 3), seq("12010", 3), seq("20101", 3)];
        assert_eq!(lcs_k_bruteforce(&xs, 5).unwrap(), 3);
        let w = lcs_k_fast_witness(&xs, 5).unwrap();
        assert_eq!(w.len, 3);
        assert_eq!(w.word, vec![2, 0, 1]);
        assert!(w.verify(&xs, 5));

        let same = [seq("0110", 2), seq("0110", 2)];
        assert_eq!(lcs_k_fast(&same, 4).unwrap(), 4);
        let disjoint = [seq("0101", 4), seq("2323", 4)];
        assert_eq!(lcs_k_bruteforce(&disjoint, 4).unwrap(), 0);
        assert_eq!(lcs_k_fast(&disjoint, 4).unwrap(), 0);
    }

    #[test]
    fn input_errors() {
        let xs = [seq("0101", 2)];
        assert_eq!(lcs_k_fast(&xs, 2), Err(Error::KTooSmall(1)));
        let xs = [seq("0101", 2), seq("01", 2)];
        assert_eq!(lcs_k_fast(&xs, 3), Err(Error::NTooLarge { n: 3, len: 2 }));
    }

    #[test]
    fn lower_bound_hint_is_harmless() {
        let xs = [seq("0011010011", 2), seq("1101001100", 2)];
        let exact = lcs_k_bruteforce(&xs, 10).unwrap();
        for hint in 0..=10 {
            assert_eq!(lcs_k_fast_from(&xs, 10, hint).unwrap().len, exact);
        }
    }

    #[test]
    fn encoder_examples() {
        let x = seq("011", 2);
        let rep = EncoderSpec::LetterRepetition { weights: vec![1, 2] };
        assert_eq!(apply_encoder(&rep, &x).unwrap(), seq("01111", 2));
        assert_eq!(apply_encoder(&EncoderSpec::Identity, &x).unwrap(), x);
        let ones = EncoderSpec::LetterRepetition { weights: vec![1, 1] };
        assert_eq!(apply_encoder(&ones, &x).unwrap(), x);
        let sub = EncoderSpec::BlockSubstitution {
            words: vec![vec![2], vec![0, 1]],
            output_alphabet: 3,
        };
        assert_eq!(apply_encoder(&sub, &x).unwrap(), seq("20101", 3));
        assert!(matches!(
            apply_encoder(&rep, &seq("012", 3)),
            Err(Error::AlphabetMismatch(_))
        ));
        assert!(matches!(
            lcs_encoded(&rep, &[x.clone(), x.clone()], 6),
            Err(Error::EncodedTooShort { len: 5, needed: 6 })
        ));
        assert_eq!(lcs_encoded(&rep, &[x.clone(), x], 5).unwrap(), 5);
    }

    #[test]
    fn scrabble_examples() {
        let xs = [seq("01", 2), seq("01", 2)];
        assert_eq!(scrabble_vn(&xs, &[1, 3], 2).unwrap(), 4);
        let ys = [seq("0110100", 2), seq("1101000", 2)];
        assert_eq!(scrabble_vn(&ys, &[1, 1], 7).unwrap(), lcs_k_fast(&ys, 7).unwrap());
        for window in [Window::Original, Window::Encoded] {
            assert_eq!(
                scrabble_vn_window(&ys, &[2, 3], 7, window).unwrap(),
                scrabble_vn_bruteforce(&ys, &[2, 3], 7, window).unwrap()
            );
        }
    }

    #[test]
    fn scrabble_constants() {
        let model = MarkovModel::uniform(2).unwrap();
        let spec = ScrabbleSpec::new(model.clone(), vec![1, 2]).unwrap();
        let q = spec.perron_root(2).unwrap();
        let oracle = (0.25 + (0.0625f64 + 1.0).sqrt()) / 2.0;
        assert!((q - oracle).abs() < 1e-9);
        assert!((scrabble_limit_constant(&spec, 2).unwrap() - 2.0 / -oracle.ln()).abs() < 1e-9);
        assert!((scrabble_limit_constant(&spec, 2).unwrap() - 4.486).abs() < 2e-3);
        assert_eq!(
            ScrabbleSpec::new(model.clone(), vec![2, 2]),
            Err(Error::GcdNotOne { gcd: 2 })
        );
        let p = MarkovModel::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let unit = ScrabbleSpec::new(p.clone(), vec![1, 1]).unwrap();
        let c = lcs_limit_constant(&p, 2).unwrap();
        assert!((scrabble_limit_constant(&unit, 2).unwrap() - c).abs() < 1e-10);
        assert!((c - 3.4646).abs() < 1e-3);
        let h = renyi_entropy_markov(&p, 3).unwrap();
        assert!((lcs_limit_constant(&p, 3).unwrap() - 3.0 / (2.0 * h)).abs() < 1e-10);
        let u3 = lcs_limit_constant(&MarkovModel::uniform(3).unwrap(), 2).unwrap();
        assert!((u3 - 2.0 / 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn expanded_matrix_shape() {
        let spec = ScrabbleSpec::new(MarkovModel::uniform(2).unwrap(), vec![1, 2]).unwrap();
        let q = spec.expanded_matrix();
        assert_eq!(
            q,
            vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![0.5, 0.5, 0.0],]
        );
    }

    #[test]
    fn encoder_serde() {
        let e = EncoderSpec::LetterRepetition { weights: vec![1, 2] };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"type":"letter-repetition","weights":[1,2]}"#);
        assert_eq!(serde_json::from_str::<EncoderSpec>(&s).unwrap(), e);
    }
}
