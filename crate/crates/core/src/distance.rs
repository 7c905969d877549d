//! The k-point diameter, the shortest distance `m_n` between `k` orbits and the
//! close-tuple count `S_n`.
//!
//! `m_n` is the minimum, over all index tuples `(i_1, ..., i_k)` in
//! `{0..n-1}^k`, of the largest pairwise distance among the tuple's points.
//! [`shortest_distance_bruteforce`] enumerates every tuple and is the oracle;
//! [`shortest_distance_fast`] returns the identical value using a uniform grid.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ObservationSpec, Point, PointSet};
use crate::error::{Error, Result};

/// Metric flavour without a dimension, as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    TorusWrap,
    EuclideanBox,
}

impl MetricKind {
    pub fn with_dim(self, dim: usize) -> MetricSpec {
        match self {
            MetricKind::TorusWrap => MetricSpec::TorusWrap(dim),
            MetricKind::EuclideanBox => MetricSpec::EuclideanBox(dim),
        }
    }
}

/// Euclidean distance on `[0, 1)^N`, either with periodic wrap-around in each
/// coordinate or restricted to the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSpec {
    TorusWrap(usize),
    EuclideanBox(usize),
}

impl MetricSpec {
    pub fn dim(&self) -> usize {
        match *self {
            MetricSpec::TorusWrap(d) | MetricSpec::EuclideanBox(d) => d,
        }
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            MetricSpec::TorusWrap(_) => MetricKind::TorusWrap,
            MetricSpec::EuclideanBox(_) => MetricKind::EuclideanBox,
        }
    }

    fn is_torus(&self) -> bool {
        matches!(self, MetricSpec::TorusWrap(_))
    }

    /// Upper bound on any pairwise distance.
    pub fn max_distance(&self) -> f64 {
        let per_coord = if self.is_torus() { 0.5 } else { 1.0 };
        per_coord * (self.dim() as f64).sqrt()
    }

    #[inline]
    fn gap(&self, a: f64, b: f64) -> f64 {
        let g = (a - b).abs();
        if self.is_torus() {
            g.min(1.0 - g)
        } else {
            g
        }
    }

    /// Pairwise distance. Symmetric bitwise, and zero only for equal points.
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        if a.len() == 1 {
            return self.gap(a[0], b[0]);
        }
        let mut largest = 0.0f64;
        for (&x, &y) in a.iter().zip(b) {
            largest = largest.max(self.gap(x, y));
        }
        if largest == 0.0 {
            return 0.0;
        }
        // Scaled to avoid underflow for nearly coincident points.
        let mut sum = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            let s = self.gap(x, y) / largest;
            sum += s * s;
        }
        largest * sum.sqrt()
    }

    fn diameter(&self, points: &[&[f64]]) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                d = d.max(self.distance(a, b));
            }
        }
        d
    }
}

/// Largest pairwise distance among `k >= 2` points.
pub fn kdiameter(points: &[Point], metric: MetricSpec) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::KTooSmall(points.len()));
    }
    for p in points {
        if p.dim() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                found: p.dim(),
            });
        }
    }
    let coords: Vec<&[f64]> = points.iter().map(Point::coords).collect();
    Ok(metric.diameter(&coords))
}

/// `k >= 2` orbits of equal length and dimension under one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSet {
    orbits: Vec<PointSet>,
    metric: MetricSpec,
}

impl OrbitSet {
    pub fn new(orbits: Vec<PointSet>, metric: MetricSpec) -> Result<Self> {
        if orbits.len() < 2 {
            return Err(Error::KTooSmall(orbits.len()));
        }
        let len = orbits[0].len();
        if len == 0 {
            return Err(Error::NTooLarge { n: 1, len: 0 });
        }
        for o in &orbits {
            if o.dim() != metric.dim() {
                return Err(Error::DimensionMismatch {
                    expected: metric.dim(),
                    found: o.dim(),
                });
            }
            if o.len() != len {
                return Err(Error::NTooLarge { n: len, len: o.len() });
            }
        }
        Ok(OrbitSet { orbits, metric })
    }

    /// Convenience constructor for one-dimensional orbits.
    pub fn from_scalars(orbits: &[&[f64]], metric: MetricSpec) -> Result<Self> {
        OrbitSet::new(orbits.iter().map(|o| PointSet::from_scalars(o)).collect(), metric)
    }

    pub fn k(&self) -> usize {
        self.orbits.len()
    }

    pub fn len(&self) -> usize {
        self.orbits[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> MetricSpec {
        self.metric
    }

    pub fn orbits(&self) -> &[PointSet] {
        &self.orbits
    }

    /// The orbits seen through an observation, under the same metric flavour.
    pub fn observe(&self, obs: &ObservationSpec) -> Result<OrbitSet> {
        let orbits = self
            .orbits
            .iter()
            .map(|o| obs.apply_set(o))
            .collect::<Result<Vec<_>>>()?;
        let dim = obs.output_dim(self.dim());
        OrbitSet::new(orbits, self.metric.kind().with_dim(dim))
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::NTooLarge { n, len: self.len() });
        }
        Ok(())
    }

    fn tuple(&self, idx: &[usize]) -> Vec<&[f64]> {
        idx.iter().zip(&self.orbits).map(|(&i, o)| o.get(i)).collect()
    }
}

/// Calls `f` with every index tuple in `{0..n-1}^k` (lexicographic order)
/// and its diameter. Prefix diameters are carried down so each tuple costs
/// `k - 1` distance evaluations.
fn for_each_tuple(orbits: &OrbitSet, n: usize, mut f: impl FnMut(&[usize], f64)) {
    fn level(
        orbits: &OrbitSet,
        n: usize,
        idx: &mut [usize],
        l: usize,
        prefix: f64,
        f: &mut impl FnMut(&[usize], f64),
    ) {
        for i in 0..n {
            idx[l] = i;
            let p = orbits.orbits[l].get(i);
            let mut d = prefix;
            for (j, &ij) in idx[..l].iter().enumerate() {
                d = d.max(orbits.metric.distance(orbits.orbits[j].get(ij), p));
            }
            if l + 1 == idx.len() {
                f(idx, d);
            } else {
                level(orbits, n, idx, l + 1, d, f);
            }
        }
    }
    let mut idx = vec![0usize; orbits.k()];
    level(orbits, n, &mut idx, 0, 0.0, &mut f);
}

/// `m_n` by enumerating all `n^k` index tuples.
pub fn shortest_distance_bruteforce(orbits: &OrbitSet, n: usize) -> Result<f64> {
    Ok(shortest_distance_bruteforce_witness(orbits, n)?.0)
}

/// `m_n` together with the lexicographically smallest minimising tuple.
pub fn shortest_distance_bruteforce_witness(orbits: &OrbitSet, n: usize) -> Result<(f64, Vec<usize>)> {
    orbits.check_n(n)?;
    let mut best = f64::INFINITY;
    let mut arg = vec![0; orbits.k()];
    for_each_tuple(orbits, n, |idx, d| {
        if d < best {
            best = d;
            arg.copy_from_slice(idx);
        }
    });
    Ok((best, arg))
}

/// `S_n`: number of index tuples whose points are pairwise closer than `r`.
pub fn count_close_tuples_bruteforce(orbits: &OrbitSet, r: f64, n: usize) -> Result<u64> {
    orbits.check_n(n)?;
    let mut count = 0u64;
    for_each_tuple(orbits, n, |_, d| {
        if d < r {
            count += 1;
        }
    });
    Ok(count)
}

/// Below this many tuples the grid does not pay for itself.
const BRUTE_FORCE_TUPLES: f64 = 4096.0;

fn enumerate_directly(k: usize, n: usize) -> bool {
    (n as f64).powi(k as i32) <= BRUTE_FORCE_TUPLES
}

/// `m_n`, bitwise equal to [`shortest_distance_bruteforce`].
pub fn shortest_distance_fast(orbits: &OrbitSet, n: usize) -> Result<f64> {
    Ok(shortest_distance_witness(orbits, n)?.0)
}

/// `m_n` and the lexicographically smallest index tuple attaining it.
///
/// Any tuple of diameter `<= r` lies within the 3^N cell neighbourhood of its
/// first point's cell in a grid of side `>= r`. The search brackets a radius
/// `r` at which such a tuple exists but none of diameter `<= r/2` does, then
/// minimises exactly over the tuples found in neighbourhoods at `r`.
pub fn shortest_distance_witness(orbits: &OrbitSet, n: usize) -> Result<(f64, Vec<usize>)> {
    orbits.check_n(n)?;
    if enumerate_directly(orbits.k(), n) || orbits.k() > 64 {
        return shortest_distance_bruteforce_witness(orbits, n);
    }
    shortest_distance_grid_witness(orbits, n)
}

/// The grid search of [`shortest_distance_witness`] without the small-input
/// shortcut to enumeration.
pub fn shortest_distance_grid_witness(orbits: &OrbitSet, n: usize) -> Result<(f64, Vec<usize>)> {
    orbits.check_n(n)?;
    let k = orbits.k();
    if let Some(tuple) = coincident_tuple(orbits, n) {
        return Ok((0.0, tuple));
    }
    let r_hi = orbits.metric.diameter(&orbits.tuple(&vec![0; k]));
    let estimate = (n as f64).powf(-(k as f64) / ((k - 1) as f64 * orbits.dim() as f64));
    let mut r = estimate.min(r_hi);
    if TupleSearch::new(orbits, n, r).exists() {
        loop {
            let half = 0.5 * r;
            if half < f64::MIN_POSITIVE || !TupleSearch::new(orbits, n, half).exists() {
                break;
            }
            r = half;
        }
    } else {
        loop {
            r = (2.0 * r).min(r_hi);
            if r >= r_hi || TupleSearch::new(orbits, n, r).exists() {
                break;
            }
        }
    }
    let found = TupleSearch::new(orbits, n, r).minimum();
    // At least one tuple of diameter <= r exists at the final radius.
    Ok(found.expect("bracketed radius must contain a tuple"))
}

/// `S_n` with strict comparison `diameter < r`, so that
/// `S_n >= 1` exactly when `m_n < r`.
pub fn count_close_tuples(orbits: &OrbitSet, r: f64, n: usize) -> Result<u64> {
    orbits.check_n(n)?;
    if r <= 0.0 || r.is_nan() {
        return Ok(0);
    }
    let k = orbits.k();
    if r > orbits.metric.max_distance() {
        return Ok((n as u64).saturating_pow(k as u32));
    }
    if enumerate_directly(k, n) {
        return count_close_tuples_bruteforce(orbits, r, n);
    }
    count_close_tuples_grid(orbits, r, n)
}

/// The grid count of [`count_close_tuples`] without the small-input shortcut.
pub fn count_close_tuples_grid(orbits: &OrbitSet, r: f64, n: usize) -> Result<u64> {
    orbits.check_n(n)?;
    if r <= 0.0 || r.is_nan() {
        return Ok(0);
    }
    Ok(TupleSearch::new(orbits, n, r).count_strict())
}

/// m_n of the orbits seen through `obs`.
pub fn observed_shortest_distance(orbits: &OrbitSet, obs: &ObservationSpec, n: usize) -> Result<f64> {
    orbits.check_n(n)?;
    let observed =
        OrbitSet::new(orbits.orbits.iter().map(|o| o.prefix(n)).collect(), orbits.metric)?.observe(obs)?;
    shortest_distance_fast(&observed, n)
}

/// `log m_n / (-log n)`; `+inf` flags `m_n = 0`.
pub fn exponent(m_n: f64, n: usize) -> f64 {
    if m_n == 0.0 {
        return f64::INFINITY;
    }
    m_n.ln() / -(n as f64).ln()
}

/// Finds an index tuple whose points coincide exactly, if any.
fn coincident_tuple(orbits: &OrbitSet, n: usize) -> Option<Vec<usize>> {
    let k = orbits.k();
    let key = |p: &[f64]| -> Vec<u64> { p.iter().map(|&c| (c + 0.0).to_bits()).collect() };
    let mut seen: FxHashMap<Vec<u64>, (u64, Vec<usize>)> = FxHashMap::default();
    for (j, o) in orbits.orbits.iter().enumerate() {
        for i in 0..n {
            let entry = seen
                .entry(key(o.get(i)))
                .or_insert_with(|| (0, vec![usize::MAX; k]));
            if entry.0 & (1 << j) == 0 {
                entry.0 |= 1 << j;
                entry.1[j] = i;
            }
        }
    }
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    seen.into_values()
        .filter(|(mask, _)| *mask == full)
        .map(|(_, t)| t)
        .min()
}

#[inline]
fn mix(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

fn cell_hash(cell: &[i64]) -> u64 {
    cell.iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, &c| {
        mix(h ^ (c as u64).wrapping_add(0x632b_e59b_d9b4_e019))
    })
}

/// Uniform grid over orbits `1..k` with cell side `>= r`, anchored on orbit 0.
///
/// Cells are keyed by a hash of their coordinates; colliding cells share a
/// bucket, which only adds candidates that the exact distance test removes.
struct TupleSearch<'a> {
    orbits: &'a OrbitSet,
    n: usize,
    r: f64,
    cells_per_axis: i64,
    /// (cell hash, orbit, index), sorted.
    entries: Vec<(u64, u32, u32)>,
    buckets: FxHashMap<u64, (usize, usize)>,
}

enum Mode {
    Exists,
    Minimum,
    CountStrict,
}

struct Scratch {
    candidates: Vec<Vec<(u32, f64)>>,
    chosen: Vec<u32>,
    cells: Vec<u64>,
    cell: Vec<i64>,
    bound: f64,
    best: f64,
    best_tuple: Vec<usize>,
    count: u64,
    found: bool,
}

impl<'a> TupleSearch<'a> {
    fn new(orbits: &'a OrbitSet, n: usize, r: f64) -> Self {
        // Margin keeps the side strictly above r despite rounding in x * G.
        let g = (1.0 / (r * (1.0 + 1e-9))).floor();
        let cells_per_axis = if g.is_finite() {
            (g as i64).clamp(1, 1i64 << 52)
        } else {
            1i64 << 52
        };
        let mut search = TupleSearch {
            orbits,
            n,
            r,
            cells_per_axis,
            entries: Vec::with_capacity((orbits.k() - 1) * n),
            buckets: FxHashMap::default(),
        };
        let mut cell = vec![0i64; orbits.dim()];
        for (j, o) in orbits.orbits.iter().enumerate().skip(1) {
            for i in 0..n {
                search.cell_of(o.get(i), &mut cell);
                search.entries.push((cell_hash(&cell), j as u32, i as u32));
            }
        }
        search.entries.sort_unstable();
        let mut start = 0;
        while start < search.entries.len() {
            let h = search.entries[start].0;
            let mut end = start + 1;
            while end < search.entries.len() && search.entries[end].0 == h {
                end += 1;
            }
            search.buckets.insert(h, (start, end));
            start = end;
        }
        search
    }

    fn cell_of(&self, p: &[f64], cell: &mut [i64]) {
        let g = self.cells_per_axis;
        for (c, &x) in cell.iter_mut().zip(p) {
            *c = ((x * g as f64).floor() as i64).clamp(0, g - 1);
        }
    }

    /// Hashes of the distinct cells in the 3^N neighbourhood of `p`'s cell.
    fn neighbour_cells(&self, p: &[f64], s: &mut Scratch) {
        let dim = p.len();
        let g = self.cells_per_axis;
        let torus = self.orbits.metric.is_torus();
        self.cell_of(p, &mut s.cell);
        s.cells.clear();
        let total = 3usize.pow(dim as u32);
        let mut shifted = vec![0i64; dim];
        'offsets: for code in 0..total {
            let mut rest = code;
            for (axis, out) in shifted.iter_mut().enumerate() {
                let c = s.cell[axis] + (rest % 3) as i64 - 1;
                rest /= 3;
                *out = if torus {
                    c.rem_euclid(g)
                } else if c < 0 || c >= g {
                    continue 'offsets;
                } else {
                    c
                };
            }
            s.cells.push(cell_hash(&shifted));
        }
        s.cells.sort_unstable();
        s.cells.dedup();
    }

    fn scratch(&self) -> Scratch {
        let k = self.orbits.k();
        Scratch {
            candidates: vec![Vec::new(); k],
            chosen: vec![0; k],
            cells: Vec::new(),
            cell: vec![0; self.orbits.dim()],
            bound: self.r,
            best: f64::INFINITY,
            best_tuple: Vec::new(),
            count: 0,
            found: false,
        }
    }

    fn run(&self, mode: &Mode, s: &mut Scratch) {
        let metric = self.orbits.metric;
        let anchor_orbit = &self.orbits.orbits[0];
        for i in 0..self.n {
            let p = anchor_orbit.get(i);
            self.neighbour_cells(p, s);
            for c in s.candidates.iter_mut() {
                c.clear();
            }
            for h in &s.cells {
                let Some(&(lo, hi)) = self.buckets.get(h) else {
                    continue;
                };
                for &(_, j, q) in &self.entries[lo..hi] {
                    let d = metric.distance(p, self.orbits.orbits[j as usize].get(q as usize));
                    let keep = match mode {
                        Mode::CountStrict => d < self.r,
                        _ => d <= s.bound,
                    };
                    if keep {
                        s.candidates[j as usize].push((q, d));
                    }
                }
            }
            if s.candidates[1..].iter().any(Vec::is_empty) {
                continue;
            }
            s.chosen[0] = i as u32;
            self.descend(mode, s, 1, 0.0);
            if s.found && matches!(mode, Mode::Exists) {
                return;
            }
        }
    }

    fn descend(&self, mode: &Mode, s: &mut Scratch, level: usize, current: f64) {
        let k = self.orbits.k();
        let metric = self.orbits.metric;
        for c in 0..s.candidates[level].len() {
            let (q, d0) = s.candidates[level][c];
            let point = self.orbits.orbits[level].get(q as usize);
            let mut diam = current.max(d0);
            let exceeds = |d: f64, s: &Scratch| match mode {
                Mode::CountStrict => d >= self.r,
                _ => d > s.bound,
            };
            if exceeds(diam, s) {
                continue;
            }
            let mut pruned = false;
            for prev in 1..level {
                let other = self.orbits.orbits[prev].get(s.chosen[prev] as usize);
                diam = diam.max(metric.distance(other, point));
                if exceeds(diam, s) {
                    pruned = true;
                    break;
                }
            }
            if pruned {
                continue;
            }
            s.chosen[level] = q;
            if level + 1 < k {
                self.descend(mode, s, level + 1, diam);
            } else {
                match mode {
                    Mode::Exists => s.found = true,
                    Mode::CountStrict => s.count += 1,
                    Mode::Minimum => {
                        let tuple: Vec<usize> = s.chosen.iter().map(|&x| x as usize).collect();
                        if diam < s.best || (diam == s.best && tuple < s.best_tuple) {
                            s.best = diam;
                            s.best_tuple = tuple;
                            s.bound = diam;
                            s.found = true;
                        }
                    }
                }
            }
            if s.found && matches!(mode, Mode::Exists) {
                return;
            }
        }
    }

    fn exists(&self) -> bool {
        let mut s = self.scratch();
        self.run(&Mode::Exists, &mut s);
        s.found
    }

    fn minimum(&self) -> Option<(f64, Vec<usize>)> {
        let mut s = self.scratch();
        self.run(&Mode::Minimum, &mut s);
        s.found.then_some((s.best, s.best_tuple))
    }

    fn count_strict(&self) -> u64 {
        let mut s = self.scratch();
        self.run(&Mode::CountStrict, &mut s);
        s.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::scalar(x).unwrap()).collect()
    }

    #[test]
    fn kdiameter_examples() {
        let e1 = MetricSpec::EuclideanBox(1);
        let t1 = MetricSpec::TorusWrap(1);
        assert!((kdiameter(&pts(&[0.1, 0.2, 0.4]), e1).unwrap() - 0.3).abs() < 1e-15);
        assert!((kdiameter(&pts(&[0.05, 0.95]), t1).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(kdiameter(&pts(&[0.3, 0.3, 0.3]), t1).unwrap(), 0.0);
        assert_eq!(kdiameter(&pts(&[0.3]), t1), Err(Error::KTooSmall(1)));
        let p2 = vec![Point::new(vec![0.1, 0.2]).unwrap(), Point::scalar(0.1).unwrap()];
        assert!(matches!(
            kdiameter(&p2, MetricSpec::EuclideanBox(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_never_underflows_to_zero() {
        let m = MetricSpec::EuclideanBox(2);
        let a = [0.5, 0.5];
        let b = [0.5 + f64::EPSILON, 0.5];
        assert!(m.distance(&a, &b) > 0.0);
        let c = [1e-300, 0.0];
        let z = [0.0, 0.0];
        assert!(m.distance(&c, &z) > 0.0);
    }

    #[test]
    fn hand_examples() {
        let e1 = MetricSpec::EuclideanBox(1);
        let o = OrbitSet::from_scalars(&[&[0.0, 0.5], &[0.26, 0.74]], e1).unwrap();
        assert!((shortest_distance_fast(&o, 2).unwrap() - 0.24).abs() < 1e-15);
        assert_eq!(
            shortest_distance_fast(&o, 2).unwrap(),
            shortest_distance_bruteforce(&o, 2).unwrap()
        );
        assert_eq!(
            shortest_distance_bruteforce(&o, 1).unwrap(),
            kdiameter(&pts(&[0.0, 0.26]), e1).unwrap()
        );

        let o = OrbitSet::from_scalars(&[&[0.0, 0.5], &[0.1, 0.9]], e1).unwrap();
        assert_eq!(count_close_tuples(&o, 0.15, 2).unwrap(), 1);
        assert_eq!(count_close_tuples(&o, 2.0, 2).unwrap(), 4);
        assert!(matches!(
            shortest_distance_fast(&o, 3),
            Err(Error::NTooLarge { n: 3, len: 2 })
        ));
    }

    #[test]
    fn identical_orbits_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..300).map(|_| rng.gen()).collect();
        let o = OrbitSet::from_scalars(&[&v, &v, &v], MetricSpec::TorusWrap(1)).unwrap();
        assert_eq!(shortest_distance_fast(&o, 300).unwrap(), 0.0);
        assert_eq!(shortest_distance_bruteforce(&o, 20).unwrap(), 0.0);
        assert_eq!(exponent(0.0, 300), f64::INFINITY);
    }

    #[test]
    fn exponent_examples() {
        assert!((exponent(1.0 / 1000.0, 1000) - 1.0).abs() < 1e-12);
        assert!((exponent(1000f64.powf(-1.5), 1000) - 1.5).abs() < 1e-12);
    }

    fn random_set(rng: &mut ChaCha8Rng, k: usize, n: usize, metric: MetricSpec) -> OrbitSet {
        let orbits = (0..k)
            .map(|_| {
                let coords = (0..n * metric.dim()).map(|_| rng.gen::<f64>()).collect();
                PointSet::from_flat(metric.dim(), coords).unwrap()
            })
            .collect();
        OrbitSet::new(orbits, metric).unwrap()
    }

    #[test]
    fn fast_path_matches_bruteforce_above_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..24 {
            let k = 2 + trial % 3;
            let metric = if trial % 2 == 0 {
                MetricSpec::TorusWrap(1 + trial % 3 / 2)
            } else {
                MetricSpec::EuclideanBox(1 + trial % 3 / 2)
            };
            let n = [200, 80, 30][k - 2];
            let o = random_set(&mut rng, k, n, metric);
            let (fast, ft) = shortest_distance_witness(&o, n).unwrap();
            let (slow, st) = shortest_distance_bruteforce_witness(&o, n).unwrap();
            assert_eq!(fast.to_bits(), slow.to_bits());
            assert_eq!(ft, st);
        }
    }

    #[test]
    fn grid_count_matches_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..20 {
            let metric = if trial % 2 == 0 {
                MetricSpec::TorusWrap(2)
            } else {
                MetricSpec::EuclideanBox(1)
            };
            let o = random_set(&mut rng, 3, 60, metric);
            for r in [0.01, 0.05, 0.2] {
                assert_eq!(
                    count_close_tuples(&o, r, 60).unwrap(),
                    count_close_tuples_bruteforce(&o, r, 60).unwrap()
                );
            }
        }
    }

    #[test]
    fn observed_distance_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let o = random_set(&mut rng, 2, 200, MetricSpec::EuclideanBox(2));
        let plain = shortest_distance_fast(&o, 200).unwrap();
        let same = observed_shortest_distance(&o, &ObservationSpec::Identity, 200).unwrap();
        assert_eq!(plain, same);
        let proj = ObservationSpec::CoordinateProjection { indices: vec![1] };
        assert!(observed_shortest_distance(&o, &proj, 200).unwrap() <= plain);
        let half = ObservationSpec::Affine {
            scale: 0.5,
            offset: 0.0,
        };
        let scaled = observed_shortest_distance(&o, &half, 200).unwrap();
        assert!((scaled - 0.5 * plain).abs() <= 1e-15 * plain);
    }
}
