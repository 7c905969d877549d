//! Deterministic maps, skew products and observations, plus orbit generators.
//!
//! Two families of generators are provided:
//!
//! * [`orbit`] and [`random_orbit`] iterate the map formulas in double precision
//!   from a given starting point. They are exact replicas of the formulas and are
//!   what the unit examples check.
//! * [`sample_orbit`] and [`sample_random_orbit`] draw a starting point from the
//!   invariant measure and return an orbit whose joint law is that of a
//!   stationary orbit. For maps with an integer multiplier a floating-point
//!   forward iteration collapses onto 0 after about 53 / log2(m) steps, so these
//!   maps carry a 64-bit fixed-point state and feed in one fresh uniform digit
//!   per step (the digits of the coordinate beyond bit 64). `PiecewiseDoubling`
//!   is generated backwards through its inverse branches, which contract.
//!   `Beta` and `Gauss` orbits are double-precision pseudo-orbits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest double strictly below 1.
pub(crate) const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// A state in `[0, 1)^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for &value in &coords {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::CoordinateOutOfRange { value });
            }
        }
        Ok(Point { coords })
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Point::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// First coordinate; the whole point for interval maps.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A sequence of points of one dimension stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, len: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        PointSet {
            dim,
            coords: Vec::with_capacity(dim * len),
        }
    }

    /// Builds a one-dimensional set from scalar values.
    pub fn from_scalars(values: &[f64]) -> Self {
        PointSet {
            dim: 1,
            coords: values.to_vec(),
        }
    }

    /// Builds a set from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len(),
            });
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(points: &[Point]) -> Result<Self> {
        let dim = points.first().map(Point::dim).unwrap_or(1);
        let mut set = PointSet::with_capacity(dim, points.len());
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            set.push(p.coords());
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn push(&mut self, coords: &[f64]) {
        assert_eq!(coords.len(), self.dim, "pushed point has wrong dimension");
        self.coords.extend_from_slice(coords);
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point(&self, i: usize) -> Point {
        Point {
            coords: self.get(i).to_vec(),
        }
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// The first `n` points.
    pub fn prefix(&self, n: usize) -> PointSet {
        let n = n.min(self.len());
        PointSet {
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
        }
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|c| Point { coords: c.to_vec() }).collect()
    }
}

/// One affine piece `omega -> slope * omega + intercept` of a piecewise-linear
/// base map, active from `start` up to the next piece's start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPiece {
    pub start: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// Piecewise-linear map of `[0, 1]` driving a skew product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub pieces: Vec<LinearPiece>,
}

impl PiecewiseLinear {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .pieces
            .first()
            .ok_or_else(|| Error::InvalidMap("base map has no pieces".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidMap("first base piece must start at 0".into()));
        }
        for w in self.pieces.windows(2) {
            if !(w[1].start > w[0].start && w[1].start < 1.0) {
                return Err(Error::InvalidMap(
                    "base piece starts must be strictly increasing inside [0, 1)".into(),
                ));
            }
        }
        for p in &self.pieces {
            if !p.slope.is_finite() || p.slope == 0.0 || !p.intercept.is_finite() {
                return Err(Error::InvalidMap("base piece has degenerate slope".into()));
            }
        }
        Ok(())
    }

    fn piece(&self, omega: f64) -> &LinearPiece {
        let idx = self.pieces.partition_point(|p| p.start <= omega);
        &self.pieces[idx.saturating_sub(1)]
    }

    pub fn apply(&self, omega: f64) -> f64 {
        let p = self.piece(omega);
        (p.slope * omega + p.intercept).clamp(0.0, 1.0)
    }

    /// Whether the transfer operator fixes the constant density, checked on a
    /// fine grid of target points.
    pub fn preserves_lebesgue(&self) -> bool {
        let ends: Vec<f64> = self
            .pieces
            .iter()
            .skip(1)
            .map(|p| p.start)
            .chain(std::iter::once(1.0))
            .collect();
        (1..200).all(|i| {
            let y = (i as f64 + 0.5) / 200.5;
            let mass: f64 = self
                .pieces
                .iter()
                .zip(&ends)
                .filter(|(p, &end)| {
                    let a = p.slope * p.start + p.intercept;
                    let b = p.slope * end + p.intercept;
                    y >= a.min(b) && y < a.max(b)
                })
                .map(|(p, _)| 1.0 / p.slope.abs())
                .sum();
            (mass - 1.0).abs() < 1e-9
        })
    }
}

/// Random dynamical system `(omega, x) -> (theta(omega), T_omega(x))`.
///
/// The fiber map is `fibers[i]` where `i` counts the thresholds `<= omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewProduct {
    pub base: PiecewiseLinear,
    pub thresholds: Vec<f64>,
    pub fibers: Vec<MapSpec>,
}

impl SkewProduct {
    /// The non-i.i.d. example on the circle: `T_omega = 2x` on `[0, 2/5)`,
    /// `3x` on `[2/5, 1]`, driven by a four-branch piecewise-linear map.
    pub fn doubling_tripling() -> Self {
        SkewProduct {
            base: PiecewiseLinear {
                pieces: vec![
                    LinearPiece {
                        start: 0.0,
                        slope: 2.0,
                        intercept: 0.0,
                    },
                    LinearPiece {
                        start: 0.2,
                        slope: 3.0,
                        intercept: -0.2,
                    },
                    LinearPiece {
                        start: 0.4,
                        slope: 2.0,
                        intercept: -0.8,
                    },
                    LinearPiece {
                        start: 0.6,
                        slope: 1.5,
                        intercept: -0.5,
                    },
                ],
            },
            thresholds: vec![0.4],
            fibers: vec![MapSpec::MTimesMod1 { m: 2 }, MapSpec::MTimesMod1 { m: 3 }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for w in self.thresholds.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidMap(
                    "selector thresholds must be strictly increasing".into(),
                ));
            }
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidMap("selector thresholds must lie in (0, 1)".into()));
        }
        if self.fibers.len() != self.thresholds.len() + 1 {
            return Err(Error::InvalidMap(format!(
                "{} thresholds need {} fiber maps, got {}",
                self.thresholds.len(),
                self.thresholds.len() + 1,
                self.fibers.len()
            )));
        }
        let dim = self.fibers.first().map(MapSpec::dim).unwrap_or_default();
        for f in &self.fibers {
            if matches!(f, MapSpec::SkewProduct(_)) {
                return Err(Error::InvalidMap("fiber maps cannot be skew products".into()));
            }
            f.validate()?;
            if f.dim() != dim {
                return Err(Error::InvalidMap("fiber maps differ in dimension".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.fibers.first().map(MapSpec::dim).unwrap_or(1)
    }

    /// Index of the fiber map used at `omega`.
    pub fn select(&self, omega: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::SelectorGap { omega });
        }
        Ok(self.thresholds.partition_point(|&t| t <= omega))
    }

    pub fn step(&self, omega: f64, x: &Point) -> Result<(f64, Point)> {
        let fiber = &self.fibers[self.select(omega)?];
        Ok((self.base.apply(omega), step(fiber, x)?))
    }

    fn integer_fibers(&self) -> Option<Vec<u64>> {
        self.fibers.iter().map(MapSpec::integer_multiplier).collect()
    }
}

/// Parameterised deterministic map or skew product on `[0, 1)^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MapSpec {
    /// `x -> m x mod 1` with Lebesgue measure.
    MTimesMod1 {
        m: u32,
    },
    /// `x -> beta x mod 1` with the Parry measure.
    Beta {
        beta: f64,
    },
    /// `x -> {1/x}` with the Gauss measure.
    Gauss,
    /// `x -> 2^n (x - 2^-n)` on `[2^-n, 2^-n+1)`, Lebesgue measure.
    PiecewiseDoubling,
    /// Coordinatewise `x -> factor x mod 1` on the `dim`-torus.
    TorusExpanding {
        dim: usize,
        factor: u32,
    },
    SkewProduct(SkewProduct),
}

impl MapSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::MTimesMod1 { m } if *m < 2 => Err(Error::InvalidMap(format!("m must be >= 2, got {m}"))),
            MapSpec::Beta { beta } if !(beta.is_finite() && *beta > 1.0) => {
                Err(Error::InvalidMap(format!("beta must be > 1, got {beta}")))
            }
            MapSpec::TorusExpanding { dim, factor } if *dim < 1 || *factor < 2 => Err(Error::InvalidMap(
                format!("torus map needs dim >= 1 and factor >= 2, got ({dim}, {factor})"),
            )),
            MapSpec::SkewProduct(s) => s.validate(),
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MapSpec::TorusExpanding { dim, .. } => *dim,
            MapSpec::SkewProduct(s) => s.dim(),
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapSpec::MTimesMod1 { .. } => "m-times-mod1",
            MapSpec::Beta { .. } => "beta",
            MapSpec::Gauss => "gauss",
            MapSpec::PiecewiseDoubling => "piecewise-doubling",
            MapSpec::TorusExpanding { .. } => "torus-expanding",
            MapSpec::SkewProduct(_) => "skew-product",
        }
    }

    /// Whether Lebesgue measure is invariant (for skew products: on the fibers,
    /// given a Lebesgue-preserving base map).
    pub fn preserves_lebesgue(&self) -> bool {
        match self {
            MapSpec::MTimesMod1 { .. } | MapSpec::PiecewiseDoubling | MapSpec::TorusExpanding { .. } => true,
            MapSpec::Beta { beta } => beta.fract() == 0.0,
            MapSpec::Gauss => false,
            MapSpec::SkewProduct(s) => {
                s.base.preserves_lebesgue() && s.fibers.iter().all(MapSpec::preserves_lebesgue)
            }
        }
    }

    fn integer_multiplier(&self) -> Option<u64> {
        match self {
            MapSpec::MTimesMod1 { m } => Some(u64::from(*m)),
            MapSpec::TorusExpanding { factor, .. } => Some(u64::from(*factor)),
            MapSpec::Beta { beta } if beta.fract() == 0.0 && *beta < 4.0e9 => Some(*beta as u64),
            _ => None,
        }
    }

    /// Applies the map in place.
    pub(crate) fn apply(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        match self {
            MapSpec::MTimesMod1 { m } => x[0] = frac(f64::from(*m) * x[0]),
            MapSpec::Beta { beta } => x[0] = frac(beta * x[0]),
            MapSpec::Gauss => {
                if x[0] == 0.0 {
                    return Err(Error::GaussAtZero);
                }
                x[0] = frac(1.0 / x[0]);
            }
            MapSpec::PiecewiseDoubling => x[0] = piecewise_doubling(x[0]),
            MapSpec::TorusExpanding { factor, .. } => {
                let f = f64::from(*factor);
                for c in x.iter_mut() {
                    *c = frac(f * *c);
                }
            }
            MapSpec::SkewProduct(_) => {
                return Err(Error::InvalidMap(
                    "a skew product needs an omega; use random_orbit".into(),
                ))
            }
        }
        Ok(())
    }
}

fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 {
        BELOW_ONE
    } else {
        f
    }
}

/// `x = f 2^e` with `f` in `[1/2, 1)` lies in `[2^-n, 2^-n+1)` for `n = 1 - e`,
/// and the branch maps it to `2 f - 1`, computed exactly.
fn piecewise_doubling(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if exp == 0 {
        // Subnormal input: scale up first, the branch formula is the same.
        return piecewise_doubling(x * 2f64.powi(64));
    }
    // Mantissa with exponent forced so that the value lies in [1/2, 1).
    let f = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    2.0 * f - 1.0
}

/// One application of the map.
pub fn step(map: &MapSpec, x: &Point) -> Result<Point> {
    let mut coords = x.coords.clone();
    map.apply(&mut coords)?;
    Ok(Point { coords })
}

/// `n` points of the double-precision orbit `x0, T x0, T^2 x0, ...`.
pub fn orbit(map: &MapSpec, x0: &Point, n: usize) -> Result<PointSet> {
    let mut out = PointSet::with_capacity(x0.dim(), n);
    let mut x = x0.coords.clone();
    if n > 0 {
        if x.len() != map.dim() {
            return Err(Error::DimensionMismatch {
                expected: map.dim(),
                found: x.len(),
            });
        }
        out.push(&x);
    }
    for _ in 1..n {
        map.apply(&mut x)?;
        out.push(&x);
    }
    Ok(out)
}

/// Density of the Parry measure of the beta transformation.
#[derive(Debug, Clone)]
pub struct ParryDensity {
    beta: f64,
    orbit_of_one: Vec<f64>,
    norm: f64,
}

impl ParryDensity {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 1.0, "beta must exceed 1");
        let terms = ((60.0 / beta.log2()).ceil() as usize).max(1);
        let mut orbit_of_one = Vec::with_capacity(terms);
        let mut t = 1.0;
        let mut norm = 0.0;
        let mut weight = 1.0;
        for _ in 0..terms {
            orbit_of_one.push(t);
            norm += weight * t;
            weight /= beta;
            let next = beta * t;
            // A finite expansion of 1 (simple Parry number) ends the series; the
            // tolerance absorbs rounding in the pseudo-orbit of 1.
            if (next - next.round()).abs() < 1e-12 {
                break;
            }
            t = next - next.floor();
        }
        ParryDensity {
            beta,
            orbit_of_one,
            norm,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let mut weight = 1.0;
        let mut sum = 0.0;
        for &t in &self.orbit_of_one {
            if x < t {
                sum += weight;
            }
            weight /= self.beta;
        }
        sum / self.norm
    }

    /// Upper bound `(1 - 1/beta)^-1` of the normalised density.
    pub fn upper_bound(&self) -> f64 {
        1.0 / (1.0 - 1.0 / self.beta)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let bound = self.upper_bound();
        loop {
            let x: f64 = rng.gen();
            if rng.gen::<f64>() * bound <= self.density(x) {
                return x;
            }
        }
    }
}

fn sample_gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let x = u.exp2() - 1.0;
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Draws a point from the map's invariant measure.
pub fn sample_invariant<R: Rng + ?Sized>(map: &MapSpec, rng: &mut R) -> Point {
    let coords = match map {
        MapSpec::Beta { beta } => vec![ParryDensity::new(*beta).sample(rng)],
        MapSpec::Gauss => vec![sample_gauss(rng)],
        _ => (0..map.dim()).map(|_| rng.gen::<f64>()).collect(),
    };
    Point { coords }
}

/// Double-precision orbit of the fiber coordinate of a skew product started at
/// `(omega0, x0)`.
pub fn random_orbit(skew: &SkewProduct, omega0: f64, x0: &Point, n: usize) -> Result<PointSet> {
    if x0.dim() != skew.dim() {
        return Err(Error::DimensionMismatch {
            expected: skew.dim(),
            found: x0.dim(),
        });
    }
    let mut out = PointSet::with_capacity(x0.dim(), n);
    let mut omega = omega0;
    let mut x = x0.coords.clone();
    if n > 0 {
        out.push(&x);
    }
    for _ in 1..n {
        let fiber = &skew.fibers[skew.select(omega)?];
        fiber.apply(&mut x)?;
        omega = skew.base.apply(omega);
        out.push(&x);
    }
    Ok(out)
}

/// Fixed-point state for `x -> m x mod 1` holding the first 64 bits of each
/// coordinate. The bits beyond are never stored: under Lebesgue they are an
/// independent uniform tail, and multiplying by `m` moves one uniform base-`m`
/// digit of that tail into the stored part.
struct CarryState {
    words: Vec<u64>,
}

impl CarryState {
    fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        CarryState {
            words: (0..dim).map(|_| rng.gen::<u64>()).collect(),
        }
    }

    fn advance<R: Rng + ?Sized>(&mut self, m: u64, rng: &mut R) {
        for w in &mut self.words {
            let carry = rng.gen_range(0..m);
            *w = w.wrapping_mul(m).wrapping_add(carry);
        }
    }

    fn write(&self, out: &mut PointSet, buf: &mut [f64]) {
        for (b, &w) in buf.iter_mut().zip(&self.words) {
            *b = (w >> 11) as f64 * TWO_POW_NEG_53;
        }
        out.push(buf);
    }
}

/// A stationary orbit of length `n` started from the invariant measure.
pub fn sample_orbit<R: Rng + ?Sized>(map: &MapSpec, n: usize, rng: &mut R) -> Result<PointSet> {
    map.validate()?;
    let dim = map.dim();
    match map {
        MapSpec::SkewProduct(skew) => sample_random_orbit(skew, n, rng),
        _ if map.integer_multiplier().is_some() && map.preserves_lebesgue() => {
            let m = map.integer_multiplier().unwrap_or(2);
            let mut out = PointSet::with_capacity(dim, n);
            let mut buf = vec![0.0; dim];
            let mut state = CarryState::sample(dim, rng);
            for t in 0..n {
                if t > 0 {
                    state.advance(m, rng);
                }
                state.write(&mut out, &mut buf);
            }
            Ok(out)
        }
        MapSpec::PiecewiseDoubling => {
            // Backwards: x_t = (x_{t+1} + 1) / 2^j with P(j) = 2^-j.
            let mut rev = Vec::with_capacity(n);
            let mut x: f64 = rng.gen();
            for t in 0..n {
                if t > 0 {
                    let j = loop {
                        let bits: u64 = rng.gen();
                        if bits != 0 {
                            break bits.trailing_zeros() as i32 + 1;
                        }
                    };
                    x = (x + 1.0) * 2f64.powi(-j);
                    if x >= 1.0 {
                        x = BELOW_ONE;
                    }
                }
                rev.push(x);
            }
            rev.reverse();
            Ok(PointSet::from_scalars(&rev))
        }
        _ => {
            let mut out = PointSet::with_capacity(dim, n);
            let mut x = sample_invariant(map, rng).coords;
            for t in 0..n {
                if t > 0 {
                    match map.apply(&mut x) {
                        Err(Error::GaussAtZero) => x = sample_invariant(map, rng).coords,
                        other => other?,
                    }
                }
                out.push(&x);
            }
            Ok(out)
        }
    }
}

/// Fiber orbit of a skew product started from `omega0 ~ Leb[0,1]` and `x0`
/// from Lebesgue. Integer-multiplier fibers use the exact-in-law fixed-point
/// state; others iterate in double precision.
pub fn sample_random_orbit<R: Rng + ?Sized>(skew: &SkewProduct, n: usize, rng: &mut R) -> Result<PointSet> {
    skew.validate()?;
    let dim = skew.dim();
    let mut omega: f64 = rng.gen();
    let mut out = PointSet::with_capacity(dim, n);
    if let Some(multipliers) = skew.integer_fibers() {
        let mut buf = vec![0.0; dim];
        let mut state = CarryState::sample(dim, rng);
        for t in 0..n {
            if t > 0 {
                state.advance(multipliers[skew.select(omega)?], rng);
                omega = skew.base.apply(omega);
            }
            state.write(&mut out, &mut buf);
        }
    } else {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        for t in 0..n {
            if t > 0 {
                let fiber = &skew.fibers[skew.select(omega)?];
                match fiber.apply(&mut x) {
                    Err(Error::GaussAtZero) => x = sample_invariant(fiber, rng).coords,
                    other => other?,
                }
                omega = skew.base.apply(omega);
            }
            out.push(&x);
        }
    }
    Ok(out)
}

/// Observation applied to orbit points before measuring distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ObservationSpec {
    Identity,
    CoordinateProjection {
        indices: Vec<usize>,
    },
    /// `x -> scale x + offset`, coordinatewise, clamped into `[0, 1)`.
    Affine {
        scale: f64,
        offset: f64,
    },
}

impl ObservationSpec {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        match self {
            ObservationSpec::Identity => Ok(()),
            ObservationSpec::CoordinateProjection { indices } => {
                if indices.is_empty() {
                    return Err(Error::InvalidObservation("projection onto no coordinates".into()));
                }
                match indices.iter().find(|&&i| i >= input_dim) {
                    Some(&i) => Err(Error::DimensionMismatch {
                        expected: input_dim,
                        found: i + 1,
                    }),
                    None => Ok(()),
                }
            }
            ObservationSpec::Affine { scale, offset } => {
                if *scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
                    Err(Error::InvalidObservation(format!(
                        "affine observation needs a finite non-zero scale, got {scale}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            ObservationSpec::CoordinateProjection { indices } => indices.len(),
            _ => input_dim,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            ObservationSpec::Affine { scale, .. } => scale.abs(),
            _ => 1.0,
        }
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        match self {
            ObservationSpec::Identity => out.extend_from_slice(x),
            ObservationSpec::CoordinateProjection { indices } => out.extend(indices.iter().map(|&i| x[i])),
            ObservationSpec::Affine { scale, offset } => {
                out.extend(x.iter().map(|&c| (scale * c + offset).clamp(0.0, BELOW_ONE)))
            }
        }
    }

    pub fn apply_set(&self, points: &PointSet) -> Result<PointSet> {
        self.validate(points.dim())?;
        let dim = self.output_dim(points.dim());
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points.iter() {
            self.apply_into(p, &mut coords);
        }
        PointSet::from_flat(dim, coords)
    }
}

pub fn observe(obs: &ObservationSpec, x: &Point) -> Result<Point> {
    obs.validate(x.dim())?;
    let mut coords = Vec::with_capacity(obs.output_dim(x.dim()));
    obs.apply_into(&x.coords, &mut coords);
    Ok(Point { coords })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(x: f64) -> Point {
        Point::scalar(x).unwrap()
    }

    fn from_bits(bits: &str) -> f64 {
        bits.chars()
            .enumerate()
            .map(|(i, c)| if c == '1' { 2f64.powi(-(i as i32) - 1) } else { 0.0 })
            .sum()
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(&MapSpec::MTimesMod1 { m: 2 }, &p(0.3)).unwrap().x(), 0.6);
        assert_eq!(step(&MapSpec::Gauss, &p(0.5)).unwrap().x(), 0.0);
        assert_eq!(step(&MapSpec::Beta { beta: 2.5 }, &p(0.5)).unwrap().x(), 0.25);
    }

    #[test]
    fn step_errors() {
        assert_eq!(step(&MapSpec::Gauss, &p(0.0)), Err(Error::GaussAtZero));
        let torus = MapSpec::TorusExpanding { dim: 2, factor: 3 };
        assert!(matches!(
            step(&torus, &p(0.1)),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn point_rejects_out_of_range() {
        assert!(Point::scalar(1.0).is_err());
        assert!(Point::scalar(-0.1).is_err());
        assert!(Point::new(vec![]).is_err());
    }

    #[test]
    fn piecewise_doubling_branches() {
        let m = MapSpec::PiecewiseDoubling;
        assert_eq!(step(&m, &p(0.75)).unwrap().x(), 0.5);
        assert_eq!(step(&m, &p(0.3)).unwrap().x(), 4.0 * (0.3 - 0.25));
        assert_eq!(step(&m, &p(0.5)).unwrap().x(), 0.0);
        assert_eq!(step(&m, &p(0.0)).unwrap().x(), 0.0);
        let tiny = 3.0 * 2f64.powi(-1070);
        assert_eq!(step(&m, &p(tiny)).unwrap().x(), 0.5);
    }

    #[test]
    fn orbit_fixed_point_and_digit_shift() {
        let o = orbit(&MapSpec::MTimesMod1 { m: 2 }, &p(0.0), 5).unwrap();
        assert_eq!(o.flat(), &[0.0; 5]);

        let digits = "0110100111010001";
        let o = orbit(&MapSpec::MTimesMod1 { m: 2 }, &p(from_bits(digits)), 3).unwrap();
        for i in 0..3 {
            assert_eq!(o.get(i)[0], from_bits(&digits[i..]));
        }
    }

    #[test]
    fn ternary_digit_shift() {
        // 0.1202 in base 3 maps to 0.202 and then 0.02.
        let x = 1.0 / 3.0 + 2.0 / 9.0 + 2.0 / 81.0;
        let o = orbit(&MapSpec::MTimesMod1 { m: 3 }, &p(x), 3).unwrap();
        assert!((o.get(1)[0] - (2.0 / 3.0 + 2.0 / 27.0)).abs() < 1e-15);
        assert!((o.get(2)[0] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_fixed_point() {
        let inv_phi = 2.0 / (1.0 + 5f64.sqrt());
        let o = orbit(&MapSpec::Gauss, &p(inv_phi), 3).unwrap();
        for x in o.flat() {
            assert!((x - inv_phi).abs() < 1e-12);
        }
    }

    #[test]
    fn skew_product_hand_iteration() {
        let skew = SkewProduct::doubling_tripling();
        skew.validate().unwrap();
        assert!((skew.base.apply(0.1) - 0.2).abs() < 1e-15);
        assert!((skew.base.apply(0.2) - 0.4).abs() < 1e-15);
        let o = random_orbit(&skew, 0.1, &p(0.3), 3).unwrap();
        let expected = [0.3, 0.6, 0.2];
        for (x, e) in o.flat().iter().zip(expected) {
            assert!((x - e).abs() < 1e-12, "{x} vs {e}");
        }
        assert!(skew.base.preserves_lebesgue());
        assert!(MapSpec::SkewProduct(skew).preserves_lebesgue());
    }

    #[test]
    fn single_cell_skew_matches_fiber_orbit() {
        let skew = SkewProduct {
            base: PiecewiseLinear {
                pieces: vec![LinearPiece {
                    start: 0.0,
                    slope: 1.0,
                    intercept: 0.0,
                }],
            },
            thresholds: vec![],
            fibers: vec![MapSpec::MTimesMod1 { m: 2 }],
        };
        let x0 = p(0.123_456_789);
        let a = random_orbit(&skew, 0.77, &x0, 40).unwrap();
        let b = orbit(&MapSpec::MTimesMod1 { m: 2 }, &x0, 40).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn selector_rejects_omega_outside_unit_interval() {
        let skew = SkewProduct::doubling_tripling();
        assert!(matches!(skew.select(1.5), Err(Error::SelectorGap { .. })));
        assert_eq!(skew.select(0.4).unwrap(), 1);
        assert_eq!(skew.select(0.39).unwrap(), 0);
    }

    #[test]
    fn skew_validation() {
        let mut skew = SkewProduct::doubling_tripling();
        skew.thresholds = vec![0.6, 0.4];
        skew.fibers.push(MapSpec::Gauss);
        assert!(skew.validate().is_err());
        let mut skew = SkewProduct::doubling_tripling();
        skew.fibers.pop();
        assert!(skew.validate().is_err());
    }

    #[test]
    fn observe_examples() {
        assert_eq!(observe(&ObservationSpec::Identity, &p(0.7)).unwrap().x(), 0.7);
        let proj = ObservationSpec::CoordinateProjection { indices: vec![0] };
        let pt = Point::new(vec![0.2, 0.9]).unwrap();
        assert_eq!(observe(&proj, &pt).unwrap().coords(), &[0.2]);
        let aff = ObservationSpec::Affine {
            scale: 0.5,
            offset: 0.1,
        };
        assert!((observe(&aff, &p(0.4)).unwrap().x() - 0.3).abs() < 1e-15);
        assert!(observe(
            &ObservationSpec::Affine {
                scale: 0.0,
                offset: 0.0
            },
            &p(0.4)
        )
        .is_err());
        let bad = ObservationSpec::CoordinateProjection { indices: vec![2] };
        assert!(observe(&bad, &pt).is_err());
        let clamp = ObservationSpec::Affine {
            scale: 2.0,
            offset: 0.5,
        };
        assert!(observe(&clamp, &p(0.9)).unwrap().x() < 1.0);
    }

    #[test]
    fn uniform_sampling_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let map = MapSpec::MTimesMod1 { m: 2 };
        let mean: f64 = (0..100_000)
            .map(|_| sample_invariant(&map, &mut rng).x())
            .sum::<f64>()
            / 1e5;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn gauss_sampling_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let below = (0..100_000)
            .filter(|_| sample_invariant(&MapSpec::Gauss, &mut rng).x() <= 0.5)
            .count() as f64
            / 1e5;
        let expected = 1.5f64.ln() / 2f64.ln();
        assert!((below - expected).abs() < 0.006, "{below} vs {expected}");
    }

    #[test]
    fn parry_density_bounds() {
        let beta = (1.0 + 5f64.sqrt()) / 2.0;
        let parry = ParryDensity::new(beta);
        let lo = 1.0 - 1.0 / beta;
        let hi = 1.0 / lo;
        for i in 0..1000 {
            let x = (i as f64 + 0.5) / 1000.0;
            let d = parry.density(x);
            assert!(d >= lo - 1e-12 && d <= hi + 1e-12, "density {d} at {x}");
        }
        // Golden-mean Parry density is piecewise constant with ratio beta.
        let ratio = parry.density(0.1) / parry.density(0.9);
        assert!((ratio - beta).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = MapSpec::Beta { beta };
        let samples: Vec<f64> = (0..20_000)
            .map(|_| sample_invariant(&map, &mut rng).x())
            .collect();
        assert!(samples.iter().all(|x| (0.0..1.0).contains(x)));
        // Mass of [0, 1/beta) under the golden-mean Parry measure.
        let below = samples.iter().filter(|&&x| x < 1.0 / beta).count() as f64 / 20_000.0;
        let expected = beta * beta / (1.0 + beta * beta);
        assert!((below - expected).abs() < 0.015, "{below} vs {expected}");
    }

    #[test]
    fn integer_beta_parry_is_uniform() {
        let parry = ParryDensity::new(3.0);
        assert!((parry.density(0.2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_orbits_do_not_collapse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for map in [
            MapSpec::MTimesMod1 { m: 2 },
            MapSpec::PiecewiseDoubling,
            MapSpec::TorusExpanding { dim: 2, factor: 3 },
            MapSpec::SkewProduct(SkewProduct::doubling_tripling()),
        ] {
            let o = sample_orbit(&map, 5000, &mut rng).unwrap();
            assert_eq!(o.len(), 5000);
            let tail = &o.flat()[o.flat().len() - 1000..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            assert!((mean - 0.5).abs() < 0.05, "{} tail mean {mean}", map.name());
            assert!(tail.iter().all(|x| (0.0..1.0).contains(x)));
        }
    }

    #[test]
    fn carry_orbit_follows_the_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [2u32, 3, 5] {
            let map = MapSpec::MTimesMod1 { m };
            let o = sample_orbit(&map, 200, &mut rng).unwrap();
            for w in o.flat().windows(2) {
                let image = step(&map, &p(w[0])).unwrap().x();
                let gap = (image - w[1]).abs();
                assert!(gap.min(1.0 - gap) < 1e-12 * f64::from(m), "m = {m}");
            }
        }
    }

    #[test]
    fn backward_piecewise_doubling_follows_the_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let o = sample_orbit(&MapSpec::PiecewiseDoubling, 500, &mut rng).unwrap();
        for w in o.flat().windows(2) {
            let image = step(&MapSpec::PiecewiseDoubling, &p(w[0])).unwrap().x();
            assert!((image - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn map_spec_serde_round_trip() {
        let map = MapSpec::SkewProduct(SkewProduct::doubling_tripling());
        let text = serde_json::to_string(&map).unwrap();
        let back: MapSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(map, back);
        let t: MapSpec = serde_json::from_str(r#"{"type":"torus-expanding","dim":2,"factor":3}"#).unwrap();
        assert_eq!(t, MapSpec::TorusExpanding { dim: 2, factor: 3 });
    }
}
