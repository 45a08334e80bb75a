//! Deterministic two-party protocols given extensionally, as a partition of
//! the input square `{-1,1}^n × {-1,1}^n` into output-labelled rectangles.

use std::fmt;
use std::sync::Arc;

use base64::{engine::general_purpose::STANDARD, Engine as _};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::forrelation::ForrParams;
use crate::rng::stream;
use crate::sign::SignVector;

/// Largest per-player input length for which cells are stored as bitsets
/// and partitions are checked exhaustively.
pub const DENSE_MAX_INPUT: usize = 16;

/// Subset of the `2^n` points of one player's hypercube.
#[derive(Clone, PartialEq, Eq)]
pub struct BitSet {
    n: usize,
    words: Vec<u64>,
}

impl BitSet {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; (1usize << n).div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for p in 0..1usize << n {
            s.insert(p);
        }
        s
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut s = Self::empty(n);
        for p in 0..1usize << n {
            if f(p) {
                s.insert(p);
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, point: usize) {
        self.words[point / 64] |= 1 << (point % 64);
    }

    #[inline]
    pub fn contains(&self, point: usize) -> bool {
        self.words[point / 64] >> (point % 64) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Fraction of the hypercube covered.
    pub fn measure(&self) -> f64 {
        self.count() as f64 / (1u64 << self.n) as f64
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        (0..1usize << self.n).filter(|&p| self.contains(p))
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate((1usize << self.n).div_ceil(8));
        bytes
    }

    fn from_bytes(n: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != (1usize << n).div_ceil(8) {
            return Err(Error::Encoding(format!(
                "bitset over 2^{n} points needs {} bytes, got {}",
                (1usize << n).div_ceil(8),
                bytes.len()
            )));
        }
        let mut s = Self::empty(n);
        for (k, &b) in bytes.iter().enumerate() {
            s.words[k / 8] |= (b as u64) << (8 * (k % 8));
        }
        if n < 3 && bytes[0] >> (1 << n) != 0 {
            return Err(Error::Encoding("padding bits are not zero".into()));
        }
        Ok(s)
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSet(n={}, |S|={})", self.n, self.count())
    }
}

pub type Predicate = Arc<dyn Fn(&SignVector) -> bool + Send + Sync>;

/// One player's side of a rectangle.
#[derive(Clone)]
pub enum PointSet {
    Dense(BitSet),
    Predicate(Predicate),
}

impl PointSet {
    pub fn contains(&self, x: &SignVector) -> bool {
        match self {
            PointSet::Dense(s) => s.contains(x.index() as usize),
            PointSet::Predicate(f) => f(x),
        }
    }

    fn densify(&self, n: usize) -> BitSet {
        match self {
            PointSet::Dense(s) => s.clone(),
            PointSet::Predicate(f) => {
                BitSet::from_fn(n, |p| f(&SignVector::from_index(n, p as u64)))
            }
        }
    }

    pub fn as_dense(&self) -> Option<&BitSet> {
        match self {
            PointSet::Dense(s) => Some(s),
            PointSet::Predicate(_) => None,
        }
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSet::Dense(s) => s.fmt(f),
            PointSet::Predicate(_) => f.write_str("Predicate"),
        }
    }
}

/// Rectangle `A × B` on which the protocol outputs `out`.
#[derive(Clone, Debug)]
pub struct Cell {
    pub a: PointSet,
    pub b: PointSet,
    pub out: i8,
}

/// A deterministic protocol of cost `cost` as at most `2^cost` rectangles
/// that partition the input square.
#[derive(Clone, Debug)]
pub struct RectanglePartition {
    n: usize,
    cost: u32,
    cells: Vec<Cell>,
}

impl RectanglePartition {
    /// Builds a partition from bitset cells and verifies it exactly: every
    /// input pair is covered by exactly one cell.
    pub fn dense(n: usize, cost: u32, cells: Vec<(BitSet, BitSet, i8)>) -> Result<Self> {
        if n > DENSE_MAX_INPUT {
            return Err(Error::Resource(format!(
                "dense cells need n <= {DENSE_MAX_INPUT}, got {n}"
            )));
        }
        let p = Self {
            n,
            cost,
            cells: cells
                .into_iter()
                .map(|(a, b, out)| Cell {
                    a: PointSet::Dense(a),
                    b: PointSet::Dense(b),
                    out,
                })
                .collect(),
        };
        p.check_shape()?;
        p.check_exact()?;
        Ok(p)
    }

    /// Builds a partition from membership predicates. Coverage is checked
    /// exactly when `n <= DENSE_MAX_INPUT` and on `check_samples` random
    /// input pairs otherwise.
    pub fn from_predicates(
        n: usize,
        cost: u32,
        cells: Vec<(Predicate, Predicate, i8)>,
        check_samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let p = Self {
            n,
            cost,
            cells: cells
                .into_iter()
                .map(|(a, b, out)| Cell {
                    a: PointSet::Predicate(a),
                    b: PointSet::Predicate(b),
                    out,
                })
                .collect(),
        };
        p.check_shape()?;
        if n <= DENSE_MAX_INPUT {
            p.to_dense()?;
        } else {
            let mut rng = stream(seed, 0);
            for _ in 0..check_samples {
                let x = SignVector::random(n, &mut rng);
                let y = SignVector::random(n, &mut rng);
                p.eval(&x, &y)?;
            }
        }
        Ok(p)
    }

    fn check_shape(&self) -> Result<()> {
        if self.cost < 64 && self.cells.len() as u64 > 1u64 << self.cost {
            return Err(Error::PartitionViolation(format!(
                "{} cells exceed 2^{} for cost {}",
                self.cells.len(),
                self.cost,
                self.cost
            )));
        }
        for (k, c) in self.cells.iter().enumerate() {
            if c.out != 1 && c.out != -1 {
                return Err(invalid(format!("cell {k} output {} is not ±1", c.out)));
            }
            for side in [&c.a, &c.b] {
                if let PointSet::Dense(s) = side {
                    if s.n() != self.n {
                        return Err(invalid(format!(
                            "cell {k} is over 2^{} points, partition has n = {}",
                            s.n(),
                            self.n
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact check for dense cells: pairwise disjoint rectangles whose areas
    /// sum to the whole square.
    fn check_exact(&self) -> Result<()> {
        let sets: Vec<(&BitSet, &BitSet)> = self
            .cells
            .iter()
            .map(|c| {
                (
                    c.a.as_dense().expect("dense"),
                    c.b.as_dense().expect("dense"),
                )
            })
            .collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if sets[i].0.intersects(sets[j].0) && sets[i].1.intersects(sets[j].1) {
                    return Err(Error::PartitionViolation(format!(
                        "cells {i} and {j} overlap"
                    )));
                }
            }
        }
        let area: u128 = sets
            .iter()
            .map(|(a, b)| a.count() as u128 * b.count() as u128)
            .sum();
        let square = 1u128 << (2 * self.n);
        if area != square {
            return Err(Error::PartitionViolation(format!(
                "cells cover {area} of {square} input pairs"
            )));
        }
        Ok(())
    }

    /// Converts predicate cells to bitsets (requires `n <= DENSE_MAX_INPUT`)
    /// and re-verifies exactly.
    pub fn to_dense(&self) -> Result<Self> {
        if self.n > DENSE_MAX_INPUT {
            return Err(Error::Resource(format!(
                "dense tables need n <= {DENSE_MAX_INPUT}, got {}",
                self.n
            )));
        }
        let cells = self
            .cells
            .iter()
            .map(|c| (c.a.densify(self.n), c.b.densify(self.n), c.out))
            .collect();
        Self::dense(self.n, self.cost, cells)
    }

    pub fn is_dense(&self) -> bool {
        self.cells
            .iter()
            .all(|c| matches!((&c.a, &c.b), (PointSet::Dense(_), PointSet::Dense(_))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self) -> u32 {
        self.cost
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Output on `(x, y)`; errors unless exactly one cell covers the pair.
    pub fn eval(&self, x: &SignVector, y: &SignVector) -> Result<i8> {
        if x.len() != self.n || y.len() != self.n {
            return Err(invalid(format!(
                "inputs of length {} and {} for a partition over n = {}",
                x.len(),
                y.len(),
                self.n
            )));
        }
        let mut hit = None;
        for c in &self.cells {
            if c.a.contains(x) && c.b.contains(y) {
                if hit.is_some() {
                    return Err(Error::PartitionViolation(format!(
                        "({x:?}, {y:?}) lies in two cells"
                    )));
                }
                hit = Some(c.out);
            }
        }
        hit.ok_or_else(|| Error::PartitionViolation(format!("({x:?}, {y:?}) is not covered")))
    }

    /// One cell, constant output `+1`, cost 0.
    pub fn trivial(n: usize) -> Self {
        Self {
            n,
            cost: 0,
            cells: vec![Cell {
                a: all_points(n),
                b: all_points(n),
                out: 1,
            }],
        }
    }

    /// Outputs `x(i)`: Alice sends one bit.
    pub fn coordinate(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(invalid(format!("coordinate {i} out of range for n = {n}")));
        }
        let cells = [1i8, -1]
            .into_iter()
            .map(|s| Cell {
                a: coordinate_set(n, i, s),
                b: all_points(n),
                out: s,
            })
            .collect();
        Ok(Self { n, cost: 1, cells })
    }

    /// Outputs `x(i)·y(j)`: each player sends one bit.
    pub fn parity(n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= n || j >= n {
            return Err(invalid(format!(
                "coordinates ({i}, {j}) out of range for n = {n}"
            )));
        }
        let mut cells = Vec::new();
        for sa in [1i8, -1] {
            for sb in [1i8, -1] {
                cells.push(Cell {
                    a: coordinate_set(n, i, sa),
                    b: coordinate_set(n, j, sb),
                    out: sa * sb,
                });
            }
        }
        Ok(Self { n, cost: 2, cells })
    }

    /// A cost-5 protocol probing a 2×2 corner of the forrelation form.
    ///
    /// Alice sends `x` at coordinates `0, 1, N, N+1`; Bob forms `z = x·y`
    /// there and outputs the sign of
    /// `z1(0)z2(0) + z1(0)z2(1) + z1(1)z2(0) - z1(1)z2(1)` (always `±2`).
    pub fn forrelation_probe(params: &ForrParams) -> Self {
        let half = params.half_len();
        let n = params.input_len();
        let coords = [0, 1, half, half + 1];
        let mut cells = Vec::new();
        for pattern in 0u8..16 {
            let a: Predicate = Arc::new(move |x: &SignVector| {
                coords
                    .iter()
                    .enumerate()
                    .all(|(k, &c)| x.is_negative(c) == (pattern >> k & 1 == 1))
            });
            for out in [1i8, -1] {
                let b: Predicate = Arc::new(move |y: &SignVector| {
                    let z: Vec<f64> = coords
                        .iter()
                        .enumerate()
                        .map(|(k, &c)| {
                            let xs = if pattern >> k & 1 == 1 { -1.0 } else { 1.0 };
                            xs * y.value(c)
                        })
                        .collect();
                    let form = z[0] * z[2] + z[0] * z[3] + z[1] * z[2] - z[1] * z[3];
                    (form > 0.0) == (out > 0)
                });
                cells.push(Cell {
                    a: PointSet::Predicate(a.clone()),
                    b: PointSet::Predicate(b),
                    out,
                });
            }
        }
        Self { n, cost: 5, cells }
    }

    /// Random protocol of cost at most `max_cost`, grown as a communication
    /// tree whose nodes split the speaker's set either on a coordinate or
    /// by a random subset. Empty rectangles are dropped.
    pub fn random<R: RngCore + ?Sized>(n: usize, max_cost: u32, rng: &mut R) -> Result<Self> {
        if n > DENSE_MAX_INPUT {
            return Err(Error::Resource(format!(
                "random dense partitions need n <= {DENSE_MAX_INPUT}, got {n}"
            )));
        }
        let mut cells = Vec::new();
        grow(BitSet::full(n), BitSet::full(n), max_cost, rng, &mut cells);
        Self::dense(n, max_cost, cells)
    }

    /// JSON form `{n, cost, cells: [{A, B, out}]}` with base64 bitsets.
    pub fn to_json(&self) -> Result<String> {
        let dense = if self.is_dense() {
            self.clone()
        } else {
            self.to_dense()?
        };
        let raw = PartitionJson {
            n: dense.n,
            cost: dense.cost,
            cells: dense
                .cells
                .iter()
                .map(|c| CellJson {
                    a: STANDARD.encode(c.a.as_dense().expect("dense").to_bytes()),
                    b: STANDARD.encode(c.b.as_dense().expect("dense").to_bytes()),
                    out: c.out,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&raw).expect("plain data serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PartitionJson =
            serde_json::from_str(text).map_err(|e| Error::Encoding(e.to_string()))?;
        if raw.n > DENSE_MAX_INPUT {
            return Err(Error::Resource(format!(
                "dense cells need n <= {DENSE_MAX_INPUT}, got {}",
                raw.n
            )));
        }
        let decode = |s: &str| -> Result<BitSet> {
            let bytes = STANDARD
                .decode(s)
                .map_err(|e| Error::Encoding(format!("base64: {e}")))?;
            BitSet::from_bytes(raw.n, &bytes)
        };
        let cells = raw
            .cells
            .iter()
            .map(|c| Ok((decode(&c.a)?, decode(&c.b)?, c.out)))
            .collect::<Result<Vec<_>>>()?;
        Self::dense(raw.n, raw.cost, cells)
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    n: usize,
    cost: u32,
    cells: Vec<CellJson>,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
    out: i8,
}

fn all_points(n: usize) -> PointSet {
    if n <= DENSE_MAX_INPUT {
        PointSet::Dense(BitSet::full(n))
    } else {
        PointSet::Predicate(Arc::new(|_| true))
    }
}

fn coordinate_set(n: usize, i: usize, sign: i8) -> PointSet {
    if n <= DENSE_MAX_INPUT {
        PointSet::Dense(BitSet::from_fn(n, |p| (p >> i & 1 == 1) == (sign < 0)))
    } else {
        PointSet::Predicate(Arc::new(move |x: &SignVector| x.get(i) == sign))
    }
}

fn split<R: RngCore + ?Sized>(set: &BitSet, rng: &mut R) -> (BitSet, BitSet) {
    let n = set.n();
    let (mut left, mut right) = (BitSet::empty(n), BitSet::empty(n));
    let coord = if rng.random_bool(0.5) {
        Some(rng.random_range(0..n.max(1)))
    } else {
        None
    };
    for p in set.points() {
        let go_left = match coord {
            Some(i) => p >> i & 1 == 0,
            None => rng.random_bool(0.5),
        };
        if go_left {
            left.insert(p);
        } else {
            right.insert(p);
        }
    }
    (left, right)
}

fn grow<R: RngCore + ?Sized>(
    a: BitSet,
    b: BitSet,
    depth: u32,
    rng: &mut R,
    cells: &mut Vec<(BitSet, BitSet, i8)>,
) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    if depth == 0 || rng.random_bool(0.2) {
        let out = if rng.random_bool(0.5) { 1 } else { -1 };
        cells.push((a, b, out));
        return;
    }
    if rng.random_bool(0.5) {
        let (a0, a1) = split(&a, rng);
        grow(a0, b.clone(), depth - 1, rng, cells);
        grow(a1, b, depth - 1, rng, cells);
    } else {
        let (b0, b1) = split(&b, rng);
        grow(a.clone(), b0, depth - 1, rng, cells);
        grow(a, b1, depth - 1, rng, cells);
    }
}

/// Output of `p` on `(x, y)`.
pub fn eval_partition(p: &RectanglePartition, x: &SignVector, y: &SignVector) -> Result<i8> {
    p.eval(x, y)
}
