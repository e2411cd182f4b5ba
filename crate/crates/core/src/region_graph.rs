//! The map as a 4-connected graph whose edges carry promising-ness labels.
//!
//! Channel entry `(i, j)` of an [`EdgeField`] owns the edge from node `(i, j)` to its
//! right neighbour (x channel) or its lower neighbour (y channel). The last column of
//! the x channel and the last row of the y channel have no edge and are zero padding.

use std::collections::VecDeque;
use std::fs;
use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::grid_map::{pgm, PlanningProblem};
use crate::scalar::Scalar;

/// Two-channel `H x W` field of x/y edge connectivity probabilities (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField<T> {
    width: usize,
    height: usize,
    px: Vec<T>,
    py: Vec<T>,
}

impl<T: Scalar> EdgeField<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            px: vec![T::zero(); width * height],
            py: vec![T::zero(); width * height],
        }
    }

    /// Checks lengths, the `[0, 1]` range and the zero padding.
    pub fn new(width: usize, height: usize, px: Vec<T>, py: Vec<T>) -> Result<Self> {
        let field = Self::from_raw(width, height, px, py)?;
        if let Some(v) = field
            .px
            .iter()
            .chain(&field.py)
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::Parse(format!("edge probability {v} outside [0, 1]")));
        }
        if !field.padding_is_zero() {
            return Err(Error::Parse("edge field padding must be zero".into()));
        }
        Ok(field)
    }

    /// Only checks lengths. Used for gradients, which share the layout but not the range.
    pub fn from_raw(width: usize, height: usize, px: Vec<T>, py: Vec<T>) -> Result<Self> {
        let n = width * height;
        if px.len() != n || py.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (px.len(), py.len()),
            });
        }
        Ok(Self {
            width,
            height,
            px,
            py,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn px(&self) -> &[T] {
        &self.px
    }

    pub fn py(&self) -> &[T] {
        &self.py
    }

    pub fn px_mut(&mut self) -> &mut [T] {
        &mut self.px
    }

    pub fn py_mut(&mut self) -> &mut [T] {
        &mut self.py
    }

    /// Both channels, x first, padding included.
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.px.iter_mut().chain(self.py.iter_mut())
    }

    #[inline]
    pub fn x_at(&self, row: usize, col: usize) -> T {
        self.px[row * self.width + col]
    }

    #[inline]
    pub fn y_at(&self, row: usize, col: usize) -> T {
        self.py[row * self.width + col]
    }

    pub fn set_x(&mut self, row: usize, col: usize, v: T) {
        self.px[row * self.width + col] = v;
    }

    pub fn set_y(&mut self, row: usize, col: usize, v: T) {
        self.py[row * self.width + col] = v;
    }

    pub fn padding_is_zero(&self) -> bool {
        let (w, h) = (self.width, self.height);
        (0..h).all(|i| self.px[i * w + w - 1] == T::zero())
            && (0..w).all(|j| self.py[(h - 1) * w + j] == T::zero())
    }

    /// Entry-wise sum; both fields must have the same dimensions.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            px: self
                .px
                .iter()
                .zip(&other.px)
                .map(|(a, b)| *a + *b)
                .collect(),
            py: self
                .py
                .iter()
                .zip(&other.py)
                .map(|(a, b)| *a + *b)
                .collect(),
        })
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: dims,
            });
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> EdgeField<U> {
        EdgeField {
            width: self.width,
            height: self.height,
            px: self.px.iter().map(|v| U::lit(v.as_f64())).collect(),
            py: self.py.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// `EFLD` encoding; values are stored as little-endian `f32`.
    pub fn to_efld_bytes(&self) -> Vec<u8> {
        encode_two_channel(EFLD_MAGIC, self.width, self.height, &self.px, &self.py)
    }

    pub fn from_efld_bytes(bytes: &[u8]) -> Result<Self> {
        let (w, h, px, py) = decode_two_channel(EFLD_MAGIC, bytes)?;
        Self::from_raw(w, h, px, py)
    }

    pub fn save_efld(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_efld_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_efld(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_efld_bytes(&bytes)
    }
}

/// Binary promising-node mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (mask.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    /// Builds a mask from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                mask.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            mask,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.mask[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Row-major flat indices of the promising nodes.
    pub fn promising_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                got: dims,
            });
        }
        Ok(())
    }

    /// 255 = promising, 0 = unpromising. On read any sample at or above half the maxval is promising.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        pgm::encode(&pgm::Greymap {
            width: self.width,
            height: self.height,
            maxval: 255,
            pixels: self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect(),
        })
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let g = pgm::decode(bytes)?;
        let threshold = u16::from(g.maxval) + 1;
        let mask = g
            .pixels
            .iter()
            .map(|&v| 2 * u16::from(v) >= threshold)
            .collect();
        Self::new(g.width, g.height, mask)
    }

    pub fn save_pgm(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_pgm(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&bytes)
    }
}

/// Two-channel node likelihoods (unpromising, promising) produced by a node-labelling model.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePairField<T> {
    width: usize,
    height: usize,
    c1: Vec<T>,
    c2: Vec<T>,
}

impl<T: Scalar> NodePairField<T> {
    pub fn new(width: usize, height: usize, c1: Vec<T>, c2: Vec<T>) -> Result<Self> {
        let n = width * height;
        if c1.len() != n || c2.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (c1.len(), c2.len()),
            });
        }
        Ok(Self {
            width,
            height,
            c1,
            c2,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn c1(&self) -> &[T] {
        &self.c1
    }

    pub fn c2(&self) -> &[T] {
        &self.c2
    }

    /// `NPAR` encoding: the `EFLD` layout with channels `c1` then `c2`.
    pub fn to_npar_bytes(&self) -> Vec<u8> {
        encode_two_channel(NPAR_MAGIC, self.width, self.height, &self.c1, &self.c2)
    }

    pub fn from_npar_bytes(bytes: &[u8]) -> Result<Self> {
        let (w, h, c1, c2) = decode_two_channel(NPAR_MAGIC, bytes)?;
        Self::new(w, h, c1, c2)
    }

    pub fn save_npar(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_npar_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_npar(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_npar_bytes(&bytes)
    }
}

pub const EFLD_MAGIC: &[u8; 4] = b"EFLD";
pub const NPAR_MAGIC: &[u8; 4] = b"NPAR";
const HEADER_LEN: usize = 16;

fn encode_two_channel<T: Scalar>(
    magic: &[u8; 4],
    width: usize,
    height: usize,
    a: &[T],
    b: &[T],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * a.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&(width as u32).to_le_bytes());
    out.extend_from_slice(&(height as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    for v in a.iter().chain(b) {
        let v = v.to_f32().unwrap_or(f32::NAN);
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

type TwoChannel<T> = (usize, usize, Vec<T>, Vec<T>);

fn decode_two_channel<T: Scalar>(magic: &[u8; 4], bytes: &[u8]) -> Result<TwoChannel<T>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != magic {
        return Err(Error::Parse(format!(
            "missing {} header",
            String::from_utf8_lossy(magic)
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (width, height) = (u32_at(4), u32_at(8));
    if bytes[12..16] != [0, 0, 0, 0] {
        return Err(Error::Parse("reserved header bytes must be zero".into()));
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Parse("field dimensions overflow".into()))?;
    if bytes.len() != HEADER_LEN + 8 * n {
        return Err(Error::Parse(format!(
            "payload is {} bytes, expected {}",
            bytes.len() - HEADER_LEN,
            8 * n
        )));
    }
    let values: Vec<T> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| T::lit(f64::from(f32::from_le_bytes(c.try_into().unwrap()))))
        .collect();
    let (a, b) = values.split_at(n);
    Ok((width, height, a.to_vec(), b.to_vec()))
}

/// Edge labels of a node mask: an edge is promising iff both endpoints are.
pub fn node_to_edge_labels<T: Scalar>(region: &RegionMask) -> EdgeField<T> {
    let (w, h) = region.dims();
    let mut field = EdgeField::zeros(w, h);
    for i in 0..h {
        for j in 0..w {
            if !region.get(i, j) {
                continue;
            }
            if j + 1 < w && region.get(i, j + 1) {
                field.set_x(i, j, T::one());
            }
            if i + 1 < h && region.get(i + 1, j) {
                field.set_y(i, j, T::one());
            }
        }
    }
    field
}

/// A node is promising iff the mean of its two owned edge probabilities exceeds `t`.
///
/// Padding counts as zero, so last-row and last-column nodes need a larger single
/// edge probability to pass.
pub fn decode_region<T: Scalar>(field: &EdgeField<T>, t: T) -> Result<RegionMask> {
    if !(t >= T::zero() && t < T::one()) {
        return Err(Error::InvalidThreshold(t.as_f64()));
    }
    let two = T::one() + T::one();
    let mask = field
        .px
        .iter()
        .zip(&field.py)
        .map(|(&x, &y)| (x + y) / two > t)
        .collect();
    RegionMask::new(field.width, field.height, mask)
}

/// A node is promising iff its promising likelihood strictly exceeds the unpromising one.
pub fn decode_region_nodepair<T: Scalar>(field: &NodePairField<T>) -> RegionMask {
    let mask = field.c1.iter().zip(&field.c2).map(|(a, b)| a < b).collect();
    RegionMask {
        width: field.width,
        height: field.height,
        mask,
    }
}

/// Start-to-goal reachability over 4-connected promising cells.
/// The start and goal cells are treated as promising.
pub fn is_connected<T: Scalar>(region: &RegionMask, problem: &PlanningProblem<T>) -> Result<bool> {
    region.check_dims(problem.map.dims())?;
    let (sc, sr) = problem.map.cell_of(&problem.start)?;
    let (gc, gr) = problem.map.cell_of(&problem.goal)?;
    Ok(cells_connected(region, (sr, sc), (gr, gc)))
}

/// BFS between two `(row, col)` cells, both force-included.
pub fn cells_connected(region: &RegionMask, from: (usize, usize), to: (usize, usize)) -> bool {
    if from == to {
        return true;
    }
    let (w, h) = region.dims();
    let idx = |(r, c): (usize, usize)| r * w + c;
    let target = idx(to);
    let open = |i: usize| region.mask[i] || i == target;
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    seen[idx(from)] = true;
    queue.push_back(idx(from));
    while let Some(i) = queue.pop_front() {
        let (r, c) = (i / w, i % w);
        let mut neighbours = [usize::MAX; 4];
        if c + 1 < w {
            neighbours[0] = i + 1;
        }
        if c > 0 {
            neighbours[1] = i - 1;
        }
        if r + 1 < h {
            neighbours[2] = i + w;
        }
        if r > 0 {
            neighbours[3] = i - w;
        }
        for n in neighbours {
            if n == usize::MAX || seen[n] || !open(n) {
                continue;
            }
            if n == target {
                return true;
            }
            seen[n] = true;
            queue.push_back(n);
        }
    }
    false
}

/// Fraction of `(region, problem)` cases whose region connects start and goal.
pub fn connectivity_rate<T: Scalar>(cases: &[(RegionMask, PlanningProblem<T>)]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut connected = 0usize;
    for (region, problem) in cases {
        if is_connected(region, problem)? {
            connected += 1;
        }
    }
    Ok(connected as f64 / cases.len() as f64)
}

/// Share of ground-truth promising nodes missing from `pred`.
pub fn false_negative_rate(pred: &RegionMask, truth: &RegionMask) -> Result<f64> {
    truth.check_dims(pred.dims())?;
    let positives = truth.count();
    if positives == 0 {
        return Err(Error::EmptyTruth);
    }
    let missed = truth
        .mask
        .iter()
        .zip(&pred.mask)
        .filter(|(&t, &p)| t && !p)
        .count();
    Ok(missed as f64 / positives as f64)
}
