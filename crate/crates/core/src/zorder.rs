//! Z-order (Morton) location codes.
//!
//! A location on a `2^b × 2^b` grid is encoded by interleaving the bits of its
//! coordinates, y bit first, most significant first: for `X = x0 x1` and
//! `Y = y0 y1` the code is `y0 x0 y1 x1`. Any prefix of a code names the
//! rectangle of all cells whose codes extend it, so truncating a code coarsens
//! the location it reveals. Even prefix lengths give squares, odd lengths give
//! regions twice as wide as they are tall (the extra fixed bit is a y bit).
//!
//! The code space is also treated as a ring: after the all-ones code comes the
//! all-zeros code again. [`ZInterval`] carries wrap-around explicitly.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported number of bits per axis; codes then use all 64 bits.
pub const MAX_BITS_PER_AXIS: u8 = 32;

/// Pass as `max_intervals` to [`decompose_rect`] for an exact decomposition.
pub const UNBOUNDED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZOrderError {
    #[error("bits per axis must be in 1..={MAX_BITS_PER_AXIS}, got {0}")]
    UnsupportedResolution(u8),
    #[error("point ({x}, {y}) lies outside the {bits}-bit grid")]
    OutsideGrid { x: u32, y: u32, bits: u8 },
    #[error("expected a full-precision code, got {len} of {resolution} bits")]
    NotFullPrecision { len: u8, resolution: u8 },
    #[error("cannot truncate a {len}-bit code to {requested} bits")]
    TruncateBeyondLength { len: u8, requested: u8 },
    #[error("resolution mismatch: {0} vs {1} bits")]
    ResolutionMismatch(u8, u8),
    #[error("code value {value:#x} does not fit in {len} bits")]
    ValueTooWide { value: u64, len: u8 },
    #[error("rectangle [{x_min}..={x_max}] x [{y_min}..={y_max}] is empty or outside the grid")]
    InvalidRect {
        x_min: u32,
        x_max: u32,
        y_min: u32,
        y_max: u32,
    },
    #[error("max_intervals must be at least 1")]
    ZeroIntervalBudget,
    #[error("invalid bit string {0:?}")]
    InvalidBitString(String),
    #[error("coordinate ({lon}, {lat}) is outside the configured bounding box")]
    OutsideBounds { lon: f64, lat: f64 },
}

pub type Result<T> = std::result::Result<T, ZOrderError>;

fn check_bits(bits_per_axis: u8) -> Result<()> {
    if (1..=MAX_BITS_PER_AXIS).contains(&bits_per_axis) {
        Ok(())
    } else {
        Err(ZOrderError::UnsupportedResolution(bits_per_axis))
    }
}

/// `v << s`, zero when the shift would clear the whole word.
#[inline]
fn shl(v: u64, s: u32) -> u64 {
    v.checked_shl(s).unwrap_or(0)
}

/// Mask of the low `n` bits (`n <= 64`).
#[inline]
fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
fn spread(v: u32) -> u64 {
    let mut v = v as u64;
    v = (v | (v << 16)) & 0x0000_FFFF_0000_FFFF;
    v = (v | (v << 8)) & 0x00FF_00FF_00FF_00FF;
    v = (v | (v << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    v = (v | (v << 1)) & 0x5555_5555_5555_5555;
    v
}

#[inline]
fn compact(v: u64) -> u32 {
    let mut v = v & 0x5555_5555_5555_5555;
    v = (v | (v >> 1)) & 0x3333_3333_3333_3333;
    v = (v | (v >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    v = (v | (v >> 4)) & 0x00FF_00FF_00FF_00FF;
    v = (v | (v >> 8)) & 0x0000_FFFF_0000_FFFF;
    v = (v | (v >> 16)) & 0x0000_0000_FFFF_FFFF;
    v as u32
}

/// A cell on the `2^bits_per_axis` square grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: u32,
    pub y: u32,
    pub bits_per_axis: u8,
}

impl GridPoint {
    pub fn new(x: u32, y: u32, bits_per_axis: u8) -> Result<Self> {
        check_bits(bits_per_axis)?;
        let side = 1u64 << bits_per_axis;
        if x as u64 >= side || y as u64 >= side {
            return Err(ZOrderError::OutsideGrid {
                x,
                y,
                bits: bits_per_axis,
            });
        }
        Ok(Self { x, y, bits_per_axis })
    }

    pub fn encode(&self) -> ZCode {
        encode(*self)
    }
}

/// A full-precision Z-order code or one of its prefixes.
///
/// `value` holds the `len` most significant bits of the code, right-aligned.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZCode {
    value: u64,
    len: u8,
    resolution: u8,
}

impl ZCode {
    /// Builds a prefix of `len` bits at the given resolution (`2 * bits_per_axis`).
    pub fn new(value: u64, len: u8, resolution: u8) -> Result<Self> {
        if resolution % 2 != 0 {
            return Err(ZOrderError::UnsupportedResolution(resolution / 2));
        }
        check_bits(resolution / 2)?;
        if len > resolution {
            return Err(ZOrderError::TruncateBeyondLength {
                len: resolution,
                requested: len,
            });
        }
        if value & !low_mask(len as u32) != 0 {
            return Err(ZOrderError::ValueTooWide { value, len });
        }
        Ok(Self {
            value,
            len,
            resolution,
        })
    }

    /// A full-precision code on a grid with `bits_per_axis` bits per axis.
    pub fn full(value: u64, bits_per_axis: u8) -> Result<Self> {
        check_bits(bits_per_axis)?;
        Self::new(value, 2 * bits_per_axis, 2 * bits_per_axis)
    }

    /// The empty prefix, covering the whole grid.
    pub fn root(bits_per_axis: u8) -> Result<Self> {
        check_bits(bits_per_axis)?;
        Ok(Self {
            value: 0,
            len: 0,
            resolution: 2 * bits_per_axis,
        })
    }

    /// Parses a string of `0`/`1` characters (most significant first).
    pub fn parse(bits: &str, bits_per_axis: u8) -> Result<Self> {
        check_bits(bits_per_axis)?;
        let resolution = 2 * bits_per_axis;
        if bits.len() > resolution as usize {
            return Err(ZOrderError::InvalidBitString(bits.to_owned()));
        }
        let mut value = 0u64;
        for c in bits.chars() {
            value = match c {
                '0' => value << 1,
                '1' => (value << 1) | 1,
                _ => return Err(ZOrderError::InvalidBitString(bits.to_owned())),
            };
        }
        Self::new(value, bits.len() as u8, resolution)
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn len(&self) -> u8 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn resolution(&self) -> u8 {
        self.resolution
    }

    #[inline]
    pub fn bits_per_axis(&self) -> u8 {
        self.resolution / 2
    }

    #[inline]
    pub fn is_full(&self) -> bool {
        self.len == self.resolution
    }

    /// Bit `i` counted from the most significant end.
    pub fn bit(&self, i: u8) -> Option<bool> {
        (i < self.len).then(|| (self.value >> (self.len - 1 - i)) & 1 == 1)
    }

    /// The prefix extended by one bit, or `None` at full precision.
    pub fn child(&self, bit: bool) -> Option<ZCode> {
        (!self.is_full()).then(|| ZCode {
            value: (self.value << 1) | bit as u64,
            len: self.len + 1,
            resolution: self.resolution,
        })
    }

    pub fn is_prefix_of(&self, other: &ZCode) -> bool {
        self.resolution == other.resolution
            && self.len <= other.len
            && self.value == other.value.checked_shr((other.len - self.len) as u32).unwrap_or(0)
    }

    /// Keeps the first `new_len` bits.
    pub fn truncate(&self, new_len: u8) -> Result<ZCode> {
        if new_len > self.len {
            return Err(ZOrderError::TruncateBeyondLength {
                len: self.len,
                requested: new_len,
            });
        }
        Ok(ZCode {
            value: self.value.checked_shr((self.len - new_len) as u32).unwrap_or(0),
            len: new_len,
            resolution: self.resolution,
        })
    }

    /// Smallest full-precision code value extending this prefix.
    #[inline]
    pub fn lower(&self) -> u64 {
        shl(self.value, (self.resolution - self.len) as u32)
    }

    /// Largest full-precision code value extending this prefix.
    #[inline]
    pub fn upper(&self) -> u64 {
        self.lower() | low_mask((self.resolution - self.len) as u32)
    }

    /// Number of full-precision codes extending this prefix.
    pub fn cell_count(&self) -> u128 {
        1u128 << (self.resolution - self.len)
    }

    pub fn interval(&self) -> ZInterval {
        ZInterval::from_values(self.lower(), self.upper(), self.resolution)
    }

    pub fn region(&self) -> Rect {
        prefix_region(self)
    }
}

impl fmt::Display for ZCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) == Some(true) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for ZCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ZCode({self}/{})", self.resolution)
    }
}

/// Lexicographic bit-string order: a prefix sorts before its extensions.
/// For full-precision codes this is the integer order of the codes.
impl Ord for ZCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.resolution
            .cmp(&other.resolution)
            .then(self.lower().cmp(&other.lower()))
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for ZCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for ZCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Inclusive axis-aligned rectangle of grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: u32,
    pub x_max: u32,
    pub y_min: u32,
    pub y_max: u32,
}

impl Rect {
    /// Validated constructor: non-empty and inside the `bits_per_axis` grid.
    pub fn new(x_min: u32, x_max: u32, y_min: u32, y_max: u32, bits_per_axis: u8) -> Result<Self> {
        let r = Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate(bits_per_axis)?;
        Ok(r)
    }

    pub fn full(bits_per_axis: u8) -> Result<Self> {
        check_bits(bits_per_axis)?;
        let max = low_mask(bits_per_axis as u32) as u32;
        Ok(Rect {
            x_min: 0,
            x_max: max,
            y_min: 0,
            y_max: max,
        })
    }

    pub fn cell(p: GridPoint) -> Self {
        Rect {
            x_min: p.x,
            x_max: p.x,
            y_min: p.y,
            y_max: p.y,
        }
    }

    pub fn validate(&self, bits_per_axis: u8) -> Result<()> {
        check_bits(bits_per_axis)?;
        let max = low_mask(bits_per_axis as u32);
        if self.x_min > self.x_max
            || self.y_min > self.y_max
            || self.x_max as u64 > max
            || self.y_max as u64 > max
        {
            return Err(ZOrderError::InvalidRect {
                x_min: self.x_min,
                x_max: self.x_max,
                y_min: self.y_min,
                y_max: self.y_max,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.x_min <= x && x <= self.x_max && self.y_min <= y && y <= self.y_max
    }

    #[inline]
    pub fn contains_point(&self, p: &GridPoint) -> bool {
        self.contains(p.x, p.y)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x_min <= other.x_min
            && other.x_max <= self.x_max
            && self.y_min <= other.y_min
            && other.y_max <= self.y_max
    }

    #[inline]
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        self.intersects(other).then(|| Rect {
            x_min: self.x_min.max(other.x_min),
            x_max: self.x_max.min(other.x_max),
            y_min: self.y_min.max(other.y_min),
            y_max: self.y_max.min(other.y_max),
        })
    }

    pub fn width(&self) -> u64 {
        (self.x_max - self.x_min) as u64 + 1
    }

    pub fn height(&self) -> u64 {
        (self.y_max - self.y_min) as u64 + 1
    }

    pub fn area(&self) -> u128 {
        self.width() as u128 * self.height() as u128
    }

    /// The cell of this rectangle with the smallest Z-order code.
    ///
    /// Interleaving is monotone in each coordinate, so this is the lower-left
    /// corner.
    pub fn min_corner(&self, bits_per_axis: u8) -> GridPoint {
        GridPoint {
            x: self.x_min,
            y: self.y_min,
            bits_per_axis,
        }
    }

    /// Row-major iterator over every cell.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y_min..=self.y_max).flat_map(move |y| (self.x_min..=self.x_max).map(move |x| (x, y)))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}..={}]x[{}..={}]",
            self.x_min, self.x_max, self.y_min, self.y_max
        )
    }
}

/// Inclusive range of full-precision codes on the Z-order ring.
///
/// When `wraps` is set the interval runs from `lo` up to the largest code and
/// continues from zero up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZInterval {
    lo: ZCode,
    hi: ZCode,
    wraps: bool,
}

impl ZInterval {
    /// Both endpoints must be full precision at the same resolution. The
    /// interval wraps exactly when `lo > hi`.
    pub fn new(lo: ZCode, hi: ZCode) -> Result<Self> {
        for z in [lo, hi] {
            if !z.is_full() {
                return Err(ZOrderError::NotFullPrecision {
                    len: z.len,
                    resolution: z.resolution,
                });
            }
        }
        if lo.resolution != hi.resolution {
            return Err(ZOrderError::ResolutionMismatch(lo.resolution, hi.resolution));
        }
        Ok(Self {
            lo,
            hi,
            wraps: lo.value > hi.value,
        })
    }

    /// Unchecked counterpart of [`ZInterval::new`] over raw code values.
    pub(crate) fn from_values(lo: u64, hi: u64, resolution: u8) -> Self {
        let code = |value| ZCode {
            value,
            len: resolution,
            resolution,
        };
        Self {
            lo: code(lo),
            hi: code(hi),
            wraps: lo > hi,
        }
    }

    /// The whole ring.
    pub fn full_ring(bits_per_axis: u8) -> Result<Self> {
        Ok(ZCode::root(bits_per_axis)?.interval())
    }

    pub fn lo(&self) -> ZCode {
        self.lo
    }

    pub fn hi(&self) -> ZCode {
        self.hi
    }

    pub fn wraps(&self) -> bool {
        self.wraps
    }

    pub fn resolution(&self) -> u8 {
        self.lo.resolution
    }

    /// The interval as at most two non-wrapping `(lo, hi)` value ranges.
    pub fn segments(&self) -> impl Iterator<Item = (u64, u64)> {
        let max = low_mask(self.resolution() as u32);
        let (first, second) = if self.wraps {
            ((self.lo.value, max), Some((0, self.hi.value)))
        } else {
            ((self.lo.value, self.hi.value), None)
        };
        std::iter::once(first).chain(second)
    }

    pub fn contains(&self, value: u64) -> bool {
        if self.wraps {
            value >= self.lo.value || value <= self.hi.value
        } else {
            self.lo.value <= value && value <= self.hi.value
        }
    }

    pub fn intersects(&self, other: &ZInterval) -> bool {
        self.segments()
            .any(|(a, b)| other.segments().any(|(c, d)| a <= d && c <= b))
    }

    /// Number of codes covered.
    pub fn len(&self) -> u128 {
        self.segments().map(|(a, b)| (b - a) as u128 + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for ZInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..={}]", self.lo.value, self.hi.value)?;
        if self.wraps {
            f.write_str("~")?;
        }
        Ok(())
    }
}

/// Interleaves the point's coordinates into a full-precision code.
pub fn encode(p: GridPoint) -> ZCode {
    let resolution = 2 * p.bits_per_axis;
    ZCode {
        value: (spread(p.y) << 1) | spread(p.x),
        len: resolution,
        resolution,
    }
}

/// Checked [`encode`] for raw coordinates.
pub fn encode_xy(x: u32, y: u32, bits_per_axis: u8) -> Result<ZCode> {
    Ok(encode(GridPoint::new(x, y, bits_per_axis)?))
}

pub fn decode(z: &ZCode) -> Result<GridPoint> {
    if !z.is_full() {
        return Err(ZOrderError::NotFullPrecision {
            len: z.len,
            resolution: z.resolution,
        });
    }
    Ok(decode_value(z.value, z.bits_per_axis()))
}

#[inline]
pub(crate) fn decode_value(value: u64, bits_per_axis: u8) -> GridPoint {
    GridPoint {
        x: compact(value),
        y: compact(value >> 1),
        bits_per_axis,
    }
}

pub fn truncate(z: &ZCode, new_length: u8) -> Result<ZCode> {
    z.truncate(new_length)
}

/// The rectangle of all cells whose codes extend `p`.
pub fn prefix_region(p: &ZCode) -> Rect {
    let bits = p.bits_per_axis();
    let lo = decode_value(p.lower(), bits);
    let hi = decode_value(p.upper(), bits);
    Rect {
        x_min: lo.x,
        x_max: hi.x,
        y_min: lo.y,
        y_max: hi.y,
    }
}

/// Integer order of two full-precision codes.
pub fn z_compare(a: &ZCode, b: &ZCode) -> Result<Ordering> {
    if a.resolution != b.resolution {
        return Err(ZOrderError::ResolutionMismatch(a.resolution, b.resolution));
    }
    for z in [a, b] {
        if !z.is_full() {
            return Err(ZOrderError::NotFullPrecision {
                len: z.len,
                resolution: z.resolution,
            });
        }
    }
    Ok(a.value.cmp(&b.value))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cover {
    Full,
    Partial,
}

/// Splits `rect` into sorted, disjoint Z-order intervals.
///
/// The decomposition refines prefixes one bit at a time, level by level,
/// keeping prefixes whose region lies inside `rect` and splitting those that
/// straddle its border; adjacent runs are merged. With `max_intervals ==
/// UNBOUNDED` the intervals cover exactly the cells of `rect`. With a finite
/// budget refinement stops before the merged interval count would exceed it,
/// and straddling prefixes are kept whole, giving a covering superset.
pub fn decompose_rect(rect: &Rect, bits_per_axis: u8, max_intervals: usize) -> Result<Vec<ZInterval>> {
    rect.validate(bits_per_axis)?;
    if max_intervals == 0 {
        return Err(ZOrderError::ZeroIntervalBudget);
    }
    let classify = |p: ZCode| -> Option<Cover> {
        let region = prefix_region(&p);
        if rect.contains_rect(&region) {
            Some(Cover::Full)
        } else if rect.intersects(&region) {
            Some(Cover::Partial)
        } else {
            None
        }
    };

    let root = ZCode::root(bits_per_axis)?;
    let mut frontier: Vec<(ZCode, Cover)> = classify(root).map(|c| (root, c)).into_iter().collect();
    while frontier.iter().any(|(_, c)| *c == Cover::Partial) {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for &(p, cover) in &frontier {
            match cover {
                Cover::Full => next.push((p, cover)),
                Cover::Partial => {
                    // A partial prefix is never full precision: a single cell
                    // is either inside or outside.
                    for bit in [false, true] {
                        let c = p.child(bit).expect("partial prefix below full precision");
                        if let Some(cover) = classify(c) {
                            next.push((c, cover));
                        }
                    }
                }
            }
        }
        if run_count(&next) > max_intervals {
            break;
        }
        frontier = next;
    }
    Ok(merge_runs(&frontier, root.resolution))
}

/// Exact decomposition; shorthand for `decompose_rect(rect, bits, UNBOUNDED)`.
pub fn decompose_rect_exact(rect: &Rect, bits_per_axis: u8) -> Result<Vec<ZInterval>> {
    decompose_rect(rect, bits_per_axis, UNBOUNDED)
}

fn run_count(nodes: &[(ZCode, Cover)]) -> usize {
    let mut runs = 0;
    let mut prev_hi: Option<u64> = None;
    for (p, _) in nodes {
        if prev_hi.map_or(true, |h| h.checked_add(1) != Some(p.lower())) {
            runs += 1;
        }
        prev_hi = Some(p.upper());
    }
    runs
}

fn merge_runs(nodes: &[(ZCode, Cover)], resolution: u8) -> Vec<ZInterval> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for (p, _) in nodes {
        match out.last_mut() {
            Some((_, hi)) if hi.checked_add(1) == Some(p.lower()) => *hi = p.upper(),
            _ => out.push((p.lower(), p.upper())),
        }
    }
    out.into_iter()
        .map(|(lo, hi)| ZInterval::from_values(lo, hi, resolution))
        .collect()
}

/// Linear projection of a geographic bounding box onto the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBounds {
    pub min_lon: f64,
    pub max_lon: f64,
    pub min_lat: f64,
    pub max_lat: f64,
}

impl GeoBounds {
    pub fn to_grid(&self, lon: f64, lat: f64, bits_per_axis: u8) -> Result<GridPoint> {
        check_bits(bits_per_axis)?;
        let inside = |v: f64, lo: f64, hi: f64| v.is_finite() && lo <= v && v <= hi;
        if !inside(lon, self.min_lon, self.max_lon) || !inside(lat, self.min_lat, self.max_lat) {
            return Err(ZOrderError::OutsideBounds { lon, lat });
        }
        let side = (1u64 << bits_per_axis) as f64;
        let cell = |v: f64, lo: f64, hi: f64| {
            let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
            ((t * side) as u64).min((1u64 << bits_per_axis) - 1) as u32
        };
        GridPoint::new(
            cell(lon, self.min_lon, self.max_lon),
            cell(lat, self.min_lat, self.max_lat),
            bits_per_axis,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent per-bit interleaving: walk axis bits from the top, y first.
    fn oracle_encode(x: u32, y: u32, bits: u8) -> u64 {
        let mut z = 0u64;
        for i in (0..bits).rev() {
            z = (z << 1) | ((y >> i) & 1) as u64;
            z = (z << 1) | ((x >> i) & 1) as u64;
        }
        z
    }

    fn oracle_decode(z: u64, bits: u8) -> (u32, u32) {
        let (mut x, mut y) = (0u32, 0u32);
        for i in 0..bits {
            x |= (((z >> (2 * i)) & 1) as u32) << i;
            y |= (((z >> (2 * i + 1)) & 1) as u32) << i;
        }
        (x, y)
    }

    #[test]
    fn interleaving_pattern_puts_y_first() {
        let z = encode_xy(0b01, 0b10, 2).unwrap();
        assert_eq!(z.value(), 0b1001);
        assert_eq!(z.to_string(), "1001");
        assert_eq!(decode(&z).unwrap(), GridPoint::new(0b01, 0b10, 2).unwrap());
    }

    #[test]
    fn zero_point_encodes_to_zero() {
        for bits in [1, 7, 16, 32] {
            let z = encode_xy(0, 0, bits).unwrap();
            assert_eq!(z.value(), 0);
            assert!(z.is_full());
            assert_eq!(decode(&z).unwrap(), GridPoint::new(0, 0, bits).unwrap());
        }
    }

    #[test]
    fn exhaustive_roundtrip_four_bits() {
        for x in 0..16 {
            for y in 0..16 {
                let z = encode_xy(x, y, 4).unwrap();
                assert_eq!(z.value(), oracle_encode(x, y, 4));
                let p = decode(&z).unwrap();
                assert_eq!((p.x, p.y), (x, y));
            }
        }
    }

    #[test]
    fn max_resolution_corners() {
        let z = encode_xy(u32::MAX, u32::MAX, 32).unwrap();
        assert_eq!(z.value(), u64::MAX);
        assert_eq!(z.upper(), u64::MAX);
        let root = ZCode::root(32).unwrap();
        assert_eq!((root.lower(), root.upper()), (0, u64::MAX));
        assert_eq!(root.cell_count(), 1u128 << 64);
        assert_eq!(prefix_region(&root), Rect::full(32).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(GridPoint::new(0, 0, 0), Err(ZOrderError::UnsupportedResolution(0)));
        assert_eq!(GridPoint::new(0, 0, 33), Err(ZOrderError::UnsupportedResolution(33)));
        assert!(matches!(GridPoint::new(4, 0, 2), Err(ZOrderError::OutsideGrid { .. })));
        let prefix = ZCode::parse("10", 2).unwrap();
        assert!(matches!(decode(&prefix), Err(ZOrderError::NotFullPrecision { .. })));
        assert!(ZCode::parse("10a", 2).is_err());
        assert!(ZCode::parse("10101", 2).is_err());
        assert!(ZCode::new(0b100, 2, 4).is_err());
    }

    #[test]
    fn truncate_drops_trailing_bits() {
        let z = ZCode::parse("1001", 2).unwrap();
        assert_eq!(truncate(&z, 2).unwrap(), ZCode::parse("10", 2).unwrap());
        assert_eq!(truncate(&z, 4).unwrap(), z);
        assert_eq!(truncate(&z, 0).unwrap(), ZCode::root(2).unwrap());
        assert_eq!(
            truncate(&z.truncate(2).unwrap(), 3),
            Err(ZOrderError::TruncateBeyondLength { len: 2, requested: 3 })
        );
    }

    #[test]
    fn prefix_region_quadrant_layout() {
        assert_eq!(prefix_region(&ZCode::root(2).unwrap()), Rect::full(2).unwrap());
        // 10: y high bit set, x high bit clear -> upper-left 2x2 block.
        let r = prefix_region(&ZCode::parse("10", 2).unwrap());
        assert_eq!(r, Rect { x_min: 0, x_max: 1, y_min: 2, y_max: 3 });
        // Odd length: one y bit fixed, region is 4 wide and 2 tall.
        let r = prefix_region(&ZCode::parse("1", 2).unwrap());
        assert_eq!(r, Rect { x_min: 0, x_max: 3, y_min: 2, y_max: 3 });
    }

    #[test]
    fn z_compare_is_integer_order() {
        let c = |s| ZCode::parse(s, 2).unwrap();
        assert_eq!(z_compare(&c("0000"), &c("0001")).unwrap(), Ordering::Less);
        assert_eq!(z_compare(&c("1001"), &c("0110")).unwrap(), Ordering::Greater);
        assert!(z_compare(&c("10"), &c("1001")).is_err());
        let other = ZCode::full(0, 3).unwrap();
        assert_eq!(
            z_compare(&c("0000"), &other),
            Err(ZOrderError::ResolutionMismatch(4, 6))
        );
        for a in 0..256u64 {
            for b in (0..256u64).step_by(7) {
                let (za, zb) = (ZCode::full(a, 4).unwrap(), ZCode::full(b, 4).unwrap());
                assert_eq!(z_compare(&za, &zb).unwrap(), a.cmp(&b));
            }
        }
    }

    #[test]
    fn code_order_is_lexicographic() {
        let mut codes: Vec<ZCode> = ["1", "01", "0", "001", "00", ""]
            .iter()
            .map(|s| ZCode::parse(s, 2).unwrap())
            .collect();
        codes.sort();
        let strings: Vec<String> = codes.iter().map(ZCode::to_string).collect();
        assert_eq!(strings, ["", "0", "00", "001", "01", "1"]);
    }

    #[test]
    fn decompose_aligned_and_full() {
        let p = ZCode::parse("0110", 3).unwrap();
        let iv = decompose_rect_exact(&prefix_region(&p), 3).unwrap();
        assert_eq!(iv, vec![p.interval()]);
        let iv = decompose_rect_exact(&Rect::full(5).unwrap(), 5).unwrap();
        assert_eq!(iv.len(), 1);
        assert_eq!((iv[0].lo().value(), iv[0].hi().value()), (0, 1023));
        assert_eq!(
            decompose_rect(&Rect::full(5).unwrap(), 5, 0),
            Err(ZOrderError::ZeroIntervalBudget)
        );
        assert!(decompose_rect(&Rect { x_min: 0, x_max: 8, y_min: 0, y_max: 0 }, 3, 4).is_err());
    }

    #[test]
    fn bounded_decomposition_respects_budget() {
        let r = Rect { x_min: 3, x_max: 200, y_min: 17, y_max: 101 };
        let exact = decompose_rect_exact(&r, 8).unwrap();
        assert!(exact.len() > 4);
        for budget in 1..=exact.len() + 2 {
            let iv = decompose_rect(&r, 8, budget).unwrap();
            assert!(iv.len() <= budget);
            let covered: u128 = iv.iter().map(ZInterval::len).sum();
            assert!(covered >= r.area());
        }
        assert_eq!(decompose_rect(&r, 8, exact.len()).unwrap(), exact);
    }

    #[test]
    fn geo_projection_maps_corners() {
        let b = GeoBounds { min_lon: 9.0, max_lon: 17.0, min_lat: 46.0, max_lat: 49.0 };
        assert_eq!(b.to_grid(9.0, 46.0, 4).unwrap(), GridPoint::new(0, 0, 4).unwrap());
        assert_eq!(b.to_grid(17.0, 49.0, 4).unwrap(), GridPoint::new(15, 15, 4).unwrap());
        assert_eq!(b.to_grid(13.0, 47.5, 4).unwrap(), GridPoint::new(8, 8, 4).unwrap());
        assert!(b.to_grid(8.0, 47.0, 4).is_err());
        assert!(b.to_grid(f64::NAN, 47.0, 4).is_err());
    }

    fn code_strategy(bits: u8) -> impl Strategy<Value = ZCode> {
        let res = 2 * bits;
        (0..=res, any::<u64>()).prop_map(move |(len, v)| {
            ZCode::new(v & low_mask(len as u32), len, res).unwrap()
        })
    }

    fn rect_strategy(bits: u8) -> impl Strategy<Value = Rect> {
        let max = (1u32 << bits) - 1;
        (0..=max, 0..=max, 0..=max, 0..=max).prop_map(|(a, b, c, d)| Rect {
            x_min: a.min(b),
            x_max: a.max(b),
            y_min: c.min(d),
            y_max: c.max(d),
        })
    }

    proptest! {
        #[test]
        fn random_codes_roundtrip(v in any::<u16>()) {
            let z = ZCode::full(v as u64, 8).unwrap();
            let p = decode(&z).unwrap();
            prop_assert_eq!((p.x, p.y), oracle_decode(v as u64, 8));
            prop_assert_eq!(encode(p), z);
        }

        #[test]
        fn roundtrip_at_any_resolution(bits in 1u8..=32, x in any::<u32>(), y in any::<u32>()) {
            let mask = low_mask(bits as u32) as u32;
            let (x, y) = (x & mask, y & mask);
            let z = encode_xy(x, y, bits).unwrap();
            prop_assert_eq!(z.value(), oracle_encode(x, y, bits));
            let p = decode(&z).unwrap();
            prop_assert_eq!((p.x, p.y), (x, y));
        }

        #[test]
        fn prefix_region_is_exactly_the_extensions(p in code_strategy(4)) {
            let region = prefix_region(&p);
            let extensions: Vec<(u32, u32)> = (p.lower()..=p.upper())
                .map(|v| oracle_decode(v, 4))
                .collect();
            prop_assert_eq!(region.area(), p.cell_count());
            prop_assert_eq!(extensions.len() as u128, region.area());
            for (x, y) in extensions {
                prop_assert!(region.contains(x, y));
            }
            // 1:1 for even lengths, 2:1 (wide) for odd.
            let ratio = if p.len() % 2 == 0 { 1 } else { 2 };
            prop_assert_eq!(region.width(), ratio * region.height());
        }

        #[test]
        fn truncation_grows_region_monotonically(v in any::<u16>(), k in 0u8..=16) {
            let z = ZCode::full(v as u64, 8).unwrap();
            let t = truncate(&z, k).unwrap();
            prop_assert!(t.is_prefix_of(&z));
            let outer = prefix_region(&t);
            for (x, y) in prefix_region(&z).cells() {
                prop_assert!(outer.contains(x, y));
            }
            if k > 0 {
                let coarser = truncate(&t, k - 1).unwrap();
                prop_assert!(coarser.is_prefix_of(&t));
                prop_assert!(prefix_region(&coarser).contains_rect(&outer));
            }
        }

        #[test]
        fn prefix_relation_is_transitive(v in any::<u16>(), a in 0u8..=16, b in 0u8..=16) {
            let z = ZCode::full(v as u64, 8).unwrap();
            let (short, long) = (a.min(b), a.max(b));
            let p = z.truncate(long).unwrap();
            let q = z.truncate(short).unwrap();
            prop_assert!(q.is_prefix_of(&p) && p.is_prefix_of(&z) && q.is_prefix_of(&z));
        }

        #[test]
        fn exact_decomposition_matches_enumeration(r in rect_strategy(8)) {
            let iv = decompose_rect_exact(&r, 8).unwrap();
            let mut expected: Vec<u64> = r.cells().map(|(x, y)| oracle_encode(x, y, 8)).collect();
            expected.sort_unstable();
            let covered: Vec<u64> = iv.iter().flat_map(|i| i.lo().value()..=i.hi().value()).collect();
            prop_assert_eq!(covered, expected);
            for w in iv.windows(2) {
                prop_assert!(w[0].hi().value() + 1 < w[1].lo().value());
            }
        }

        #[test]
        fn bounded_decomposition_is_sorted_superset(r in rect_strategy(8), budget in 1usize..12) {
            let iv = decompose_rect(&r, 8, budget).unwrap();
            prop_assert!(iv.len() <= budget);
            for w in iv.windows(2) {
                prop_assert!(w[0].hi().value() < w[1].lo().value());
            }
            for (x, y) in r.cells() {
                let z = oracle_encode(x, y, 8);
                prop_assert!(iv.iter().any(|i| i.contains(z)));
            }
        }

        #[test]
        fn wrapping_interval_contains(lo in any::<u8>(), hi in any::<u8>(), v in any::<u8>()) {
            let iv = ZInterval::new(ZCode::full(lo as u64, 4).unwrap(), ZCode::full(hi as u64, 4).unwrap()).unwrap();
            let expected = if lo <= hi { lo <= v && v <= hi } else { v >= lo || v <= hi };
            prop_assert_eq!(iv.contains(v as u64), expected);
            prop_assert_eq!(iv.wraps(), lo > hi);
            let brute = (0..=255u8).filter(|&c| iv.contains(c as u64)).count() as u128;
            prop_assert_eq!(iv.len(), brute);
        }
    }
}
