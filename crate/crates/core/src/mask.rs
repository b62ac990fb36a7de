//! Binary segmentation masks and their canonical run-length text form.
//!
//! Pixels are stored row-major (row = y, col = x, zero-based) in a packed
//! bitset. The canonical RLE is a comma-separated list of alternating
//! zero/one run lengths that always starts with a zero-run.

use std::fmt;

use crate::error::MaskError;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.count())
            .finish()
    }
}

impl Mask {
    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        let len = width as usize * height as usize;
        Ok(Self {
            width,
            height,
            words: vec![0; len.div_ceil(WORD)],
        })
    }

    pub fn from_bits(width: u32, height: u32, bits: &[bool]) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        if bits.len() != mask.len() {
            return Err(MaskError::LengthMismatch {
                expected: mask.len(),
                actual: bits.len(),
            });
        }
        for (i, &b) in bits.iter().enumerate() {
            if b {
                mask.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        Ok(mask)
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }

    /// Empty mask with the same canvas.
    pub fn blank_like(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            words: vec![0; self.words.len()],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of pixels on the canvas.
    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn same_shape(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let i = self.index(x, y);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let i = self.index(x, y);
        if value {
            self.words[i / WORD] |= 1 << (i % WORD);
        } else {
            self.words[i / WORD] &= !(1 << (i % WORD));
        }
    }

    /// Bit at row-major position `i`.
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Foreground pixel count.
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.bit(i)).collect()
    }

    /// Foreground pixels as `(x, y)` in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let i = wi * WORD + b;
                Some(((i % w) as u32, (i / w) as u32))
            })
        })
    }

    fn check_shape(&self, other: &Mask) -> Result<(), MaskError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(MaskError::ShapeMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            })
        }
    }

    pub fn intersection_count(&self, other: &Mask) -> Result<usize, MaskError> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union_count(&self, other: &Mask) -> Result<usize, MaskError> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum())
    }

    /// Jaccard overlap; 1.0 when both masks are empty.
    pub fn iou(&self, other: &Mask) -> Result<f64, MaskError> {
        let union = self.union_count(other)?;
        if union == 0 {
            return Ok(1.0);
        }
        Ok(self.intersection_count(other)? as f64 / union as f64)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(out)
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask, MaskError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        Ok(out)
    }

    /// Foreground pixels that are 4-adjacent to background or to the canvas edge.
    pub fn boundary(&self) -> Mask {
        let mut out = self.blank_like();
        let (w, h) = (self.width, self.height);
        for (x, y) in self.iter_ones() {
            let edge = x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !self.get(x - 1, y)
                || !self.get(x + 1, y)
                || !self.get(x, y - 1)
                || !self.get(x, y + 1);
            if edge {
                out.set(x, y, true);
            }
        }
        out
    }

    /// Dilation by a (2r+1)x(2r+1) square, i.e. every pixel within Chebyshev
    /// distance `radius` of the foreground.
    pub fn dilate_square(&self, radius: u32) -> Mask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let r = radius as i64;
        // Separable: horizontal pass then vertical pass.
        let mut horiz = self.blank_like();
        for y in 0..h {
            for x in 0..w {
                let lo = (x - r).max(0);
                let hi = (x + r).min(w - 1);
                if (lo..=hi).any(|xx| self.get(xx as u32, y as u32)) {
                    horiz.set(x as u32, y as u32, true);
                }
            }
        }
        let mut out = self.blank_like();
        for y in 0..h {
            let lo = (y - r).max(0);
            let hi = (y + r).min(h - 1);
            for x in 0..w {
                if (lo..=hi).any(|yy| horiz.get(x as u32, yy as u32)) {
                    out.set(x as u32, y as u32, true);
                }
            }
        }
        out
    }

    /// Erosion with the 4-neighbourhood cross, applied `steps` times. Pixels
    /// outside the canvas count as background.
    pub fn erode_cross(&self, steps: u32) -> Mask {
        let mut cur = self.clone();
        for _ in 0..steps {
            let edge = cur.boundary();
            for (x, y) in edge.iter_ones() {
                cur.set(x, y, false);
            }
        }
        cur
    }

    /// Canonical RLE: alternating zero/one run lengths, starting with zeros.
    pub fn to_rle(&self) -> String {
        let mut counts: Vec<usize> = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for i in 0..self.len() {
            let b = self.bit(i);
            if b == current {
                run += 1;
            } else {
                counts.push(run);
                current = b;
                run = 1;
            }
        }
        counts.push(run);
        let mut out = String::with_capacity(counts.len() * 3);
        for (i, c) in counts.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&c.to_string());
        }
        out
    }

    /// Parses the canonical RLE for a `width` x `height` canvas.
    pub fn from_rle(width: u32, height: u32, rle: &str) -> Result<Self, MaskError> {
        let mut mask = Self::empty(width, height)?;
        let total = mask.len();
        let mut pos = 0usize;
        let mut value = false;
        if rle.is_empty() {
            return Err(MaskError::Rle("empty run list".into()));
        }
        for (i, field) in rle.split(',').enumerate() {
            if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
                return Err(MaskError::Rle(format!("run {i} is not a decimal count: {field:?}")));
            }
            let run: usize = field
                .parse()
                .map_err(|_| MaskError::Rle(format!("run {i} overflows: {field}")))?;
            // Only the leading zero-run may be empty.
            if run == 0 && i > 0 {
                return Err(MaskError::Rle(format!("zero-length run at position {i}")));
            }
            if pos + run > total {
                return Err(MaskError::Rle(format!(
                    "runs cover more than {total} pixels"
                )));
            }
            if value {
                for p in pos..pos + run {
                    mask.words[p / WORD] |= 1 << (p % WORD);
                }
            }
            pos += run;
            value = !value;
        }
        if pos != total {
            return Err(MaskError::Rle(format!(
                "runs cover {pos} of {total} pixels"
            )));
        }
        Ok(mask)
    }
}

/// Canonical byte form of a mask (ASCII RLE).
pub fn serialize_mask(mask: &Mask) -> Vec<u8> {
    mask.to_rle().into_bytes()
}

pub fn deserialize_mask(width: u32, height: u32, bytes: &[u8]) -> Result<Mask, MaskError> {
    let text = std::str::from_utf8(bytes).map_err(|_| MaskError::Rle("not ASCII".into()))?;
    Mask::from_rle(width, height, text)
}
