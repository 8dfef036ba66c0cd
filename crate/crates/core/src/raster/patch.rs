use serde::{Deserialize, Serialize};

use super::RasterError;

/// Window identity of a patch inside its base image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub base_image_id: String,
    pub origin_x: u32,
    pub origin_y: u32,
}

/// In-memory pixel grid. Values are row-major, channel-interleaved reals in
/// `[0, 1]`; one channel for masks and SAR, three for RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterPatch {
    width: u32,
    height: u32,
    channels: u8,
    pixels: Vec<f32>,
    pub provenance: Option<Provenance>,
}

impl RasterPatch {
    pub fn from_pixels(
        width: u32,
        height: u32,
        channels: u8,
        pixels: Vec<f32>,
    ) -> Result<Self, RasterError> {
        if channels != 1 && channels != 3 {
            return Err(RasterError::InvalidChannels(channels));
        }
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyPatch);
        }
        let expected = width as usize * height as usize * channels as usize;
        if pixels.len() != expected {
            return Err(RasterError::PixelBufferSize {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
            provenance: None,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: f32) -> Result<Self, RasterError> {
        let len = width as usize * height as usize * channels as usize;
        Self::from_pixels(width, height, channels, vec![value; len])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    fn offset(&self, x: u32, y: u32, c: u8) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    pub fn get(&self, x: u32, y: u32, c: u8) -> f32 {
        self.pixels[self.offset(x, y, c)]
    }

    pub fn set(&mut self, x: u32, y: u32, c: u8, value: f32) {
        let i = self.offset(x, y, c);
        self.pixels[i] = value;
    }

    /// Writes `color` (one value per channel) over an axis-aligned rectangle,
    /// clipped to the patch bounds.
    pub fn fill_rect(&mut self, x: u32, y: u32, w: u32, h: u32, color: &[f32]) {
        assert_eq!(color.len(), self.channels as usize, "color arity");
        let x1 = (x + w).min(self.width);
        let y1 = (y + h).min(self.height);
        for py in y.min(self.height)..y1 {
            for px in x.min(self.width)..x1 {
                for (c, v) in color.iter().enumerate() {
                    self.set(px, py, c as u8, *v);
                }
            }
        }
    }

    /// Copies the `w x h` window at `(x, y)` into a new patch. The caller is
    /// responsible for provenance on the result.
    pub(crate) fn extract_window(
        &self,
        x: u32,
        y: u32,
        w: u32,
        h: u32,
    ) -> Result<RasterPatch, RasterError> {
        if w == 0 || h == 0 {
            return Err(RasterError::EmptyPatch);
        }
        if x.checked_add(w).map_or(true, |e| e > self.width)
            || y.checked_add(h).map_or(true, |e| e > self.height)
        {
            return Err(RasterError::ProvenanceOutOfBounds);
        }
        let mut pixels = Vec::with_capacity(w as usize * h as usize * self.channels as usize);
        for py in y..y + h {
            let row = self.offset(x, py, 0);
            pixels.extend_from_slice(&self.pixels[row..row + w as usize * self.channels as usize]);
        }
        RasterPatch::from_pixels(w, h, self.channels, pixels)
    }
}

/// Fixed-size bitset over a pixel grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    blocks: Vec<u64>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        let bits = width as usize * height as usize;
        Self {
            width,
            height,
            blocks: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut mask = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, x: u32, y: u32) -> (usize, u64) {
        debug_assert!(x < self.width && y < self.height);
        let bit = y as usize * self.width as usize + x as usize;
        (bit / 64, 1u64 << (bit % 64))
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        let (block, bit) = self.index(x, y);
        self.blocks[block] & bit != 0
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let (block, bit) = self.index(x, y);
        if value {
            self.blocks[block] |= bit;
        } else {
            self.blocks[block] &= !bit;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn intersection_count(&self, other: &Self) -> usize {
        debug_assert!(self.same_dims(other));
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn union_count(&self, other: &Self) -> usize {
        debug_assert!(self.same_dims(other));
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Mean foreground coordinate (pixel centers), or `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0usize;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    n += 1;
                    sx += x as f64 + 0.5;
                    sy += y as f64 + 0.5;
                }
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }
}
