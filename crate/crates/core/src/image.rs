//! Row-major rasters: intensities in `[0, 1]` and binary masks.

use crate::error::{Error, Result};

/// Grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {height}x{width} image",
                data.len()
            )));
        }
        if let Some(v) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::DimensionMismatch(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sets a pixel, clamping the value into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.width + col] = v.clamp(0.0, 1.0);
    }

    /// Foreground where the intensity is strictly greater than `t`.
    pub fn threshold(&self, t: f64) -> BinaryImage {
        BinaryImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| v > t).collect(),
        }
    }
}

/// Binary mask; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {height}x{width} mask",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    /// Builds a mask from rows of `0`/`1` (anything nonzero is foreground).
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(height * width);
        for r in rows {
            assert_eq!(r.as_ref().len(), width, "ragged rows");
            data.extend(r.as_ref().iter().map(|&v| v != 0));
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn get_or_bg(&self, row: isize, col: isize) -> bool {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            false
        } else {
            self.data[row as usize * self.width + col as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.data[row * self.width + col] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn same_dims(&self, other: &BinaryImage) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    /// Intensity 1.0 for foreground, 0.0 otherwise.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Copy surrounded by `pad` pixels of background on every side.
    pub fn padded(&self, pad: usize) -> BinaryImage {
        let (h, w) = (self.height + 2 * pad, self.width + 2 * pad);
        let mut out = BinaryImage::empty(h, w);
        for r in 0..self.height {
            for c in 0..self.width {
                out.set(r + pad, c + pad, self.get(r, c));
            }
        }
        out
    }
}

/// Thresholds `img` at `t`: a pixel is foreground iff its intensity is `> t`.
pub fn threshold(img: &GrayImage, t: f64) -> BinaryImage {
    img.threshold(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let img = GrayImage::new(1, 2, vec![0.4, 0.6]).unwrap();
        assert_eq!(threshold(&img, 0.5).data(), &[false, true]);
        assert!(threshold(&img, 1.0).is_empty());
        let pos = GrayImage::new(1, 3, vec![0.1, 0.5, 1.0]).unwrap();
        assert_eq!(threshold(&pos, 0.0).count(), 3);
    }

    #[test]
    fn rejects_bad_intensities() {
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn threshold_is_monotone() {
        let data: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).fract()).collect();
        let img = GrayImage::new(5, 10, data).unwrap();
        for (i, t1) in [0.0, 0.2, 0.5].iter().enumerate() {
            for t2 in [0.2, 0.5, 0.9].iter().skip(i) {
                let lo = img.threshold(*t1);
                let hi = img.threshold(*t2);
                assert!(hi.data().iter().zip(lo.data()).all(|(h, l)| !h || *l));
            }
        }
    }
}
