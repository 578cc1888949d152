//! The eight rotations and reflections of the pixel grid.

use super::ClothingMap;
use crate::error::Result;
use crate::formats::{BBox, MultibandFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dihedral {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    FlipHorizontal,
    FlipVertical,
    Transpose,
    AntiTranspose,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::Identity,
        Dihedral::Rot90,
        Dihedral::Rot180,
        Dihedral::Rot270,
        Dihedral::FlipHorizontal,
        Dihedral::FlipVertical,
        Dihedral::Transpose,
        Dihedral::AntiTranspose,
    ];

    fn swaps_axes(self) -> bool {
        matches!(
            self,
            Dihedral::Rot90 | Dihedral::Rot270 | Dihedral::Transpose | Dihedral::AntiTranspose
        )
    }

    /// Output size for a `w × h` input.
    pub fn dims(self, w: usize, h: usize) -> (usize, usize) {
        if self.swaps_axes() {
            (h, w)
        } else {
            (w, h)
        }
    }

    /// Where input pixel `(x, y)` lands. Rotations are clockwise.
    pub fn map(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        match self {
            Dihedral::Identity => (x, y),
            Dihedral::Rot90 => (h - 1 - y, x),
            Dihedral::Rot180 => (w - 1 - x, h - 1 - y),
            Dihedral::Rot270 => (y, w - 1 - x),
            Dihedral::FlipHorizontal => (w - 1 - x, y),
            Dihedral::FlipVertical => (x, h - 1 - y),
            Dihedral::Transpose => (y, x),
            Dihedral::AntiTranspose => (h - 1 - y, w - 1 - x),
        }
    }

    fn permute<T: Copy + Default>(self, src: &[T], w: usize, h: usize) -> Vec<T> {
        let (ow, _) = self.dims(w, h);
        let mut out = vec![T::default(); src.len()];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = self.map(x, y, w, h);
                out[ny * ow + nx] = src[y * w + x];
            }
        }
        out
    }

    pub fn apply_frame(self, frame: &MultibandFrame) -> Result<MultibandFrame> {
        let (w, h) = (frame.width(), frame.height());
        let mut data = Vec::with_capacity(frame.data().len());
        for b in 0..frame.bands() {
            data.extend(self.permute(frame.band(b), w, h));
        }
        let (ow, oh) = self.dims(w, h);
        frame.reshaped(ow, oh, data)
    }

    pub fn apply_map(self, map: &ClothingMap) -> ClothingMap {
        let (ow, oh) = self.dims(map.width, map.height);
        ClothingMap {
            width: ow,
            height: oh,
            mask: self.permute(&map.mask, map.width, map.height),
        }
    }

    /// Image of a box inside a `w × h` frame.
    pub fn apply_box(self, b: BBox, w: usize, h: usize) -> BBox {
        let (ax, ay) = self.map(b.x as usize, b.y as usize, w, h);
        let (bx, by) = self.map((b.right() - 1) as usize, (b.bottom() - 1) as usize, w, h);
        let (x0, x1) = (ax.min(bx), ax.max(bx));
        let (y0, y1) = (ay.min(by), ay.max(by));
        BBox::new(x0 as i64, y0 as i64, (x1 - x0 + 1) as i64, (y1 - y0 + 1) as i64)
    }
}
