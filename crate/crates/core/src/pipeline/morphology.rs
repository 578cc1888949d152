//! Binary morphology with square structuring elements.
//!
//! Windows are clipped at the image border: pixels outside the frame neither
//! erode nor dilate their neighbours. A square window is the product of two
//! intervals, so each operator runs as a row pass followed by a column pass.

use super::ClothingMap;

#[derive(Clone, Copy)]
enum Op {
    Erode,
    Dilate,
}

/// Sliding count of true values over `[i - r, i + r]` along one line.
fn line_pass(src: &[bool], dst: &mut [bool], r: usize, op: Op) {
    let n = src.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u32);
    for &v in src {
        prefix.push(prefix.last().unwrap() + v as u32);
    }
    for i in 0..n {
        let lo = i.saturating_sub(r);
        let hi = (i + r + 1).min(n);
        let count = prefix[hi] - prefix[lo];
        dst[i] = match op {
            Op::Erode => count as usize == hi - lo,
            Op::Dilate => count > 0,
        };
    }
}

fn apply(map: &ClothingMap, kernel: usize, op: Op) -> ClothingMap {
    let r = kernel / 2;
    if r == 0 {
        return map.clone();
    }
    let (w, h) = (map.width, map.height);
    let mut rows = vec![false; w * h];
    for y in 0..h {
        line_pass(&map.mask[y * w..(y + 1) * w], &mut rows[y * w..(y + 1) * w], r, op);
    }
    let mut out = vec![false; w * h];
    let mut col = vec![false; h];
    let mut col_out = vec![false; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = rows[y * w + x];
        }
        line_pass(&col, &mut col_out, r, op);
        for y in 0..h {
            out[y * w + x] = col_out[y];
        }
    }
    ClothingMap { width: w, height: h, mask: out }
}

/// A pixel survives if every pixel of the (clipped) `kernel × kernel`
/// window around it is set.
pub fn erode(map: &ClothingMap, kernel: usize) -> ClothingMap {
    apply(map, kernel, Op::Erode)
}

/// A pixel is set if any pixel of the (clipped) window around it is set.
pub fn dilate(map: &ClothingMap, kernel: usize) -> ClothingMap {
    apply(map, kernel, Op::Dilate)
}

pub fn open(map: &ClothingMap, kernel: usize) -> ClothingMap {
    dilate(&erode(map, kernel), kernel)
}

/// `iterations` dilations followed by as many erosions.
pub fn close(map: &ClothingMap, kernel: usize, iterations: usize) -> ClothingMap {
    let mut m = map.clone();
    for _ in 0..iterations {
        m = dilate(&m, kernel);
    }
    for _ in 0..iterations {
        m = erode(&m, kernel);
    }
    m
}
