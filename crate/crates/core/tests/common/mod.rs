//! Independent reference implementations and generators shared by the
//! integration tests. Everything here is written the slow, obvious way.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use hitomi::formats::LabelTable;
use hitomi::mlp::{Activation, MlpModel};
use hitomi::rng::SplitMix64;
use hitomi::{BBox, ClothingMap, MultibandFrame};

pub fn random_frame(rng: &mut SplitMix64, w: usize, h: usize) -> MultibandFrame {
    let data = (0..w * h * 4).map(|_| rng.uniform(0.0, 1.2) as f32).collect();
    MultibandFrame::zeros(w, h).with_data(data).unwrap()
}

pub fn random_labels(rng: &mut SplitMix64, c: usize) -> LabelTable {
    let mut flags: Vec<bool> = (0..c).map(|_| rng.below(2) == 0).collect();
    flags[0] = true;
    flags[c - 1] = false;
    LabelTable::new((0..c).map(|i| format!("l{i}")).collect(), flags).unwrap()
}

/// He-initialised model with non-zero biases.
pub fn random_model(rng: &mut SplitMix64, hidden: &[usize], c: usize) -> MlpModel {
    let labels = random_labels(rng, c);
    let mut m = MlpModel::init(4, hidden, labels, rng.next_u64()).unwrap();
    for l in m.layers_mut() {
        for b in &mut l.bias {
            *b = rng.uniform(-0.5, 0.5);
        }
    }
    m
}

/// Dense layers as explicit loops over rows and columns.
pub fn naive_forward(model: &MlpModel, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for l in model.layers() {
        let mut z = vec![0.0; l.out_dim];
        for i in 0..l.out_dim {
            let mut s = l.bias[i];
            for j in 0..l.in_dim {
                s += l.weights[i * l.in_dim + j] * a[j];
            }
            z[i] = match l.activation {
                Activation::Relu => s.max(0.0),
                Activation::Identity => s,
            };
        }
        a = z;
    }
    a
}

pub fn random_mask(rng: &mut SplitMix64, w: usize, h: usize, density: f64) -> ClothingMap {
    ClothingMap::from_fn(w, h, |_, _| rng.next_f64() < density)
}

/// Blobs of random rectangles: closer to real clothing maps than i.i.d. noise.
pub fn blobby_mask(rng: &mut SplitMix64, w: usize, h: usize) -> ClothingMap {
    let mut m = ClothingMap::from_fn(w, h, |_, _| false);
    for _ in 0..1 + rng.below(6) {
        let (x0, y0) = (rng.below(w), rng.below(h));
        let (bw, bh) = (1 + rng.below(w / 2 + 1), 1 + rng.below(h / 2 + 1));
        for y in y0..(y0 + bh).min(h) {
            for x in x0..(x0 + bw).min(w) {
                m.mask[y * w + x] = true;
            }
        }
    }
    for p in m.mask.iter_mut() {
        if rng.next_f64() < 0.05 {
            *p = !*p;
        }
    }
    m
}

/// Window min (`want = true`) or max over the clipped `k × k` square.
fn window(m: &ClothingMap, k: usize, all: bool) -> ClothingMap {
    let r = (k / 2) as i64;
    ClothingMap::from_fn(m.width, m.height, |x, y| {
        let mut cells = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if xx >= 0 && yy >= 0 && (xx as usize) < m.width && (yy as usize) < m.height {
                    cells.push(m.get(xx as usize, yy as usize));
                }
            }
        }
        if all {
            cells.iter().all(|&v| v)
        } else {
            cells.iter().any(|&v| v)
        }
    })
}

pub fn brute_erode(m: &ClothingMap, k: usize) -> ClothingMap {
    window(m, k, true)
}

pub fn brute_dilate(m: &ClothingMap, k: usize) -> ClothingMap {
    window(m, k, false)
}

pub fn brute_open(m: &ClothingMap, k: usize) -> ClothingMap {
    brute_dilate(&brute_erode(m, k), k)
}

pub fn brute_close(m: &ClothingMap, k: usize, iterations: usize) -> ClothingMap {
    let mut out = m.clone();
    for _ in 0..iterations {
        out = brute_dilate(&out, k);
    }
    for _ in 0..iterations {
        out = brute_erode(&out, k);
    }
    out
}

/// Breadth-first flood fill seeded in row-major order; each component's
/// pixels sorted row-major.
pub fn flood_components(m: &ClothingMap, eight: bool) -> Vec<Vec<(usize, usize)>> {
    let (w, h) = (m.width, m.height);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let offsets: Vec<(i64, i64)> = if eight {
        vec![(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    } else {
        vec![(0, -1), (-1, 0), (1, 0), (0, 1)]
    };
    for y in 0..h {
        for x in 0..w {
            if !m.get(x, y) || seen[y * w + x] {
                continue;
            }
            let mut comp = Vec::new();
            let mut q = VecDeque::from([(x, y)]);
            seen[y * w + x] = true;
            while let Some((cx, cy)) = q.pop_front() {
                comp.push((cx, cy));
                for &(dx, dy) in &offsets {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if m.get(nx, ny) && !seen[ny * w + nx] {
                        seen[ny * w + nx] = true;
                        q.push_back((nx, ny));
                    }
                }
            }
            comp.sort_by_key(|&(px, py)| (py, px));
            out.push(comp);
        }
    }
    out
}

pub fn brute_denoise(m: &ClothingMap, k: usize, min_area: usize, eight: bool) -> ClothingMap {
    let opened = brute_open(m, k);
    let keep: Vec<(usize, usize)> = flood_components(&opened, eight)
        .into_iter()
        .filter(|c| c.len() >= min_area)
        .flatten()
        .collect();
    ClothingMap::from_fn(m.width, m.height, |x, y| keep.contains(&(x, y)))
}

/// Pixel-set intersection over union.
pub fn brute_iou(a: &BBox, b: &BBox) -> f64 {
    let cover = |bx: &BBox, x: i64, y: i64| x >= bx.x && x < bx.x + bx.w && y >= bx.y && y < bx.y + bx.h;
    let (x0, y0) = (a.x.min(b.x), a.y.min(b.y));
    let (x1, y1) = ((a.x + a.w).max(b.x + b.w), (a.y + a.h).max(b.y + b.h));
    let (mut inter, mut union) = (0u64, 0u64);
    for y in y0..y1 {
        for x in x0..x1 {
            let (ia, ib) = (cover(a, x, y), cover(b, x, y));
            inter += (ia && ib) as u64;
            union += (ia || ib) as u64;
        }
    }
    inter as f64 / union as f64
}

/// Largest number of one-to-one (det, gt) pairs with IoU ≥ `tau`, by
/// trying every assignment.
pub fn max_matching(dets: &[BBox], gts: &[BBox], tau: f64) -> usize {
    fn go(i: usize, ok: &[Vec<bool>], used: &mut Vec<bool>) -> usize {
        if i == ok.len() {
            return 0;
        }
        let mut best = go(i + 1, ok, used);
        for g in 0..used.len() {
            if ok[i][g] && !used[g] {
                used[g] = true;
                best = best.max(1 + go(i + 1, ok, used));
                used[g] = false;
            }
        }
        best
    }
    let ok: Vec<Vec<bool>> = dets
        .iter()
        .map(|d| gts.iter().map(|g| brute_iou(d, g) >= tau).collect())
        .collect();
    go(0, &ok, &mut vec![false; gts.len()])
}

/// All-points AP: at each recall step, the best precision reachable at that
/// recall or beyond, times the recall gained.
pub fn envelope_ap(points: &[(f64, f64)]) -> f64 {
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    for &(r, _) in points {
        if r > prev_r {
            let p = points.iter().filter(|q| q.0 >= r).map(|q| q.1).fold(0.0, f64::max);
            ap += (r - prev_r) * p;
            prev_r = r;
        }
    }
    ap
}

/// The detector as shipped: builtin library, default dataset and training
/// settings.
pub fn trained_model(seed: u64) -> MlpModel {
    use hitomi::synth::{builtin_library, generate_training_set, DatasetConfig, Illuminant};
    let cfg = hitomi::TrainConfig { seed, ..Default::default() };
    let ds = generate_training_set(&builtin_library(), &Illuminant::daylight(), &DatasetConfig::default(), &cfg, seed).unwrap();
    hitomi::mlp::train(&ds, &cfg).unwrap().0
}
