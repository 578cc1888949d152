//! Connected-component labelling and box fitting.

use serde::{Deserialize, Serialize};

use super::ClothingMap;
use crate::formats::{BBox, DetectionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Maximal connected set of clothing pixels, as `(x, y)` in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub pixels: Vec<(usize, usize)>,
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    /// Tight half-open bounds.
    pub fn bounds(&self) -> BBox {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for &(x, y) in &self.pixels {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        BBox::new(x0 as i64, y0 as i64, (x1 - x0 + 1) as i64, (y1 - y0 + 1) as i64)
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    // Keep the smaller label as root so roots follow scan order.
    if ra < rb {
        parent[rb as usize] = ra;
    } else if rb < ra {
        parent[ra as usize] = rb;
    }
}

/// Two-pass union-find labelling. Components are ordered by their first
/// pixel in row-major scan order.
pub fn connected_components(map: &ClothingMap, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (map.width, map.height);
    const NONE: u32 = u32::MAX;
    let mut labels = vec![NONE; w * h];
    let mut parent: Vec<u32> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !map.mask[i] {
                continue;
            }
            let mut neighbours = [NONE; 4];
            if x > 0 {
                neighbours[0] = labels[i - 1];
            }
            if y > 0 {
                neighbours[1] = labels[i - w];
                if connectivity == Connectivity::Eight {
                    if x > 0 {
                        neighbours[2] = labels[i - w - 1];
                    }
                    if x + 1 < w {
                        neighbours[3] = labels[i - w + 1];
                    }
                }
            }
            let mut label = NONE;
            for &n in neighbours.iter().filter(|&&n| n != NONE) {
                if label == NONE {
                    label = n;
                } else {
                    union(&mut parent, label, n);
                }
            }
            if label == NONE {
                label = parent.len() as u32;
                parent.push(label);
            }
            labels[i] = label;
        }
    }
    let mut slot = vec![NONE; parent.len()];
    let mut comps: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == NONE {
                continue;
            }
            let root = find(&mut parent, l) as usize;
            if slot[root] == NONE {
                slot[root] = comps.len() as u32;
                comps.push(Component { pixels: Vec::new() });
            }
            comps[slot[root] as usize].pixels.push((x, y));
        }
    }
    comps
}

/// Boxes for a frame: one per component, confidence 1.0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    pub frame_id: String,
    pub boxes: Vec<DetectionRecord>,
    /// Clothing pixels supporting each box.
    pub support: Vec<usize>,
}

impl DetectionSet {
    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }
}

/// Tight box around each component. Components whose boxes coincide (a
/// ring and a component touching all four of its sides, for instance) are
/// reported once with their support summed.
pub fn fit_boxes(frame_id: &str, components: &[Component]) -> DetectionSet {
    let mut set = DetectionSet {
        frame_id: frame_id.to_string(),
        boxes: Vec::with_capacity(components.len()),
        support: Vec::with_capacity(components.len()),
    };
    for c in components {
        let bbox = c.bounds();
        if let Some(k) = set.boxes.iter().position(|d| d.bbox == bbox) {
            set.support[k] += c.area();
            continue;
        }
        set.boxes.push(DetectionRecord {
            frame_id: frame_id.to_string(),
            bbox,
            confidence: 1.0,
        });
        set.support.push(c.area());
    }
    set
}
