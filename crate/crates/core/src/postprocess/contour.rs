//! 8-connected component labelling and exterior boundary tracing
//! (Moore-neighbor tracing with Jacob's stopping criterion).

use std::collections::VecDeque;

use crate::raster::{BinaryMask, Raster};

/// Clockwise ring (y pointing down), starting at west.
const RING: [(isize, isize); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    /// Row-major pixel indices, ascending.
    pub pixels: Vec<usize>,
    pub area: usize,
    /// Exterior boundary in tracing order; a pixel may recur on thin parts.
    pub boundary: Vec<usize>,
    /// Number of distinct boundary pixels.
    pub boundary_length: usize,
}

impl Region {
    pub fn first_pixel(&self) -> usize {
        self.pixels[0]
    }
}

/// Connected components of the one-pixels in raster order of their first
/// pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Region> {
    let (w, h) = (mask.width(), mask.height());
    let data = mask.data();
    let mut seen = vec![false; data.len()];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..data.len() {
        if !data[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(p) = queue.pop_front() {
            pixels.push(p);
            let (x, y) = ((p % w) as isize, (p / w) as isize);
            for (dx, dy) in RING {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                if data[q] && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        pixels.sort_unstable();
        let boundary = trace_boundary(mask, start);
        let mut distinct = boundary.clone();
        distinct.sort_unstable();
        distinct.dedup();
        regions.push(Region {
            area: pixels.len(),
            pixels,
            boundary_length: distinct.len(),
            boundary,
        });
    }
    regions
}

/// Traces the exterior boundary of the component whose top-left pixel is
/// `start`.
fn trace_boundary(mask: &BinaryMask, start: usize) -> Vec<usize> {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let is_on = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && mask.data()[(y * w + x) as usize];
    let s = (start as isize % w, start as isize / w);
    // The raster-order first pixel always has background to its west.
    let start_back = (s.0 - 1, s.1);

    let mut boundary = vec![start];
    let (mut p, mut back) = (s, start_back);
    let mut first_move = None;
    let limit = 4 * mask.len() + 8;
    for _ in 0..limit {
        let back_dir = RING
            .iter()
            .position(|&(dx, dy)| (p.0 + dx, p.1 + dy) == back)
            .expect("backtrack is a neighbor");
        let mut next = None;
        for k in 1..=8 {
            let dir = (back_dir + k) % 8;
            let c = (p.0 + RING[dir].0, p.1 + RING[dir].1);
            if is_on(c.0, c.1) {
                let prev = RING[(dir + 7) % 8];
                next = Some((c, (p.0 + prev.0, p.1 + prev.1)));
                break;
            }
        }
        let Some((c, b)) = next else {
            break; // isolated pixel
        };
        if c == s && b == start_back {
            break;
        }
        // Thin shapes can return to the start from another side; the walk is
        // closed once the first move repeats.
        if first_move == Some((p, c, b)) {
            boundary.pop();
            break;
        }
        if first_move.is_none() {
            first_move = Some((p, c, b));
        }
        boundary.push((c.1 * w + c.0) as usize);
        p = c;
        back = b;
    }
    boundary
}
