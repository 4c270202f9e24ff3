//! Zero-level contour extraction from a scalar grid by marching squares.
//!
//! Used to trace feasibility-condition boundaries on operating charts. Cells
//! touching a non-finite sample are skipped; segment endpoints are keyed by
//! the grid edge they sit on, so chaining into polylines is exact.

use std::collections::HashMap;

/// A chained contour polyline in (x, y) data coordinates.
pub type Polyline = Vec<(f64, f64)>;

/// Edge identifier: (ix, iy) of the edge's lower-left node plus orientation.
/// Horizontal edges run from node (ix, iy) to (ix+1, iy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    H(usize, usize),
    V(usize, usize),
}

struct Segment {
    a: EdgeKey,
    b: EdgeKey,
}

fn interp(x0: f64, x1: f64, v0: f64, v1: f64) -> f64 {
    if v1 == v0 {
        0.5 * (x0 + x1)
    } else {
        x0 + (x1 - x0) * (-v0) / (v1 - v0)
    }
}

fn edge_point(key: EdgeKey, xs: &[f64], ys: &[f64], values: &impl Fn(usize, usize) -> f64) -> (f64, f64) {
    match key {
        EdgeKey::H(ix, iy) => {
            let v0 = values(ix, iy);
            let v1 = values(ix + 1, iy);
            (interp(xs[ix], xs[ix + 1], v0, v1), ys[iy])
        }
        EdgeKey::V(ix, iy) => {
            let v0 = values(ix, iy);
            let v1 = values(ix, iy + 1);
            (xs[ix], interp(ys[iy], ys[iy + 1], v0, v1))
        }
    }
}

/// Extract the zero contours of `values[iy * nx + ix]` sampled at the tensor
/// grid `xs` x `ys`. The sign convention treats values > 0 as inside.
pub fn zero_contours(xs: &[f64], ys: &[f64], values: &[f64]) -> Vec<Polyline> {
    let nx = xs.len();
    let ny = ys.len();
    assert_eq!(values.len(), nx * ny, "grid/value size mismatch");
    let at = |ix: usize, iy: usize| values[iy * nx + ix];

    let mut segments: Vec<Segment> = Vec::new();
    for iy in 0..ny.saturating_sub(1) {
        for ix in 0..nx.saturating_sub(1) {
            let bl = at(ix, iy);
            let br = at(ix + 1, iy);
            let tr = at(ix + 1, iy + 1);
            let tl = at(ix, iy + 1);
            if !(bl.is_finite() && br.is_finite() && tr.is_finite() && tl.is_finite()) {
                continue;
            }
            let mut case = 0u8;
            if bl > 0.0 {
                case |= 1;
            }
            if br > 0.0 {
                case |= 2;
            }
            if tr > 0.0 {
                case |= 4;
            }
            if tl > 0.0 {
                case |= 8;
            }
            let bottom = EdgeKey::H(ix, iy);
            let top = EdgeKey::H(ix, iy + 1);
            let left = EdgeKey::V(ix, iy);
            let right = EdgeKey::V(ix + 1, iy);
            match case {
                0 | 15 => {}
                1 | 14 => segments.push(Segment { a: left, b: bottom }),
                2 | 13 => segments.push(Segment { a: bottom, b: right }),
                3 | 12 => segments.push(Segment { a: left, b: right }),
                4 | 11 => segments.push(Segment { a: right, b: top }),
                6 | 9 => segments.push(Segment { a: bottom, b: top }),
                7 | 8 => segments.push(Segment { a: left, b: top }),
                5 | 10 => {
                    // saddle: split by the cell-center average
                    let center = 0.25 * (bl + br + tr + tl);
                    let flip = (case == 5) == (center > 0.0);
                    if flip {
                        segments.push(Segment { a: left, b: bottom });
                        segments.push(Segment { a: right, b: top });
                    } else {
                        segments.push(Segment { a: left, b: top });
                        segments.push(Segment { a: bottom, b: right });
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    chain_segments(&segments, xs, ys, &at)
}

fn chain_segments(
    segments: &[Segment],
    xs: &[f64],
    ys: &[f64],
    at: &impl Fn(usize, usize) -> f64,
) -> Vec<Polyline> {
    // adjacency by edge key
    let mut adjacency: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, s) in segments.iter().enumerate() {
        adjacency.entry(s.a).or_default().push(i);
        adjacency.entry(s.b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();

    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut keys = vec![segments[start].a, segments[start].b];
        // extend forward from the tail, then from the head
        for end in 0..2 {
            loop {
                let tip = if end == 0 { *keys.last().unwrap() } else { keys[0] };
                let next = adjacency
                    .get(&tip)
                    .and_then(|ids| ids.iter().find(|&&i| !used[i]).copied());
                let Some(i) = next else { break };
                used[i] = true;
                let other = if segments[i].a == tip {
                    segments[i].b
                } else {
                    segments[i].a
                };
                if end == 0 {
                    keys.push(other);
                } else {
                    keys.insert(0, other);
                }
            }
        }
        polylines.push(
            keys.into_iter()
                .map(|k| edge_point(k, xs, ys, at))
                .collect(),
        );
    }
    polylines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_line_is_traced() {
        // f(x, y) = x - 0.5 on a 5x5 grid over [0,1]^2
        let xs: Vec<f64> = (0..5).map(|i| i as f64 / 4.0).collect();
        let ys = xs.clone();
        let mut values = vec![0.0; 25];
        for iy in 0..5 {
            for ix in 0..5 {
                values[iy * 5 + ix] = xs[ix] - 0.5;
            }
        }
        let lines = zero_contours(&xs, &ys, &values);
        assert_eq!(lines.len(), 1);
        for &(x, _) in &lines[0] {
            assert!((x - 0.5).abs() < 1e-12);
        }
        // spans the full y range
        let y_min = lines[0].iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let y_max = lines[0].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((y_min, y_max), (0.0, 1.0));
    }

    #[test]
    fn circle_contour_roughly_round() {
        let n = 41;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let ys = xs.clone();
        let mut values = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let dx = xs[ix] - 0.5;
                let dy = ys[iy] - 0.5;
                values[iy * n + ix] = 0.09 - (dx * dx + dy * dy);
            }
        }
        let lines = zero_contours(&xs, &ys, &values);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].len() > 20);
        for &(x, y) in &lines[0] {
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            assert!((r - 0.3).abs() < 0.02, "point ({x},{y}) off circle");
        }
    }

    #[test]
    fn nan_cells_are_skipped() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![0.0, 1.0];
        let values = vec![1.0, -1.0, f64::NAN, 1.0, -1.0, f64::NAN];
        let lines = zero_contours(&xs, &ys, &values);
        assert_eq!(lines.len(), 1);
    }

    #[test]
    fn uniform_field_has_no_contour() {
        let xs = vec![0.0, 1.0];
        let ys = vec![0.0, 1.0];
        assert!(zero_contours(&xs, &ys, &[1.0, 1.0, 1.0, 1.0]).is_empty());
    }
}
