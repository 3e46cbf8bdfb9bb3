//! Marching squares on a 2-D grid with linear interpolation along cell edges.

use super::{LevelSetApprox, LevelSetShape, Polyline};
use crate::error::{Error, Result};
use crate::kernel_density::{GridSpec, GridValues};

const NONE: u32 = u32::MAX;

/// Extracts the polylines of `{x : v(x) = λ}` where `v` is the piecewise
/// bilinear interpolant of the grid values.
///
/// A node counts as inside when its value is `≥ λ`. Saddle cells are
/// resolved with the mean of the four corners. Vertices lie on cell edges
/// where the edge's linear interpolant equals `λ`.
pub fn extract_contour_2d(values: &GridValues, level: f64) -> Result<LevelSetApprox> {
    let grid = values.grid();
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
    }
    if !level.is_finite() {
        return Err(Error::NonFinite(format!("contour level {level}")));
    }
    let v = values.values();
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("grid value at node {i}")));
    }
    let (nx, ny) = (grid.resolution()[0], grid.resolution()[1]);
    let xs = grid.axis_coords(0);
    let ys = grid.axis_coords(1);
    let at = |i: usize, j: usize| v[i * ny + j];

    // edge ids: horizontal (i,j)-(i+1,j) → 2(i·ny+j), vertical (i,j)-(i,j+1) → 2(i·ny+j)+1
    let mut edge_vertex = vec![NONE; 2 * nx * ny];
    let mut verts: Vec<[f64; 2]> = Vec::new();
    let mut vertex_on = |edge: usize| -> u32 {
        if edge_vertex[edge] != NONE {
            return edge_vertex[edge];
        }
        let node = edge / 2;
        let (i, j) = (node / ny, node % ny);
        let (i1, j1) = if edge.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (at(i, j), at(i1, j1));
        let t = (level - v0) / (v1 - v0);
        let p = [xs[i] + t * (xs[i1] - xs[i]), ys[j] + t * (ys[j1] - ys[j])];
        let id = verts.len() as u32;
        verts.push(p);
        edge_vertex[edge] = id;
        id
    };

    let mut segments: Vec<(u32, u32)> = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let inside = c.map(|x| x >= level);
            let case = inside.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // bottom, right, top, left
            let edges = [2 * (i * ny + j), 2 * ((i + 1) * ny + j) + 1, 2 * (i * ny + j + 1), 2 * (i * ny + j) + 1];
            let crosses = |e: usize| inside[e] != inside[(e + 1) % 4];
            match case {
                5 | 10 => {
                    let center_inside = c.iter().sum::<f64>() / 4.0 >= level;
                    // case 5: corners 0 and 2 inside; case 10: corners 1 and 3 inside
                    let split_odd = (case == 5) == center_inside;
                    let pairs: [(usize, usize); 2] = if split_odd { [(0, 1), (2, 3)] } else { [(3, 0), (1, 2)] };
                    for (a, b) in pairs {
                        segments.push((vertex_on(edges[a]), vertex_on(edges[b])));
                    }
                }
                _ => {
                    let crossing: Vec<usize> = (0..4).filter(|&e| crosses(e)).collect();
                    debug_assert_eq!(crossing.len(), 2);
                    segments.push((vertex_on(edges[crossing[0]]), vertex_on(edges[crossing[1]])));
                }
            }
        }
    }

    let polylines = stitch(&verts, &segments);
    Ok(LevelSetApprox { level, tolerance: 0.0, shape: LevelSetShape::Polylines(polylines), grid: Some(grid.clone()) })
}

/// Joins segments sharing vertices into maximal chains: open chains first
/// (they end on the grid boundary), then closed loops, each in order of
/// their lowest vertex id.
fn stitch(verts: &[[f64; 2]], segments: &[(u32, u32)]) -> Vec<Polyline> {
    let mut adj: Vec<[u32; 2]> = vec![[NONE, NONE]; verts.len()];
    for &(a, b) in segments {
        for (x, y) in [(a, b), (b, a)] {
            let slot = &mut adj[x as usize];
            if slot[0] == NONE {
                slot[0] = y;
            } else {
                slot[1] = y;
            }
        }
    }
    let degree = |v: usize| adj[v].iter().filter(|&&x| x != NONE).count();
    let mut used = vec![false; verts.len()];
    let mut out = Vec::new();
    let walk = |start: usize, used: &mut Vec<bool>| -> Vec<usize> {
        let mut chain = vec![start];
        used[start] = true;
        let mut prev = NONE;
        let mut cur = start as u32;
        loop {
            let next = adj[cur as usize].iter().copied().find(|&x| x != NONE && x != prev && !used[x as usize]);
            match next {
                Some(nx) => {
                    used[nx as usize] = true;
                    chain.push(nx as usize);
                    prev = cur;
                    cur = nx;
                }
                None => break,
            }
        }
        chain
    };
    for v in 0..verts.len() {
        if !used[v] && degree(v) == 1 {
            let chain = walk(v, &mut used);
            out.push(Polyline { closed: false, points: chain.iter().map(|&k| verts[k]).collect() });
        }
    }
    for v in 0..verts.len() {
        if !used[v] {
            let chain = walk(v, &mut used);
            let closed = chain.len() > 2;
            out.push(Polyline { closed, points: chain.iter().map(|&k| verts[k]).collect() });
        }
    }
    out
}

/// Moves each contour vertex along its grid edge with Newton steps on
/// `f(x) − λ`, where `f` returns the value and gradient at `x`. Vertices stay
/// inside their edge. Updates the recorded tolerance to the largest
/// remaining `|f(v) − λ|`.
pub fn refine_contour<F>(set: &mut LevelSetApprox, grid: &GridSpec, f: F, max_steps: usize)
where
    F: Fn(&[f64; 2]) -> (f64, [f64; 2]),
{
    let xs = grid.axis_coords(0);
    let ys = grid.axis_coords(1);
    let level = set.level;
    let mut worst: f64 = 0.0;
    if let LevelSetShape::Polylines(lines) = &mut set.shape {
        for line in lines.iter_mut() {
            for p in line.points.iter_mut() {
                // a vertex on a horizontal edge keeps its y exactly on a grid line
                let axis = if ys.binary_search_by(|y| y.total_cmp(&p[1])).is_ok() { 0 } else { 1 };
                let coords = if axis == 0 { &xs } else { &ys };
                let k = coords.partition_point(|c| *c <= p[axis]).clamp(1, coords.len() - 1);
                let (lo, hi) = (coords[k - 1], coords[k]);
                let mut q = *p;
                let (mut val, mut grad) = f(&q);
                for _ in 0..max_steps {
                    let r = val - level;
                    if r == 0.0 || grad[axis] == 0.0 {
                        break;
                    }
                    let mut cand = q;
                    cand[axis] = (q[axis] - r / grad[axis]).clamp(lo, hi);
                    let (cv, cg) = f(&cand);
                    if (cv - level).abs() >= r.abs() {
                        break;
                    }
                    q = cand;
                    val = cv;
                    grad = cg;
                }
                worst = worst.max((val - level).abs());
                *p = q;
            }
        }
    }
    set.tolerance = worst;
}
