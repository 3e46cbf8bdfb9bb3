//! Connected components of the ε-neighborhood graph.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::points::{squared_distance, PointSet};

/// Labels the connected components of the graph joining points at distance
/// `≤ eps`. Labels are `0..k`, numbered in order of each component's
/// smallest member index, so the labeling is a deterministic function of
/// the point sequence and the partition is invariant to point order.
pub fn connected_components_eps(points: &PointSet, eps: f64) -> Result<Vec<usize>> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::invalid(format!("component linking radius must be positive, got {eps}")));
    }
    let n = points.len();
    if eps.is_infinite() {
        return Ok(vec![0; n]);
    }
    let mut uf = UnionFind::<usize>::new(n);
    let eps2 = eps * eps;
    if points.dim() <= 3 && n > 256 && !hash_would_overflow(points, eps) {
        link_by_cells(points, eps, &mut uf);
    } else {
        for i in 0..n {
            let p = points.point(i);
            for j in i + 1..n {
                if squared_distance(p, points.point(j)) <= eps2 {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut label_of_root = HashMap::new();
    Ok((0..n)
        .map(|i| {
            let next = label_of_root.len();
            *label_of_root.entry(uf.find(i)).or_insert(next)
        })
        .collect())
}

pub fn component_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

fn hash_would_overflow(points: &PointSet, eps: f64) -> bool {
    points.coords().iter().any(|c| (c / eps).abs() > 1e15)
}

/// Buckets points into cubes of side `eps`; only neighboring cubes can hold
/// linked pairs.
fn link_by_cells(points: &PointSet, eps: f64, uf: &mut UnionFind<usize>) {
    let d = points.dim();
    let eps2 = eps * eps;
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|c| (c / eps).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let base = key(p);
        for off in &offsets {
            let neighbor: Vec<i64> = base.iter().zip(off).map(|(b, o)| b + o).collect();
            if let Some(members) = cells.get(&neighbor) {
                for &j in members {
                    if j > i && squared_distance(p, points.point(j)) <= eps2 {
                        uf.union(i, j);
                    }
                }
            }
        }
    }
}
