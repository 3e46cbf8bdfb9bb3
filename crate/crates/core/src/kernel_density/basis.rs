use rayon::prelude::*;

use super::{DensityModel, GridSpec};
use crate::error::Result;
use crate::points::{check_dim, squared_distance, PointSet};

/// Entry limit for caching a dense evaluation-point × data kernel matrix.
pub const DENSE_ENTRY_BUDGET: usize = 1 << 24;

/// Precomputed kernel factors for repeatedly evaluating a KDE, with per-datum
/// multiplicities, on a fixed set of evaluation points.
///
/// Bootstrap replicates only change how often each observation appears, so
/// the kernel factors are computed once and each replicate costs a weighted
/// sum. On a 2-D grid the Gaussian factorizes per axis,
/// `e^(−‖x−X‖²/2h²) = e^(−(x₁−X₁)²/2h²) · e^(−(x₂−X₂)²/2h²)`, which
/// needs no exponentials per replicate and no truncation radius.
///
/// Every output value is computed by a fixed sequential reduction, so results
/// are bitwise independent of the number of threads.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    kind: BasisKind,
    n: usize,
    norm: f64,
}

#[derive(Clone, Debug)]
enum BasisKind {
    /// `ex[i·n + k] = e^(−(x_i − X_k,1)²/2h²)`, likewise `ey` on axis 2.
    Separable {
        nx: usize,
        ny: usize,
        ex: Vec<f64>,
        ey: Vec<f64>,
    },
    /// `k[j·n + k] = e^(−‖p_j − X_k‖²/2h²)`.
    Dense {
        m: usize,
        k: Vec<f64>,
    },
    Direct {
        points: PointSet,
        data: PointSet,
        inv_two_h2: f64,
    },
}

impl KernelBasis {
    pub fn for_grid(model: &DensityModel, grid: &GridSpec) -> Result<Self> {
        check_dim(model.dim(), grid.dim())?;
        if grid.dim() == 2 {
            let data = model.data();
            let n = data.len();
            let inv = model.inv_two_h2();
            let axis = |a: usize| -> Vec<f64> {
                let coords = grid.axis_coords(a);
                let mut out = Vec::with_capacity(coords.len() * n);
                for c in &coords {
                    out.extend(data.iter().map(|p| (-(c - p[a]) * (c - p[a]) * inv).exp()));
                }
                out
            };
            return Ok(KernelBasis {
                kind: BasisKind::Separable {
                    nx: grid.resolution()[0],
                    ny: grid.resolution()[1],
                    ex: axis(0),
                    ey: axis(1),
                },
                n,
                norm: model.norm(),
            });
        }
        Self::for_points(model, &grid.nodes())
    }

    pub fn for_points(model: &DensityModel, points: &PointSet) -> Result<Self> {
        check_dim(model.dim(), points.dim())?;
        let data = model.data();
        let n = data.len();
        let m = points.len();
        let inv = model.inv_two_h2();
        let kind = if m.saturating_mul(n) <= DENSE_ENTRY_BUDGET {
            let mut k = vec![0.0; m * n];
            if n > 0 {
                k.par_chunks_mut(n).zip(points.coords().par_chunks_exact(points.dim())).for_each(|(row, p)| {
                    for (slot, xi) in row.iter_mut().zip(data.iter()) {
                        *slot = (-squared_distance(p, xi) * inv).exp();
                    }
                });
            }
            BasisKind::Dense { m, k }
        } else {
            BasisKind::Direct { points: points.clone(), data: data.points().clone(), inv_two_h2: inv }
        };
        Ok(KernelBasis { kind, n, norm: model.norm() })
    }

    /// Number of evaluation points.
    pub fn len(&self) -> usize {
        match &self.kind {
            BasisKind::Separable { nx, ny, .. } => nx * ny,
            BasisKind::Dense { m, .. } => *m,
            BasisKind::Direct { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Density at every evaluation point. `counts[k]` is the multiplicity of
    /// observation `k` (a bootstrap resample); `None` means each appears once.
    pub fn evaluate(&self, counts: Option<&[u32]>) -> Vec<f64> {
        let n = self.n;
        let (idx, w): (Vec<usize>, Vec<f64>) = match counts {
            Some(c) => {
                assert_eq!(c.len(), n, "one count per observation");
                c.iter().enumerate().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c as f64)).unzip()
            }
            None => ((0..n).collect(), vec![1.0; n]),
        };
        let nnz = idx.len();
        let norm = self.norm;
        match &self.kind {
            BasisKind::Separable { nx, ny, ex, ey } => {
                let (nx, ny) = (*nx, *ny);
                // compress the y factors to the observations that occur
                let mut eyc = vec![0.0; ny * nnz];
                for j in 0..ny {
                    let src = &ey[j * n..(j + 1) * n];
                    for (slot, &k) in eyc[j * nnz..(j + 1) * nnz].iter_mut().zip(&idx) {
                        *slot = src[k];
                    }
                }
                let mut out = vec![0.0; nx * ny];
                out.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
                    let src = &ex[i * n..(i + 1) * n];
                    let a: Vec<f64> = idx.iter().zip(&w).map(|(&k, &wk)| wk * src[k]).collect();
                    for (j, slot) in row.iter_mut().enumerate() {
                        *slot = norm * dot(&a, &eyc[j * nnz..(j + 1) * nnz]);
                    }
                });
                out
            }
            BasisKind::Dense { m, k } => {
                let mut out = vec![0.0; *m];
                out.par_iter_mut().enumerate().for_each(|(j, slot)| {
                    let row = &k[j * n..(j + 1) * n];
                    let s = idx.iter().zip(&w).map(|(&i, &wi)| wi * row[i]).sum::<f64>();
                    *slot = norm * s;
                });
                out
            }
            BasisKind::Direct { points, data, inv_two_h2 } => points
                .coords()
                .par_chunks_exact(points.dim())
                .map(|p| {
                    let s = idx
                        .iter()
                        .zip(&w)
                        .map(|(&i, &wi)| wi * (-squared_distance(p, data.point(i)) * inv_two_h2).exp())
                        .sum::<f64>();
                    norm * s
                })
                .collect(),
        }
    }
}

/// Dot product with a fixed four-lane reduction order.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s += x * y;
    }
    s
}
