//! Finite-difference discretization of the star operator on truncated edges.
//!
//! Each edge carries a uniform chain of nodes `x_i = i h_j`. The vertex value
//! is one shared unknown whose row is the half-cell flux balance
//! `sum_j (psi_0 - psi_{j,1}) / h_j + alpha psi_0 + (int_0^{h_j/2} V_j) psi_0 = E m_0 psi_0`
//! with `m_0 = sum_j h_j / 2`. Half-lines are cut at `L` with a Dirichlet
//! condition; finite edges end in the Robin condition of their angle. After
//! scaling by the lumped masses the matrix is symmetric with arrowhead
//! structure, and its eigenvalues are located by inertia counts of
//! `S - sigma I` and bisection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Coupling, EdgeEnd, StarGraph};
use crate::potential::EdgePotential;

pub const MAX_STEP: f64 = 0.01;
const MAX_EIGENVALUES: usize = 10;
const BISECTION_CAP: usize = 400;

/// One edge: a tridiagonal chain ordered away from the vertex.
#[derive(Debug, Clone, PartialEq)]
struct Chain {
    h: f64,
    diag: Vec<f64>,
    /// `off[i]` couples nodes `i` and `i + 1`.
    off: Vec<f64>,
    /// Coupling of the first node to the vertex.
    vertex: f64,
}

/// Symmetrized finite-difference operator.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGrid {
    h: f64,
    truncation: f64,
    /// `None` for the decoupled star.
    vertex: Option<f64>,
    chains: Vec<Chain>,
}

fn cell_average(v: &EdgePotential, a: f64, b: f64) -> f64 {
    v.integral(a, b) / (b - a)
}

/// Assemble the operator with step `h` and truncation length `truncation`
/// for half-lines.
pub fn build_matrix(graph: &StarGraph, h: f64, truncation: f64) -> Result<FdGrid> {
    if !(h > 0.0 && h <= MAX_STEP) {
        return Err(Error::GridTooCoarse(format!("step {h} must lie in (0, {MAX_STEP}]")));
    }
    let mut chains = Vec::with_capacity(graph.edge_count());
    let mut vertex_diag = graph.coupling().finite().unwrap_or(0.0);
    let mut vertex_mass = 0.0;
    for (j, edge) in graph.edges().iter().enumerate() {
        let v = edge.potential();
        let (hj, nodes, robin) = match edge.end() {
            EdgeEnd::Infinite => {
                if !(truncation > v.support_end() && truncation.is_finite()) {
                    return Err(Error::GridTooCoarse(format!(
                        "truncation {truncation} does not cover the support of edge {j}"
                    )));
                }
                let m = (truncation / h).ceil() as usize;
                (h, m - 1, None)
            }
            EdgeEnd::Finite { length, omega } => {
                let m = (length / h).round() as usize;
                if m < 3 {
                    return Err(Error::GridTooCoarse(format!("edge {j} of length {length} is too short")));
                }
                let hj = length / m as f64;
                if omega.sin() == 0.0 {
                    (hj, m - 1, None)
                } else {
                    (hj, m, Some(omega.cos() / omega.sin()))
                }
            }
        };
        let inv2 = 1.0 / (hj * hj);
        let mut diag: Vec<f64> = (1..=nodes)
            .map(|i| {
                let x = i as f64 * hj;
                2.0 * inv2 + cell_average(v, x - 0.5 * hj, x + 0.5 * hj)
            })
            .collect();
        let mut off = vec![-inv2; nodes.saturating_sub(1)];
        if let Some(cot) = robin {
            let x = nodes as f64 * hj;
            let last = nodes - 1;
            diag[last] = (1.0 / hj + cot + v.integral(x - 0.5 * hj, x)) / (0.5 * hj);
            off[last - 1] = -1.0 / (hj * (0.5 * hj * hj).sqrt());
        }
        vertex_diag += 1.0 / hj + v.integral(0.0, 0.5 * hj);
        vertex_mass += 0.5 * hj;
        chains.push(Chain {
            h: hj,
            diag,
            off,
            vertex: 0.0,
        });
    }
    let vertex = match graph.coupling() {
        Coupling::Dirichlet => None,
        Coupling::Delta(_) => {
            for c in &mut chains {
                c.vertex = -1.0 / (c.h * (vertex_mass * c.h).sqrt());
            }
            Some(vertex_diag / vertex_mass)
        }
    };
    Ok(FdGrid {
        h,
        truncation,
        vertex,
        chains,
    })
}

impl FdGrid {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn dimension(&self) -> usize {
        self.vertex.is_some() as usize + self.chains.iter().map(|c| c.diag.len()).sum::<usize>()
    }

    /// Dense copy, vertex first, then each chain outward.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        let mut base = 0;
        if let Some(d) = self.vertex {
            m[(0, 0)] = d;
            base = 1;
        }
        for c in &self.chains {
            for (i, &d) in c.diag.iter().enumerate() {
                m[(base + i, base + i)] = d;
            }
            for (i, &o) in c.off.iter().enumerate() {
                m[(base + i, base + i + 1)] = o;
                m[(base + i + 1, base + i)] = o;
            }
            if self.vertex.is_some() && !c.diag.is_empty() {
                m[(0, base)] = c.vertex;
                m[(base, 0)] = c.vertex;
            }
            base += c.diag.len();
        }
        m
    }

    /// Number of eigenvalues below `sigma`: negative pivots of the `LDL^T`
    /// factorization of `S - sigma I`, eliminating each chain from its far end.
    pub fn count_below(&self, sigma: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut negatives = 0;
        let mut schur = self.vertex.map(|d| d - sigma);
        for c in &self.chains {
            let n = c.diag.len();
            let mut d = 0.0;
            for i in (0..n).rev() {
                d = c.diag[i] - sigma
                    - if i + 1 < n {
                        c.off[i] * c.off[i] / d
                    } else {
                        0.0
                    };
                if d == 0.0 {
                    d = -tiny;
                }
                if d < 0.0 {
                    negatives += 1;
                }
            }
            if let Some(s) = schur.as_mut() {
                if n > 0 {
                    *s -= c.vertex * c.vertex / d;
                }
            }
        }
        if let Some(s) = schur {
            if s <= 0.0 {
                negatives += 1;
            }
        }
        negatives
    }

    fn gershgorin(&self) -> (f64, f64) {
        let dense_rows = self.to_rows();
        dense_rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(d, r)| {
            (lo.min(d - r), hi.max(d + r))
        })
    }

    /// `(diagonal, sum of |off-diagonal|)` per row.
    fn to_rows(&self) -> Vec<(f64, f64)> {
        let mut rows = Vec::with_capacity(self.dimension());
        if let Some(d) = self.vertex {
            let r: f64 = self.chains.iter().filter(|c| !c.diag.is_empty()).map(|c| c.vertex.abs()).sum();
            rows.push((d, r));
        }
        for c in &self.chains {
            let n = c.diag.len();
            for i in 0..n {
                let mut r = 0.0;
                if i > 0 {
                    r += c.off[i - 1].abs();
                } else if self.vertex.is_some() {
                    r += c.vertex.abs();
                }
                if i + 1 < n {
                    r += c.off[i].abs();
                }
                rows.push((c.diag[i], r));
            }
        }
        rows
    }

    /// The `m` smallest eigenvalues, ascending.
    pub fn lowest_eigenvalues(&self, m: usize) -> Result<Vec<f64>> {
        if m > MAX_EIGENVALUES {
            return Err(Error::InvalidArgument(format!(
                "at most {MAX_EIGENVALUES} eigenvalues can be requested, got {m}"
            )));
        }
        let m = m.min(self.dimension());
        let (lo0, hi0) = self.gershgorin();
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            // smallest sigma with count_below(sigma) > k
            let (mut lo, mut hi) = (lo0 - 1.0, hi0 + 1.0);
            let mut converged = false;
            for _ in 0..BISECTION_CAP {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-14 * mid.abs().max(1.0) {
                    converged = true;
                    break;
                }
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if !converged {
                return Err(Error::NoConvergence(format!("bisection for eigenvalue {k}")));
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// Eigenvalues below `sigma`, ascending (at most 10).
    pub fn eigenvalues_below(&self, sigma: f64) -> Result<Vec<f64>> {
        let n = self.count_below(sigma).min(MAX_EIGENVALUES);
        self.lowest_eigenvalues(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_coarse_grids() {
        let g = StarGraph::free(2, Coupling::Delta(0.0)).unwrap();
        assert!(matches!(build_matrix(&g, 0.02, 10.0), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn dense_is_symmetric_and_counts_agree() {
        let v = EdgePotential::well(-3.0, 0.0, 0.5).unwrap();
        let g = StarGraph::from_potentials(&[v, EdgePotential::zero(), EdgePotential::zero()], Coupling::Delta(-0.5))
            .unwrap();
        let grid = build_matrix(&g, 0.01, 1.0).unwrap();
        let a = grid.to_dense();
        assert_eq!(a, a.transpose());
        let eig = a.symmetric_eigen().eigenvalues;
        let mut sorted: Vec<f64> = eig.iter().copied().collect();
        sorted.sort_by(f64::total_cmp);
        for sigma in [-5.0, -1.0, 0.0, 10.0, 1000.0] {
            let expected = sorted.iter().filter(|&&e| e < sigma).count();
            assert_eq!(grid.count_below(sigma), expected, "sigma = {sigma}");
        }
        let low = grid.lowest_eigenvalues(3).unwrap();
        for (a, b) in low.iter().zip(&sorted) {
            assert_relative_eq!(a, b, max_relative = 1e-10, epsilon = 1e-10);
        }
    }

    #[test]
    fn robin_end_symmetric() {
        use crate::graph::Edge;
        let e = Edge::finite(1.0, 1.0, EdgePotential::well(-2.0, 0.2, 0.6).unwrap()).unwrap();
        let g = StarGraph::new(vec![e, Edge::free()], Coupling::Delta(0.0)).unwrap();
        let a = build_matrix(&g, 0.01, 2.0).unwrap().to_dense();
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn dirichlet_decouples() {
        let g = StarGraph::free(2, Coupling::Dirichlet).unwrap();
        let grid = build_matrix(&g, 0.01, 1.0).unwrap();
        let a = grid.to_dense();
        let n = a.nrows() / 2;
        assert!(a.view((0, n), (n, n)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn free_delta_state() {
        let g = StarGraph::free(3, Coupling::Delta(-3.0)).unwrap();
        let grid = build_matrix(&g, 0.005, 20.0).unwrap();
        let neg = grid.eigenvalues_below(0.0).unwrap();
        assert_eq!(neg.len(), 1);
        assert!((neg[0] + 1.0).abs() < 1e-3);
    }
}
