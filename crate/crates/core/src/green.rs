//! Green's kernels: the decoupled edge kernel `g_j` and the star kernel
//!
//! `G_jl(x, y) = delta_jl g_j(x, y) + v_j(x) v_l(y) / (v_j(0) v_l(0) (alpha - M))`.

use crate::edge::{solve_edge, EdgeSolutionPair, IntegratorOptions, SpectralParameter};
use crate::error::{Error, Result};
use crate::graph::{Coupling, Edge, StarGraph};

/// Relative guard on `|alpha - M|` for evaluating at an eigenvalue.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;

fn pole_error(kappa: f64, edges: Vec<usize>) -> Error {
    Error::Pole { kappa, edges }
}

/// `g(x, y) = -u(x<) v(x>) / W` from a solved pair.
pub fn pair_green(pair: &EdgeSolutionPair, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    pair.u(lo).0 * pair.v(hi).0 / pair.v0
}

pub fn edge_green(edge: &Edge, kappa: SpectralParameter, x: f64, y: f64) -> Result<f64> {
    let pair = solve_edge(edge, kappa, &IntegratorOptions::default())?;
    if pair.is_pole() {
        return Err(pole_error(kappa.get(), Vec::new()));
    }
    Ok(pair_green(&pair, x, y))
}

/// Resolvent kernel of the star at a fixed `kappa`, with the edge solutions
/// cached.
#[derive(Debug, Clone)]
pub struct StarResolvent {
    kappa: f64,
    coupling: Coupling,
    pairs: Vec<EdgeSolutionPair>,
    lengths: Vec<Option<f64>>,
    m: f64,
}

impl StarResolvent {
    pub fn new(graph: &StarGraph, kappa: SpectralParameter) -> Result<Self> {
        Self::with_options(graph, kappa, &IntegratorOptions::default())
    }

    pub fn with_options(graph: &StarGraph, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<Self> {
        let pairs = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(j, e)| solve_edge(e, kappa, opts).map_err(|err| err.on_edge(j)))
            .collect::<Result<Vec<_>>>()?;
        let poles: Vec<usize> = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_pole())
            .map(|(j, _)| j)
            .collect();
        if !poles.is_empty() {
            return Err(pole_error(kappa.get(), poles));
        }
        let m: f64 = pairs.iter().map(|p| p.v0prime / p.v0).sum();
        if let Coupling::Delta(alpha) = graph.coupling() {
            let gap = (alpha - m).abs();
            if gap < EIGENVALUE_TOLERANCE * (1.0 + alpha.abs()) {
                return Err(Error::AtEigenvalue {
                    kappa: kappa.get(),
                    gap,
                });
            }
        }
        Ok(StarResolvent {
            kappa: kappa.get(),
            coupling: graph.coupling(),
            pairs,
            lengths: graph.edges().iter().map(Edge::length).collect(),
            m,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `M(kappa)`.
    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn pairs(&self) -> &[EdgeSolutionPair] {
        &self.pairs
    }

    /// `1 / (alpha - M)`, zero for the decoupled star.
    pub fn vertex_factor(&self) -> f64 {
        match self.coupling {
            Coupling::Delta(alpha) => 1.0 / (alpha - self.m),
            Coupling::Dirichlet => 0.0,
        }
    }

    pub fn edge_kernel(&self, j: usize, x: f64, y: f64) -> f64 {
        pair_green(&self.pairs[j], x, y)
    }

    /// `G_jl(x, y)`.
    pub fn kernel(&self, j: usize, x: f64, l: usize, y: f64) -> f64 {
        let pj = &self.pairs[j];
        let pl = &self.pairs[l];
        let correction = pj.v(x).0 * pl.v(y).0 / (pj.v0 * pl.v0) * self.vertex_factor();
        if j == l {
            self.edge_kernel(j, x, y) + correction
        } else {
            correction
        }
    }
}

pub fn star_green(graph: &StarGraph, kappa: SpectralParameter, j: usize, x: f64, l: usize, y: f64) -> Result<f64> {
    for idx in [j, l] {
        if idx >= graph.edge_count() {
            return Err(Error::InvalidArgument(format!("edge index {idx} out of range")));
        }
    }
    Ok(StarResolvent::new(graph, kappa)?.kernel(j, x, l, y))
}

/// Values on the uniform grid `x_i = i h`, `i = 0..values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub h: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || values.len() < 4 {
            return Err(Error::InvalidArgument(
                "sampled function needs h > 0 and at least 4 samples".into(),
            ));
        }
        Ok(SampledFunction { h, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(h: f64, n: usize, f: F) -> Result<Self> {
        SampledFunction::new(h, (0..n).map(|i| f(i as f64 * h)).collect())
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.h
    }
}

/// Fourth-order integrals of `f` over each grid cell `[x_i, x_{i+1}]`.
fn cell_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let c = h / 24.0;
    (0..n - 1)
        .map(|i| {
            if i == 0 {
                c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else if i == n - 2 {
                c * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
            } else {
                c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
            }
        })
        .collect()
}

/// `psi = (H - kappa^2)^{-1} phi` on the grids of `phi`, where `-kappa^2` is
/// the spectral point of `resolvent`.
pub fn apply_resolvent(resolvent: &StarResolvent, phi: &[SampledFunction]) -> Result<Vec<SampledFunction>> {
    if phi.len() != resolvent.pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} sampled functions, got {}",
            resolvent.pairs.len(),
            phi.len()
        )));
    }
    struct EdgeParts {
        u: Vec<f64>,
        v: Vec<f64>,
        left: Vec<f64>,
        right: Vec<f64>,
    }
    let mut parts = Vec::with_capacity(phi.len());
    let mut c = 0.0;
    for (j, (pair, f)) in resolvent.pairs.iter().zip(phi).enumerate() {
        if resolvent.lengths[j].is_some_and(|l| f.end() > l * (1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("sample grid extends beyond edge {j}")));
        }
        let u: Vec<f64> = f.grid().map(|x| pair.u(x).0 / pair.v0).collect();
        let v: Vec<f64> = f.grid().map(|x| pair.v(x).0).collect();
        let uf: Vec<f64> = u.iter().zip(&f.values).map(|(a, b)| a * b).collect();
        let vf: Vec<f64> = v.iter().zip(&f.values).map(|(a, b)| a * b).collect();
        let cu = cell_integrals(&uf, f.h);
        let cv = cell_integrals(&vf, f.h);
        let n = f.len();
        let mut left = vec![0.0; n];
        for i in 1..n {
            left[i] = left[i - 1] + cu[i - 1];
        }
        let mut right = vec![0.0; n];
        for i in (0..n - 1).rev() {
            right[i] = right[i + 1] + cv[i];
        }
        c += right[0] / pair.v0;
        parts.push(EdgeParts { u, v, left, right });
    }
    c *= resolvent.vertex_factor();
    Ok(resolvent
        .pairs
        .iter()
        .zip(phi)
        .zip(parts)
        .map(|((pair, f), p)| {
            let values = (0..f.len())
                .map(|i| p.v[i] * p.left[i] + p.u[i] * p.right[i] + p.v[i] / pair.v0 * c)
                .collect();
            SampledFunction { h: f.h, values }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::EdgePotential;
    use approx::assert_relative_eq;

    fn k(x: f64) -> SpectralParameter {
        SpectralParameter::new(x).unwrap()
    }

    #[test]
    fn free_edge_kernel() {
        let g = edge_green(&Edge::free(), k(1.0), 1.0, 2.0).unwrap();
        assert_relative_eq!(g, 1f64.sinh() * (-2f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(g, edge_green(&Edge::free(), k(1.0), 2.0, 1.0).unwrap());
    }

    #[test]
    fn well_edge_kernel() {
        let e = Edge::infinite(EdgePotential::well(-2.0, 0.0, 1.0).unwrap());
        let g = edge_green(&e, k(0.7), 0.3, 0.8).unwrap();
        assert_relative_eq!(g, 0.372794661417190890, max_relative = 1e-12);
    }

    #[test]
    fn glued_free_line() {
        let g = StarGraph::free(2, Coupling::Delta(0.0)).unwrap();
        let val = star_green(&g, k(1.0), 0, 0.5, 0, 1.5).unwrap();
        assert_relative_eq!(val, (-1f64).exp() / 2.0, max_relative = 1e-14);
        let g3 = StarGraph::free(3, Coupling::Delta(0.0)).unwrap();
        assert_relative_eq!(star_green(&g3, k(1.0), 0, 0.0, 2, 0.0).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn at_eigenvalue_guard() {
        let g = StarGraph::free(2, Coupling::Delta(-2.0)).unwrap();
        assert!(matches!(StarResolvent::new(&g, k(1.0)), Err(Error::AtEigenvalue { .. })));
    }

    #[test]
    fn dirichlet_decouples() {
        let g = StarGraph::free(3, Coupling::Dirichlet).unwrap();
        let r = StarResolvent::new(&g, k(1.0)).unwrap();
        assert_eq!(r.kernel(0, 0.3, 1, 0.4), 0.0);
        assert_relative_eq!(r.kernel(1, 0.3, 1, 0.4), r.edge_kernel(1, 0.3, 0.4));
    }

    #[test]
    fn zero_source() {
        let g = StarGraph::free(2, Coupling::Delta(1.0)).unwrap();
        let r = StarResolvent::new(&g, k(1.0)).unwrap();
        let phi = vec![SampledFunction::from_fn(0.1, 20, |_| 0.0).unwrap(); 2];
        let psi = apply_resolvent(&r, &phi).unwrap();
        assert!(psi.iter().all(|p| p.values.iter().all(|&v| v == 0.0)));
    }
}
