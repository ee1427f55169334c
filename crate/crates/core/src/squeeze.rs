//! Squeezed potentials `W_eps(x) = W(x / eps) / eps` at the vertex and their
//! delta-coupling limit with `alpha = <W> = sum_j int W_j`.
//!
//! Convergence is checked through surrogates: eigenvalues and the resolvent
//! kernel at a finite set of probe points.

use crate::edge::SpectralParameter;
use crate::error::{Error, Result};
use crate::graph::{Coupling, StarGraph};
use crate::green::StarResolvent;
use crate::potential::EdgePotential;
use crate::secular::{find_eigenvalues_with, SecularOptions, SpectralResult, Window};

pub fn scale_potential(w: &EdgePotential, epsilon: f64) -> Result<EdgePotential> {
    w.squeezed(epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeFamily {
    pub w: Vec<EdgePotential>,
    pub epsilon: f64,
    pub scaled: Vec<EdgePotential>,
    /// `<W>`.
    pub mean: f64,
}

impl SqueezeFamily {
    pub fn new(w: &[EdgePotential], epsilon: f64) -> Result<Self> {
        let scaled = w.iter().map(|p| p.squeezed(epsilon)).collect::<Result<Vec<_>>>()?;
        Ok(SqueezeFamily {
            w: w.to_vec(),
            epsilon,
            scaled,
            mean: w.iter().map(|p| p.moment(0)).sum(),
        })
    }

    /// `<W_eps>`, equal to `<W>` up to rounding.
    pub fn scaled_mean(&self) -> f64 {
        self.scaled.iter().map(|p| p.moment(0)).sum()
    }
}

/// A kernel probe `G_jl(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub j: usize,
    pub x: f64,
    pub l: usize,
    pub y: f64,
}

impl Probe {
    pub fn new(j: usize, x: f64, l: usize, y: f64) -> Self {
        Probe { j, x, l, y }
    }
}

/// Vertex, same-edge and cross-edge probes.
pub fn default_probes(edges: usize) -> Vec<Probe> {
    let last = edges - 1;
    vec![
        Probe::new(0, 0.0, 0, 0.0),
        Probe::new(0, 0.5, 0, 1.0),
        Probe::new(0, 0.25, 1, 0.75),
        Probe::new(1, 1.5, last, 0.5),
    ]
}

fn check_background(graph: &StarGraph, w: &[EdgePotential]) -> Result<()> {
    if graph.coupling() != Coupling::Delta(0.0) {
        return Err(Error::InvalidArgument("squeezing needs alpha = 0 on the background graph".into()));
    }
    if w.len() != graph.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "expected {} squeezed potentials, got {}",
            graph.edge_count(),
            w.len()
        )));
    }
    Ok(())
}

/// `H_0(V + W_eps)` from the background `H_0(V)`.
pub fn squeezed_graph(graph: &StarGraph, w: &[EdgePotential], epsilon: f64) -> Result<StarGraph> {
    check_background(graph, w)?;
    let family = SqueezeFamily::new(w, epsilon)?;
    graph.map_potentials(|j, v| Ok(v.add(&family.scaled[j])))
}

/// `H_<W>(V)`.
pub fn limit_graph(graph: &StarGraph, w: &[EdgePotential]) -> Result<StarGraph> {
    check_background(graph, w)?;
    let mean: f64 = w.iter().map(|p| p.moment(0)).sum();
    graph.with_coupling(Coupling::Delta(mean))
}

/// `|G^{eps}(probe) - G^{lim}(probe)|` at `-kappa0^2`.
pub fn kernel_probe_error(
    graph: &StarGraph,
    w: &[EdgePotential],
    epsilon: f64,
    kappa0: SpectralParameter,
    probes: &[Probe],
) -> Result<Vec<f64>> {
    let limit = StarResolvent::new(&limit_graph(graph, w)?, kappa0)?;
    let squeezed = StarResolvent::new(&squeezed_graph(graph, w, epsilon)?, kappa0)?;
    probe_differences(&squeezed, &limit, probes, graph.edge_count())
}

fn probe_differences(a: &StarResolvent, b: &StarResolvent, probes: &[Probe], edges: usize) -> Result<Vec<f64>> {
    probes
        .iter()
        .map(|p| {
            if p.j >= edges || p.l >= edges {
                return Err(Error::InvalidArgument(format!("probe edge out of range: {p:?}")));
            }
            Ok((a.kernel(p.j, p.x, p.l, p.y) - b.kernel(p.j, p.x, p.l, p.y)).abs())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeRow {
    pub epsilon: f64,
    /// Energies of `H_0(V + W_eps)`, ground state first.
    pub energies: Vec<f64>,
    /// Largest distance from a limit eigenvalue to the nearest squeezed one;
    /// `None` when the limit has no negative spectrum.
    pub eigen_error: Option<f64>,
    pub probe_errors: Vec<f64>,
    pub max_kernel_probe_error: f64,
    /// `<W_eps>`.
    pub scaled_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeResult {
    pub mean: f64,
    pub kappa0: f64,
    pub limit: SpectralResult,
    pub limit_empty: bool,
    pub probes: Vec<Probe>,
    pub rows: Vec<SqueezeRow>,
}

impl SqueezeResult {
    /// Ground-state energy extrapolated linearly in `eps` from the two
    /// smallest `eps`.
    pub fn extrapolated_ground_state(&self) -> Option<f64> {
        let mut rows: Vec<&SqueezeRow> = self.rows.iter().filter(|r| !r.energies.is_empty()).collect();
        rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        if rows.len() < 2 {
            return None;
        }
        let (e1, f1) = (rows[0].epsilon, rows[0].energies[0]);
        let (e2, f2) = (rows[1].epsilon, rows[1].energies[0]);
        Some((e2 * f1 - e1 * f2) / (e2 - e1))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SqueezeOptions {
    /// Starting `kappa0`; defaults to `sqrt(1 + |<W>|)`.
    pub kappa0: Option<f64>,
    pub probes: Option<Vec<Probe>>,
    pub kappa_max: Option<f64>,
    pub secular: SecularOptions,
}

fn spectrum(graph: &StarGraph, opts: &SqueezeOptions) -> Result<SpectralResult> {
    let mut window = Window::default_for(graph);
    if let Some(hi) = opts.kappa_max {
        window = window.with_hi(hi)?;
    }
    find_eigenvalues_with(graph, window, &opts.secular)
}

/// Compare `H_0(V + W_eps)` with `H_<W>(V)` along `epsilons`.
pub fn squeeze_experiment(
    graph: &StarGraph,
    w: &[EdgePotential],
    epsilons: &[f64],
    opts: &SqueezeOptions,
) -> Result<SqueezeResult> {
    if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("epsilon grid must be positive".into()));
    }
    let limit_g = limit_graph(graph, w)?;
    let mean = limit_g.coupling().finite().unwrap_or(0.0);
    let limit = spectrum(&limit_g, opts)?;
    let squeezed: Vec<StarGraph> = epsilons
        .iter()
        .map(|&e| squeezed_graph(graph, w, e))
        .collect::<Result<_>>()?;
    let spectra = squeezed.iter().map(|g| spectrum(g, opts)).collect::<Result<Vec<_>>>()?;

    let mut kappa0 = opts.kappa0.unwrap_or_else(|| (1.0 + mean.abs()).sqrt());
    let energies = || {
        limit
            .eigenvalues
            .iter()
            .chain(spectra.iter().flat_map(|s| s.eigenvalues.iter()))
            .map(|e| e.energy)
    };
    while energies().any(|e| (e + kappa0 * kappa0).abs() < 0.1) {
        kappa0 += 0.5;
    }
    let k0 = SpectralParameter::new(kappa0)?;
    let probes = opts.probes.clone().unwrap_or_else(|| default_probes(graph.edge_count()));
    let limit_res = StarResolvent::new(&limit_g, k0)?;

    let limit_energies: Vec<f64> = limit.eigenvalues.iter().map(|e| e.energy).collect();
    let mut rows = Vec::with_capacity(epsilons.len());
    for ((&epsilon, g), levels) in epsilons.iter().zip(&squeezed).zip(&spectra) {
        let energies: Vec<f64> = levels.eigenvalues.iter().map(|e| e.energy).collect();
        let eigen_error = if limit_energies.is_empty() {
            None
        } else {
            Some(
                limit_energies
                    .iter()
                    .map(|le| {
                        energies
                            .iter()
                            .map(|e| (e - le).abs())
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max),
            )
        };
        let res = StarResolvent::new(g, k0)?;
        let probe_errors = probe_differences(&res, &limit_res, &probes, graph.edge_count())?;
        let max_kernel_probe_error = probe_errors.iter().copied().fold(0.0, f64::max);
        rows.push(SqueezeRow {
            epsilon,
            energies,
            eigen_error,
            probe_errors,
            max_kernel_probe_error,
            scaled_mean: SqueezeFamily::new(w, epsilon)?.scaled_mean(),
        });
    }
    Ok(SqueezeResult {
        mean,
        kappa0,
        limit_empty: limit.eigenvalues.is_empty(),
        limit,
        probes,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scaling() {
        let w = EdgePotential::well(-3.0, 0.0, 1.0).unwrap();
        let s = scale_potential(&w, 0.5).unwrap();
        assert_eq!(s, EdgePotential::well(-6.0, 0.0, 0.5).unwrap());
        let p = EdgePotential::polynomial(0.0, 2.0, vec![1.0, -2.0, 0.5]).unwrap();
        let q = scale_potential(&p, 0.3).unwrap();
        assert_relative_eq!(q.moment(0), p.moment(0), max_relative = 1e-14);
        assert_relative_eq!(q.moment(1), 0.3 * p.moment(1), max_relative = 1e-14);
    }

    #[test]
    fn zero_w_gives_zero_error() {
        let g = StarGraph::from_potentials(
            &[EdgePotential::well(-1.0, 0.0, 1.0).unwrap(), EdgePotential::zero()],
            Coupling::Delta(0.0),
        )
        .unwrap();
        let w = vec![EdgePotential::zero(); 2];
        let k0 = SpectralParameter::new(2.0).unwrap();
        let errs = kernel_probe_error(&g, &w, 0.1, k0, &default_probes(2)).unwrap();
        assert!(errs.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn needs_ideal_background() {
        let g = StarGraph::free(2, Coupling::Delta(1.0)).unwrap();
        let w = vec![EdgePotential::zero(); 2];
        assert!(squeeze_experiment(&g, &w, &[0.1], &SqueezeOptions::default()).is_err());
    }
}
