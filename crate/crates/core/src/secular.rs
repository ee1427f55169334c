//! The secular function `M(kappa) = sum_j v_j'(0) / v_j(0)` and the
//! negative spectrum of the star as roots of `M(kappa) = alpha`.
//!
//! Between consecutive poles (Dirichlet levels of the decoupled edges) `M`
//! decreases from `+inf` to `-inf`, so every pole-free interval holds exactly
//! one root, found by bisection. `m` edges sharing a pole contribute an
//! eigenvalue of multiplicity `m - 1` there.

use crate::edge::{boundary_values, BoundaryData, IntegratorOptions, SpectralParameter};
use crate::error::{Error, Result};
use crate::graph::{Coupling, Edge, EdgeEnd, StarGraph};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecularOptions {
    /// Samples of the uniform pre-scan per window.
    pub scan_samples: usize,
    /// Absolute bisection tolerance in `kappa`.
    pub tol_root: f64,
    /// Poles closer than this are one shared pole.
    pub pole_cluster: f64,
    pub integrator: IntegratorOptions,
}

impl Default for SecularOptions {
    fn default() -> Self {
        SecularOptions {
            scan_samples: 2000,
            tol_root: 1e-12,
            pole_cluster: 1e-9,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Default lower end of the search window.
pub const DEFAULT_KAPPA_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad kappa window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    /// `[1e-6, sqrt(max|V|) + |alpha| + 1]`, widened for Robin ends that bind
    /// on their own.
    pub fn default_for(graph: &StarGraph) -> Window {
        let depth = graph
            .edges()
            .iter()
            .map(|e| e.potential().abs_bound())
            .fold(0.0, f64::max);
        let alpha = graph.coupling().finite().unwrap_or(0.0).abs();
        let robin = graph
            .edges()
            .iter()
            .map(|e| match e.end() {
                EdgeEnd::Finite { omega, .. } if omega.sin() != 0.0 => (-omega.cos() / omega.sin()).max(0.0),
                _ => 0.0,
            })
            .fold(0.0, f64::max);
        Window {
            lo: DEFAULT_KAPPA_MIN,
            hi: depth.sqrt() + alpha + 1.0 + robin,
        }
    }

    pub fn with_hi(self, hi: f64) -> Result<Window> {
        Window::new(self.lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDerivative {
    Value(f64),
    Pole,
}

impl LogDerivative {
    pub fn value(self) -> Option<f64> {
        match self {
            LogDerivative::Value(v) => Some(v),
            LogDerivative::Pole => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecularSample {
    pub kappa: f64,
    /// `None` when some edge has a pole at `kappa`.
    pub m_value: Option<f64>,
    pub per_edge: Vec<LogDerivative>,
}

impl SecularSample {
    pub fn pole_edges(&self) -> Vec<usize> {
        self.per_edge
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == LogDerivative::Pole)
            .map(|(j, _)| j)
            .collect()
    }

    /// `M(kappa)`, or `Error::Pole` naming the offending edges.
    pub fn m(&self) -> Result<f64> {
        self.m_value.ok_or_else(|| Error::Pole {
            kappa: self.kappa,
            edges: self.pole_edges(),
        })
    }
}

fn edge_data(graph: &StarGraph, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<Vec<BoundaryData>> {
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(j, e)| boundary_values(e, kappa, opts).map_err(|err| err.on_edge(j)))
        .collect()
}

pub fn secular_value(graph: &StarGraph, kappa: SpectralParameter) -> Result<SecularSample> {
    secular_value_with(graph, kappa, &IntegratorOptions::default())
}

pub fn secular_value_with(graph: &StarGraph, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<SecularSample> {
    let per_edge: Vec<LogDerivative> = edge_data(graph, kappa, opts)?
        .iter()
        .map(|b| {
            if b.is_pole() {
                LogDerivative::Pole
            } else {
                LogDerivative::Value(b.v0prime / b.v0)
            }
        })
        .collect();
    let m_value = per_edge.iter().map(|l| l.value()).sum::<Option<f64>>();
    Ok(SecularSample {
        kappa: kappa.get(),
        m_value,
        per_edge,
    })
}

/// `M(kappa)` without the pole guard, for bisection away from poles.
fn raw_m(graph: &StarGraph, kappa: f64, opts: &IntegratorOptions) -> Result<f64> {
    let k = SpectralParameter::new(kappa)?;
    Ok(edge_data(graph, k, opts)?.iter().map(|b| b.v0prime / b.v0).sum())
}

fn zeros_at(edge: &Edge, kappa: f64, opts: &IntegratorOptions) -> Result<usize> {
    Ok(boundary_values(edge, SpectralParameter::new(kappa)?, opts)?.zeros)
}

/// Dirichlet levels of a single edge in the window, ascending.
///
/// A uniform scan counts the zeros of `v(.; kappa)` on the edge, which equals
/// the number of levels above `kappa`; each drop of the count is resolved by
/// bisection on the count.
pub fn dirichlet_edge_spectrum(edge: &Edge, window: Window, opts: &SecularOptions) -> Result<Vec<f64>> {
    let n = opts.scan_samples.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|i| window.lo + (window.hi - window.lo) * i as f64 / (n - 1) as f64)
        .collect();
    let counts = par::map(&grid, |&k| zeros_at(edge, k, &opts.integrator))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut levels = Vec::new();
    for i in 0..n - 1 {
        if counts[i] > counts[i + 1] {
            isolate(edge, grid[i], grid[i + 1], counts[i], counts[i + 1], opts, 0, &mut levels)?;
        } else if counts[i] < counts[i + 1] {
            return Err(Error::WindowTooCoarse {
                lo: grid[i],
                hi: grid[i + 1],
            });
        }
    }
    Ok(levels)
}

#[allow(clippy::too_many_arguments)]
fn isolate(
    edge: &Edge,
    a: f64,
    b: f64,
    na: usize,
    nb: usize,
    opts: &SecularOptions,
    depth: usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    if na == nb {
        return Ok(());
    }
    let mid = 0.5 * (a + b);
    if na == nb + 1 {
        let (mut lo, mut hi) = (a, b);
        while hi - lo > opts.tol_root {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if zeros_at(edge, m, &opts.integrator)? == na {
                lo = m;
            } else {
                hi = m;
            }
        }
        out.push(0.5 * (lo + hi));
        return Ok(());
    }
    if depth > 64 || mid <= a || mid >= b {
        return Err(Error::WindowTooCoarse { lo: a, hi: b });
    }
    let nm = zeros_at(edge, mid, &opts.integrator)?;
    if nm > na || nm < nb {
        return Err(Error::WindowTooCoarse { lo: a, hi: b });
    }
    isolate(edge, a, mid, na, nm, opts, depth + 1, out)?;
    isolate(edge, mid, b, nm, nb, opts, depth + 1, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvalue {
    pub kappa: f64,
    pub energy: f64,
    pub multiplicity: usize,
}

impl Eigenvalue {
    fn new(kappa: f64, multiplicity: usize) -> Self {
        Eigenvalue {
            kappa,
            energy: -kappa * kappa,
            multiplicity,
        }
    }
}

/// A Dirichlet level shared by the listed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub kappa: f64,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    /// Sorted by decreasing `kappa`, i.e. ground state first.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Sorted by increasing `kappa`.
    pub poles: Vec<Pole>,
    pub window: Window,
}

impl SpectralResult {
    /// Number of eigenvalues counted with multiplicity.
    pub fn count(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }

    pub fn ground_state(&self) -> Option<&Eigenvalue> {
        self.eigenvalues.first()
    }
}

/// Pooled Dirichlet levels of all edges, clustered.
pub fn pooled_poles(graph: &StarGraph, window: Window, opts: &SecularOptions) -> Result<Vec<Pole>> {
    Ok(clustered_poles(graph, window, opts)?.into_iter().map(|(p, _)| p).collect())
}

/// Clusters with the largest member `kappa`.
fn clustered_poles(graph: &StarGraph, window: Window, opts: &SecularOptions) -> Result<Vec<(Pole, f64)>> {
    let per_edge = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(j, e)| dirichlet_edge_spectrum(e, window, opts).map_err(|err| err.on_edge(j)))
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<(f64, usize)> = per_edge
        .iter()
        .enumerate()
        .flat_map(|(j, ks)| ks.iter().map(move |&k| (k, j)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut poles: Vec<(Pole, f64)> = Vec::new();
    for (k, j) in all {
        match poles.last_mut() {
            Some((p, upper)) if k - *upper <= opts.pole_cluster => {
                p.edges.push(j);
                *upper = k;
            }
            _ => poles.push((Pole { kappa: k, edges: vec![j] }, k)),
        }
    }
    Ok(poles)
}

pub fn find_eigenvalues(graph: &StarGraph, window: Window) -> Result<SpectralResult> {
    find_eigenvalues_with(graph, window, &SecularOptions::default())
}

pub fn find_eigenvalues_with(graph: &StarGraph, window: Window, opts: &SecularOptions) -> Result<SpectralResult> {
    let clusters = clustered_poles(graph, window, opts)?;
    let poles: Vec<Pole> = clusters.iter().map(|(p, _)| p.clone()).collect();
    let mut eigenvalues = Vec::new();
    let alpha = match graph.coupling() {
        Coupling::Dirichlet => {
            eigenvalues = poles.iter().map(|p| Eigenvalue::new(p.kappa, p.edges.len())).collect();
            eigenvalues.reverse();
            return Ok(SpectralResult {
                eigenvalues,
                poles,
                window,
            });
        }
        Coupling::Delta(a) => a,
    };
    for p in poles.iter().filter(|p| p.edges.len() >= 2) {
        eigenvalues.push(Eigenvalue::new(p.kappa, p.edges.len() - 1));
    }
    // pole-free intervals; the cluster span is skipped
    let mut bounds: Vec<(f64, f64, bool, bool)> = Vec::new();
    let mut left = (window.lo, false);
    for (p, upper) in &clusters {
        bounds.push((left.0, p.kappa, left.1, true));
        left = (*upper, true);
    }
    bounds.push((left.0, window.hi, left.1, false));
    let roots = par::map(&bounds, |&(a, b, a_pole, b_pole)| {
        root_in(graph, alpha, a, b, a_pole, b_pole, opts)
    });
    for r in roots {
        if let Some(k) = r? {
            eigenvalues.push(Eigenvalue::new(k, 1));
        }
    }
    eigenvalues.sort_by(|a, b| b.kappa.total_cmp(&a.kappa));
    Ok(SpectralResult {
        eigenvalues,
        poles,
        window,
    })
}

/// Root of `M = alpha` in `(a, b)`. A pole end supplies the sign of `M - alpha`
/// (`+` just right of a pole, `-` just left of one).
fn root_in(
    graph: &StarGraph,
    alpha: f64,
    a: f64,
    b: f64,
    a_pole: bool,
    b_pole: bool,
    opts: &SecularOptions,
) -> Result<Option<f64>> {
    if b <= a {
        return Ok(None);
    }
    let f = |k: f64| raw_m(graph, k, &opts.integrator).map(|m| m - alpha);
    if !a_pole && f(a)? <= 0.0 {
        return Ok(None);
    }
    if !b_pole && f(b)? >= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (a, b);
    let (mut flo, mut fhi) = (None, None);
    while hi - lo > opts.tol_root {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        let fm = f(m)?;
        if fm > 0.0 {
            (lo, flo) = (m, Some(fm));
        } else if fm < 0.0 {
            (hi, fhi) = (m, Some(fm));
        } else {
            return Ok(Some(m));
        }
    }
    // one secant step on the final bracket
    if let (Some(fl), Some(fh)) = (flo, fhi) {
        let x = lo + fl * (hi - lo) / (fl - fh);
        if x >= lo && x <= hi {
            return Ok(Some(x));
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
