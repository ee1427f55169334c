//! Birman–Schwinger kernel of `H_0(lambda V)` on a star of half-lines,
//!
//! `K_jl(x, y) = |V_j(x)|^(1/2) G_jl(x, y) V_l(y)^(1/2)`,
//!
//! with `G` the free ideal-coupling kernel and `V^(1/2) = sign(V) |V|^(1/2)`.
//! `-kappa^2` is an eigenvalue of `H_0(lambda V)` exactly when `lambda K` has
//! the eigenvalue `-1`.

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use crate::edge::SpectralParameter;
use crate::error::{Error, Result};
use crate::potential::{abs_distance_integral, sum_distance_integral, EdgePotential};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_NODES_PER_EDGE: usize = 64;
const MIN_NODES_PER_EDGE: usize = 8;
const IMAGINARY_TOLERANCE: f64 = 1e-10;

fn signed_root(v: f64) -> f64 {
    v.signum() * v.abs().sqrt()
}

/// `sinh(kappa x<) exp(-kappa x>) / kappa`, the Dirichlet half-line kernel.
fn half_line_kernel(kappa: f64, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    -(-kappa * (hi - lo)).exp() * (-2.0 * kappa * lo).exp_m1() / (2.0 * kappa)
}

/// Free star kernel with `alpha = 0`.
fn free_kernel(kappa: f64, n: usize, j: usize, x: f64, l: usize, y: f64) -> f64 {
    let vertex = (-kappa * (x + y)).exp() / (kappa * n as f64);
    if j == l {
        half_line_kernel(kappa, x, y) + vertex
    } else {
        vertex
    }
}

/// `K_jl(x, y)`.
pub fn bs_kernel(potentials: &[EdgePotential], kappa: SpectralParameter, j: usize, x: f64, l: usize, y: f64) -> f64 {
    let vx = potentials[j].value(x);
    let vy = potentials[l].value(y);
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    vx.abs().sqrt() * free_kernel(kappa.get(), potentials.len(), j, x, l, y) * signed_root(vy)
}

#[derive(Debug, Clone)]
struct Node {
    edge: usize,
    x: f64,
    w: f64,
    v: f64,
}

/// Nyström matrix of `K` on Gauss–Legendre nodes over the potential supports.
///
/// Off-diagonal entries are `K(x_a, x_b) sqrt(w_a w_b)`. The diagonal carries
/// the singularity-subtracted value `Q_a - sum_{b != a} G_ab V_b w_b` with
/// `Q_a = sum_l int G_jl(x_a, y) V_l(y) dy`, which removes the low-order error
/// from the kink of `G` on the diagonal.
#[derive(Debug, Clone)]
pub struct BsKernelGrid {
    kappa: f64,
    nodes: Vec<Node>,
    matrix: DMatrix<f64>,
}

impl BsKernelGrid {
    pub fn new(potentials: &[EdgePotential], kappa: SpectralParameter, nodes_per_edge: usize) -> Result<Self> {
        if nodes_per_edge < MIN_NODES_PER_EDGE {
            return Err(Error::InvalidArgument(format!(
                "nodes_per_edge must be at least {MIN_NODES_PER_EDGE}, got {nodes_per_edge}"
            )));
        }
        let k = kappa.get();
        let n_edges = potentials.len();
        let mut nodes = Vec::new();
        for (j, v) in potentials.iter().enumerate() {
            let segs = v.segments();
            let total: f64 = segs.iter().map(|s| s.len()).sum();
            for s in segs {
                let m = ((nodes_per_edge as f64 * s.len() / total).round() as usize).max(MIN_NODES_PER_EDGE);
                let rule = GaussLegendre::new(m);
                for (x, w) in rule.mapped(s.start(), s.end()) {
                    nodes.push(Node { edge: j, x, w, v: s.value(x) });
                }
            }
        }
        let dim = nodes.len();
        let g = |a: &Node, b: &Node| free_kernel(k, n_edges, a.edge, a.x, b.edge, b.x);
        let sub_rule = GaussLegendre::new(32);
        let q: Vec<f64> = nodes
            .iter()
            .map(|a| {
                let mut total = 0.0;
                for (l, v) in potentials.iter().enumerate() {
                    for s in v.segments() {
                        let mut cuts = vec![s.start()];
                        if l == a.edge && a.x > s.start() && a.x < s.end() {
                            cuts.push(a.x);
                        }
                        cuts.push(s.end());
                        for c in cuts.windows(2) {
                            total += sub_rule.integrate(c[0], c[1], |y| {
                                free_kernel(k, n_edges, a.edge, a.x, l, y) * s.value(y)
                            });
                        }
                    }
                }
                total
            })
            .collect();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (ia, a) in nodes.iter().enumerate() {
            let mut off = 0.0;
            for (ib, b) in nodes.iter().enumerate() {
                if ia == ib {
                    continue;
                }
                let gab = g(a, b);
                off += gab * b.v * b.w;
                matrix[(ia, ib)] = a.v.abs().sqrt() * gab * signed_root(b.v) * (a.w * b.w).sqrt();
            }
            matrix[(ia, ia)] = q[ia] - off;
        }
        Ok(BsKernelGrid { kappa: k, nodes, matrix })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dimension(&self) -> usize {
        self.nodes.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `(edge, x, weight)` of each node.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().map(|n| (n.edge, n.x, n.w))
    }

    /// Largest entry of `|A - A^T|` relative to `max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.matrix.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).amax() / scale
    }

    /// Real eigenvalues sorted by decreasing magnitude.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.nodes.is_empty() {
            return Ok(Vec::new());
        }
        let mut out: Vec<f64> = if self.asymmetry() <= 1e-12 {
            let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
            SymmetricEigen::try_new(sym, f64::EPSILON, 0)
                .ok_or(Error::EigenFailure)?
                .eigenvalues
                .iter()
                .copied()
                .collect()
        } else {
            let scale = self.matrix.amax();
            Schur::try_new(self.matrix.clone(), f64::EPSILON, 0)
                .ok_or(Error::EigenFailure)?
                .complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() <= IMAGINARY_TOLERANCE * scale.max(1.0))
                .map(|z| z.re)
                .collect()
        };
        out.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Ok(out)
    }
}

pub fn bs_spectrum(potentials: &[EdgePotential], kappa: SpectralParameter, nodes_per_edge: usize) -> Result<Vec<f64>> {
    BsKernelGrid::new(potentials, kappa, nodes_per_edge)?.eigenvalues()
}

/// `lambda = -1 / mu(kappa)` with `mu` the most negative eigenvalue of `K`:
/// the coupling at which `-kappa^2` is the ground state of `H_0(lambda V)`.
pub fn coupling_threshold(potentials: &[EdgePotential], kappa: SpectralParameter, nodes_per_edge: usize) -> Result<f64> {
    let mu = bs_spectrum(potentials, kappa, nodes_per_edge)?
        .into_iter()
        .fold(0.0, f64::min);
    if mu >= 0.0 {
        return Err(Error::NoThreshold {
            kappa: kappa.get(),
            principal: mu,
        });
    }
    Ok(-1.0 / mu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountBound {
    /// `<V^(-)> = sum_j int V_j^(-)`.
    pub mean_negative: f64,
    /// `sum_j int int |x - y| V_j^(-)(x) V_j^(-)(y)`.
    pub diag_term: f64,
    /// `sum_{j,l} (2/N - delta_jl) int int (x + y) V_j^(-)(x) V_l^(-)(y)`.
    pub cross_term: f64,
    /// `1 + (diag_term + cross_term) / (2 <V^(-)>)`.
    pub bound: f64,
}

/// Upper bound on the number of negative eigenvalues of `H_0(V)`.
pub fn count_bound(potentials: &[EdgePotential]) -> Result<CountBound> {
    let n = potentials.len() as f64;
    let neg: Vec<EdgePotential> = potentials.iter().map(EdgePotential::negative_part).collect();
    let mean_negative: f64 = neg.iter().map(|v| v.moment(0)).sum();
    if mean_negative <= 0.0 {
        return Err(Error::ZeroNegativePart);
    }
    let diag_term: f64 = neg.iter().map(|v| abs_distance_integral(v.segments())).sum();
    let mut cross_term = 0.0;
    for (j, vj) in neg.iter().enumerate() {
        for (l, vl) in neg.iter().enumerate() {
            let delta = if j == l { 1.0 } else { 0.0 };
            cross_term += (2.0 / n - delta) * sum_distance_integral(vj, vl);
        }
    }
    Ok(CountBound {
        mean_negative,
        diag_term,
        cross_term,
        bound: 1.0 + (diag_term + cross_term) / (2.0 * mean_negative),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k(x: f64) -> SpectralParameter {
        SpectralParameter::new(x).unwrap()
    }

    fn wells(n: usize) -> Vec<EdgePotential> {
        vec![EdgePotential::well(-1.0, 0.0, 1.0).unwrap(); n]
    }

    #[test]
    fn kernel_substitution() {
        let v = wells(2);
        let got = bs_kernel(&v, k(1.0), 0, 0.2, 0, 0.5);
        let expected = -(0.2f64.sinh() * (-0.5f64).exp() + (-0.7f64).exp() / 2.0);
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        assert_eq!(bs_kernel(&[EdgePotential::zero(), EdgePotential::zero()], k(1.0), 0, 0.1, 1, 0.2), 0.0);
    }

    #[test]
    fn symmetric_for_wells() {
        let grid = BsKernelGrid::new(&wells(3), k(0.5), 16).unwrap();
        assert_eq!(grid.dimension(), 48);
        assert!(grid.asymmetry() <= 1e-12);
    }

    #[test]
    fn principal_values() {
        let v = wells(3);
        for (kap, mu) in [(0.02, -49.340380608039), (0.2, -4.39848344358), (1.0, -0.57465521648)] {
            let levels = bs_spectrum(&v, k(kap), 64).unwrap();
            assert_relative_eq!(levels[0], mu, max_relative = 1e-9);
        }
    }

    #[test]
    fn repulsive_has_no_threshold() {
        let v = vec![EdgePotential::well(1.0, 0.0, 1.0).unwrap(); 2];
        assert!(matches!(coupling_threshold(&v, k(0.3), 16), Err(Error::NoThreshold { .. })));
    }

    #[test]
    fn unit_well_bound() {
        let b = count_bound(&wells(2)).unwrap();
        assert_relative_eq!(b.mean_negative, 2.0);
        assert_relative_eq!(b.diag_term, 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(b.cross_term, 2.0, max_relative = 1e-14);
        assert!((b.bound - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(count_bound(&[EdgePotential::zero(), EdgePotential::zero()]), Err(Error::ZeroNegativePart));
    }
}
