//! Solutions of `-psi'' + V psi = -kappa^2 psi` on a single edge.
//!
//! The integrator is a Taylor-series one-step method: on each polynomial
//! piece of `V` the coefficients of the local series obey an exact
//! recurrence, so a step of length `h` with `h * sqrt(max|V + kappa^2|) <= 1`
//! is accurate to rounding. Step nodes are kept and the same series gives
//! dense output between them.

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeEnd};
use crate::poly;

/// Smallest admissible `kappa`.
pub const KAPPA_FLOOR: f64 = 1e-8;

/// Relative size of `|v(0)|` against `max |v|` below which `v(0)` counts as zero.
pub const POLE_TOLERANCE: f64 = 1e-10;

const MAX_STEPS: usize = 10_000_000;
const MAX_TERMS: usize = 400;

/// `kappa > 0` with energy `-kappa^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpectralParameter(f64);

impl SpectralParameter {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa >= KAPPA_FLOOR {
            Ok(SpectralParameter(kappa))
        } else {
            Err(Error::InvalidArgument(format!(
                "kappa must be finite and at least {KAPPA_FLOOR:e}, got {kappa}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn energy(self) -> f64 {
        -self.0 * self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Truncation order of the series; `None` sums to rounding.
    pub order: Option<usize>,
    /// Step length in units of the local wavelength `1 / sqrt(max|V + kappa^2|)`.
    pub step_scale: f64,
    pub max_step: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            order: None,
            step_scale: 1.0,
            max_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    x: f64,
    y: f64,
    dy: f64,
    /// `V + kappa^2` expanded around `x`, valid up to the next node.
    q: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tail {
    None,
    /// `y(x) = y0 exp(-kappa (x - x0))`.
    Decaying { x0: f64, y0: f64, kappa: f64 },
    /// Free solution continued from `(y0, dy0)` at `x0`.
    Free { x0: f64, y0: f64, dy0: f64, kappa: f64 },
}

/// A solution sampled at integrator nodes, with dense evaluation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    nodes: Vec<Node>,
    end: (f64, f64, f64),
    tail: Tail,
    order: Option<usize>,
}

impl Trajectory {
    /// `(y(x), y'(x))`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (xe, ye, dye) = self.end;
        if x >= xe {
            return match self.tail {
                _ if x == xe => (ye, dye),
                Tail::None => (f64::NAN, f64::NAN),
                Tail::Decaying { x0, y0, kappa } => {
                    let e = (-kappa * (x - x0)).exp();
                    (y0 * e, -kappa * y0 * e)
                }
                Tail::Free { x0, y0, dy0, kappa } => {
                    let t = kappa * (x - x0);
                    let (s, c) = (t.sinh(), t.cosh());
                    (y0 * c + dy0 * s / kappa, y0 * kappa * s + dy0 * c)
                }
            };
        }
        if self.nodes.is_empty() || x < self.nodes[0].x {
            return (f64::NAN, f64::NAN);
        }
        let k = self.nodes.partition_point(|n| n.x <= x) - 1;
        let n = &self.nodes[k];
        series(&n.q, n.y, n.dy, x - n.x, self.order).unwrap_or((f64::NAN, f64::NAN))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Node positions followed by the end of the integration interval.
    pub fn node_positions(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.nodes.iter().map(|n| n.x).collect();
        xs.push(self.end.0);
        xs
    }

    /// Right end of the integrated interval; beyond it the tail is analytic.
    pub fn integration_end(&self) -> f64 {
        self.end.0
    }

    /// Number of sign changes of `y` over the integrated interval; exact
    /// zeros at the nodes are skipped.
    pub fn sign_changes(&self) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for y in self.nodes.iter().map(|n| n.y).chain(std::iter::once(self.end.1)) {
            if y == 0.0 {
                continue;
            }
            if last != 0.0 && last.signum() != y.signum() {
                count += 1;
            }
            last = y;
        }
        count
    }

    fn scale(&mut self, c: f64) {
        for n in &mut self.nodes {
            n.y *= c;
            n.dy *= c;
        }
        self.end.1 *= c;
        self.end.2 *= c;
        match &mut self.tail {
            Tail::None => {}
            Tail::Decaying { y0, .. } => *y0 *= c,
            Tail::Free { y0, dy0, .. } => {
                *y0 *= c;
                *dy0 *= c;
            }
        }
    }
}

/// Sum the local series of `y'' = q y` from `(y, dy)` over a step `t`.
fn series(q: &[f64], y: f64, dy: f64, t: f64, order: Option<usize>) -> Option<(f64, f64)> {
    if t == 0.0 {
        return Some((y, dy));
    }
    // b[n] = a[n] t^n; e[m] = q[m] t^(m+2)
    let mut e = Vec::with_capacity(q.len());
    let mut tp = t * t;
    for &c in q {
        e.push(c * tp);
        tp *= t;
    }
    let limit = order.unwrap_or(MAX_TERMS);
    let mut b: Vec<f64> = Vec::with_capacity(40);
    b.push(y);
    b.push(dy * t);
    let mut sum = y;
    let mut dsum = if limit >= 1 { dy * t } else { 0.0 };
    if limit >= 1 {
        sum += dy * t;
    }
    let mut scale = y.abs().max((dy * t).abs());
    let mut n = 0;
    let mut converged = order.is_some();
    while n + 2 <= limit {
        let mut acc = 0.0;
        for (m, &em) in e.iter().enumerate().take(n + 1) {
            acc += em * b[n - m];
        }
        let next = acc / ((n + 1) * (n + 2)) as f64;
        b.push(next);
        sum += next;
        dsum += (n + 2) as f64 * next;
        scale = scale.max(next.abs());
        n += 1;
        if order.is_none() && n + 1 > q.len() + 2 && next.abs() + b[n].abs() <= 1e-18 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    if !(sum.is_finite() && dsum.is_finite()) {
        return None;
    }
    Some((sum, dsum / t))
}

/// Polynomial pieces `(a, b, V coefficients)` covering `[0, end]`.
fn pieces(edge: &Edge, end: f64) -> Vec<(f64, f64, Vec<f64>)> {
    let mut out = Vec::new();
    let mut x = 0.0;
    for s in edge.potential().segments() {
        if s.start() >= end {
            break;
        }
        if s.start() > x {
            out.push((x, s.start(), Vec::new()));
        }
        let b = s.end().min(end);
        out.push((s.start(), b, s.coeffs().to_vec()));
        x = b;
    }
    if x < end {
        out.push((x, end, Vec::new()));
    }
    out
}

fn local_q(coeffs: &[f64], x0: f64, kappa2: f64) -> Vec<f64> {
    let mut q = poly::taylor_shift(coeffs, x0);
    if q.is_empty() {
        q.push(0.0);
    }
    q[0] += kappa2;
    q
}

fn step_count(coeffs: &[f64], a: f64, b: f64, kappa2: f64, opts: &IntegratorOptions) -> Option<usize> {
    let shifted = poly::taylor_shift(coeffs, a);
    let bound = poly::abs_bound(&shifted, 0.0, b - a) + kappa2;
    let omega = bound.sqrt();
    let mut h = opts.max_step;
    if omega > 0.0 {
        h = h.min(opts.step_scale / omega);
    }
    let n = ((b - a) / h).ceil().max(1.0);
    if !n.is_finite() || n > MAX_STEPS as f64 {
        return None;
    }
    Some(n as usize)
}

struct Integration {
    nodes: Vec<Node>,
    y: f64,
    dy: f64,
    max_abs: f64,
    sign_changes: usize,
}

/// Integrate over `pieces` from the left end (`outward`) or the right end.
fn integrate(
    pieces: &[(f64, f64, Vec<f64>)],
    kappa: f64,
    start: (f64, f64),
    outward: bool,
    opts: &IntegratorOptions,
    store: bool,
) -> Result<Integration> {
    let fail = || Error::Integration { edge: None, kappa };
    let kappa2 = kappa * kappa;
    let (mut y, mut dy) = start;
    let mut max_abs = y.abs();
    let mut sign_changes = 0;
    let mut last_sign = if y != 0.0 { y.signum() } else { 0.0 };
    let mut nodes = Vec::new();
    let order: Vec<usize> = if outward {
        (0..pieces.len()).collect()
    } else {
        (0..pieces.len()).rev().collect()
    };
    for i in order {
        let (a, b, coeffs) = &pieces[i];
        let n = step_count(coeffs, *a, *b, kappa2, opts).ok_or_else(fail)?;
        let h = (b - a) / n as f64;
        for k in 0..n {
            let (x0, x1) = if outward {
                (a + k as f64 * h, if k + 1 == n { *b } else { a + (k + 1) as f64 * h })
            } else {
                (b - k as f64 * h, if k + 1 == n { *a } else { b - (k + 1) as f64 * h })
            };
            let q0 = local_q(coeffs, x0, kappa2);
            if store && outward {
                nodes.push(Node { x: x0, y, dy, q: q0.clone() });
            }
            let (y1, dy1) = series(&q0, y, dy, x1 - x0, opts.order).ok_or_else(fail)?;
            y = y1;
            dy = dy1;
            max_abs = max_abs.max(y.abs());
            if y != 0.0 {
                if last_sign != 0.0 && last_sign != y.signum() {
                    sign_changes += 1;
                }
                last_sign = y.signum();
            }
            if store && !outward {
                nodes.push(Node {
                    x: x1,
                    y,
                    dy,
                    q: local_q(coeffs, x1, kappa2),
                });
            }
        }
    }
    if !outward {
        nodes.reverse();
    }
    Ok(Integration {
        nodes,
        y,
        dy,
        max_abs,
        sign_changes,
    })
}

/// End of the integration interval and the seed of the decaying solution there.
fn decaying_seed(edge: &Edge, kappa: f64) -> (f64, f64, f64) {
    match edge.end() {
        EdgeEnd::Infinite => (edge.potential().support_end(), 1.0, -kappa),
        EdgeEnd::Finite { length, omega } => (length, omega.sin(), -omega.cos()),
    }
}

/// Solution `v` satisfying the far-end condition: `exp(-kappa x)` beyond the
/// support on half-lines, `v(l) = sin(omega)`, `v'(l) = -cos(omega)` on intervals.
pub fn solve_decaying(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<Trajectory> {
    let k = kappa.get();
    let (end, y, dy) = decaying_seed(edge, k);
    let run = integrate(&pieces(edge, end), k, (y, dy), false, opts, true)?;
    let mut nodes = run.nodes;
    if nodes.is_empty() || nodes[0].x != 0.0 {
        nodes.insert(
            0,
            Node {
                x: 0.0,
                y: run.y,
                dy: run.dy,
                q: local_q(&[], 0.0, k * k),
            },
        );
    }
    let tail = if edge.is_infinite() {
        Tail::Decaying { x0: end, y0: y, kappa: k }
    } else {
        Tail::None
    };
    // the last stored node sits at the seed point; drop it in favour of `end`
    if nodes.len() > 1 && nodes.last().map(|n| n.x) == Some(end) {
        nodes.pop();
    }
    Ok(Trajectory {
        nodes,
        end: (end, y, dy),
        tail,
        order: opts.order,
    })
}

/// Solution `u` with `u(0) = 0`, `u'(0) = 1`.
pub fn solve_regular(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<Trajectory> {
    let k = kappa.get();
    let end = edge.length().unwrap_or_else(|| edge.potential().support_end());
    let run = integrate(&pieces(edge, end), k, (0.0, 1.0), true, opts, true)?;
    let tail = if edge.is_infinite() {
        Tail::Free {
            x0: end,
            y0: run.y,
            dy0: run.dy,
            kappa: k,
        }
    } else {
        Tail::None
    };
    Ok(Trajectory {
        nodes: run.nodes,
        end: (end, run.y, run.dy),
        tail,
        order: opts.order,
    })
}

/// Data of the far-end solution `v` at the vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    pub v0: f64,
    pub v0prime: f64,
    /// `max |v|` over the integration nodes.
    pub max_abs: f64,
    /// Zeros of `v` in the open edge interior.
    pub zeros: usize,
}

impl BoundaryData {
    pub fn is_pole(&self) -> bool {
        self.v0.abs() < POLE_TOLERANCE * self.max_abs
    }
}

/// Vertex data of `v` without storing the trajectory.
pub fn boundary_values(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<BoundaryData> {
    let k = kappa.get();
    let (end, y, dy) = decaying_seed(edge, k);
    let run = integrate(&pieces(edge, end), k, (y, dy), false, opts, false)?;
    Ok(BoundaryData {
        v0: run.y,
        v0prime: run.dy,
        max_abs: run.max_abs,
        zeros: run.sign_changes,
    })
}

/// `v'(0) / v(0)`, or `Error::Pole` when `v(0)` vanishes.
pub fn log_derivative(edge: &Edge, kappa: SpectralParameter) -> Result<f64> {
    log_derivative_with(edge, kappa, &IntegratorOptions::default())
}

pub fn log_derivative_with(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<f64> {
    let b = boundary_values(edge, kappa, opts)?;
    if b.is_pole() {
        return Err(Error::Pole {
            kappa: kappa.get(),
            edges: Vec::new(),
        });
    }
    Ok(b.v0prime / b.v0)
}

/// Zeros of `v` in the open edge interior. Equals the number of Dirichlet
/// levels of the edge with parameter above `kappa`.
pub fn node_count(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<usize> {
    Ok(boundary_values(edge, kappa, opts)?.zeros)
}

#[derive(Debug, Clone)]
pub struct EdgeSolutionPair {
    pub kappa: f64,
    pub u0prime: f64,
    pub v0: f64,
    pub v0prime: f64,
    pub wronskian: f64,
    /// Sampling extent: support end + 1 on half-lines, the length on intervals.
    pub cutoff: f64,
    u: Trajectory,
    v: Trajectory,
}

pub fn solve_edge(edge: &Edge, kappa: SpectralParameter, opts: &IntegratorOptions) -> Result<EdgeSolutionPair> {
    let u = solve_regular(edge, kappa, opts)?;
    let v = solve_decaying(edge, kappa, opts)?;
    let (v0, v0prime) = v.eval(0.0);
    let cutoff = edge.length().unwrap_or(edge.potential().support_end() + 1.0);
    Ok(EdgeSolutionPair {
        kappa: kappa.get(),
        u0prime: 1.0,
        v0,
        v0prime,
        wronskian: -v0,
        cutoff,
        u,
        v,
    })
}

impl EdgeSolutionPair {
    pub fn u(&self, x: f64) -> (f64, f64) {
        self.u.eval(x)
    }

    pub fn v(&self, x: f64) -> (f64, f64) {
        self.v.eval(x)
    }

    pub fn regular(&self) -> &Trajectory {
        &self.u
    }

    pub fn decaying(&self) -> &Trajectory {
        &self.v
    }

    pub fn wronskian_at(&self, x: f64) -> f64 {
        let (u, du) = self.u(x);
        let (v, dv) = self.v(x);
        u * dv - du * v
    }

    pub fn max_abs_v(&self) -> f64 {
        self.v
            .nodes
            .iter()
            .map(|n| n.y.abs())
            .fold(self.v.end.1.abs(), f64::max)
    }

    pub fn is_pole(&self) -> bool {
        self.v0.abs() < POLE_TOLERANCE * self.max_abs_v()
    }

    pub fn log_derivative(&self) -> Result<f64> {
        if self.is_pole() {
            return Err(Error::Pole {
                kappa: self.kappa,
                edges: Vec::new(),
            });
        }
        Ok(self.v0prime / self.v0)
    }

    /// `(x, v(x), v'(x))` on `samples` equally spaced points of `[0, cutoff]`.
    pub fn trajectory(&self, samples: usize) -> Vec<(f64, f64, f64)> {
        let n = samples.max(2);
        (0..n)
            .map(|i| {
                let x = self.cutoff * i as f64 / (n - 1) as f64;
                let (v, dv) = self.v(x);
                (x, v, dv)
            })
            .collect()
    }

    /// Same pair with `v` multiplied by `c`.
    pub fn with_decaying_scaled(&self, c: f64) -> EdgeSolutionPair {
        let mut out = self.clone();
        out.v.scale(c);
        out.v0 *= c;
        out.v0prime *= c;
        out.wronskian *= c;
        out
    }
}

/// `max |W(x) - W(0)| / |W(0)|` over the integrator nodes of both solutions
/// and a few points on the tail.
pub fn check_wronskian(pair: &EdgeSolutionPair) -> f64 {
    let w0 = pair.wronskian;
    let mut xs = pair.u.node_positions();
    xs.extend(pair.v.node_positions());
    let end = pair.u.integration_end().max(pair.v.integration_end());
    for k in 0..=8 {
        let x = (end + (pair.cutoff - end).max(0.0) * k as f64 / 8.0).min(pair.cutoff);
        xs.push(x);
    }
    xs.iter()
        .filter(|&&x| x <= pair.cutoff)
        .map(|&x| (pair.wronskian_at(x) - w0).abs() / w0.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::EdgePotential;
    use approx::assert_relative_eq;

    fn kappa(k: f64) -> SpectralParameter {
        SpectralParameter::new(k).unwrap()
    }

    #[test]
    fn kappa_floor() {
        assert!(SpectralParameter::new(1e-9).is_err());
        assert!(SpectralParameter::new(f64::NAN).is_err());
        assert!(SpectralParameter::new(1e-8).is_ok());
    }

    #[test]
    fn free_edge() {
        let e = Edge::free();
        let p = solve_edge(&e, kappa(1.0), &IntegratorOptions::default()).unwrap();
        assert_eq!((p.v0, p.v0prime), (1.0, -1.0));
        assert_relative_eq!(p.u(1.0).0, 1f64.sinh(), max_relative = 1e-14);
        assert_relative_eq!(p.wronskian, -1.0);
        assert_relative_eq!(log_derivative(&e, kappa(2.0)).unwrap(), -2.0);
    }

    #[test]
    fn finite_dirichlet_edge() {
        let e = Edge::finite(1.0, 0.0, EdgePotential::zero()).unwrap();
        let l = log_derivative(&e, kappa(1.0)).unwrap();
        assert_relative_eq!(l, -1.0 / 1f64.tanh(), max_relative = 1e-13);
    }

    #[test]
    fn square_well_reference() {
        let e = Edge::infinite(EdgePotential::well(-2.0, 0.0, 1.0).unwrap());
        let p = solve_edge(&e, kappa(0.5), &IntegratorOptions::default()).unwrap();
        assert_relative_eq!(p.v0, 0.611796857302389910, max_relative = 1e-13);
        assert_relative_eq!(p.v0prime, 1.159734046857773563, max_relative = 1e-13);
        assert_relative_eq!(p.u(1.0).0, 0.732816237754484259, max_relative = 1e-13);
        assert!(check_wronskian(&p) < 1e-12);
    }

    #[test]
    fn dense_output_matches_nodes() {
        let v = EdgePotential::polynomial(0.0, 2.0, vec![-3.0, 1.0, 0.5]).unwrap();
        let e = Edge::infinite(v);
        let opts = IntegratorOptions::default();
        let p = solve_edge(&e, kappa(0.8), &opts).unwrap();
        let fine = IntegratorOptions {
            max_step: 0.01,
            ..opts
        };
        let q = solve_edge(&e, kappa(0.8), &fine).unwrap();
        for x in [0.0, 0.123, 0.77, 1.5, 1.999, 2.5] {
            let scale = p.v0 / q.v0;
            assert_relative_eq!(p.v(x).0, scale * q.v(x).0, max_relative = 1e-11);
            assert_relative_eq!(p.u(x).0, q.u(x).0, max_relative = 1e-11);
        }
    }

    #[test]
    fn scaled_wronskian() {
        let e = Edge::infinite(EdgePotential::well(-1.0, 0.0, 1.0).unwrap());
        let p = solve_edge(&e, kappa(0.3), &IntegratorOptions::default()).unwrap();
        let q = p.with_decaying_scaled(7.0);
        assert_relative_eq!(q.wronskian, 7.0 * p.wronskian);
        assert_relative_eq!(check_wronskian(&q), check_wronskian(&p), epsilon = 1e-14);
    }

    #[test]
    fn deep_well_pole_and_nodes() {
        let e = Edge::infinite(EdgePotential::well(-20.0, 0.0, 1.0).unwrap());
        let opts = IntegratorOptions::default();
        let pole = 3.68213525591073550;
        assert_eq!(node_count(&e, kappa(pole - 0.01), &opts).unwrap(), 1);
        assert_eq!(node_count(&e, kappa(pole + 0.01), &opts).unwrap(), 0);
        assert!(matches!(log_derivative(&e, kappa(pole)), Err(Error::Pole { .. })));
        let traj = solve_decaying(&e, kappa(pole - 0.01), &opts).unwrap();
        assert_eq!(traj.sign_changes(), 1);
    }
}
