//! Closed-form propagation of `(psi, psi')` across piecewise-constant
//! potentials. An independent path used to check the series integrator.

use crate::edge::SpectralParameter;
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeEnd};

/// Propagate `(y, y')` of `y'' = q y` (constant `q`) over a distance `d`.
pub fn propagate(q: f64, d: f64, y: f64, dy: f64) -> (f64, f64) {
    if q > 0.0 {
        let s = q.sqrt();
        let (sh, ch) = ((s * d).sinh(), (s * d).cosh());
        (y * ch + dy * sh / s, y * s * sh + dy * ch)
    } else if q < 0.0 {
        let w = (-q).sqrt();
        let (sn, cs) = (w * d).sin_cos();
        (y * cs + dy * sn / w, -y * w * sn + dy * cs)
    } else {
        (y + dy * d, dy)
    }
}

/// Constant pieces `(a, b, V)` covering `[0, end]`.
fn constant_pieces(edge: &Edge, end: f64) -> Result<Vec<(f64, f64, f64)>> {
    let v = edge.potential();
    if !v.is_piecewise_constant() {
        return Err(Error::InvalidArgument(
            "transfer matrices need a piecewise-constant potential".into(),
        ));
    }
    let mut out = Vec::new();
    let mut x = 0.0;
    for s in v.segments() {
        if s.start() > x {
            out.push((x, s.start(), 0.0));
        }
        out.push((s.start(), s.end(), s.coeffs().first().copied().unwrap_or(0.0)));
        x = s.end();
    }
    if x < end {
        out.push((x, end, 0.0));
    }
    Ok(out)
}

/// `(v(0), v'(0))` of the far-end solution seeded as in [`crate::edge::solve_decaying`].
pub fn decaying_at_vertex(edge: &Edge, kappa: SpectralParameter) -> Result<(f64, f64)> {
    decaying_at(edge, kappa, 0.0)
}

/// `(v(x), v'(x))` of the far-end solution.
pub fn decaying_at(edge: &Edge, kappa: SpectralParameter, x: f64) -> Result<(f64, f64)> {
    let k = kappa.get();
    let (end, mut y, mut dy) = match edge.end() {
        EdgeEnd::Infinite => (edge.potential().support_end(), 1.0, -k),
        EdgeEnd::Finite { length, omega } => (length, omega.sin(), -omega.cos()),
    };
    if x >= end {
        if edge.is_infinite() {
            let e = (-k * (x - end)).exp();
            return Ok((e, -k * e));
        }
        return Ok((y, dy));
    }
    for &(a, b, v) in constant_pieces(edge, end)?.iter().rev() {
        if b <= x {
            break;
        }
        let lo = a.max(x);
        (y, dy) = propagate(v + k * k, lo - b, y, dy);
    }
    Ok((y, dy))
}

/// `(u(x), u'(x))` with `u(0) = 0`, `u'(0) = 1`.
pub fn regular_at(edge: &Edge, kappa: SpectralParameter, x: f64) -> Result<(f64, f64)> {
    let k = kappa.get();
    let end = edge.length().unwrap_or_else(|| edge.potential().support_end());
    let (mut y, mut dy) = (0.0, 1.0);
    for &(a, b, v) in &constant_pieces(edge, end)? {
        if a >= x {
            break;
        }
        (y, dy) = propagate(v + k * k, b.min(x) - a, y, dy);
    }
    if x > end && edge.is_infinite() {
        (y, dy) = propagate(k * k, x - end, y, dy);
    }
    Ok((y, dy))
}

pub fn log_derivative(edge: &Edge, kappa: SpectralParameter) -> Result<f64> {
    let (v, dv) = decaying_at_vertex(edge, kappa)?;
    Ok(dv / v)
}

/// `-u(x<) v(x>) / W`.
pub fn edge_green(edge: &Edge, kappa: SpectralParameter, x: f64, y: f64) -> Result<f64> {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let (v0, _) = decaying_at_vertex(edge, kappa)?;
    let (u, _) = regular_at(edge, kappa, lo)?;
    let (v, _) = decaying_at(edge, kappa, hi)?;
    Ok(u * v / v0)
}
