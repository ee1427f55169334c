//! Dense monomial-basis polynomial helpers. Coefficients are stored lowest
//! degree first.

pub(crate) fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Antiderivative vanishing at 0.
pub(crate) fn antiderivative(coeffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(0.0);
    for (m, &c) in coeffs.iter().enumerate() {
        out.push(c / (m + 1) as f64);
    }
    out
}

pub(crate) fn integrate(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let anti = antiderivative(coeffs);
    eval(&anti, b) - eval(&anti, a)
}

pub(crate) fn mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (k, &b) in q.iter().enumerate() {
            out[i + k] += a * b;
        }
    }
    out
}

pub(crate) fn sub(p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub(crate) fn add(p: &[f64], q: &[f64]) -> Vec<f64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| p.get(i).copied().unwrap_or(0.0) + q.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Multiply by `x^k`.
pub(crate) fn shift_up(p: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    out.extend_from_slice(p);
    out
}

/// Coefficients of `t -> p(x0 + t)`.
pub(crate) fn taylor_shift(p: &[f64], x0: f64) -> Vec<f64> {
    let mut out = p.to_vec();
    let n = out.len();
    if x0 == 0.0 {
        return out;
    }
    // repeated synthetic division
    for i in 0..n {
        for k in (i..n - 1).rev() {
            out[k] += x0 * out[k + 1];
        }
    }
    out
}

/// `q(x) = p(s x)`.
pub(crate) fn rescale_argument(p: &[f64], s: f64) -> Vec<f64> {
    let mut f = 1.0;
    p.iter()
        .map(|&c| {
            let v = c * f;
            f *= s;
            v
        })
        .collect()
}

/// Upper bound of `|p|` on `[a, b]`.
pub(crate) fn abs_bound(p: &[f64], a: f64, b: f64) -> f64 {
    let r = a.abs().max(b.abs());
    let mut pow = 1.0;
    let mut total = 0.0;
    for &c in p {
        total += c.abs() * pow;
        pow *= r;
    }
    total
}

pub(crate) fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.last() == Some(&0.0) {
        p.pop();
    }
    p
}
