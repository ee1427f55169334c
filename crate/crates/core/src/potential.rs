//! Compactly supported piecewise-polynomial edge potentials and the exact
//! moment and double-integral formulas built on them.

use crate::error::{Error, Result};
use crate::poly;

/// `V(x) = sum_m coeffs[m] x^m` on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    start: f64,
    end: f64,
    coeffs: Vec<f64>,
}

impl Segment {
    /// A polynomial piece. Unlike [`EdgePotential`], a bare segment may lie
    /// on the negative half-line (used for odd extensions).
    pub fn new(start: f64, end: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(Error::Potential(format!(
                "segment [{start}, {end}) must be finite with start < end"
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Potential("non-finite coefficient".into()));
        }
        Ok(Segment { start, end, coeffs })
    }

    pub fn constant(value: f64, start: f64, end: f64) -> Result<Self> {
        Segment::new(start, end, vec![value])
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|&c| c == 0.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        poly::eval(&self.coeffs, x)
    }

    /// `int_start^end x^n V(x) dx`
    pub fn moment(&self, n: usize) -> f64 {
        poly::integrate(&poly::shift_up(&self.coeffs, n), self.start, self.end)
    }

    fn integral_over(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.start);
        let hi = b.min(self.end);
        if hi <= lo {
            0.0
        } else {
            poly::integrate(&self.coeffs, lo, hi)
        }
    }

    fn contains(&self, x: f64) -> bool {
        self.start <= x && x < self.end
    }
}

/// Real potential on one edge: a sorted list of disjoint polynomial pieces
/// inside `[0, inf)`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgePotential {
    segments: Vec<Segment>,
}

impl EdgePotential {
    pub fn zero() -> Self {
        EdgePotential::default()
    }

    /// Constant `value` on `[start, end)`.
    pub fn well(value: f64, start: f64, end: f64) -> Result<Self> {
        EdgePotential::from_segments(vec![Segment::constant(value, start, end)?])
    }

    pub fn polynomial(start: f64, end: f64, coeffs: Vec<f64>) -> Result<Self> {
        EdgePotential::from_segments(vec![Segment::new(start, end, coeffs)?])
    }

    pub fn from_segments(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        for s in &segments {
            if s.start < 0.0 {
                return Err(Error::Potential(format!(
                    "segment [{}, {}) starts before the vertex",
                    s.start, s.end
                )));
            }
        }
        for w in segments.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::Potential(format!(
                    "overlapping segments [{}, {}) and [{}, {})",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        Ok(EdgePotential { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.coeffs.iter().all(|&c| c == 0.0))
    }

    /// Right end of the support (0 for the zero potential).
    pub fn support_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.segments.iter().all(Segment::is_constant)
    }

    pub fn value(&self, x: f64) -> f64 {
        // segments are few; a linear scan beats the bookkeeping of a search
        self.segments
            .iter()
            .find(|s| s.contains(x))
            .map_or(0.0, |s| s.value(x))
    }

    /// `int_0^inf x^n V(x) dx`, exact.
    pub fn moment(&self, n: usize) -> f64 {
        self.segments.iter().map(|s| s.moment(n)).sum()
    }

    /// `int_a^b V(x) dx`, exact.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.segments.iter().map(|s| s.integral_over(a, b)).sum()
    }

    /// `lambda * V`.
    pub fn scaled(&self, lambda: f64) -> EdgePotential {
        if lambda == 0.0 {
            return EdgePotential::zero();
        }
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                start: s.start,
                end: s.end,
                coeffs: s.coeffs.iter().map(|c| c * lambda).collect(),
            })
            .collect();
        EdgePotential { segments }
    }

    /// Pointwise sum. Breakpoints of both operands are merged.
    pub fn add(&self, other: &EdgePotential) -> EdgePotential {
        let mut cuts: Vec<f64> = self
            .segments
            .iter()
            .chain(other.segments.iter())
            .flat_map(|s| [s.start, s.end])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut segments = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let find = |p: &EdgePotential| {
                p.segments
                    .iter()
                    .find(|s| s.contains(mid))
                    .map(|s| s.coeffs.clone())
            };
            let coeffs = match (find(self), find(other)) {
                (None, None) => continue,
                (Some(a), None) | (None, Some(a)) => a,
                (Some(a), Some(b)) => poly::add(&a, &b),
            };
            segments.push(Segment {
                start: w[0],
                end: w[1],
                coeffs,
            });
        }
        EdgePotential { segments }
    }

    /// `(1/eps) V(x/eps)`: endpoints scale by `eps`, `c_m -> c_m eps^(-m-1)`.
    pub fn squeezed(&self, eps: f64) -> Result<EdgePotential> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scaling parameter must be positive, got {eps}"
            )));
        }
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                start: s.start * eps,
                end: s.end * eps,
                coeffs: poly::rescale_argument(&s.coeffs, 1.0 / eps)
                    .into_iter()
                    .map(|c| c / eps)
                    .collect(),
            })
            .collect();
        Ok(EdgePotential { segments })
    }

    /// `V^(-) = max(0, -V)`, split at the sign changes of each piece.
    pub fn negative_part(&self) -> EdgePotential {
        let mut segments = Vec::new();
        for s in &self.segments {
            let mut cuts = vec![s.start];
            cuts.extend(sign_changes(&s.coeffs, s.start, s.end));
            cuts.push(s.end);
            for w in cuts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                if s.value(0.5 * (w[0] + w[1])) < 0.0 {
                    segments.push(Segment {
                        start: w[0],
                        end: w[1],
                        coeffs: s.coeffs.iter().map(|c| -c).collect(),
                    });
                }
            }
        }
        EdgePotential { segments }
    }

    /// Upper bound on `sup |V|`.
    pub fn abs_bound(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| poly::abs_bound(&s.coeffs, s.start, s.end))
            .fold(0.0, f64::max)
    }

    /// Sign information: `Some(true)` if `V <= 0` everywhere, `Some(false)`
    /// if `V >= 0` everywhere, `None` for mixed sign. Checked on a dense
    /// sample of each piece.
    pub fn sign_definite(&self) -> Option<bool> {
        let mut neg = false;
        let mut pos = false;
        for s in &self.segments {
            let n = if s.is_constant() { 1 } else { 64 };
            for i in 0..=n {
                let x = s.start + s.len() * i as f64 / n as f64;
                let v = s.value(x.min(s.end));
                neg |= v < 0.0;
                pos |= v > 0.0;
            }
        }
        match (neg, pos) {
            (true, true) => None,
            (false, true) => Some(false),
            _ => Some(true),
        }
    }

    /// Pieces of the odd extension `-V(-x)` on the negative half-line
    /// followed by the pieces of `V` itself.
    pub fn odd_extension(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                start: -s.end,
                end: -s.start,
                coeffs: poly::rescale_argument(&s.coeffs, -1.0)
                    .into_iter()
                    .map(|c| -c)
                    .collect(),
            })
            .collect();
        out.extend(self.segments.iter().cloned());
        out
    }
}

/// `int int V(x) |x - y| V(y) dx dy` over a sorted list of disjoint pieces.
pub fn abs_distance_integral(segments: &[Segment]) -> f64 {
    let mut total = 0.0;
    for (i, s) in segments.iter().enumerate() {
        total += self_abs_integral(s);
        let (p0, p1) = (s.moment(0), s.moment(1));
        for t in &segments[i + 1..] {
            // t lies to the right of s, so |x - y| = y - x
            total += 2.0 * (p0 * t.moment(1) - p1 * t.moment(0));
        }
    }
    total
}

/// `int int V(x) (x + y) W(y) dx dy`, separable.
pub fn sum_distance_integral(v: &EdgePotential, w: &EdgePotential) -> f64 {
    v.moment(1) * w.moment(0) + v.moment(0) * w.moment(1)
}

// 2 int_s^t p(x) int_s^x p(y) (x - y) dy dx
fn self_abs_integral(seg: &Segment) -> f64 {
    let p = &seg.coeffs;
    let s = seg.start;
    let anchor = |q: Vec<f64>| {
        let c = poly::eval(&q, s);
        poly::sub(&q, &[c])
    };
    let p_a = anchor(poly::antiderivative(p));
    let p_b = anchor(poly::antiderivative(&poly::shift_up(p, 1)));
    let inner = poly::sub(&poly::shift_up(&p_a, 1), &p_b);
    2.0 * poly::integrate(&poly::mul(p, &inner), seg.start, seg.end)
}

// Sign changes of a polynomial on (a, b), located by a dense scan and bisection.
fn sign_changes(coeffs: &[f64], a: f64, b: f64) -> Vec<f64> {
    let coeffs = poly::trim(coeffs.to_vec());
    if coeffs.len() <= 1 {
        return Vec::new();
    }
    const SAMPLES: usize = 256;
    let f = |x: f64| poly::eval(&coeffs, x);
    let mut roots = Vec::new();
    let mut x_prev = a;
    let mut f_prev = f(a);
    for i in 1..=SAMPLES {
        let x = a + (b - a) * i as f64 / SAMPLES as f64;
        let fx = f(x);
        if f_prev != 0.0 && fx != 0.0 && (f_prev < 0.0) != (fx < 0.0) {
            let (mut lo, mut hi) = (x_prev, x);
            let lo_neg = f_prev < 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (f(mid) < 0.0) == lo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        } else if fx == 0.0 && i < SAMPLES {
            roots.push(x);
        }
        x_prev = x;
        f_prev = if fx == 0.0 { f_prev } else { fx };
    }
    roots
}
