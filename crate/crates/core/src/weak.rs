//! Weak coupling: the bound state of `H_0(lambda V)` for small `lambda`.
//!
//! A negative eigenvalue exists for all small `lambda > 0` iff
//! `sum_j int V_j <= 0`, and then `kappa(lambda) = c1 lambda + c2 lambda^2 + O(lambda^3)`.

use crate::edge::KAPPA_FLOOR;
use crate::error::{Error, Result};
use crate::graph::{Coupling, StarGraph};
use crate::poly;
use crate::potential::{abs_distance_integral, sum_distance_integral, EdgePotential};
use crate::secular::{find_eigenvalues_with, SecularOptions, Window, DEFAULT_KAPPA_MIN};

/// Largest `lambda` at which a single bound state is expected by default.
pub const DEFAULT_LAMBDA_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Existence {
    /// `sum_j int V_j`.
    pub mean: f64,
    pub exists: bool,
}

pub fn existence_condition(potentials: &[EdgePotential]) -> Existence {
    let mean: f64 = potentials.iter().map(|v| v.moment(0)).sum();
    Existence {
        mean,
        exists: mean <= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub zero_mean: bool,
}

impl AsymptoticCoefficients {
    pub fn new(potentials: &[EdgePotential]) -> Self {
        let n = potentials.len() as f64;
        let mean: f64 = potentials.iter().map(|v| v.moment(0)).sum();
        let scale: f64 = potentials
            .iter()
            .flat_map(|v| v.segments())
            .map(|s| s.len() * poly::abs_bound(s.coeffs(), s.start(), s.end()))
            .sum();
        let zero_mean = mean.abs() <= 1e-14 * scale;
        if zero_mean {
            AsymptoticCoefficients {
                c1: 0.0,
                c2: c2_odd_extension(potentials),
                zero_mean,
            }
        } else {
            AsymptoticCoefficients {
                c1: -mean / n,
                c2: c2_general(potentials),
                zero_mean,
            }
        }
    }

    pub fn kappa(&self, lambda: f64) -> f64 {
        self.c1 * lambda + self.c2 * lambda * lambda
    }
}

/// `-(1/2N) [sum_j II V_j |x-y| V_j + sum_{j,l} (2/N - delta_jl) II V_j (x+y) V_l]`.
pub fn c2_general(potentials: &[EdgePotential]) -> f64 {
    let n = potentials.len() as f64;
    let diag: f64 = potentials.iter().map(|v| abs_distance_integral(v.segments())).sum();
    let mut cross = 0.0;
    for (j, vj) in potentials.iter().enumerate() {
        for (l, vl) in potentials.iter().enumerate() {
            let delta = if j == l { 1.0 } else { 0.0 };
            cross += (2.0 / n - delta) * sum_distance_integral(vj, vl);
        }
    }
    -(diag + cross) / (2.0 * n)
}

/// `-(1/4N) sum_j II W_j |x-y| W_j` with `W_j` the odd extension of `V_j`
/// to the line. Equals [`c2_general`] when `sum_j int V_j = 0`.
pub fn c2_odd_extension(potentials: &[EdgePotential]) -> f64 {
    let n = potentials.len() as f64;
    let total: f64 = potentials
        .iter()
        .map(|v| abs_distance_integral(&v.odd_extension()))
        .sum();
    -total / (4.0 * n)
}

/// `(c1 lambda + c2 lambda^2, coefficients)`.
pub fn kappa_asymptotic(potentials: &[EdgePotential], lambda: f64) -> (f64, AsymptoticCoefficients) {
    let c = AsymptoticCoefficients::new(potentials);
    (c.kappa(lambda), c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakFlag {
    MissingState,
    MultipleStates,
    Unreliable,
    SolverError,
}

impl WeakFlag {
    pub fn label(self) -> &'static str {
        match self {
            WeakFlag::MissingState => "MISSING_STATE",
            WeakFlag::MultipleStates => "MULTIPLE_STATES",
            WeakFlag::Unreliable => "UNRELIABLE",
            WeakFlag::SolverError => "SOLVER_ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakRow {
    pub lambda: f64,
    /// Ground-state `kappa` of `H_0(lambda V)`.
    pub kappa_numeric: Option<f64>,
    pub kappa_asym1: f64,
    pub kappa_asym2: f64,
    pub residual: Option<f64>,
    pub residual_over_lambda3: Option<f64>,
    /// Negative eigenvalues counted with multiplicity.
    pub count: usize,
    pub flags: Vec<WeakFlag>,
    pub error: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakScan {
    pub existence: Existence,
    pub coefficients: AsymptoticCoefficients,
    pub rows: Vec<WeakRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakScanOptions {
    pub lambda_max: f64,
    pub kappa_max: Option<f64>,
    pub secular: SecularOptions,
}

impl Default for WeakScanOptions {
    fn default() -> Self {
        WeakScanOptions {
            lambda_max: DEFAULT_LAMBDA_MAX,
            kappa_max: None,
            secular: SecularOptions::default(),
        }
    }
}

/// Compare the exact ground state of `H_0(lambda V)` with the two-term
/// expansion over a decreasing grid of couplings.
pub fn weak_scan(graph: &StarGraph, lambdas: &[f64], opts: &WeakScanOptions) -> Result<WeakScan> {
    if graph.coupling() != Coupling::Delta(0.0) {
        return Err(Error::InvalidArgument("weak-coupling scan needs alpha = 0".into()));
    }
    if !graph.all_infinite() {
        return Err(Error::InvalidArgument("weak-coupling scan needs half-line edges".into()));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument("coupling grid must be positive".into()));
    }
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("coupling grid must be strictly decreasing".into()));
    }
    let potentials = graph.potentials();
    let existence = existence_condition(&potentials);
    let coefficients = AsymptoticCoefficients::new(&potentials);
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let kappa_asym1 = coefficients.c1 * lambda;
        let kappa_asym2 = coefficients.kappa(lambda);
        let mut row = WeakRow {
            lambda,
            kappa_numeric: None,
            kappa_asym1,
            kappa_asym2,
            residual: None,
            residual_over_lambda3: None,
            count: 0,
            flags: Vec::new(),
            error: None,
        };
        if kappa_asym2 < 10.0 * DEFAULT_KAPPA_MIN.max(KAPPA_FLOOR) && existence.exists {
            row.flags.push(WeakFlag::Unreliable);
        }
        let solved = graph.scaled(lambda).and_then(|g| {
            let mut window = Window::default_for(&g);
            if let Some(hi) = opts.kappa_max {
                window = window.with_hi(hi)?;
            }
            find_eigenvalues_with(&g, window, &opts.secular)
        });
        match solved {
            Ok(levels) => {
                row.count = levels.count();
                if let Some(gs) = levels.ground_state() {
                    let residual = gs.kappa - kappa_asym2;
                    row.kappa_numeric = Some(gs.kappa);
                    row.residual = Some(residual);
                    row.residual_over_lambda3 = Some(residual / lambda.powi(3));
                } else {
                    row.flags.push(WeakFlag::MissingState);
                }
                if row.count > 1 && lambda <= opts.lambda_max {
                    row.flags.push(WeakFlag::MultipleStates);
                }
            }
            Err(e) => {
                row.flags.push(WeakFlag::SolverError);
                row.error = Some(e);
            }
        }
        rows.push(row);
    }
    Ok(WeakScan {
        existence,
        coefficients,
        rows,
    })
}
