use approx::assert_relative_eq;

use stargraph::birman::{bs_spectrum, count_bound};
use stargraph::edge::{log_derivative, log_derivative_with, solve_edge, IntegratorOptions, SpectralParameter};
use stargraph::fd::build_matrix;
use stargraph::green::{edge_green, star_green, StarResolvent};
use stargraph::secular::{
    dirichlet_edge_spectrum, find_eigenvalues, secular_value, SecularOptions, SpectralResult, Window,
};
use stargraph::squeeze::{squeeze_experiment, SqueezeOptions};
use stargraph::transfer;
use stargraph::weak::{weak_scan, WeakFlag, WeakScanOptions};
use stargraph::{Coupling, Edge, EdgePotential, Error, StarGraph};

fn k(x: f64) -> SpectralParameter {
    SpectralParameter::new(x).unwrap()
}

fn well(v: f64, a: f64, b: f64) -> EdgePotential {
    EdgePotential::well(v, a, b).unwrap()
}

fn spectrum(g: &StarGraph) -> SpectralResult {
    find_eigenvalues(g, Window::default_for(g)).unwrap()
}

fn mixed_wells() -> Vec<EdgePotential> {
    vec![well(-20.0, 0.0, 1.0), well(-12.0, 0.0, 1.5), well(-6.0, 0.5, 1.0)]
}

/// Bisection root of `f` on a bracket with a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn dirichlet_well_levels_match_transcendental_equation() {
    let v0 = 20.0;
    let e = Edge::infinite(well(-v0, 0.0, 1.0));
    let levels = dirichlet_edge_spectrum(&e, Window::new(1e-6, 5.0).unwrap(), &SecularOptions::default()).unwrap();
    // sqrt(V0 - k^2) cot sqrt(V0 - k^2) + k = 0
    let f = |kap: f64| {
        let q = (v0 - kap * kap).sqrt();
        q.cos() * q + kap * q.sin()
    };
    let mut expected = Vec::new();
    let n = 4000;
    for i in 0..n {
        let (a, b) = (1e-6 + i as f64 * 4.47 / n as f64, 1e-6 + (i + 1) as f64 * 4.47 / n as f64);
        if f(a) * f(b) < 0.0 {
            expected.push(bisect(f, a, b));
        }
    }
    expected.sort_by(|a, b| b.total_cmp(a));
    let mut got = levels.clone();
    got.sort_by(|a, b| b.total_cmp(a));
    assert_eq!(got.len(), expected.len());
    for (g, x) in got.iter().zip(&expected) {
        assert!((g - x).abs() < 1e-9, "{g} vs {x}");
    }
    assert!(dirichlet_edge_spectrum(&Edge::free(), Window::new(1e-6, 5.0).unwrap(), &SecularOptions::default())
        .unwrap()
        .is_empty());
}

#[test]
fn log_derivative_matches_transfer_oracle_across_pole() {
    let e = Edge::infinite(well(-4.0, 0.0, 1.0));
    let pole = 0.638045048285237717;
    for i in 0..60 {
        let kap = 0.05 + i as f64 * 0.05;
        if (kap - pole).abs() < 1e-3 {
            continue;
        }
        let a = log_derivative(&e, k(kap)).unwrap();
        let b = transfer::log_derivative(&e, k(kap)).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "kappa {kap}: {a} vs {b}");
    }
    let below = log_derivative(&e, k(pole - 1e-6)).unwrap();
    let above = log_derivative(&e, k(pole + 1e-6)).unwrap();
    assert!(below < -1e4 && above > 1e4);
    assert!(matches!(log_derivative(&e, k(pole)), Err(Error::Pole { .. })));
}

#[test]
fn log_derivative_decreases_between_poles() {
    let edges = [
        Edge::free(),
        Edge::finite(1.0, 0.0, EdgePotential::zero()).unwrap(),
        Edge::finite(2.0, 0.7, well(-9.0, 0.2, 1.4)).unwrap(),
        Edge::infinite(well(-20.0, 0.0, 1.0)),
    ];
    for e in &edges {
        let poles = dirichlet_edge_spectrum(e, Window::new(1e-3, 6.0).unwrap(), &SecularOptions::default()).unwrap();
        let grid: Vec<f64> = (1..=600).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            if poles.iter().any(|&p| p > w[0] - 1e-6 && p < w[1] + 1e-6) {
                continue;
            }
            let a = log_derivative(e, k(w[0])).unwrap();
            let b = log_derivative(e, k(w[1])).unwrap();
            assert!(b < a, "{e:?} at {}: {a} -> {b}", w[0]);
        }
    }
}

#[test]
fn integrator_converges_at_advertised_order() {
    let e = Edge::infinite(EdgePotential::from_segments(vec![
        stargraph::Segment::constant(-6.0, 0.0, 0.7).unwrap(),
        stargraph::Segment::constant(2.0, 0.7, 1.6).unwrap(),
    ])
    .unwrap());
    let kap = k(0.9);
    let (v0, _) = transfer::decaying_at_vertex(&e, kap).unwrap();
    let reference = v0 / transfer::decaying_at(&e, kap, 1.6).unwrap().0;
    let err = |scale: f64| {
        let opts = IntegratorOptions {
            order: Some(6),
            step_scale: scale,
            max_step: 10.0,
        };
        let pair = solve_edge(&e, kap, &opts).unwrap();
        let (v, _) = pair.v(0.0);
        let (vend, _) = pair.v(1.6);
        (v / vend - reference).abs()
    };
    // least-squares slope of log2(error) against log2(step)
    let scales = [0.4, 0.2, 0.1, 0.05];
    let pts: Vec<(f64, f64)> = scales.iter().map(|&s| (f64::log2(s), err(s).log2())).collect();
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / 4.0, b + p.1 / 4.0));
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= 4.0, "observed order {slope}");
    let default = log_derivative_with(&e, kap, &IntegratorOptions::default()).unwrap();
    assert_relative_eq!(default, transfer::log_derivative(&e, kap).unwrap(), max_relative = 1e-12);
}

#[test]
fn secular_value_with_well_edge() {
    let well_edge = Edge::infinite(well(-4.0, 0.0, 1.0));
    let g = StarGraph::new(vec![Edge::free(), well_edge.clone()], Coupling::Delta(0.0)).unwrap();
    let m = secular_value(&g, k(1.0)).unwrap().m().unwrap();
    assert_relative_eq!(m, -1.0 + transfer::log_derivative(&well_edge, k(1.0)).unwrap(), max_relative = 1e-12);
    assert_relative_eq!(m, 3.56907052883938967, max_relative = 1e-12);
}

#[test]
fn interlacing_between_pooled_poles() {
    let pots = mixed_wells();
    for alpha in [-5.0, -1.0, 0.0, 1.0, 5.0] {
        let g = StarGraph::from_potentials(&pots, Coupling::Delta(alpha)).unwrap();
        let r = spectrum(&g);
        let mut poles: Vec<f64> = r.poles.iter().map(|p| p.kappa).collect();
        poles.sort_by(f64::total_cmp);
        assert!(poles.len() >= 3);
        for w in poles.windows(2) {
            let (a, b) = (w[0] + 1e-7, w[1] - 1e-7);
            let samples: Vec<f64> = (0..=400)
                .map(|i| a + (b - a) * i as f64 / 400.0)
                .map(|x| secular_value(&g, k(x)).unwrap().m().unwrap() - alpha)
                .collect();
            let changes = samples.windows(2).filter(|s| s[0] > 0.0 && s[1] <= 0.0 || s[0] < 0.0 && s[1] >= 0.0).count();
            assert_eq!(changes, 1, "alpha {alpha}, between {} and {}", w[0], w[1]);
            let roots: Vec<_> = r.eigenvalues.iter().filter(|e| e.kappa > w[0] && e.kappa < w[1]).collect();
            assert_eq!(roots.len(), 1);
            assert_eq!(roots[0].multiplicity, 1);
        }
        for e in &r.eigenvalues {
            assert_eq!(e.energy, -e.kappa * e.kappa);
            assert!(e.multiplicity < g.edge_count());
        }
    }
}

#[test]
fn free_star_closed_form() {
    for n in 2..=5 {
        for alpha in [-0.3, -1.0, -4.0, -9.5] {
            let r = spectrum(&StarGraph::free(n, Coupling::Delta(alpha)).unwrap());
            assert_eq!(r.eigenvalues.len(), 1);
            assert!((r.eigenvalues[0].kappa + alpha / n as f64).abs() <= 1e-10);
        }
        assert_eq!(spectrum(&StarGraph::free(n, Coupling::Delta(0.5)).unwrap()).count(), 0);
    }
}

#[test]
fn ground_state_rises_with_alpha() {
    let pots = mixed_wells();
    let mut last = f64::NEG_INFINITY;
    for i in 0..=20 {
        let alpha = -10.0 + i as f64;
        let g = StarGraph::from_potentials(&pots, Coupling::Delta(alpha)).unwrap();
        let e = spectrum(&g).ground_state().unwrap().energy;
        assert!(e >= last, "alpha {alpha}: {e} < {last}");
        last = e;
    }
    let dirichlet = StarGraph::from_potentials(&pots, Coupling::Dirichlet).unwrap();
    assert!(spectrum(&dirichlet).ground_state().unwrap().energy >= last);
}

#[test]
fn dirichlet_coupling_pools_edge_spectra() {
    let pots = mixed_wells();
    let g = StarGraph::from_potentials(&pots, Coupling::Dirichlet).unwrap();
    let window = Window::default_for(&g);
    let r = find_eigenvalues(&g, window).unwrap();
    let mut pooled: Vec<f64> = g
        .edges()
        .iter()
        .flat_map(|e| dirichlet_edge_spectrum(e, window, &SecularOptions::default()).unwrap())
        .collect();
    pooled.sort_by(|a, b| b.total_cmp(a));
    let got: Vec<f64> = r
        .eigenvalues
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.kappa, e.multiplicity))
        .collect();
    assert_eq!(got, pooled);
}

#[test]
fn degenerate_level_for_identical_deep_wells() {
    let g = StarGraph::uniform(3, &well(-20.0, 0.0, 1.0), Coupling::Delta(0.0)).unwrap();
    let r = spectrum(&g);
    let kappas: Vec<(f64, usize)> = r.eigenvalues.iter().map(|e| (e.kappa, e.multiplicity)).collect();
    assert_eq!(kappas.len(), 3);
    assert_relative_eq!(kappas[0].0, 4.28491771828430039, max_relative = 1e-10);
    assert_relative_eq!(kappas[1].0, 3.68213525591073550, max_relative = 1e-10);
    assert_eq!(kappas[1].1, 2);
    assert_relative_eq!(kappas[2].0, 2.47153131025031299, max_relative = 1e-10);
}

#[test]
fn green_kernels_against_closed_forms() {
    let free = Edge::free();
    assert_relative_eq!(edge_green(&free, k(1.0), 1.0, 2.0).unwrap(), 1f64.sinh() * (-2f64).exp(), max_relative = 1e-13);
    let g2 = StarGraph::free(2, Coupling::Delta(0.0)).unwrap();
    for (x, y, kap) in [(0.5f64, 1.5f64, 1.0f64), (0.0, 3.0, 0.3), (2.0, 0.1, 2.5)] {
        let line = (-kap * (x - y).abs()).exp() / (2.0 * kap);
        assert_relative_eq!(star_green(&g2, k(kap), 0, x, 0, y).unwrap(), line, max_relative = 1e-10);
        let cross = (-kap * (x + y)).exp() / (2.0 * kap);
        assert_relative_eq!(star_green(&g2, k(kap), 0, x, 1, y).unwrap(), cross, max_relative = 1e-10);
    }
    let g3 = StarGraph::free(3, Coupling::Delta(0.0)).unwrap();
    assert_relative_eq!(star_green(&g3, k(1.0), 0, 0.0, 2, 0.0).unwrap(), 1.0 / 3.0, max_relative = 1e-13);
    let w = Edge::infinite(well(-2.0, 0.0, 1.0));
    let a = edge_green(&w, k(0.7), 0.3, 0.8).unwrap();
    assert_relative_eq!(a, transfer::edge_green(&w, k(0.7), 0.3, 0.8).unwrap(), max_relative = 1e-11);
    assert_relative_eq!(a, 0.372794661417190890, max_relative = 1e-11);
}

#[test]
fn large_alpha_decouples_the_kernel() {
    let pots = vec![well(-2.0, 0.0, 1.0), EdgePotential::zero()];
    let dec = StarGraph::from_potentials(&pots, Coupling::Dirichlet).unwrap();
    let decoupled = StarResolvent::new(&dec, k(1.1)).unwrap();
    let mut last = f64::INFINITY;
    for alpha in [1e2, 1e4, 1e6] {
        let g = StarGraph::from_potentials(&pots, Coupling::Delta(alpha)).unwrap();
        let r = StarResolvent::new(&g, k(1.1)).unwrap();
        let diff = (r.kernel(0, 0.4, 1, 0.9)).abs() + (r.kernel(0, 0.4, 0, 0.9) - decoupled.kernel(0, 0.4, 0, 0.9)).abs();
        assert!(diff < last);
        last = diff;
    }
    assert!(last < 1e-5);
}

#[test]
fn at_eigenvalue_coincides_with_roots() {
    let g = StarGraph::from_potentials(&mixed_wells(), Coupling::Delta(-1.0)).unwrap();
    for e in spectrum(&g).eigenvalues.iter().filter(|e| e.multiplicity == 1) {
        assert!(matches!(StarResolvent::new(&g, k(e.kappa)), Err(Error::AtEigenvalue { .. })));
        for d in [-1e-6, 1e-6] {
            assert!(StarResolvent::new(&g, k(e.kappa + d)).is_ok(), "kappa {} + {d}", e.kappa);
        }
    }
}

#[test]
fn bs_principal_value_inverts_weak_curve() {
    let pots = vec![well(-1.0, 0.0, 1.0); 2];
    let g = StarGraph::from_potentials(&pots, Coupling::Delta(0.0)).unwrap();
    let kappa = 0.05;
    let (mut lo, mut hi) = (0.01, 0.2);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let kk = spectrum(&g.scaled(mid).unwrap()).ground_state().map(|e| e.kappa).unwrap_or(0.0);
        if kk >= kappa {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mu = bs_spectrum(&pots, k(kappa), 64).unwrap();
    assert!(mu[0] < 0.0);
    assert!((mu[0] + 1.0 / lambda).abs() <= 1e-6 / lambda);
}

#[test]
fn count_bound_holds_for_two_edges() {
    for depth in [1.0, 5.0, 20.0, 60.0] {
        let pots = vec![well(-depth, 0.0, 1.0), well(-0.5 * depth, 0.3, 2.0)];
        let b = count_bound(&pots).unwrap();
        let g = StarGraph::from_potentials(&pots, Coupling::Delta(0.0)).unwrap();
        assert!(spectrum(&g).count() as f64 <= b.bound.floor(), "depth {depth}");
    }
}

#[test]
fn weak_coupling_single_state_and_order() {
    for n in 2..=4 {
        let g = StarGraph::uniform(n, &well(-1.0, 0.0, 1.0), Coupling::Delta(0.0)).unwrap();
        let scan = weak_scan(&g, &[0.1, 0.05, 0.025, 0.0125], &WeakScanOptions::default()).unwrap();
        let c: Vec<f64> = scan.rows.iter().map(|r| r.residual_over_lambda3.unwrap().abs()).collect();
        for r in &scan.rows {
            assert_eq!(r.count, 1);
            assert!(r.flags.is_empty());
        }
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 2.0, "{c:?}");
    }
}

#[test]
fn weak_scan_flags() {
    let rep = StarGraph::uniform(2, &well(1.0, 0.0, 1.0), Coupling::Delta(0.0)).unwrap();
    let scan = weak_scan(&rep, &[0.05, 0.01], &WeakScanOptions::default()).unwrap();
    assert!(!scan.existence.exists);
    assert!(scan.rows.iter().all(|r| r.flags == [WeakFlag::MissingState]));

    let deep = StarGraph::uniform(3, &well(-1.0, 0.0, 1.0), Coupling::Delta(0.0)).unwrap();
    let scan = weak_scan(&deep, &[40.0], &WeakScanOptions { lambda_max: 50.0, ..Default::default() }).unwrap();
    assert!(scan.rows[0].flags.contains(&WeakFlag::MultipleStates));

    let tiny = weak_scan(&deep, &[1e-7], &WeakScanOptions::default()).unwrap();
    assert!(tiny.rows[0].flags.contains(&WeakFlag::Unreliable));
}

#[test]
fn zero_mean_quadratic_onset() {
    let v = EdgePotential::from_segments(vec![
        stargraph::Segment::constant(-1.0, 0.0, 1.0).unwrap(),
        stargraph::Segment::constant(1.0, 1.0, 2.0).unwrap(),
    ])
    .unwrap();
    let g = StarGraph::uniform(2, &v, Coupling::Delta(0.0)).unwrap();
    let scan = weak_scan(&g, &[0.005], &WeakScanOptions::default()).unwrap();
    assert!(scan.coefficients.zero_mean);
    assert_eq!(scan.rows[0].kappa_asym1, 0.0);
    let ratio = scan.rows[0].kappa_numeric.unwrap() / 0.005f64.powi(2);
    assert!((ratio - scan.coefficients.c2).abs() <= 0.05 * scan.coefficients.c2);
}

#[test]
fn squeeze_of_zero_profile_is_exact() {
    let g = StarGraph::from_potentials(&[well(-1.0, 0.0, 1.0), EdgePotential::zero()], Coupling::Delta(0.0)).unwrap();
    let r = squeeze_experiment(&g, &[EdgePotential::zero(), EdgePotential::zero()], &[0.2, 0.05], &SqueezeOptions::default())
        .unwrap();
    for row in &r.rows {
        assert_eq!(row.eigen_error, Some(0.0));
        assert_eq!(row.max_kernel_probe_error, 0.0);
    }
}

#[test]
fn squeeze_free_background() {
    let g = StarGraph::free(3, Coupling::Delta(0.0)).unwrap();
    let eps = [0.2, 0.1, 0.05, 0.025];
    let r = squeeze_experiment(&g, &vec![well(-1.0, 0.0, 1.0); 3], &eps, &SqueezeOptions::default()).unwrap();
    assert_eq!(r.mean, -3.0);
    assert_relative_eq!(r.limit.eigenvalues[0].energy, -1.0, max_relative = 1e-12);
    let errors: Vec<f64> = r.rows.iter().map(|row| row.eigen_error.unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    let probes: Vec<f64> = r.rows.iter().map(|row| row.max_kernel_probe_error).collect();
    assert!(probes.windows(2).all(|w| w[1] < w[0]), "{probes:?}");
    for row in &r.rows {
        assert_relative_eq!(row.scaled_mean, -3.0, max_relative = 1e-14);
    }
}

#[test]
fn squeeze_repulsive_mean_has_no_limit_states() {
    let g = StarGraph::free(2, Coupling::Delta(0.0)).unwrap();
    let r = squeeze_experiment(&g, &vec![well(2.0, 0.0, 1.0); 2], &[0.1, 0.05], &SqueezeOptions::default()).unwrap();
    assert!(r.limit_empty);
    assert!(r.rows.iter().all(|row| row.eigen_error.is_none() && row.energies.is_empty()));
}

#[test]
fn fd_converges_at_second_order() {
    let g = StarGraph::from_potentials(&[well(-3.0, 0.0, 1.0), well(-1.0, 0.5, 1.5), EdgePotential::zero()], Coupling::Delta(0.4))
        .unwrap();
    let exact: Vec<f64> = {
        let mut e: Vec<f64> = spectrum(&g).eigenvalues.iter().map(|e| e.energy).collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let kmin = (-exact.last().unwrap()).sqrt();
    let err = |h: f64| {
        let fd = build_matrix(&g, h, 1.5 + 25.0 / kmin).unwrap().eigenvalues_below(0.0).unwrap();
        assert_eq!(fd.len(), exact.len());
        fd.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.004), err(0.002));
    let ratio = e1 / e2;
    assert!((3.2..=5.0).contains(&ratio), "{e1} {e2}");
}
