//! Browser bindings: the secular function with its roots, weak-coupling
//! curves, and squeeze convergence. Each takes the text of a configuration
//! file and returns a flat `Float64Array`.

use wasm_bindgen::prelude::*;

use stargraph::config::parse_config;
use stargraph::edge::SpectralParameter;
use stargraph::secular::{find_eigenvalues, secular_value, Window};
use stargraph::squeeze::{squeeze_experiment, SqueezeOptions};
use stargraph::weak::{weak_scan, WeakScanOptions};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `[n_roots, (kappa, energy, multiplicity)..., (kappa, M or NaN)...]`.
pub fn secular_data(config: &str, samples: usize) -> Result<Vec<f64>, String> {
    let c = parse_config(config).map_err(err)?;
    let g = &c.graph;
    let window = Window::default_for(g);
    let levels = find_eigenvalues(g, window).map_err(err)?;
    let mut out = vec![levels.eigenvalues.len() as f64];
    for e in &levels.eigenvalues {
        out.extend([e.kappa, e.energy, e.multiplicity as f64]);
    }
    if g.coupling().finite().is_some() {
        let samples = samples.max(2);
        for i in 0..samples {
            let kappa = window.lo + (window.hi - window.lo) * i as f64 / (samples - 1) as f64;
            let m = SpectralParameter::new(kappa)
                .and_then(|k| secular_value(g, k))
                .and_then(|s| s.m())
                .unwrap_or(f64::NAN);
            out.extend([kappa, m]);
        }
    }
    Ok(out)
}

/// `(lambda, kappa_numeric or NaN, kappa_asym1, kappa_asym2)` rows for a
/// geometric grid from `lambda_max` down by factors of two.
pub fn weak_data(config: &str, lambda_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let c = parse_config(config).map_err(err)?;
    let grid: Vec<f64> = (0..points.max(1)).map(|i| lambda_max * 0.5f64.powi(i as i32)).collect();
    let scan = weak_scan(&c.graph, &grid, &WeakScanOptions::default()).map_err(err)?;
    Ok(scan
        .rows
        .iter()
        .flat_map(|r| [r.lambda, r.kappa_numeric.unwrap_or(f64::NAN), r.kappa_asym1, r.kappa_asym2])
        .collect())
}

/// `(epsilon, eigen_error or NaN, max_kernel_probe_error)` rows.
pub fn squeeze_data(config: &str, epsilons: &[f64]) -> Result<Vec<f64>, String> {
    let c = parse_config(config).map_err(err)?;
    let w = c.squeeze.ok_or("the configuration has no [squeeze.j] sections")?;
    let r = squeeze_experiment(&c.graph, &w, epsilons, &SqueezeOptions::default()).map_err(err)?;
    Ok(r
        .rows
        .iter()
        .flat_map(|row| [row.epsilon, row.eigen_error.unwrap_or(f64::NAN), row.max_kernel_probe_error])
        .collect())
}

#[wasm_bindgen]
pub fn secular_curve(config: &str, samples: usize) -> Result<Vec<f64>, JsError> {
    secular_data(config, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn weak_curves(config: &str, lambda_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    weak_data(config, lambda_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn squeeze_convergence(config: &str, epsilons: Vec<f64>) -> Result<Vec<f64>, JsError> {
    squeeze_data(config, &epsilons).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE: &str = "[graph]\nalpha = -2.0\nedges = 2\ndefaults = free_infinite\n";

    fn wells(n: usize, extra: &str) -> String {
        let mut s = format!("[graph]\nalpha = 0\nedges = {n}\n");
        for j in 1..=n {
            s += &format!("[edge.{j}]\nlength = \"inf\"\npotential = \"{extra}\"\n");
        }
        s
    }

    #[test]
    fn secular_free_star() {
        let d = secular_data(FREE, 11).unwrap();
        assert_eq!(d[0], 1.0);
        assert!((d[1] - 1.0).abs() < 1e-12);
        assert_eq!(d.len(), 4 + 22);
        // M = -2 kappa
        for p in d[4..].chunks(2) {
            assert!((p[1] + 2.0 * p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_rows() {
        let d = weak_data(&wells(3, "well(-1, 0, 1)"), 0.04, 3).unwrap();
        assert_eq!(d.len(), 12);
        for r in d.chunks(4) {
            assert!((r[1] - r[3]).abs() < r[0].powi(3));
        }
    }

    #[test]
    fn squeeze_rows() {
        let mut cfg = wells(2, "zero");
        cfg += "[squeeze.1]\npotential = \"well(-1, 0, 1)\"\n[squeeze.2]\npotential = \"well(-1, 0, 1)\"\n";
        let d = squeeze_data(&cfg, &[0.2, 0.1]).unwrap();
        assert_eq!(d.len(), 6);
        assert!(d[4] < d[1]);
        assert!(squeeze_data(FREE, &[0.1]).is_err());
    }

    #[test]
    fn bad_config() {
        assert!(secular_data("[graph]\n", 10).is_err());
    }
}
