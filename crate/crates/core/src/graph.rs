//! Star graphs: `N` edges joined at one vertex, with a delta-type coupling
//! there. Every edge is parametrized by the distance `x >= 0` from the vertex.

use crate::error::{Error, Result};
use crate::potential::EdgePotential;

/// Vertex coupling constant `alpha`. `Dirichlet` is the decoupled case
/// `alpha = inf`, where every edge sees `psi(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Delta(f64),
    Dirichlet,
}

impl Coupling {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Coupling::Delta(a) => Some(a),
            Coupling::Dirichlet => None,
        }
    }
}

/// Far end of an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeEnd {
    /// Half-line; no condition at infinity is needed.
    Infinite,
    /// Interval `[0, length]` with `psi(l) cos(omega) + psi'(l) sin(omega) = 0`.
    /// `omega = 0` is Dirichlet.
    Finite { length: f64, omega: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    end: EdgeEnd,
    potential: EdgePotential,
}

impl Edge {
    pub fn infinite(potential: EdgePotential) -> Self {
        Edge {
            end: EdgeEnd::Infinite,
            potential,
        }
    }

    pub fn free() -> Self {
        Edge::infinite(EdgePotential::zero())
    }

    pub fn finite(length: f64, omega: f64, potential: EdgePotential) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("edge length must be positive, got {length}")));
        }
        if !omega.is_finite() {
            return Err(Error::Config(format!("omega must be finite, got {omega}")));
        }
        if potential.support_end() > length {
            return Err(Error::Config(format!(
                "potential support ends at {} beyond edge length {length}",
                potential.support_end()
            )));
        }
        Ok(Edge {
            end: EdgeEnd::Finite { length, omega },
            potential,
        })
    }

    pub fn end(&self) -> EdgeEnd {
        self.end
    }

    pub fn length(&self) -> Option<f64> {
        match self.end {
            EdgeEnd::Infinite => None,
            EdgeEnd::Finite { length, .. } => Some(length),
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.end == EdgeEnd::Infinite
    }

    pub fn potential(&self) -> &EdgePotential {
        &self.potential
    }

    pub fn with_potential(&self, potential: EdgePotential) -> Result<Edge> {
        match self.end {
            EdgeEnd::Infinite => Ok(Edge::infinite(potential)),
            EdgeEnd::Finite { length, omega } => Edge::finite(length, omega, potential),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarGraph {
    edges: Vec<Edge>,
    coupling: Coupling,
}

impl StarGraph {
    pub fn new(edges: Vec<Edge>, coupling: Coupling) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Config(format!(
                "a star graph needs at least 2 edges, got {}",
                edges.len()
            )));
        }
        if let Coupling::Delta(a) = coupling {
            if !a.is_finite() {
                return Err(Error::Config(format!(
                    "finite coupling expected, got {a}; use the Dirichlet coupling for alpha = infinity"
                )));
            }
        }
        Ok(StarGraph { edges, coupling })
    }

    /// `n` potential-free half-lines.
    pub fn free(n: usize, coupling: Coupling) -> Result<Self> {
        StarGraph::new(vec![Edge::free(); n], coupling)
    }

    /// `n` half-lines carrying the same potential.
    pub fn uniform(n: usize, potential: &EdgePotential, coupling: Coupling) -> Result<Self> {
        StarGraph::new(vec![Edge::infinite(potential.clone()); n], coupling)
    }

    /// Half-lines carrying the given potentials.
    pub fn from_potentials(potentials: &[EdgePotential], coupling: Coupling) -> Result<Self> {
        StarGraph::new(
            potentials.iter().cloned().map(Edge::infinite).collect(),
            coupling,
        )
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn with_coupling(&self, coupling: Coupling) -> Result<StarGraph> {
        StarGraph::new(self.edges.clone(), coupling)
    }

    pub fn all_infinite(&self) -> bool {
        self.edges.iter().all(Edge::is_infinite)
    }

    pub fn potentials(&self) -> Vec<EdgePotential> {
        self.edges.iter().map(|e| e.potential.clone()).collect()
    }

    /// Same graph with every potential replaced by `f(j, V_j)`.
    pub fn map_potentials<F>(&self, mut f: F) -> Result<StarGraph>
    where
        F: FnMut(usize, &EdgePotential) -> Result<EdgePotential>,
    {
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(j, e)| e.with_potential(f(j, &e.potential)?))
            .collect::<Result<Vec<_>>>()?;
        StarGraph::new(edges, self.coupling)
    }

    /// `H_alpha(lambda V)`.
    pub fn scaled(&self, lambda: f64) -> Result<StarGraph> {
        self.map_potentials(|_, v| Ok(v.scaled(lambda)))
    }
}

/// Coupling strength `lambda >= 0` in `H_0(lambda V)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CouplingScale(f64);

impl CouplingScale {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda >= 0.0 && lambda.is_finite() {
            Ok(CouplingScale(lambda))
        } else {
            Err(Error::InvalidArgument(format!(
                "coupling scale must be nonnegative, got {lambda}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_two_edges() {
        assert!(StarGraph::free(1, Coupling::Delta(0.0)).is_err());
        assert!(StarGraph::free(2, Coupling::Delta(f64::INFINITY)).is_err());
        assert!(StarGraph::free(2, Coupling::Dirichlet).is_ok());
    }

    #[test]
    fn finite_edge_validation() {
        let v = EdgePotential::well(-1.0, 0.0, 2.0).unwrap();
        assert!(Edge::finite(1.0, 0.0, v.clone()).is_err());
        assert!(Edge::finite(2.0, 0.0, v).is_ok());
        assert!(Edge::finite(0.0, 0.0, EdgePotential::zero()).is_err());
    }

    #[test]
    fn coupling_scale_nonnegative() {
        assert!(CouplingScale::new(-0.1).is_err());
        assert_eq!(CouplingScale::new(0.5).unwrap().get(), 0.5);
    }
}
