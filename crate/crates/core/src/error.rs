use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration failed{} at kappa = {kappa}", edge_label(.edge))]
    Integration { edge: Option<usize>, kappa: f64 },

    /// `v_j(0; kappa)` vanishes: kappa is a Dirichlet level of the listed edges.
    #[error("pole at kappa = {kappa} (edges {edges:?})")]
    Pole { kappa: f64, edges: Vec<usize> },

    #[error("scan grid too coarse to separate poles in [{lo}, {hi}]")]
    WindowTooCoarse { lo: f64, hi: f64 },

    #[error("kappa = {kappa} is an eigenvalue (|alpha - M| = {gap:e})")]
    AtEigenvalue { kappa: f64, gap: f64 },

    #[error("dense eigensolver did not converge")]
    EigenFailure,

    #[error("no coupling threshold at kappa = {kappa}: principal eigenvalue {principal} is not negative")]
    NoThreshold { kappa: f64, principal: f64 },

    #[error("potential has no negative part")]
    ZeroNegativePart,

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),
}

fn edge_label(edge: &Option<usize>) -> String {
    match edge {
        Some(j) => format!(" on edge {j}"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures of the input (config, arguments) as opposed to
    /// failures of a numerical procedure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. } | Error::Config(_) | Error::Potential(_) | Error::InvalidArgument(_)
        )
    }

    pub(crate) fn on_edge(self, index: usize) -> Self {
        match self {
            Error::Integration { kappa, .. } => Error::Integration {
                edge: Some(index),
                kappa,
            },
            Error::Pole { kappa, .. } => Error::Pole {
                kappa,
                edges: vec![index],
            },
            other => other,
        }
    }
}
