use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("infeasible neighborhoods for population {population}: {below} below and {above} above with K = {k}")]
    InfeasibleNeighborhood {
        population: usize,
        below: usize,
        above: usize,
        k: usize,
    },

    #[error("no convergence after {iterations} iterations (best x = {best_x}, f = {best_f})")]
    Convergence {
        iterations: usize,
        best_x: f64,
        best_f: f64,
    },

    #[error("quadratic program infeasible: constraint {constraint} cannot be satisfied")]
    Infeasible { constraint: usize },

    #[error("quadratic program did not converge: {residuals:?}")]
    QpNonConvergence { residuals: crate::solvers::qp::KktResiduals },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("estimation failed: disconnected comparison graph with components {components:?}")]
    DisconnectedGraph { components: Vec<Vec<usize>> },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
