pub mod beta;
pub mod binomial;
pub mod brent;
pub mod qp;
