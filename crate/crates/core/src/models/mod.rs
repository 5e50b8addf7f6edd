pub mod gaussian;
pub mod pl;
pub mod quantile;
pub mod regression;
