pub mod c0lab;
pub mod chart;
pub mod clean;
pub mod coiso;
pub mod error;
pub mod exprcore;
pub mod flows;
pub mod linalg;
pub mod maps;
pub mod par;
pub mod poisson;
pub mod scenarios;

pub use error::{Error, Result};
