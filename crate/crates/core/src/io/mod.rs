//! Reading meter data, generating synthetic fleets and persisting state.

pub mod csv;
pub mod snapshot;
pub mod synthetic;
