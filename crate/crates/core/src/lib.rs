//! A lifted network-flow linear-programming formulation of the Traveling
//! Salesman Problem, with a built-in primal/dual simplex solver, flow
//! decomposition of fractional solutions into weighted tours, and exact
//! brute-force oracles for auditing the formulation's tightness empirically.

pub mod decomposition;
pub mod error;
pub mod indexing;
pub mod instance;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod simplex;

pub use decomposition::{
    decode_integral, decompose, Decomposition, DecompositionOptions, WeightedTour,
};
pub use error::{Error, Result};
pub use indexing::{Arc, ColumnKey, VariableSpace, YKey, ZKey};
pub use instance::{
    generate_extreme, generate_random, ExtremeKind, Tour, TspInstance,
};
pub use model::{
    build_model, dimensions, lift_tour, lift_tour_keys, objective_value, residuals,
    Family, ModelSummary, Row, RowTag, SolutionVector, SparseLpModel,
};
pub use oracle::{all_tours, brute_force_opt, OracleResult};
