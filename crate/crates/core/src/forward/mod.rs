//! Method-of-moments forward model.

pub mod contrast;
pub mod greens;
pub mod model;
pub mod noise;
pub mod solver;

pub use contrast::{build_contrast, contrast_jacobian, props_from_contrast, ContrastMap};
pub use greens::{incident_field, incident_fields, CellKernel, GreensOperators, DENSE_CELL_LIMIT};
pub use model::{forward_simulate, scattered_field, solve_total_field, FieldSet, ForwardModel};
pub use noise::add_noise;
pub use solver::{SolverMode, SolverOptions, SystemSolver};
