//! Small dense numerical kernel shared by the controllers.

pub mod eig;
pub mod expm;
pub mod lyap;
pub mod sat;
pub mod so3;

pub use eig::{sym_eig_extrema, sym_eigenvalues};
pub use expm::{expm, expm_zoh};
pub use lyap::{dlyap_residual, solve_dlyap, spectral_radius};
pub use sat::{sat_eval, SatEval, SatFamily};
pub use so3::{dist, expm_so3, psi_map, skew, vee, vee_checked, Rotation};
