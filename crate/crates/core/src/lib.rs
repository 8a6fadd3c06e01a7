//! Extremal Sobolev functions, decreasing rearrangements and a numerical
//! verification of the reverse Hölder inequality `‖u‖_p ≥ K‖u‖_q` for
//! positive minimizers `u` of `∫|∇f|² / (∫|f|^p)^{2/p}`.
//!
//! * [`exponents`], [`quadrature`], [`domain`]: shared primitives.
//! * [`radial`]: ball extremals by shooting on the radial ODE.
//! * [`elliptic`]: extremals on planar domains on a masked finite-difference grid.
//! * [`rearrange`]: distribution functions, decreasing rearrangements, the
//!   Talenti comparison and Hardy–Littlewood–Pólya dominance.
//! * [`chiti`]: the comparison ball, the single-crossing analysis, the
//!   sharp constant `K` and the verification report.
//! * [`io`]: file formats.

pub mod chiti;
pub mod domain;
pub mod elliptic;
pub mod error;
pub mod exponents;
pub mod io;
pub mod profile;
pub mod quadrature;
pub mod radial;
pub mod rearrange;

pub use domain::{DomainSpec, Shape};
pub use error::{Error, Result};
pub use exponents::{admissible, alpha, unit_ball_volume, Exponents};
pub use profile::{ProfileKind, VolumeProfile};

/// Version tag written into every output file.
pub const FORMAT_VERSION: u32 = 1;
