//! Optimal collective-attack key rates for symmetric QKD protocols.
//!
//! The crate builds the source-replacement picture of prepare-and-measure
//! protocols, evaluates the Devetak-Winter rate of sifted protocols with a
//! density-matrix engine, and minimizes it over symmetry-reduced attack
//! families. MUB protocols in prime dimension have closed forms
//! ([`families::mub_rate_closed_form`]); qubit protocols with point-group
//! symmetry go through the engine.
//!
//! ```
//! use symqkd::{families::optimal_2mubs, gpauli::Dimension};
//!
//! let d = Dimension::new(2).unwrap();
//! let opt = optimal_2mubs(d, 0.1).unwrap();
//! assert!((opt.r_min - 0.062_009).abs() < 1e-5);
//! ```

pub mod error;
pub mod families;
pub mod gpauli;
pub mod keyrate;
pub mod linalg;
pub mod optimize;
pub mod random;
pub mod source;
pub mod states;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
pub use families::{AttackFamily, FamilyParams, ProtocolSpec, QubitProtocol, SymmetricProtocol};
pub use gpauli::{BasisLabel, Dimension, OrthonormalBasis, PauliIndex};
pub use keyrate::{sifted_rate, RateEngine, RateReport};
pub use optimize::{Method, OptimizationResult, Scheme, Status};
pub use states::{BellDiagonalState, DensityOperator};
pub use symmetry::{GroupRep, PointGroup};
