//! Maslov index of paths of Lagrangian subspaces, computed from the spectral
//! definition through the Souriau map, with crossing forms, the Kashiwara,
//! Leray and Hormander indices, the pair and reduction theorems, and the
//! spectral flow of one-dimensional boundary-value families.

pub mod crossing;
pub mod error;
pub mod indices;
pub mod io;
pub mod linalg;
pub mod maslov;
pub mod path;
pub mod random;
pub mod reduction;
pub mod souriau;
pub mod space;
pub mod spectral;
pub mod tol;

pub use error::{Error, ErrorKind, Result};
pub use linalg::SignatureResult;
pub use maslov::{maslov, unitary_maslov, IndexReport};
pub use path::{LagrangianPath, Path, UnitaryPath};
pub use souriau::{souriau, UnitaryMatrix};
pub use space::{LagrangianFrame, SymmetricGenerator, SymplecticSpace};
pub use tol::Tolerances;
