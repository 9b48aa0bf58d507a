//! Time-dependent Casimir-Polder potentials of a ground-state two-level atom
//! near a planar surface with a Drude-type optical response.
//!
//! The crate evaluates the static potential, the transient (dressing)
//! dynamics after a sudden switch-on or parameter quench, and the resonant
//! surface-plasmon contribution, using a contour representation on the
//! imaginary frequency axis with an independent real-frequency oracle.
//!
//! Reduced units everywhere: c = 1, eps0 = 1, frequencies in units of the
//! atomic transition, distances in c/Omega, times in 1/Omega. Reported
//! energies can be rescaled to |d|^2 Omega^3 / (4 pi eps0 c^3) or normalized
//! to the local static potential.

pub mod error;
pub mod greens;
pub mod materials;
pub mod plasmon;
pub mod potentials;
pub mod interp;
pub mod quadrature;

pub use error::{GreensError, MaterialError, PotentialError, QuadratureError, RootError};
pub use greens::{DipoleSpec, GreenTrace, Orientation};
pub use materials::{Polarization, SurfaceModel};
pub use quadrature::{QuadratureResult, QuadratureSpec, Transform};
