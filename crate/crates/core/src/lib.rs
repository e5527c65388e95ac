//! Numerical laboratory for skew products `F(x, y) = (Tx, y + τ(x))` over
//! expanding endomorphisms of the torus.
//!
//! The crate classifies a rotation function `τ` as either producing an
//! exponentially mixing skew product or being an essential coboundary. It
//! combines several independent lines of evidence:
//!
//! * [`twisted`]: Fourier–Galerkin matrices of the fiberwise twisted Koopman
//!   and transfer operators, weighted norm growth and spectral radii;
//! * [`symbol`]: the semiclassical bound `p̃` and the search for an iterate
//!   at which it drops below one;
//! * [`cobound`]: periodic-orbit obstructions, the derivative series `V`,
//!   potential reconstruction and the circle-rotation semiconjugacy;
//! * [`lab`]: correlation decay, configuration and the combined verdict.

pub mod cobound;
pub mod density;
pub mod error;
pub mod fft;
pub mod lab;
pub mod maps;
pub mod symbol;
pub mod trig;
pub mod twisted;

pub use error::{Error, Result};
pub use maps::{ExpandingMap, FiberRotation, MapKind};
pub use trig::TrigPoly;
