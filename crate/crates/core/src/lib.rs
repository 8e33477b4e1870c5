//! Double regular odd-gon translation surfaces: cutting sequences, the
//! horizontal Veech shear, and the "keep only sandwiched letters" derivation.

pub mod cli;
pub mod cylinder;
pub mod derivation;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod guide;
pub mod letter;
pub mod precise;
pub mod render;
pub mod surface;
pub mod torus;
pub mod trig;
pub mod veech;

pub use error::{Error, Result};
pub use geometry::{Point, Segment, Tolerance};
pub use letter::{Alphabet, Letter};
pub use surface::{auxiliary_edges, build_surface, Edge, EdgeKind, OddGon, Polygon, Side, Surface};
