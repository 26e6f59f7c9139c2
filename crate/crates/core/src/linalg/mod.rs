pub mod dense;
pub mod ldl;
pub mod sparse;

pub use ldl::{Inertia, LdlFactor, Symbolic};
pub use sparse::{CsrMatrix, Pattern};
