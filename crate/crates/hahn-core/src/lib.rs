//! Exact symbolic engine for a computable class of Hahn-field elements over
//! the algebraic closure of F_p, with Artin-Schreier tower machinery,
//! truncation/limit/brick calculus and depth reports.
//!
//! The computable class consists of series whose support is a finite union
//! of nested geometric exponent families ("strands"); all arithmetic is
//! exact, and operations that would leave the class fail loudly with
//! [`error::ClassError::NotInClass`].

pub mod analysis;
pub mod artin;
pub mod certificates;
pub mod coeff;
pub mod depth;
pub mod error;
pub mod exponent;
pub mod expr;
pub mod oracle;
pub mod region;
pub mod residue;
pub mod series;
pub mod strand;
pub mod support;
pub mod tower;

pub use coeff::FieldElem;
pub use error::{ClassError, Result, Verdict};
pub use exponent::{Exponent, Valuation};
// pub use series::FractalSeries;
// pub use strand::Strand;
