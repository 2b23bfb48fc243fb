//! Parsers, the example catalog and the invariant suites.

pub mod catalog;
pub mod checks;
pub mod parser;

pub use catalog::{catalog_algebra, catalog_frame, catalog_frame_text, ALGEBRA_NAMES, FRAME_NAMES};
pub use checks::{run_suites, CheckOutcome, Suite};
pub use parser::{parse_algebra, parse_frame, ParseError, ParseErrorKind};
