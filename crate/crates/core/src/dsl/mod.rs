//! The `.fnv` text format.

mod lexer;
mod parser;
mod printer;

pub use parser::parse;
pub use printer::{print, print_binding, print_features, print_funcnet, print_view};
