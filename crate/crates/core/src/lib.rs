pub mod ast;
pub mod driver;
pub mod finding;
pub mod lexer;
pub mod loc;
pub mod parser;
pub mod preprocess;
pub mod report;
pub mod rules;
pub mod scanners;
pub mod scope;
pub mod suppress;
pub mod visit;
