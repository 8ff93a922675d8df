pub mod classify;
pub mod cli;
pub mod convention;
pub mod derivatives;
pub mod derived;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod frame;
pub mod identities;
pub mod jet;
pub mod lstsq;
pub mod metric;
pub mod parser;
pub mod projection;
pub mod report;
pub mod sampling;
pub mod tensor;
