pub mod dataset;
pub mod elab;
pub mod factorize;
pub mod kernel;
pub mod prelude;
pub mod search;
pub mod syntax;
pub mod tactics;
pub mod treebuild;
