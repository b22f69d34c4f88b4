pub mod check;
pub mod container;
pub mod cparse;
pub mod expr;
pub mod fixtures;
pub mod ga;
pub mod isolate;
pub mod model;
pub mod pipeline;
pub mod sim;
pub mod translate;
