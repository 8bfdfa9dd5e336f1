pub mod backend;
pub mod formula;
pub mod orchestrate;
pub mod strategy;
pub mod collect;
pub mod workqueue;
pub mod tune;
pub mod validate;
