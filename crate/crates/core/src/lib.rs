pub mod domain;
pub mod metrics;
pub mod selection;
pub mod problems;
pub mod instances;
pub mod exec;
pub mod llm;
pub mod engine;
pub mod experiment;
pub mod verify;
