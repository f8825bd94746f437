pub mod catalog;
pub mod pose;
pub mod recognizer;
pub mod gate;
pub mod ranking;
pub mod eval;
pub mod service;
pub mod cli;
