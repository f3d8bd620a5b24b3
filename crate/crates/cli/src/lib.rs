//! Configuration, pipeline and file emitters behind the `moodyn` binary.

pub mod commands;
pub mod config;
pub mod regime;
pub mod run;
pub mod summary;
pub mod svg;
pub mod table;
