//! Library surface of the command-line tool. Exposes the run configuration
//! so external harnesses (e.g. the fuzz targets) can exercise its decoder.

pub mod config;
