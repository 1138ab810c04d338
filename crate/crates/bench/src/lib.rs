//! Inputs shared by the benchmarks under `benches/`.

use rtsched_core::io::parse_model;
use rtsched_core::SystemModel;

pub fn case_study() -> SystemModel {
    parse_model(include_bytes!("../../../models/agc.json").as_slice()).expect("bundled model is valid")
}
