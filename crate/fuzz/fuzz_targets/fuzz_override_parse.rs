//! Override strings (`--set key=value`) applied to a valid base document,
//! then resolved: must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use twolevel_laser::config::{model_section, sim_section, Document};

const BASE: &str = "\
g = 1.0
kappa = 20.0
pump_rate = 2.0
n_atoms = 100
dt = 0.01
t_end = 20.0
n_traj = 8
";

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut doc = Document::parse(BASE).expect("base config is valid");
    for spec in text.lines() {
        let _ = doc.apply_override(spec);
    }
    let Ok(model) = model_section(&doc) else {
        return;
    };
    if let Ok(sim) = sim_section(&doc, &model.params) {
        let _ = sim.validate(&model.params);
    }
});
