//! Configuration text through the parser and every section resolver:
//! arbitrary input must produce `Ok` or a diagnostic, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use twolevel_laser::config::{
    estimation_section, lambda_list, model_section, omega_grid, population_section, sim_section,
    Document,
};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(doc) = Document::parse(text) else {
        return;
    };
    let _ = lambda_list(&doc);
    let Ok(model) = model_section(&doc) else {
        return;
    };
    let _ = omega_grid(&doc, &model.params);
    let _ = population_section(&doc, &model.params);
    if let Ok(sim) = sim_section(&doc, &model.params) {
        let _ = sim.validate(&model.params);
        let _ = estimation_section(&doc, &model.params, &sim);
    }
});
