//! Long randomized stress run of both semiclassical routes against the exact
//! propagator; not part of the test suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinsemi::ensemble::{sample_case, FieldFamily};
use spinsemi::exact::{integrate_ab, matrix_element};
use spinsemi::ode::IntegratorConfig;
use spinsemi::semiclassical::{action_propagator, endpoint_propagator};
use std::time::Instant;

fn main() {
    let cfg = IntegratorConfig::default();
    let start = Instant::now();
    let mut cases = 0usize;
    let mut max_ep = 0.0f64;
    let mut max_route = 0.0f64;
    let mut max_grid = 0usize;
    let mut errors = Vec::new();
    for seed in 0..10u64 {
        for family in [
            FieldFamily::Const,
            FieldFamily::Fourier,
            FieldFamily::TableRandom,
            FieldFamily::LandauZener,
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(0xABCD_0000 + seed * 31 + family as u64);
            for _ in 0..100 {
                cases += 1;
                let case = sample_case(family, &mut rng);
                let exact = matrix_element(
                    &integrate_ab(&case.field, case.t, &cfg).unwrap(),
                    case.to,
                    case.from,
                );
                let ep =
                    endpoint_propagator(&case.field, case.from, case.to, case.t, &cfg).unwrap();
                max_ep = max_ep.max((ep.value - exact).norm());
                match action_propagator(&case.field, case.from, case.to, case.t, &cfg) {
                    Ok(ac) => {
                        max_route = max_route.max((ac.value - ep.value).norm());
                        max_grid = max_grid.max(ac.branch_grid);
                    }
                    Err(e) => errors.push(format!("{family:?} seed {seed}: {e}")),
                }
            }
        }
    }
    println!(
        "{cases} cases in {:.2?}: max|ep-exact| = {max_ep:.3e}, max|action-ep| = {max_route:.3e}, max grid = {max_grid}, action errors = {}",
        start.elapsed(),
        errors.len()
    );
    for e in errors.iter().take(10) {
        println!("  {e}");
    }
}
