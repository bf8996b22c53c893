//! Growth of `c_n^(p)` against the Laplace-method prediction.

use std::error::Error;

use hauptmodul_traces::asymptotics::{convergence_report, laplace_integral, principal_trace_approx, residue_grid, s_sum};
use hauptmodul_traces::TraceEngine;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for p in [2u32, 3, 5] {
        let report = convergence_report(p, &residue_grid(p, &[50, 100, 200]))?;
        print!("{}", report.to_text());
    }
    let j = laplace_integral(3, 400)?;
    println!(
        "J_400: quadrature {:.6e}, Laplace {:.6e}, S^(0) {:.6e}",
        j.quadrature,
        j.laplace,
        s_sum(3, 400, 0)?
    );
    let engine = TraceEngine::new(3, 2)?;
    for d in [23i64, 24, 35, 36] {
        let exact = engine.trace(true, 2, d)?.value;
        println!("t_2^(3*)({d}) = {exact}, principal forms give {:.1}", principal_trace_approx(3, 2, d)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
