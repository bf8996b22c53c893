//! Coefficients of `j_p` recovered from traces of singular moduli.

use std::error::Error;

use hauptmodul_traces::identities::{coefficient_via_traces, star_coefficient, verify_coefficient_formula_with, StarTraces};
use hauptmodul_traces::hauptmodul::{hauptmodul_series, Level};
use hauptmodul_traces::TraceEngine;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for p in [2u32, 3, 5] {
        let engine = TraceEngine::new(p, 2)?;
        let traces = StarTraces::build(&engine, 2, 4 * 12)?;
        let series = hauptmodul_series(Level::plain(p)?, 12)?;
        for n in 1..=6u64 {
            let c = coefficient_via_traces(&traces, n)?;
            assert_eq!(c, series.coeff_integer(n as i64)?);
            println!("p={p} n={n}: c_n = {c}  (c_n* = {})", star_coefficient(p, n)?);
        }
        println!("{}", verify_coefficient_formula_with(&traces, 12, std::time::Instant::now())?.summary());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
