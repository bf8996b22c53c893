//! The weight-2 identities `2H̃_k = F̃_k` (k ≠ 0) and `2H̃_0 = -G̃_0`.

use std::error::Error;

use hauptmodul_traces::identities::{build_h, eisenstein_constant, verify_weight2_sectors};
use hauptmodul_traces::TraceEngine;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for p in [2u32, 3, 5] {
        let h = build_h(p, 5)?;
        let head: Vec<String> = (0..=5).map(|n| h.coeff(n).map(|c| c.to_string())).collect::<Result<_, _>>()?;
        println!("p={p} K_p={} H = {} + ...", eisenstein_constant(p)?, head.join(", "));
        let report = verify_weight2_sectors(&TraceEngine::new(p, 2)?, 100)?;
        println!("{}", report.summary());
        assert!(report.passed());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
