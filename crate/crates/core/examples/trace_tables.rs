//! Trace tables `t_1*, t_2*, t_1, t_2` for small discriminants.

use std::error::Error;

use hauptmodul_traces::TraceEngine;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let engine = TraceEngine::new(3, 2)?;
    print!("{}", engine.table(30)?.to_text());
    let t = engine.trace(true, 2, 47)?;
    println!("t_2^(3*)(47) = {} via {:?} at {:?} bits", t.value, t.provenance, t.bits);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
