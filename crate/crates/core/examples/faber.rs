//! Faber polynomials: `φ_m(j_3*) = q^{-m} + O(q)`.

use std::error::Error;

use hauptmodul_traces::hauptmodul::{faber, Level};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let level = Level::star(3)?;
    for m in 1..=4 {
        let poly = faber(level, m)?;
        let e = &poly.expansion;
        let tail: Vec<String> = (1..=3).map(|n| e.coeff_integer(n).map(|c| c.to_string())).collect::<Result<_, _>>()?;
        println!("phi_{m} = {poly}");
        println!("  phi_{m}(j3*) = q^-{m} + {} q + {} q^2 + {} q^3 + ...", tail[0], tail[1], tail[2]);
        for n in (1 - m as i64)..=0 {
            assert_eq!(e.coeff_integer(n)?, 0.into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
