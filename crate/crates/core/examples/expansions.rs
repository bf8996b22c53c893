//! Heads of the Hauptmoduln and the star relation `j_p* = j_p - p (j_p | U_p)`.

use std::error::Error;

use hauptmodul_traces::hauptmodul::{hauptmodul_series, Level};
use hauptmodul_traces::identities::verify_star_relation;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for p in [1u32, 2, 3, 5] {
        for starred in [true, false] {
            if p == 1 && !starred {
                continue;
            }
            let level = Level::new(p, starred)?;
            let s = hauptmodul_series(level, 4)?;
            let head: Vec<String> = (-1..=4).map(|n| s.coeff_integer(n).map(|c| c.to_string())).collect::<Result<_, _>>()?;
            println!("{level:>6}: {}", head.join(", "));
        }
    }
    for p in [2u32, 3, 5] {
        let report = verify_star_relation(p, 200)?;
        println!("{}", report.summary());
        assert!(report.passed());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
