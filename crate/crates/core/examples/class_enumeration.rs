//! Classes of forms of discriminant -23 under Γ0(3) and Γ0*(3).

use std::error::Error;

use hauptmodul_traces::forms;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let (d, p) = (23, 3);
    println!("β sectors: {:?}", forms::betas(d, p));
    for beta in forms::betas(d, p) {
        for c in forms::gamma0_classes(d, p, beta)? {
            println!(
                "Γ0(3)  β={beta:>2}  {}  |stab| = {}  CM point {}",
                c.representative,
                c.stabilizer_order,
                forms::cm_point(&c.representative)?
            );
        }
    }
    for c in forms::gamma0star_classes(d, p)? {
        let rep = forms::min_rep_star(&c.representative, p)?;
        println!("Γ0*(3) {rep}  principal: {}", forms::is_equiv_principal(&rep, p));
    }
    let principal: Vec<String> = forms::principal_forms(d, p)?.iter().map(|f| f.to_string()).collect();
    println!("principal forms: {}", principal.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
