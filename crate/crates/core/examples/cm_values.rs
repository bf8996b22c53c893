//! Certified values of Hauptmoduln at CM points.

use std::error::Error;

use hauptmodul_traces::forms::QuadForm;
use hauptmodul_traces::hauptmodul::{eval_at_point, Level};
use hauptmodul_traces::numeric::{certify_integer, Ctx};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cases = [
        (1, QuadForm::new(1, 1, 1)),
        (1, QuadForm::new(1, 0, 1)),
        (2, QuadForm::new(2, 0, 1)),
        (3, QuadForm::new(3, 3, 1)),
        (5, QuadForm::new(5, 5, 2)),
    ];
    for (p, form) in cases {
        let level = Level::star(p)?;
        let mut ctx = Ctx::new(128);
        let v = eval_at_point(level, &form, &mut ctx)?;
        match certify_integer(&v, &ctx)? {
            Some(c) => println!("{level}({form}) = {} (residual {:.1e})", c.value, c.residual),
            None => println!("{level}({form}) ≈ {:.6} + {:.6}i", v.re_f64(), v.im_f64()),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
