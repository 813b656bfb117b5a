//! The invariant battery, once clean and once with a deliberately broken
//! dual matrix.

use ciblp::cli::validate::{run_validation, Fault, ValidateOptions};

fn main() {
    let clean = run_validation(&ValidateOptions::default());
    print!("{}", clean.render());

    let faulty = run_validation(&ValidateOptions { fault: Some(Fault::AsymmetricU), ..Default::default() });
    println!();
    print!("{}", faulty.render());
}
