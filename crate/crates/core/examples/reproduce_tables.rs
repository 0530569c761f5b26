//! Reproduce the eight reference tables and print them as text.

use tl_lab::report::{render_report, run_reproduce, OutputFormat};

fn main() -> tl_lab::Result<()> {
    let mut failed = 0;
    for id in 1..=8 {
        let rep = run_reproduce(id)?;
        print!("{}", render_report(&rep, OutputFormat::Text)?);
        println!();
        failed += usize::from(!rep.passed());
    }
    println!("{} of 8 tables reproduced", 8 - failed);
    Ok(())
}
