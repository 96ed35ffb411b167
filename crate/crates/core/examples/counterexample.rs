//! Plain K-means stops at a tied, non-local solution on five points; every
//! refinement escapes it.

use lokmeans::harness::{counterexample_report, format_counterexample};
use lokmeans::Variant;

fn main() -> lokmeans::Result<()> {
    let report = counterexample_report(&Variant::ALL)?;
    print!("{}", format_counterexample(&report));
    Ok(())
}
