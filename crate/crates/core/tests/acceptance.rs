//! One PASS/FAIL line per criterion. Run with `cargo test --release --test acceptance -- --nocapture`.

use condlab_core::acceptance::{run_all, AcceptConfig};

#[test]
fn acceptance() {
    let results = run_all(&AcceptConfig::default(), |r| println!("{}", r.line()));
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
