//! Full-size acceptance battery: one line per criterion, all must pass.

use np_cli::battery::{run_battery, BatteryOptions, CRITERION_COUNT};

#[test]
fn acceptance_battery() {
    let results = run_battery(&BatteryOptions::full());
    assert_eq!(results.len(), CRITERION_COUNT as usize);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{:02} {}", r.id, r.name))
        .collect();
    println!(
        "{}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    assert!(failed.is_empty(), "failed criteria: {}", failed.join(", "));
}
