//! The step-size admissibility table: which power schedules the validator
//! accepts, and how the partial sums behave.
//!
//! ```bash
//! cargo run --release --example schedule_gallery
//! ```

use sppa::schedule::{PowerTail, ScheduleVerdict, StepSchedule};

fn main() {
    println!("schedule                     verdict");
    println!("--------------------------   -------");
    for p in [0.3, 0.5, 0.6, 0.75, 1.0, 1.2] {
        let s = StepSchedule::power(1.0, p, 1).unwrap();
        let verdict = match s.validate() {
            ScheduleVerdict::Accept => "accept".to_string(),
            ScheduleVerdict::Reject { reason } => format!("reject ({reason})"),
        };
        println!("lambda_n = (n+1)^(-{p:<4})     {verdict}");
    }

    let undecidable = StepSchedule::explicit(vec![0.1; 100], None).unwrap();
    println!("\nexplicit constant prefix without a tail rule:");
    println!("  {:?}", undecidable.validate());

    let with_tail = StepSchedule::explicit(
        vec![0.5, 0.4, 0.3],
        Some(PowerTail { c: 1.0, p: 0.75, n0: 4 }),
    )
    .unwrap();
    println!("\nexplicit prefix with an accepted power tail:");
    println!("  {:?}", with_tail.validate());

    // Accepted schedules: step sums grow without bound while the squared
    // sums flatten out.
    println!("\npartial sums of the default schedule (p = 0.75):");
    println!("       N     sum lambda    sum lambda^2");
    let s = StepSchedule::default_power();
    for stage in 0..6 {
        let n = 1000u64 << stage;
        let (sum, sq) = s.partial_sums(n);
        println!("{n:>8}    {sum:>10.3}    {sq:>12.6}");
    }
}
