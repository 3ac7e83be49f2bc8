//! Generates a test split in memory and prints per-family results for each
//! built-in agent.
//!
//! `cargo run --release --example baseline_summary -- [seed]`

use toolfault::baselines::BaselineKind;
use toolfault::eval::evaluate;
use toolfault::generator::{generate_split, Profile};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let profile = Profile::named("large").expect("built-in profile");
    let test = generate_split(&profile, seed, "test", 1000).expect("generation");
    for kind in BaselineKind::ALL {
        let report = evaluate(kind.as_str(), &test, 4, || kind.agent())
            .expect("scoring")
            .report;
        let o = &report.overall;
        println!(
            "{kind:<14} success {:.3}  violations {:.3}  calls {:.2}  auc {:.3}",
            o.success_rate, o.mean_policy_violations, o.mean_tool_calls, report.auc
        );
        for (family, s) in &report.by_fault {
            let rec = s.recovery_rate.map_or("-".to_string(), |r| format!("{r:.3}"));
            println!("  {family:<20} success {:.3}  recovery {rec}", s.success_rate);
        }
    }
}
