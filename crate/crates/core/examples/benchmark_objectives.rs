//! Evaluate the built-in benchmarks at their known optima.

use ctxbo::Objective;

fn main() {
    for name in Objective::builtin_names() {
        let objective = Objective::builtin(name).expect("builtin");
        println!("{name}: {} dims, {}, bounds {}", objective.dim(), objective.direction().name(), objective.bounds());
        for r in objective.self_test().unwrap_or_default() {
            println!(
                "  f({:?}) = {:.6} expected {:.6} {}",
                r.location,
                r.value,
                r.expected,
                if r.passed { "ok" } else { "MISMATCH" }
            );
        }
    }
}
