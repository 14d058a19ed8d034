//! Optimize an external program that speaks the line-oriented JSON protocol:
//! it reads `{"x":[...]}` and answers `{"y":value}`, one line each.
//!
//! Requires `python3` on the PATH.

use ctxbo::{run_bo, AcquisitionSpec, Bounds, Direction, ExperimentConfig, Objective};

const SCRIPT: &str = r#"
import json, sys
for line in sys.stdin:
    x = json.loads(line)["x"]
    y = (x[0] - 0.3) ** 2 + (x[1] + 0.2) ** 2
    print(json.dumps({"y": y}), flush=True)
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("ctxbo-subprocess-example");
    std::fs::create_dir_all(&dir)?;
    let script = dir.join("bowl.py");
    std::fs::write(&script, SCRIPT)?;

    let bounds = Bounds::new(vec![(-1.0, 1.0), (-1.0, 1.0)])?;
    let objective = Objective::subprocess(
        "bowl",
        format!("python3 {}", script.display()),
        bounds,
        Direction::Minimize,
    );
    let mut config = ExperimentConfig::new(objective, AcquisitionSpec::aei());
    config.budget = 15;
    let trace = run_bo(&config, 3)?;
    let best = trace
        .records
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("records");
    println!("best y {:.6} at ({:.4}, {:.4}); optimum is 0 at (0.3, -0.2)", best.value, best.point[0], best.point[1]);
    Ok(())
}
