//! Drive a task from a JSON config, the same path the `potts` binary takes.
use std::path::Path;

use potts::cli::{run_file, RunOptions, Task};

fn main() -> potts::Result<()> {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let out = std::env::temp_dir().join("potts-example-out");
    for (task, file) in [(Task::SampleGraph, "sample-graph.json"), (Task::Maxcut, "maxcut-triangle.json"), (Task::ParisiEval, "parisi-eval.json")] {
        let report = run_file(task, &configs.join(file), &RunOptions { seed: None, out: Some(out.clone()) })?;
        println!("{} [{}]", task.name(), report.config_hash);
        for l in &report.lines {
            println!("  {l}");
        }
    }
    Ok(())
}
