//! Drives the batch commands from code, the way the binary does.

use onsager_lab::cli::{run, Command, LabConfig, RunOptions};

fn main() -> onsager_lab::Result<()> {
    let mut config = LabConfig::default();
    config.flux.expect.min_order = Some(1.5);
    let dir = std::env::temp_dir().join("onsager-lab-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("lab.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config)?)?;

    for command in [Command::Iterate, Command::Flux { field: None }] {
        let outcome = run(
            &command,
            &RunOptions {
                config: Some(path.clone()),
                out: dir.join(command.name()),
                seed: Some(3),
                verbose: false,
            },
        )?;
        println!("{}: passed = {}", command.name(), outcome.passed());
        for c in &outcome.manifest.checks {
            println!("  {}", c.line());
        }
    }
    Ok(())
}
