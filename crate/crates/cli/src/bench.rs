//! Benchmark suites: anytime solve plus evaluation per row.
//!
//! ```toml
//! [[run]]
//! name = "rs44"
//! rocksample = { n = 4, k = 4 }
//! budget_s = 600
//!
//! [[run]]
//! name = "tiger"
//! model = "tiger.pomdp"   # relative to the config file
//! budget_s = 60
//! episodes = 1000
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use hsvi::io::RockSampleParams;
use hsvi::{evaluate, gen_rocksample, solve_anytime, EvalConfig, Execution, PomdpModel, SolverConfig};
use serde::Deserialize;

use crate::{create, read_model, write_outputs, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    #[serde(default)]
    run: Vec<Row>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    name: String,
    model: Option<PathBuf>,
    rocksample: Option<RockSampleSpec>,
    budget_s: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default = "default_episodes")]
    episodes: usize,
    #[serde(default = "default_horizon")]
    horizon: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RockSampleSpec {
    n: usize,
    k: usize,
    #[serde(default)]
    layout_seed: u64,
    d0: Option<f64>,
}

fn default_episodes() -> usize {
    500
}

fn default_horizon() -> usize {
    251
}

pub const TABLE_HEADER: &str =
    "name,states,actions,observations,lower_b0,upper_b0,mean,ci95,vectors,wall_time_s,status";

struct Outcome {
    model: PomdpModel,
    lower: f64,
    upper: f64,
    mean: f64,
    ci95: f64,
    vectors: usize,
    wall_time_s: f64,
}

fn load_row_model(row: &Row, base: &Path) -> Result<PomdpModel, CliError> {
    match (&row.model, &row.rocksample) {
        (Some(path), None) => read_model(&base.join(path)),
        (None, Some(rs)) => {
            let mut params = RockSampleParams::with_layout_seed(rs.n, rs.k, rs.layout_seed)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some(d0) = rs.d0 {
                params.half_efficiency_distance = d0;
            }
            gen_rocksample(&params).map_err(|e| CliError::Usage(e.to_string()))
        }
        _ => Err(CliError::Usage(format!(
            "row '{}' needs exactly one of 'model' or 'rocksample'",
            row.name
        ))),
    }
}

fn run_row(row: &Row, base: &Path, out_dir: &Path, exec: Execution) -> Result<Outcome, CliError> {
    let model = load_row_model(row, base)?;
    let timeout = Duration::try_from_secs_f64(row.budget_s)
        .map_err(|_| CliError::Usage(format!("row '{}': invalid budget {}", row.name, row.budget_s)))?;
    let config = SolverConfig {
        epsilon: row.epsilon,
        timeout: Some(timeout),
        execution: exec,
        ..Default::default()
    };
    let start = Instant::now();
    let result = solve_anytime(&model, &config)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    write_outputs(
        &result,
        Some(&out_dir.join(format!("{}.trace.csv", row.name))),
        Some(&out_dir.join(format!("{}.policy", row.name))),
    )?;
    let eval = evaluate(
        &model,
        &result.bounds.lower,
        &EvalConfig {
            num_episodes: row.episodes,
            horizon: row.horizon,
            seed: row.seed,
            discounted: true,
            execution: exec,
        },
    );
    Ok(Outcome {
        lower: result.lower_b0,
        upper: result.upper_b0,
        mean: eval.mean,
        ci95: eval.ci_half_width,
        vectors: result.bounds.lower.len(),
        wall_time_s,
        model,
    })
}

pub fn cmd_bench(
    config: &Path,
    out_dir: &Path,
    table: Option<&Path>,
    exec: Execution,
) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(config).map_err(|e| CliError::Io {
        path: config.to_path_buf(),
        source: e,
    })?;
    let suite: Suite = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", config.display())))?;
    for (i, row) in suite.run.iter().enumerate() {
        if suite.run[..i].iter().any(|r| r.name == row.name) {
            return Err(CliError::Usage(format!("duplicate row name '{}'", row.name)));
        }
        if row.episodes == 0 || row.horizon == 0 {
            return Err(CliError::Usage(format!(
                "row '{}': episodes and horizon must be positive",
                row.name
            )));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let base = config.parent().unwrap_or(Path::new("."));

    let mut lines = vec![TABLE_HEADER.to_string()];
    let mut failed = 0;
    for row in &suite.run {
        log::info!("bench row '{}'", row.name);
        match run_row(row, base, out_dir, exec) {
            Ok(o) => lines.push(format!(
                "{},{},{},{},{},{},{},{},{},{:.3},ok",
                row.name,
                o.model.num_states(),
                o.model.num_actions(),
                o.model.num_observations(),
                o.lower,
                o.upper,
                o.mean,
                o.ci95,
                o.vectors,
                o.wall_time_s
            )),
            Err(e) => {
                eprintln!("row '{}' failed: {e}", row.name);
                failed += 1;
                lines.push(format!("{},,,,,,,,,,error", row.name));
            }
        }
    }

    let mut body = lines.join("\n");
    body.push('\n');
    match table {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(body.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Io {
                    path: path.to_path_buf(),
                    source: e,
                })?;
        }
        None => print!("{body}"),
    }
    Ok(if failed > 0 { 2 } else { 0 })
}
