//! Loading configs, applying command-line overrides and running a solver.

use std::path::Path;
use std::time::Instant;

use qlatent::lse::solve_problem;
use qlatent::model::Solution;
use qlatent::problem::{Mode, OverlapMode, ProblemSpec};
use qlatent::training::{grid, metrics, train, LossBreakdown, Metrics, Objective};

use crate::error::{CliError, Result};

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub mode: Option<Mode>,
    pub overlap: Option<OverlapMode>,
}

pub fn load_config(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(ProblemSpec::from_toml_str(&text)?)
}

pub fn apply_overrides(mut problem: ProblemSpec, o: &Overrides) -> Result<ProblemSpec> {
    if let Some(s) = o.seed {
        problem.train.seed = s;
    }
    if let Some(e) = o.epochs {
        problem.train.epochs = e;
    }
    if let Some(m) = o.mode {
        problem.mode = m;
    }
    if let Some(ov) = o.overlap {
        problem.train.overlap = ov;
    }
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub history: Vec<LossBreakdown>,
    pub solution: Solution,
    pub metrics: Option<Metrics>,
    pub final_loss: f64,
    pub epochs_used: usize,
    pub seed: u64,
    pub wall_clock_secs: f64,
}

pub fn execute(problem: &ProblemSpec) -> Result<RunOutcome> {
    match problem.mode {
        Mode::Variational => {
            let r = train(problem, &problem.train)?;
            Ok(RunOutcome {
                history: r.history,
                solution: Solution::from_model(&r.model)?,
                metrics: r.metrics,
                final_loss: r.best_loss,
                epochs_used: r.epochs_used,
                seed: r.seed,
                wall_clock_secs: r.wall_clock_secs,
            })
        }
        Mode::Lse => {
            let start = Instant::now();
            let (_, solution) = solve_problem(problem)?;
            let loss = Objective::new(problem, &problem.train)?.evaluate_mixture(&solution.state, problem.train.seed)?;
            let metrics = match &problem.analytic {
                Some(truth) => Some(metrics(&solution, truth, &grid(&problem.plot_domain()?, 101))?),
                None => None,
            };
            Ok(RunOutcome {
                history: vec![loss],
                solution,
                metrics,
                final_loss: loss.total,
                epochs_used: 0,
                seed: problem.train.seed,
                wall_clock_secs: start.elapsed().as_secs_f64(),
            })
        }
    }
}
