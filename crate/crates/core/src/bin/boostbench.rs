use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use boost_core::ann::{
    generate_dataset, train_ann, write_dataset_csv, AnnModel, AnnTrainConfig, DEFAULT_V_IN_RANGE,
    DEFAULT_V_TARGET_RANGE,
};
use boost_core::converter::{save_trajectory_csv, ParamSet};
use boost_core::harness::{
    ann_artifact_path, pi_artifact_path, ppo_artifact_dir, run_closed_loop, run_experiment,
    write_comparison_csv, write_experiment, Artifacts, Controller, ExperimentGrid, Report,
    ScenarioConfig, ScenarioProfile, REFERENCE_VOLTAGES,
};
use boost_core::metrics::{mae, step_metrics, MetricsConfig};
use boost_core::pi::PiGains;
use boost_core::ppo::{train_agent, AgentCheckpoint, PpoConfig};
use boost_core::tuning::{tune_pi, GaConfig, PsoConfig, TuneMethod, TunerOutput, TuningScenario};
use boost_core::verify::{verify_all, Status};
use boost_core::{Error, Result};

#[derive(Parser)]
#[command(name = "boostbench", version, about = "Boost converter control workbench")]
struct Cli {
    /// Scenario JSON (params_set, v_ref, profile, horizon_steps, v_up, v_low, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    params: Option<ParamSet>,
    /// Output / artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    #[arg(long)]
    vref: Option<f64>,
    #[arg(long)]
    profile: Option<ScenarioProfile>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerKind {
    Pi,
    Ann,
    Rl,
    Constant,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed loop and write its trajectory.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "pi")]
        controller: ControllerKind,
        #[arg(long)]
        kp: Option<f64>,
        #[arg(long)]
        ki: Option<f64>,
        /// Tuner output to take PI gains from.
        #[arg(long)]
        gains: Option<PathBuf>,
        /// ANN model file or PPO checkpoint directory.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        duty: f64,
    },
    /// Tune PI gains by PSO or GA.
    TunePi {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "pso")]
        method: TuneMethod,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Generate analytic duty data and fit the feedforward network.
    TrainAnn {
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long)]
        epochs: Option<usize>,
        /// Also write the dataset CSV.
        #[arg(long)]
        dataset: bool,
    },
    /// Train a PPO agent for one reference voltage.
    TrainPpo {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Full PPO configuration JSON; flags override it.
        #[arg(long)]
        ppo_config: Option<PathBuf>,
    },
    /// Run every controller over the scenario grid and write the report.
    Evaluate {
        /// Artifact directory (defaults to --out).
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Print a report and regenerate its reference comparison sheet.
    Report,
    /// Check every acceptance property; nonzero exit unless all pass.
    Verify {
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
}

fn scenario(cli: &Cli, args: Option<&ScenarioArgs>) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(p) = cli.params {
        cfg.params_set = p;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(a) = args {
        if let Some(v) = a.vref {
            cfg.v_ref = v;
        }
        if let Some(p) = a.profile {
            cfg.profile = p;
        }
    }
    cfg.build()?;
    Ok(cfg)
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn simulate(
    cli: &Cli,
    args: &ScenarioArgs,
    kind: ControllerKind,
    gains: (Option<f64>, Option<f64>, Option<&PathBuf>),
    model: Option<&PathBuf>,
    duty: f64,
) -> Result<()> {
    let cfg = scenario(cli, Some(args))?;
    let (params, spec) = cfg.build()?;
    let need_model = || {
        model
            .cloned()
            .ok_or_else(|| Error::Usage("--model is required for this controller".into()))
    };
    let controller = match kind {
        ControllerKind::Pi => {
            let base = match gains.2 {
                Some(path) => TunerOutput::load(path)?.gains(),
                None => PiGains::PSO_REFERENCE,
            };
            Controller::Pi(PiGains::new(
                gains.0.unwrap_or(base.kp),
                gains.1.unwrap_or(base.ki),
            ))
        }
        ControllerKind::Ann => Controller::Ann(Box::new(AnnModel::load(need_model()?)?)),
        ControllerKind::Rl => Controller::from_checkpoint(AgentCheckpoint::load(need_model()?)?),
        ControllerKind::Constant => Controller::ConstantDuty(duty),
    };
    let traj = run_closed_loop(&controller, &params, &spec)?;
    let m = step_metrics(&traj, cfg.v_ref, &MetricsConfig::default())?;
    create_out(&cli.out)?;
    let path = cli.out.join("trajectory.csv");
    save_trajectory_csv(&traj, cfg.v_ref, &path)?;
    println!("{}", serde_json::to_string_pretty(&m)?);
    println!("mae {:.6} V; trajectory written to {}", mae(&traj, cfg.v_ref), path.display());
    Ok(())
}

fn tune(
    cli: &Cli,
    args: &ScenarioArgs,
    method: TuneMethod,
    particles: Option<usize>,
    iterations: Option<usize>,
) -> Result<()> {
    let cfg = scenario(cli, Some(args))?;
    let (params, spec) = cfg.build()?;
    let tuning = TuningScenario { params, spec };
    let mut pso = PsoConfig {
        seed: cfg.seed,
        ..PsoConfig::default()
    };
    let mut ga = GaConfig {
        seed: cfg.seed,
        ..GaConfig::default()
    };
    if let Some(n) = particles {
        pso.swarm_size = n;
        ga.population_size = n;
    }
    if let Some(n) = iterations {
        pso.iterations = n;
        ga.generations = n;
    }
    let out = tune_pi(method, &tuning, &pso, &ga)?;
    create_out(&cli.out)?;
    let path = pi_artifact_path(&cli.out, &method.to_string());
    out.save(&path)?;
    println!(
        "{method}: k_p {:.6} k_i {:.6} mae {:.6} V -> {}",
        out.k_p,
        out.k_i,
        out.mae,
        path.display()
    );
    Ok(())
}

fn train_ann_cmd(cli: &Cli, n: usize, epochs: Option<usize>, dataset: bool) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let ds = generate_dataset(DEFAULT_V_IN_RANGE, DEFAULT_V_TARGET_RANGE, n, seed)?;
    let mut cfg = AnnTrainConfig {
        seed,
        ..AnnTrainConfig::default()
    };
    if let Some(e) = epochs {
        cfg.max_epochs = e;
    }
    let outcome = train_ann(&ds, &cfg)?;
    create_out(&cli.out)?;
    if dataset {
        let file = std::fs::File::create(cli.out.join("ann_dataset.csv"))?;
        write_dataset_csv(&ds, file)?;
    }
    let path = ann_artifact_path(&cli.out);
    outcome.model.save(&path)?;
    println!(
        "ann: {} epochs, train mse {:.3e}, test mse {:.3e} -> {}",
        outcome.epochs,
        outcome.train_mse,
        outcome.test_mse,
        path.display()
    );
    Ok(())
}

fn train_ppo_cmd(
    cli: &Cli,
    args: &ScenarioArgs,
    episodes: Option<usize>,
    lr: Option<f64>,
    ppo_config: Option<&PathBuf>,
) -> Result<()> {
    let cfg = scenario(cli, Some(args))?;
    let mut ppo = match ppo_config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => PpoConfig::default(),
    };
    if let Some(s) = cli.seed {
        ppo.seed = s;
    }
    if let Some(e) = episodes {
        ppo.episodes = e;
    }
    if let Some(lr) = lr {
        ppo.lr_actor = lr;
        ppo.lr_critic = lr;
    }
    let ckpt = train_agent(&cfg, &ppo)?;
    let dir = ppo_artifact_dir(&cli.out, cfg.v_ref);
    ckpt.save(&dir)?;
    let last = ckpt.header.reward_curve.last().copied().unwrap_or(f64::NAN);
    println!(
        "ppo {} V: {} episodes, final episode reward {last:.1}, std {:.4} -> {}",
        cfg.v_ref,
        ckpt.header.reward_curve.len(),
        ckpt.policy.std(),
        dir.display()
    );
    Ok(())
}

fn evaluate(cli: &Cli, artifacts: Option<&PathBuf>) -> Result<()> {
    let dir = artifacts.unwrap_or(&cli.out);
    let grid = ExperimentGrid {
        params_set: cli.params.unwrap_or_default(),
        ..ExperimentGrid::default()
    };
    let loaded = Artifacts::load(dir, &REFERENCE_VOLTAGES);
    let out = run_experiment(&grid, &loaded);
    write_experiment(&out, &cli.out)?;
    print_report(&out.report);
    Ok(())
}

fn print_report(report: &Report) {
    println!(
        "{:<7} {:<9} {:>5} {:>9} {:>9} {:>8} {:>8} {:>9}",
        "ctrl", "scenario", "vref", "rise_s", "settle_s", "over%", "under%", "mae_V"
    );
    for r in &report.rows {
        match &r.metrics {
            Some(m) => println!(
                "{:<7} {:<9} {:>5} {:>9.4} {:>9.4} {:>8.3} {:>8.3} {:>9.4}",
                r.controller,
                r.scenario.id(),
                r.v_ref,
                m.rise_time,
                m.settling_time,
                m.overshoot_pct,
                m.undershoot_pct,
                r.mae.unwrap_or(f64::NAN)
            ),
            None => println!(
                "{:<7} {:<9} {:>5} failed: {}",
                r.controller,
                r.scenario.id(),
                r.v_ref,
                r.error.as_deref().unwrap_or("unknown")
            ),
        }
    }
}

fn report_cmd(cli: &Cli) -> Result<()> {
    let report = Report::load(cli.out.join("report.json"))?;
    print_report(&report);
    let file = std::fs::File::create(cli.out.join("reference_comparison.csv"))?;
    write_comparison_csv(&report, file)?;
    Ok(())
}

fn verify_cmd(cli: &Cli, artifacts: Option<&PathBuf>) -> Result<bool> {
    let dir = artifacts.unwrap_or(&cli.out);
    let report = Report::load(cli.out.join("report.json")).ok();
    let verdicts = verify_all(report.as_ref(), dir);
    for v in &verdicts {
        println!("{v}");
    }
    Ok(verdicts.iter().all(|v| v.status == Status::Pass))
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate {
            scenario,
            controller,
            kp,
            ki,
            gains,
            model,
            duty,
        } => simulate(
            cli,
            scenario,
            *controller,
            (*kp, *ki, gains.as_ref()),
            model.as_ref(),
            *duty,
        )?,
        Command::TunePi {
            scenario,
            method,
            particles,
            iterations,
        } => tune(cli, scenario, *method, *particles, *iterations)?,
        Command::TrainAnn { n, epochs, dataset } => train_ann_cmd(cli, *n, *epochs, *dataset)?,
        Command::TrainPpo {
            scenario,
            episodes,
            lr,
            ppo_config,
        } => train_ppo_cmd(cli, scenario, *episodes, *lr, ppo_config.as_ref())?,
        Command::Evaluate { artifacts } => evaluate(cli, artifacts.as_ref())?,
        Command::Report => report_cmd(cli)?,
        Command::Verify { artifacts } => return verify_cmd(cli, artifacts.as_ref()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
