use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use crosswalk_core::calibration::{fit_mdp, fit_sfm, load_trajectories, CalibrationConfig, TrajectoryDataset};
use crosswalk_core::config::{apply_override, ParamsFile};
use crosswalk_core::engine::summary::{summarize, TraceSummary};
use crosswalk_core::engine::trace::{read_csv, write_csv, StateMessage};
use crosswalk_core::pedestrian::{CrossingMdp, PedestrianConfig, PedestrianSource, SfmParams};
use crosswalk_core::tuner::{compare_designs, pso_run, ComparisonRow, ObjectiveWeights, Suite, TuningConfig};
use crosswalk_core::{scenarios, DecisionParams, ScenarioConfig};
use crosswalk_service::ServiceConfig;
use clap::ValueEnum;
use serde::Serialize;

use crate::args::{Cli, Command, Common, Model, ReplayFormat};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Success = 0,
    /// The simulated interaction never resolved.
    Timeout = 2,
}

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Simulate {
            common,
            scenario,
            model,
            params,
        } => simulate(&common, scenario.as_deref(), model, params.as_deref()),
        Command::Tune {
            common,
            iterations,
            swarm,
            params,
        } => tune(&common, iterations, swarm, params.as_deref()),
        Command::Calibrate {
            common,
            model,
            settings,
        } => calibrate(&common, model, settings.as_deref()),
        Command::Serve { config, addr, grace } => serve(&config, &addr, grace),
        Command::Replay { trace, format } => replay(&trace, format),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn parse_table(text: &str, what: &str) -> Result<toml::Table> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn to_table<T: Serialize>(value: &T) -> toml::Table {
    toml::Table::try_from(value).expect("configuration serializes to a table")
}

fn apply_all(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        apply_override(table, item)?;
    }
    Ok(())
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn write_file(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(CliError::io(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// Scenario from a file or a built-in name, with parameter file, model,
/// seed and `--set` overrides layered on top in that order.
fn load_scenario(
    common: &Common,
    name: Option<&str>,
    model: Option<Model>,
    params: Option<&Path>,
) -> Result<ScenarioConfig> {
    let mut table = match (&common.config, name) {
        (Some(path), _) => parse_table(&read_text(path)?, &path.display().to_string())?,
        (None, Some(name)) => {
            let cfg = scenarios::by_name(name)
                .ok_or_else(|| CliError::Usage(format!("unknown scenario {name:?}")))?;
            to_table(&cfg)
        }
        (None, None) => return Err(CliError::Usage("give --config FILE or --scenario NAME".into())),
    };
    if let Some(path) = params {
        let decision = ParamsFile::load(path)?;
        table.insert("decision".into(), toml::Value::Table(to_table(&decision)));
    }
    let mut overrides = Vec::new();
    if let Some(m) = model {
        let name = m.to_possible_value().expect("models have names");
        overrides.push(format!("pedestrian.model=\"{}\"", name.get_name()));
    }
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend(common.set.iter().cloned());
    apply_all(&mut table, &overrides)?;
    let text = toml::to_string(&table).expect("table serializes");
    Ok(ScenarioConfig::from_toml_str(&text)?)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    scenario: &'a str,
    #[serde(flatten)]
    summary: TraceSummary,
}

fn simulate(common: &Common, name: Option<&str>, model: Option<Model>, params: Option<&Path>) -> Result<Status> {
    let cfg = load_scenario(common, name, model, params)?;
    let trace = crosswalk_core::run(&cfg)?;
    let summary = summarize(
        &trace,
        &ObjectiveWeights::default(),
        cfg.decision.k_num,
        cfg.decision.d_ca,
        cfg.geometry.l_corridor,
    )?;
    create_out(&common.out)?;
    let trace_path = common.out.join("trace.csv");
    let file = fs::File::create(&trace_path).map_err(CliError::io(&trace_path))?;
    trace.write_csv(BufWriter::new(file))?;
    let report = SimulationReport {
        scenario: &cfg.name,
        summary,
    };
    write_file(common.out.join("summary.json"), &to_json(&report))?;
    let s = &report.summary;
    println!(
        "{}: {:?} after {:.2} s, crossing order {:?}, min separation {:.2} m, J = {:.3}",
        cfg.name, s.outcome, s.duration, s.crossing_order, s.min_separation, s.objective
    );
    Ok(if s.is_timeout() { Status::Timeout } else { Status::Success })
}

#[derive(Serialize)]
struct ModelReport {
    model: PedestrianSource,
    best_cost: f64,
    baseline_cost: f64,
    iterations: usize,
    params: DecisionParams,
}

#[derive(Serialize)]
struct TuneReport {
    designs: Vec<ModelReport>,
    /// Vehicle-speed RMS difference between the SFM and MDP designs.
    comparison: Vec<ComparisonRow>,
}

fn tuning_suite(cfg: &TuningConfig, base_dir: &Path, model: PedestrianSource) -> Result<Vec<ScenarioConfig>> {
    if cfg.scenarios.is_empty() {
        return Ok(scenarios::tuning_suite(model));
    }
    cfg.scenarios
        .iter()
        .map(|p| {
            let path = base_dir.join(p);
            let mut scenario = ScenarioConfig::load(&path, &[])?;
            scenario.pedestrian.model = model;
            scenario.validate()?;
            Ok(scenario)
        })
        .collect()
}

fn tune(common: &Common, iterations: Option<usize>, swarm: Option<usize>, params: Option<&Path>) -> Result<Status> {
    let (mut table, base_dir) = match &common.config {
        Some(path) => (
            parse_table(&read_text(path)?, &path.display().to_string())?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (to_table(&TuningConfig::default()), PathBuf::new()),
    };
    apply_all(&mut table, &common.set)?;
    let mut cfg: TuningConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| crosswalk_core::Error::Config(e.to_string()))?;
    if let Some(n) = iterations {
        cfg.pso.max_iters = n;
    }
    if let Some(n) = swarm {
        cfg.pso.swarm_size = n;
    }
    if let Some(seed) = common.seed {
        cfg.pso.seed = seed;
    }
    cfg.pso.validate()?;
    cfg.weights.validate()?;
    let base = match params {
        Some(path) => ParamsFile::load(path)?,
        None => DecisionParams::default(),
    };

    create_out(&common.out)?;
    let mut designs = Vec::new();
    for (model, tag) in [(PedestrianSource::Sfm, "sfm"), (PedestrianSource::Mdp, "mdp")] {
        let suite = Suite::new(tuning_suite(&cfg, &base_dir, model)?)?;
        let result = pso_run(&cfg.pso, &suite, &cfg.weights, &base)?;
        write_file(
            common.out.join(format!("params_{tag}.toml")),
            &ParamsFile::to_toml_string(&result.best_params),
        )?;
        let mut history = String::from("iteration,best_cost\n");
        for (k, cost) in result.history.iter().enumerate() {
            history.push_str(&format!("{k},{cost}\n"));
        }
        write_file(common.out.join(format!("history_{tag}.csv")), &history)?;
        println!(
            "{tag}: J {:.3} -> {:.3} after {} iterations",
            result.baseline_cost, result.best_cost, cfg.pso.max_iters
        );
        designs.push(ModelReport {
            model,
            best_cost: result.best_cost,
            baseline_cost: result.baseline_cost,
            iterations: cfg.pso.max_iters,
            params: result.best_params,
        });
    }

    let comparison = compare_designs(
        &designs[0].params,
        &designs[1].params,
        &[scenarios::scenario_normal(), scenarios::scenario_unexpected_stop()],
    )?;
    let mut csv = String::from("scenario,rms_v_veh,timeout_sfm,timeout_mdp\n");
    for row in &comparison {
        csv.push_str(&format!("{},{},{},{}\n", row.scenario, row.rms_v_veh, row.timeout_a, row.timeout_b));
        println!("{}: SFM vs MDP design speed RMS {:.3} m/s", row.scenario, row.rms_v_veh);
    }
    write_file(common.out.join("comparison.csv"), &csv)?;
    write_file(common.out.join("tune_report.json"), &to_json(&TuneReport { designs, comparison }))?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct FitReport {
    model: PedestrianSource,
    samples: usize,
    init_rss: f64,
    rss: f64,
    rss_per_sample: f64,
}

#[derive(Serialize)]
struct PedestrianFile<'a> {
    pedestrian: &'a PedestrianConfig,
}

fn calibrate(common: &Common, model: Option<Model>, settings: Option<&Path>) -> Result<Status> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("calibrate needs --config DATASET.csv".into()))?;
    if !path.exists() {
        return Err(CliError::Usage(format!("{}: no such file", path.display())));
    }
    let dataset: TrajectoryDataset = load_trajectories(path)?;
    let mut table = match settings {
        Some(p) => parse_table(&read_text(p)?, &p.display().to_string())?,
        None => to_table(&CalibrationConfig::default()),
    };
    apply_all(&mut table, &common.set)?;
    let cfg: CalibrationConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| crosswalk_core::Error::Config(e.to_string()))?;
    let models = match model {
        None => vec![PedestrianSource::Sfm, PedestrianSource::Mdp],
        Some(Model::Scripted) => {
            return Err(CliError::Usage("only sfm and mdp models can be calibrated".into()))
        }
        Some(m) => vec![m.into()],
    };

    create_out(&common.out)?;
    let samples = dataset.n_samples();
    let mut reports = Vec::new();
    for source in models {
        let mut ped = PedestrianConfig::with_model(source);
        let (tag, init_rss, rss) = match source {
            PedestrianSource::Sfm => {
                let fit = fit_sfm(&dataset, &SfmParams::default(), &cfg)?;
                ped.sfm = fit.params;
                ("sfm", fit.init_rss, fit.rss)
            }
            _ => {
                let fit = fit_mdp(&dataset, &CrossingMdp::default(), &cfg)?;
                ped.mdp = fit.model;
                ("mdp", fit.init_rss, fit.rss)
            }
        };
        let text = toml::to_string(&PedestrianFile { pedestrian: &ped }).expect("pedestrian config serializes");
        write_file(common.out.join(format!("pedestrian_{tag}.toml")), &text)?;
        let per_sample = rss / samples as f64;
        println!("{tag}: rss {init_rss:.3e} -> {rss:.3e} over {samples} samples ({per_sample:.3e} per sample)");
        reports.push(FitReport {
            model: source,
            samples,
            init_rss,
            rss,
            rss_per_sample: per_sample,
        });
    }
    write_file(common.out.join("calibration_report.json"), &to_json(&reports))?;
    Ok(Status::Success)
}

fn serve(configs: &[PathBuf], addr: &str, grace: f64) -> Result<Status> {
    if !(grace.is_finite() && grace >= 0.0) {
        return Err(CliError::Usage(format!("grace must be a non-negative number of seconds, got {grace}")));
    }
    let mut cfg = ServiceConfig {
        grace: Duration::from_secs_f64(grace),
        ..ServiceConfig::default()
    };
    for path in configs {
        cfg.scenarios.push(ScenarioConfig::load(path, &[])?);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::io("tokio runtime"))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(CliError::io(addr))?;
        let local = listener.local_addr().map_err(CliError::io(addr))?;
        println!("listening on http://{local}");
        crosswalk_service::serve(listener, cfg).await?;
        Ok(Status::Success)
    })
}

fn replay(path: &Path, format: ReplayFormat) -> Result<Status> {
    let file = fs::File::open(path).map_err(CliError::io(path))?;
    let records = read_csv(file)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut emit = |line: &str| writeln!(out, "{line}").map_err(CliError::io("stdout"));
    match format {
        ReplayFormat::Jsonl => {
            for r in &records {
                emit(&serde_json::to_string(&StateMessage::from(r)).expect("state serializes"))?;
            }
        }
        ReplayFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&records, &mut buf)?;
            let text = String::from_utf8(buf).expect("trace CSV is UTF-8");
            for line in text.lines().skip(1) {
                emit(line)?;
            }
        }
    }
    out.flush().map_err(CliError::io("stdout"))?;
    Ok(Status::Success)
}
