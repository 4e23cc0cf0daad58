//! `mihpo`: offline model identification, planning and simulation jobs.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mihpo_core::baselines::{run_gbo, run_pso};
use mihpo_core::models::{
    fit_engine_curve, fit_tire, ChassisGeometry, EngineCurveModel, EngineCurveParams, FitOptions, FittedModel,
    FittedParams, TireModel, TireParams, VehicleParams,
};
use mihpo_core::objective::{generate_synthetic, load_csv, Dataset, ModelObjective, SyntheticSpec};
use mihpo_core::optimizer::{Method, OptimizationReport, OptimizerConfig, ParamSpace};
use mihpo_core::planning::{
    build_engine_map, cornering_stiffness, lqr_gain_table, plan_velocity_profile, tire_peak_force, EngineTorqueMap,
    LqrDesign, LqrGainTable, PlannerParams,
};
use mihpo_core::sim::{make_oval, run_lap, summarize, AxleTires, SimConfig, SimSetup, TrackPath};
use mihpo_core::{fixtures, Execution};
use serde::{Deserialize, Serialize};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "mihpo", version, about = "Model identification, planning and simulation tools")]
struct Cli {
    /// Seed for every random draw; overrides any seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads inside one run. 1 is the deterministic reference mode.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Where to write the run manifest. Defaults next to the primary output.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a tire or engine-curve model to a dataset.
    Fit(FitArgs),
    /// Write a seeded synthetic dataset.
    Generate(GenerateArgs),
    /// Run several optimizers on one dataset with a shared budget.
    Compare(CompareArgs),
    /// Merge fitted curves and dyno data into a torque map.
    BuildEngineMap(EngineMapArgs),
    /// Plan curvature-limited speed profiles over a sweep of tire factors.
    Plan(PlanArgs),
    /// Compute a velocity-scheduled LQR gain table.
    LqrGains(LqrArgs),
    /// Simulate closed-loop laps.
    Sim(SimArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModelKind {
    Tire,
    Engine,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Optimizer config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Dataset CSV (`alpha_rad,fy_n` or `engine_speed_norm,torque_nm`).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Throttle label for engine curves, percent.
    #[arg(long, default_value_t = 15.0)]
    throttle: f64,
    /// Output directory for params.json, report.json and loss_curve.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Comma-separated ground truth. Defaults to the built-in placeholder.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    truth: Option<Vec<f64>>,
    #[arg(long, default_value_t = 3000)]
    n_samples: usize,
    #[arg(long, default_value_t = 200.0)]
    noise_std: f64,
    /// Input range `lo,hi`. Defaults to ±0.12 rad for tires and [0, 1] for engines.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    range: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Mihpo,
    Gbo,
    Pso,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Mihpo => "mihpo",
            MethodArg::Gbo => "gbo",
            MethodArg::Pso => "pso",
        }
    }
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Optimizer config JSON; needs `gbo` / `pso` sections for those methods.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Throttle label for engine curves, percent.
    #[arg(long, default_value_t = 15.0)]
    throttle: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mihpo,gbo,pso")]
    methods: Vec<MethodArg>,
    /// Number of consecutive seeds, starting at `--seed` (or the config seed).
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Convergence CSV `method,seed,evaluations,best_loss`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VehicleArg {
    /// Vehicle JSON `{"vehicle", "geometry", "tires"}`. Defaults to the
    /// built-in placeholder car.
    #[arg(long)]
    vehicle: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EngineMapArgs {
    /// Fitted engine-curve params JSON files.
    #[arg(long, num_args = 1..)]
    fitted: Vec<PathBuf>,
    /// Dyno CSV `engine_rpm,throttle_pct,torque_nm`.
    #[arg(long)]
    dyno: Option<PathBuf>,
    #[command(flatten)]
    vehicle: VehicleArg,
    /// Torque grid CSV.
    #[arg(long)]
    out: PathBuf,
    /// Provenance mask CSV.
    #[arg(long)]
    mask: PathBuf,
}

#[derive(Args, Debug)]
struct TrackArgs {
    /// Centerline CSV `s,x,y,heading,kappa`. Defaults to an oval.
    #[arg(long)]
    track: Option<PathBuf>,
    #[arg(long, default_value_t = 500.0)]
    straight: f64,
    #[arg(long, default_value_t = 200.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
}

impl TrackArgs {
    fn load(&self) -> mihpo_core::Result<TrackPath> {
        match &self.track {
            Some(p) => TrackPath::read_csv(p),
            None => make_oval(self.straight, self.radius, self.spacing),
        }
    }
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    track: TrackArgs,
    #[command(flatten)]
    vehicle: VehicleArg,
    /// Tire performance factors to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.7")]
    mu: Vec<f64>,
    /// Speed cap, m/s.
    #[arg(long, default_value_t = 65.0)]
    v_cap: f64,
    /// Deceleration used for the braking pass, m/s^2.
    #[arg(long, default_value_t = 6.0)]
    a_brake: f64,
    /// Profile CSV `mu,s,kappa,v_des`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LqrArgs {
    /// LQR design JSON. Defaults to one derived from the vehicle's tires.
    #[arg(long)]
    design: Option<PathBuf>,
    #[command(flatten)]
    vehicle: VehicleArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    track: TrackArgs,
    #[command(flatten)]
    vehicle: VehicleArg,
    #[arg(long, default_value_t = 0.7)]
    mu: f64,
    #[arg(long, default_value_t = 65.0)]
    v_cap: f64,
    /// Gain table JSON. Computed from the default design when absent.
    #[arg(long)]
    gains: Option<PathBuf>,
    /// Torque grid CSV; needs `--engine-mask`. The placeholder map is used when absent.
    #[arg(long, requires = "engine_mask")]
    engine_map: Option<PathBuf>,
    #[arg(long, requires = "engine_map")]
    engine_mask: Option<PathBuf>,
    /// Simulation settings JSON.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    /// Overrides the lap count.
    #[arg(long)]
    laps: Option<u32>,
    /// Trace CSV.
    #[arg(long)]
    out: PathBuf,
    /// Lap summary JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

/// Vehicle description shared by the planning and simulation commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VehicleSetup {
    vehicle: VehicleParams,
    geometry: ChassisGeometry,
    tires: AxleTires,
}

impl VehicleArg {
    fn load(&self, inputs: &mut Vec<PathBuf>) -> anyhow::Result<VehicleSetup> {
        let setup = match &self.vehicle {
            None => VehicleSetup {
                vehicle: fixtures::vehicle(),
                geometry: fixtures::geometry(),
                tires: fixtures::axle_tires(),
            },
            Some(p) => {
                inputs.push(p.clone());
                let text = fs::read_to_string(p).map_err(|e| input_error(p, e))?;
                serde_json::from_str(&text).map_err(mihpo_core::Error::from)?
            }
        };
        setup.vehicle.validate()?;
        setup.geometry.validate()?;
        setup.tires.front.validate()?;
        setup.tires.rear.validate()?;
        Ok(setup)
    }
}

fn input_error(path: &Path, e: std::io::Error) -> anyhow::Error {
    anyhow::Error::new(mihpo_core::Error::Io { path: path.to_path_buf(), source: e })
}

fn planner_for(setup: &VehicleSetup, mu: f64, v_cap: f64) -> anyhow::Result<PlannerParams> {
    let p = PlannerParams {
        mu,
        peak_force: [
            tire_peak_force(&setup.tires.front, fixtures::PEAK_SCAN)?,
            tire_peak_force(&setup.tires.rear, fixtures::PEAK_SCAN)?,
        ],
        nominal_load: [2.0 * setup.vehicle.nominal_wheel_load[0], 2.0 * setup.vehicle.nominal_wheel_load[1]],
        v_cap,
    };
    p.validate()?;
    Ok(p)
}

fn default_design(setup: &VehicleSetup) -> LqrDesign {
    LqrDesign {
        c_af: cornering_stiffness(&setup.tires.front) / 2.0,
        c_ar: cornering_stiffness(&setup.tires.rear) / 2.0,
        ..fixtures::lqr_design()
    }
}

/// Reproduction record written after every successful command.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    args: Vec<String>,
    config: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    jobs: usize,
    version: String,
    started_at: String,
    finished_at: String,
}

/// Paths a command touched, for the manifest.
#[derive(Default)]
struct Io {
    config: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    manifest: Option<PathBuf>,
}

/// Writes through a sibling temp file and a rename so readers never see a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("output path {} has no file name", path.display()))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| input_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| input_error(path, e))?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(OsString::from).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn load_dataset(path: &Path, model: ModelKind) -> anyhow::Result<Dataset> {
    let (input, output) = match model {
        ModelKind::Tire => ("alpha_rad", "fy_n"),
        ModelKind::Engine => ("engine_speed_norm", "torque_nm"),
    };
    let (data, stats) = load_csv(path, &[input], output)?;
    if stats.rows_rejected > 0 {
        log::warn!("{}: skipped {} of {} rows", path.display(), stats.rows_rejected, stats.rows_read);
    }
    Ok(data)
}

fn search_space(cfg: &OptimizerConfig, model: ModelKind) -> anyhow::Result<ParamSpace> {
    let expected: &[&str] = match model {
        ModelKind::Tire => &TireParams::NAMES,
        ModelKind::Engine => &EngineCurveParams::NAMES,
    };
    let names = cfg.params.names();
    if names != expected {
        return Err(mihpo_core::Error::InvalidArgument(format!(
            "config params {names:?} do not match the model's {expected:?}"
        ))
        .into());
    }
    Ok(cfg.params.clone())
}

/// Runs one optimizer and returns the report plus the fitted params.
fn run_method(
    method: Method,
    cfg: &OptimizerConfig,
    data: &Dataset,
    model: ModelKind,
    throttle: f64,
    seed: u64,
    execution: Execution,
) -> anyhow::Result<(OptimizationReport, FittedParams)> {
    let space = search_space(cfg, model)?;
    if model == ModelKind::Engine && data.column(0).iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(mihpo_core::Error::Data("engine speed inputs must be normalized to [0, 1]".into()).into());
    }
    let budget = cfg.evaluation_budget()?;
    let opts = FitOptions {
        max_resource: cfg.max_resource,
        eta: cfg.eta,
        sigma_max_frac: cfg.sigma_max_frac,
        sigma_min_frac: cfg.sigma_min_frac,
        seed,
        execution,
    };
    let report = match (method, model) {
        (Method::Mihpo, ModelKind::Tire) => fit_tire(data, &space, &opts)?.1,
        (Method::Mihpo, ModelKind::Engine) => fit_engine_curve(data, &space, throttle, &opts)?.1,
        (Method::Gbo, _) => {
            let mut s = cfg.gbo_settings(budget)?;
            s.execution = execution;
            match model {
                ModelKind::Tire => run_gbo(&space, &ModelObjective::new(&TireModel, data), &s, seed)?,
                ModelKind::Engine => run_gbo(&space, &ModelObjective::new(&EngineCurveModel, data), &s, seed)?,
            }
        }
        (Method::Pso, _) => {
            let mut s = cfg.pso_settings(budget, seed)?;
            s.execution = execution;
            match model {
                ModelKind::Tire => run_pso(&space, &ModelObjective::new(&TireModel, data), &s)?,
                ModelKind::Engine => run_pso(&space, &ModelObjective::new(&EngineCurveModel, data), &s)?,
            }
        }
    };
    let v = &report.best_config.values;
    let loss = report.best_loss();
    let params = match model {
        ModelKind::Tire => FittedParams::tire(&TireParams::from_slice(v)?, loss),
        ModelKind::Engine => FittedParams::engine(&EngineCurveParams::new([v[0], v[1], v[2], v[3]], throttle)?, loss),
    };
    Ok((report, params))
}

fn cmd_fit(a: &FitArgs, seed: Option<u64>, execution: Execution, io: &mut Io) -> anyhow::Result<()> {
    io.config = Some(a.config.clone());
    io.inputs.push(a.data.clone());
    let cfg = OptimizerConfig::load(&a.config)?;
    let seed = seed.unwrap_or(cfg.seed);
    io.seed = Some(seed);
    let data = load_dataset(&a.data, a.model)?;
    let (report, params) = run_method(cfg.method, &cfg, &data, a.model, a.throttle, seed, execution)?;

    fs::create_dir_all(&a.out).map_err(|e| input_error(&a.out, e))?;
    let params_path = a.out.join("params.json");
    let report_path = a.out.join("report.json");
    let curve_path = a.out.join("loss_curve.csv");
    write_atomic(&params_path, params.to_json()?.as_bytes())?;
    write_atomic(&report_path, report.to_json()?.as_bytes())?;
    let tmp_curve = sibling(&curve_path, ".partial");
    report.write_curve_csv(&tmp_curve)?;
    fs::rename(&tmp_curve, &curve_path).map_err(|e| input_error(&curve_path, e))?;
    io.outputs.extend([params_path, report_path, curve_path]);
    io.manifest.get_or_insert_with(|| a.out.join("manifest.json"));
    log::info!("{} fit: loss {} after {} evaluations", report.method, report.best_loss(), report.total_evaluations);
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, seed: Option<u64>, io: &mut Io) -> anyhow::Result<()> {
    let seed = seed.unwrap_or(0);
    io.seed = Some(seed);
    let truth = match (&a.truth, a.model) {
        (Some(t), _) => t.clone(),
        (None, ModelKind::Tire) => fixtures::tire_truth().to_vec(),
        (None, ModelKind::Engine) => fixtures::engine_curves()[1].coeffs().to_vec(),
    };
    let range = match (&a.range, a.model) {
        (Some(r), _) if r.len() == 2 => (r[0], r[1]),
        (Some(r), _) => bail!(mihpo_core::Error::InvalidArgument(format!("--range takes lo,hi, got {} values", r.len()))),
        (None, ModelKind::Tire) => (-0.12, 0.12),
        (None, ModelKind::Engine) => (0.0, 1.0),
    };
    let spec = SyntheticSpec {
        ground_truth: truth,
        input_range: vec![range],
        n_samples: a.n_samples,
        noise_std: a.noise_std,
        seed,
    };
    let data = match a.model {
        ModelKind::Tire => generate_synthetic(&TireModel, &spec)?,
        ModelKind::Engine => generate_synthetic(&EngineCurveModel, &spec)?,
    };
    let tmp = sibling(&a.out, ".partial");
    data.write_csv(&tmp)?;
    fs::rename(&tmp, &a.out).map_err(|e| input_error(&a.out, e))?;
    io.outputs.push(a.out.clone());
    Ok(())
}

fn cmd_compare(a: &CompareArgs, seed: Option<u64>, execution: Execution, io: &mut Io) -> anyhow::Result<()> {
    io.config = Some(a.config.clone());
    io.inputs.push(a.data.clone());
    let cfg = OptimizerConfig::load(&a.config)?;
    let first = seed.unwrap_or(cfg.seed);
    io.seed = Some(first);
    if a.seeds == 0 || a.methods.is_empty() {
        bail!(mihpo_core::Error::InvalidArgument("need at least one seed and one method".into()));
    }
    let data = load_dataset(&a.data, a.model)?;
    let budget = cfg.evaluation_budget()?;
    let mut out = String::from("method,seed,evaluations,best_loss\n");
    for &m in &a.methods {
        let method = match m {
            MethodArg::Mihpo => Method::Mihpo,
            MethodArg::Gbo => Method::Gbo,
            MethodArg::Pso => Method::Pso,
        };
        for seed in first..first + a.seeds {
            let (report, _) = run_method(method, &cfg, &data, a.model, a.throttle, seed, execution)?;
            if report.total_evaluations > budget {
                bail!(mihpo_core::Error::Numeric(format!(
                    "{} spent {} evaluations, budget is {budget}",
                    m.name(),
                    report.total_evaluations
                )));
            }
            log::info!("{} seed {seed}: loss {}", m.name(), report.best_loss());
            for p in &report.loss_curve {
                out.push_str(&format!("{},{seed},{},{}\n", m.name(), p.evaluations, p.best_loss));
            }
        }
    }
    write_atomic(&a.out, out.as_bytes())?;
    io.outputs.push(a.out.clone());
    Ok(())
}

fn cmd_build_engine_map(a: &EngineMapArgs, io: &mut Io) -> anyhow::Result<()> {
    let setup = a.vehicle.load(&mut io.inputs)?;
    let mut curves = Vec::with_capacity(a.fitted.len());
    for p in &a.fitted {
        io.inputs.push(p.clone());
        let f = FittedParams::load(p)?;
        if f.model != FittedModel::EngineCurve {
            bail!(mihpo_core::Error::Data(format!("{} is not an engine-curve fit", p.display())));
        }
        curves.push(f.to_engine()?);
    }
    let dyno = match &a.dyno {
        Some(p) => {
            io.inputs.push(p.clone());
            Some(load_csv(p, &["engine_rpm", "throttle_pct"], "torque_nm")?.0)
        }
        None => None,
    };
    let map = build_engine_map(&curves, dyno.as_ref(), &setup.vehicle)?;
    let (tmp_t, tmp_m) = (sibling(&a.out, ".partial"), sibling(&a.mask, ".partial"));
    map.write_csv(&tmp_t, &tmp_m)?;
    fs::rename(&tmp_t, &a.out).map_err(|e| input_error(&a.out, e))?;
    fs::rename(&tmp_m, &a.mask).map_err(|e| input_error(&a.mask, e))?;
    io.outputs.extend([a.out.clone(), a.mask.clone()]);
    Ok(())
}

fn cmd_plan(a: &PlanArgs, io: &mut Io) -> anyhow::Result<()> {
    let setup = a.vehicle.load(&mut io.inputs)?;
    io.inputs.extend(a.track.track.clone());
    let track = a.track.load()?;
    let samples = &track.samples()[..track.len()];
    let kappa: Vec<f64> = samples.iter().map(|s| s.kappa).collect();
    let mut out = String::from("mu,s,kappa,v_des\n");
    for &mu in &a.mu {
        let planner = planner_for(&setup, mu, a.v_cap)?;
        let a_y = planner.a_y_max(&setup.vehicle);
        let v = plan_velocity_profile(&kappa, track.spacing(), a_y, a.v_cap, a.a_brake)?;
        log::info!("mu {mu}: a_y,max {a_y:.3} m/s^2");
        for (s, v) in samples.iter().zip(v) {
            out.push_str(&format!("{mu},{},{},{v}\n", s.s, s.kappa));
        }
    }
    write_atomic(&a.out, out.as_bytes())?;
    io.outputs.push(a.out.clone());
    Ok(())
}

fn cmd_lqr_gains(a: &LqrArgs, io: &mut Io) -> anyhow::Result<()> {
    let setup = a.vehicle.load(&mut io.inputs)?;
    let design = match &a.design {
        Some(p) => {
            io.config = Some(p.clone());
            let text = fs::read_to_string(p).map_err(|e| input_error(p, e))?;
            serde_json::from_str(&text).map_err(mihpo_core::Error::from)?
        }
        None => default_design(&setup),
    };
    let table = lqr_gain_table(&design, &setup.vehicle, &setup.geometry)?;
    write_atomic(&a.out, table.to_json()?.as_bytes())?;
    io.outputs.push(a.out.clone());
    Ok(())
}

fn cmd_sim(a: &SimArgs, io: &mut Io) -> anyhow::Result<()> {
    let setup = a.vehicle.load(&mut io.inputs)?;
    io.inputs.extend(a.track.track.clone());
    let track = a.track.load()?;
    let planner = planner_for(&setup, a.mu, a.v_cap)?;
    let gains: LqrGainTable = match &a.gains {
        Some(p) => {
            io.inputs.push(p.clone());
            let text = fs::read_to_string(p).map_err(|e| input_error(p, e))?;
            serde_json::from_str(&text).map_err(mihpo_core::Error::from)?
        }
        None => lqr_gain_table(&default_design(&setup), &setup.vehicle, &setup.geometry)?,
    };
    let engine: EngineTorqueMap = match (&a.engine_map, &a.engine_mask) {
        (Some(t), Some(m)) => {
            io.inputs.extend([t.clone(), m.clone()]);
            EngineTorqueMap::read_csv(t, m)?
        }
        _ => fixtures::engine_map(),
    };
    let mut cfg = match &a.sim_config {
        Some(p) => {
            io.config = Some(p.clone());
            let text = fs::read_to_string(p).map_err(|e| input_error(p, e))?;
            serde_json::from_str(&text).map_err(mihpo_core::Error::from)?
        }
        None => SimConfig::default(),
    };
    if let Some(n) = a.laps {
        cfg.n_laps = n;
    }
    let sim = SimSetup {
        track: &track,
        planner: &planner,
        gains: &gains,
        engine: &engine,
        tires: &setup.tires,
        vehicle: &setup.vehicle,
        geometry: &setup.geometry,
    };
    let tmp = sibling(&a.out, ".partial");
    let trace = match run_lap(&sim, &cfg) {
        Ok(t) => t,
        Err(failure) => {
            // keep the partial trace for diagnosis
            failure.trace.write_csv(&tmp)?;
            fs::rename(&tmp, &a.out).map_err(|e| input_error(&a.out, e))?;
            return Err(mihpo_core::Error::from(failure).into());
        }
    };
    trace.write_csv(&tmp)?;
    fs::rename(&tmp, &a.out).map_err(|e| input_error(&a.out, e))?;
    io.outputs.push(a.out.clone());
    if let Some(p) = &a.summary {
        let summary = summarize(&trace, &track, planner.a_y_max(&setup.vehicle));
        let text = serde_json::to_string_pretty(&summary).map_err(mihpo_core::Error::from)?;
        write_atomic(p, text.as_bytes())?;
        io.outputs.push(p.clone());
    }
    Ok(())
}

fn primary_output(io: &Io) -> Option<PathBuf> {
    io.outputs.first().map(|p| sibling(p, ".manifest.json"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<mihpo_core::Error>()) {
        Some(e) if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_INPUT,
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use mihpo_core::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(E::InvalidArgument(_)) => "invalid_argument",
        Some(E::Data(_)) => "data",
        Some(E::Numeric(_)) => "numeric",
        Some(E::Io { .. }) => "io",
        Some(E::Csv { .. }) => "csv",
        Some(E::Json(_)) => "json",
        None => "input",
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fit(_) => "fit",
        Command::Generate(_) => "generate",
        Command::Compare(_) => "compare",
        Command::BuildEngineMap(_) => "build-engine-map",
        Command::Plan(_) => "plan",
        Command::LqrGains(_) => "lqr-gains",
        Command::Sim(_) => "sim",
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let started = chrono::Utc::now();
    let execution = Execution::from_jobs(cli.jobs);
    let mut io = Io {
        manifest: cli.manifest.clone(),
        ..Io::default()
    };
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, cli.seed, execution, &mut io)?,
        Command::Generate(a) => cmd_generate(a, cli.seed, &mut io)?,
        Command::Compare(a) => cmd_compare(a, cli.seed, execution, &mut io)?,
        Command::BuildEngineMap(a) => cmd_build_engine_map(a, &mut io)?,
        Command::Plan(a) => cmd_plan(a, &mut io)?,
        Command::LqrGains(a) => cmd_lqr_gains(a, &mut io)?,
        Command::Sim(a) => cmd_sim(a, &mut io)?,
    }
    let manifest = RunManifest {
        command: command_name(&cli.command).to_string(),
        args: std::env::args().skip(1).collect(),
        config: io.config.clone(),
        inputs: io.inputs.clone(),
        outputs: io.outputs.clone(),
        seed: io.seed,
        jobs: cli.jobs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
    };
    let path = io
        .manifest
        .clone()
        .or_else(|| primary_output(&io))
        .context("command produced no outputs")?;
    let text = serde_json::to_string_pretty(&manifest).map_err(mihpo_core::Error::from)?;
    write_atomic(&path, text.as_bytes())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({
                "error": {
                    "kind": error_kind(&e),
                    "message": e.to_string(),
                }
            });
            eprintln!("{body}");
            ExitCode::from(exit_code(&e))
        }
    }
}
