use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rdb_core::data::load_counts;
use rdb_core::simbench::{run_scenario, EffectSetting, Method, Scenario, ScenarioKind};

use crate::{write_file, write_output, Failure, Mode, ProcedureArgs, VERSION};

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pg,
    PgContinuous,
    Lognormal,
    LognormalCov,
    Shuffle,
}

impl From<Kind> for ScenarioKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Pg => ScenarioKind::PoissonGamma,
            Kind::PgContinuous => ScenarioKind::PoissonGammaContinuous,
            Kind::Lognormal => ScenarioKind::LogNormal,
            Kind::LognormalCov => ScenarioKind::LogNormalCov,
            Kind::Shuffle => ScenarioKind::Shuffle,
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: Kind,
    /// Number of components (taken from --source for shuffle).
    #[arg(long)]
    d: Option<usize>,
    /// Number of differential components.
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long)]
    m1: usize,
    /// Group 2 size (defaults to m1; ignored by pg-continuous).
    #[arg(long)]
    m2: Option<usize>,
    /// Effect-size setting: 1 (increases) or 2 (half decreases).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    setting: u8,
    #[arg(long)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Depth unbalance: group 2 depths are divided by beta.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// AR(1) correlation of log-abundances (lognormal).
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Covariate mean shift (lognormal-cov).
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    /// Comma-separated methods.
    #[arg(long, default_value = "RDB")]
    methods: String,
    #[arg(long, value_enum, default_value = "fwer")]
    control: Mode,
    #[command(flatten)]
    procedure: ProcedureArgs,
    /// Count table to resample (shuffle).
    #[arg(long)]
    source: Option<PathBuf>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, env = "RDB_THREADS", default_value_t = 0)]
    threads: usize,
    /// Performance table (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = args.procedure.config(args.control)?;
    let kind: ScenarioKind = args.scenario.into();
    let setting = EffectSetting::from_number(args.setting)?;
    let m2 = args.m2.unwrap_or(args.m1);
    let mut sc = match (&args.source, kind) {
        (Some(path), ScenarioKind::Shuffle) => {
            let mut sc = Scenario::shuffle(load_counts(path)?, args.m1, m2, args.seed);
            sc.s = args.s;
            if let Some(d) = args.d {
                sc.d = d;
            }
            sc
        }
        (None, ScenarioKind::Shuffle) => {
            return Err(Failure::user("the shuffle scenario needs --source"))
        }
        (Some(_), _) => return Err(Failure::user("--source only applies to the shuffle scenario")),
        (None, _) => {
            let d = args.d.ok_or_else(|| Failure::user("--d is required for this scenario"))?;
            Scenario::new(kind, d, args.s, args.m1, m2, setting, args.seed)
        }
    };
    sc.beta = args.beta;
    sc.rho = args.rho;
    sc.eta = args.eta;
    let methods = Method::parse_list(&args.methods)?;

    let tool = format!("rdb {VERSION} simulate");
    let report = run_scenario(&sc, &methods, args.reps, &cfg, args.threads)?;
    for line in report.provenance(&tool) {
        eprintln!("{line}");
    }
    write_output(args.out.as_deref(), |out| report.write_tsv(&tool, out))?;
    if let Some(path) = &args.json {
        write_file(path, &(report.to_json(&tool) + "\n"))?;
    }
    for m in &report.methods {
        eprintln!(
            "{}: {:.4} s per replicate",
            m.method, m.mean_runtime_secs
        );
    }
    Ok(())
}
