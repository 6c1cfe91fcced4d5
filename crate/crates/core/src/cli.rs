//! Command-line front end: argument parsing, file loading and report output.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::conditions::{check_ct_conditions, ConditionReport};
use crate::construct::{construct_intermediate, ConstructConfig, Construction, CtResolutions};
use crate::density::density_experiment;
use crate::error::{Error, Result};
use crate::lambda::{verify_counting_bound, CountingReport};
use crate::measures::{spectrum_sample, SpectrumConfig};
use crate::report::fmt_real;
use crate::segments::{CTDecomposition, DecompositionConfig};
use crate::symbolic::{Resolution, ShiftSystem};
use crate::thermo::{pressure_enumerate, pressure_oracle, pstar_report, Potential, DEFAULT_WORD_BUDGET};
use crate::SegmentClass;

#[derive(Debug, Parser)]
#[command(name = "thermoshift", version, about = "Pressure, spectra and intermediate-pressure subsystems of subshifts of finite type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pressure by enumeration and by the transfer-matrix oracle.
    Pressure(PressureArgs),
    /// Topological entropy: pressure of the zero potential.
    Entropy(PressureArgs),
    /// Maximal Birkhoff average P*.
    Pstar(Common),
    /// Pressures of sampled invariant measures, as CSV.
    Spectrum(SpectrumArgs),
    /// The five decomposition conditions.
    Check(CheckArgs),
    /// Builds a subsystem with pressure near --alpha.
    Construct(ConstructArgs),
    /// Constructions over a grid of targets, as CSV.
    Density(DensityArgs),
    /// Builds a subsystem and checks its counting bounds exhaustively.
    VerifyBounds(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Shift system JSON.
    #[arg(long)]
    pub system: PathBuf,
    /// Potential JSON; defaults to the zero potential.
    #[arg(long)]
    pub potential: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cap on enumerated words per partition function.
    #[arg(long = "budget-words", default_value_t = DEFAULT_WORD_BUDGET)]
    pub budget_words: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PressureArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "n-min", default_value_t = 2)]
    pub n_min: usize,
    #[arg(long = "n-max", default_value_t = 14)]
    pub n_max: usize,
    /// Separation level of the enumeration.
    #[arg(long = "res-delta", default_value_t = 1)]
    pub res_delta: u32,
    /// Bowen-ball level; plain Birkhoff sums when absent.
    #[arg(long = "res-eps")]
    pub res_eps: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "max-cycle-len", default_value_t = 10)]
    pub max_cycle_len: usize,
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long = "max-measures", default_value_t = 200_000)]
    pub max_measures: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Resolutions {
    #[arg(long = "res-eps", default_value_t = 1)]
    pub res_eps: u32,
    #[arg(long = "res-gamma", default_value_t = 5)]
    pub res_gamma: u32,
    #[arg(long = "res-delta", default_value_t = 7)]
    pub res_delta: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// Decomposition JSON; trivial when absent.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
    #[command(flatten)]
    pub res: Resolutions,
    /// Largest n used by the enumerated pressures.
    #[arg(long = "n-max", default_value_t = 12)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildArgs {
    /// Decomposition JSON; trivial when absent.
    #[arg(long)]
    pub decomposition: Option<PathBuf>,
    #[command(flatten)]
    pub res: Resolutions,
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    /// Largest N tried by the construction.
    #[arg(long = "n-cap", default_value_t = 24)]
    pub n_cap: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub build: BuildArgs,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub build: BuildArgs,
    #[arg(long)]
    pub grid: usize,
    /// Largest n used when checking the decomposition conditions.
    #[arg(long = "n-max", default_value_t = 12)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub build: BuildArgs,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "n-min", default_value_t = 3)]
    pub n_min: usize,
    #[arg(long = "n-max", default_value_t = 5)]
    pub n_max: usize,
}

/// Text produced by a command and whether it counts as success.
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub success: bool,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Pressure(a) | Command::Entropy(a) => &a.common,
            Command::Pstar(c) => c,
            Command::Spectrum(a) => &a.common,
            Command::Check(a) => &a.common,
            Command::Construct(a) => &a.common,
            Command::Density(a) => &a.common,
            Command::VerifyBounds(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Pressure(_) => "pressure",
            Command::Entropy(_) => "entropy",
            Command::Pstar(_) => "pstar",
            Command::Spectrum(_) => "spectrum",
            Command::Check(_) => "check",
            Command::Construct(_) => "construct",
            Command::Density(_) => "density",
            Command::VerifyBounds(_) => "verify-bounds",
        }
    }

    fn args_json(&self) -> Value {
        let v = match self {
            Command::Pressure(a) | Command::Entropy(a) => serde_json::to_value(a),
            Command::Pstar(c) => serde_json::to_value(c),
            Command::Spectrum(a) => serde_json::to_value(a),
            Command::Check(a) => serde_json::to_value(a),
            Command::Construct(a) => serde_json::to_value(a),
            Command::Density(a) => serde_json::to_value(a),
            Command::VerifyBounds(a) => serde_json::to_value(a),
        };
        v.unwrap_or(Value::Null)
    }

    fn decomposition(&self) -> Option<&Path> {
        match self {
            Command::Check(a) => a.decomposition.as_deref(),
            Command::Construct(a) => a.build.decomposition.as_deref(),
            Command::Density(a) => a.build.decomposition.as_deref(),
            Command::VerifyBounds(a) => a.build.decomposition.as_deref(),
            _ => None,
        }
    }
}

fn read(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {what} file {}: {e}", path.display())))
}

/// Inputs parsed before any computation starts.
struct Loaded {
    sys: ShiftSystem,
    phi: Potential<f64>,
    dec: CTDecomposition,
    meta: Meta,
}

#[derive(Serialize)]
struct Meta {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: u64,
    wall_clock: f64,
}

impl Meta {
    fn header(&self) -> String {
        format!(
            "# {} {} command={} config_hash={} seed={} wall_clock={}\n",
            self.tool, self.version, self.command, self.config_hash, self.seed, self.wall_clock
        )
    }
}

fn load(cmd: &Command) -> Result<Loaded> {
    let common = cmd.common();
    let sys_text = read(&common.system, "system")?;
    let sys = ShiftSystem::from_json_str(&sys_text)?;
    let pot_text = match (&common.potential, cmd) {
        (Some(_), Command::Entropy(_)) => {
            return Err(Error::Config("entropy uses the zero potential; drop --potential".into()));
        }
        (Some(p), _) => Some(read(p, "potential")?),
        (None, _) => None,
    };
    let phi = match &pot_text {
        Some(t) => Potential::from_json_str(&sys, t)?,
        None => Potential::zero(&sys),
    };
    let dec_text = cmd.decomposition().map(|p| read(p, "decomposition")).transpose()?;
    let dec = match &dec_text {
        Some(t) => DecompositionConfig::from_json_str(t)?.build(&sys)?,
        None => CTDecomposition::trivial(),
    };
    let canonical = json!({
        "command": cmd.name(),
        "args": strip_paths(cmd.args_json()),
        "system": serde_json::to_value(sys.to_file())?,
        "potential": serde_json::to_value(phi.to_file())?,
        "decomposition": dec_text.as_deref().map(DecompositionConfig::from_json_str).transpose()?,
    });
    let digest = Sha256::digest(serde_json::to_vec(&canonical)?);
    let wall_clock = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let meta = Meta {
        tool: "thermoshift",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        config_hash: hex::encode(digest),
        seed: common.seed,
        wall_clock,
    };
    Ok(Loaded { sys, phi, dec, meta })
}

/// File paths do not change results; their contents are hashed instead.
fn strip_paths(mut v: Value) -> Value {
    fn walk(v: &mut Value) {
        if let Value::Object(m) = v {
            for key in ["system", "potential", "decomposition"] {
                m.remove(key);
            }
            m.values_mut().for_each(walk);
        }
    }
    walk(&mut v);
    v
}

fn resolutions(r: &Resolutions) -> Result<CtResolutions> {
    CtResolutions::new(r.res_eps, r.res_gamma, r.res_delta)
}

fn construct_config(b: &BuildArgs, common: &Common) -> Result<ConstructConfig> {
    if !(b.eta0 > 0.0) {
        return Err(Error::Config(format!("--eta0 must be positive, got {}", b.eta0)));
    }
    if b.n_cap == 0 {
        return Err(Error::Config("--n-cap must be at least 1".into()));
    }
    Ok(ConstructConfig {
        res: resolutions(&b.res)?,
        n_cap: b.n_cap,
        seed: common.seed,
        budget: common.budget_words,
        ..ConstructConfig::default()
    })
}

fn to_json<T: Serialize>(meta: &Meta, key: &str, body: &T) -> Result<String> {
    let mut v = json!({ "meta": meta });
    v[key] = serde_json::to_value(body)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Runs one command and returns its output text.
pub fn run(cli: &Cli) -> Result<Output> {
    let cmd = &cli.command;
    if let Some(w) = cmd.common().workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        // a second call in one process keeps the first pool, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let l = load(cmd)?;
    let (sys, phi, meta) = (&l.sys, &l.phi, &l.meta);
    match cmd {
        Command::Pressure(a) | Command::Entropy(a) => {
            if a.n_min < 2 || a.n_max < a.n_min {
                return Err(Error::Config(format!("bad n range [{}, {}]", a.n_min, a.n_max)));
            }
            let delta = Resolution::new(a.res_delta).map_err(|e| Error::Config(e.to_string()))?;
            let eps = a.res_eps.map(Resolution::new).transpose().map_err(|e| Error::Config(e.to_string()))?;
            let oracle = pressure_oracle(sys, phi)?;
            let all = SegmentClass::all();
            let enumeration =
                pressure_enumerate(sys, phi, &all, delta, eps, (a.n_min, a.n_max), Some(a.common.budget_words))?;
            let gap = (oracle.value - enumeration.value).abs();
            let body = json!({
                "value": oracle.value,
                "oracle": oracle,
                "enumeration": enumeration,
                "gap": gap,
            });
            Ok(Output { text: to_json(meta, "pressure", &body)?, success: true })
        }
        Command::Pstar(_) => {
            let r = pstar_report(sys, phi)?;
            Ok(Output { text: to_json(meta, "pstar", &r)?, success: true })
        }
        Command::Spectrum(a) => {
            let cfg = SpectrumConfig { max_cycle_len: a.max_cycle_len, grid: a.grid, max_measures: a.max_measures };
            let s = spectrum_sample(sys, phi, &cfg)?;
            let p = pressure_oracle(sys, phi)?.value;
            let ps = pstar_report(sys, phi)?.value;
            let mut text = meta.header();
            text.push_str(&format!(
                "# pstar={} pressure={} max_gap={} rows={} partial={}\n",
                fmt_real(ps),
                fmt_real(p),
                fmt_real(s.max_gap(ps, p)),
                s.rows.len(),
                s.partial
            ));
            text.push_str(&s.to_csv());
            Ok(Output { text, success: true })
        }
        Command::Check(a) => {
            let res = resolutions(&a.res)?;
            let r: ConditionReport<f64> =
                check_ct_conditions(sys, phi, &l.dec, res, a.n_max, a.common.seed, Some(a.common.budget_words))?;
            Ok(Output { text: to_json(meta, "conditions", &r)?, success: r.all_pass() })
        }
        Command::Construct(a) => {
            let cfg = construct_config(&a.build, &a.common)?;
            let c: Construction<f64> = construct_intermediate(sys, phi, &l.dec, a.alpha, a.build.eta0, &cfg)?;
            Ok(Output { text: to_json(meta, "construction", &c)?, success: c.certified })
        }
        Command::Density(a) => {
            if a.grid == 0 {
                return Err(Error::Config("--grid must be at least 1".into()));
            }
            let cfg = construct_config(&a.build, &a.common)?;
            let r = density_experiment(sys, phi, &l.dec, a.grid, a.build.eta0, &cfg, a.n_max)?;
            let mut text = meta.header();
            text.push_str(&format!(
                "# pstar={} pressure={} eta0={} tail={} certified={}/{} max_gap={}\n",
                fmt_real(r.pstar),
                fmt_real(r.pressure),
                fmt_real(r.eta0),
                fmt_real(r.tail),
                r.certified_rows(),
                r.rows.len(),
                fmt_real(r.max_gap())
            ));
            text.push_str(&r.to_csv());
            Ok(Output { text, success: true })
        }
        Command::VerifyBounds(a) => {
            if !(1..=8).contains(&a.n_min) || a.n_max < a.n_min || a.n_max > 8 {
                return Err(Error::Config(format!("n range [{}, {}] must lie in [1, 8]", a.n_min, a.n_max)));
            }
            let cfg = construct_config(&a.build, &a.common)?;
            let c = construct_intermediate(sys, phi, &l.dec, a.alpha, a.build.eta0, &cfg)?;
            let reports: Vec<CountingReport<f64>> = (a.n_min..=a.n_max)
                .map(|n| verify_counting_bound(&c.lambda, n, cfg.res.delta))
                .collect::<Result<_>>()?;
            let ok = reports.iter().all(|r| r.holds);
            let body = json!({
                "params": c.params,
                "tau_used": c.tau_used,
                "E_size": c.words.len(),
                "counting": reports,
                "holds": ok,
            });
            Ok(Output { text: to_json(meta, "verify_bounds", &body)?, success: ok })
        }
    }
}

/// Exit code of a finished run: 0 on success, 2 for configuration errors,
/// 3 for computation errors and failed checks.
pub fn exit_code(result: &Result<Output>) -> i32 {
    match result {
        Ok(o) if o.success => 0,
        Ok(_) => 3,
        Err(e) if e.is_config() => 2,
        Err(_) => 3,
    }
}

/// Writes the output to `--out` or stdout.
pub fn emit(cli: &Cli, out: &Output) -> Result<()> {
    match &cli.command.common().out {
        Some(p) => std::fs::write(p, &out.text).map_err(|e| Error::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut so = std::io::stdout().lock();
            so.write_all(out.text.as_bytes())?;
            Ok(())
        }
    }
}
