//! Command-line front end.
//!
//! Settings are resolved in the order defaults < config file < environment
//! (`SOSK_*`) < flags. Angles are given in degrees on the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{builtin, check_lambda, ChannelKind, KrausChannel};
use crate::circuit::{compile_branch, simulate_channel, NoiseParams, StateFile};
use crate::decomp::{closed_form_plan, fit_plan_with, plan_to_channel, DecompositionPlan, FitOptions};
use crate::error::{Error, Result};
use crate::mat::CMat2;
use crate::optics::Gate;
use crate::tomo::{coherence, fidelity, forward_intensities, reconstruct, Reconstruction, TomographyRecord};

pub const ENV_PREFIX: &str = "SOSK_";

pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const NO_CONVERGENCE: i32 = 3;
}

#[derive(Parser, Debug)]
#[command(name = "sosk", version, about = "Decompose, compile and simulate single-qubit channels on a spin-orbit optical bench")]
pub struct Cli {
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit the two-branch plan (closed form for named channels, fitted for Kraus files)
    Decompose(DecomposeArgs),
    /// Run one input state through the simulated bench and tomography
    Simulate(RunArgs),
    /// Coherence and fidelity over a grid of λ values
    Sweep(RunArgs),
    /// Check that a channel is completely positive and trace preserving
    Validate(ChannelArgs),
    /// Reconstruct a state from a tomography CSV (basis,I_A,I_B)
    Reconstruct(ReconstructArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ChannelArgs {
    /// AD, PD, BF, PF, BPF, or a path to a Kraus JSON file
    #[arg(long)]
    pub channel: Option<String>,
    /// Kraus JSON file (same as passing a path to --channel)
    #[arg(long)]
    pub kraus_file: Option<PathBuf>,
    #[arg(long = "lambda", allow_negative_numbers = true)]
    pub lambda: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Table,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: TableFormat,
    /// Directory for plan.json and gates.json
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// Seed for the fitter's starting points
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Comma list or start:stop:count
    #[arg(long)]
    pub lambda_grid: Option<String>,
    /// Input half-wave plate angle in degrees
    #[arg(long, allow_negative_numbers = true)]
    pub phi_deg: Option<f64>,
    #[arg(long, value_enum)]
    pub noise: Option<Switch>,
    #[arg(long)]
    pub visibility: Option<f64>,
    #[arg(long)]
    pub intensity_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// Comma list of csv, json
    #[arg(long)]
    pub formats: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ReconstructArgs {
    pub csv: PathBuf,
}

/// Channel given either by name or by Kraus file.
#[derive(Clone, Debug, PartialEq)]
pub enum ChannelSource {
    Named(ChannelKind),
    File(PathBuf),
}

impl ChannelSource {
    fn parse(s: &str) -> Self {
        match s.parse::<ChannelKind>() {
            Ok(k) => ChannelSource::Named(k),
            Err(_) => ChannelSource::File(PathBuf::from(s)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Formats {
    fn parse(s: &str) -> Result<Self> {
        let mut f = Formats { csv: false, json: false };
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item.to_ascii_lowercase().as_str() {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(Error::Parse(format!("unknown format '{other}'"))),
            }
        }
        if !f.csv && !f.json {
            return Err(Error::Parse("no output format selected".into()));
        }
        Ok(f)
    }
}

/// Fully resolved settings of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub channel: Option<ChannelSource>,
    pub lambda: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub phi_deg: f64,
    pub noise: bool,
    pub visibility: f64,
    pub intensity_sigma: f64,
    pub seed: u64,
    pub outdir: Option<PathBuf>,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            channel: None,
            lambda: None,
            lambda_grid: parse_grid("0:1:21").expect("default grid"),
            phi_deg: 22.5,
            noise: false,
            visibility: 0.96,
            intensity_sigma: 0.01,
            seed: 0,
            outdir: None,
            formats: Formats { csv: true, json: false },
        }
    }
}

/// Parses `a,b,c` or `start:stop:count` into λ values in `[0, 1]`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad number '{x}' in lambda grid: {e}")))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(Error::Parse(format!("range '{s}' must be start:stop:count")));
        };
        let (a, b) = (num(a)?, num(b)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad count in '{s}': {e}")))?;
        match n {
            0 => return Err(Error::Parse("lambda grid needs at least one point".into())),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else {
        s.split(',').filter(|x| !x.trim().is_empty()).map(num).collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(Error::Parse("empty lambda grid".into()));
    }
    for &l in &values {
        check_lambda(l).map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(values)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("{key} = '{v}': {e}")))
}

fn parse_switch(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("{key} = '{v}': expected on or off"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "channel" => self.channel = Some(ChannelSource::parse(value)),
            "lambda" => self.lambda = Some(parse_num(key, value)?),
            "lambda_grid" => self.lambda_grid = parse_grid(value)?,
            "phi_deg" => self.phi_deg = parse_num(key, value)?,
            "noise" => self.noise = parse_switch(key, value)?,
            "visibility" => self.visibility = parse_num(key, value)?,
            "intensity_sigma" => self.intensity_sigma = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "outdir" => self.outdir = Some(PathBuf::from(value)),
            "formats" => self.formats = Formats::parse(value)?,
            other => return Err(Error::Parse(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Applies `SOSK_<KEY>` variables from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        let found: BTreeMap<String, String> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_ascii_lowercase(), v)))
            .filter(|(k, _)| k != "config")
            .collect();
        for (k, v) in found {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    fn apply_channel_args(&mut self, a: &ChannelArgs) {
        if let Some(c) = &a.channel {
            self.channel = Some(ChannelSource::parse(c));
        }
        if let Some(p) = &a.kraus_file {
            self.channel = Some(ChannelSource::File(p.clone()));
        }
        if let Some(l) = a.lambda {
            self.lambda = Some(l);
        }
    }

    fn apply_run_args(&mut self, a: &RunArgs) -> Result<()> {
        self.apply_channel_args(&a.channel);
        if let Some(g) = &a.lambda_grid {
            self.lambda_grid = parse_grid(g)?;
        }
        if let Some(p) = a.phi_deg {
            self.phi_deg = p;
        }
        if let Some(n) = a.noise {
            self.noise = n == Switch::On;
        }
        if let Some(v) = a.visibility {
            self.visibility = v;
        }
        if let Some(s) = a.intensity_sigma {
            self.intensity_sigma = s;
        }
        if let Some(s) = a.seed {
            self.seed = s;
        }
        if let Some(o) = &a.outdir {
            self.outdir = Some(o.clone());
        }
        if let Some(f) = &a.formats {
            self.formats = Formats::parse(f)?;
        }
        Ok(())
    }

    pub fn noise_params(&self) -> Option<NoiseParams> {
        self.noise.then_some(NoiseParams {
            visibility: self.visibility,
            intensity_sigma: self.intensity_sigma,
            rng_seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi_deg.is_finite() {
            return Err(Error::Parse("phi_deg must be finite".into()));
        }
        if let Some(l) = self.lambda {
            check_lambda(l).map_err(|e| Error::Parse(e.to_string()))?;
        }
        if let Some(n) = self.noise_params() {
            n.validate()?;
        }
        Ok(())
    }

    fn source(&self) -> Result<&ChannelSource> {
        self.channel
            .as_ref()
            .ok_or_else(|| Error::Parse("no channel given (use --channel)".into()))
    }

    fn named_lambda(&self) -> Result<f64> {
        self.lambda
            .ok_or_else(|| Error::Parse("a named channel needs --lambda".into()))
    }
}

/// Failure with an attached exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::LambdaOutOfRange(_) => exit::PARSE,
            _ => exit::VALIDATION,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Output of a command: text for stdout and files to write.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    pub code: i32,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_channel(src: &ChannelSource, lambda: Option<f64>) -> Result<KrausChannel> {
    match src {
        ChannelSource::Named(k) => {
            let l = lambda.ok_or_else(|| Error::Parse("a named channel needs --lambda".into()))?;
            builtin(*k, l)
        }
        ChannelSource::File(p) => KrausChannel::from_json(&read_text(p)?).map_err(|e| match e {
            Error::Json(j) => Error::Parse(format!("{}: {j}", p.display())),
            other => other,
        }),
    }
}

/// Plan for a source: closed form when named, fitted otherwise.
fn plan_for(src: &ChannelSource, lambda: Option<f64>, seed: Option<u64>) -> CliResult<(DecompositionPlan, f64, KrausChannel)> {
    let ch = load_channel(src, lambda)?;
    match src {
        ChannelSource::Named(k) => {
            let plan = closed_form_plan(*k, lambda.expect("checked by load_channel"))?;
            let residual = plan_to_channel(&plan)?.choi_distance(&ch);
            Ok((plan, residual, ch))
        }
        ChannelSource::File(_) => {
            let mut opts = FitOptions::default();
            if let Some(s) = seed {
                opts.seed = s;
            }
            let out = fit_plan_with(&ch, &opts)?;
            if !out.converged {
                return Err(CliError {
                    code: exit::NO_CONVERGENCE,
                    message: format!("fit did not converge: residual {:.3e}", out.residual),
                });
            }
            Ok((out.plan, out.residual, ch))
        }
    }
}

fn plan_table(plan: &DecompositionPlan, residual: f64) -> String {
    let mut s = String::from("branch  weight          alpha           beta            gamma1          gamma2          condX\n");
    let mut rows = vec![("a", plan.p, &plan.branch_a)];
    if let Some(b) = &plan.branch_b {
        rows.push(("b", 1.0 - plan.p, b));
    }
    for (name, w, b) in rows {
        let _ = writeln!(
            s,
            "{name:<7} {w:<15.12} {:<15.12} {:<15.12} {:<15.12} {:<15.12} {}",
            b.alpha, b.beta, b.gamma1, b.gamma2, b.conditional_x
        );
    }
    let _ = writeln!(s, "residual {residual:.3e}");
    s
}

#[derive(Serialize)]
struct GateFile<'a> {
    branch: &'a str,
    gates: Vec<Gate>,
}

fn gates_json(plan: &DecompositionPlan) -> String {
    let mut v = vec![GateFile { branch: "a", gates: compile_branch(&plan.branch_a) }];
    if let Some(b) = &plan.branch_b {
        v.push(GateFile { branch: "b", gates: compile_branch(b) });
    }
    serde_json::to_string_pretty(&v).expect("gate serialization is infallible")
}

fn cmd_decompose(cfg: &RunConfig, args: &DecomposeArgs) -> CliResult<Output> {
    let src = cfg.source()?;
    let (plan, residual, _) = plan_for(src, cfg.lambda, args.seed)?;
    let mut out = Output {
        stdout: match args.format {
            TableFormat::Table => plan_table(&plan, residual),
            TableFormat::Json => plan.to_json() + "\n",
        },
        ..Default::default()
    };
    if let Some(dir) = &cfg.outdir {
        out.files.push((dir.join("plan.json"), plan.to_json() + "\n"));
        out.files.push((dir.join("gates.json"), gates_json(&plan) + "\n"));
    }
    Ok(out)
}

fn initial_state(phi_deg: f64) -> CMat2 {
    crate::circuit::prepare_initial(phi_deg.to_radians()).system()
}

#[derive(Serialize)]
struct SimulateReport {
    input: StateFile,
    output: StateFile,
    oracle: StateFile,
    reconstruction: serde_json::Value,
    plan_residual: f64,
    fidelity_sim_vs_oracle: f64,
    fidelity_reconstruction_vs_oracle: f64,
}

fn tomography(rho: &CMat2, noise: Option<&NoiseParams>) -> Result<(TomographyRecord, Reconstruction)> {
    let rec = forward_intensities(rho, 1.0, noise)?;
    let r = reconstruct(&rec)?;
    Ok((rec, r))
}

fn cmd_simulate(cfg: &RunConfig) -> CliResult<Output> {
    let src = cfg.source()?;
    if matches!(src, ChannelSource::Named(_)) {
        cfg.named_lambda()?;
    }
    let (plan, residual, ch) = plan_for(src, cfg.lambda, Some(cfg.seed))?;
    let rho_in = initial_state(cfg.phi_deg);
    let noise = cfg.noise_params();
    let sim = simulate_channel(&rho_in, &plan, noise.as_ref())?;
    let oracle = ch.apply(&rho_in)?;
    let (rec, recon) = tomography(&sim, noise.as_ref())?;
    let report = SimulateReport {
        input: StateFile::new(&rho_in),
        output: StateFile::new(&sim),
        oracle: StateFile::new(&oracle),
        reconstruction: serde_json::from_str(&recon.to_json())?,
        plan_residual: residual,
        fidelity_sim_vs_oracle: fidelity(&sim, &oracle)?,
        fidelity_reconstruction_vs_oracle: fidelity(&recon.rho, &oracle)?,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    let mut out = Output {
        stdout: json,
        ..Default::default()
    };
    if let Some(dir) = &cfg.outdir {
        out.files.push((dir.join("state.json"), serde_json::to_string_pretty(&report.output)? + "\n"));
        out.files.push((dir.join("reconstruction.json"), recon.to_json() + "\n"));
        out.files.push((dir.join("tomography.csv"), rec.to_csv()));
    }
    Ok(out)
}

/// One line of the sweep table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub c_l1_sim: f64,
    pub c_max_sim: f64,
    pub c_l1_oracle: f64,
    pub c_max_oracle: f64,
    pub fidelity_sim_vs_oracle: f64,
}

pub const SWEEP_HEADER: &str = "lambda,c_l1_sim,c_max_sim,c_l1_oracle,c_max_oracle,fidelity_sim_vs_oracle";

/// Simulated (via tomography) and exact coherence for each λ, in grid order.
pub fn sweep_rows(kind: ChannelKind, cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let rho_in = initial_state(cfg.phi_deg);
    let base = cfg.noise_params();
    cfg.lambda_grid
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let noise = base.map(|n| NoiseParams {
                rng_seed: n.rng_seed.wrapping_add(i as u64),
                ..n
            });
            let plan = closed_form_plan(kind, l)?;
            let sim = simulate_channel(&rho_in, &plan, noise.as_ref())?;
            let (_, recon) = tomography(&sim, noise.as_ref())?;
            let oracle = builtin(kind, l)?.apply(&rho_in)?;
            let (cs, co) = (coherence(&recon.rho), coherence(&oracle));
            Ok(SweepRow {
                lambda: l,
                c_l1_sim: cs.c_l1,
                c_max_sim: cs.c_max,
                c_l1_oracle: co.c_l1,
                c_max_oracle: co.c_max,
                fidelity_sim_vs_oracle: fidelity(&recon.rho, &oracle)?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
            r.lambda, r.c_l1_sim, r.c_max_sim, r.c_l1_oracle, r.c_max_oracle, r.fidelity_sim_vs_oracle
        );
    }
    s
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<Output> {
    let kind = match cfg.source()? {
        ChannelSource::Named(k) => *k,
        ChannelSource::File(_) => {
            return Err(Error::Parse("sweep needs a named channel (AD, PD, BF, PF, BPF)".into()).into())
        }
    };
    let rows = sweep_rows(kind, cfg)?;
    let csv = sweep_csv(&rows);
    let json = serde_json::to_string_pretty(&rows)? + "\n";
    let mut out = Output::default();
    match &cfg.outdir {
        Some(dir) => {
            if cfg.formats.csv {
                out.files.push((dir.join("sweep.csv"), csv));
            }
            if cfg.formats.json {
                out.files.push((dir.join("sweep.json"), json));
            }
        }
        None => {
            if cfg.formats.csv {
                out.stdout.push_str(&csv);
            }
            if cfg.formats.json {
                out.stdout.push_str(&json);
            }
        }
    }
    Ok(out)
}

fn cmd_validate(cfg: &RunConfig) -> CliResult<Output> {
    let ch = load_channel(cfg.source()?, cfg.lambda)?;
    let r = ch.validate();
    let stdout = format!(
        "trace_residual {:.3e}\nmin_choi_eigenvalue {:.3e}\nstatus {}\n",
        r.trace_residual,
        r.min_choi_eig,
        if r.ok { "ok" } else { "fail" }
    );
    Ok(Output {
        stdout,
        files: Vec::new(),
        code: if r.ok { exit::OK } else { exit::VALIDATION },
    })
}

fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult<Output> {
    let rec = TomographyRecord::from_csv(&read_text(&args.csv)?)?;
    let r = reconstruct(&rec)?;
    Ok(Output {
        stdout: r.to_json() + "\n",
        ..Default::default()
    })
}

/// Resolves configuration for `cli` from `env` and runs the command.
pub fn run<I>(cli: &Cli, env: I) -> CliResult<Output>
where
    I: IntoIterator<Item = (String, String)>,
{
    let env: Vec<(String, String)> = env.into_iter().collect();
    let mut cfg = RunConfig::default();
    let config_path = cli.config.clone().or_else(|| {
        env.iter()
            .find(|(k, _)| k == &format!("{ENV_PREFIX}CONFIG"))
            .map(|(_, v)| PathBuf::from(v))
    });
    if let Some(p) = &config_path {
        cfg.apply_file_text(&read_text(p)?)?;
    }
    cfg.apply_env(env)?;
    match &cli.command {
        Command::Decompose(a) => {
            cfg.apply_channel_args(&a.channel);
            if let Some(o) = &a.outdir {
                cfg.outdir = Some(o.clone());
            }
            cfg.validate()?;
            cmd_decompose(&cfg, a)
        }
        Command::Simulate(a) => {
            cfg.apply_run_args(a)?;
            cfg.validate()?;
            cmd_simulate(&cfg)
        }
        Command::Sweep(a) => {
            cfg.apply_run_args(a)?;
            cfg.validate()?;
            cmd_sweep(&cfg)
        }
        Command::Validate(a) => {
            cfg.apply_channel_args(a);
            cfg.validate()?;
            cmd_validate(&cfg)
        }
        Command::Reconstruct(a) => cmd_reconstruct(a),
    }
}

/// Writes the files of `out`, creating parent directories.
pub fn write_files(out: &Output) -> Result<()> {
    for (path, text) in &out.files {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, text)?;
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::PARSE } else { exit::OK };
        }
    };
    match run(&cli, std::env::vars()) {
        Ok(out) => {
            if let Err(e) = write_files(&out) {
                eprintln!("error: {e}");
                return exit::VALIDATION;
            }
            print!("{}", out.stdout);
            out.code
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("sosk").chain(args.iter().copied())).unwrap()
    }

    fn no_env() -> Vec<(String, String)> {
        Vec::new()
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_grid("0:1:21").unwrap().len(), 21);
        assert_eq!(parse_grid("0.3:0.9:1").unwrap(), vec![0.3]);
        assert!(parse_grid("0:2:3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn precedence_file_env_flag() {
        let mut cfg = RunConfig::default();
        cfg.apply_file_text("# comment\nchannel = AD\nphi_deg = 10\nseed = 4\nvisibility=0.9\n").unwrap();
        assert_eq!(cfg.phi_deg, 10.0);
        cfg.apply_env(vec![("SOSK_PHI_DEG".into(), "20".into()), ("OTHER".into(), "x".into())]).unwrap();
        assert_eq!(cfg.phi_deg, 20.0);
        let args = RunArgs {
            phi_deg: Some(30.0),
            ..Default::default()
        };
        cfg.apply_run_args(&args).unwrap();
        assert_eq!(cfg.phi_deg, 30.0);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.visibility, 0.9);
        assert_eq!(cfg.channel, Some(ChannelSource::Named(ChannelKind::AmplitudeDamping)));
        assert!(cfg.apply_file_text("bogus=1").is_err());
        assert!(cfg.apply_file_text("no equals sign").is_err());
    }

    #[test]
    fn decompose_table_and_json() {
        let out = run(&parse(&["decompose", "--channel", "AD", "--lambda", "0.75"]), no_env()).unwrap();
        assert!(out.stdout.contains("1.047197551197"), "{}", out.stdout);
        let out = run(&parse(&["decompose", "--channel", "AD", "--lambda", "0.75", "--format", "json"]), no_env()).unwrap();
        let plan = DecompositionPlan::from_json(&out.stdout).unwrap();
        assert!((plan.branch_a.gamma1 - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        let out = run(&parse(&["decompose", "--channel", "BF", "--lambda", "0"]), no_env()).unwrap();
        assert!(out.stdout.contains("residual 0.000e0"));
    }

    #[test]
    fn error_codes() {
        let e = run(&parse(&["decompose", "--channel", "AD"]), no_env()).unwrap_err();
        assert_eq!(e.code, exit::PARSE);
        let e = run(&parse(&["simulate", "--channel", "AD", "--lambda", "2"]), no_env()).unwrap_err();
        assert_eq!(e.code, exit::PARSE);
        let e = run(&parse(&["validate", "--channel", "/nonexistent/k.json"]), no_env()).unwrap_err();
        assert_eq!(e.code, exit::PARSE);
        let out = run(&parse(&["validate", "--channel", "BPF", "--lambda", "0.5"]), no_env()).unwrap();
        assert_eq!(out.code, exit::OK);
    }

    #[test]
    fn simulate_examples() {
        let out = run(&parse(&["simulate", "--channel", "AD", "--lambda", "1", "--phi-deg", "22.5"]), no_env()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        let f = v["fidelity_sim_vs_oracle"].as_f64().unwrap();
        assert!((f - 1.0).abs() < 1e-10);
        let z = v["output"]["bloch"][2].as_f64().unwrap();
        assert!((z - 1.0).abs() < 1e-10);

        let out = run(&parse(&["simulate", "--channel", "PF", "--lambda", "1"]), no_env()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert!((v["output"]["bloch"][0].as_f64().unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn sweep_rows_in_order_and_deterministic() {
        let cfg = RunConfig { noise: true, seed: 11, ..Default::default() };
        let a = sweep_rows(ChannelKind::AmplitudeDamping, &cfg).unwrap();
        let b = sweep_rows(ChannelKind::AmplitudeDamping, &cfg).unwrap();
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
        assert!(a.windows(2).all(|w| w[0].lambda < w[1].lambda));
        let csv = sweep_csv(&a);
        assert!(csv.starts_with(SWEEP_HEADER) && !csv.contains('\r'));
        assert_eq!(csv.lines().count(), 22);
    }
}
