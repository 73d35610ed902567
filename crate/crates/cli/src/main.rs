// SPDX-License-Identifier: Apache-2.0
//! `andersonlab <command> [--config path] [flags]`

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use andersonlab::config::{self, Command, RunConfig, PRESETS};
use andersonlab::fixed_point::random_smooth;
use andersonlab::fourier::io::{save_field, write_atomic};
use andersonlab::fourier::sobolev_norm;
use andersonlab::nls::{ledger_csv, NlsSystem, Scheme, PICARD_INTERVALS};
use andersonlab::noise::{
    renorm_constant_2d, renorm_constants_3d, sample_white_noise, save_bundle, NoiseBundle,
};
use andersonlab::propagator::{trajectory, trajectory_csv, Flow, GeneratorKind};
use andersonlab::{runtime, verify, Error};

#[derive(Parser)]
#[command(name = "andersonlab", version, about = "Renormalized Anderson Hamiltonian laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a white-noise realization.
    Sample(Common),
    /// Mollify, renormalize and save the enhanced noise.
    Enhance(Common),
    /// Assemble the operator and write its manifest.
    Operator(Common),
    /// Eigenvalues of -H on the Galerkin space.
    Spectrum(Common),
    /// Linear Schrödinger flow e^{-itH} on a smooth initial datum.
    Propagate(Common),
    /// Cubic defocusing NLS with the Anderson Hamiltonian.
    Nls(Common),
    /// Strichartz scaling ensemble.
    Strichartz(Common),
    /// Run the invariant suite.
    Verify(Common),
    /// List the named presets.
    Presets,
}

/// Flags shared by every command; each one overrides the config file.
#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset, applied beneath the file and flags.
    #[arg(long)]
    preset: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per axis.
    #[arg(long = "M", short = 'M')]
    m: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// `sharp-cutoff` or `smooth-bump`.
    #[arg(long)]
    mollifier: Option<String>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Galerkin mode radius.
    #[arg(long = "K", short = 'K')]
    k: Option<f64>,
    /// Paracontrolled cutoff; skips the selection scan.
    #[arg(long = "N", short = 'N')]
    n: Option<usize>,
    #[arg(long)]
    c2_cap: Option<f64>,
    /// `dense-eigendecomposition`, `krylov` or `spectral-multiplier`.
    #[arg(long)]
    method: Option<String>,
    /// Final time.
    #[arg(long = "T", short = 'T')]
    t: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// `strang` or `picard`.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    data_amplitude: Option<f64>,
    /// `free`, `anderson2d` or `anderson3d`.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    exponent: Option<f64>,
    /// `unit` or `short`.
    #[arg(long)]
    interval: Option<String>,
    /// Comma-separated data frequencies.
    #[arg(long = "N-list", value_delimiter = ',')]
    n_list: Option<Vec<f64>>,
    /// `a..b` or a comma-separated list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// `standard` or `zero-noise`.
    #[arg(long)]
    profile: Option<String>,
    /// Comma-separated check ids.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("cannot read seeds {s:?}; use a..b or a comma list"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

impl Common {
    fn flag_values(&self) -> Result<Value, Error> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("dim", self.dim.map(Value::from));
        put("M", self.m.map(Value::from));
        put("eps", self.eps.map(Value::from));
        put("mollifier", self.mollifier.clone().map(Value::from));
        put("amplitude", self.amplitude.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("K", self.k.map(Value::from));
        put("N", self.n.map(Value::from));
        put("c2_cap", self.c2_cap.map(Value::from));
        put("method", self.method.clone().map(Value::from));
        put("T", self.t.map(Value::from));
        put("samples", self.samples.map(Value::from));
        put("dt", self.dt.map(Value::from));
        put("stride", self.stride.map(Value::from));
        put("s", self.s.map(Value::from));
        put("sigma", self.sigma.map(Value::from));
        put("scheme", self.scheme.clone().map(Value::from));
        put("data_amplitude", self.data_amplitude.map(Value::from));
        put("generator", self.generator.clone().map(Value::from));
        put("exponent", self.exponent.map(Value::from));
        put("interval", self.interval.clone().map(Value::from));
        put("N_list", self.n_list.clone().map(|v| json!(v)));
        put("seeds", self.seeds.as_deref().map(parse_seeds).transpose()?.map(|v| json!(v)));
        put("n_t", self.n_t.map(Value::from));
        put("tolerance", self.tolerance.map(Value::from));
        put("profile", self.profile.clone().map(Value::from));
        put("checks", self.checks.clone().map(|v| json!(v)));
        put("out", self.out.as_ref().map(|p| Value::from(p.to_string_lossy().into_owned())));
        Ok(Value::Object(m))
    }

    fn resolve(&self, command: Command) -> Result<RunConfig, Error> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                Some(
                    serde_json::from_str::<Value>(&text)
                        .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", p.display())))?,
                )
            }
            None => None,
        };
        config::resolve(command, file.as_ref(), self.preset.as_deref(), &self.flag_values()?)
    }
}

/// How a run ended when it did not succeed.
enum Failure {
    Usage(String),
    Check(Vec<String>),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::Config(_)) | Some(Error::Json(_)) => Failure::Usage(format!("{e:#}")),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Every report has the same envelope, with the resolved configuration inside.
fn write_report(out: &Path, command: Command, cfg: &RunConfig, results: Value) -> anyhow::Result<PathBuf> {
    let path = out.join(format!("{}.json", command.name()));
    let doc = json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "results": results,
    });
    write_atomic(&path, &pretty(&doc)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(cfg.out.clone())
}

/// Smooth `u♯` in `V` with `||u♯||_{H^s} = data_amplitude`.
fn initial_sharp(modes: &andersonlab::galerkin::ModeSet, cfg: &RunConfig) -> andersonlab::fourier::TorusField {
    let u = random_smooth(modes, cfg.seed, 2.0);
    u.scale(cfg.data_amplitude / sobolev_norm(&u, cfg.s))
}

fn cmd_sample(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let w = sample_white_noise(cfg.dim, cfg.m, cfg.seed)?;
    let field = w.field.scale(cfg.amplitude);
    save_field(&out.join("xi.fld"), &field)?;
    write_report(
        &out,
        Command::Sample,
        cfg,
        json!({"file": "xi.fld", "zero_mode_removed": w.zero_mode_removed, "l2": field.norm_l2()}),
    )?;
    Ok(())
}

fn cmd_enhance(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let seed = (cfg.amplitude != 0.0).then_some(cfg.seed);
    let manifest = if cfg.dim == 2 {
        let classical = renorm_constant_2d(cfg.eps, cfg.mollifier, cfg.m);
        save_bundle(&out, &NoiseBundle::TwoD(cfg.noise_2d()?), seed, vec![classical])?
    } else {
        let (c1, c2) = renorm_constants_3d(cfg.eps, cfg.mollifier, cfg.m, cfg.c2_cap)?;
        save_bundle(&out, &NoiseBundle::ThreeD(cfg.noise_3d()?), seed, vec![c1, c2])?
    };
    write_report(&out, Command::Enhance, cfg, serde_json::to_value(manifest).map_err(Error::from)?)?;
    Ok(())
}

fn cmd_operator(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let manifest = if cfg.dim == 2 {
        cfg.operator_2d()?.manifest(Some(cfg.seed))
    } else {
        let classical = renorm_constants_3d(cfg.eps, cfg.mollifier, cfg.m, cfg.c2_cap)?;
        cfg.operator_3d()?.manifest(Some(cfg.seed), Some(classical))
    };
    write_report(&out, Command::Operator, cfg, serde_json::to_value(&manifest).map_err(Error::from)?)?;
    if !(manifest.contraction_factor <= 0.5) {
        return Err(Failure::Check(vec![format!("gamma-contraction ({:.3} > 0.5)", manifest.contraction_factor)]));
    }
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let (values, shift) = if cfg.dim == 2 {
        let op = cfg.operator_2d()?;
        (op.matrix().spectral()?.values.clone(), op.shift())
    } else {
        let op = cfg.operator_3d()?;
        (op.matrix().spectral()?.values.clone(), op.shift())
    };
    // The matrix is H - shift on V. Report -(H - shift) ascending, with the unshifted value beside it.
    let mut shifted: Vec<f64> = values.iter().map(|v| -v).collect();
    shifted.sort_by(f64::total_cmp);
    let mut csv = String::from("index,lambda,lambda_unshifted\n");
    for (i, v) in shifted.iter().enumerate() {
        csv.push_str(&format!("{i},{v:.17e},{:.17e}\n", v - shift));
    }
    write_atomic(&out.join("spectrum.csv"), csv.as_bytes())?;
    let lambda_min = shifted[0];
    let top_unshifted = shift - lambda_min;
    let rederived = top_unshifted.max(0.0) + 1.0;
    let consistency = (rederived - shift).abs();
    write_report(
        &out,
        Command::Spectrum,
        cfg,
        json!({"file": "spectrum.csv", "count": shifted.len(), "shift": shift, "shift_rederived": rederived,
               "lambda_min": lambda_min, "lambda_max": shifted[shifted.len() - 1]}),
    )?;
    let mut failed = Vec::new();
    if !(lambda_min >= 0.0) {
        failed.push(format!("shifted-spectrum-nonnegative (min {lambda_min:e})"));
    }
    if !(consistency <= 1e-6) {
        failed.push(format!("shift-consistency (off by {consistency:e})"));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed))
    }
}

fn cmd_propagate(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let op2;
    let op3;
    let flow = if cfg.dim == 2 {
        op2 = cfg.operator_2d()?;
        Flow::anderson2d(&op2, &cfg.plan(GeneratorKind::Anderson2d))
    } else {
        op3 = cfg.operator_3d()?;
        Flow::anderson3d(&op3, &cfg.plan(GeneratorKind::Anderson3d))
    };
    let modes = flow.matrix_flow().expect("Anderson flows are matrix flows").matrix.modes().clone();
    let u0 = flow.lift(&initial_sharp(&modes, cfg))?;
    let times: Vec<f64> = (0..cfg.samples).map(|i| cfg.t_final * i as f64 / (cfg.samples - 1) as f64).collect();
    let s_list = [0.0, cfg.s, 1.0];
    let (rows, _) = trajectory(&flow, &u0, &times, &s_list)?;
    write_atomic(&out.join("trajectory.csv"), trajectory_csv(&rows, &s_list).as_bytes())?;
    let m0 = rows[0].mass;
    let e0 = rows[0].energy;
    let mass = rows.iter().map(|r| (r.mass - m0).abs() / m0).fold(0.0, f64::max);
    let energy = rows.iter().map(|r| (r.energy - e0).abs() / e0.abs()).fold(0.0, f64::max);
    write_report(
        &out,
        Command::Propagate,
        cfg,
        json!({"file": "trajectory.csv", "mass_drift": mass, "energy_drift": energy, "shift": flow.shift()}),
    )?;
    let horizon = cfg.t_final.max(1.0);
    let mut failed = Vec::new();
    if mass > 1e-10 * horizon {
        failed.push(format!("mass-conservation (drift {mass:e})"));
    }
    if energy > 1e-8 * horizon {
        failed.push(format!("energy-conservation (drift {energy:e})"));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failed))
    }
}

fn cmd_nls(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.dim != 2 {
        return Err(Failure::Usage("the NLS solver runs in 2d".into()));
    }
    let out = out_dir(cfg)?;
    let op = cfg.operator_2d()?;
    let sys = NlsSystem::new(&op)?;
    let u0_sharp = initial_sharp(op.modes(), cfg);
    let results = match cfg.scheme {
        Scheme::Strang => {
            let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
            let st = sys.strang(&sys.lift(&u0_sharp)?, cfg.t_final, steps, cfg.s, cfg.sigma, cfg.stride)?;
            write_atomic(&out.join("ledger.csv"), ledger_csv(&st.ledger).as_bytes())?;
            let first = &st.ledger[0];
            let mass = st.ledger.iter().map(|r| (r.mass - first.mass).abs() / first.mass).fold(0.0, f64::max);
            let energy =
                st.ledger.iter().map(|r| (r.energy - first.energy).abs() / first.energy.abs()).fold(0.0, f64::max);
            json!({"file": "ledger.csv", "steps": steps, "mass_drift": mass, "energy_drift": energy})
        }
        Scheme::Picard => {
            let p = sys.picard(&u0_sharp, cfg.t_final, PICARD_INTERVALS, 60, 1e-13)?;
            json!({"iterations": p.differences.len(), "differences": p.differences, "contraction": p.contraction(),
                   "final_l2": p.u.norm_l2()})
        }
    };
    write_report(&out, Command::Nls, cfg, results)?;
    Ok(())
}

fn cmd_strichartz(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let report = cfg.run_strichartz()?;
    write_atomic(&out.join("cells.csv"), report.cells_csv().as_bytes())?;
    let mut summary = report.summary();
    summary["per_N"] = serde_json::to_value(&report.per_n).map_err(Error::from)?;
    summary["file"] = json!("cells.csv");
    write_report(&out, Command::Strichartz, cfg, summary)?;
    println!("slope {:.4} ± {:.4} (theory {:.4})", report.slope, report.stderr, report.theory_slope);
    if !report.pass {
        return Err(Failure::Check(vec![format!("strichartz-slope ({:.4})", report.slope)]));
    }
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let out = out_dir(cfg)?;
    let report = verify::run(cfg)?;
    write_report(&out, Command::Verify, cfg, serde_json::to_value(&report).map_err(Error::from)?)?;
    print!("{}", report.table());
    let failing: Vec<String> = report.failing().iter().map(|c| c.id.clone()).collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failing))
    }
}

fn dispatch(command: Command, common: &Common) -> Result<(), Failure> {
    let cfg = common.resolve(command)?;
    if common.print_config {
        let bytes = pretty(&serde_json::to_value(&cfg).map_err(Error::from)?);
        print!("{}", String::from_utf8_lossy(&bytes));
        return Ok(());
    }
    match command {
        Command::Sample => cmd_sample(&cfg),
        Command::Enhance => cmd_enhance(&cfg),
        Command::Operator => cmd_operator(&cfg),
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Propagate => cmd_propagate(&cfg),
        Command::Nls => cmd_nls(&cfg),
        Command::Strichartz => cmd_strichartz(&cfg),
        Command::Verify => cmd_verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match runtime::threads_from_env() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    runtime::init(threads);
    let (command, common) = match &cli.command {
        Cmd::Sample(c) => (Command::Sample, c),
        Cmd::Enhance(c) => (Command::Enhance, c),
        Cmd::Operator(c) => (Command::Operator, c),
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Propagate(c) => (Command::Propagate, c),
        Cmd::Nls(c) => (Command::Nls, c),
        Cmd::Strichartz(c) => (Command::Strichartz, c),
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Presets => {
            for p in PRESETS {
                println!("{:<26} {:<10} {}", p.name, p.command.name(), p.summary);
            }
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(command, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(names)) => {
            for n in &names {
                eprintln!("check failed: {n}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
