//! Argument parsing and command dispatch for the `sinhgordon` binary.
//!
//! Every command writes one artifact (CSV or JSON) to `--out` or stdout.
//! Errors become a single `error kind=... message="..."` line on stderr and
//! exit code 2 (bad input) or 3 (numerical failure).

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use sinhgordon::evolution::{blowup_monitor, perturbation_growth, Evolver, GrowthOptions};
use sinhgordon::operators::{spectrum_l1, spectrum_l1_pi, spectrum_l_full, spectrum_l_pi};
use sinhgordon::output::fmt17;
use sinhgordon::period_map::{period, period_derivative, theta_via_ivp};
use sinhgordon::stability::{analyze, find_k0, pencil_spectrum, r_function, StabilityReport};
use sinhgordon::wave::closed_form;
use sinhgordon::{
    make_params, sample_profile, Branch, EllipticModulus, Error, FieldState, FourierGrid, Integrator, WaveParams,
};

/// Environment variable fixing the size of the worker pool used by `scan`.
pub const THREADS_ENV: &str = "SINHGORDON_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sinhgordon", version, about = "Periodic sinh-Gordon waves and their spectral stability")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// csv or json; the default depends on the command
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct WaveArgs {
    #[arg(long = "L")]
    pub length: f64,
    #[arg(long)]
    pub k: f64,
    /// travel to the left (c < 0)
    #[arg(long)]
    pub negative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Operator {
    L1,
    L,
    LPi,
    L1Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Stability,
    Energy,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Wave,
    Perturb,
    Sine,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample phi, phi', phi'' on the grid.
    Wave {
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        io: Common,
    },
    /// Period function l(B), l'(B) and theta, either for one wave or a B sweep.
    Period {
        #[arg(long = "L", requires = "k")]
        length: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, conflicts_with = "length")]
        omega: Option<f64>,
        #[arg(long = "B-min", default_value_t = 0.1)]
        b_min: f64,
        #[arg(long = "B-max", default_value_t = 10.0)]
        b_max: f64,
        #[arg(long = "B-steps", default_value_t = 20)]
        b_steps: usize,
        #[command(flatten)]
        io: Common,
    },
    /// Eigenvalues and counts of one of the linearised operators.
    Spectrum {
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Operator::L)]
        operator: Operator,
        #[command(flatten)]
        io: Common,
    },
    /// D1, r, k0, D, the index count and the verdict.
    Stability {
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long)]
        no_pencil: bool,
        #[command(flatten)]
        io: Common,
    },
    /// Tables over a (L, k) grid.
    Scan {
        /// one or more periods
        #[arg(long = "L", num_args = 1.., value_delimiter = ',', required = true)]
        lengths: Vec<f64>,
        #[arg(long = "k-min", default_value_t = 0.05)]
        k_min: f64,
        #[arg(long = "k-max", default_value_t = 0.95)]
        k_max: f64,
        #[arg(long = "k-steps", default_value_t = 19)]
        k_steps: usize,
        #[arg(long, value_enum, default_value_t = Table::Stability)]
        table: Table,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long)]
        no_pencil: bool,
        #[command(flatten)]
        io: Common,
    },
    /// Eigenvalues of the quadratic pencil.
    Pencil {
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        io: Common,
    },
    /// Time evolution: the wave itself, a perturbed wave, or A sin(2 pi x / L).
    Evolve {
        #[arg(long = "L")]
        length: f64,
        /// modulus, for the wave and perturb modes
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Wave)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long = "N", default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        record_every: usize,
        #[arg(long, value_enum, default_value_t = IntegratorArg::Yoshida4)]
        integrator: IntegratorArg,
        #[command(flatten)]
        io: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegratorArg {
    Strang,
    Yoshida4,
}

impl From<IntegratorArg> for Integrator {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Strang => Integrator::Strang,
            IntegratorArg::Yoshida4 => Integrator::Yoshida4,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Pipeline(Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) if e.is_domain() => 2,
            CliError::Pipeline(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Pipeline(e) => e.kind(),
            CliError::Io(_) => "io",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Pipeline(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
        };
        write!(f, "error kind={} message={:?}", self.kind(), msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Pipeline(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

type Out<'a> = &'a mut dyn Write;

fn modulus(k: f64) -> Result<EllipticModulus, CliError> {
    Ok(EllipticModulus::new(k)?)
}

fn wave_params(w: &WaveArgs) -> Result<WaveParams, CliError> {
    let branch = if w.negative { Branch::Negative } else { Branch::Positive };
    Ok(make_params(w.length, modulus(w.k)?, branch)?)
}

fn json_line(out: Out, v: &impl serde::Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Pipeline(Error::Domain(msg.into()))
}

/// Uniform grid of `steps` points from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps == 0 || !(lo <= hi) {
        return Err(bad(format!("empty range [{lo}, {hi}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect())
}

/// Runs one command, writing its artifact to `out`.
pub fn run(cmd: &Command, out: Out) -> Result<(), CliError> {
    match cmd {
        Command::Wave { wave, n, io } => {
            let p = wave_params(wave)?;
            let prof = sample_profile(&p, *n)?;
            match io.format.unwrap_or(Format::Csv) {
                Format::Csv => prof.write_csv(out)?,
                Format::Json => json_line(out, &prof)?,
            }
        }
        Command::Period {
            length,
            k,
            omega,
            b_min,
            b_max,
            b_steps,
            io,
        } => {
            let levels: Vec<(f64, f64)> = match (length, k, omega) {
                (Some(l), Some(k), _) => {
                    let p = make_params(*l, modulus(*k)?, Branch::Positive)?;
                    vec![(p.energy_level, p.omega)]
                }
                (None, _, Some(w)) => linspace(*b_min, *b_max, *b_steps)?.into_iter().map(|b| (b, *w)).collect(),
                _ => return Err(bad("period needs --L and --k, or --omega with a B range")),
            };
            let mut rows = vec![];
            for (b, w) in levels {
                let l = period(b, w)?;
                let dl = period_derivative(b, w)?;
                let theta = theta_via_ivp(&WaveParams::from_level(b, w, Branch::Positive)?)?;
                rows.push([b, w, l, dl, theta]);
            }
            match io.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    writeln!(out, "B,omega,L,dL_dB,theta")?;
                    for r in rows {
                        let cells: Vec<String> = r.iter().map(|x| fmt17(*x)).collect();
                        writeln!(out, "{}", cells.join(","))?;
                    }
                }
                Format::Json => {
                    let v: Vec<_> = rows
                        .iter()
                        .map(|r| json!({"B": r[0], "omega": r[1], "L": r[2], "dL_dB": r[3], "theta": r[4]}))
                        .collect();
                    json_line(out, &v)?;
                }
            }
        }
        Command::Spectrum { wave, n, operator, io } => {
            let p = wave_params(wave)?;
            let prof = sample_profile(&p, *n)?;
            let g = FourierGrid::new(p.length, *n, false)?;
            let gz = FourierGrid::new(p.length, *n, true)?;
            let rep = match operator {
                Operator::L1 => spectrum_l1(&prof, &g)?,
                Operator::L => spectrum_l_full(&prof, p.c, &g)?,
                Operator::LPi => spectrum_l_pi(&prof, p.c, &gz)?,
                Operator::L1Pi => spectrum_l1_pi(&prof, &gz)?,
            };
            match io.format.unwrap_or(Format::Json) {
                Format::Csv => rep.write_csv(out)?,
                Format::Json => json_line(out, &rep)?,
            }
        }
        Command::Stability { wave, n, no_pencil, io } => {
            let rep = analyze(&wave_params(wave)?, *n, !no_pencil)?;
            match io.format.unwrap_or(Format::Json) {
                Format::Csv => {
                    writeln!(out, "{STABILITY_HEADER}")?;
                    writeln!(out, "{}", stability_row(&rep))?;
                }
                Format::Json => json_line(out, &rep)?,
            }
        }
        Command::Scan {
            lengths,
            k_min,
            k_max,
            k_steps,
            table,
            n,
            no_pencil,
            io,
        } => scan(lengths, &linspace(*k_min, *k_max, *k_steps)?, *table, *n, !no_pencil, io, out)?,
        Command::Pencil { wave, n, io } => {
            let p = wave_params(wave)?;
            let prof = sample_profile(&p, *n)?;
            let spec = pencil_spectrum(&prof, &FourierGrid::new(p.length, *n, true)?)?;
            match io.format.unwrap_or(Format::Csv) {
                Format::Csv => spec.write_csv(out)?,
                Format::Json => json_line(out, &spec)?,
            }
        }
        Command::Evolve {
            length,
            k,
            mode,
            amplitude,
            epsilon,
            n,
            dt,
            t_max,
            seed,
            record_every,
            integrator,
            io,
        } => {
            let cfg = EvolveConfig {
                length: *length,
                k: *k,
                mode: *mode,
                amplitude: *amplitude,
                epsilon: *epsilon,
                n: *n,
                dt: *dt,
                t_max: *t_max,
                seed: *seed,
                record_every: *record_every,
                integrator: (*integrator).into(),
            };
            evolve(&cfg, io.format.unwrap_or(Format::Csv), out)?
        }
    }
    Ok(())
}

const STABILITY_HEADER: &str = "L,k,omega,c,D1,r,k0,n_D,K_Ham,pencil_max_re,verdict";

fn stability_row(r: &StabilityReport) -> String {
    let p = &r.params;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt17(p.length),
        fmt17(p.k),
        fmt17(p.omega),
        fmt17(p.c),
        fmt17(r.d1),
        fmt17(r.r_value),
        fmt17(r.k0),
        r.n_d,
        r.k_ham,
        r.pencil_max_re.map(fmt17).unwrap_or_default(),
        r.verdict
    )
}

fn scan(
    lengths: &[f64],
    ks: &[f64],
    table: Table,
    n: usize,
    with_pencil: bool,
    io: &Common,
    out: Out,
) -> Result<(), CliError> {
    let points: Vec<(f64, f64)> = lengths.iter().flat_map(|&l| ks.iter().map(move |&k| (l, k))).collect();
    let format = io.format.unwrap_or(Format::Csv);
    match table {
        Table::Stability => {
            for &l in lengths {
                // surfaces a bad L before any work
                find_k0(l)?;
            }
            // order of `collect` follows `points`, whatever the completion order
            let reports: Vec<Result<StabilityReport, Error>> = points
                .par_iter()
                .map(|&(l, k)| {
                    let p = make_params(l, EllipticModulus::new(k)?, Branch::Positive)?;
                    analyze(&p, n, with_pencil)
                })
                .collect();
            let mut kept = vec![];
            for ((l, k), r) in points.iter().zip(reports) {
                match r {
                    Ok(r) => kept.push(r),
                    Err(e) if e.is_domain() => {
                        eprintln!("warning kind=skipped message={:?}", format!("L = {l}, k = {k}: {e}"))
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            match format {
                Format::Csv => {
                    writeln!(out, "{STABILITY_HEADER}")?;
                    for r in &kept {
                        writeln!(out, "{}", stability_row(r))?;
                    }
                }
                Format::Json => json_line(out, &kept)?,
            }
        }
        Table::Energy | Table::R => {
            let mut rows = vec![];
            for &(l, k) in &points {
                let m = modulus(k)?;
                if !(l > 0.0 && l < 2.0 * PI) {
                    return Err(bad(format!("period L = {l} outside (0, 2 pi)")));
                }
                let omega = closed_form::omega(l, m);
                let value = match table {
                    Table::Energy => closed_form::energy(l, m),
                    _ => r_function(m, l),
                };
                rows.push((l, k, omega, value));
            }
            let name = if table == Table::Energy { "energy" } else { "r" };
            match format {
                Format::Csv => {
                    writeln!(out, "L,k,omega,admissible,{name}")?;
                    for (l, k, w, v) in rows {
                        writeln!(out, "{},{},{},{},{}", fmt17(l), fmt17(k), fmt17(w), w < 1.0, fmt17(v))?;
                    }
                }
                Format::Json => {
                    let v: Vec<_> = rows
                        .iter()
                        .map(|&(l, k, w, v)| json!({"L": l, "k": k, "omega": w, "admissible": w < 1.0, name: v}))
                        .collect();
                    json_line(out, &v)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct EvolveConfig {
    length: f64,
    k: Option<f64>,
    mode: Mode,
    amplitude: f64,
    epsilon: f64,
    n: usize,
    dt: f64,
    t_max: f64,
    seed: u64,
    record_every: usize,
    integrator: Integrator,
}

fn evolve(cfg: &EvolveConfig, format: Format, out: Out) -> Result<(), CliError> {
    if !(cfg.dt > 0.0 && cfg.t_max > 0.0) {
        return Err(bad("--dt and --T must be positive"));
    }
    let ev = Evolver::new(cfg.length, cfg.n, cfg.integrator)?;
    let wave = match cfg.mode {
        Mode::Wave | Mode::Perturb => {
            let k = cfg.k.ok_or_else(|| bad("--k is required for this mode"))?;
            Some(make_params(cfg.length, modulus(k)?, Branch::Positive)?)
        }
        Mode::Sine => None,
    };
    if cfg.mode == Mode::Perturb && format == Format::Json {
        let p = wave.expect("perturb mode has a wave");
        let opts = GrowthOptions {
            epsilon: cfg.epsilon,
            t_max: cfg.t_max,
            n: cfg.n,
            dt: cfg.dt,
            seed: cfg.seed,
            sample_every: cfg.record_every,
            with_pencil: true,
        };
        return json_line(out, &perturbation_growth(&p, &opts)?);
    }
    let s0: FieldState = match (cfg.mode, &wave) {
        (Mode::Wave, Some(p)) => ev.wave_state(p)?,
        (Mode::Perturb, Some(p)) => {
            let amp = sinhgordon::fourier::max_abs(&sample_profile(p, cfg.n)?.phi);
            if !(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-3 * amp) {
                return Err(bad(format!("epsilon must lie in (0, {}]", 1e-3 * amp)));
            }
            let mut s = ev.wave_state(p)?;
            let z = sinhgordon::evolution::band_limited_noise(cfg.n, cfg.length, cfg.seed);
            let u = s.u.iter().zip(&z).map(|(a, b)| a + cfg.epsilon * b).collect();
            s = ev.state(u, s.v)?;
            s
        }
        _ => {
            let u = ev
                .points()
                .iter()
                .map(|x| cfg.amplitude * (2.0 * PI * x / cfg.length).sin())
                .collect();
            ev.state(u, vec![0.0; cfg.n])?
        }
    };
    let steps = (cfg.t_max / cfg.dt).round() as usize;
    let (traj, err) = ev.run(&s0, cfg.dt, steps, cfg.record_every);
    match format {
        Format::Csv => ev.write_csv(&traj, wave.as_ref(), &mut *out)?,
        Format::Json => {
            let last = traj.last().expect("trajectory holds the initial state");
            let m = ev.conserved_prefix(&traj, 1e-8);
            let rep = blowup_monitor(&traj[..m.max(1)]);
            let v = json!({
                "E0": s0.e0,
                "F0": s0.f0,
                "t_final": last.t,
                "energy_drift": (ev.energy(last) - s0.e0).abs() / s0.e0.abs().max(1.0),
                "momentum_drift": (ev.momentum(last) - s0.f0).abs() / s0.f0.abs().max(1.0),
                "max_u": last.max_u(),
                "overflow": err.is_some(),
                "blowup_monitor": rep,
            });
            json_line(out, &v)?;
        }
    }
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Sizes the global pool from the environment; ignored when unset or unparsable.
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call (tests) finds the pool already built; that's fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Output destination of a command.
pub fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Wave { io, .. }
        | Command::Period { io, .. }
        | Command::Spectrum { io, .. }
        | Command::Stability { io, .. }
        | Command::Scan { io, .. }
        | Command::Pencil { io, .. }
        | Command::Evolve { io, .. } => io,
    }
}
