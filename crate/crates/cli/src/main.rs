//! `ucp`: command-line front end for the universal composite pulse engine.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ucp_core::dynamics::{EnvelopeShape, Propagator, PulseSpec, SampledEnvelope};
use ucp_core::echo::{
    efficiency_map, rephasing_efficiency_with, Distribution, EchoProtocol, EnsembleSpec,
    FreePrecession, PulseModel, DEFAULT_DETUNING_SIGMA,
};
use ucp_core::scanner::{
    high_fidelity_area, scan_correlated, scan_profile, sig12, Axis, CorrelationPath, GridSpec,
    ProfileGrid,
};
use ucp_core::sequences::{
    catalog_entry, fmt_degrees, phases_from_law, CompositeSequence, PhaseLaw, SequenceFile,
};
use ucp_core::series::{search_phases, verify_universal, SearchConfig};
use ucp_core::{Angle, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "ucp", version, about = "Universal composite pulses: phases, verification, search, scans and echo simulation")]
struct Cli {
    /// Worker threads for data-parallel work (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Print per-pulse phases of a catalog entry or phase law.
    Phases(PhasesArgs),
    /// Check that a Φ set nullifies the first j0 error orders.
    Verify(VerifyArgs),
    /// Search for Φ sets with j0 vanishing orders.
    Search(SearchArgs),
    /// Transition-probability map over detuning and pulse duration.
    Scan(ScanArgs),
    /// Transition probability along a correlated Rabi-error / detuning line.
    Correlated(CorrelatedArgs),
    /// CPMG rephasing efficiency (scalar, or a map with --map).
    Echo(EchoArgs),
}

#[derive(Args, Debug, Serialize)]
struct SeqArgs {
    /// Catalog name (U3, U5, U7, U13, U25, with optional a/b suffix) or `single`.
    seq: Option<String>,
    /// Φ values as a comma list, e.g. "2π/3,π,2π/3".
    #[arg(long, allow_hyphen_values = true)]
    law: Option<String>,
    /// Pulse count; checked against --law.
    #[arg(long)]
    n: Option<usize>,
    /// Sequence file (`n=..` header then a `law:` or `phases:` line).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Free phase φ2 in degrees [default: variant value, file value, or 0].
    #[arg(long, allow_hyphen_values = true)]
    phi2_deg: Option<f64>,
}

struct Resolved {
    seq: CompositeSequence,
    big_phi: Option<Vec<f64>>,
    law: Option<PhaseLaw>,
    j0: Option<usize>,
}

impl SeqArgs {
    fn resolve(&self) -> Result<Resolved, Failure> {
        let sources = [self.seq.is_some(), self.law.is_some(), self.file.is_some()];
        if sources.iter().filter(|&&b| b).count() != 1 {
            return Err(Failure::usage(
                "give exactly one of a catalog name, --law, or --file",
            ));
        }
        let phi2 = self.phi2_deg.map(Angle::from_degrees);
        if let Some(name) = &self.seq {
            if name.eq_ignore_ascii_case("single") {
                return Ok(Resolved {
                    seq: CompositeSequence::single(),
                    big_phi: None,
                    law: None,
                    j0: None,
                });
            }
            let (entry, variant) = catalog_entry(name)?;
            let phi2 = phi2
                .or(variant.map(Angle::Exact))
                .unwrap_or(Angle::from_degrees(0.0));
            let law = entry.law(phi2);
            let seq = phases_from_law(&law).with_label(format!(
                "{}({}°)",
                entry.name,
                fmt_degrees(phi2.degrees())
            ));
            return Ok(Resolved {
                seq,
                big_phi: Some(entry.big_phi_radians()),
                law: Some(law),
                j0: Some(entry.j0),
            });
        }
        if let Some(text) = &self.law {
            let big: Vec<Angle> = text
                .split(',')
                .map(Angle::parse)
                .collect::<ucp_core::Result<_>>()?;
            if let Some(n) = self.n {
                if n != big.len() + 2 {
                    return Err(Failure::usage(format!(
                        "--n {n} needs {} Φ values, got {}",
                        n.saturating_sub(2),
                        big.len()
                    )));
                }
            }
            let phi2 = phi2.unwrap_or(Angle::from_degrees(0.0));
            let law = PhaseLaw::new(big, phi2)?;
            let seq = phases_from_law(&law).with_label(format!("law({}°)", fmt_degrees(phi2.degrees())));
            return Ok(Resolved {
                seq,
                big_phi: Some(law.big_phi_radians()),
                law: Some(law),
                j0: None,
            });
        }
        let path = self.file.as_ref().expect("one source is set");
        let (file, warnings) = SequenceFile::from_path(path)?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        let file = match (file, phi2) {
            (SequenceFile::Law(l), Some(p)) => SequenceFile::Law(l.with_phi2(p)),
            (f, _) => f,
        };
        let big_phi = file.big_phi().iter().map(|a| a.radians()).collect();
        let law = match &file {
            SequenceFile::Law(l) => Some(l.clone()),
            SequenceFile::Phases(_) => None,
        };
        Ok(Resolved {
            seq: file.sequence().with_label(path.display().to_string()),
            big_phi: Some(big_phi),
            law,
            j0: None,
        })
    }
}

#[derive(Args, Debug, Serialize)]
struct PhasesArgs {
    #[command(flatten)]
    seq: SeqArgs,
    /// Write the sequence file here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    seq: SeqArgs,
    /// Claimed number of vanishing orders [default: catalog value].
    #[arg(long)]
    j0: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct SearchArgs {
    /// Pulse count (odd, ≥ 3).
    #[arg(long)]
    n: usize,
    /// Orders to nullify.
    #[arg(long)]
    j0: usize,
    /// Restrict to palindromic Φ.
    #[arg(long)]
    anagram: bool,
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep candidates whose nullified harmonics fall below this (dimensionless).
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Shape {
    Rect,
    Gauss,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Serialize)]
struct PulseArgs {
    /// Peak Rabi frequency Ω/2π in kHz.
    #[arg(long, default_value_t = 50.0)]
    rabi_khz: f64,
    /// Envelope shape (ignored with --envelope-file).
    #[arg(long, value_enum, default_value_t = Shape::Rect)]
    shape: Shape,
    /// Two-column envelope file (time, amplitude); times rescaled to the pulse duration.
    #[arg(long)]
    envelope_file: Option<PathBuf>,
    /// Linear chirp of Δ/2π in Hz per second, referenced to the pulse centre.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    chirp_hz_per_s: f64,
    /// Stark coefficient: Δ(t) gains this times Ω(t) (dimensionless).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    stark: f64,
    /// Integrator tolerance on propagator entries (dimensionless).
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

impl PulseArgs {
    fn pulse(&self, duration: f64, detuning: f64) -> Result<PulseSpec, Failure> {
        let shape = match (&self.envelope_file, self.shape) {
            (Some(p), _) => EnvelopeShape::Sampled(SampledEnvelope::from_path(p)?),
            (None, Shape::Rect) => EnvelopeShape::Rectangular,
            (None, Shape::Gauss) => EnvelopeShape::Gaussian,
        };
        let p = PulseSpec {
            shape,
            omega_peak: 2.0 * PI * self.rabi_khz * 1e3,
            duration,
            detuning0: detuning,
            chirp: 2.0 * PI * self.chirp_hz_per_s,
            stark_coeff: self.stark,
        };
        p.validate()?;
        Ok(p)
    }

    fn propagator(&self) -> Propagator {
        Propagator::with_tolerance(self.tolerance)
    }

    /// Duration of a nominal π pulse for a rectangular envelope, seconds.
    fn pi_duration(&self) -> f64 {
        1.0 / (2.0 * self.rabi_khz * 1e3)
    }
}

#[derive(Args, Debug, Serialize)]
struct GridArgs {
    /// Lowest detuning Δ/2π in kHz.
    #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
    detuning_khz_min: f64,
    /// Highest detuning Δ/2π in kHz.
    #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
    detuning_khz_max: f64,
    #[arg(long, default_value_t = 121)]
    detuning_points: usize,
    /// Shortest pulse duration in µs.
    #[arg(long, default_value_t = 2.0)]
    duration_us_min: f64,
    /// Longest pulse duration in µs.
    #[arg(long, default_value_t = 18.0)]
    duration_us_max: f64,
    #[arg(long, default_value_t = 81)]
    duration_points: usize,
}

impl GridArgs {
    fn grid(&self, base: PulseSpec) -> Result<GridSpec, Failure> {
        let g = GridSpec {
            detuning_axis: Axis::new(
                2.0 * PI * self.detuning_khz_min * 1e3,
                2.0 * PI * self.detuning_khz_max * 1e3,
                self.detuning_points,
            ),
            duration_axis: Axis::new(
                self.duration_us_min * 1e-6,
                self.duration_us_max * 1e-6,
                self.duration_points,
            ),
            base_pulse: base,
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[command(flatten)]
    pulse: PulseArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Report the fraction of cells with P12 at or above this (dimensionless).
    #[arg(long, default_value_t = 0.95)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CorrelatedArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[command(flatten)]
    pulse: PulseArgs,
    /// Detuning slope: Δ = Δ0 + κ·Ω·e (dimensionless).
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    /// Smallest fractional Rabi error e.
    #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
    error_min: f64,
    /// Largest fractional Rabi error e.
    #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
    error_max: f64,
    #[arg(long, default_value_t = 81)]
    points: usize,
    /// Pulse duration in µs [default: π pulse at --rabi-khz].
    #[arg(long)]
    duration_us: Option<f64>,
    /// Base detuning Δ0/2π in kHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    detuning_khz: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum Precession {
    Dephased,
    Explicit,
}

#[derive(Args, Debug, Serialize)]
struct EchoArgs {
    #[command(flatten)]
    seq: SeqArgs,
    #[command(flatten)]
    pulse: PulseArgs,
    /// Storage time in µs.
    #[arg(long, default_value_t = 400.0)]
    storage_us: f64,
    /// Number of inversion blocks (even).
    #[arg(long, default_value_t = 2)]
    inversions: usize,
    /// Coherence decay time in µs.
    #[arg(long, default_value_t = 500.0)]
    t2_us: f64,
    /// Disable the decoherence envelope.
    #[arg(long)]
    no_decoherence: bool,
    /// Pulse duration in µs [default: π pulse at --rabi-khz].
    #[arg(long)]
    duration_us: Option<f64>,
    /// Pulse detuning Δ0/2π in kHz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    detuning_khz: f64,
    /// Gaussian spread of member detunings, σ/2π in Hz.
    #[arg(long, default_value_t = DEFAULT_DETUNING_SIGMA / (2.0 * PI))]
    detuning_sigma_hz: f64,
    /// Gaussian spread of member Rabi scale (fraction of nominal).
    #[arg(long, default_value_t = 0.05)]
    rabi_sigma: f64,
    /// Single nominal member; overrides both sigmas.
    #[arg(long)]
    delta_ensemble: bool,
    #[arg(long, default_value_t = 64)]
    members: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Precession::Dephased)]
    free_precession: Precession,
    /// Keep the stimulated-echo terms (no averaging over the RF carrier phase).
    #[arg(long)]
    no_rf_average: bool,
    /// Produce an efficiency map over the detuning × duration grid.
    #[arg(long)]
    map: bool,
    /// Divide the map by its maximum.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_IO,
            Error::Convergence { .. } => EXIT_CONVERGENCE,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            msg: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: EXIT_IO,
            msg: e.to_string(),
        }
    }
}

/// `# command:` and `# config:` lines identifying a run.
struct Provenance {
    command: String,
    config: String,
}

impl Provenance {
    fn new(command: &Command) -> Result<Self, Failure> {
        let args: Vec<String> = std::env::args().skip(1).map(|a| shell_quote(&a)).collect();
        Ok(Provenance {
            command: format!("ucp {}", args.join(" ")),
            config: serde_json::to_string(command)?,
        })
    }

    fn header(&self) -> String {
        format!(
            "# command: {}\n# config: {}\n# engine_version: {}\n",
            self.command,
            self.config,
            ucp_core::ENGINE_VERSION
        )
    }
}

fn shell_quote(s: &str) -> String {
    if !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./=:,+".contains(c))
    {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure {
            code: EXIT_IO,
            msg: format!("{}: {e}", p.display()),
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_grid(
    grid: &ProfileGrid,
    prov: &Provenance,
    format: Format,
    column: &str,
    output: &Option<PathBuf>,
) -> Result<(), Failure> {
    let mut w = open_output(output)?;
    match format {
        Format::Csv => {
            w.write_all(prov.header().as_bytes())?;
            grid.write_csv(&mut w, column)?;
        }
        Format::Json => {
            let mut g = grid.clone();
            g.provenance.fields.push(("command".into(), prov.command.clone()));
            serde_json::to_writer_pretty(&mut w, &g)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_phases(a: &PhasesArgs) -> Result<(), Failure> {
    let r = a.seq.resolve()?;
    println!("sequence: {}", r.seq.label().unwrap_or("custom"));
    println!("phases: {}", r.seq);
    let degs: Vec<String> = r
        .seq
        .phases()
        .iter()
        .map(|p| fmt_degrees(p.degrees()))
        .collect();
    println!("degrees: {}", degs.join(", "));
    if let Some(path) = &a.output {
        let file = match r.law {
            Some(l) => SequenceFile::Law(l),
            None => SequenceFile::Phases(r.seq),
        };
        std::fs::write(path, file.to_text()).map_err(|e| Failure {
            code: EXIT_IO,
            msg: format!("{}: {e}", path.display()),
        })?;
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let r = a.seq.resolve()?;
    let big = r
        .big_phi
        .ok_or_else(|| Failure::usage("a single pulse has no Φ set to verify"))?;
    let j0 = a
        .j0
        .or(r.j0)
        .ok_or_else(|| Failure::usage("--j0 is required for non-catalog sequences"))?;
    let report = verify_universal(&big, j0)?;
    print!("{}", report.to_text());
    if report.passed {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            msg: format!("universality to order {j0} not achieved"),
        })
    }
}

fn cmd_search(a: &SearchArgs, prov: &Provenance) -> Result<(), Failure> {
    let mut cfg = SearchConfig::new(a.n, a.j0);
    cfg.anagram = a.anagram;
    cfg.restarts = a.restarts;
    cfg.seed = a.seed;
    cfg.tolerance = a.tolerance;
    let out = search_phases(&cfg)?;
    let mut w = open_output(&a.output)?;
    w.write_all(prov.header().as_bytes())?;
    writeln!(w, "# best_residual: {:e}", out.best_residual)?;
    writeln!(w, "residual,next_order,Phi")?;
    for c in &out.candidates {
        writeln!(w, "{}", c.record())?;
    }
    w.flush()?;
    if out.candidates.is_empty() {
        return Err(Failure {
            code: EXIT_CONVERGENCE,
            msg: format!(
                "no restart reached tolerance {:e} (best {:e})",
                a.tolerance, out.best_residual
            ),
        });
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs, prov: &Provenance) -> Result<(), Failure> {
    let r = a.seq.resolve()?;
    let base = a.pulse.pulse(a.pulse.pi_duration(), 0.0)?;
    let grid = a.grid.grid(base)?;
    let mut profile = scan_profile(&r.seq, &grid, &a.pulse.propagator())?;
    profile
        .provenance
        .fields
        .push(("rabi_hz".into(), sig12(a.pulse.rabi_khz * 1e3)));
    write_grid(&profile, prov, a.format, "p12", &a.output)?;
    if a.output.is_some() {
        println!(
            "high_fidelity_area({}): {}",
            a.threshold,
            high_fidelity_area(&profile, a.threshold)?
        );
    }
    Ok(())
}

fn cmd_correlated(a: &CorrelatedArgs, prov: &Provenance) -> Result<(), Failure> {
    let r = a.seq.resolve()?;
    let duration = a.duration_us.map_or(a.pulse.pi_duration(), |t| t * 1e-6);
    let base = a.pulse.pulse(duration, 2.0 * PI * a.detuning_khz * 1e3)?;
    let path = CorrelationPath {
        kappa: a.kappa,
        span: (a.error_min, a.error_max),
        count: a.points,
    };
    let rows = scan_correlated(&r.seq, &path, &base, &a.pulse.propagator())?;
    let mut w = open_output(&a.output)?;
    w.write_all(prov.header().as_bytes())?;
    writeln!(w, "# seq={} kappa={}", r.seq.label().unwrap_or("custom"), a.kappa)?;
    writeln!(w, "rabi_error,p12")?;
    for (e, p) in rows {
        writeln!(w, "{},{}", sig12(e), sig12(p))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_echo(a: &EchoArgs, prov: &Provenance) -> Result<(), Failure> {
    let r = a.seq.resolve()?;
    let duration = a.duration_us.map_or(a.pulse.pi_duration(), |t| t * 1e-6);
    let base = a.pulse.pulse(duration, 2.0 * PI * a.detuning_khz * 1e3)?;
    let protocol = EchoProtocol {
        storage_time: a.storage_us * 1e-6,
        inversion_count: a.inversions,
        sequence: r.seq,
        pulse: PulseModel::Physical(base.clone()),
        decoherence_time: (!a.no_decoherence).then_some(a.t2_us * 1e-6),
        free_precession: match a.free_precession {
            Precession::Dephased => FreePrecession::Dephased,
            Precession::Explicit => FreePrecession::Explicit,
        },
        rf_phase_average: !a.no_rf_average,
    };
    let ensemble = if a.delta_ensemble {
        EnsembleSpec::delta()
    } else {
        EnsembleSpec {
            detuning: Distribution::Gaussian {
                sigma: 2.0 * PI * a.detuning_sigma_hz,
            },
            rabi_scale: Distribution::Gaussian {
                sigma: a.rabi_sigma,
            },
            member_count: a.members,
            seed: a.seed,
        }
    };
    let prop = a.pulse.propagator();
    if a.map {
        let grid = a.grid.grid(base)?;
        let mut map = efficiency_map(&protocol, &ensemble, &grid, &prop)?;
        if a.normalize {
            map = map.normalized();
        }
        write_grid(&map, prov, a.format, "efficiency", &a.output)
    } else {
        let eff = rephasing_efficiency_with(&protocol, &ensemble, &prop)?;
        let mut w = open_output(&a.output)?;
        w.write_all(prov.header().as_bytes())?;
        writeln!(w, "efficiency: {}", sig12(eff))?;
        w.flush()?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let prov = Provenance::new(&cli.command)?;
    match &cli.command {
        Command::Phases(a) => cmd_phases(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Search(a) => cmd_search(a, &prov),
        Command::Scan(a) => cmd_scan(a, &prov),
        Command::Correlated(a) => cmd_correlated(a, &prov),
        Command::Echo(a) => cmd_echo(a, &prov),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
