use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod eng;
mod report;

use report::Outcome;

/// Dual-feed patch antenna design toolkit.
#[derive(Parser, Debug)]
#[command(name = "dualfeed", version, about)]
struct Cli {
    /// Print the run report (command, input digest, outputs, warnings) as
    /// key=value lines.
    #[arg(long, global = true)]
    report: bool,

    #[command(subcommand)]
    command: Command,
}

fn hz(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "Hz")
}
fn meters(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "m")
}
fn ohms(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "ohm")
}
fn farads(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "F")
}
fn henries(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "H")
}
fn plain(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "")
}
fn degrees(s: &str) -> Result<f64, String> {
    eng::parse_value(s, "deg")
}

#[derive(Args, Debug, Clone)]
pub struct SubstrateArgs {
    /// Relative permittivity.
    #[arg(long, default_value = "3.0", value_parser = plain)]
    pub er: f64,
    /// Substrate thickness.
    #[arg(long, default_value = "0.6mm", value_parser = meters)]
    pub h: f64,
    /// Loss tangent.
    #[arg(long, default_value = "0.0015", value_parser = plain)]
    pub tand: f64,
    /// Conductor conductivity, S/m.
    #[arg(long, default_value = "5.8e7", value_parser = plain)]
    pub sigma: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PatchArgs {
    /// ant1, ant2, ant3 or ant4.
    #[arg(long)]
    pub preset: String,
    /// Corner capacitance for ant4.
    #[arg(long, value_parser = farads)]
    pub cm: Option<f64>,
    /// Highest mode index along x.
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    /// Highest mode index along y.
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    /// Disable the open-end length extension.
    #[arg(long)]
    pub no_fringe: bool,
    /// Disable the probe reactance.
    #[arg(long)]
    pub no_probe: bool,
    /// Use one effective loss tangent for all modes.
    #[arg(long)]
    pub scalar_loss: bool,
    /// Source impedance behind each port drive.
    #[arg(long, default_value = "50", value_parser = ohms)]
    pub zs: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cut {
    Xoz,
    Yoz,
    Xoy,
    Sphere,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Impedance, effective permittivity, loss and phase of a microstrip line.
    MsAnalyze {
        /// Strip width.
        #[arg(long, value_parser = meters)]
        w: f64,
        /// Physical length.
        #[arg(long, default_value = "0", value_parser = meters)]
        len: f64,
        #[arg(long, default_value = "2.45GHz", value_parser = hz)]
        f: f64,
        #[command(flatten)]
        sub: SubstrateArgs,
    },
    /// Strip width for a target impedance.
    MsSynth {
        #[arg(long, value_parser = ohms)]
        z0: f64,
        /// Frequency for the quarter-wave length.
        #[arg(long, default_value = "2.45GHz", value_parser = hz)]
        f: f64,
        #[command(flatten)]
        sub: SubstrateArgs,
    },
    /// Sweep a netlist and write its input reflection.
    NetRun {
        netlist: PathBuf,
        /// CSV output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the reflection as a one-port Touchstone file.
        #[arg(long)]
        s1p: Option<PathBuf>,
    },
    /// Port impedance matrix of a patch preset.
    PatchZ {
        #[command(flatten)]
        patch: PatchArgs,
        /// Phase of port 2 relative to port 1 for dual-feed presets.
        #[arg(long, value_parser = degrees)]
        dphi: Option<f64>,
        /// Frequency or start:stop:step.
        #[arg(long, default_value = "2.45GHz")]
        f: String,
        /// CSV, or Touchstone when the name ends in .s1p/.s2p.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Surface current on the patch.
    PatchCurrent {
        #[command(flatten)]
        patch: PatchArgs,
        /// Phase of port 2 relative to port 1 for dual-feed presets.
        #[arg(long, value_parser = degrees)]
        dphi: Option<f64>,
        #[arg(long, default_value = "2.45GHz", value_parser = hz)]
        f: f64,
        #[arg(long, default_value_t = 21)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power budget and radiation efficiency.
    PatchEff {
        #[command(flatten)]
        patch: PatchArgs,
        /// Phase of port 2 relative to port 1 for dual-feed presets.
        #[arg(long, value_parser = degrees)]
        dphi: Option<f64>,
        /// Frequency or start:stop:step.
        #[arg(long, default_value = "2.45GHz")]
        f: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Far-field radiation intensity.
    PatchPattern {
        #[command(flatten)]
        patch: PatchArgs,
        /// Phase of port 2 relative to port 1 for dual-feed presets.
        #[arg(long, value_parser = degrees)]
        dphi: Option<f64>,
        #[arg(long, default_value = "2.45GHz", value_parser = hz)]
        f: f64,
        #[arg(long, value_enum, default_value = "xoz")]
        cut: Cut,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radiation efficiency versus feed phase difference.
    PhaseSweep {
        #[command(flatten)]
        patch: PatchArgs,
        #[arg(long, default_value = "2.45GHz", value_parser = hz)]
        f: f64,
        /// Phase grid, degrees, start:stop:step.
        #[arg(long, default_value = "0:180:5")]
        dphi: String,
        /// Port drive amplitudes (V), comma separated.
        #[arg(long, default_value = "0.7071067811865476,0.7071067811865476")]
        amps: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the text summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Optimize matching ladder values against a load.
    MatchOpt {
        /// Load impedance samples: .s1p or CSV with freq_hz,z_re,z_im.
        #[arg(long, conflicts_with_all = ["load_z", "load_preset"])]
        load: Option<PathBuf>,
        /// Constant load impedance <re>,<im>.
        #[arg(long, conflicts_with = "load_preset")]
        load_z: Option<String>,
        /// Patch preset as the load.
        #[arg(long)]
        load_preset: Option<String>,
        /// Band, start:stop (a single value for one frequency).
        #[arg(long, default_value = "2.4GHz:2.5GHz")]
        band: String,
        /// Ladder slots from the source, e.g. shunt-L,series-C.
        #[arg(long, default_value = "shunt-L,series-C,shunt-L,series-C")]
        topology: String,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = dualfeed::matching::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 31)]
        points: usize,
        #[arg(long, default_value = "0.1nH", value_parser = henries)]
        lmin: f64,
        #[arg(long, default_value = "30nH", value_parser = henries)]
        lmax: f64,
        #[arg(long, default_value = "0.1pF", value_parser = farads)]
        cmin: f64,
        #[arg(long, default_value = "10pF", value_parser = farads)]
        cmax: f64,
        #[arg(long, default_value = "50", value_parser = ohms)]
        refz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::MsAnalyze { w, len, f, sub } => commands::ms_analyze(w, len, f, &sub),
        Command::MsSynth { z0, f, sub } => commands::ms_synth(z0, f, &sub),
        Command::NetRun { netlist, out, s1p } => commands::net_run(&netlist, out.as_deref(), s1p.as_deref()),
        Command::PatchZ { patch, dphi, f, out } => commands::patch_z(&patch, dphi, &f, out.as_deref()),
        Command::PatchCurrent {
            patch,
            dphi,
            f,
            nx,
            ny,
            out,
        } => commands::patch_current(&patch, dphi, f, nx, ny, out.as_deref()),
        Command::PatchEff { patch, dphi, f, out } => commands::patch_eff(&patch, dphi, &f, out.as_deref()),
        Command::PatchPattern {
            patch,
            dphi,
            f,
            cut,
            out,
        } => commands::patch_pattern(&patch, dphi, f, cut, out.as_deref()),
        Command::PhaseSweep {
            patch,
            f,
            dphi,
            amps,
            out,
            summary,
        } => commands::phase_sweep(&patch, f, &dphi, &amps, out.as_deref(), summary.as_deref()),
        Command::MatchOpt {
            load,
            load_z,
            load_preset,
            band,
            topology,
            starts,
            seed,
            points,
            lmin,
            lmax,
            cmin,
            cmax,
            refz,
            out,
        } => commands::match_opt(&commands::MatchArgs {
            load,
            load_z,
            load_preset,
            band,
            topology,
            starts,
            seed,
            points,
            bounds: dualfeed::matching::Bounds {
                inductance: (lmin, lmax),
                capacitance: (cmin, cmax),
            },
            refz,
            out,
        }),
    };
    match result {
        Ok(outcome) => {
            report::emit(&outcome, &argv, cli.report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

pub(crate) type CliResult = dualfeed::Result<Outcome>;
