use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dualfeed::matching::{self, Bounds, LadderTopology, OptimizerConfig};
use dualfeed::microstrip::{self, MicrostripLine, SubstrateSpec};
use dualfeed::netlist::parse_netlist;
use dualfeed::network::{read_touchstone, touchstone_string, LoadProfile, Touchstone};
use dualfeed::patch::{
    self, divider_input_impedance, far_field_pattern, scenario, CavityOptions, CavitySolution, LossModel,
    ModeTruncation, PatternCut, Preset, SweepSummary,
};
use dualfeed::units::{db20_floored, format_g, Complex};
use dualfeed::{Error, Result};

use crate::report::Outcome;
use crate::{eng, CliResult, Cut, PatchArgs, SubstrateArgs};

fn input(msg: String) -> Error {
    Error::Domain(msg)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `csv` to `out`, or queues it for stdout.
fn deliver(outcome: &mut Outcome, out: Option<&Path>, csv: String) -> Result<()> {
    match out {
        Some(p) => {
            write_file(p, &csv)?;
            outcome.outputs.push(p.to_path_buf());
        }
        None => outcome.stdout_csv = Some(csv),
    }
    Ok(())
}

fn substrate(args: &SubstrateArgs) -> Result<SubstrateSpec> {
    SubstrateSpec::new(args.er, args.tand, args.h, args.sigma)
}

fn g(x: f64) -> String {
    format_g(x)
}

pub fn ms_analyze(w: f64, len: f64, f: f64, sub: &SubstrateArgs) -> CliResult {
    let line = MicrostripLine::new(substrate(sub)?, w, len)?;
    let ch = microstrip::analyze_at(&line, f)?;
    let mut o = Outcome::new("ms-analyze");
    o.value("z0_ohm", g(ch.z0));
    o.value("eeff", g(ch.eeff));
    o.value("alpha_d_np_per_m", g(ch.alpha_d));
    o.value("alpha_c_np_per_m", g(ch.alpha_c));
    o.value("electrical_length_deg", g(microstrip::electrical_length(&line, f)?));
    Ok(o)
}

pub fn ms_synth(z0: f64, f: f64, sub: &SubstrateArgs) -> CliResult {
    let spec = substrate(sub)?;
    let w = microstrip::synthesize_width(z0, &spec)?;
    let mut o = Outcome::new("ms-synth");
    o.value("w_m", g(w));
    o.value("w_over_h", g(w / spec.h));
    o.value("quarter_wave_m", g(microstrip::quarter_wave_length(&spec, w, f)?));
    Ok(o)
}

fn s11_csv(rows: &[(f64, Complex)]) -> String {
    let mut csv = String::from("freq_hz,s11_re,s11_im,s11_db\n");
    for (f, s) in rows {
        let _ = writeln!(csv, "{},{},{},{}", g(*f), g(s.re), g(s.im), g(db20_floored(s.norm())));
    }
    csv
}

fn intervals_text(freqs: &[f64], s: &[Complex], level: f64) -> String {
    let db: Vec<f64> = s.iter().map(|v| db20_floored(v.norm())).collect();
    let parts: Vec<String> = matching::bandwidth_at_level(freqs, &db, level)
        .iter()
        .map(|(a, b)| format!("{}:{}", g(*a), g(*b)))
        .collect();
    if parts.is_empty() {
        "none".into()
    } else {
        parts.join(";")
    }
}

pub fn net_run(netlist: &Path, out: Option<&Path>, s1p: Option<&Path>) -> CliResult {
    let text = read_file(netlist)?;
    let doc = parse_netlist(&text)?;
    let base = netlist.parent().unwrap_or(Path::new("."));
    let rows = doc.sweep_s11(base)?;
    let mut o = Outcome::new("net-run");
    o.inputs.push(netlist.to_path_buf());
    let freqs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let s: Vec<Complex> = rows.iter().map(|r| r.1).collect();
    o.value("max_s11_db", g(matching::max_s11_db(&s)));
    o.value("band_below_minus6db_hz", intervals_text(&freqs, &s, -6.0));
    if let Some(p) = s1p {
        write_file(p, &touchstone_string(&Touchstone::one_port(doc.z_ref, freqs, &s)?))?;
        o.outputs.push(p.to_path_buf());
    }
    deliver(&mut o, out, s11_csv(&rows))?;
    Ok(o)
}

fn cavity_options(p: &PatchArgs) -> CavityOptions {
    CavityOptions {
        fringe_extension: !p.no_fringe,
        probe_reactance: !p.no_probe,
        loss_model: if p.scalar_loss {
            LossModel::Scalar
        } else {
            LossModel::Modal
        },
        source_impedance: p.zs,
        ..CavityOptions::with_truncation(p.m, p.n)
    }
}

fn preset(p: &PatchArgs, dphi: Option<f64>) -> Result<Preset> {
    Preset::from_name(&p.preset, dphi, p.cm)
}

fn freq_list(text: &str) -> Result<Vec<f64>> {
    eng::parse_range(text, "Hz").map_err(input)
}

const TRUNCATION_LIMIT: f64 = 0.02;

pub fn patch_z(p: &PatchArgs, dphi: Option<f64>, f: &str, out: Option<&Path>) -> CliResult {
    let preset = preset(p, dphi)?;
    let opts = cavity_options(p);
    let freqs = freq_list(f)?;
    let (geom, exc) = scenario(preset);
    let n = geom.ports.len();
    let mut o = Outcome::new("patch-z");

    let touchstone_ports = out.and_then(|path| {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
        {
            Some(e) if e == "s1p" => Some(1),
            Some(e) if e == "s2p" => Some(2),
            _ => None,
        }
    });
    if let Some(k) = touchstone_ports {
        if k != n {
            return Err(input(format!(
                "preset {} has {n} port(s); cannot write a .s{k}p file",
                p.preset
            )));
        }
    }

    let mut header = String::from("freq_hz");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(header, ",z{i}{j}_re,z{i}{j}_im");
        }
    }
    header.push_str(",zin_re,zin_im\n");
    let mut csv = header;
    let mut s_data = Vec::new();
    for &fr in &freqs {
        let sol = CavitySolution::new(&geom, &opts, fr)?;
        let z = sol.impedance_matrix();
        let zin = divider_input_impedance(&sol, exc.drives(), 50.0)?;
        let _ = write!(csv, "{}", g(fr));
        for i in 0..n {
            for j in 0..n {
                let _ = write!(csv, ",{},{}", g(z[(i, j)].re), g(z[(i, j)].im));
            }
        }
        let _ = writeln!(csv, ",{},{}", g(zin.re), g(zin.im));
        if touchstone_ports.is_some() {
            s_data.push(sol.scattering(50.0)?);
        }
    }

    let delta = patch::truncation_delta(
        &geom,
        &opts,
        freqs[0],
        ModeTruncation { m_max: 10, n_max: 10 },
        ModeTruncation { m_max: 20, n_max: 20 },
    )?;
    o.value("truncation_delta", g(delta));
    if delta > TRUNCATION_LIMIT {
        o.warnings.push(format!(
            "Z11 changes by {:.2}% between (10,10) and (20,20) modes at {} Hz",
            100.0 * delta,
            g(freqs[0])
        ));
    }

    match (touchstone_ports, out) {
        (Some(_), Some(path)) => {
            write_file(path, &touchstone_string(&Touchstone::new(50.0, freqs, s_data)?))?;
            o.outputs.push(path.to_path_buf());
        }
        _ => deliver(&mut o, out, csv)?,
    }
    Ok(o)
}

pub fn patch_current(p: &PatchArgs, dphi: Option<f64>, f: f64, nx: usize, ny: usize, out: Option<&Path>) -> CliResult {
    let preset = preset(p, dphi)?;
    let (geom, exc) = scenario(preset);
    let grid = patch::surface_current_grid(&geom, &cavity_options(p), &exc, f, nx, ny)?;
    let mut csv = String::from("x_m,y_m,jx_re,jx_im,jy_re,jy_im,j_abs\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = j * grid.nx + i;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                g(grid.x[i]),
                g(grid.y[j]),
                g(grid.jx[k].re),
                g(grid.jx[k].im),
                g(grid.jy[k].re),
                g(grid.jy[k].im),
                g(grid.magnitude(i, j))
            );
        }
    }
    let mut o = Outcome::new("patch-current");
    o.value("j_max_a_per_m", g(grid.max_magnitude()));
    deliver(&mut o, out, csv)?;
    Ok(o)
}

pub fn patch_eff(p: &PatchArgs, dphi: Option<f64>, f: &str, out: Option<&Path>) -> CliResult {
    let preset = preset(p, dphi)?;
    let opts = cavity_options(p);
    let (geom, exc) = scenario(preset);
    let freqs = freq_list(f)?;
    let mut csv = String::from("freq_hz,p_rad_w,p_diel_w,p_cond_w,p_in_w,eta,eta_db\n");
    let mut worst_closure: f64 = 0.0;
    let mut etas = Vec::new();
    for &fr in &freqs {
        let b = patch::power_budget(&geom, &opts, &exc, fr)?;
        worst_closure = worst_closure.max(b.closure_error());
        etas.push(b.eta);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            g(fr),
            g(b.p_rad),
            g(b.p_diel),
            g(b.p_cond),
            g(b.p_in),
            g(b.eta),
            g(10.0 * b.eta.log10())
        );
    }
    let mut o = Outcome::new("patch-eff");
    if etas.len() == 1 {
        o.value("eta", g(etas[0]));
    }
    o.value("closure_error", g(worst_closure));
    deliver(&mut o, out, csv)?;
    Ok(o)
}

pub fn patch_pattern(p: &PatchArgs, dphi: Option<f64>, f: f64, cut: Cut, out: Option<&Path>) -> CliResult {
    let preset = preset(p, dphi)?;
    let (geom, exc) = scenario(preset);
    let sol = CavitySolution::new(&geom, &cavity_options(p), f)?;
    let state = sol.excite(&exc)?;
    let cut = match cut {
        Cut::Xoz => PatternCut::Xoz,
        Cut::Yoz => PatternCut::Yoz,
        Cut::Xoy => PatternCut::Xoy,
        Cut::Sphere => PatternCut::Hemisphere,
    };
    let pattern = far_field_pattern(&sol, &state, cut)?;
    let mut csv = String::from("theta_deg,phi_deg,u_w_per_sr\n");
    for s in &pattern.samples {
        let _ = writeln!(csv, "{},{},{}", g(s.theta_deg), g(s.phi_deg), g(s.intensity));
    }
    let mut o = Outcome::new("patch-pattern");
    o.value("p_rad_w", g(pattern.p_rad));
    deliver(&mut o, out, csv)?;
    Ok(o)
}

fn parse_amps(text: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(input(format!("--amps '{text}' must be two comma-separated values")));
    }
    let a = eng::parse_value(parts[0], "V").map_err(input)?;
    let b = eng::parse_value(parts[1], "V").map_err(input)?;
    Ok([a, b])
}

pub fn phase_sweep(
    p: &PatchArgs,
    f: f64,
    dphi: &str,
    amps: &str,
    out: Option<&Path>,
    summary: Option<&Path>,
) -> CliResult {
    // the sweep sets the phase itself; the preset default is irrelevant
    let preset = preset(p, None)?;
    let grid = eng::parse_range(dphi, "deg").map_err(input)?;
    let amps = parse_amps(amps)?;
    let (geom, _) = scenario(preset);
    let points = patch::phase_sweep(&geom, &cavity_options(p), amps, f, &grid)?;
    let mut csv = String::from("dphi_deg,eta,eta_db\n");
    for pt in &points {
        let _ = writeln!(csv, "{},{},{}", g(pt.dphi_deg), g(pt.eta()), g(10.0 * pt.eta().log10()));
    }
    let text = SweepSummary::new(&points)?.describe();
    let mut o = Outcome::new("phase-sweep");
    match summary {
        Some(path) => {
            write_file(path, &text)?;
            o.outputs.push(path.to_path_buf());
        }
        None => o.text = Some(text),
    }
    deliver(&mut o, out, csv)?;
    Ok(o)
}

pub struct MatchArgs {
    pub load: Option<PathBuf>,
    pub load_z: Option<String>,
    pub load_preset: Option<String>,
    pub band: String,
    pub topology: String,
    pub starts: usize,
    pub seed: u64,
    pub points: usize,
    pub bounds: Bounds,
    pub refz: f64,
    pub out: Option<PathBuf>,
}

fn match_load(a: &MatchArgs, band: (f64, f64)) -> Result<LoadProfile> {
    if let Some(path) = &a.load {
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        return if is_csv {
            LoadProfile::from_csv_str(&read_file(path)?)
        } else {
            read_touchstone(path)?.to_load_profile()
        };
    }
    if let Some(z) = &a.load_z {
        let (re, im) = eng::parse_complex(z).map_err(input)?;
        return LoadProfile::constant(Complex::new(re, im), band.0, band.1);
    }
    if let Some(name) = &a.load_preset {
        let preset = Preset::from_name(name, None, None)?;
        let opts = CavityOptions::default();
        let freqs = matching::band_grid(band.0, band.1, a.points)?;
        let z = freqs
            .iter()
            .map(|&f| patch::preset_input_impedance(preset, &opts, f, a.refz))
            .collect::<Result<Vec<_>>>()?;
        return LoadProfile::new(freqs, z);
    }
    Err(input("match-opt needs one of --load, --load-z or --load-preset".into()))
}

pub fn match_opt(a: &MatchArgs) -> CliResult {
    let band = eng::parse_band(&a.band).map_err(input)?;
    let topology = LadderTopology::parse(&a.topology)?;
    let load = match_load(a, band)?;
    let config = OptimizerConfig {
        n_starts: a.starts,
        seed: a.seed,
        band_points: a.points,
        z_ref: a.refz,
        ..OptimizerConfig::default()
    };
    let r = matching::optimize(&topology, &load, band, &a.bounds, &config)?;
    let mut o = Outcome::new("match-opt");
    if let Some(path) = &a.load {
        o.inputs.push(path.clone());
    }
    o.value("topology", &topology);
    for (k, (slot, v)) in topology.slots().iter().zip(&r.values).enumerate() {
        o.value(&format!("element{}", k + 1), format!("{slot} {}", g(*v)));
    }
    o.value("max_s11_db", g(r.max_s11_db));
    o.value("band_below_minus10db_hz", intervals_text(&r.freqs, &r.s11, -10.0));
    o.value("best_start", r.best_start);
    o.value("iterations", r.iterations());
    o.value("converged", r.converged());
    let conv = r.starts.iter().filter(|s| s.converged).count();
    o.value("starts_converged", format!("{conv}/{}", r.starts.len()));
    if !r.converged() {
        o.warnings
            .push("best start hit the iteration limit before converging".into());
    }
    let rows: Vec<(f64, Complex)> = r.freqs.iter().copied().zip(r.s11.iter().copied()).collect();
    deliver(&mut o, a.out.as_deref(), s11_csv(&rows))?;
    Ok(o)
}
