//! Multiport cavity model of a probe-fed rectangular patch.
//!
//! The region under the patch is a cavity with magnetic side walls whose
//! field is expanded in cosine modes. Probe feeds are ribbons of finite
//! width, lumped capacitors are internal ports eliminated by their
//! termination, and the three loss channels (dielectric, conductor,
//! radiation) enter the modal equations so that the power accepted at the
//! ports equals the power accounted for by field integrals.

mod modes;
mod radiation;

pub use modes::{fringe_extension, gauss_legendre, sinc, Mode};
pub use radiation::{FarField, FarFieldSample};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::microstrip::SubstrateSpec;
use crate::network::ScatteringMatrix;
use crate::units::{Complex, EPS0, ETA0, MU0, SIGMA_COPPER};
use radiation::Aperture;

/// Default feed ribbon width, m.
pub const DEFAULT_RIBBON_WIDTH: f64 = 1.0e-3;
/// Default probe radius, m.
pub const DEFAULT_PROBE_RADIUS: f64 = 0.3e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedPort {
    pub x: f64,
    pub y: f64,
    /// Effective ribbon width along x used for modal coupling, m.
    pub ribbon_width: f64,
    pub probe_radius: f64,
}

impl FeedPort {
    pub fn at(x: f64, y: f64) -> Self {
        FeedPort {
            x,
            y,
            ribbon_width: DEFAULT_RIBBON_WIDTH,
            probe_radius: DEFAULT_PROBE_RADIUS,
        }
    }
}

/// Lumped capacitor from the patch to ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedLoad {
    pub x: f64,
    pub y: f64,
    /// Capacitance, F.
    pub capacitance: f64,
    pub ribbon_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGeometry {
    /// Patch extent along x, m.
    pub length: f64,
    /// Patch extent along y, m.
    pub width: f64,
    pub sub: SubstrateSpec,
    pub ports: Vec<FeedPort>,
    pub loads: Vec<LumpedLoad>,
}

impl PatchGeometry {
    pub fn validate(&self) -> Result<()> {
        self.sub.validate()?;
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::domain(format!(
                "patch dimensions must be positive ({} x {})",
                self.length, self.width
            )));
        }
        if self.ports.is_empty() {
            return Err(Error::domain("patch needs at least one feed port"));
        }
        let inside = |x: f64, y: f64| (0.0..=self.length).contains(&x) && (0.0..=self.width).contains(&y);
        for (i, p) in self.ports.iter().enumerate() {
            if !inside(p.x, p.y) {
                return Err(Error::domain(format!(
                    "port {} at ({}, {}) lies outside the patch",
                    i + 1,
                    p.x,
                    p.y
                )));
            }
            if !(p.ribbon_width > 0.0 && p.probe_radius > 0.0) {
                return Err(Error::domain(format!(
                    "port {} needs positive ribbon width and probe radius",
                    i + 1
                )));
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            if !inside(l.x, l.y) {
                return Err(Error::domain(format!(
                    "load {} at ({}, {}) lies outside the patch",
                    i + 1,
                    l.x,
                    l.y
                )));
            }
            if !(l.capacitance > 0.0 && l.ribbon_width > 0.0) {
                return Err(Error::domain(format!(
                    "load {} needs positive capacitance and ribbon width",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Open-circuit source voltages (EMF) driving each port through the
/// source impedance of [`CavityOptions`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSet {
    drives: Vec<Complex>,
}

impl ExcitationSet {
    pub fn new(drives: Vec<Complex>) -> Result<Self> {
        if drives.is_empty() || drives.iter().all(|d| d.norm() == 0.0) {
            return Err(Error::domain("excitation needs at least one nonzero drive"));
        }
        if drives.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("excitation drives must be finite"));
        }
        Ok(ExcitationSet { drives })
    }

    /// Drives from `(magnitude V, phase °)` pairs.
    pub fn from_polar_deg(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(mag, deg)| Complex::from_polar(mag, deg.to_radians()))
                .collect(),
        )
    }

    /// Two-port drive with port 2 leading port 1 by `dphi_deg`.
    pub fn dual(amp1: f64, amp2: f64, dphi_deg: f64) -> Result<Self> {
        Self::from_polar_deg(&[(amp1, 0.0), (amp2, dphi_deg)])
    }

    pub fn drives(&self) -> &[Complex] {
        &self.drives
    }

    /// `phase(port 2) − phase(port 1)` in degrees, if two ports are driven.
    pub fn phase_difference_deg(&self) -> Option<f64> {
        match self.drives.as_slice() {
            [a, b] if a.norm() > 0.0 && b.norm() > 0.0 => Some((b.arg() - a.arg()).to_degrees()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeTruncation {
    pub m_max: usize,
    pub n_max: usize,
}

impl Default for ModeTruncation {
    fn default() -> Self {
        ModeTruncation { m_max: 12, n_max: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModeSet {
    /// All `(m, n)` with `m ≤ m_max`, `n ≤ n_max`, the static `(0, 0)` term included.
    Truncated(ModeTruncation),
    /// An explicit list of modes.
    Explicit(Vec<(usize, usize)>),
}

impl ModeSet {
    fn pairs(&self) -> Result<Vec<(usize, usize)>> {
        match self {
            ModeSet::Truncated(t) => {
                if t.m_max < 1 || t.n_max < 1 {
                    return Err(Error::domain("mode truncation needs M, N >= 1"));
                }
                Ok((0..=t.m_max).flat_map(|m| (0..=t.n_max).map(move |n| (m, n))).collect())
            }
            ModeSet::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::domain("explicit mode list is empty"));
                }
                Ok(list.clone())
            }
        }
    }
}

/// How loss enters the modal equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossModel {
    /// Dielectric loss on every mode, conductor loss scaled by each mode's
    /// wavenumber, radiation through the modal radiation matrix. Power
    /// accepted at the ports equals the field-integrated losses.
    Modal,
    /// One effective loss tangent `δ_eff` for all modes (see
    /// [`effective_loss`]).
    Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavityOptions {
    pub modes: ModeSet,
    pub loss_model: LossModel,
    /// Apply the open-end extension to both patch dimensions.
    pub fringe_extension: bool,
    /// Add the series probe reactance to each port.
    pub probe_reactance: bool,
    /// Include radiation loss.
    pub radiation: bool,
    /// Source impedance of every port drive, Ω.
    pub source_impedance: f64,
}

impl Default for CavityOptions {
    fn default() -> Self {
        CavityOptions {
            modes: ModeSet::Truncated(ModeTruncation::default()),
            loss_model: LossModel::Modal,
            fringe_extension: true,
            probe_reactance: true,
            radiation: true,
            source_impedance: 50.0,
        }
    }
}

impl CavityOptions {
    pub fn with_truncation(m_max: usize, n_max: usize) -> Self {
        CavityOptions {
            modes: ModeSet::Truncated(ModeTruncation { m_max, n_max }),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    pub p_rad: f64,
    pub p_diel: f64,
    pub p_cond: f64,
    /// Power accepted at the ports, `½ Re Σ V·conj(I)`.
    pub p_in: f64,
    /// Radiation efficiency `p_rad / (p_rad + p_diel + p_cond)`.
    pub eta: f64,
}

impl PowerBudget {
    pub fn p_loss_total(&self) -> f64 {
        self.p_rad + self.p_diel + self.p_cond
    }

    /// `|p_in − Σ p| / p_in`.
    pub fn closure_error(&self) -> f64 {
        ((self.p_in - self.p_loss_total()) / self.p_in).abs()
    }
}

/// Sampled surface current on the patch, row-major with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentGrid {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub jx: Vec<Complex>,
    pub jy: Vec<Complex>,
}

impl CurrentGrid {
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        let k = j * self.nx + i;
        (self.jx[k].norm_sqr() + self.jy[k].norm_sqr()).sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| self.magnitude(i, j))
            .fold(0.0, f64::max)
    }
}

/// Port currents, voltages and modal amplitudes of one drive state.
/// Every field is linear in the source voltages.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveState {
    pub port_currents: DVector<Complex>,
    /// Terminal voltages at the ports, V.
    pub port_voltages: DVector<Complex>,
    pub load_currents: DVector<Complex>,
    /// Modal amplitudes `a_p` with `E_z = −Σ a_p ψ_p`, V/m.
    pub modal: DVector<Complex>,
}

impl DriveState {
    /// `Σ wᵢ·stateᵢ`.
    pub fn combine(states: &[(&DriveState, Complex)]) -> DriveState {
        let (first, w0) = states[0];
        let mut out = DriveState {
            port_currents: first.port_currents.map(|v| v * w0),
            port_voltages: first.port_voltages.map(|v| v * w0),
            load_currents: first.load_currents.map(|v| v * w0),
            modal: first.modal.map(|v| v * w0),
        };
        for &(s, w) in &states[1..] {
            out.port_currents += s.port_currents.map(|v| v * w);
            out.port_voltages += s.port_voltages.map(|v| v * w);
            out.load_currents += s.load_currents.map(|v| v * w);
            out.modal += s.modal.map(|v| v * w);
        }
        out
    }
}

/// Fringe-extended cavity dimensions and the offset of the physical patch
/// inside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityDims {
    pub l: f64,
    pub w: f64,
    pub dx: f64,
    pub dy: f64,
}

pub fn cavity_dims(geom: &PatchGeometry, fringe: bool) -> CavityDims {
    if !fringe {
        return CavityDims {
            l: geom.length,
            w: geom.width,
            dx: 0.0,
            dy: 0.0,
        };
    }
    let h = geom.sub.h;
    let dx = fringe_extension(geom.width, h, geom.sub.er);
    let dy = fringe_extension(geom.length, h, geom.sub.er);
    CavityDims {
        l: geom.length + 2.0 * dx,
        w: geom.width + 2.0 * dy,
        dx,
        dy,
    }
}

/// Modes of the (extended) cavity with their wavenumbers.
pub fn mode_wavenumbers(geom: &PatchGeometry, opts: &CavityOptions) -> Result<Vec<Mode>> {
    geom.validate()?;
    let dims = cavity_dims(geom, opts.fringe_extension);
    Ok(opts
        .modes
        .pairs()?
        .into_iter()
        .map(|(m, n)| Mode::new(m, n, dims.l, dims.w))
        .collect())
}

/// Series reactance of a probe of radius `r0` through a substrate of
/// thickness `h`.
pub fn probe_reactance(f: f64, h: f64, r0: f64) -> f64 {
    let k0 = 2.0 * PI * f / crate::units::C0;
    ETA0 * k0 * h / (2.0 * PI) * (2.0 / (k0 * r0 * 1.781)).ln()
}

fn skin_depth(f: f64, sigma: f64) -> f64 {
    if sigma.is_infinite() {
        0.0
    } else {
        (2.0 / (2.0 * PI * f * MU0 * sigma)).sqrt()
    }
}

/// `1/Q_c = δ_skin / h`.
fn inv_q_conductor(f: f64, sub: &SubstrateSpec) -> f64 {
    skin_depth(f, sub.sigma) / sub.h
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("frequency must be positive, got {f}")))
    }
}

fn dominant_mode(modes: &[Mode]) -> Option<Mode> {
    modes
        .iter()
        .filter(|m| m.k2 > 0.0)
        .min_by(|a, b| a.k2.total_cmp(&b.k2))
        .copied()
}

/// Breakdown of the effective loss tangent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub tan_d: f64,
    pub inv_q_cond: f64,
    pub inv_q_rad: f64,
}

impl LossBreakdown {
    pub fn delta_eff(&self) -> f64 {
        self.tan_d + self.inv_q_cond + self.inv_q_rad
    }

    pub fn q_total(&self) -> f64 {
        1.0 / self.delta_eff()
    }
}

fn loss_breakdown(
    geom: &PatchGeometry,
    opts: &CavityOptions,
    modes: &[Mode],
    ap: &Aperture,
    f: f64,
) -> Result<LossBreakdown> {
    let sub = &geom.sub;
    let inv_q_cond = inv_q_conductor(f, sub);
    let mut inv_q_rad = 0.0;
    if opts.radiation {
        if let Some(dom) = dominant_mode(modes) {
            // Q_rad = ω·2W_e / P_rad for the dominant mode field at f. The
            // ratio does not depend on the mode amplitude, so the update
            // from the initial δ = tan_d + 1/Q_c is already the fixed point.
            let g = ap.radiation_matrix(&[dom])[(0, 0)];
            let omega = 2.0 * PI * f;
            inv_q_rad = g / (omega * EPS0 * sub.er * sub.h);
        }
    }
    let b = LossBreakdown {
        tan_d: sub.tan_d,
        inv_q_cond,
        inv_q_rad,
    };
    if !(b.delta_eff() > 0.0) {
        return Err(Error::domain(
            "all loss channels are off (tan_d = 0, perfect conductor, no radiation)",
        ));
    }
    Ok(b)
}

/// Effective loss tangent `δ_eff = tan_d + 1/Q_c + 1/Q_rad` of the cavity.
pub fn effective_loss(geom: &PatchGeometry, opts: &CavityOptions, f: f64) -> Result<LossBreakdown> {
    check_frequency(f)?;
    let modes = mode_wavenumbers(geom, opts)?;
    let dims = cavity_dims(geom, opts.fringe_extension);
    let ap = aperture(geom, &modes, &dims, f);
    loss_breakdown(geom, opts, &modes, &ap, f)
}

fn aperture(geom: &PatchGeometry, modes: &[Mode], dims: &CavityDims, f: f64) -> Aperture {
    Aperture {
        l: dims.l,
        w: dims.w,
        h: geom.sub.h,
        k0: 2.0 * PI * f / crate::units::C0,
        m_max: modes.iter().map(|m| m.m).max().unwrap_or(0),
        n_max: modes.iter().map(|m| m.n).max().unwrap_or(0),
    }
}

fn symmetrize(m: &mut DMatrix<Complex>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Solved cavity at one frequency.
#[derive(Debug, Clone)]
pub struct CavitySolution {
    pub f: f64,
    pub dims: CavityDims,
    pub modes: Vec<Mode>,
    pub losses: LossBreakdown,
    geom: PatchGeometry,
    opts: CavityOptions,
    ap: Aperture,
    /// Radiation form with `P_rad = ½ aᴴ G a` (zero when radiation is off).
    radiation: DMatrix<f64>,
    /// `jωμ0·A⁻¹Φ`: modal amplitudes per unit current at each port and load.
    response: DMatrix<Complex>,
    /// Cavity impedance over ports and loads, before elimination.
    z_all: DMatrix<Complex>,
    /// Port impedance matrix with probe reactance and loads eliminated.
    z_ports: DMatrix<Complex>,
}

impl CavitySolution {
    pub fn new(geom: &PatchGeometry, opts: &CavityOptions, f: f64) -> Result<Self> {
        check_frequency(f)?;
        let modes = mode_wavenumbers(geom, opts)?;
        let dims = cavity_dims(geom, opts.fringe_extension);
        let ap = aperture(geom, &modes, &dims, f);
        let losses = loss_breakdown(geom, opts, &modes, &ap, f)?;
        let sub = &geom.sub;
        let omega = 2.0 * PI * f;
        let k0 = ap.k0;
        let kd2 = k0 * k0 * sub.er;
        let j = Complex::i();

        let nm = modes.len();
        let (mut sys, radiation) = match opts.loss_model {
            LossModel::Modal => {
                let rad = if opts.radiation {
                    ap.radiation_matrix(&modes)
                } else {
                    DMatrix::zeros(nm, nm)
                };
                let coupling = omega * MU0 / sub.h;
                let mut a = rad.map(|g| j * coupling * g);
                for (p, mode) in modes.iter().enumerate() {
                    a[(p, p)] += Complex::new(mode.k2 - kd2, kd2 * sub.tan_d + mode.k2 * losses.inv_q_cond);
                }
                (a, rad)
            }
            LossModel::Scalar => {
                let delta = losses.delta_eff();
                let mut a = DMatrix::zeros(nm, nm);
                for (p, mode) in modes.iter().enumerate() {
                    a[(p, p)] = Complex::new(mode.k2 - kd2, kd2 * delta);
                }
                let rad = if opts.radiation {
                    ap.radiation_matrix(&modes)
                } else {
                    DMatrix::zeros(nm, nm)
                };
                (a, rad)
            }
        };

        // coupling of every port and load to every mode: ψ(r)·sinc(mπ·width/2L)
        let taps: Vec<(f64, f64, f64)> = geom
            .ports
            .iter()
            .map(|p| (p.x, p.y, p.ribbon_width))
            .chain(geom.loads.iter().map(|l| (l.x, l.y, l.ribbon_width)))
            .collect();
        let phi = DMatrix::from_fn(nm, taps.len(), |p, t| {
            let (x, y, rw) = taps[t];
            let mode = &modes[p];
            let g = sinc(mode.m as f64 * PI * rw / (2.0 * dims.l));
            Complex::new(mode.psi(x + dims.dx, y + dims.dy, dims.l, dims.w) * g, 0.0)
        });

        let lu = std::mem::replace(&mut sys, DMatrix::zeros(0, 0)).lu();
        let solved = lu
            .solve(&phi)
            .ok_or_else(|| Error::numeric("modal system is singular (real pole); enable a nonzero loss channel"))?;
        if solved.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(
                "modal system is singular (real pole); enable a nonzero loss channel",
            ));
        }
        let response = solved.map(|v| v * j * omega * MU0);
        let mut z_all = phi.transpose() * &response * Complex::new(sub.h, 0.0);
        symmetrize(&mut z_all);

        let np = geom.ports.len();
        let nl = geom.loads.len();
        let mut zpp = z_all.view((0, 0), (np, np)).into_owned();
        if opts.probe_reactance {
            for (i, p) in geom.ports.iter().enumerate() {
                zpp[(i, i)] += j * probe_reactance(f, sub.h, p.probe_radius);
            }
        }
        let z_ports = if nl == 0 {
            zpp
        } else {
            let zpl = z_all.view((0, np), (np, nl)).into_owned();
            let mut zll = z_all.view((np, np), (nl, nl)).into_owned();
            for (k, l) in geom.loads.iter().enumerate() {
                zll[(k, k)] += -j / (omega * l.capacitance);
            }
            let x = zll
                .lu()
                .solve(&zpl.transpose())
                .ok_or_else(|| Error::numeric("load elimination is singular"))?;
            let mut z = zpp - zpl * x;
            symmetrize(&mut z);
            z
        };

        Ok(CavitySolution {
            f,
            dims,
            modes,
            losses,
            geom: geom.clone(),
            opts: opts.clone(),
            ap,
            radiation,
            response,
            z_all,
            z_ports,
        })
    }

    pub fn geometry(&self) -> &PatchGeometry {
        &self.geom
    }

    pub fn options(&self) -> &CavityOptions {
        &self.opts
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    /// Port impedance matrix, Ω (probe reactance added, loads eliminated).
    pub fn impedance_matrix(&self) -> &DMatrix<Complex> {
        &self.z_ports
    }

    /// Cavity impedance over ports then loads, before elimination.
    pub fn full_impedance_matrix(&self) -> &DMatrix<Complex> {
        &self.z_all
    }

    pub fn radiation_matrix(&self) -> &DMatrix<f64> {
        &self.radiation
    }

    pub fn scattering(&self, z_ref: f64) -> Result<ScatteringMatrix> {
        ScatteringMatrix::from_z(&self.z_ports, z_ref)
    }

    /// Solves port and load currents for source voltages `emf` behind the
    /// configured source impedance.
    pub fn drive(&self, emf: &[Complex]) -> Result<DriveState> {
        let np = self.geom.ports.len();
        let nl = self.geom.loads.len();
        if emf.len() != np {
            return Err(Error::domain(format!(
                "excitation has {} drives for {} ports",
                emf.len(),
                np
            )));
        }
        let j = Complex::i();
        let omega = self.omega();
        let zs = self.opts.source_impedance;
        let mut sys = self.z_all.clone();
        for (i, p) in self.geom.ports.iter().enumerate() {
            let xp = if self.opts.probe_reactance {
                probe_reactance(self.f, self.geom.sub.h, p.probe_radius)
            } else {
                0.0
            };
            sys[(i, i)] += Complex::new(zs, xp);
        }
        for (k, l) in self.geom.loads.iter().enumerate() {
            sys[(np + k, np + k)] += -j / (omega * l.capacitance);
        }
        let mut rhs = DVector::zeros(np + nl);
        for (i, e) in emf.iter().enumerate() {
            rhs[i] = *e;
        }
        let currents = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::numeric("port/load current system is singular"))?;
        let port_currents = currents.rows(0, np).into_owned();
        let load_currents = currents.rows(np, nl).into_owned();
        let port_voltages = DVector::from_iterator(np, emf.iter().zip(port_currents.iter()).map(|(e, i)| e - i * zs));
        let modal = &self.response * &currents;
        Ok(DriveState {
            port_currents,
            port_voltages,
            load_currents,
            modal,
        })
    }

    pub fn excite(&self, exc: &ExcitationSet) -> Result<DriveState> {
        self.drive(exc.drives())
    }

    /// Cavity field `E_z` at physical patch coordinates.
    pub fn field(&self, state: &DriveState, x: f64, y: f64) -> Complex {
        let d = &self.dims;
        -self
            .modes
            .iter()
            .zip(state.modal.iter())
            .map(|(m, a)| a * m.psi(x + d.dx, y + d.dy, d.l, d.w))
            .sum::<Complex>()
    }

    /// Surface current `J = ẑ × H = (j/ωμ0)·∇E_z` at physical patch coordinates.
    pub fn surface_current(&self, state: &DriveState, x: f64, y: f64) -> (Complex, Complex) {
        let d = &self.dims;
        let (mut gx, mut gy) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
        for (m, a) in self.modes.iter().zip(state.modal.iter()) {
            let (px, py) = m.grad_psi(x + d.dx, y + d.dy, d.l, d.w);
            gx -= a * px;
            gy -= a * py;
        }
        let s = Complex::i() / (self.omega() * MU0);
        (gx * s, gy * s)
    }

    /// Surface current sampled on an `nx × ny` grid spanning the patch.
    pub fn surface_current_grid(&self, state: &DriveState, nx: usize, ny: usize) -> Result<CurrentGrid> {
        if nx < 2 || ny < 2 {
            return Err(Error::domain(format!(
                "current grid must be at least 2x2, got {nx}x{ny}"
            )));
        }
        let x: Vec<f64> = (0..nx).map(|i| self.geom.length * i as f64 / (nx - 1) as f64).collect();
        let y: Vec<f64> = (0..ny).map(|j| self.geom.width * j as f64 / (ny - 1) as f64).collect();
        let mut jx = Vec::with_capacity(nx * ny);
        let mut jy = Vec::with_capacity(nx * ny);
        for &yy in &y {
            for &xx in &x {
                let (a, b) = self.surface_current(state, xx, yy);
                jx.push(a);
                jy.push(b);
            }
        }
        Ok(CurrentGrid { nx, ny, x, y, jx, jy })
    }

    pub fn far_field(&self, state: &DriveState) -> FarField {
        self.far_field_from_modal(&state.modal)
    }

    /// Far field of arbitrary modal amplitudes (same ordering as `modes`).
    pub fn far_field_from_modal(&self, modal: &DVector<Complex>) -> FarField {
        FarField::new(self.ap.clone(), &self.modes, modal)
    }

    /// Power bookkeeping of one drive state.
    ///
    /// Dielectric and conductor losses are integrated over the cavity on a
    /// midpoint grid; radiated power is the modal radiation form.
    pub fn power_budget(&self, state: &DriveState) -> Result<PowerBudget> {
        if state.modal.iter().all(|a| a.norm() == 0.0) {
            return Err(Error::domain("power budget needs a nonzero excitation"));
        }
        let sub = &self.geom.sub;
        let d = &self.dims;
        let omega = self.omega();
        let max_index = self.modes.iter().map(|m| m.m.max(m.n)).max().unwrap_or(0);
        let nq = 4 * (max_index + 1);
        let (dxq, dyq) = (d.l / nq as f64, d.w / nq as f64);
        let mut e2 = 0.0;
        let mut g2 = 0.0;
        for iy in 0..nq {
            let y = (iy as f64 + 0.5) * dyq;
            for ix in 0..nq {
                let x = (ix as f64 + 0.5) * dxq;
                let (mut e, mut gx, mut gy) = (Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0));
                for (m, a) in self.modes.iter().zip(state.modal.iter()) {
                    e += a * m.psi(x, y, d.l, d.w);
                    let (px, py) = m.grad_psi(x, y, d.l, d.w);
                    gx += a * px;
                    gy += a * py;
                }
                e2 += e.norm_sqr();
                g2 += gx.norm_sqr() + gy.norm_sqr();
            }
        }
        let da = dxq * dyq;
        let p_diel = 0.5 * omega * EPS0 * sub.er * sub.tan_d * sub.h * e2 * da;
        let rs = sub.surface_resistance(self.f);
        // |H_t|² = |∇E_z|²/(ωμ0)², both conductor faces
        let p_cond = rs * g2 * da / (omega * MU0).powi(2);
        let a = &state.modal;
        let ga = self.radiation.map(|g| Complex::new(g, 0.0)) * a;
        let p_rad = if self.opts.radiation {
            0.5 * a.dotc(&ga).re.max(0.0)
        } else {
            0.0
        };
        let p_in = 0.5
            * state
                .port_voltages
                .iter()
                .zip(state.port_currents.iter())
                .map(|(v, i)| (v * i.conj()).re)
                .sum::<f64>();
        let total = p_rad + p_diel + p_cond;
        if !(total > 0.0) {
            return Err(Error::domain(
                "no loss channel dissipates power (lossless closed cavity)",
            ));
        }
        Ok(PowerBudget {
            p_rad,
            p_diel,
            p_cond,
            p_in,
            eta: p_rad / total,
        })
    }
}

/// Port impedance matrix of `geom` at `f`.
pub fn impedance_matrix(geom: &PatchGeometry, opts: &CavityOptions, f: f64) -> Result<DMatrix<Complex>> {
    Ok(CavitySolution::new(geom, opts, f)?.z_ports)
}

/// Relative change `|Z11(to) − Z11(from)| / |Z11(from)|` between two mode
/// truncations.
pub fn truncation_delta(
    geom: &PatchGeometry,
    opts: &CavityOptions,
    f: f64,
    from: ModeTruncation,
    to: ModeTruncation,
) -> Result<f64> {
    let with = |t: ModeTruncation| CavityOptions {
        modes: ModeSet::Truncated(t),
        ..opts.clone()
    };
    let a = impedance_matrix(geom, &with(from), f)?[(0, 0)];
    let b = impedance_matrix(geom, &with(to), f)?[(0, 0)];
    Ok((b - a).norm() / a.norm())
}

pub fn surface_current_grid(
    geom: &PatchGeometry,
    opts: &CavityOptions,
    exc: &ExcitationSet,
    f: f64,
    nx: usize,
    ny: usize,
) -> Result<CurrentGrid> {
    let sol = CavitySolution::new(geom, opts, f)?;
    let state = sol.excite(exc)?;
    sol.surface_current_grid(&state, nx, ny)
}

pub fn power_budget(geom: &PatchGeometry, opts: &CavityOptions, exc: &ExcitationSet, f: f64) -> Result<PowerBudget> {
    let sol = CavitySolution::new(geom, opts, f)?;
    let state = sol.excite(exc)?;
    sol.power_budget(&state)
}

/// Principal pattern cuts and the full upper hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternCut {
    /// φ = 0°/180°, θ from −90° to 90°.
    Xoz,
    /// φ = 90°/270°, θ from −90° to 90°.
    Yoz,
    /// θ = 90°, φ from 0° to 359°.
    Xoy,
    /// θ 0–90°, φ 0–359° in 1° steps.
    Hemisphere,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSample {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub samples: Vec<PatternSample>,
    /// Hemisphere-integrated radiated power, W.
    pub p_rad: f64,
}

/// Radiation intensity on a cut in 1° steps plus hemisphere-integrated power.
pub fn far_field_pattern(sol: &CavitySolution, state: &DriveState, cut: PatternCut) -> Result<Pattern> {
    if state.modal.iter().all(|a| a.norm() == 0.0) {
        return Err(Error::domain("far field needs a nonzero excitation"));
    }
    let ff = sol.far_field(state);
    let mut samples = Vec::new();
    let mut push = |theta_deg: f64, phi_deg: f64| {
        samples.push(PatternSample {
            theta_deg,
            phi_deg,
            intensity: ff.intensity(theta_deg.to_radians(), phi_deg.to_radians()),
        });
    };
    match cut {
        PatternCut::Xoz | PatternCut::Yoz => {
            let phi0 = if cut == PatternCut::Xoz { 0.0 } else { 90.0 };
            for t in -90..=90 {
                let t = t as f64;
                // negative θ is the φ + 180° half of the plane
                if t < 0.0 {
                    push(t, phi0 + 180.0);
                } else {
                    push(t, phi0);
                }
            }
            for s in samples.iter_mut() {
                if s.theta_deg < 0.0 {
                    s.intensity = ff.intensity((-s.theta_deg).to_radians(), s.phi_deg.to_radians());
                }
            }
        }
        PatternCut::Xoy => {
            for p in 0..360 {
                push(90.0, p as f64);
            }
        }
        PatternCut::Hemisphere => {
            for t in 0..=90 {
                for p in 0..360 {
                    push(t as f64, p as f64);
                }
            }
        }
    }
    Ok(Pattern {
        samples,
        p_rad: ff.hemisphere_power(),
    })
}

/// One point of a feed phase sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub dphi_deg: f64,
    pub budget: PowerBudget,
}

impl SweepPoint {
    pub fn eta(&self) -> f64 {
        self.budget.eta
    }
}

/// Radiation efficiency versus the phase of port 2 relative to port 1.
pub fn phase_sweep(
    geom: &PatchGeometry,
    opts: &CavityOptions,
    amplitudes: [f64; 2],
    f: f64,
    dphi_grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if geom.ports.len() != 2 {
        return Err(Error::domain(format!(
            "phase sweep needs exactly two ports, geometry has {}",
            geom.ports.len()
        )));
    }
    if amplitudes.iter().all(|a| *a == 0.0) {
        return Err(Error::domain("phase sweep needs a nonzero drive amplitude"));
    }
    let sol = CavitySolution::new(geom, opts, f)?;
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let s1 = sol.drive(&[one, zero])?;
    let s2 = sol.drive(&[zero, one])?;
    dphi_grid
        .iter()
        .map(|&dphi| {
            let w2 = Complex::from_polar(amplitudes[1], dphi.to_radians());
            let state = DriveState::combine(&[(&s1, Complex::new(amplitudes[0], 0.0)), (&s2, w2)]);
            Ok(SweepPoint {
                dphi_deg: dphi,
                budget: sol.power_budget(&state)?,
            })
        })
        .collect()
}

/// Extremes and windowed means of a phase sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub argmax_deg: f64,
    pub eta_max: f64,
    pub argmin_deg: f64,
    pub eta_min: f64,
    /// `10·log10(eta_max / eta_min)`.
    pub variation_db: f64,
    /// Mean efficiency in dB over 0° ≤ Δφ ≤ 60°, if sampled.
    pub low_window_db: Option<f64>,
    /// Mean efficiency in dB over 80° ≤ Δφ ≤ 180°, if sampled.
    pub high_window_db: Option<f64>,
}

impl SweepSummary {
    pub fn new(points: &[SweepPoint]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::domain("phase sweep summary needs at least one point"))?;
        let (mut hi, mut lo) = (first, first);
        for p in points {
            if p.eta() > hi.eta() {
                hi = p;
            }
            if p.eta() < lo.eta() {
                lo = p;
            }
        }
        let window = |a: f64, b: f64| {
            let sel: Vec<f64> = points
                .iter()
                .filter(|p| p.dphi_deg >= a && p.dphi_deg <= b)
                .map(|p| p.eta())
                .collect();
            (!sel.is_empty()).then(|| 10.0 * (sel.iter().sum::<f64>() / sel.len() as f64).log10())
        };
        Ok(SweepSummary {
            argmax_deg: hi.dphi_deg,
            eta_max: hi.eta(),
            argmin_deg: lo.dphi_deg,
            eta_min: lo.eta(),
            variation_db: 10.0 * (hi.eta() / lo.eta()).log10(),
            low_window_db: window(0.0, 60.0),
            high_window_db: window(80.0, 180.0),
        })
    }

    /// Whether the 80°–180° window radiates more efficiently than 0°–60°.
    pub fn high_window_wins(&self) -> Option<bool> {
        Some(self.high_window_db? > self.low_window_db?)
    }

    /// Plain-text summary lines.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "max eta {:.4} ({:.2} dB) at dphi = {} deg\nmin eta {:.4} ({:.2} dB) at dphi = {} deg\nvariation {:.3} dB\n",
            self.eta_max,
            10.0 * self.eta_max.log10(),
            self.argmax_deg,
            self.eta_min,
            10.0 * self.eta_min.log10(),
            self.argmin_deg,
            self.variation_db
        );
        if let (Some(lo), Some(hi)) = (self.low_window_db, self.high_window_db) {
            let verdict = if hi > lo {
                "rises from the low window to the high window"
            } else {
                "does not rise from the low window to the high window"
            };
            out.push_str(&format!(
                "mean eta 0-60 deg {lo:.2} dB, 80-180 deg {hi:.2} dB ({:+.2} dB); efficiency {verdict}\n",
                hi - lo
            ));
        }
        out
    }
}

/// Design-process configurations of the earbud patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Single feed near a corner.
    AntI,
    /// Single feed at the middle of the lower edge.
    AntII,
    /// Both feeds, equal amplitude, port 2 leading by `dphi_deg`.
    AntIII { dphi_deg: f64 },
    /// As `AntIII` with a corner capacitor `cm` (F) to ground.
    AntIV { dphi_deg: f64, cm: f64 },
}

pub const PATCH_SIDE: f64 = 11.5e-3;
/// Default corner capacitor, F. Other documented values: 1.4 pF, 1.0 pF.
pub const DEFAULT_CM: f64 = 1.1e-12;

/// FR-4 stack of the patch layer: εr 4.4, tanδ 0.025, 3 mm, copper.
pub fn fr4_patch_substrate() -> SubstrateSpec {
    SubstrateSpec {
        er: 4.4,
        tan_d: 0.025,
        h: 3.0e-3,
        sigma: SIGMA_COPPER,
    }
}

/// F4B stack of the feed layer: εr 3.0, tanδ 0.0015, 0.6 mm, copper.
pub fn f4b_feed_substrate() -> SubstrateSpec {
    SubstrateSpec {
        er: 3.0,
        tan_d: 0.0015,
        h: 0.6e-3,
        sigma: SIGMA_COPPER,
    }
}

/// Corner feed position (0.1 L, 0.1 W).
pub fn corner_feed() -> FeedPort {
    FeedPort::at(0.1 * PATCH_SIDE, 0.1 * PATCH_SIDE)
}

/// Lower-edge midpoint feed position (0.5 L, 0.05 W).
pub fn edge_feed() -> FeedPort {
    FeedPort::at(0.5 * PATCH_SIDE, 0.05 * PATCH_SIDE)
}

/// Geometry and drive of a preset. Dual-feed drives split 1 V between the
/// two ports as an ideal 3 dB divider would.
pub fn scenario(preset: Preset) -> (PatchGeometry, ExcitationSet) {
    let base = |ports: Vec<FeedPort>, loads: Vec<LumpedLoad>| PatchGeometry {
        length: PATCH_SIDE,
        width: PATCH_SIDE,
        sub: fr4_patch_substrate(),
        ports,
        loads,
    };
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let dual = |dphi: f64| ExcitationSet::dual(half, half, dphi).expect("nonzero drive");
    match preset {
        Preset::AntI => (
            base(vec![corner_feed()], vec![]),
            ExcitationSet::new(vec![Complex::new(1.0, 0.0)]).expect("nonzero drive"),
        ),
        Preset::AntII => (
            base(vec![edge_feed()], vec![]),
            ExcitationSet::new(vec![Complex::new(1.0, 0.0)]).expect("nonzero drive"),
        ),
        Preset::AntIII { dphi_deg } => (base(vec![corner_feed(), edge_feed()], vec![]), dual(dphi_deg)),
        Preset::AntIV { dphi_deg, cm } => (
            base(
                vec![corner_feed(), edge_feed()],
                vec![LumpedLoad {
                    x: 0.95 * PATCH_SIDE,
                    y: 0.95 * PATCH_SIDE,
                    capacitance: cm,
                    ribbon_width: DEFAULT_RIBBON_WIDTH,
                }],
            ),
            dual(dphi_deg),
        ),
    }
}

impl Preset {
    /// Parses `ant1`, `ant2`, `ant3`, `ant4` with optional phase (degrees)
    /// and corner capacitance (F) overrides.
    pub fn from_name(name: &str, dphi_deg: Option<f64>, cm: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ant1" | "anti" => Ok(Preset::AntI),
            "ant2" | "antii" => Ok(Preset::AntII),
            "ant3" | "antiii" => Ok(Preset::AntIII {
                dphi_deg: dphi_deg.unwrap_or(90.0),
            }),
            "ant4" | "antiv" => Ok(Preset::AntIV {
                dphi_deg: dphi_deg.unwrap_or(82.0),
                cm: cm.unwrap_or(DEFAULT_CM),
            }),
            other => Err(Error::domain(format!(
                "unknown patch preset '{other}' (expected ant1, ant2, ant3 or ant4)"
            ))),
        }
    }
}

/// Input impedance seen through an ideal, matched, reciprocal divider whose
/// port-k transmission is `t_k`: `Γ = tᵀ S t`. With one port this is Z11.
pub fn divider_input_impedance(sol: &CavitySolution, weights: &[Complex], z_ref: f64) -> Result<Complex> {
    let s = sol.scattering(z_ref)?;
    if weights.len() != s.ports() {
        return Err(Error::domain(format!(
            "{} divider weights for {} ports",
            weights.len(),
            s.ports()
        )));
    }
    let norm: f64 = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::domain("divider weights are all zero"));
    }
    let t: Vec<Complex> = weights.iter().map(|w| w / norm).collect();
    let mut gamma = Complex::new(0.0, 0.0);
    for (i, ti) in t.iter().enumerate() {
        for (k, tk) in t.iter().enumerate() {
            gamma += ti * s.s(i, k) * tk;
        }
    }
    let one = Complex::new(1.0, 0.0);
    if (one - gamma).norm() < 1e-15 {
        return Err(Error::numeric("divider input reflection is 1 (open circuit)"));
    }
    Ok((one + gamma) / (one - gamma) * z_ref)
}

/// One-port input impedance of a preset at `f`.
pub fn preset_input_impedance(preset: Preset, opts: &CavityOptions, f: f64, z_ref: f64) -> Result<Complex> {
    let (geom, exc) = scenario(preset);
    let sol = CavitySolution::new(&geom, opts, f)?;
    divider_input_impedance(&sol, exc.drives(), z_ref)
}

#[cfg(test)]
mod tests;
