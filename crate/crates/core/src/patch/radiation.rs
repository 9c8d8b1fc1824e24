//! Far-field radiation of the cavity's edge apertures.
//!
//! Each wall of height `h` carries the magnetic line current
//! `2·h·E_z·(ẑ × n̂)`; the factor two is the ground-plane image. For a cosine
//! mode the edge integrals have closed forms, so the vector radiation
//! integrals `Lθ, Lφ` of any modal superposition are cheap to evaluate.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::modes::{gauss_legendre, sinc, Mode};
use crate::units::{Complex, ETA0};

/// `∫₀^len cos(mπx/len)·e^{jux} dx`.
fn edge_integral(m: usize, u: f64, len: f64) -> Complex {
    let e = |q: f64| Complex::from_polar(len * sinc(q * len / 2.0), q * len / 2.0);
    if m == 0 {
        e(u)
    } else {
        let km = m as f64 * PI / len;
        (e(u + km) + e(u - km)) * 0.5
    }
}

/// Geometry and wavenumber needed to evaluate far fields.
#[derive(Debug, Clone)]
pub(crate) struct Aperture {
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub k0: f64,
    pub m_max: usize,
    pub n_max: usize,
}

/// Per-direction factors shared by every mode.
struct DirectionFactors {
    /// `A_m(u)·Px[parity]`, indexed `[m][parity of n]`.
    xa: Vec<[Complex; 2]>,
    /// `B_n(v)·Qy[parity]`, indexed `[n][parity of m]`.
    yb: Vec<[Complex; 2]>,
    cxx: f64,
    cyy: f64,
    cxy: f64,
    cos_t: f64,
    sin_p: f64,
    cos_p: f64,
}

impl Aperture {
    fn factors(&self, theta: f64, phi: f64) -> DirectionFactors {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let u = self.k0 * st * cp;
        let v = self.k0 * st * sp;
        let ey = Complex::from_polar(1.0, v * self.w);
        let ex = Complex::from_polar(1.0, u * self.l);
        let one = Complex::new(1.0, 0.0);
        // y-walls: n even -> 1 - e^{jvW}, n odd -> 1 + e^{jvW}
        let px = [one - ey, one + ey];
        // x-walls: m even -> e^{juL} - 1, m odd -> -e^{juL} - 1
        let qy = [ex - one, -ex - one];
        let xa = (0..=self.m_max)
            .map(|m| {
                let a = edge_integral(m, u, self.l);
                [a * px[0], a * px[1]]
            })
            .collect();
        let yb = (0..=self.n_max)
            .map(|n| {
                let b = edge_integral(n, v, self.w);
                [b * qy[0], b * qy[1]]
            })
            .collect();
        DirectionFactors {
            xa,
            yb,
            cxx: ct * ct * cp * cp + sp * sp,
            cyy: ct * ct * sp * sp + cp * cp,
            cxy: -st * st * sp * cp,
            cos_t: ct,
            sin_p: sp,
            cos_p: cp,
        }
    }

    /// `U = k0²/(32π²η0)·(|Lθ|² + |Lφ|²)` scale factor.
    fn intensity_scale(&self) -> f64 {
        self.k0 * self.k0 / (32.0 * PI * PI * ETA0)
    }

    /// Hermitian radiation form `G` with `P_rad = ½ aᴴ G a` for modal
    /// amplitudes `a`, integrated by Gauss–Legendre in θ and the periodic
    /// trapezoid rule in φ. Returned as its (symmetric) real part; the
    /// imaginary part cancels between φ and φ + π.
    pub fn radiation_matrix(&self, modes: &[Mode]) -> DMatrix<f64> {
        let nm = self.m_max + 1;
        let nn = self.n_max + 1;
        let size = self.k0 * (self.l + self.w);
        let n_theta = 24 + 4 * size.ceil() as usize;
        let n_phi = 2 * n_theta;
        let (gx, gw) = gauss_legendre(n_theta);

        let mut txx = vec![Complex::new(0.0, 0.0); (2 * nm) * (2 * nm)];
        let mut tyy = vec![Complex::new(0.0, 0.0); (2 * nn) * (2 * nn)];
        let mut txy = vec![Complex::new(0.0, 0.0); (2 * nm) * (2 * nn)];
        let dphi = 2.0 * PI / n_phi as f64;

        for (xi, wi) in gx.iter().zip(&gw) {
            let theta = PI / 4.0 * (xi + 1.0);
            let wt = wi * PI / 4.0 * theta.sin() * dphi;
            for j in 0..n_phi {
                let phi = j as f64 * dphi;
                let d = self.factors(theta, phi);
                let xs: Vec<Complex> = d.xa.iter().flat_map(|p| [p[0], p[1]]).collect();
                let ys: Vec<Complex> = d.yb.iter().flat_map(|p| [p[0], p[1]]).collect();
                let (wxx, wyy, wxy) = (wt * d.cxx, wt * d.cyy, wt * d.cxy);
                for (a, xa) in xs.iter().enumerate() {
                    let xac = xa.conj();
                    let row = &mut txx[a * 2 * nm..(a + 1) * 2 * nm];
                    for (slot, xb) in row.iter_mut().zip(&xs) {
                        *slot += xac * xb * wxx;
                    }
                    let row = &mut txy[a * 2 * nn..(a + 1) * 2 * nn];
                    for (slot, yb) in row.iter_mut().zip(&ys) {
                        *slot += xac * yb * wxy;
                    }
                }
                for (a, ya) in ys.iter().enumerate() {
                    let yac = ya.conj();
                    let row = &mut tyy[a * 2 * nn..(a + 1) * 2 * nn];
                    for (slot, yb) in row.iter_mut().zip(&ys) {
                        *slot += yac * yb * wyy;
                    }
                }
            }
        }

        let xi = |m: usize, par: usize| 2 * m + par;
        let scale = 2.0 * self.intensity_scale() * (2.0 * self.h).powi(2);
        let n = modes.len();
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (p, mp) in modes.iter().enumerate() {
            for (q, mq) in modes.iter().enumerate().skip(p) {
                let xx = txx[xi(mp.m, mp.n % 2) * 2 * nm + xi(mq.m, mq.n % 2)];
                let yy = tyy[xi(mp.n, mp.m % 2) * 2 * nn + xi(mq.n, mq.m % 2)];
                let xy = txy[xi(mp.m, mp.n % 2) * 2 * nn + xi(mq.n, mq.m % 2)];
                let yx = txy[xi(mq.m, mq.n % 2) * 2 * nn + xi(mp.n, mp.m % 2)].conj();
                let v = scale * mp.norm * mq.norm * (xx + yy + xy + yx).re;
                g[(p, q)] = v;
                g[(q, p)] = v;
            }
        }
        g
    }
}

/// Far-field evaluator for one fixed set of modal amplitudes.
///
/// Modal amplitudes are pre-summed per `m` and per `n` by parity so that
/// each direction costs `O(M + N)`.
#[derive(Debug, Clone)]
pub struct FarField {
    ap: Aperture,
    /// `Σ_n c_mn a_mn` over n of each parity, per m.
    sx: Vec<[Complex; 2]>,
    /// `Σ_m c_mn a_mn` over m of each parity, per n.
    sy: Vec<[Complex; 2]>,
}

/// Radiation intensity and vector radiation integrals in one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldSample {
    pub l_theta: Complex,
    pub l_phi: Complex,
    /// Radiation intensity, W/sr.
    pub intensity: f64,
}

impl FarField {
    pub(crate) fn new(ap: Aperture, modes: &[Mode], amps: &DVector<Complex>) -> Self {
        let zero = Complex::new(0.0, 0.0);
        let mut sx = vec![[zero; 2]; ap.m_max + 1];
        let mut sy = vec![[zero; 2]; ap.n_max + 1];
        for (mode, a) in modes.iter().zip(amps.iter()) {
            let ca = a * mode.norm;
            sx[mode.m][mode.n % 2] += ca;
            sy[mode.n][mode.m % 2] += ca;
        }
        FarField { ap, sx, sy }
    }

    pub fn sample(&self, theta: f64, phi: f64) -> FarFieldSample {
        let d = self.ap.factors(theta, phi);
        let two_h = 2.0 * self.ap.h;
        let mx: Complex =
            d.xa.iter()
                .zip(&self.sx)
                .map(|(f, s)| f[0] * s[0] + f[1] * s[1])
                .sum::<Complex>()
                * two_h;
        let my: Complex =
            d.yb.iter()
                .zip(&self.sy)
                .map(|(f, s)| f[0] * s[0] + f[1] * s[1])
                .sum::<Complex>()
                * two_h;
        let l_theta = (mx * d.cos_p + my * d.sin_p) * d.cos_t;
        let l_phi = -mx * d.sin_p + my * d.cos_p;
        FarFieldSample {
            l_theta,
            l_phi,
            intensity: self.ap.intensity_scale() * (l_theta.norm_sqr() + l_phi.norm_sqr()),
        }
    }

    pub fn intensity(&self, theta: f64, phi: f64) -> f64 {
        self.sample(theta, phi).intensity
    }

    /// Radiated power over the upper hemisphere on a 1° × 1° grid,
    /// trapezoidal in θ and periodic in φ.
    pub fn hemisphere_power(&self) -> f64 {
        let d = PI / 180.0;
        let mut total = 0.0;
        for it in 0..=90 {
            let theta = it as f64 * d;
            let w_theta = if it == 0 || it == 90 { 0.5 } else { 1.0 };
            let st = theta.sin();
            if st == 0.0 {
                continue;
            }
            let ring: f64 = (0..360).map(|ip| self.intensity(theta, ip as f64 * d)).sum();
            total += w_theta * st * ring;
        }
        total * d * d
    }
}
