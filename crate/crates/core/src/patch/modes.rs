use std::f64::consts::PI;

use crate::microstrip::effective_permittivity;

/// Cosine cavity mode `(m, n)` of an `l × w` cavity with magnetic walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub m: usize,
    pub n: usize,
    /// Eigen-wavenumber squared, rad²/m².
    pub k2: f64,
    /// Normalization `sqrt(σm σn / (l w))`.
    pub norm: f64,
}

impl Mode {
    pub fn new(m: usize, n: usize, l: f64, w: f64) -> Self {
        let sigma = |i: usize| if i == 0 { 1.0 } else { 2.0 };
        let kx = m as f64 * PI / l;
        let ky = n as f64 * PI / w;
        Mode {
            m,
            n,
            k2: kx * kx + ky * ky,
            norm: (sigma(m) * sigma(n) / (l * w)).sqrt(),
        }
    }

    pub fn k(&self) -> f64 {
        self.k2.sqrt()
    }

    /// Normalized eigenfunction at `(x, y)` in cavity coordinates.
    pub fn psi(&self, x: f64, y: f64, l: f64, w: f64) -> f64 {
        self.norm * (self.m as f64 * PI * x / l).cos() * (self.n as f64 * PI * y / w).cos()
    }

    /// Gradient of [`Mode::psi`].
    pub fn grad_psi(&self, x: f64, y: f64, l: f64, w: f64) -> (f64, f64) {
        let (ax, ay) = (self.m as f64 * PI / l, self.n as f64 * PI / w);
        let (sx, cx) = (ax * x).sin_cos();
        let (sy, cy) = (ay * y).sin_cos();
        (-self.norm * ax * sx * cy, -self.norm * ay * cx * sy)
    }
}

/// `sin(x)/x`, continuous at zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Open-end length extension of a patch edge of width `w` on a substrate
/// of thickness `h`.
pub fn fringe_extension(w: f64, h: f64, er: f64) -> f64 {
    let eeff = effective_permittivity(w / h, er);
    let r = w / h;
    0.412 * h * (eeff + 0.3) * (r + 0.264) / ((eeff - 0.258) * (r + 0.8))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        wts[i] = w;
        wts[n - 1 - i] = w;
    }
    (x, wts)
}
