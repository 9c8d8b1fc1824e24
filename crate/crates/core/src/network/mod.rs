//! Frequency-domain linear two-port and n-port networks.

mod touchstone;

pub use touchstone::{read_touchstone, read_touchstone_str, touchstone_string, write_touchstone, Touchstone};

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::microstrip::{analyze_at, MicrostripLine};
use crate::units::{Complex, C0};

/// Default reference impedance, Ω.
pub const DEFAULT_Z_REF: f64 = 50.0;

/// Transmission (chain) matrix of a two-port. `b` is in Ω, `c` in S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcdMatrix {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

impl AbcdMatrix {
    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        AbcdMatrix { a, b, c, d }
    }

    pub fn identity() -> Self {
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        AbcdMatrix::new(one, zero, zero, one)
    }

    pub fn series(z: Complex) -> Self {
        AbcdMatrix {
            b: z,
            ..Self::identity()
        }
    }

    pub fn shunt(y: Complex) -> Self {
        AbcdMatrix {
            c: y,
            ..Self::identity()
        }
    }

    /// Uniform line of characteristic impedance `z0` and complex
    /// electrical length `gamma_l` (Np + j rad).
    pub fn line(z0: f64, gamma_l: Complex) -> Self {
        let (ch, sh) = (gamma_l.cosh(), gamma_l.sinh());
        AbcdMatrix::new(ch, sh * z0, sh / z0, ch)
    }

    pub fn det(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }

    pub fn max_abs_diff(&self, other: &AbcdMatrix) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|z| z.is_finite())
    }
}

impl Mul for AbcdMatrix {
    type Output = AbcdMatrix;

    fn mul(self, r: AbcdMatrix) -> AbcdMatrix {
        AbcdMatrix {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// N-port scattering matrix with one real reference impedance for all ports.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub entries: DMatrix<Complex>,
    pub z_ref: f64,
}

impl ScatteringMatrix {
    pub fn new(entries: DMatrix<Complex>, z_ref: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::domain("scattering matrix must be square and non-empty"));
        }
        if !(z_ref > 0.0) {
            return Err(Error::domain(format!("z_ref must be positive, got {z_ref}")));
        }
        Ok(ScatteringMatrix { entries, z_ref })
    }

    pub fn ports(&self) -> usize {
        self.entries.nrows()
    }

    /// Zero-based entry `S[i][j]`.
    pub fn s(&self, i: usize, j: usize) -> Complex {
        self.entries[(i, j)]
    }

    /// Largest entry of `|SᴴS − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.ports();
        let prod = self.entries.adjoint() * &self.entries;
        let eye = DMatrix::<Complex>::identity(n, n);
        (prod - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `|S − Sᵀ|`.
    pub fn reciprocity_error(&self) -> f64 {
        (&self.entries - self.entries.transpose())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Converts an impedance matrix to S with real reference `z_ref`.
    pub fn from_z(z: &DMatrix<Complex>, z_ref: f64) -> Result<Self> {
        let n = z.nrows();
        let eye = DMatrix::<Complex>::identity(n, n);
        let zn = z.map(|v| v / z_ref);
        let lhs = &zn + &eye;
        let rhs = &zn - &eye;
        let inv = lhs
            .try_inverse()
            .ok_or_else(|| Error::numeric("Z + z_ref·I is singular"))?;
        ScatteringMatrix::new(rhs * inv, z_ref)
    }
}

/// Lumped or distributed element of a cascade.
#[derive(Debug, Clone, PartialEq)]
pub enum CircuitElement {
    SeriesR(f64),
    SeriesL(f64),
    SeriesC(f64),
    ShuntR(f64),
    ShuntL(f64),
    ShuntC(f64),
    /// Ideal lossless line: characteristic impedance, electrical length in
    /// degrees at `f_ref`.
    TLine {
        z0: f64,
        theta_deg: f64,
        f_ref: f64,
    },
    /// Lossy quasi-TEM microstrip section.
    MsLine(MicrostripLine),
}

impl CircuitElement {
    pub fn validate(&self) -> Result<()> {
        use CircuitElement::*;
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{what} value must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            SeriesR(v) => positive("series R", *v),
            SeriesL(v) => positive("series L", *v),
            SeriesC(v) => positive("series C", *v),
            ShuntR(v) => positive("shunt R", *v),
            ShuntL(v) => positive("shunt L", *v),
            ShuntC(v) => positive("shunt C", *v),
            TLine { z0, theta_deg, f_ref } => {
                positive("tline z0", *z0)?;
                positive("tline f_ref", *f_ref)?;
                if *theta_deg >= 0.0 && theta_deg.is_finite() {
                    Ok(())
                } else {
                    Err(Error::domain(format!(
                        "tline theta must be non-negative, got {theta_deg}"
                    )))
                }
            }
            MsLine(line) => line.validate(),
        }
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("frequency must be positive, got {f}")))
    }
}

pub fn element_abcd(e: &CircuitElement, f: f64) -> Result<AbcdMatrix> {
    use CircuitElement::*;
    check_frequency(f)?;
    e.validate()?;
    let w = 2.0 * PI * f;
    let j = Complex::i();
    Ok(match *e {
        SeriesR(r) => AbcdMatrix::series(Complex::new(r, 0.0)),
        SeriesL(l) => AbcdMatrix::series(j * w * l),
        SeriesC(c) => AbcdMatrix::series(-j / (w * c)),
        ShuntR(r) => AbcdMatrix::shunt(Complex::new(1.0 / r, 0.0)),
        ShuntL(l) => AbcdMatrix::shunt(-j / (w * l)),
        ShuntC(c) => AbcdMatrix::shunt(j * w * c),
        TLine { z0, theta_deg, f_ref } => {
            let theta = theta_deg.to_radians() * f / f_ref;
            let (s, c) = theta.sin_cos();
            AbcdMatrix::new(Complex::new(c, 0.0), j * z0 * s, j * s / z0, Complex::new(c, 0.0))
        }
        MsLine(ref line) => {
            let ch = analyze_at(line, f)?;
            let beta = w * ch.eeff.sqrt() / C0;
            let gamma_l = Complex::new(ch.alpha(), beta) * line.len;
            if ch.alpha() == 0.0 {
                let (s, c) = (beta * line.len).sin_cos();
                AbcdMatrix::new(Complex::new(c, 0.0), j * ch.z0 * s, j * s / ch.z0, Complex::new(c, 0.0))
            } else {
                AbcdMatrix::line(ch.z0, gamma_l)
            }
        }
    })
}

/// Left-to-right product; the first matrix is nearest the source.
pub fn cascade(ms: &[AbcdMatrix]) -> Result<AbcdMatrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::domain("cannot cascade an empty list"))?;
    Ok(rest.iter().fold(*first, |acc, m| acc * *m))
}

pub fn input_impedance(m: &AbcdMatrix, zl: Complex) -> Result<Complex> {
    let den = m.c * zl + m.d;
    if den.norm() < 1e-300 || !den.is_finite() {
        return Err(Error::numeric("input impedance denominator c·zl + d is zero"));
    }
    Ok((m.a * zl + m.b) / den)
}

/// Reflection coefficient of impedance `z` against real reference `z_ref`.
pub fn reflection(z: Complex, z_ref: f64) -> Complex {
    (z - z_ref) / (z + z_ref)
}

pub fn abcd_to_s(m: &AbcdMatrix, z_ref: f64) -> Result<ScatteringMatrix> {
    if !(z_ref > 0.0) {
        return Err(Error::domain(format!("z_ref must be positive, got {z_ref}")));
    }
    let AbcdMatrix { a, b, c, d } = *m;
    let bz = b / z_ref;
    let cz = c * z_ref;
    let den = a + bz + cz + d;
    if den.norm() < 1e-300 || !den.is_finite() {
        return Err(Error::numeric("ABCD to S conversion denominator is zero"));
    }
    let s11 = (a + bz - cz - d) / den;
    let s12 = 2.0 * m.det() / den;
    let s21 = Complex::new(2.0, 0.0) / den;
    let s22 = (-a + bz - cz + d) / den;
    ScatteringMatrix::new(DMatrix::from_row_slice(2, 2, &[s11, s12, s21, s22]), z_ref)
}

pub fn s_to_abcd(s: &ScatteringMatrix) -> Result<AbcdMatrix> {
    if s.ports() != 2 {
        return Err(Error::domain(format!(
            "ABCD conversion needs a 2-port, got {} ports",
            s.ports()
        )));
    }
    let (s11, s12, s21, s22) = (s.s(0, 0), s.s(0, 1), s.s(1, 0), s.s(1, 1));
    if s21.norm() == 0.0 {
        return Err(Error::domain("S21 = 0: no through path, ABCD undefined"));
    }
    let one = Complex::new(1.0, 0.0);
    let z0 = s.z_ref;
    let den = 2.0 * s21;
    Ok(AbcdMatrix {
        a: ((one + s11) * (one - s22) + s12 * s21) / den,
        b: z0 * ((one + s11) * (one + s22) - s12 * s21) / den,
        c: ((one - s11) * (one - s22) - s12 * s21) / (den * z0),
        d: ((one - s11) * (one + s22) + s12 * s21) / den,
    })
}

/// Ordered chain of elements, first element nearest the source.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cascade {
    pub elements: Vec<CircuitElement>,
}

impl Cascade {
    pub fn new(elements: Vec<CircuitElement>) -> Self {
        Cascade { elements }
    }

    /// Chain matrix at `f`; an empty cascade is a through connection.
    pub fn abcd(&self, f: f64) -> Result<AbcdMatrix> {
        check_frequency(f)?;
        let ms = self
            .elements
            .iter()
            .map(|e| element_abcd(e, f))
            .collect::<Result<Vec<_>>>()?;
        if ms.is_empty() {
            return Ok(AbcdMatrix::identity());
        }
        cascade(&ms)
    }
}

/// Two-port admittance parameters of a chain matrix.
fn abcd_to_y(m: &AbcdMatrix) -> Result<[[Complex; 2]; 2]> {
    if m.b.norm() < 1e-300 {
        return Err(Error::numeric(
            "branch has zero series impedance (B = 0); admittance form undefined",
        ));
    }
    let inv_b = Complex::new(1.0, 0.0) / m.b;
    Ok([[m.d * inv_b, -m.det() * inv_b], [-inv_b, m.a * inv_b]])
}

/// Three-port formed by a stem and two arms meeting at one ideal node.
///
/// Port 1 is the stem input, ports 2 and 3 the far ends of `arm_a` and
/// `arm_b`. Each branch's port 1 faces the source side (stem) or the
/// junction (arms). The junction node is eliminated from the nodal
/// admittance matrix before converting to S.
pub fn tee_divider(stem: &Cascade, arm_a: &Cascade, arm_b: &Cascade, f: f64, z_ref: f64) -> Result<ScatteringMatrix> {
    if !(z_ref > 0.0) {
        return Err(Error::domain(format!("z_ref must be positive, got {z_ref}")));
    }
    let branches = [
        (abcd_to_y(&stem.abcd(f)?)?, 0usize, 3usize),
        (abcd_to_y(&arm_a.abcd(f)?)?, 3, 1),
        (abcd_to_y(&arm_b.abcd(f)?)?, 3, 2),
    ];
    // nodes 0..3 are ports 1..3, node 3 is the junction
    let mut y = DMatrix::<Complex>::zeros(4, 4);
    for (yb, p, q) in branches {
        let idx = [p, q];
        for r in 0..2 {
            for c in 0..2 {
                y[(idx[r], idx[c])] += yb[r][c];
            }
        }
    }
    let yjj = y[(3, 3)];
    if yjj.norm() < 1e-300 {
        return Err(Error::numeric("junction self-admittance is zero"));
    }
    let mut reduced = DMatrix::<Complex>::zeros(3, 3);
    for r in 0..3 {
        for c in 0..3 {
            reduced[(r, c)] = y[(r, c)] - y[(r, 3)] * y[(3, c)] / yjj;
        }
    }
    let eye = DMatrix::<Complex>::identity(3, 3);
    let m = &eye + reduced.map(|v| v * z_ref);
    // adjugate inverse keeps S21 and S31 bitwise equal for identical arms,
    // which pivoted LU does not
    let inv = inverse3(&m).ok_or_else(|| Error::numeric("nodal matrix I + z_ref·Y is singular"))?;
    ScatteringMatrix::new(inv.map(|v| v * 2.0) - eye, z_ref)
}

fn inverse3(m: &DMatrix<Complex>) -> Option<DMatrix<Complex>> {
    let e = |r: usize, c: usize| m[(r, c)];
    let cof = |r: usize, c: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        e(r1, c1) * e(r2, c2) - e(r1, c2) * e(r2, c1)
    };
    let det = e(0, 0) * cof(0, 0) + e(0, 1) * cof(0, 1) + e(0, 2) * cof(0, 2);
    if det.norm() < 1e-300 || !det.is_finite() {
        return None;
    }
    Some(DMatrix::from_fn(3, 3, |r, c| cof(c, r) / det))
}

/// `S = (I + z_ref·Y)⁻¹ (I − z_ref·Y)`.
pub fn s_from_y(y: &DMatrix<Complex>, z_ref: f64) -> Result<ScatteringMatrix> {
    let n = y.nrows();
    let eye = DMatrix::<Complex>::identity(n, n);
    let yn = y.map(|v| v * z_ref);
    let lhs = &eye + &yn;
    let rhs = &eye - &yn;
    let s = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numeric("nodal matrix I + z_ref·Y is singular"))?;
    ScatteringMatrix::new(s, z_ref)
}

/// Frequency-indexed complex load impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    freqs: Vec<f64>,
    z: Vec<Complex>,
}

impl LoadProfile {
    pub fn new(freqs: Vec<f64>, z: Vec<Complex>) -> Result<Self> {
        if freqs.is_empty() || freqs.len() != z.len() {
            return Err(Error::domain(
                "load profile needs equal, non-zero numbers of frequencies and impedances",
            ));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("load profile frequencies must be strictly increasing"));
        }
        if let Some((f, zz)) = freqs.iter().zip(&z).find(|(_, zz)| !(zz.re >= 0.0) || !zz.is_finite()) {
            return Err(Error::domain(format!(
                "load profile is not passive at {f} Hz (Z = {zz})"
            )));
        }
        Ok(LoadProfile { freqs, z })
    }

    /// Frequency-independent load.
    pub fn constant(z: Complex, f_lo: f64, f_hi: f64) -> Result<Self> {
        if f_hi > f_lo {
            Self::new(vec![f_lo, f_hi], vec![z, z])
        } else {
            Self::new(vec![f_lo], vec![z])
        }
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn impedances(&self) -> &[Complex] {
        &self.z
    }

    pub fn span(&self) -> (f64, f64) {
        (self.freqs[0], *self.freqs.last().unwrap())
    }

    /// Parses CSV with the header `freq_hz,z_re,z_im`.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().replace(' ', "") == "freq_hz,z_re,z_im" => {}
            Some((i, _)) => return Err(Error::parse(i + 1, 1, "expected header freq_hz,z_re,z_im")),
            None => return Err(Error::parse(1, 1, "empty load file")),
        }
        let (mut freqs, mut z) = (Vec::new(), Vec::new());
        for (i, line) in lines {
            let mut vals = [0.0; 3];
            let mut col = 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    i + 1,
                    1,
                    format!("expected 3 columns, got {}", fields.len()),
                ));
            }
            for (v, field) in vals.iter_mut().zip(&fields) {
                *v = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(i + 1, col, format!("malformed number '{}'", field.trim())))?;
                col += field.len() + 1;
            }
            if let Some(&prev) = freqs.last() {
                if !(vals[0] > prev) {
                    return Err(Error::parse(i + 1, 1, "frequencies must be strictly increasing"));
                }
            }
            freqs.push(vals[0]);
            z.push(Complex::new(vals[1], vals[2]));
        }
        Self::new(freqs, z)
    }

    /// Linearly interpolated impedance; error outside the sampled span.
    pub fn impedance_at(&self, f: f64) -> Result<Complex> {
        let (lo, hi) = self.span();
        let tol = 1e-9 * hi.abs();
        if f < lo - tol || f > hi + tol {
            return Err(Error::Range {
                what: "frequency (Hz)".into(),
                value: f,
                lo,
                hi,
            });
        }
        if self.freqs.len() == 1 {
            return Ok(self.z[0]);
        }
        let k = self.freqs.partition_point(|&x| x <= f).clamp(1, self.freqs.len() - 1);
        let (f0, f1) = (self.freqs[k - 1], self.freqs[k]);
        let t = ((f - f0) / (f1 - f0)).clamp(0.0, 1.0);
        Ok(self.z[k - 1] * (1.0 - t) + self.z[k] * t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_csv_parses_and_rejects() {
        let p = LoadProfile::from_csv_str("freq_hz,z_re,z_im\n2.4e9,10,-5\n2.5e9,12,-3\n").unwrap();
        assert_eq!(p.freqs(), &[2.4e9, 2.5e9]);
        assert_eq!(p.impedance_at(2.45e9).unwrap(), Complex::new(11.0, -4.0));
        assert!(matches!(
            LoadProfile::from_csv_str("freq_hz,z_re,z_im\n2.4e9,10,x\n"),
            Err(Error::Parse {
                line: 2,
                column: 10,
                ..
            })
        ));
        assert!(LoadProfile::from_csv_str("f,r,i\n").is_err());
        assert!(LoadProfile::from_csv_str("freq_hz,z_re,z_im\n2.5e9,1,0\n2.4e9,1,0\n").is_err());
        assert!(LoadProfile::from_csv_str("freq_hz,z_re,z_im\n2.5e9,-1,0\n").is_err());
    }
    use crate::microstrip::SubstrateSpec;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn quarter_wave(z0: f64) -> CircuitElement {
        CircuitElement::TLine {
            z0,
            theta_deg: 90.0,
            f_ref: 2.45e9,
        }
    }

    #[test]
    fn tiny_series_resistor_is_near_identity() {
        let m = element_abcd(&CircuitElement::SeriesR(1e-15), 1e9).unwrap();
        assert!(m.max_abs_diff(&AbcdMatrix::identity()) < 1e-14);
    }

    #[test]
    fn shunt_capacitor_admittance() {
        let m = element_abcd(&CircuitElement::ShuntC(0.5e-12), 2.45e9).unwrap();
        let expect = 2.0 * PI * 2.45e9 * 0.5e-12;
        assert!((m.c - c(0.0, expect)).norm() < 1e-15);
        assert!((m.c.im - 7.697e-3).abs() < 1e-6);
    }

    #[test]
    fn quarter_wave_form() {
        let m = element_abcd(&quarter_wave(70.7), 2.45e9).unwrap();
        assert!(m.a.norm() < 1e-15 && m.d.norm() < 1e-15);
        assert!((m.b - c(0.0, 70.7)).norm() < 1e-12);
        assert!((m.c - c(0.0, 1.0 / 70.7)).norm() < 1e-15);
    }

    #[test]
    fn degenerate_elements_rejected() {
        for e in [
            CircuitElement::SeriesC(0.0),
            CircuitElement::ShuntL(0.0),
            CircuitElement::SeriesL(-1e-9),
            CircuitElement::ShuntR(f64::NAN),
        ] {
            assert!(matches!(element_abcd(&e, 1e9), Err(Error::Domain(_))), "{e:?}");
        }
        assert!(element_abcd(&CircuitElement::SeriesL(1e-9), 0.0).is_err());
    }

    #[test]
    fn cascade_identity_and_empty() {
        let m = element_abcd(&CircuitElement::SeriesL(3e-9), 2e9).unwrap();
        let r = cascade(&[AbcdMatrix::identity(), m]).unwrap();
        assert_eq!(r, m);
        assert!(cascade(&[]).is_err());
    }

    #[test]
    fn two_quarter_waves_make_half_wave() {
        let q = element_abcd(&quarter_wave(70.7), 2.45e9).unwrap();
        let h = cascade(&[q, q]).unwrap();
        assert!((h.a + 1.0).norm() < 1e-9 && (h.d + 1.0).norm() < 1e-9);
        assert!(h.b.norm() < 1e-9 && h.c.norm() < 1e-9);
        for zl in [c(100.0, 0.0), c(12.0, -40.0), c(0.5, 300.0)] {
            let zin = input_impedance(&h, zl).unwrap();
            assert!((zin - zl).norm() < 1e-9 * zl.norm().max(1.0));
        }
    }

    #[test]
    fn quarter_wave_transforms_100_to_50() {
        let q = element_abcd(&quarter_wave(70.7), 2.45e9).unwrap();
        let zin = input_impedance(&q, c(100.0, 0.0)).unwrap();
        let expect = 70.7 * 70.7 / 100.0;
        assert!((zin - c(expect, 0.0)).norm() < 1e-9, "{zin}");
        let id = input_impedance(&AbcdMatrix::identity(), c(100.0, 0.0)).unwrap();
        assert_eq!(id, c(100.0, 0.0));
    }

    #[test]
    fn singular_input_impedance() {
        let open = AbcdMatrix::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(input_impedance(&open, c(0.0, 0.0)), Err(Error::Numeric(_))));
    }

    #[test]
    fn abcd_to_s_examples() {
        let s = abcd_to_s(&AbcdMatrix::identity(), 50.0).unwrap();
        assert!(s.s(0, 0).norm() < 1e-15 && s.s(1, 1).norm() < 1e-15);
        assert!((s.s(1, 0) - 1.0).norm() < 1e-15 && (s.s(0, 1) - 1.0).norm() < 1e-15);

        let r = element_abcd(&CircuitElement::SeriesR(50.0), 1e9).unwrap();
        let s = abcd_to_s(&r, 50.0).unwrap();
        assert!((s.s(0, 0) - 1.0 / 3.0).norm() < 1e-15);
        assert!((s.s(1, 0) - 2.0 / 3.0).norm() < 1e-15);

        let theta_deg = 37.0;
        let line = CircuitElement::TLine {
            z0: 50.0,
            theta_deg,
            f_ref: 1e9,
        };
        let s = abcd_to_s(&element_abcd(&line, 1e9).unwrap(), 50.0).unwrap();
        assert!(s.s(0, 0).norm() < 1e-12);
        let expect = Complex::from_polar(1.0, -theta_deg.to_radians());
        assert!((s.s(1, 0) - expect).norm() < 1e-12);
        assert!(abcd_to_s(&r, 0.0).is_err());
    }

    #[test]
    fn s_to_abcd_inverts_examples() {
        let line = CircuitElement::TLine {
            z0: 50.0,
            theta_deg: 37.0,
            f_ref: 1e9,
        };
        for m in [
            AbcdMatrix::identity(),
            element_abcd(&CircuitElement::SeriesR(50.0), 1e9).unwrap(),
            element_abcd(&line, 1e9).unwrap(),
        ] {
            let back = s_to_abcd(&abcd_to_s(&m, 50.0).unwrap()).unwrap();
            assert!(back.max_abs_diff(&m) < 1e-12);
        }
    }

    #[test]
    fn s_to_abcd_without_through_path() {
        let s = ScatteringMatrix::new(
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            50.0,
        )
        .unwrap();
        assert!(matches!(s_to_abcd(&s), Err(Error::Domain(_))));
    }

    #[test]
    fn identical_lossless_arms_split_evenly() {
        let arm = Cascade::new(vec![quarter_wave(50.0 * 2f64.sqrt())]);
        let stem = Cascade::new(vec![CircuitElement::TLine {
            z0: 50.0,
            theta_deg: 20.0,
            f_ref: 2.45e9,
        }]);
        let s = tee_divider(&stem, &arm, &arm, 2.45e9, 50.0).unwrap();
        assert_eq!(s.s(1, 0), s.s(2, 0));
        let col: f64 = (0..3).map(|i| s.s(i, 0).norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-9);
        assert!(s.s(0, 0).norm() < 1e-12);
        assert!(s.unitarity_error() < 1e-9);
    }

    #[test]
    fn tee_rejects_zero_series_branch() {
        let arm = Cascade::new(vec![quarter_wave(70.7)]);
        let empty = Cascade::default();
        assert!(matches!(
            tee_divider(&empty, &arm, &arm, 2.45e9, 50.0),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn microstrip_element_loss() {
        let sub = SubstrateSpec::new(3.0, 0.0015, 0.6e-3, 5.8e7).unwrap();
        let line = MicrostripLine::new(sub, 1.5e-3, 18e-3).unwrap();
        let m = element_abcd(&CircuitElement::MsLine(line), 2.45e9).unwrap();
        let s = abcd_to_s(&m, 50.0).unwrap();
        let s21 = s.s(1, 0).norm();
        assert!(s21 < 1.0 && s21 > 0.98, "|S21| = {s21}");
        assert!((m.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn load_profile_interpolation() {
        let p = LoadProfile::new(vec![1e9, 2e9, 3e9], vec![c(10.0, 0.0), c(20.0, 10.0), c(40.0, -10.0)]).unwrap();
        assert_eq!(p.impedance_at(1e9).unwrap(), c(10.0, 0.0));
        assert_eq!(p.impedance_at(3e9).unwrap(), c(40.0, -10.0));
        assert!((p.impedance_at(1.5e9).unwrap() - c(15.0, 5.0)).norm() < 1e-12);
        assert!((p.impedance_at(2.5e9).unwrap() - c(30.0, 0.0)).norm() < 1e-12);
        assert!(matches!(p.impedance_at(3.5e9), Err(Error::Range { .. })));
        assert!(LoadProfile::new(vec![2e9, 1e9], vec![c(1.0, 0.0); 2]).is_err());
        assert!(LoadProfile::new(vec![1e9], vec![c(-1.0, 0.0)]).is_err());
    }
}
