//! Quasi-static microstrip analysis and width synthesis.
//!
//! Impedance and effective permittivity follow the Hammerstad–Jensen
//! closed forms for a zero-thickness strip without dispersion correction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{C0, ETA0, MU0};

/// Validated `w/h` interval of the closed forms, also the synthesis bracket.
pub const WIDTH_RATIO_MIN: f64 = 0.05;
pub const WIDTH_RATIO_MAX: f64 = 20.0;

const SYNTH_REL_TOL: f64 = 1e-6;

/// Dielectric stack of a single-layer board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstrateSpec {
    pub er: f64,
    pub tan_d: f64,
    /// Thickness, m.
    pub h: f64,
    /// Conductor conductivity, S/m. `f64::INFINITY` models a perfect conductor.
    pub sigma: f64,
}

impl SubstrateSpec {
    pub fn new(er: f64, tan_d: f64, h: f64, sigma: f64) -> Result<Self> {
        let s = SubstrateSpec { er, tan_d, h, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.er >= 1.0) || !self.er.is_finite() {
            return Err(Error::domain(format!(
                "substrate invariant er >= 1 violated (er = {})",
                self.er
            )));
        }
        if !(self.tan_d >= 0.0) || !self.tan_d.is_finite() {
            return Err(Error::domain(format!(
                "substrate invariant tan_d >= 0 violated (tan_d = {})",
                self.tan_d
            )));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::domain(format!(
                "substrate invariant h > 0 violated (h = {})",
                self.h
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::domain(format!(
                "substrate invariant sigma > 0 violated (sigma = {})",
                self.sigma
            )));
        }
        Ok(())
    }

    /// Surface resistance `sqrt(π f μ0 / σ)`; zero for a perfect conductor.
    pub fn surface_resistance(&self, f: f64) -> f64 {
        if self.sigma.is_infinite() {
            0.0
        } else {
            (PI * f * MU0 / self.sigma).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrostripLine {
    pub sub: SubstrateSpec,
    /// Strip width, m.
    pub w: f64,
    /// Physical length, m.
    pub len: f64,
}

impl MicrostripLine {
    pub fn new(sub: SubstrateSpec, w: f64, len: f64) -> Result<Self> {
        let line = MicrostripLine { sub, w, len };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<()> {
        self.sub.validate()?;
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(Error::domain(format!("line invariant w > 0 violated (w = {})", self.w)));
        }
        if !(self.len >= 0.0) || !self.len.is_finite() {
            return Err(Error::domain(format!(
                "line invariant len >= 0 violated (len = {})",
                self.len
            )));
        }
        let u = self.w / self.sub.h;
        if !(WIDTH_RATIO_MIN..=WIDTH_RATIO_MAX).contains(&u) {
            return Err(Error::domain(format!(
                "line invariant w/h in [{WIDTH_RATIO_MIN}, {WIDTH_RATIO_MAX}] violated \
                 (w/h = {u:.4})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCharacteristics {
    /// Characteristic impedance, Ω.
    pub z0: f64,
    pub eeff: f64,
    /// Dielectric attenuation, Np/m.
    pub alpha_d: f64,
    /// Conductor attenuation, Np/m.
    pub alpha_c: f64,
}

impl LineCharacteristics {
    pub fn alpha(&self) -> f64 {
        self.alpha_d + self.alpha_c
    }
}

/// Effective permittivity for width ratio `u = w/h`.
pub fn effective_permittivity(u: f64, er: f64) -> f64 {
    if er == 1.0 {
        return 1.0;
    }
    let u4 = u.powi(4);
    let a = 1.0 + ((u4 + (u / 52.0).powi(2)) / (u4 + 0.432)).ln() / 49.0 + (1.0 + (u / 18.1).powi(3)).ln() / 18.7;
    let b = 0.564 * ((er - 0.9) / (er + 3.0)).powf(0.053);
    (er + 1.0) / 2.0 + (er - 1.0) / 2.0 * (1.0 + 10.0 / u).powf(-a * b)
}

/// Air-filled characteristic impedance for width ratio `u = w/h`.
pub fn air_impedance(u: f64) -> f64 {
    let f = 6.0 + (2.0 * PI - 6.0) * (-(30.666 / u).powf(0.7528)).exp();
    ETA0 / (2.0 * PI) * (f / u + (1.0 + (2.0 / u).powi(2)).sqrt()).ln()
}

fn z0_for_ratio(u: f64, er: f64) -> f64 {
    air_impedance(u) / effective_permittivity(u, er).sqrt()
}

/// Quasi-static line parameters. Losses are evaluated at `f`.
pub fn analyze_at(line: &MicrostripLine, f: f64) -> Result<LineCharacteristics> {
    line.validate()?;
    let sub = &line.sub;
    let u = line.w / sub.h;
    let eeff = effective_permittivity(u, sub.er);
    let z0 = air_impedance(u) / eeff.sqrt();
    let alpha_d = if sub.er > 1.0 {
        PI * f * eeff.sqrt() / C0 * (sub.er / (sub.er - 1.0)) * ((eeff - 1.0) / eeff) * sub.tan_d
    } else {
        0.0
    };
    let alpha_c = sub.surface_resistance(f) / (z0 * line.w);
    Ok(LineCharacteristics {
        z0,
        eeff,
        alpha_d,
        alpha_c,
    })
}

/// Line parameters with losses evaluated at 1 GHz. Use [`analyze_at`] when
/// attenuation matters; `z0` and `eeff` are frequency independent.
pub fn analyze(line: &MicrostripLine) -> Result<LineCharacteristics> {
    analyze_at(line, 1e9)
}

/// Range of impedances reachable over the synthesis bracket, `(min, max)` Ω.
pub fn achievable_impedance(sub: &SubstrateSpec) -> (f64, f64) {
    (
        z0_for_ratio(WIDTH_RATIO_MAX, sub.er),
        z0_for_ratio(WIDTH_RATIO_MIN, sub.er),
    )
}

/// Strip width realizing `z0_target` on `sub`, found by bisection on the
/// monotone `Z0(w)`.
pub fn synthesize_width(z0_target: f64, sub: &SubstrateSpec) -> Result<f64> {
    sub.validate()?;
    let (zmin, zmax) = achievable_impedance(sub);
    if !(z0_target >= zmin && z0_target <= zmax) {
        return Err(Error::Range {
            what: "target impedance (ohm)".into(),
            value: z0_target,
            lo: zmin,
            hi: zmax,
        });
    }
    // bisect in log(u): Z0 spans decades of width
    let (mut lo, mut hi) = (WIDTH_RATIO_MIN.ln(), WIDTH_RATIO_MAX.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let z = z0_for_ratio(mid.exp(), sub.er);
        if ((z - z0_target) / z0_target).abs() < SYNTH_REL_TOL {
            return Ok(mid.exp() * sub.h);
        }
        // Z0 decreases with width
        if z > z0_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp() * sub.h)
}

/// Electrical length in degrees at `f`.
pub fn electrical_length(line: &MicrostripLine, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {f}")));
    }
    let ch = analyze(line)?;
    Ok(360.0 * f * ch.eeff.sqrt() * line.len / C0)
}

/// Physical length of a 90° section of width `w` at `f`.
pub fn quarter_wave_length(sub: &SubstrateSpec, w: f64, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {f}")));
    }
    let probe = MicrostripLine::new(*sub, w, 0.0)?;
    let ch = analyze(&probe)?;
    Ok(C0 / (4.0 * f * ch.eeff.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4b() -> SubstrateSpec {
        SubstrateSpec::new(3.0, 0.0015, 0.6e-3, 5.8e7).unwrap()
    }

    #[test]
    fn fifty_ohm_phase_shifter_line() {
        let line = MicrostripLine::new(f4b(), 1.5e-3, 18e-3).unwrap();
        let ch = analyze(&line).unwrap();
        assert!((ch.z0 - 50.0).abs() < 2.0, "z0 = {}", ch.z0);
        let theta = electrical_length(&line, 2.45e9).unwrap();
        assert!((theta - 82.0).abs() < 4.0, "theta = {theta}");
    }

    #[test]
    fn divider_arm_impedance() {
        let line = MicrostripLine::new(f4b(), 0.85e-3, 1e-3).unwrap();
        let ch = analyze(&line).unwrap();
        assert!((ch.z0 - 70.7).abs() < 3.0, "z0 = {}", ch.z0);
    }

    #[test]
    fn air_line_has_unit_permittivity() {
        let sub = SubstrateSpec::new(1.0, 0.01, 1e-3, 5.8e7).unwrap();
        for w in [0.1e-3, 1e-3, 10e-3] {
            let ch = analyze(&MicrostripLine::new(sub, w, 0.01).unwrap()).unwrap();
            assert_eq!(ch.eeff, 1.0);
            assert_eq!(ch.alpha_d, 0.0);
        }
    }

    #[test]
    fn invalid_geometry_rejected() {
        let sub = f4b();
        assert!(MicrostripLine::new(sub, 0.0, 1e-3).is_err());
        assert!(MicrostripLine::new(sub, -1e-3, 1e-3).is_err());
        assert!(SubstrateSpec::new(3.0, 0.0, 0.0, 5.8e7).is_err());
        assert!(SubstrateSpec::new(0.5, 0.0, 1e-3, 5.8e7).is_err());
        // w/h = 25 is outside the validated range
        let thin = SubstrateSpec::new(3.0, 0.0, 0.6e-4, 5.8e7).unwrap();
        let err = MicrostripLine::new(thin, 1.5e-3, 0.0).unwrap_err();
        assert!(err.to_string().contains("w/h"), "{err}");
    }

    #[test]
    fn synthesis_examples() {
        let w50 = synthesize_width(50.0, &f4b()).unwrap();
        assert!((w50 - 1.5e-3).abs() < 0.1e-3, "w50 = {w50}");
        let w100 = synthesize_width(100.0, &f4b()).unwrap();
        assert!((w100 - 0.4e-3).abs() < 0.08e-3, "w100 = {w100}");
        let line = MicrostripLine::new(f4b(), w100, 0.0).unwrap();
        let z = analyze(&line).unwrap().z0;
        assert!(((z - 100.0) / 100.0).abs() < 1e-3);
    }

    #[test]
    fn synthesis_out_of_range_names_interval() {
        let err = synthesize_width(500.0, &f4b()).unwrap_err();
        match err {
            Error::Range { lo, hi, .. } => {
                assert!(lo < 10.0 && hi > 150.0, "[{lo}, {hi}]");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(synthesize_width(1.0, &f4b()).is_err());
    }

    #[test]
    fn electrical_length_trivia() {
        let zero = MicrostripLine::new(f4b(), 1.5e-3, 0.0).unwrap();
        assert_eq!(electrical_length(&zero, 2.45e9).unwrap(), 0.0);
        let air = SubstrateSpec::new(1.0, 0.0, 1e-3, 5.8e7).unwrap();
        let f = 2.45e9;
        let wave = MicrostripLine::new(air, 1e-3, C0 / f).unwrap();
        assert!((electrical_length(&wave, f).unwrap() - 360.0).abs() < 1e-9);
        assert!(electrical_length(&wave, 0.0).is_err());
    }

    #[test]
    fn quarter_wave_examples() {
        let f = 2.45e9;
        let len = quarter_wave_length(&f4b(), 0.85e-3, f).unwrap();
        // c/(4 f sqrt(eeff)) with eeff from the closed form: about 20.1 mm
        assert!((len - 20.1e-3).abs() < 0.2e-3, "len = {len}");
        let line = MicrostripLine::new(f4b(), 0.85e-3, len).unwrap();
        assert!((electrical_length(&line, f).unwrap() - 90.0).abs() < 0.01);
        let double = quarter_wave_length(&f4b(), 0.85e-3, 2.0 * f).unwrap();
        assert!((double - len / 2.0).abs() < 1e-15);
        let air = SubstrateSpec::new(1.0, 0.0, 1e-3, 5.8e7).unwrap();
        assert_eq!(quarter_wave_length(&air, 1e-3, f).unwrap(), C0 / (4.0 * f));
    }

    #[test]
    fn lossless_conductor_has_no_conductor_loss() {
        let sub = SubstrateSpec::new(3.0, 0.0, 0.6e-3, f64::INFINITY).unwrap();
        let ch = analyze_at(&MicrostripLine::new(sub, 1.5e-3, 0.01).unwrap(), 2.45e9).unwrap();
        assert_eq!(ch.alpha_c, 0.0);
        assert_eq!(ch.alpha_d, 0.0);
    }

    #[test]
    fn impedance_and_permittivity_monotone() {
        for er in [1.5, 2.2, 3.0, 4.4, 10.2] {
            let n = 400;
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=n {
                let u = WIDTH_RATIO_MIN * (WIDTH_RATIO_MAX / WIDTH_RATIO_MIN).powf(i as f64 / n as f64);
                let z = z0_for_ratio(u, er);
                let e = effective_permittivity(u, er);
                assert!(e >= (er + 1.0) / 2.0 && e <= er, "eeff {e} at u {u}");
                if let Some((pz, pe)) = prev {
                    assert!(z < pz, "Z0 not decreasing at u = {u}, er = {er}");
                    assert!(e > pe, "eeff not increasing at u = {u}, er = {er}");
                }
                prev = Some((z, e));
            }
        }
    }

    #[test]
    fn parallel_plate_asymptote() {
        for er in [2.2, 3.0, 4.4] {
            let u = 20.0;
            let z = z0_for_ratio(u, er);
            let pp = 377.0 / (u * er.sqrt());
            assert!(((z - pp) / pp).abs() < 0.15, "z {z} vs {pp}");
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn synthesis_round_trip(u in 0.06f64..19.0, er in 1.5f64..12.0) {
                let sub = SubstrateSpec::new(er, 0.001, 1e-3, 5.8e7).unwrap();
                let w = u * sub.h;
                let z = analyze(&MicrostripLine::new(sub, w, 0.0).unwrap()).unwrap().z0;
                let back = synthesize_width(z, &sub).unwrap();
                prop_assert!(((back - w) / w).abs() < 1e-3);
            }

            #[test]
            fn electrical_length_linear(len in 0.0f64..0.1, f in 1e8f64..1e10, k in 0.1f64..5.0) {
                let sub = SubstrateSpec::new(3.0, 0.0, 0.6e-3, 5.8e7).unwrap();
                let a = electrical_length(&MicrostripLine::new(sub, 1e-3, len).unwrap(), f).unwrap();
                let b = electrical_length(&MicrostripLine::new(sub, 1e-3, k * len).unwrap(), f).unwrap();
                let c = electrical_length(&MicrostripLine::new(sub, 1e-3, len).unwrap(), k * f).unwrap();
                prop_assert!((b - k * a).abs() <= 1e-9 * (1.0 + b.abs()));
                prop_assert!((c - k * a).abs() <= 1e-9 * (1.0 + c.abs()));
            }
        }
    }
}
