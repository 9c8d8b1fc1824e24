//! Physical constants, decibel conversions, frequency grids and the fixed
//! number formatting shared by every file writer.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);
/// Free-space wave impedance, Ω.
pub const ETA0: f64 = MU0 * C0;
/// Annealed copper conductivity, S/m.
pub const SIGMA_COPPER: f64 = 5.8e7;

pub type Complex = Complex64;

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}

/// `10·log10(r)` for a power ratio.
pub fn db_from_power_ratio(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "power ratio must be positive and finite, got {r}"
        )));
    }
    Ok(10.0 * r.log10())
}

pub fn power_ratio_from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `20·log10(r)` for an amplitude ratio.
pub fn db_from_amplitude_ratio(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "amplitude ratio must be positive and finite, got {r}"
        )));
    }
    Ok(20.0 * r.log10())
}

pub fn amplitude_ratio_from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Amplitude in dB with a floor so that a perfect match prints as a
/// large negative number instead of `-inf`.
pub fn db20_floored(mag: f64) -> f64 {
    20.0 * mag.max(1e-15).log10()
}

/// Linear frequency grid, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    stop: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::domain("frequency grid needs at least one point"));
        }
        if !(start > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::domain(format!(
                "frequency grid start must be positive and finite, got {start}"
            )));
        }
        if stop < start {
            return Err(Error::domain(format!(
                "frequency grid stop {stop} is below start {start}"
            )));
        }
        if count > 1 && stop == start {
            return Err(Error::domain("a grid with more than one point needs stop > start"));
        }
        Ok(FrequencyGrid { start, stop, count })
    }

    /// Single-point grid.
    pub fn single(f: f64) -> Result<Self> {
        Self::new(f, f, 1)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        if self.count == 1 {
            0.0
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = self.spacing();
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// Formats a float like C's `%.12g`.
pub fn format_g(x: f64) -> String {
    format_g_prec(x, 12)
}

/// Formats a float like C's `%.<prec>g`.
pub fn format_g_prec(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= prec as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_db_examples() {
        assert_eq!(db_from_power_ratio(1.0).unwrap(), 0.0);
        assert!((db_from_power_ratio(0.5).unwrap() + 3.0103).abs() < 1e-4);
        // -8.5 dB average efficiency corresponds to a linear 0.1412
        assert!((db_from_power_ratio(0.1412).unwrap() + 8.50).abs() < 5e-3);
        assert!((power_ratio_from_db(-8.5) - 0.1412).abs() < 1e-4);
    }

    #[test]
    fn non_positive_ratio_rejected() {
        assert!(matches!(db_from_power_ratio(0.0), Err(Error::Domain(_))));
        assert!(matches!(db_from_power_ratio(-1.0), Err(Error::Domain(_))));
        assert!(db_from_amplitude_ratio(f64::NAN).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = FrequencyGrid::new(2.4e9, 2.5e9, 2).unwrap();
        assert_eq!(g.points(), vec![2.4e9, 2.5e9]);
        let g = FrequencyGrid::single(2.45e9).unwrap();
        assert_eq!(g.points(), vec![2.45e9]);
        let g = FrequencyGrid::new(2.4e9, 2.5e9, 101).unwrap();
        assert!((g.spacing() - 1e6).abs() < 1e-3);
        let pts = g.points();
        assert_eq!(pts.len(), 101);
        assert_eq!(pts[100], 2.5e9);
        assert!(FrequencyGrid::new(2.4e9, 2.5e9, 0).is_err());
        assert!(FrequencyGrid::new(0.0, 2.5e9, 3).is_err());
        assert!(FrequencyGrid::new(2.5e9, 2.4e9, 3).is_err());
    }

    #[test]
    fn format_g_matches_c() {
        assert_eq!(format_g(0.0), "0");
        assert_eq!(format_g(1.0), "1");
        assert_eq!(format_g(2.45e9), "2450000000");
        assert_eq!(format_g(0.1), "0.1");
        assert_eq!(format_g(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g(-3.0103e-5), "-3.0103e-05");
        assert_eq!(format_g(1e12), "1e+12");
        assert_eq!(format_g(123456789012.4), "123456789012");
        assert_eq!(format_g(0.0001), "0.0001");
        assert_eq!(format_g(9.9999999999999e11), "1e+12");
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn power_db_round_trip(exp in -12.0f64..12.0, frac in 1.0f64..10.0) {
                let r = frac * 10f64.powf(exp);
                let back = power_ratio_from_db(db_from_power_ratio(r).unwrap());
                prop_assert!(((back - r) / r).abs() < 1e-12);
            }

            #[test]
            fn grid_strictly_increasing(start in 1e6f64..1e10, span in 1.0f64..1e9, count in 1usize..500) {
                let stop = if count == 1 { start } else { start + span };
                let pts = FrequencyGrid::new(start, stop, count).unwrap().points();
                prop_assert_eq!(pts.len(), count);
                prop_assert!(pts.windows(2).all(|w| w[1] > w[0]));
                prop_assert_eq!(pts[0], start);
                prop_assert_eq!(*pts.last().unwrap(), stop);
            }
        }
    }
}
