//! Touchstone version 1 reader and writer for one- and two-port S data.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::{LoadProfile, ScatteringMatrix};
use crate::error::{Error, Result};
use crate::units::{format_g, Complex};

/// Swept S-parameters as stored in a `.s1p` / `.s2p` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Touchstone {
    pub z_ref: f64,
    pub freqs: Vec<f64>,
    pub data: Vec<ScatteringMatrix>,
}

impl Touchstone {
    pub fn new(z_ref: f64, freqs: Vec<f64>, data: Vec<ScatteringMatrix>) -> Result<Self> {
        if freqs.len() != data.len() {
            return Err(Error::domain("frequency and data counts differ"));
        }
        if let Some(first) = data.first() {
            if data.iter().any(|s| s.ports() != first.ports()) {
                return Err(Error::domain("all samples must have the same port count"));
            }
        }
        Ok(Touchstone { z_ref, freqs, data })
    }

    pub fn ports(&self) -> usize {
        self.data.first().map_or(0, |s| s.ports())
    }

    /// Port-1 impedance `z_ref (1 + S11)/(1 − S11)` of a one-port sweep.
    pub fn to_load_profile(&self) -> Result<LoadProfile> {
        if self.ports() != 1 {
            return Err(Error::domain(format!(
                "a load profile needs one-port data, got {} ports",
                self.ports()
            )));
        }
        let one = Complex::new(1.0, 0.0);
        let z = self
            .data
            .iter()
            .map(|s| {
                let g = s.s(0, 0);
                if (one - g).norm() < 1e-15 {
                    Err(Error::numeric("S11 = 1 maps to an infinite impedance"))
                } else {
                    Ok((one + g) / (one - g) * self.z_ref)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        LoadProfile::new(self.freqs.clone(), z)
    }

    /// One-port sweep from reflection samples.
    pub fn one_port(z_ref: f64, freqs: Vec<f64>, s11: &[Complex]) -> Result<Self> {
        let data = s11
            .iter()
            .map(|g| ScatteringMatrix::new(DMatrix::from_element(1, 1, *g), z_ref))
            .collect::<Result<Vec<_>>>()?;
        Touchstone::new(z_ref, freqs, data)
    }

    /// One-port sweep from a load profile.
    pub fn from_load_profile(profile: &LoadProfile, z_ref: f64) -> Result<Self> {
        let data = profile
            .impedances()
            .iter()
            .map(|z| {
                let g = (z - z_ref) / (z + z_ref);
                ScatteringMatrix::new(DMatrix::from_element(1, 1, g), z_ref)
            })
            .collect::<Result<Vec<_>>>()?;
        Touchstone::new(z_ref, profile.freqs().to_vec(), data)
    }
}

#[derive(Clone, Copy)]
enum Format {
    Ri,
    Ma,
    Db,
}

fn ports_from_path(path: &Path) -> Result<usize> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "s1p" => Ok(1),
        "s2p" => Ok(2),
        _ => Err(Error::domain(format!(
            "{}: expected a .s1p or .s2p file",
            path.display()
        ))),
    }
}

pub fn read_touchstone(path: impl AsRef<Path>) -> Result<Touchstone> {
    let path = path.as_ref();
    let ports = ports_from_path(path)?;
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_touchstone_str(&text, ports)
}

/// Parses Touchstone v1 text holding `ports`-port S data.
pub fn read_touchstone_str(text: &str, ports: usize) -> Result<Touchstone> {
    if !(1..=2).contains(&ports) {
        return Err(Error::domain(format!("unsupported port count {ports}")));
    }
    let mut scale = 1e9;
    let mut format = Format::Ma;
    let mut z_ref = 50.0;
    let mut seen_option = false;
    let mut freqs = Vec::new();
    let mut data = Vec::new();
    let columns = 1 + 2 * ports * ports;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('!').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens = tokens_with_columns(content);
        if trimmed.starts_with('#') {
            if seen_option {
                return Err(Error::parse(lineno, 1, "duplicate option line"));
            }
            if !freqs.is_empty() {
                return Err(Error::parse(lineno, 1, "option line after data"));
            }
            seen_option = true;
            parse_option_line(&tokens, lineno, &mut scale, &mut format, &mut z_ref)?;
            continue;
        }
        if tokens.len() != columns {
            return Err(Error::parse(
                lineno,
                tokens.get(columns.min(tokens.len())).map_or(1, |t| t.0),
                format!("expected {columns} columns, found {}", tokens.len()),
            ));
        }
        let mut nums = Vec::with_capacity(columns);
        for &(col, tok) in &tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, col, format!("malformed number '{tok}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, col, format!("non-finite number '{tok}'")));
            }
            nums.push(v);
        }
        let f = nums[0] * scale;
        if let Some(&prev) = freqs.last() {
            if !(f > prev) {
                return Err(Error::parse(
                    lineno,
                    tokens[0].0,
                    "frequencies must be strictly increasing",
                ));
            }
        }
        let vals: Vec<Complex> = nums[1..]
            .chunks(2)
            .map(|p| match format {
                Format::Ri => Complex::new(p[0], p[1]),
                Format::Ma => Complex::from_polar(p[0], p[1].to_radians()),
                Format::Db => Complex::from_polar(10f64.powf(p[0] / 20.0), p[1].to_radians()),
            })
            .collect();
        let entries = if ports == 1 {
            DMatrix::from_element(1, 1, vals[0])
        } else {
            // two-port column order is S11 S21 S12 S22
            DMatrix::from_row_slice(2, 2, &[vals[0], vals[2], vals[1], vals[3]])
        };
        freqs.push(f);
        data.push(ScatteringMatrix::new(entries, z_ref)?);
    }
    Touchstone::new(z_ref, freqs, data)
}

fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_option_line(
    tokens: &[(usize, &str)],
    lineno: usize,
    scale: &mut f64,
    format: &mut Format,
    z_ref: &mut f64,
) -> Result<()> {
    // '#' may be glued to the first keyword
    let mut items: Vec<(usize, String)> = Vec::new();
    for &(col, tok) in tokens {
        let tok = tok.strip_prefix('#').unwrap_or(tok);
        if !tok.is_empty() {
            items.push((col, tok.to_ascii_uppercase()));
        }
    }
    let mut i = 0;
    while i < items.len() {
        let (col, ref tok) = items[i];
        match tok.as_str() {
            "HZ" => *scale = 1.0,
            "KHZ" => *scale = 1e3,
            "MHZ" => *scale = 1e6,
            "GHZ" => *scale = 1e9,
            "S" => {}
            "Y" | "Z" | "H" | "G" => {
                return Err(Error::parse(
                    lineno,
                    col,
                    format!("parameter type '{tok}' not supported; only S"),
                ))
            }
            "RI" => *format = Format::Ri,
            "MA" => *format = Format::Ma,
            "DB" => *format = Format::Db,
            "R" => {
                let (vcol, v) = items
                    .get(i + 1)
                    .ok_or_else(|| Error::parse(lineno, col, "missing reference impedance after R"))?;
                let z: f64 = v
                    .parse()
                    .map_err(|_| Error::parse(lineno, *vcol, format!("malformed impedance '{v}'")))?;
                if !(z > 0.0) {
                    return Err(Error::parse(lineno, *vcol, "reference impedance must be positive"));
                }
                *z_ref = z;
                i += 1;
            }
            _ => return Err(Error::parse(lineno, col, format!("unknown option '{tok}'"))),
        }
        i += 1;
    }
    Ok(())
}

/// Renders Touchstone text: `# HZ S RI R <z_ref>` and one row per frequency.
pub fn touchstone_string(t: &Touchstone) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# HZ S RI R {}", format_g(t.z_ref));
    for (f, s) in t.freqs.iter().zip(&t.data) {
        out.push_str(&format_g(*f));
        let order: &[(usize, usize)] = if s.ports() == 1 {
            &[(0, 0)]
        } else {
            &[(0, 0), (1, 0), (0, 1), (1, 1)]
        };
        for &(i, j) in order {
            let v = s.s(i, j);
            let _ = write!(out, " {} {}", format_g(v.re), format_g(v.im));
        }
        out.push('\n');
    }
    out
}

pub fn write_touchstone(t: &Touchstone, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if !(1..=2).contains(&t.ports()) {
        return Err(Error::domain(format!(
            "Touchstone writer supports 1 or 2 ports, got {}",
            t.ports()
        )));
    }
    std::fs::write(path, touchstone_string(t)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
