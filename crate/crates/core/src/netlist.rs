//! Line-oriented netlist describing a cascade, its sweep and its load.
//!
//! ```text
//! freq 2.4e9 2.5e9 11
//! refz 50
//! msub name=f4b er=3.0 h=0.6e-3 tand=0.0015
//! mline sub=f4b w=1.5e-3 l=18e-3
//! series C 0.5e-12
//! shunt L 0.7e-9
//! load patch=ant4 dphi=82 cm=1.1e-12
//! ```
//!
//! Elements are listed source side first. Values are SI.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::microstrip::{MicrostripLine, SubstrateSpec};
use crate::network::{
    cascade, element_abcd, input_impedance, read_touchstone, reflection, CircuitElement, LoadProfile, DEFAULT_Z_REF,
};
use crate::patch::{preset_input_impedance, CavityOptions, Preset};
use crate::units::{Complex, FrequencyGrid, SIGMA_COPPER};

#[derive(Debug, Clone, PartialEq)]
pub enum LoadSpec {
    Impedance(Complex),
    /// One-port Touchstone file, relative paths resolved against the
    /// netlist's directory.
    File(PathBuf),
    Patch(Preset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetlistDocument {
    pub freq: FrequencyGrid,
    pub z_ref: f64,
    pub substrates: BTreeMap<String, SubstrateSpec>,
    /// Source side first.
    pub elements: Vec<CircuitElement>,
    pub load: Option<LoadSpec>,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

struct Statement<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Statement<'a> {
    fn err(&self, column: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.line, column, msg)
    }

    fn end_column(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.column + t.text.chars().count())
            .unwrap_or(1)
    }

    fn number(&self, tok: &Token<'_>, text: &str, offset: usize) -> Result<f64> {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(tok.column + offset, format!("malformed number '{text}'")))
    }

    fn positional(&self, idx: usize, what: &str) -> Result<&Token<'a>> {
        self.tokens
            .get(idx)
            .ok_or_else(|| self.err(self.end_column(), format!("missing {what}")))
    }

    fn expect_len(&self, n: usize) -> Result<()> {
        match self.tokens.get(n) {
            Some(extra) => Err(self.err(extra.column, format!("unexpected token '{}'", extra.text))),
            None => Ok(()),
        }
    }

    /// `key=value` pairs after the keyword, validated against `allowed`.
    fn keyed(&self, allowed: &[&str]) -> Result<BTreeMap<&'a str, (&'a str, usize)>> {
        let mut map = BTreeMap::new();
        for tok in &self.tokens[1..] {
            let (k, v) = tok
                .text
                .split_once('=')
                .ok_or_else(|| self.err(tok.column, format!("expected key=value, got '{}'", tok.text)))?;
            if !allowed.contains(&k) {
                return Err(self.err(tok.column, format!("unknown key '{k}'")));
            }
            if map.insert(k, (v, tok.column + k.len() + 1)).is_some() {
                return Err(self.err(tok.column, format!("duplicate key '{k}'")));
            }
        }
        Ok(map)
    }

    fn key_number(&self, map: &BTreeMap<&str, (&str, usize)>, key: &str) -> Result<Option<f64>> {
        map.get(key)
            .map(|&(v, col)| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| self.err(col, format!("malformed number '{v}'")))
            })
            .transpose()
    }

    fn required(&self, map: &BTreeMap<&str, (&str, usize)>, key: &str) -> Result<f64> {
        self.key_number(map, key)?
            .ok_or_else(|| self.err(self.end_column(), format!("missing {key}=")))
    }
}

/// Parses netlist text.
pub fn parse_netlist(text: &str) -> Result<NetlistDocument> {
    let mut freq: Option<FrequencyGrid> = None;
    let mut z_ref = DEFAULT_Z_REF;
    let mut substrates = BTreeMap::new();
    let mut elements = Vec::new();
    let mut load = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let body = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(body);
        if tokens.is_empty() {
            continue;
        }
        let st = Statement { line, tokens };
        let kw = &st.tokens[0];
        match kw.text.to_ascii_lowercase().as_str() {
            "freq" => {
                if freq.is_some() {
                    return Err(st.err(kw.column, "duplicate freq directive"));
                }
                let a = st.positional(1, "start frequency")?;
                let b = st.positional(2, "stop frequency")?;
                let n = st.positional(3, "point count")?;
                st.expect_len(4)?;
                let start = st.number(a, a.text, 0)?;
                let stop = st.number(b, b.text, 0)?;
                let count: usize = n
                    .text
                    .parse()
                    .map_err(|_| st.err(n.column, format!("malformed count '{}'", n.text)))?;
                freq = Some(FrequencyGrid::new(start, stop, count).map_err(|e| st.err(a.column, e.to_string()))?);
            }
            "refz" => {
                let v = st.positional(1, "reference impedance")?;
                st.expect_len(2)?;
                z_ref = st.number(v, v.text, 0)?;
                if !(z_ref > 0.0) {
                    return Err(st.err(v.column, "reference impedance must be positive"));
                }
            }
            "msub" => {
                let map = st.keyed(&["name", "er", "h", "tand", "sigma"])?;
                let name = map
                    .get("name")
                    .map(|(v, _)| v.to_string())
                    .ok_or_else(|| st.err(st.end_column(), "missing name="))?;
                let sub = SubstrateSpec {
                    er: st.required(&map, "er")?,
                    tan_d: st.required(&map, "tand")?,
                    h: st.required(&map, "h")?,
                    sigma: st.key_number(&map, "sigma")?.unwrap_or(SIGMA_COPPER),
                };
                sub.validate().map_err(|e| st.err(kw.column, e.to_string()))?;
                substrates.insert(name, sub);
            }
            "mline" => {
                let map = st.keyed(&["sub", "w", "l"])?;
                let &(id, col) = map.get("sub").ok_or_else(|| st.err(st.end_column(), "missing sub="))?;
                let sub = *substrates
                    .get(id)
                    .ok_or_else(|| st.err(col, format!("undefined substrate '{id}'")))?;
                let line = MicrostripLine {
                    sub,
                    w: st.required(&map, "w")?,
                    len: st.required(&map, "l")?,
                };
                line.validate().map_err(|e| st.err(kw.column, e.to_string()))?;
                elements.push(CircuitElement::MsLine(line));
            }
            "tline" => {
                let map = st.keyed(&["z0", "theta", "fref"])?;
                let e = CircuitElement::TLine {
                    z0: st.required(&map, "z0")?,
                    theta_deg: st.required(&map, "theta")?,
                    f_ref: st.required(&map, "fref")?,
                };
                e.validate().map_err(|err| st.err(kw.column, err.to_string()))?;
                elements.push(e);
            }
            kind @ ("series" | "shunt") => {
                let k = st.positional(1, "element kind (L, C or R)")?;
                let v = st.positional(2, "element value")?;
                st.expect_len(3)?;
                let value = st.number(v, v.text, 0)?;
                let e = match (kind, k.text.to_ascii_uppercase().as_str()) {
                    ("series", "L") => CircuitElement::SeriesL(value),
                    ("series", "C") => CircuitElement::SeriesC(value),
                    ("series", "R") => CircuitElement::SeriesR(value),
                    ("shunt", "L") => CircuitElement::ShuntL(value),
                    ("shunt", "C") => CircuitElement::ShuntC(value),
                    ("shunt", "R") => CircuitElement::ShuntR(value),
                    _ => return Err(st.err(k.column, format!("element kind must be L, C or R, got '{}'", k.text))),
                };
                e.validate().map_err(|err| st.err(v.column, err.to_string()))?;
                elements.push(e);
            }
            "load" => {
                if load.is_some() {
                    return Err(st.err(kw.column, "duplicate load clause"));
                }
                let map = st.keyed(&["z", "file", "patch", "dphi", "cm"])?;
                let picked = ["z", "file", "patch"].iter().filter(|k| map.contains_key(*k)).count();
                if picked != 1 {
                    return Err(st.err(kw.column, "load needs exactly one of z=, file=, patch="));
                }
                if !map.contains_key("patch") && (map.contains_key("dphi") || map.contains_key("cm")) {
                    return Err(st.err(kw.column, "dphi= and cm= apply to patch loads only"));
                }
                load = Some(if let Some(&(v, col)) = map.get("z") {
                    let (re, im) = v
                        .split_once(',')
                        .ok_or_else(|| st.err(col, format!("expected z=<re>,<im>, got '{v}'")))?;
                    let re_v = re
                        .parse::<f64>()
                        .map_err(|_| st.err(col, format!("malformed number '{re}'")))?;
                    let im_v = im
                        .parse::<f64>()
                        .map_err(|_| st.err(col + re.len() + 1, format!("malformed number '{im}'")))?;
                    if !(re_v >= 0.0) || !im_v.is_finite() {
                        return Err(st.err(col, "load impedance must be passive and finite"));
                    }
                    LoadSpec::Impedance(Complex::new(re_v, im_v))
                } else if let Some(&(v, _)) = map.get("file") {
                    LoadSpec::File(PathBuf::from(v))
                } else {
                    let &(name, col) = &map["patch"];
                    let dphi = st.key_number(&map, "dphi")?;
                    let cm = st.key_number(&map, "cm")?;
                    LoadSpec::Patch(Preset::from_name(name, dphi, cm).map_err(|e| st.err(col, e.to_string()))?)
                });
            }
            other => return Err(st.err(kw.column, format!("unknown statement '{other}'"))),
        }
    }

    let freq = freq.ok_or_else(|| Error::parse(last_line.max(1), 1, "missing freq directive"))?;
    Ok(NetlistDocument {
        freq,
        z_ref,
        substrates,
        elements,
        load,
    })
}

impl NetlistDocument {
    /// Load impedance profile over the sweep. `base` resolves relative
    /// Touchstone paths.
    pub fn load_profile(&self, base: &Path) -> Result<LoadProfile> {
        let spec = self
            .load
            .as_ref()
            .ok_or_else(|| Error::domain("netlist has no load clause"))?;
        let freqs = self.freq.points();
        match spec {
            LoadSpec::Impedance(z) => LoadProfile::new(freqs.clone(), vec![*z; freqs.len()]),
            LoadSpec::File(path) => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                read_touchstone(&path)?.to_load_profile()
            }
            LoadSpec::Patch(preset) => {
                let opts = CavityOptions::default();
                let z = freqs
                    .iter()
                    .map(|&f| preset_input_impedance(*preset, &opts, f, self.z_ref))
                    .collect::<Result<Vec<_>>>()?;
                LoadProfile::new(freqs.clone(), z)
            }
        }
    }

    /// Input reflection of the cascade terminated in the load, per sweep point.
    pub fn sweep_s11(&self, base: &Path) -> Result<Vec<(f64, Complex)>> {
        let load = self.load_profile(base)?;
        self.freq
            .points()
            .into_iter()
            .map(|f| {
                let zl = load.impedance_at(f)?;
                let zin = if self.elements.is_empty() {
                    zl
                } else {
                    let abcd = self
                        .elements
                        .iter()
                        .map(|e| element_abcd(e, f))
                        .collect::<Result<Vec<_>>>()?;
                    input_impedance(&cascade(&abcd)?, zl)?
                };
                Ok((f, reflection(zin, self.z_ref)))
            })
            .collect()
    }
}
