//! Engineering-notation values (`2.45GHz`, `0.5pF`, `18mm`) and
//! `start:stop:step` ranges.

/// Parses `text` as a value in `unit`, accepting an SI prefix and an
/// optional trailing unit symbol.
pub fn parse_value(text: &str, unit: &str) -> Result<f64, String> {
    let t = text.trim();
    let mut body = t;
    if !unit.is_empty() {
        for u in unit_aliases(unit) {
            if let Some(stripped) = body.strip_suffix(u) {
                body = stripped;
                break;
            }
        }
    }
    let (num, scale) = match body.char_indices().last() {
        Some((i, ch)) if !ch.is_ascii_digit() && ch != '.' => match prefix_scale(ch) {
            Some(s) => (&body[..i], s),
            None => return Err(format!("'{text}': unknown suffix '{}'", &body[i..])),
        },
        _ => (body, 1.0),
    };
    let v: f64 = num.parse().map_err(|_| {
        format!(
            "'{text}' is not a number{}",
            if unit.is_empty() {
                String::new()
            } else {
                format!(" in {unit}")
            }
        )
    })?;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v * scale)
}

fn unit_aliases(unit: &str) -> &'static [&'static str] {
    match unit {
        "Hz" => &["Hz", "hz", "HZ"],
        "F" => &["F"],
        "H" => &["H"],
        "m" => &["m"],
        "ohm" => &["ohm", "Ohm", "Ω"],
        "deg" => &["deg", "°"],
        "S/m" => &["S/m"],
        _ => &[],
    }
}

fn prefix_scale(ch: char) -> Option<f64> {
    Some(match ch {
        'T' => 1e12,
        'G' => 1e9,
        'M' => 1e6,
        'k' => 1e3,
        'm' => 1e-3,
        'u' | 'µ' => 1e-6,
        'n' => 1e-9,
        'p' => 1e-12,
        'f' => 1e-15,
        _ => return None,
    })
}

/// Parses a single value or an inclusive `start:stop:step` range.
pub fn parse_range(text: &str, unit: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => Ok(vec![parse_value(single, unit)?]),
        [a, b, s] => {
            let (start, stop, step) = (parse_value(a, unit)?, parse_value(b, unit)?, parse_value(s, unit)?);
            if step <= 0.0 {
                return Err(format!("range '{text}': step must be positive"));
            }
            if stop < start {
                return Err(format!("range '{text}': stop is below start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if n > 1_000_000 {
                return Err(format!("range '{text}' has too many points"));
            }
            Ok((0..n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(format!("'{text}' is neither a value nor start:stop:step")),
    }
}

/// Parses `start:stop`, or a single value meaning a one-point band.
pub fn parse_band(text: &str) -> Result<(f64, f64), String> {
    match text.split(':').collect::<Vec<_>>().as_slice() {
        [f] => {
            let v = parse_value(f, "Hz")?;
            Ok((v, v))
        }
        [a, b] => {
            let (lo, hi) = (parse_value(a, "Hz")?, parse_value(b, "Hz")?);
            if hi < lo {
                return Err(format!("band '{text}': stop is below start"));
            }
            Ok((lo, hi))
        }
        _ => Err(format!("band '{text}' must be <start>:<stop>")),
    }
}

/// Parses `<re>,<im>`.
pub fn parse_complex(text: &str) -> Result<(f64, f64), String> {
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| format!("'{text}' must be <re>,<im>"))?;
    Ok((parse_value(re, "ohm")?, parse_value(im, "ohm")?))
}
