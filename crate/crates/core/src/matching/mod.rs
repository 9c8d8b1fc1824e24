//! Lumped ladder matching: reflection of a ladder in front of a load,
//! minimax synthesis of its element values, and band extraction.

mod simplex;

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{cascade, element_abcd, input_impedance, reflection, CircuitElement, LoadProfile};
use crate::units::{db20_floored, Complex};
use simplex::Simplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Series,
    Shunt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Inductor,
    Capacitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub orientation: Orientation,
    pub kind: ElementKind,
}

impl Slot {
    pub const fn new(orientation: Orientation, kind: ElementKind) -> Self {
        Slot { orientation, kind }
    }

    fn element(&self, value: f64) -> CircuitElement {
        match (self.orientation, self.kind) {
            (Orientation::Series, ElementKind::Inductor) => CircuitElement::SeriesL(value),
            (Orientation::Series, ElementKind::Capacitor) => CircuitElement::SeriesC(value),
            (Orientation::Shunt, ElementKind::Inductor) => CircuitElement::ShuntL(value),
            (Orientation::Shunt, ElementKind::Capacitor) => CircuitElement::ShuntC(value),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.orientation {
            Orientation::Series => "series",
            Orientation::Shunt => "shunt",
        };
        let k = match self.kind {
            ElementKind::Inductor => "L",
            ElementKind::Capacitor => "C",
        };
        write!(f, "{o}-{k}")
    }
}

/// Ordered ladder slots, source side first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderTopology {
    slots: Vec<Slot>,
}

impl LadderTopology {
    pub const MAX_SLOTS: usize = 6;

    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.is_empty() || slots.len() > Self::MAX_SLOTS {
            return Err(Error::domain(format!(
                "ladder needs 1 to {} slots, got {}",
                Self::MAX_SLOTS,
                slots.len()
            )));
        }
        Ok(LadderTopology { slots })
    }

    /// Shunt-L, series-C, shunt-L, series-C from the source.
    pub fn four_element() -> Self {
        use ElementKind::*;
        use Orientation::*;
        LadderTopology {
            slots: vec![
                Slot::new(Shunt, Inductor),
                Slot::new(Series, Capacitor),
                Slot::new(Shunt, Inductor),
                Slot::new(Series, Capacitor),
            ],
        }
    }

    /// Parses a comma-separated list such as `shunt-L,series-C`.
    pub fn parse(text: &str) -> Result<Self> {
        let slots = text
            .split(',')
            .map(|tok| {
                let t = tok.trim().to_ascii_lowercase();
                let (o, k) = t
                    .split_once(['-', ':'])
                    .ok_or_else(|| Error::domain(format!("slot '{tok}' is not <series|shunt>-<L|C>")))?;
                let orientation = match o {
                    "series" => Orientation::Series,
                    "shunt" => Orientation::Shunt,
                    _ => return Err(Error::domain(format!("unknown slot orientation '{o}'"))),
                };
                let kind = match k {
                    "l" => ElementKind::Inductor,
                    "c" => ElementKind::Capacitor,
                    _ => return Err(Error::domain(format!("unknown slot kind '{k}'"))),
                };
                Ok(Slot { orientation, kind })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(slots)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn elements(&self, values: &[f64]) -> Result<Vec<CircuitElement>> {
        if values.len() != self.slots.len() {
            return Err(Error::domain(format!(
                "{} values for a {}-slot ladder",
                values.len(),
                self.slots.len()
            )));
        }
        self.slots
            .iter()
            .zip(values)
            .map(|(s, &v)| {
                let e = s.element(v);
                e.validate()?;
                Ok(e)
            })
            .collect()
    }
}

impl fmt::Display for LadderTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Input reflection of `topology` with `values` in front of `load`.
pub fn evaluate_s11(
    topology: &LadderTopology,
    values: &[f64],
    load: &LoadProfile,
    grid: &[f64],
    z_ref: f64,
) -> Result<Vec<Complex>> {
    if !(z_ref > 0.0) {
        return Err(Error::domain(format!(
            "reference impedance must be positive, got {z_ref}"
        )));
    }
    let elements = topology.elements(values)?;
    grid.iter()
        .map(|&f| {
            let zl = load.impedance_at(f)?;
            let abcd = elements
                .iter()
                .map(|e| element_abcd(e, f))
                .collect::<Result<Vec<_>>>()?;
            let zin = input_impedance(&cascade(&abcd)?, zl)?;
            Ok(reflection(zin, z_ref))
        })
        .collect()
}

/// Element value bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    /// H.
    pub inductance: (f64, f64),
    /// F.
    pub capacitance: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            inductance: (0.1e-9, 30e-9),
            capacitance: (0.1e-12, 10e-12),
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        for (what, (lo, hi)) in [("inductance", self.inductance), ("capacitance", self.capacitance)] {
            if !(lo > 0.0 && lo.is_finite() && hi.is_finite()) {
                return Err(Error::domain(format!(
                    "{what} bounds must be positive, got [{lo}, {hi}]"
                )));
            }
            if lo > hi {
                return Err(Error::domain(format!(
                    "infeasible {what} bounds: lower {lo} exceeds upper {hi}"
                )));
            }
        }
        Ok(())
    }

    fn of(&self, kind: ElementKind) -> (f64, f64) {
        match kind {
            ElementKind::Inductor => self.inductance,
            ElementKind::Capacitor => self.capacitance,
        }
    }
}

/// Seed of the start dispersion used when none is given.
pub const DEFAULT_SEED: u64 = 2_450_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub n_starts: usize,
    pub seed: u64,
    /// Points in the band grid.
    pub band_points: usize,
    pub z_ref: f64,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            n_starts: 16,
            seed: DEFAULT_SEED,
            band_points: 31,
            z_ref: 50.0,
            max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartDiagnostics {
    pub initial_values: Vec<f64>,
    /// Max in-band |S11| at the start point, dB.
    pub initial_db: f64,
    pub final_values: Vec<f64>,
    pub final_db: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after each simplex iteration, dB.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Element values in slot order, H or F.
    pub values: Vec<f64>,
    /// Achieved max in-band |S11|, dB.
    pub max_s11_db: f64,
    pub freqs: Vec<f64>,
    pub s11: Vec<Complex>,
    pub starts: Vec<StartDiagnostics>,
    /// Index into `starts` of the winning start.
    pub best_start: usize,
}

impl MatchResult {
    pub fn iterations(&self) -> usize {
        self.starts[self.best_start].iterations
    }

    pub fn converged(&self) -> bool {
        self.starts[self.best_start].converged
    }
}

/// Evenly spaced band grid; a single point when `f1 == f2`.
pub fn band_grid(f1: f64, f2: f64, points: usize) -> Result<Vec<f64>> {
    if !(f1 > 0.0) || f2 < f1 || !f2.is_finite() {
        return Err(Error::domain(format!("invalid band [{f1}, {f2}]")));
    }
    if f1 == f2 {
        return Ok(vec![f1]);
    }
    crate::units::FrequencyGrid::new(f1, f2, points.max(2)).map(|g| g.points())
}

/// `max_f |S11(f)|` in dB.
pub fn max_s11_db(s11: &[Complex]) -> f64 {
    s11.iter()
        .map(|g| db20_floored(g.norm()))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimax synthesis of the ladder values over `band`.
///
/// Each start runs a bounded downhill simplex on `log10` of the element
/// values from a Latin-hypercube point. The best start wins by objective,
/// then iteration count, then the value vector.
pub fn optimize(
    topology: &LadderTopology,
    load: &LoadProfile,
    band: (f64, f64),
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> Result<MatchResult> {
    bounds.validate()?;
    if config.n_starts == 0 {
        return Err(Error::domain("optimizer needs at least one start"));
    }
    let grid = band_grid(band.0, band.1, config.band_points)?;
    for &f in [grid[0], *grid.last().unwrap()].iter() {
        load.impedance_at(f)?;
    }
    let loads: Vec<Complex> = grid.iter().map(|&f| load.impedance_at(f)).collect::<Result<_>>()?;

    let dims = topology.len();
    let lo: Vec<f64> = topology.slots().iter().map(|s| bounds.of(s.kind).0.log10()).collect();
    let hi: Vec<f64> = topology.slots().iter().map(|s| bounds.of(s.kind).1.log10()).collect();
    let step: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| ((h - l) * 0.1).max(1e-3)).collect();

    let objective = |logv: &[f64]| -> f64 {
        let values: Vec<f64> = logv.iter().map(|v| 10f64.powf(*v)).collect();
        let Ok(elements) = topology.elements(&values) else {
            return f64::INFINITY;
        };
        let mut worst = f64::NEG_INFINITY;
        for (&f, &zl) in grid.iter().zip(&loads) {
            let abcd: Result<Vec<_>> = elements.iter().map(|e| element_abcd(e, f)).collect();
            let Ok(zin) = abcd.and_then(|m| input_impedance(&cascade(&m)?, zl)) else {
                return f64::INFINITY;
            };
            worst = worst.max(db20_floored(reflection(zin, config.z_ref).norm()));
        }
        worst
    };

    let starts = latin_hypercube(config.n_starts, dims, config.seed)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(lo.iter().zip(&hi))
                .map(|(t, (l, h))| l + t * (h - l))
                .collect::<Vec<f64>>()
        })
        .collect::<Vec<_>>();

    let solver = Simplex {
        max_iter: config.max_iter,
        f_tol: 1e-9,
        x_tol: 1e-9,
    };
    let runs: Vec<StartDiagnostics> = starts
        .par_iter()
        .map(|x0| {
            let initial_db = objective(x0);
            let out = solver.minimize(objective, x0, &step, &lo, &hi);
            StartDiagnostics {
                initial_values: x0.iter().map(|v| 10f64.powf(*v)).collect(),
                initial_db,
                final_values: out.x.iter().map(|v| 10f64.powf(*v)).collect(),
                final_db: out.value,
                iterations: out.iterations,
                converged: out.converged,
                history: out.history,
            }
        })
        .collect();

    let best_start = (0..runs.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&runs[a], &runs[b]);
            ra.final_db
                .total_cmp(&rb.final_db)
                .then(ra.iterations.cmp(&rb.iterations))
                .then_with(|| {
                    ra.final_values
                        .iter()
                        .zip(&rb.final_values)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        })
        .expect("at least one start");
    let values = runs[best_start].final_values.clone();
    if !runs[best_start].final_db.is_finite() {
        return Err(Error::numeric("no start produced a finite reflection"));
    }
    let s11 = evaluate_s11(topology, &values, load, &grid, config.z_ref)?;
    Ok(MatchResult {
        max_s11_db: max_s11_db(&s11),
        values,
        freqs: grid,
        s11,
        starts: runs,
        best_start,
    })
}

/// `n` points in `[0, 1)^dims`, one per stratum along every axis.
fn latin_hypercube(n: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![vec![0.0; dims]; n];
    for d in 0..dims {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (p, s) in pts.iter_mut().zip(strata) {
            p[d] = (s as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    pts
}

/// Maximal intervals where `curve_db ≤ level`, with edges interpolated
/// linearly between grid points.
pub fn bandwidth_at_level(freqs: &[f64], curve_db: &[f64], level: f64) -> Vec<(f64, f64)> {
    let n = freqs.len().min(curve_db.len());
    let mut out = Vec::new();
    let below = |i: usize| curve_db[i] <= level;
    let cross = |i: usize| {
        let (f0, f1, v0, v1) = (freqs[i], freqs[i + 1], curve_db[i], curve_db[i + 1]);
        f0 + (level - v0) / (v1 - v0) * (f1 - f0)
    };
    let mut start: Option<f64> = None;
    for i in 0..n {
        match (start, below(i)) {
            (None, true) => start = Some(if i == 0 { freqs[0] } else { cross(i - 1) }),
            (Some(s), false) => {
                out.push((s, cross(i - 1)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, freqs[n - 1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn near_through_ladder_barely_reflects() {
        let load = LoadProfile::constant(c(50.0, 0.0), 2.4e9, 2.5e9).unwrap();
        let grid = band_grid(2.4e9, 2.5e9, 11).unwrap();
        let s = evaluate_s11(
            &LadderTopology::four_element(),
            &[1e-6, 1e-6, 1e-6, 1e-6],
            &load,
            &grid,
            50.0,
        )
        .unwrap();
        assert!(max_s11_db(&s) <= -30.0, "{}", max_s11_db(&s));
    }

    #[test]
    fn single_shunt_capacitor_matches_closed_form() {
        let load = LoadProfile::constant(c(50.0, 0.0), 2.4e9, 2.5e9).unwrap();
        let topo = LadderTopology::parse("shunt-C").unwrap();
        let cap = 0.8e-12;
        for f in [2.4e9, 2.45e9, 2.5e9] {
            let s = evaluate_s11(&topo, &[cap], &load, &[f], 50.0).unwrap()[0];
            let x = c(0.0, 2.0 * PI * f * cap * 25.0);
            let expected = (x / (c(1.0, 0.0) + x)).norm();
            assert!((s.norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_outside_load_is_a_range_error() {
        let load = LoadProfile::constant(c(50.0, 0.0), 2.4e9, 2.5e9).unwrap();
        let topo = LadderTopology::parse("series-L").unwrap();
        let r = evaluate_s11(&topo, &[1e-9], &load, &[2.6e9], 50.0);
        assert!(matches!(r, Err(Error::Range { .. })));
    }

    #[test]
    fn topology_parsing_and_limits() {
        let t = LadderTopology::parse("shunt-L, series-C ,shunt-L,series-C").unwrap();
        assert_eq!(t, LadderTopology::four_element());
        assert_eq!(t.to_string(), "shunt-L,series-C,shunt-L,series-C");
        assert!(LadderTopology::parse("diagonal-L").is_err());
        assert!(LadderTopology::new(vec![]).is_err());
        assert!(LadderTopology::new(vec![Slot::new(Orientation::Series, ElementKind::Inductor); 7]).is_err());
        assert!(t.elements(&[1e-9, 1e-12]).is_err());
        assert!(t.elements(&[1e-9, -1e-12, 1e-9, 1e-12]).is_err());
    }

    #[test]
    fn infeasible_bounds_rejected() {
        let load = LoadProfile::constant(c(100.0, 0.0), 2.4e9, 2.5e9).unwrap();
        let bounds = Bounds {
            inductance: (5e-9, 1e-9),
            ..Bounds::default()
        };
        let r = optimize(
            &LadderTopology::four_element(),
            &load,
            (2.4e9, 2.5e9),
            &bounds,
            &OptimizerConfig::default(),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn matched_load_stays_matched() {
        let load = LoadProfile::constant(c(50.0, 0.0), 2.4e9, 2.5e9).unwrap();
        let bounds = Bounds {
            inductance: (0.1e-9, 1e-6),
            capacitance: (0.1e-12, 1e-6),
        };
        let topo = LadderTopology::parse("shunt-L,series-C").unwrap();
        let r = optimize(&topo, &load, (2.4e9, 2.5e9), &bounds, &OptimizerConfig::default()).unwrap();
        assert!(r.max_s11_db <= -40.0, "{}", r.max_s11_db);
    }

    #[test]
    fn best_so_far_never_increases() {
        let load = LoadProfile::constant(c(12.0, -30.0), 2.4e9, 2.5e9).unwrap();
        let r = optimize(
            &LadderTopology::four_element(),
            &load,
            (2.4e9, 2.5e9),
            &Bounds::default(),
            &OptimizerConfig::default(),
        )
        .unwrap();
        for s in &r.starts {
            assert!(s.history.windows(2).all(|w| w[1] <= w[0]));
            assert!(s.final_db <= s.initial_db);
            assert!(r.max_s11_db <= s.initial_db);
        }
        let b = Bounds::default();
        for (v, slot) in r.values.iter().zip(LadderTopology::four_element().slots()) {
            let (lo, hi) = b.of(slot.kind);
            assert!(*v >= lo * (1.0 - 1e-12) && *v <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn latin_hypercube_fills_every_stratum() {
        let pts = latin_hypercube(16, 3, 7);
        for d in 0..3 {
            let mut seen: Vec<usize> = pts.iter().map(|p| (p[d] * 16.0) as usize).collect();
            seen.sort();
            assert_eq!(seen, (0..16).collect::<Vec<_>>());
        }
        assert_eq!(pts, latin_hypercube(16, 3, 7));
    }

    #[test]
    fn bandwidth_edge_cases() {
        let f: Vec<f64> = (0..11).map(|i| 2.4e9 + i as f64 * 1e7).collect();
        assert_eq!(bandwidth_at_level(&f, &[-10.0; 11], -6.0), vec![(2.4e9, 2.5e9)]);
        assert!(bandwidth_at_level(&f, &[-3.0; 11], -6.0).is_empty());
        let mut two = vec![-3.0; 11];
        two[2] = -9.0;
        two[8] = -9.0;
        let iv = bandwidth_at_level(&f, &two, -6.0);
        assert_eq!(iv.len(), 2);
        assert!(iv[0].1 < iv[1].0);
        assert!((iv[0].0 - 2.415e9).abs() < 1.0 && (iv[0].1 - 2.425e9).abs() < 1.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn intervals_are_disjoint_and_inside(curve in prop::collection::vec(-20.0f64..0.0, 2..60), level in -15.0f64..-1.0) {
                let f: Vec<f64> = (0..curve.len()).map(|i| 1e9 + i as f64 * 1e6).collect();
                let iv = bandwidth_at_level(&f, &curve, level);
                for (lo, hi) in &iv {
                    prop_assert!(lo <= hi);
                    prop_assert!(*lo >= f[0] && *hi <= *f.last().unwrap());
                }
                for w in iv.windows(2) {
                    prop_assert!(w[0].1 < w[1].0);
                }
            }

            #[test]
            fn passive_loads_never_reflect_more_than_unity(
                r in 0.0f64..500.0, x in -500.0f64..500.0,
                l in 0.1e-9f64..30e-9, cap in 0.1e-12f64..10e-12,
            ) {
                let load = LoadProfile::constant(Complex::new(r, x), 2.4e9, 2.5e9).unwrap();
                let grid = band_grid(2.4e9, 2.5e9, 5).unwrap();
                let s = evaluate_s11(&LadderTopology::four_element(), &[l, cap, l, cap], &load, &grid, 50.0).unwrap();
                prop_assert!(s.iter().all(|g| g.norm() <= 1.0 + 1e-12));
            }
        }
    }
}
