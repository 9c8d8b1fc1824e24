/// Nelder–Mead minimizer over a box. Every trial point is projected onto
/// the box before it is evaluated, so the simplex never leaves it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Simplex {
    pub max_iter: usize,
    /// Stop when the spread of vertex values falls below this.
    pub f_tol: f64,
    /// ... and the largest vertex distance from the best falls below this.
    pub x_tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best vertex value after each iteration.
    pub history: Vec<f64>,
}

impl Simplex {
    pub fn minimize<F>(&self, f: F, x0: &[f64], step: &[f64], lo: &[f64], hi: &[f64]) -> SimplexOutcome
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = x0.len();
        let project = |x: &mut Vec<f64>| {
            for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
                *v = v.clamp(*l, *h);
            }
        };
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut start = x0.to_vec();
        project(&mut start);
        pts.push(start.clone());
        for i in 0..n {
            let mut p = start.clone();
            // step away from the nearer bound so the vertex stays distinct
            p[i] += if p[i] + step[i] <= hi[i] { step[i] } else { -step[i] };
            project(&mut p);
            pts.push(p);
        }
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
        let mut history = Vec::new();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            pts = order.iter().map(|&i| pts[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let spread = vals[n] - vals[0];
            let size = pts[1..]
                .iter()
                .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= self.f_tol && size <= self.x_tol) || size == 0.0 {
                converged = true;
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..n)
                .map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64)
                .collect();
            let toward = |t: f64| {
                let mut p: Vec<f64> = centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect();
                project(&mut p);
                p
            };

            let xr = toward(alpha);
            let fr = eval(&xr);
            if fr < vals[0] {
                let xe = toward(gamma);
                let fe = eval(&xe);
                if fe < fr {
                    pts[n] = xe;
                    vals[n] = fe;
                } else {
                    pts[n] = xr;
                    vals[n] = fr;
                }
            } else if fr < vals[n - 1] {
                pts[n] = xr;
                vals[n] = fr;
            } else {
                let (xc, fc) = if fr < vals[n] {
                    let xc = toward(alpha * rho);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = toward(-rho);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < vals[n].min(fr) {
                    pts[n] = xc;
                    vals[n] = fc;
                } else {
                    let best = pts[0].clone();
                    for i in 1..=n {
                        let mut p: Vec<f64> = best.iter().zip(&pts[i]).map(|(b, x)| b + sigma * (x - b)).collect();
                        project(&mut p);
                        vals[i] = eval(&p);
                        pts[i] = p;
                    }
                }
            }
            history.push(vals.iter().copied().fold(f64::INFINITY, f64::min));
        }

        let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
        SimplexOutcome {
            x: pts[best].clone(),
            value: vals[best],
            iterations,
            converged,
            history,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOLVER: Simplex = Simplex {
        max_iter: 5000,
        f_tol: 1e-14,
        x_tol: 1e-10,
    };

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = SOLVER.minimize(rosen, &[-1.2, 1.0], &[0.5, 0.5], &[-5.0, -5.0], &[5.0, 5.0]);
        assert!(out.converged);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-5 && (out.x[1] - 1.0).abs() < 1e-5,
            "{:?}",
            out.x
        );
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stays_inside_the_box() {
        let f = |x: &[f64]| x[0] + x[1];
        let out = SOLVER.minimize(f, &[0.5, 0.5], &[0.2, 0.2], &[0.0, 0.25], &[1.0, 1.0]);
        assert!(
            (out.x[0] - 0.0).abs() < 1e-9 && (out.x[1] - 0.25).abs() < 1e-9,
            "{:?}",
            out.x
        );
    }
}
