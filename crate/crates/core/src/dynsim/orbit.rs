use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{AverageReport, Lorenz, MomentEvaluator};
use crate::error::{Error, Result};
use crate::lorenz::{LorenzParams, MomentSpec};

const SHOOT_STEP: f64 = 1e-4;
const FINE_STEP: f64 = 1e-4;
const TOLERANCE: f64 = 1e-10;

/// An upward crossing of the section `z = r - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub state: [f64; 3],
    /// `'+'` when `x > 0`.
    pub symbol: char,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitResult {
    pub symbols: String,
    pub period: f64,
    pub section_point: [f64; 3],
    /// Start of every shooting segment, all on the section.
    pub segment_points: Vec<[f64; 3]>,
    pub segment_times: Vec<f64>,
    /// Shooting residual of the converged solution.
    pub residual: f64,
    /// Closed trajectory, first point repeated at the end.
    #[serde(skip)]
    pub states: Vec<[f64; 3]>,
    /// Time from each state to the next.
    #[serde(skip)]
    pub steps: Vec<f64>,
}

fn symbol(x: f64) -> char {
    if x > 0.0 {
        '+'
    } else {
        '-'
    }
}

/// Upward section crossings along a trajectory, after a transient.
pub fn harvest_crossings(sys: &Lorenz, start: [f64; 3], transient: f64, span: f64, dt: f64) -> Result<Vec<Crossing>> {
    let h = sys.r - 1.0;
    let mut s = start;
    for _ in 0..(transient / dt) as usize {
        s = sys.step(&s, dt)?;
    }
    let mut out = Vec::new();
    let n = (span / dt) as usize;
    for i in 0..n {
        let next = sys.step(&s, dt)?;
        if s[2] < h && next[2] >= h {
            let w = (h - s[2]) / (next[2] - s[2]);
            let state: [f64; 3] = std::array::from_fn(|k| s[k] + w * (next[k] - s[k]));
            out.push(Crossing { t: (i as f64 + w) * dt, state, symbol: symbol(state[0]) });
        }
        s = next;
    }
    Ok(out)
}

/// Flow map over time `t` and its state Jacobian, by RK4 on the variational system.
fn flow_with_jacobian(sys: &Lorenz, s: [f64; 3], t: f64) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let n = (t / SHOOT_STEP).ceil().max(1.0) as usize;
    let dt = t / n as f64;
    let mut u = [0.0; 12];
    u[..3].copy_from_slice(&s);
    for i in 0..3 {
        u[3 + 4 * i] = 1.0;
    }
    let rhs = |u: &[f64; 12]| {
        let s = [u[0], u[1], u[2]];
        let f = sys.field(&s);
        let j = sys.jacobian(&s);
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&f);
        for r in 0..3 {
            for c in 0..3 {
                out[3 + 3 * r + c] = (0..3).map(|k| j[r][k] * u[3 + 3 * k + c]).sum();
            }
        }
        out
    };
    for _ in 0..n {
        u = super::rk4_step(rhs, &u, dt)?;
    }
    let m = std::array::from_fn(|r| std::array::from_fn(|c| u[3 + 3 * r + c]));
    Ok(([u[0], u[1], u[2]], m))
}

struct Shooting<'a> {
    sys: &'a Lorenz,
    k: usize,
}

impl Shooting<'_> {
    /// Residual and Jacobian for unknowns `[s_0, T_0, s_1, T_1, ...]`.
    fn eval(&self, u: &DVector<f64>, jac: bool) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let k = self.k;
        let mut f = DVector::zeros(4 * k);
        let mut j = DMatrix::zeros(if jac { 4 * k } else { 0 }, 4 * k);
        for seg in 0..k {
            let s = [u[4 * seg], u[4 * seg + 1], u[4 * seg + 2]];
            let t = u[4 * seg + 3];
            if !(t > 0.0) {
                return Err(Error::OrbitNotFound("segment time became nonpositive".into()));
            }
            let (end, m) = flow_with_jacobian(self.sys, s, t)?;
            let nxt = (seg + 1) % k;
            for r in 0..3 {
                f[3 * seg + r] = end[r] - u[4 * nxt + r];
            }
            f[3 * k + seg] = s[2] - (self.sys.r - 1.0);
            if jac {
                let fe = self.sys.field(&end);
                for r in 0..3 {
                    for c in 0..3 {
                        j[(3 * seg + r, 4 * seg + c)] += m[r][c];
                    }
                    j[(3 * seg + r, 4 * seg + 3)] = fe[r];
                    j[(3 * seg + r, 4 * nxt + r)] -= 1.0;
                }
                j[(3 * k + seg, 4 * seg + 2)] = 1.0;
            }
        }
        Ok((f, j))
    }

    fn newton(&self, mut u: DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let (mut f, mut j) = self.eval(&u, true)?;
        let mut norm = f.norm();
        for _ in 0..60 {
            if norm <= TOLERANCE {
                return Ok((u, norm));
            }
            let step = j.clone().lu().solve(&f).ok_or_else(|| Error::OrbitNotFound("singular shooting Jacobian".into()))?;
            let mut lambda = 1.0;
            loop {
                let trial = &u - &step * lambda;
                if let Ok((tf, _)) = self.eval(&trial, false) {
                    if tf.norm() < norm || lambda < 1e-3 {
                        u = trial;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-4 {
                    return Err(Error::OrbitNotFound("line search failed".into()));
                }
            }
            (f, j) = self.eval(&u, true)?;
            norm = f.norm();
        }
        if norm <= TOLERANCE {
            Ok((u, norm))
        } else {
            Err(Error::OrbitNotFound(format!("Newton stalled at residual {norm:.3e}")))
        }
    }
}

/// Upward crossings strictly inside a segment from `s` of duration `t`.
fn interior_crossings(sys: &Lorenz, s: [f64; 3], t: f64) -> Result<usize> {
    let n = (t / FINE_STEP).ceil() as usize;
    let dt = t / n as f64;
    let h = sys.r - 1.0;
    let mut cur = s;
    let mut count = 0;
    // both ends sit on the section, so skip the first and last step
    for i in 0..n {
        let next = sys.step(&cur, dt)?;
        if i > 0 && i + 1 < n && cur[2] < h && next[2] >= h {
            count += 1;
        }
        cur = next;
    }
    Ok(count)
}

/// Periodic orbit with the given symbol sequence (`"+-"`, `"++-"`).
pub fn find_periodic_orbit(p: &LorenzParams, symbols: &str) -> Result<OrbitResult> {
    if symbols.is_empty() || !symbols.chars().all(|c| c == '+' || c == '-') || symbols.len() > 3 {
        return Err(Error::Argument(format!("unsupported symbol sequence {symbols:?}")));
    }
    if !symbols.contains('+') || !symbols.contains('-') {
        return Err(Error::Argument(format!("{symbols:?} does not wind around both equilibria")));
    }
    let sys = Lorenz::from_params(p)?;
    let k = symbols.len();
    let cross = harvest_crossings(&sys, [1.0, 1.0, 1.0], 100.0, 400.0, 1e-3)?;
    let want: Vec<char> = symbols.chars().collect();
    let mut windows: Vec<(f64, usize)> = (0..cross.len().saturating_sub(k))
        .filter(|&i| (0..k).all(|j| cross[i + j].symbol == want[j]))
        .map(|i| {
            let d = (0..3).map(|c| (cross[i + k].state[c] - cross[i].state[c]).powi(2)).sum::<f64>().sqrt();
            (d, i)
        })
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let shoot = Shooting { sys: &sys, k };
    let mut last = String::from("no matching section window");
    for &(_, i) in windows.iter().take(12) {
        let mut u = DVector::zeros(4 * k);
        for j in 0..k {
            for c in 0..3 {
                u[4 * j + c] = cross[i + j].state[c];
            }
            u[4 * j + 3] = cross[i + j + 1].t - cross[i + j].t;
        }
        let (u, residual) = match shoot.newton(u) {
            Ok(v) => v,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let points: Vec<[f64; 3]> = (0..k).map(|j| [u[4 * j], u[4 * j + 1], u[4 * j + 2]]).collect();
        let times: Vec<f64> = (0..k).map(|j| u[4 * j + 3]).collect();
        let got: String = points.iter().map(|s| symbol(s[0])).collect();
        let upward = points.iter().all(|s| sys.field(s)[2] > 0.0);
        let interior_free = (0..k).all(|j| interior_crossings(&sys, points[j], times[j]).is_ok_and(|c| c == 0));
        if got != symbols || !upward || !interior_free {
            last = format!("converged to a different orbit ({got})");
            continue;
        }
        let period: f64 = times.iter().sum();
        // Resample segment by segment so the unstable drift never builds up
        // over a whole period.
        let mut states = Vec::new();
        let mut steps = Vec::new();
        for (s0, &t) in points.iter().zip(&times) {
            let n = (t / FINE_STEP).ceil() as usize;
            let dt = t / n as f64;
            let mut s = *s0;
            for _ in 0..n {
                states.push(s);
                steps.push(dt);
                s = sys.step(&s, dt)?;
            }
        }
        states.push(points[0]);
        return Ok(OrbitResult {
            symbols: symbols.into(),
            period,
            section_point: points[0],
            segment_points: points,
            segment_times: times,
            residual,
            states,
            steps,
        });
    }
    Err(Error::OrbitNotFound(last))
}

/// One-period means along a closed orbit (periodic trapezoid rule).
pub fn orbit_average(orbit: &OrbitResult, p: &LorenzParams, moments: &[MomentSpec]) -> Result<AverageReport> {
    if orbit.states.len() < 2 || orbit.residual > TOLERANCE {
        return Err(Error::Argument("orbit is not converged".into()));
    }
    let ev = MomentEvaluator::new(moments);
    let mut vals = vec![0.0; moments.len()];
    let mut sum = vec![0.0; moments.len()];
    for (s, dt) in orbit.states.iter().zip(&orbit.steps) {
        ev.eval(s, &mut vals);
        for (a, v) in sum.iter_mut().zip(&vals) {
            *a += v * dt;
        }
    }
    let raw: Vec<f64> = sum.iter().map(|a| a / orbit.period).collect();
    Ok(AverageReport::build(moments, &raw, orbit.period, p))
}

/// `t,x,y,z` lines for plotting.
pub fn orbit_csv(orbit: &OrbitResult) -> String {
    let mut out = String::from("t,x,y,z\n");
    let mut t = 0.0;
    for (i, s) in orbit.states.iter().enumerate() {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", t, s[0], s[1], s[2]));
        t += orbit.steps.get(i).copied().unwrap_or(0.0);
    }
    out
}
