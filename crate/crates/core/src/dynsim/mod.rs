//! Trajectory oracle: fixed-step RK4 with running averages, and periodic
//! orbits by multiple shooting between crossings of `z = r - 1`.

mod orbit;

use std::collections::BTreeMap;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lorenz::{normalize, LorenzParams, MomentSpec};
use crate::polyalg::rational_to_f64;

pub use orbit::{find_periodic_orbit, harvest_crossings, orbit_average, orbit_csv, Crossing, OrbitResult};

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TrajectoryConfig {
    pub initial_state: [f64; 3],
    pub dt: f64,
    pub t_total: f64,
    pub t_transient: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { initial_state: [1.0, 1.0, 1.0], dt: 1e-3, t_total: 1e5, t_transient: 100.0 }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Argument(format!("step size must be positive, got {}", self.dt)));
        }
        if !(self.t_transient >= 0.0 && self.t_transient < self.t_total) {
            return Err(Error::Argument("need 0 <= transient < horizon".into()));
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("initial state must be finite".into()));
        }
        Ok(())
    }

    fn steps(&self, span: f64) -> usize {
        (span / self.dt).round() as usize
    }
}

/// Classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], s: &[f64; N], dt: f64) -> Result<[f64; N]> {
    let add = |a: &[f64; N], k: &[f64; N], h: f64| std::array::from_fn(|i| a[i] + h * k[i]);
    let k1 = f(s);
    let k2 = f(&add(s, &k1, 0.5 * dt));
    let k3 = f(&add(s, &k2, 0.5 * dt));
    let k4 = f(&add(s, &k3, dt));
    let out: [f64; N] = std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::Blowup { t: f64::NAN })
    }
}

/// Float Lorenz parameters; needs a numeric `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorenz {
    pub beta: f64,
    pub sigma: f64,
    pub r: f64,
}

impl Lorenz {
    pub fn from_params(p: &LorenzParams) -> Result<Self> {
        let r = p.numeric_r().ok_or_else(|| Error::Argument("simulation needs a numeric r".into()))?;
        Ok(Lorenz { beta: rational_to_f64(&p.beta), sigma: rational_to_f64(&p.sigma), r: rational_to_f64(r) })
    }

    pub fn field(&self, s: &[f64; 3]) -> [f64; 3] {
        let [x, y, z] = *s;
        [self.sigma * (y - x), self.r * x - y - x * z, x * y - self.beta * z]
    }

    pub fn jacobian(&self, s: &[f64; 3]) -> [[f64; 3]; 3] {
        let [x, y, z] = *s;
        [[-self.sigma, self.sigma, 0.0], [self.r - z, -1.0, -x], [y, x, -self.beta]]
    }

    pub fn step(&self, s: &[f64; 3], dt: f64) -> Result<[f64; 3]> {
        rk4_step(|u| self.field(u), s, dt)
    }
}

/// Averages of `k` observables over `[t_transient, t_total]` by the trapezoid rule.
///
/// `observe` writes the observables at a state into its slice.
pub fn average_observables(
    sys: &Lorenz,
    cfg: &TrajectoryConfig,
    k: usize,
    mut observe: impl FnMut(&[f64; 3], &mut [f64]),
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut s = cfg.initial_state;
    let n_transient = cfg.steps(cfg.t_transient);
    let n = cfg.steps(cfg.t_total - cfg.t_transient);
    let blowup = |i: usize| Error::Blowup { t: i as f64 * cfg.dt };
    for i in 0..n_transient {
        s = sys.step(&s, cfg.dt).map_err(|_| blowup(i))?;
    }
    let mut vals = vec![0.0; k];
    let mut total = vec![0.0; k];
    // chunked sums keep rounding error small over 1e8 steps
    let mut chunk = vec![0.0; k];
    observe(&s, &mut vals);
    for (c, v) in chunk.iter_mut().zip(&vals) {
        *c += 0.5 * v;
    }
    for i in 1..=n {
        s = sys.step(&s, cfg.dt).map_err(|_| blowup(n_transient + i))?;
        observe(&s, &mut vals);
        let w = if i == n { 0.5 } else { 1.0 };
        for (c, v) in chunk.iter_mut().zip(&vals) {
            *c += w * v;
        }
        if i % 10_000 == 0 {
            for (t, c) in total.iter_mut().zip(chunk.iter_mut()) {
                *t += std::mem::take(c);
            }
        }
    }
    let span = n as f64 * cfg.dt;
    Ok(total.iter().zip(&chunk).map(|(t, c)| (t + c) * cfg.dt / span).collect())
}

/// Power-table evaluation of many monomials at once.
pub(crate) struct MomentEvaluator {
    specs: Vec<MomentSpec>,
    max: usize,
}

impl MomentEvaluator {
    pub(crate) fn new(specs: &[MomentSpec]) -> Self {
        let max = specs.iter().map(|s| s.l.max(s.m).max(s.n) as usize).max().unwrap_or(0);
        MomentEvaluator { specs: specs.to_vec(), max }
    }

    pub(crate) fn eval(&self, s: &[f64; 3], out: &mut [f64]) {
        let mut pw = [[1.0f64; 16]; 3];
        for (d, row) in pw.iter_mut().enumerate() {
            for e in 1..=self.max.min(15) {
                row[e] = row[e - 1] * s[d];
            }
        }
        for (o, m) in out.iter_mut().zip(&self.specs) {
            *o = if self.max <= 15 {
                pw[0][m.l as usize] * pw[1][m.m as usize] * pw[2][m.n as usize]
            } else {
                m.eval(*s)
            };
        }
    }
}

/// Raw and normalized means of a list of moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageReport {
    pub raw: BTreeMap<MomentSpec, f64>,
    /// Raw mean over the value at the nonzero equilibria, where that is defined and nonzero.
    pub normalized: BTreeMap<MomentSpec, f64>,
    pub horizon: f64,
}

impl AverageReport {
    pub(crate) fn build(specs: &[MomentSpec], raw: &[f64], horizon: f64, p: &LorenzParams) -> Self {
        let raw: BTreeMap<_, _> = specs.iter().copied().zip(raw.iter().copied()).collect();
        let normalized = raw.iter().filter_map(|(&m, &v)| normalize(v, m, p).ok().map(|n| (m, n))).collect();
        AverageReport { raw, normalized, horizon }
    }

    pub fn raw(&self, m: MomentSpec) -> Option<f64> {
        self.raw.get(&m).copied()
    }

    pub fn normalized(&self, m: MomentSpec) -> Option<f64> {
        self.normalized.get(&m).copied()
    }
}

#[derive(Serialize)]
struct Row {
    moment: String,
    raw: f64,
    normalized: Option<f64>,
}

impl Serialize for AverageReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Row> = self
            .raw
            .iter()
            .map(|(m, &raw)| Row { moment: m.to_string(), raw, normalized: self.normalized.get(m).copied() })
            .collect();
        let mut st = s.serialize_struct("AverageReport", 2)?;
        st.serialize_field("horizon", &self.horizon)?;
        st.serialize_field("moments", &rows)?;
        st.end()
    }
}

/// Long-time means of `moments` along one trajectory.
pub fn time_average(p: &LorenzParams, moments: &[MomentSpec], cfg: &TrajectoryConfig) -> Result<AverageReport> {
    let sys = Lorenz::from_params(p)?;
    let ev = MomentEvaluator::new(moments);
    let raw = average_observables(&sys, cfg, moments.len(), |s, out| ev.eval(s, out))?;
    Ok(AverageReport::build(moments, &raw, cfg.t_total - cfg.t_transient, p))
}
