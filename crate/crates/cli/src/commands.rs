use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use sosbound::certify::CertificateFile;
use sosbound::dynsim::{find_periodic_orbit, orbit_average, orbit_csv, time_average, TrajectoryConfig};
use sosbound::lorenz::{
    appendix_relations, builtin_certificate, gamma_feasible, proportional_family, symmetric_moments, z3_upper_beta,
    BuiltinName, LorenzParams, MomentSpec,
};
use sosbound::pipeline::{run_bound, summary_table, BoundRequest, TableOptions};
use sosbound::polyalg::{parse_rational, Rational};
use sosbound::sosform::Sense;
use sosbound::Error;

use crate::config::RunConfig;
use crate::{Command, SystemArgs};

pub struct Outcome {
    pub report: Value,
    /// Plain-text output replacing the JSON report (CSV).
    pub raw: Option<String>,
    /// Whether every verification requested by the task passed.
    pub passed: bool,
}

fn outcome(report: impl Serialize, passed: bool) -> Result<Outcome> {
    Ok(Outcome { report: serde_json::to_value(report)?, raw: None, passed })
}

/// The subcommand a config-only run stands for, with its fields left empty.
pub fn default_command(task: &str) -> Result<Command> {
    Ok(match task {
        "bound" => Command::Bound {
            moment: None,
            degree: None,
            sense: None,
            scale: None,
            no_certify: false,
            certificate_out: None,
        },
        "certify" => Command::Certify { name: None, certificate_out: None },
        "verify" => Command::Verify { file: None },
        "average" => Command::Average { t_total: None, t_transient: None, dt: None, initial: None },
        "orbit" => Command::Orbit { symbols: None, csv: None },
        "relations" => Command::Relations,
        "region" => Command::Region {
            sigmas: "1,10,100".into(),
            betas: "0.04,0.05,0.1,1,8/3".into(),
            format: "json".into(),
        },
        "report" => Command::Report { degree: None, t_total: None },
        other => bail!("unknown task {other:?}"),
    })
}

fn rational(text: &str) -> Result<Rational> {
    parse_rational(text).ok_or_else(|| anyhow!("not a rational number: {text:?}"))
}

fn params(sys: &SystemArgs, cfg: &RunConfig, default_r: &str) -> Result<LorenzParams> {
    let pick = |flag: &Option<String>, file: &Option<String>, d: &str| flag.clone().or_else(|| file.clone()).unwrap_or_else(|| d.into());
    let beta = pick(&sys.beta, &cfg.system.beta, "8/3");
    let sigma = pick(&sys.sigma, &cfg.system.sigma, "10");
    let r = pick(&sys.r, &cfg.system.r, default_r);
    Ok(LorenzParams::parse(&beta, &sigma, &r)?)
}

fn labels(p: &LorenzParams, extra: &[(&str, String)]) -> BTreeMap<String, String> {
    let mut l = p.labels();
    l.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    l
}

fn trajectory(cfg: &RunConfig, t_total: Option<f64>, t_transient: Option<f64>, dt: Option<f64>) -> TrajectoryConfig {
    let d = TrajectoryConfig::default();
    TrajectoryConfig {
        initial_state: d.initial_state,
        dt: dt.or(cfg.dt).unwrap_or(d.dt),
        t_total: t_total.or(cfg.t_total).unwrap_or(d.t_total),
        t_transient: t_transient.or(cfg.t_transient).unwrap_or(d.t_transient),
    }
}

fn list(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(|s| rational(s.trim())).collect()
}

pub fn execute(cmd: &Command, sys: &SystemArgs, cfg: &RunConfig) -> Result<Outcome> {
    match cmd {
        Command::Bound { moment, degree, sense, scale, no_certify, certificate_out } => {
            let moment = moment.clone().or_else(|| cfg.moment.clone()).ok_or_else(|| anyhow!("bound needs --moment"))?;
            let degree = degree.or(cfg.degree).ok_or_else(|| anyhow!("bound needs --degree"))?;
            let sense = match sense.clone().or_else(|| cfg.sense.clone()).as_deref() {
                None | Some("upper") => Sense::Upper,
                Some("lower") => Sense::Lower,
                Some(other) => bail!("sense must be upper or lower, got {other:?}"),
            };
            let p = params(sys, cfg, "28")?;
            let spec = MomentSpec::parse(&moment)?;
            let mut req = BoundRequest::new(p.clone(), spec, degree);
            req.sense = sense;
            req.certify = !no_certify;
            if let Some(s) = scale.clone().or_else(|| cfg.scale.clone()) {
                req.scale = rational(&s)?;
            }
            let out = run_bound(&req)?;
            let solved = out.report.numeric_optimum.is_some();
            let passed = solved && (!req.certify || sense == Sense::Lower || out.report.verified);
            if let (Some(path), Some(cert), Some(g)) = (certificate_out, &out.certificate, &out.problem) {
                let extra = [("moment", spec.to_string()), ("degree", degree.to_string())];
                CertificateFile::new(cert, &g.s.phi, &g.s.field, labels(&p, &extra))
                    .write(path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            outcome(&out.report, passed)
        }
        Command::Certify { name, certificate_out } => {
            let name = name.clone().or_else(|| cfg.certificate.clone()).ok_or_else(|| anyhow!("certify needs --name"))?;
            let which: BuiltinName = name.parse()?;
            let p = params(sys, cfg, "r")?;
            let c = match builtin_certificate(which, &p) {
                Ok(c) => c,
                Err(Error::RegionViolation(msg)) => {
                    return outcome(json!({ "certificate": name, "params": p.to_string(), "valid": false, "error": msg }), false)
                }
                Err(e) => return Err(e.into()),
            };
            let verdict = c.verify();
            let file = c.to_file();
            if let Some(path) = certificate_out {
                file.write(path).with_context(|| format!("writing {}", path.display()))?;
            }
            let valid = verdict.is_valid();
            outcome(
                json!({
                    "certificate": name,
                    "params": p.to_string(),
                    "valid": valid,
                    "verdict": format!("{verdict:?}"),
                    "file": file,
                }),
                valid,
            )
        }
        Command::Verify { file } => {
            let path: PathBuf = file.clone().or_else(|| cfg.file.clone()).ok_or_else(|| anyhow!("verify needs a file"))?;
            let cf = CertificateFile::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let verdict = cf.verify()?;
            let valid = verdict.is_valid();
            outcome(
                json!({
                    "file": path.display().to_string(),
                    "phi": cf.phi,
                    "sense": cf.sense,
                    "bound": cf.bound,
                    "system": cf.system,
                    "valid": valid,
                    "verdict": format!("{verdict:?}"),
                }),
                valid,
            )
        }
        Command::Average { t_total, t_transient, dt, initial } => {
            let p = params(sys, cfg, "28")?;
            let mut tc = trajectory(cfg, *t_total, *t_transient, *dt);
            if let Some(text) = initial {
                let v: Vec<f64> = text.split(',').map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>()?;
                tc.initial_state = v.try_into().map_err(|_| anyhow!("initial state needs three numbers"))?;
            }
            let rep = time_average(&p, &symmetric_moments(), &tc)?;
            outcome(json!({ "params": p.to_string(), "config": tc, "averages": rep }), true)
        }
        Command::Orbit { symbols, csv } => {
            let symbols = symbols.clone().or_else(|| cfg.symbols.clone()).unwrap_or_else(|| "+-".into());
            let p = params(sys, cfg, "28")?;
            let orbit = find_periodic_orbit(&p, &symbols)?;
            let mut moments = symmetric_moments();
            moments.push(MomentSpec::new(1, 0, 1));
            let avg = orbit_average(&orbit, &p, &moments)?;
            if let Some(path) = csv {
                std::fs::write(path, orbit_csv(&orbit)).with_context(|| format!("writing {}", path.display()))?;
            }
            let passed = orbit.residual <= 1e-10;
            outcome(json!({ "params": p.to_string(), "orbit": orbit, "averages": avg }), passed)
        }
        Command::Relations => {
            let p = params(sys, cfg, "r")?;
            let rels = appendix_relations(&p)?;
            let text = |lc: &sosbound::lorenz::LinearCombination| -> BTreeMap<String, String> {
                lc.iter().map(|(m, c)| (m.to_string(), c.to_string())).collect()
            };
            let mut ok = true;
            let mut rows = Vec::new();
            for r in &rels {
                let zero = r.residual(&p)?.is_zero();
                ok &= zero;
                rows.push(json!({
                    "moment": r.target.to_string(),
                    "aux": r.aux.to_string(),
                    "rhs": text(&r.rhs),
                    "minimal": text(&r.chained),
                    "verified": zero,
                }));
            }
            let mut families = Vec::new();
            for n in 1..=4 {
                for f in proportional_family(n, &p)? {
                    families.push(json!({
                        "lhs": f.lhs.to_string(),
                        "aux": f.aux.to_string(),
                        "rhs": f.rhs.to_string(),
                        "factor": f.factor.to_string(),
                    }));
                }
            }
            outcome(json!({ "params": p.to_string(), "relations": rows, "proportional": families }), ok)
        }
        Command::Region { sigmas, betas, format } => {
            let mut rows = Vec::new();
            for s in list(sigmas)? {
                for b in list(betas)? {
                    rows.push(gamma_feasible(&b, &s)?);
                }
            }
            match format.as_str() {
                "json" => {
                    let limits: BTreeMap<String, String> =
                        list(sigmas)?.iter().map(|s| (s.to_string(), z3_upper_beta(s).to_string())).collect();
                    outcome(json!({ "upper_beta": limits, "points": rows }), true)
                }
                "csv" => {
                    let mut text = String::from("beta,sigma,feasible,conclusive,gamma1,gamma2\n");
                    for r in &rows {
                        let (g1, g2) = r.witness.as_ref().map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
                        text.push_str(&format!("{},{},{},{},{},{}\n", r.beta, r.sigma, r.feasible, r.conclusive, g1, g2));
                    }
                    Ok(Outcome { report: Value::Null, raw: Some(text), passed: true })
                }
                other => bail!("format must be json or csv, got {other:?}"),
            }
        }
        Command::Report { degree, t_total } => {
            let p = params(sys, cfg, "28")?;
            let mut opts = TableOptions {
                degree: degree.or(cfg.degree).unwrap_or(4),
                trajectory: trajectory(cfg, *t_total, None, None),
                ..TableOptions::default()
            };
            if let Some(s) = &cfg.scale {
                opts.scale = rational(s)?;
            }
            let table = summary_table(&p, &opts)?;
            let complete = table.rows.iter().all(|r| r.best_bound.is_some() && r.chaotic_mean.is_some());
            outcome(table, complete)
        }
    }
}
