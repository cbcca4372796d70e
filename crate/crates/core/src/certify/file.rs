use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{verify_certificate, RationalCertificate, Verification};
use crate::error::{Error, Result};
use crate::polyalg::{parse_rational, QPoly, Rational, VarSet};
use crate::ratmat::RatMatrix;
use crate::sosform::{BasisPair, Sense};

pub const FORMAT: &str = "sosbound-certificate/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisText {
    pub symmetric: Vec<String>,
    pub antisymmetric: Vec<String>,
}

/// Self-contained textual certificate; everything is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    pub state_vars: Vec<String>,
    pub param_vars: Vec<String>,
    /// Free-form labels identifying the system, e.g. parameter values.
    #[serde(default)]
    pub system: BTreeMap<String, String>,
    pub field: Vec<String>,
    pub phi: String,
    pub sense: Sense,
    pub bound: String,
    pub aux_function: String,
    pub aux_coeffs: Vec<String>,
    pub basis: BasisText,
    /// Full symmetric matrices, entries as `p/q`.
    pub gram: Vec<Vec<Vec<String>>>,
}

fn texts(ps: &[QPoly]) -> Vec<String> {
    ps.iter().map(ToString::to_string).collect()
}

impl CertificateFile {
    pub fn new(cert: &RationalCertificate, phi: &QPoly, field: &[QPoly], system: BTreeMap<String, String>) -> Self {
        let vars = phi.vars();
        CertificateFile {
            format: FORMAT.into(),
            state_vars: vars.state_vars().to_vec(),
            param_vars: vars.param_vars().to_vec(),
            system,
            field: texts(field),
            phi: phi.to_string(),
            sense: cert.sense,
            bound: cert.bound_value.to_string(),
            aux_function: cert.aux_function.to_string(),
            aux_coeffs: cert.aux_coeffs.iter().map(ToString::to_string).collect(),
            basis: BasisText {
                symmetric: texts(&cert.basis.symmetric),
                antisymmetric: texts(&cert.basis.antisymmetric),
            },
            gram: cert
                .gram_blocks
                .iter()
                .map(|q| q.to_rows().iter().map(|r| r.iter().map(ToString::to_string).collect()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: CertificateFile = serde_json::from_str(text)?;
        if f.format != FORMAT {
            return Err(Error::Parse(format!("unsupported certificate format {:?}", f.format)));
        }
        Ok(f)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Parses back into exact objects: certificate, `phi` and the field.
    pub fn load(&self) -> Result<(RationalCertificate, QPoly, Vec<QPoly>)> {
        let s: Vec<&str> = self.state_vars.iter().map(String::as_str).collect();
        let p: Vec<&str> = self.param_vars.iter().map(String::as_str).collect();
        let vars = VarSet::new(&s, &p)?;
        let poly = |t: &str| QPoly::parse(&vars, t);
        let polys = |ts: &[String]| ts.iter().map(|t| poly(t)).collect::<Result<Vec<_>>>();
        let num = |t: &str| parse_rational(t).ok_or_else(|| Error::Parse(format!("bad rational {t:?}")));
        let gram = self
            .gram
            .iter()
            .map(|rows| {
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(|t| num(t)).collect::<Result<Vec<Rational>>>())
                    .collect::<Result<Vec<_>>>()?;
                if rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(Error::Parse("Gram block is not square".into()));
                }
                Ok(if rows.is_empty() { RatMatrix::zeros(0, 0) } else { RatMatrix::from_rows(rows) })
            })
            .collect::<Result<Vec<_>>>()?;
        let cert = RationalCertificate {
            basis: BasisPair {
                symmetric: polys(&self.basis.symmetric)?,
                antisymmetric: polys(&self.basis.antisymmetric)?,
            },
            gram_blocks: gram,
            bound_value: poly(&self.bound)?,
            aux_coeffs: self.aux_coeffs.iter().map(|t| num(t)).collect::<Result<_>>()?,
            aux_function: poly(&self.aux_function)?,
            sense: self.sense,
        };
        Ok((cert, poly(&self.phi)?, polys(&self.field)?))
    }

    /// Exact check using nothing but the file contents.
    pub fn verify(&self) -> Result<Verification> {
        let (cert, phi, field) = self.load()?;
        Ok(verify_certificate(&cert, &phi, &field, &cert.aux_function))
    }
}
