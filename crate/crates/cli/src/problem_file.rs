//! JSON problem files.
//!
//! ```json
//! { "family": "lp", "c": [...], "A": [[...], ...], "b": [...],
//!   "lower": [...], "upper": [...] }
//! ```
//!
//! QP files add `P`, `Q`, `d` and `e`; `A` and `b` may then be empty.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use queuegrad::instances::{random_instance, Family, LpSpec, ProblemSpec, QpSpec};
use queuegrad::linalg::Matrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    Lp,
    Qp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub family: FamilyTag,
    pub c: Vec<f64>,
    #[serde(rename = "A", default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn matrix(name: &str, rows: &[Vec<f64>], cols: usize) -> Result<Matrix> {
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        bail!("{name} row {} has {} entries, expected {cols}", i + 1, row.len());
    }
    Ok(Matrix::from_rows(rows, cols)?)
}

impl ProblemFile {
    pub fn into_spec(self) -> Result<ProblemSpec> {
        let n = self.c.len();
        let a = matrix("A", &self.a, n)?;
        let spec = match self.family {
            FamilyTag::Lp => {
                if self.p.is_some() || self.q.is_some() || self.d.is_some() || self.e.is_some() {
                    bail!("LP files must not contain P, Q, d or e");
                }
                ProblemSpec::Lp(LpSpec {
                    c: self.c,
                    a,
                    b: self.b,
                    lower: self.lower,
                    upper: self.upper,
                })
            }
            FamilyTag::Qp => {
                let p = matrix("P", self.p.as_deref().context("QP file needs P")?, n)?;
                let q = matrix("Q", self.q.as_deref().context("QP file needs Q")?, n)?;
                if p.rows() != n || q.rows() != n {
                    bail!("P and Q must be {n}x{n}");
                }
                ProblemSpec::Qp(QpSpec {
                    p,
                    c: self.c,
                    a,
                    b: self.b,
                    q,
                    d: self.d.context("QP file needs d")?,
                    e: self.e.context("QP file needs e")?,
                    lower: self.lower,
                    upper: self.upper,
                })
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        match spec {
            ProblemSpec::Lp(s) => ProblemFile {
                family: FamilyTag::Lp,
                c: s.c.clone(),
                a: s.a.to_rows(),
                b: s.b.clone(),
                p: None,
                q: None,
                d: None,
                e: None,
                lower: s.lower.clone(),
                upper: s.upper.clone(),
            },
            ProblemSpec::Qp(s) => ProblemFile {
                family: FamilyTag::Qp,
                c: s.c.clone(),
                a: s.a.to_rows(),
                b: s.b.clone(),
                p: Some(s.p.to_rows()),
                q: Some(s.q.to_rows()),
                d: Some(s.d.clone()),
                e: Some(s.e),
                lower: s.lower.clone(),
                upper: s.upper.clone(),
            },
        }
    }
}

pub fn parse_problem_str(text: &str) -> Result<ProblemSpec> {
    let file: ProblemFile = serde_json::from_str(text)?;
    file.into_spec()
}

pub fn parse_problem_file(path: &Path) -> Result<ProblemSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_problem_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_problem_file(path: &Path, spec: &ProblemSpec) -> Result<()> {
    let text = serde_json::to_string_pretty(&ProblemFile::from_spec(spec))?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Loads a problem from a JSON path or a `random:<lp|qp>:<n>:<m>:<seed>` source.
pub fn load_problem(source: &str) -> Result<ProblemSpec> {
    if let Some(rest) = source.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [family, n, m, seed] = parts.as_slice() else {
            bail!("random source must look like random:<lp|qp>:<n>:<m>:<seed>");
        };
        let family = match *family {
            "lp" => Family::Lp,
            "qp" => Family::Qp,
            other => bail!("unknown family '{other}'"),
        };
        let n = n.parse().context("n")?;
        let m = m.parse().context("m")?;
        let seed = seed.parse().context("seed")?;
        return Ok(random_instance(family, n, m, seed)?);
    }
    parse_problem_file(Path::new(source))
}
