//! Problem JSON files.
//!
//! ```json
//! {"kind": "equality", "Q": [[2, 0], [0, 2]], "A": [[1, 1]], "b": [1]}
//! ```
//!
//! `rho_lo`, `rho_hi`, `sigma_lo` and `sigma_hi` are optional and computed
//! from the spectra of `Q` and `AAᵀ` when omitted.

use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::trace::{create, open};
use crate::types::{spectral_bounds, ConstrainedProblem, ConstraintKind, ProblemData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub kind: ConstraintKind,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hi: Option<f64>,
}

impl ProblemFile {
    pub fn from_problem(problem: &ConstrainedProblem) -> Self {
        ProblemFile {
            kind: problem.kind(),
            q: linalg::row_major(problem.q()),
            a: linalg::row_major(problem.a()),
            b: problem.b().iter().copied().collect(),
            rho_lo: Some(problem.objective.rho_lo()),
            rho_hi: Some(problem.objective.rho_hi()),
            sigma_lo: Some(problem.constraint.sigma_lo()),
            sigma_hi: Some(problem.constraint.sigma_hi()),
        }
    }

    pub fn into_problem(self) -> Result<ConstrainedProblem> {
        let q = linalg::from_rows(&self.q, "Q")?;
        let a = linalg::from_rows(&self.a, "A")?;
        let b = DVector::from_vec(self.b);
        let (rl, rh, sl, sh) = spectral_bounds(&q, &a);
        ConstrainedProblem::new(ProblemData {
            kind: self.kind,
            q,
            a,
            b,
            rho_lo: self.rho_lo.unwrap_or(rl),
            rho_hi: self.rho_hi.unwrap_or(rh),
            sigma_lo: self.sigma_lo.unwrap_or(sl),
            sigma_hi: self.sigma_hi.unwrap_or(sh),
        })
    }
}

pub fn problem_from_json(text: &str) -> Result<ConstrainedProblem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.into_problem()
}

pub fn problem_to_json(problem: &ConstrainedProblem) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProblemFile::from_problem(problem))?)
}

pub fn read_problem(path: &Path) -> Result<ConstrainedProblem> {
    let text = std::io::read_to_string(open(path)?)?;
    problem_from_json(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_problem(path: &Path, problem: &ConstrainedProblem) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    w.write_all(problem_to_json(problem)?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_optional() {
        let p = problem_from_json(r#"{"kind": "equality", "Q": [[2, 0], [0, 2]], "A": [[1, 1]], "b": [1]}"#).unwrap();
        assert_eq!(p.objective.rho_lo(), 2.0);
        assert!((p.constraint.sigma_hi() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn supplied_bounds_are_validated() {
        let err = problem_from_json(
            r#"{"kind": "inequality", "Q": [[1, 0], [0, 5]], "A": [[1, 0]], "b": [1], "rho_lo": 2}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidProblem(r) if r.mentions("rho_lo exceeds min eigenvalue (1 < 2)")));
    }

    #[test]
    fn ragged_and_unknown_fields_rejected() {
        assert!(problem_from_json(r#"{"kind": "equality", "Q": [[1, 0], [0]], "A": [[1, 0]], "b": [1]}"#).is_err());
        assert!(problem_from_json(r#"{"kind": "equality", "Q": [[1]], "A": [[1]], "b": [1], "x": 1}"#).is_err());
        assert!(problem_from_json(r#"{"kind": "mixed", "Q": [[1]], "A": [[1]], "b": [1]}"#).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = crate::problems::generate(&crate::problems::GeneratorSpec::new(5, 2, ConstraintKind::Inequality, 9))
            .unwrap();
        assert_eq!(problem_from_json(&problem_to_json(&p).unwrap()).unwrap(), p);
    }
}
