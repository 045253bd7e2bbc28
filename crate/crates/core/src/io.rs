//! File formats: JSON economies and results, CSV bound problems.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bounds::BoundProblem;
use crate::error::{Error, Result};
use crate::lrr::LrrParams;
use crate::markov::{
    build_economy, matrix_from_rows, matrix_to_rows, MarkovPricingEconomy, PricingMatrix,
    RecoveredMeasure, SdfMatrix, StochasticMatrix,
};
use crate::preferences::{
    power_sdf, recursive_sdf, solve_continuation_value, PowerUtilitySpec, RecursiveUtilitySpec,
    ValueFunction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceKind {
    Power,
    Recursive,
}

/// Any of the accepted economy input shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EconomyFile {
    /// Preference spec plus the transition it is paired with.
    Preferences {
        #[serde(rename = "type")]
        kind: PreferenceKind,
        delta: f64,
        gamma: f64,
        g_c: f64,
        c: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
    Economy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        transition: Vec<Vec<f64>>,
        sdf: Vec<Vec<f64>>,
    },
    Prices {
        prices: Vec<Vec<f64>>,
    },
}

/// A parsed economy input. `economy` is absent when only prices were given.
#[derive(Debug, Clone)]
pub struct LoadedEconomy {
    pub economy: Option<MarkovPricingEconomy>,
    pub prices: PricingMatrix,
    /// Continuation values, for recursive-utility inputs.
    pub value: Option<ValueFunction>,
}

impl EconomyFile {
    pub fn load(self) -> Result<LoadedEconomy> {
        match self {
            EconomyFile::Preferences {
                kind,
                delta,
                gamma,
                g_c,
                c,
                transition,
            } => {
                let p = StochasticMatrix::from_rows(&transition)?;
                if p.n() != c.len() {
                    return Err(Error::Dimension(format!(
                        "transition is {0}x{0} but c has {1} entries",
                        p.n(),
                        c.len()
                    )));
                }
                let (sdf, value) = match kind {
                    PreferenceKind::Power => (
                        power_sdf(&PowerUtilitySpec {
                            delta,
                            gamma,
                            g_c,
                            c,
                        })?,
                        None,
                    ),
                    PreferenceKind::Recursive => {
                        let spec = RecursiveUtilitySpec {
                            delta,
                            gamma,
                            g_c,
                            c,
                        };
                        let v = solve_continuation_value(&spec, &p)?;
                        (recursive_sdf(&spec, &p, &v)?, Some(v))
                    }
                };
                let economy = build_economy(p, sdf)?;
                Ok(LoadedEconomy {
                    prices: economy.prices().clone(),
                    economy: Some(economy),
                    value,
                })
            }
            EconomyFile::Economy { n, transition, sdf } => {
                if let Some(n) = n {
                    if transition.len() != n || sdf.len() != n {
                        return Err(Error::Dimension(format!("declared n = {n} does not match the matrices")));
                    }
                }
                let economy = build_economy(
                    StochasticMatrix::from_rows(&transition)?,
                    SdfMatrix::from_rows(&sdf)?,
                )?;
                Ok(LoadedEconomy {
                    prices: economy.prices().clone(),
                    economy: Some(economy),
                    value: None,
                })
            }
            EconomyFile::Prices { prices } => Ok(LoadedEconomy {
                economy: None,
                prices: PricingMatrix::from_rows(&prices)?,
                value: None,
            }),
        }
    }
}

pub fn parse_economy(text: &str) -> Result<LoadedEconomy> {
    let file: EconomyFile = serde_json::from_str(text)?;
    file.load()
}

pub fn load_economy(path: &Path) -> Result<LoadedEconomy> {
    parse_economy(&fs::read_to_string(path)?)
}

/// JSON form of a [`RecoveredMeasure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub eta_hat: f64,
    pub e_hat: Vec<f64>,
    pub e_star: Vec<f64>,
    pub p_hat: Vec<Vec<f64>>,
    pub h_increments: Option<Vec<Vec<f64>>>,
}

impl From<&RecoveredMeasure> for RecoveryReport {
    fn from(r: &RecoveredMeasure) -> Self {
        Self {
            eta_hat: r.eta_hat,
            e_hat: r.e_hat.iter().copied().collect(),
            e_star: r.e_star.iter().copied().collect(),
            p_hat: r.p_hat.to_rows(),
            h_increments: r.h_increments.as_ref().map(matrix_to_rows),
        }
    }
}

impl RecoveryReport {
    pub fn into_measure(self) -> Result<RecoveredMeasure> {
        Ok(RecoveredMeasure {
            eta_hat: self.eta_hat,
            e_hat: DVector::from_vec(self.e_hat),
            e_star: DVector::from_vec(self.e_star),
            p_hat: StochasticMatrix::from_rows(&self.p_hat)?,
            h_increments: self
                .h_increments
                .map(|rows| matrix_from_rows(&rows, "h_increments"))
                .transpose()?,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// LRR parameters; fields missing from the file keep their defaults.
pub fn load_lrr_params(path: &Path) -> Result<LrrParams> {
    let p: LrrParams = serde_json::from_str(&fs::read_to_string(path)?)?;
    p.validate()?;
    Ok(p)
}

/// Reads a bound problem with columns `weight, r_infty, y_1..y_m, q_1..q_m`.
pub fn read_problem_csv<R: Read>(reader: R) -> Result<BoundProblem> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = headers.len();
    if cols < 4 || (cols - 2) % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "expected weight, r_infty, y_1..y_m, q_1..q_m; got {cols} columns"
        )));
    }
    let m = (cols - 2) / 2;
    let expected: Vec<String> = ["weight".to_string(), "r_infty".to_string()]
        .into_iter()
        .chain((1..=m).map(|k| format!("y_{k}")))
        .chain((1..=m).map(|k| format!("q_{k}")))
        .collect();
    if headers.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidInput(format!(
            "bad header {:?}, expected {:?}",
            headers.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!("row {}: '{s}' is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let t = rows.len();
    BoundProblem::weighted(
        DMatrix::from_fn(t, m, |r, k| rows[r][2 + k]),
        DMatrix::from_fn(t, m, |r, k| rows[r][2 + m + k]),
        DVector::from_fn(t, |r, _| rows[r][1]),
        DVector::from_fn(t, |r, _| rows[r][0]),
    )
}

pub fn load_problem_csv(path: &Path) -> Result<BoundProblem> {
    read_problem_csv(fs::File::open(path)?)
}

pub fn write_problem_csv<W: Write>(problem: &BoundProblem, writer: W) -> Result<()> {
    let m = problem.n_assets();
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = ["weight".to_string(), "r_infty".to_string()]
        .into_iter()
        .chain((1..=m).map(|k| format!("y_{k}")))
        .chain((1..=m).map(|k| format!("q_{k}")))
        .collect();
    w.write_record(&header)?;
    for t in 0..problem.len() {
        let row: Vec<String> = [problem.weights[t], problem.long_bond_return[t]]
            .into_iter()
            .chain(problem.payoffs.row(t).iter().copied())
            .chain(problem.prices.row(t).iter().copied())
            .map(|v| format!("{v:e}"))
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn economy_shapes_parse() {
        let full = r#"{"n": 2, "transition": [[0.9, 0.1], [0.1, 0.9]], "sdf": [[1, 1], [1, 1]]}"#;
        assert!(parse_economy(full).unwrap().economy.is_some());
        let prices = r#"{"prices": [[0.5, 0.4], [0.3, 0.6]]}"#;
        assert!(parse_economy(prices).unwrap().economy.is_none());
        let pref = r#"{"type": "recursive", "delta": 0.02, "gamma": 10, "g_c": 0,
                       "c": [1, 2], "transition": [[0.9, 0.1], [0.1, 0.9]]}"#;
        assert!(parse_economy(pref).unwrap().value.is_some());
        assert!(parse_economy(r#"{"n": 3}"#).is_err());
        let bad_n = r#"{"n": 3, "transition": [[0.9, 0.1], [0.1, 0.9]], "sdf": [[1, 1], [1, 1]]}"#;
        assert!(matches!(parse_economy(bad_n), Err(Error::Dimension(_))));
    }

    #[test]
    fn problem_csv_roundtrip() {
        let prob = BoundProblem::new(
            DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 0.5]),
            DMatrix::from_row_slice(3, 1, &[0.9, 0.9, 0.9]),
            DVector::from_vec(vec![1.01, 1.02, 0.99]),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_problem_csv(&prob, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("weight,r_infty,y_1,q_1\n"));
        let back = read_problem_csv(text.as_bytes()).unwrap();
        assert_eq!(back, prob);
    }

    #[test]
    fn problem_csv_rejects_bad_header() {
        let text = "weight,r_infty,y_1,p_1\n1,1,1,1\n";
        assert!(read_problem_csv(text.as_bytes()).is_err());
    }
}
