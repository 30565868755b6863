//! The JSON variation document. Exact entries are strings: rationals as
//! `"p/q"`, Gaussian rationals as `"a+b*i"`.

use std::collections::BTreeMap;

use hodgeloc::hodge::PolarizedLattice;
use hodgeloc::orbits::{GammaTerm, NilpotentOrbit, Truncation, VariationSample};
use hodgeloc::scalar::{parse_gaussian, parse_rational};
use hodgeloc::{Direction, Field, FieldTag, Filtration, GaussRat, Matrix, Rational, Subspace};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationDocument {
    pub schema_version: u32,
    /// Field of the entries of `F` and of the series coefficients.
    pub field: FieldTag,
    pub rank: usize,
    pub weight: i32,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<String>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<Vec<String>>>,
    /// Steps `F^p`, each given by a basis.
    #[serde(rename = "F")]
    pub f: Vec<FiltrationStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSeries>,
    /// Columns are the new basis in old coordinates; must be unimodular.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_change: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiltrationStep {
    pub p: i32,
    pub basis: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSeries {
    pub truncation: TruncationDoc,
    pub terms: Vec<GammaTermDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationDoc {
    Exact,
    Order(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaTermDoc {
    pub degree: Vec<u32>,
    pub matrix: Vec<Vec<String>>,
}

fn rational_matrix(rows: &[Vec<String>], n: usize, what: &str) -> CliResult<Matrix<Rational>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} shape"), format!("expected a {n}x{n} matrix")));
    }
    let parsed: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|x| parse_rational(x)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(format!("{what} entries"), e))?;
    Ok(Matrix::from_rows(parsed, n)?)
}

fn integral(m: &Matrix<Rational>) -> bool {
    m.entries().iter().all(|x| x.is_integer())
}

fn scalar(text: &str, tag: FieldTag) -> hodgeloc::Result<GaussRat> {
    match tag {
        FieldTag::GaussianRational => parse_gaussian(text),
        _ => parse_rational(text).map(GaussRat::real),
    }
}

fn field_matrix(rows: &[Vec<String>], n: usize, tag: FieldTag, what: &str) -> CliResult<Matrix<GaussRat>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} shape"), format!("expected a {n}x{n} matrix")));
    }
    let parsed: Vec<Vec<GaussRat>> = rows
        .iter()
        .map(|r| r.iter().map(|x| scalar(x, tag)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(format!("{what} entries"), e))?;
    Ok(Matrix::from_rows(parsed, n)?)
}

fn strings<T: Field>(m: &Matrix<T>) -> Vec<Vec<String>> {
    m.row_vecs()
        .iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect())
        .collect()
}

impl VariationDocument {
    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    /// Validates every invariant and builds the variation; the error names
    /// the first one that fails.
    pub fn to_sample(&self) -> CliResult<VariationSample> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.field == FieldTag::ComplexFloat {
            return Err(invalid(
                "field",
                "documents carry exact data; use rational or gaussian_rational",
            ));
        }
        let n = self.rank;
        let mut q = rational_matrix(&self.q, n, "Q")?;
        if !integral(&q) {
            return Err(invalid("Q integral", "form has non-integral entries"));
        }
        let mut gens = Vec::new();
        for (j, m) in self.n.iter().enumerate() {
            let nj = rational_matrix(m, n, &format!("N{j}"))?;
            if !integral(&nj) {
                return Err(invalid(format!("N{j} integral"), "generator has non-integral entries"));
            }
            gens.push(nj);
        }
        let mut steps = BTreeMap::new();
        for step in &self.f {
            let rows: Vec<Vec<GaussRat>> = step
                .basis
                .iter()
                .map(|r| r.iter().map(|x| scalar(x, self.field)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()
                .map_err(|e| invalid(format!("F^{} entries", step.p), e))?;
            let space = Subspace::span(n, &rows).map_err(|e| invalid(format!("F^{} basis", step.p), e))?;
            if steps.insert(step.p, space).is_some() {
                return Err(invalid("F indices", format!("F^{} given twice", step.p)));
            }
        }
        let mut f = Filtration::from_map(Direction::Decreasing, n, steps).map_err(|e| invalid("F nested", e))?;
        let mut gamma = Vec::new();
        if let Some(series) = &self.gamma {
            for t in &series.terms {
                let what = format!("gamma s^{:?}", t.degree);
                gamma.push(GammaTerm {
                    degree: t.degree.clone(),
                    coeff: field_matrix(&t.matrix, n, self.field, &what)?,
                });
            }
        }
        if let Some(b) = &self.basis_change {
            let b = rational_matrix(b, n, "basis_change")?;
            let det = b.determinant();
            if !integral(&b) || (det != Rational::from_i64(1) && det != Rational::from_i64(-1)) {
                return Err(invalid(
                    "basis_change unimodular",
                    "expected an integral matrix of determinant ±1",
                ));
            }
            let inv = b.inverse()?;
            q = &(&b.transpose() * &q) * &b;
            gens = gens.iter().map(|m| &(&inv * m) * &b).collect();
            let (bg, invg) = (b.map(GaussRat::from_rational), inv.map(GaussRat::from_rational));
            f = f.transform(&invg);
            for t in &mut gamma {
                t.coeff = &(&invg * &t.coeff) * &bg;
            }
        }
        let lattice = PolarizedLattice::new(q, self.weight).map_err(|e| invalid("Q polarized lattice", e))?;
        let orbit = NilpotentOrbit::new(lattice, gens, f).map_err(|e| invalid("nilpotent orbit", e))?;
        let truncation = match self.gamma.as_ref().map(|g| g.truncation) {
            Some(TruncationDoc::Order(m)) => Truncation::Order(m),
            _ => Truncation::Exact,
        };
        if gamma.is_empty() && self.gamma.is_none() {
            return Ok(VariationSample::unperturbed(orbit));
        }
        VariationSample::new(orbit, gamma, truncation).map_err(|e| invalid("gamma series", e))
    }

    /// The canonical document of a variation: echelon bases and every step
    /// of `F` from the first proper one down to the one equal to `V`.
    pub fn from_sample(sample: &VariationSample) -> Self {
        let orbit = &sample.orbit;
        let f = orbit.limiting_filtration();
        let (lo, hi) = f.range();
        let steps: Vec<FiltrationStep> = (lo..hi)
            .map(|p| FiltrationStep {
                p,
                basis: strings(f.get(p).basis()),
            })
            .collect();
        let real = f.is_real()
            && sample
                .gamma
                .iter()
                .all(|t| t.coeff.entries().iter().all(|x| x.is_real()));
        let gamma = (!sample.gamma.is_empty()).then(|| GammaSeries {
            truncation: match sample.truncation {
                Truncation::Exact => TruncationDoc::Exact,
                Truncation::Order(m) => TruncationDoc::Order(m),
            },
            terms: sample
                .gamma
                .iter()
                .map(|t| GammaTermDoc {
                    degree: t.degree.clone(),
                    matrix: strings(&t.coeff),
                })
                .collect(),
        });
        VariationDocument {
            schema_version: SCHEMA_VERSION,
            field: if real {
                FieldTag::Rational
            } else {
                FieldTag::GaussianRational
            },
            rank: orbit.rank(),
            weight: orbit.weight(),
            q: strings(orbit.lattice().form()),
            n: orbit.generators().iter().map(strings).collect(),
            f: steps,
            gamma,
            basis_change: None,
        }
    }

    pub fn from_orbit(orbit: &NilpotentOrbit) -> Self {
        Self::from_sample(&VariationSample::unperturbed(orbit.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hodgeloc::fixtures;

    #[test]
    fn elliptic_document_round_trips() {
        let doc = VariationDocument::from_orbit(&fixtures::elliptic().to_orbit().unwrap());
        assert_eq!(doc.field, FieldTag::Rational);
        let again = VariationDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(again, doc);
        assert_eq!(VariationDocument::from_sample(&again.to_sample().unwrap()), doc);
    }

    #[test]
    fn wrong_schema_is_named() {
        let mut doc = VariationDocument::from_orbit(&fixtures::elliptic().to_orbit().unwrap());
        doc.schema_version = 9;
        let err = doc.to_sample().unwrap_err().to_string();
        assert!(err.contains("schema_version"), "{err}");
    }

    #[test]
    fn basis_change_by_a_swap_keeps_the_orbit_valid() {
        let mut doc = VariationDocument::from_orbit(&fixtures::elliptic().to_orbit().unwrap());
        doc.basis_change = Some(vec![vec!["0".into(), "1".into()], vec!["1".into(), "0".into()]]);
        let orbit = doc.to_sample().unwrap().orbit;
        // Q = [[0,1],[-1,0]] in the swapped basis becomes its negative
        assert_eq!(orbit.lattice().form().get(0, 1), &Rational::from_i64(-1));
        doc.basis_change = Some(vec![vec!["2".into(), "0".into()], vec!["0".into(), "1".into()]]);
        assert!(doc.to_sample().unwrap_err().to_string().contains("unimodular"));
    }
}
