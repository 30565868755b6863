//! Nilpotent orbits, variations given by a lowering series, limiting mixed
//! Hodge structures, distances between filtrations and decay fits.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{Direction, Filtration, Grading};
use crate::hodge::{
    check_polarization, deligne_bigrading, hodge_gram, is_mhs, weil_operator, Bigrading, GradedPiece, MhsReport,
    PolarizationReport, PolarizedLattice,
};
use crate::matrix::Matrix;
use crate::nilpotent::{check_commuting, cone_weight_filtration, CONE_SEED};
use crate::par::Execution;
use crate::scalar::{Cf64, Field, GaussRat, Promote, Rational};
use crate::subspace::Subspace;
use crate::unipotent::exp_nilpotent;

/// A nilpotent orbit `z ↦ exp(Σ z_j N_j) F` on a polarized lattice.
#[derive(Clone, Debug)]
pub struct NilpotentOrbit {
    lattice: PolarizedLattice,
    n: Vec<Matrix<Rational>>,
    f: Filtration<GaussRat>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidOrbit(msg.into())
}

impl NilpotentOrbit {
    /// Validates commutativity, integrality, `Q`-skewness, transversality
    /// `N_j F^p ⊂ F^{p−1}` and `N_j ∈ g^{−1,−1}` for the limiting bigrading.
    pub fn new(lattice: PolarizedLattice, n: Vec<Matrix<Rational>>, f: Filtration<GaussRat>) -> Result<Self> {
        let rank = lattice.rank();
        if f.ambient_dim() != rank || f.direction() != Direction::Decreasing {
            return Err(invalid("limiting filtration must be decreasing on the lattice"));
        }
        let q = lattice.form();
        for (j, nj) in n.iter().enumerate() {
            if nj.rows() != rank || nj.cols() != rank {
                return Err(invalid(format!("N{j} has the wrong size")));
            }
            if !crate::hodge::is_integral(nj) {
                return Err(invalid(format!("N{j} is not integral")));
            }
            if !nj.is_nilpotent() {
                return Err(invalid(format!("N{j} is not nilpotent")));
            }
            // Q(N x, y) + Q(x, N y) = 0
            if !(&(&nj.transpose() * q) + &(q * nj)).is_zero() {
                return Err(invalid(format!("N{j} is not skew for the polarization")));
            }
            let ng = nj.map(GaussRat::from_rational);
            if !f.maps_into(&ng, -1) {
                return Err(invalid(format!("N{j} violates transversality")));
            }
        }
        check_commuting(&n)?;
        let orbit = NilpotentOrbit { lattice, n, f };
        if !orbit.n.is_empty() {
            let w = orbit.limiting_weight_filtration()?;
            let bigrading = deligne_bigrading(&w, &orbit.f).map_err(|e| invalid(format!("limit is not mixed: {e}")))?;
            for (j, nj) in orbit.n.iter().enumerate() {
                if !bigrading.is_of_type(&nj.map(GaussRat::from_rational), -1, -1) {
                    return Err(invalid(format!("N{j} is not of type (-1,-1)")));
                }
            }
        }
        Ok(orbit)
    }

    pub fn lattice(&self) -> &PolarizedLattice {
        &self.lattice
    }

    pub fn weight(&self) -> i32 {
        self.lattice.weight()
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    /// Number of variables.
    pub fn r(&self) -> usize {
        self.n.len()
    }

    pub fn generators(&self) -> &[Matrix<Rational>] {
        &self.n
    }

    pub fn limiting_filtration(&self) -> &Filtration<GaussRat> {
        &self.f
    }

    /// `N = Σ N_j`.
    pub fn cone_sum(&self) -> Matrix<Rational> {
        self.n
            .iter()
            .fold(Matrix::zeros(self.rank(), self.rank()), |acc, m| &acc + m)
    }

    /// `W(C)`, centred at 0.
    pub fn cone_filtration(&self) -> Result<Filtration<Rational>> {
        if self.n.is_empty() {
            return Ok(Filtration::trivial(Direction::Increasing, self.rank(), 0));
        }
        Ok(cone_weight_filtration(&self.n, CONE_SEED)?.filtration)
    }

    /// `W(C)[−w]`.
    pub fn limiting_weight_filtration(&self) -> Result<Filtration<GaussRat>> {
        Ok(self.cone_filtration()?.shift(-self.weight()).promote())
    }

    pub fn limiting_bigrading(&self) -> Result<Bigrading<GaussRat>> {
        deligne_bigrading(&self.limiting_weight_filtration()?, &self.f)
    }

    /// `exp(Σ z_j N_j)` over any field containing the entries of `z`.
    pub fn translation<T: Field>(&self, z: &[T]) -> Result<Matrix<T>> {
        if z.len() != self.r() {
            return Err(Error::Dimension(format!(
                "{} coordinates for {} variables",
                z.len(),
                self.r()
            )));
        }
        let n = self.rank();
        let x = self.n.iter().zip(z).fold(Matrix::zeros(n, n), |acc, (m, zj)| {
            &acc + &m.map(T::from_rational).scale(zj)
        });
        exp_nilpotent(&x)
    }

    /// `Φ_un(z) = exp(Σ z_j N_j) F`, exact.
    pub fn evaluate(&self, z: &[GaussRat]) -> Result<Filtration<GaussRat>> {
        Ok(self.f.transform(&self.translation(z)?))
    }

    pub fn evaluate_float(&self, z: &[Complex64]) -> Result<Filtration<Cf64>> {
        let zf: Vec<Cf64> = z.iter().map(|&c| Cf64(c)).collect();
        Ok(self.f.promote::<Cf64>().transform(&self.translation(&zf)?))
    }
}

pub fn evaluate_orbit(orbit: &NilpotentOrbit, z: &[GaussRat]) -> Result<Filtration<GaussRat>> {
    orbit.evaluate(z)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleVerdict {
    pub z: Vec<String>,
    pub min_y: f64,
    pub considered: bool,
    pub passed: bool,
    pub report: Option<PolarizationReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitCheckReport {
    pub y_threshold: f64,
    pub samples: Vec<SampleVerdict>,
    /// Smallest sampled `min(y)` from which every considered sample passes.
    pub smallest_passing_y: Option<f64>,
    pub passed: bool,
}

/// Purity and polarization of `Φ_un(z)` at each sample with `min Im z_j ≥
/// y_threshold`.
pub fn is_polarized_orbit(orbit: &NilpotentOrbit, y_threshold: f64, samples: &[Vec<GaussRat>]) -> OrbitCheckReport {
    let mut verdicts: Vec<SampleVerdict> = samples
        .iter()
        .map(|z| {
            let min_y = z.iter().map(|c| c.to_c64().im).fold(f64::INFINITY, f64::min);
            let considered = min_y >= y_threshold;
            let report = considered.then(|| match orbit.evaluate(z) {
                Ok(f) => check_polarization(orbit.lattice.form(), &f, orbit.weight(), true),
                Err(e) => PolarizationReport {
                    weight: orbit.weight(),
                    pure: false,
                    integral: true,
                    symmetric: true,
                    nondegenerate: true,
                    orthogonal: false,
                    positive: false,
                    hodge_numbers: Vec::new(),
                    leading_minors: Vec::new(),
                    failures: vec![e.to_string()],
                },
            });
            SampleVerdict {
                z: z.iter().map(|c| c.to_string()).collect(),
                min_y,
                considered,
                passed: report.as_ref().is_none_or(|r| r.passed()),
                report,
            }
        })
        .collect();
    verdicts.sort_by(|a, b| a.min_y.total_cmp(&b.min_y));
    let considered: Vec<&SampleVerdict> = verdicts.iter().filter(|v| v.considered).collect();
    let mut smallest = None;
    for (i, v) in considered.iter().enumerate() {
        if considered[i..].iter().all(|u| u.passed) {
            smallest = Some(v.min_y);
            break;
        }
    }
    let passed = considered.iter().all(|v| v.passed);
    OrbitCheckReport {
        y_threshold,
        samples: verdicts,
        smallest_passing_y: smallest,
        passed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PrimitiveCheck {
    /// `ℓ ≥ 0`; the primitive part sits in weight `w + ℓ`.
    pub ell: i32,
    pub weight: i32,
    pub dim: usize,
    pub report: PolarizationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitingReport {
    pub weight: i32,
    /// `(k, dim Gr^W_k)` of `W(C)[−w]`.
    pub weight_dims: Vec<(i32, usize)>,
    pub mhs: MhsReport,
    pub primitive: Vec<PrimitiveCheck>,
    pub bigrading: Option<Vec<(i32, i32, usize)>>,
    pub failures: Vec<String>,
}

impl LimitingReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The limiting mixed Hodge structure `(W(C)[−w], F)` and the checks that
/// it is polarized by `Q` and `N = Σ N_j`.
#[derive(Clone, Debug)]
pub struct LimitingMhs {
    pub w: Filtration<GaussRat>,
    pub f: Filtration<GaussRat>,
    pub bigrading: Bigrading<GaussRat>,
    pub report: LimitingReport,
}

/// Report form: never fails, lists every failing axiom.
pub fn limiting_mhs_report(orbit: &NilpotentOrbit) -> LimitingReport {
    match limiting_parts(orbit) {
        Ok((_, _, report)) => report,
        Err(e) => LimitingReport {
            weight: orbit.weight(),
            weight_dims: Vec::new(),
            mhs: MhsReport {
                w_rational: false,
                graded: Vec::new(),
                passed: false,
            },
            primitive: Vec::new(),
            bigrading: None,
            failures: vec![e.to_string()],
        },
    }
}

pub fn limiting_mhs(orbit: &NilpotentOrbit) -> Result<LimitingMhs> {
    let (w, bigrading, report) = limiting_parts(orbit)?;
    if !report.passed() {
        return Err(invalid(report.failures.join("; ")));
    }
    let bigrading = bigrading.ok_or_else(|| invalid("no bigrading"))?;
    Ok(LimitingMhs {
        w,
        f: orbit.f.clone(),
        bigrading,
        report,
    })
}

type LimitingParts = (Filtration<GaussRat>, Option<Bigrading<GaussRat>>, LimitingReport);

fn limiting_parts(orbit: &NilpotentOrbit) -> Result<LimitingParts> {
    let w0 = orbit.cone_filtration()?;
    let w = w0.shift(-orbit.weight()).promote::<GaussRat>();
    let f = &orbit.f;
    let mut failures = Vec::new();
    let mhs = is_mhs(&w, f);
    if !mhs.passed {
        failures.push(match mhs.first_failure() {
            Some(g) => format!("Gr^W_{} is not pure: {}", g.k, g.detail.clone().unwrap_or_default()),
            None => "weight filtration is not rational".into(),
        });
    }
    let bigrading = match deligne_bigrading(&w, f) {
        Ok(b) => Some(b),
        Err(e) => {
            failures.push(e.to_string());
            None
        }
    };
    let mut primitive = Vec::new();
    if mhs.passed {
        let n = orbit.cone_sum();
        let (_, top) = w0.range();
        for ell in 0..=top {
            if w0.graded_dim(ell) == 0 {
                continue;
            }
            let check = primitive_check(orbit, &w0, &n, ell)?;
            if !check.report.passed() {
                failures.push(format!(
                    "primitive part of weight {}: {}",
                    check.weight,
                    check.report.failures.join(", ")
                ));
            }
            primitive.push(check);
        }
    }
    let weight_dims = w.jumps().into_iter().map(|k| (k, w.graded_dim(k))).collect();
    let report = LimitingReport {
        weight: orbit.weight(),
        weight_dims,
        mhs,
        primitive,
        bigrading: bigrading.as_ref().map(|b| {
            b.indices()
                .into_iter()
                .map(|(p, q)| (p, q, b.piece(p, q).dim()))
                .collect()
        }),
        failures,
    };
    Ok((w, bigrading, report))
}

/// `P_ℓ = ker(N^{ℓ+1} : Gr_ℓ → Gr_{−ℓ−2})` of the centred `W(N)`, with the
/// form `Q(x, N^ℓ y)` and the filtration induced by `F`, checked as a
/// polarized Hodge structure of weight `w + ℓ`.
fn primitive_check(
    orbit: &NilpotentOrbit,
    w0: &Filtration<Rational>,
    n: &Matrix<Rational>,
    ell: i32,
) -> Result<PrimitiveCheck> {
    let piece = GradedPiece::of_filtration(w0, ell)?;
    let n_top = n.pow(ell as u32 + 1);
    let below = w0.get(-ell - 3);
    let primitive: Vec<Vec<Rational>> = {
        let lift = Matrix::from_columns(&piece.lift, orbit.rank())?;
        let lifted_space = Subspace::column_space(&lift);
        let kernel_lifts = lifted_space.preimage(&n_top, &below);
        // classes of kernel_lifts ∩ span(lift): coordinates in the lift basis
        kernel_lifts
            .intersect(&lifted_space)?
            .basis_vectors()
            .iter()
            .map(|x| piece.coordinates(x).expect("inside W_ℓ"))
            .collect()
    };
    let dim = primitive.len();
    let lifts: Vec<Vec<Rational>> = primitive.iter().map(|c| piece.lift_vector(c)).collect();
    let nl = n.pow(ell as u32);
    let q = orbit.lattice.form();
    let form = Matrix::from_fn(dim, dim, |i, j| {
        crate::matrix::bilinear(q, &lifts[i], &nl.apply(&lifts[j]))
    });
    let weight = orbit.weight() + ell;
    let report = if dim == 0 {
        check_polarization::<GaussRat>(&form, &Filtration::trivial(Direction::Decreasing, 0, 0), weight, false)
    } else {
        let wg = w0.promote::<GaussRat>();
        let piece_g = GradedPiece::of_filtration(&wg, ell)?;
        let induced = piece_g.induced(&orbit.f, &wg.get(ell))?;
        let prim_space = Subspace::span(
            piece_g.dim(),
            &primitive
                .iter()
                .map(|c| c.iter().map(GaussRat::from_rational).collect())
                .collect::<Vec<_>>(),
        )?;
        let (a, b) = induced.range();
        let mut steps = Vec::new();
        for p in a..=b {
            let meet = induced.get(p).intersect(&prim_space)?;
            let coords: Vec<Vec<GaussRat>> = meet
                .basis_vectors()
                .iter()
                .map(|x| prim_space.coordinates(x).expect("inside the primitive part"))
                .collect();
            steps.push((p, Subspace::span(dim, &coords)?));
        }
        let fp = Filtration::decreasing(dim, steps)?;
        check_polarization(&form, &fp, weight, false)
    };
    Ok(PrimitiveCheck {
        ell,
        weight,
        dim,
        report,
    })
}

/// How a lowering series `Γ(s)` is truncated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `Γ` is a polynomial; nothing is dropped.
    Exact,
    /// Terms of total degree above the order were dropped.
    Order(u32),
}

/// Largest tail bound accepted when evaluating a truncated series.
pub const TAIL_LIMIT: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GammaTerm {
    pub degree: Vec<u32>,
    pub coeff: Matrix<GaussRat>,
}

/// A variation `Φ(z) = exp(Σ z_j N_j) exp(Γ(s)) F` with `s_j = e^{2πi z_j}`.
#[derive(Clone, Debug)]
pub struct VariationSample {
    pub orbit: NilpotentOrbit,
    pub gamma: Vec<GammaTerm>,
    pub truncation: Truncation,
}

impl VariationSample {
    /// Checks `Γ(0) = 0` and that every coefficient lowers the Hodge degree
    /// of the limiting bigrading.
    pub fn new(orbit: NilpotentOrbit, gamma: Vec<GammaTerm>, truncation: Truncation) -> Result<Self> {
        let bigrading = orbit.limiting_bigrading()?;
        for t in &gamma {
            if t.degree.len() != orbit.r() {
                return Err(invalid("series degree has the wrong number of variables"));
            }
            if t.degree.iter().all(|&d| d == 0) {
                return Err(invalid("series has a constant term"));
            }
            if t.coeff.rows() != orbit.rank() || t.coeff.cols() != orbit.rank() {
                return Err(invalid("series coefficient has the wrong size"));
            }
            if !bigrading.is_lowering(&t.coeff) {
                return Err(invalid(format!("coefficient of s^{:?} is not lowering", t.degree)));
            }
            if let Truncation::Order(m) = truncation {
                if t.degree.iter().sum::<u32>() > m {
                    return Err(invalid(format!(
                        "term s^{:?} exceeds the truncation order {m}",
                        t.degree
                    )));
                }
            }
        }
        Ok(VariationSample {
            orbit,
            gamma,
            truncation,
        })
    }

    /// Every series coefficient maps each `F^p` into itself, so
    /// `exp(Γ(s)) F = F` and the variation is its nilpotent orbit.
    pub fn preserves_limit(&self) -> bool {
        self.gamma.iter().all(|t| self.orbit.f.maps_into(&t.coeff, 0))
    }

    pub fn unperturbed(orbit: NilpotentOrbit) -> Self {
        VariationSample {
            orbit,
            gamma: Vec::new(),
            truncation: Truncation::Exact,
        }
    }

    /// `Γ(s)` for exact `s`.
    pub fn gamma_at<T: Field>(&self, s: &[T]) -> Matrix<T>
    where
        GaussRat: Promote<T>,
    {
        let n = self.orbit.rank();
        self.gamma.iter().fold(Matrix::zeros(n, n), |acc, t| {
            let mono = t
                .degree
                .iter()
                .zip(s)
                .fold(T::one(), |m, (&d, sj)| (0..d).fold(m, |m, _| m * sj.clone()));
            &acc + &t.coeff.promote::<T>().scale(&mono)
        })
    }

    /// Geometric bound on the dropped tail at `|s| ≤ radius`.
    pub fn tail_bound(&self, radius: f64) -> f64 {
        match self.truncation {
            Truncation::Exact => 0.0,
            Truncation::Order(m) => {
                if radius >= 1.0 {
                    return f64::INFINITY;
                }
                let c = self
                    .gamma
                    .iter()
                    .map(|t| t.coeff.entries().iter().map(|x| x.magnitude()).fold(0.0, f64::max))
                    .fold(1.0, f64::max);
                c * radius.powi(m as i32 + 1) / (1.0 - radius)
            }
        }
    }

    /// `exp(Γ(s)) − I` at float `s`, computed without forming `exp(Γ(s))`.
    fn psi_offset(&self, s: &[Cf64]) -> Result<Matrix<Cf64>> {
        let g = self.gamma_at(s);
        let n = self.orbit.rank();
        Ok(&exp_nilpotent(&g)? - &Matrix::identity(n))
    }

    /// `Φ(z)` at float `z`, with `s_j = e^{2πi z_j}`.
    pub fn evaluate(&self, z: &[Complex64]) -> Result<Filtration<Cf64>> {
        let s = self.check_tail(z)?;
        let f = self.orbit.f.promote::<Cf64>();
        let psi = &self.psi_offset(&s)? + &Matrix::identity(self.orbit.rank());
        let zf: Vec<Cf64> = z.iter().map(|&c| Cf64(c)).collect();
        Ok(f.transform(&(&self.orbit.translation(&zf)? * &psi)))
    }

    /// `Φ(z)` with `z` and `s` both supplied exactly.
    pub fn evaluate_exact(&self, z: &[GaussRat], s: &[GaussRat]) -> Result<Filtration<GaussRat>> {
        let g = exp_nilpotent(&self.gamma_at(s))?;
        Ok(self.orbit.f.transform(&(&self.orbit.translation(z)? * &g)))
    }

    fn check_tail(&self, z: &[Complex64]) -> Result<Vec<Cf64>> {
        if z.len() != self.orbit.r() {
            return Err(Error::Dimension(format!(
                "{} coordinates for {} variables",
                z.len(),
                self.orbit.r()
            )));
        }
        let s: Vec<Cf64> = z.iter().map(|&zj| Cf64(s_coordinate(zj))).collect();
        let radius = s.iter().map(|x| x.0.norm()).fold(0.0, f64::max);
        let bound = self.tail_bound(radius);
        if bound > TAIL_LIMIT {
            return Err(Error::Truncation {
                bound,
                limit: TAIL_LIMIT,
            });
        }
        Ok(s)
    }
}

/// `s = e^{2πi z}`.
pub fn s_coordinate(z: Complex64) -> Complex64 {
    (Complex64::new(0.0, 2.0 * PI) * z).exp()
}

pub fn evaluate_variation(sample: &VariationSample, z: &[Complex64]) -> Result<Filtration<Cf64>> {
    sample.evaluate(z)
}

fn to_dmatrix(m: &Matrix<Cf64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).0)
}

/// `⟨x, y⟩ = xᵀ G ȳ`.
fn hform(g: &DMatrix<Complex64>, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..x.len() {
        if x[a] == Complex64::new(0.0, 0.0) {
            continue;
        }
        for b in 0..y.len() {
            acc += x[a] * g[(a, b)] * y[b].conj();
        }
    }
    acc
}

/// Hermitian Gram matrix `M_ij = ⟨x_j, x_i⟩`.
fn gram(g: &DMatrix<Complex64>, xs: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let k = xs.len();
    DMatrix::from_fn(k, k, |i, j| hform(g, &xs[j], &xs[i]))
}

/// `d − proj_A d` in the metric `g`.
fn residual(g: &DMatrix<Complex64>, a: &[Vec<Complex64>], d: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.is_empty() {
        return Ok(d.to_vec());
    }
    let m = gram(g, a);
    let r = nalgebra::DVector::from_iterator(a.len(), a.iter().map(|ai| hform(g, d, ai)));
    let c = m.lu().solve(&r).ok_or(Error::DegenerateMetric)?;
    let mut out = d.to_vec();
    for (cj, aj) in c.iter().zip(a) {
        for (o, x) in out.iter_mut().zip(aj) {
            *o -= cj * x;
        }
    }
    Ok(out)
}

/// Sine of the largest principal angle between `span(a)` and
/// `span(a_i + d_i)`, computed from the offsets `d_i` so that tiny angles
/// keep their relative precision.
pub fn max_principal_sine_offset(a: &[Vec<Complex64>], d: &[Vec<Complex64>], metric: &Matrix<Cf64>) -> Result<f64> {
    let g = to_dmatrix(metric);
    let b: Vec<Vec<Complex64>> = a
        .iter()
        .zip(d)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect();
    let rs: Vec<Vec<Complex64>> = d.iter().map(|di| residual(&g, a, di)).collect::<Result<_>>()?;
    generalized_max(&gram(&g, &rs), &gram(&g, &b))
}

/// Sine of the largest principal angle between two subspaces of equal
/// dimension, in the metric `G`.
pub fn max_principal_sine(a: &Subspace<Cf64>, b: &Subspace<Cf64>, metric: &Matrix<Cf64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::FlagType(format!("dimensions {} and {}", a.dim(), b.dim())));
    }
    let g = to_dmatrix(metric);
    let av: Vec<Vec<Complex64>> = a
        .basis_vectors()
        .iter()
        .map(|v| v.iter().map(|x| x.0).collect())
        .collect();
    let bv: Vec<Vec<Complex64>> = b
        .basis_vectors()
        .iter()
        .map(|v| v.iter().map(|x| x.0).collect())
        .collect();
    let rs: Vec<Vec<Complex64>> = bv.iter().map(|x| residual(&g, &av, x)).collect::<Result<_>>()?;
    generalized_max(&gram(&g, &rs), &gram(&g, &bv))
}

/// `sqrt(λ_max)` of the pencil `(R, X)` with `X` positive definite.
fn generalized_max(r: &DMatrix<Complex64>, x: &DMatrix<Complex64>) -> Result<f64> {
    if x.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = x.clone().cholesky().ok_or(Error::DegenerateMetric)?;
    let linv = chol.l().try_inverse().ok_or(Error::DegenerateMetric)?;
    let m = &linv * r * linv.adjoint();
    let herm = (&m + m.adjoint()).scale(0.5);
    let lmax = herm.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max);
    Ok(lmax.max(0.0).sqrt().min(1.0))
}

/// Maximum over `p` of the largest principal angle between `F1^p` and
/// `F2^p`, in the metric of the first argument.
pub fn filtration_distance(f1: &Filtration<Cf64>, f2: &Filtration<Cf64>, metric: &Matrix<Cf64>) -> Result<f64> {
    if !f1.same_type(f2) {
        return Err(Error::FlagType("filtrations have different step dimensions".into()));
    }
    let (a, b) = f1.range();
    let mut worst: f64 = 0.0;
    for p in a..=b {
        let (x, y) = (f1.get(p), f2.get(p));
        if x.is_zero() || x.is_full() {
            continue;
        }
        worst = worst.max(max_principal_sine(&x, &y, metric)?);
    }
    Ok(worst.asin())
}

/// Float Hodge metric Gram matrix `Cᵀ Q` of a pure structure.
pub fn hodge_metric(q: &Matrix<Rational>, f: &Filtration<Cf64>, w: i32) -> Result<Matrix<Cf64>> {
    Ok(hodge_gram(q, &weil_operator(f, w)?))
}

/// Distance between `Φ(z)` and `Φ_un(z)` in the Hodge metric at `Φ_un(z)`,
/// using `Φ(z)^p = span(X_i + exp(zN)(exp(Γ(s)) − I) f_i)` for a basis `f_i`
/// of `F^p` and `X_i = exp(zN) f_i`.
pub fn variation_distance(sample: &VariationSample, z: &[Complex64]) -> Result<f64> {
    let s = sample.check_tail(z)?;
    let orbit = &sample.orbit;
    let zf: Vec<Cf64> = z.iter().map(|&c| Cf64(c)).collect();
    let t = orbit.translation(&zf)?;
    let offset = &t * &sample.psi_offset(&s)?;
    let base = orbit.f.promote::<Cf64>();
    let un = base.transform(&t);
    let metric = hodge_metric(orbit.lattice.form(), &un, orbit.weight())?;
    let (a, b) = base.range();
    let mut worst: f64 = 0.0;
    for p in a..=b {
        let fp = base.get(p);
        if fp.is_zero() || fp.is_full() {
            continue;
        }
        let rows = fp.basis_vectors();
        let x: Vec<Vec<Complex64>> = rows.iter().map(|v| t.apply(v).iter().map(|c| c.0).collect()).collect();
        let d: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|v| offset.apply(v).iter().map(|c| c.0).collect())
            .collect();
        worst = worst.max(max_principal_sine_offset(&x, &d, &metric)?);
    }
    Ok(worst.asin())
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub inf_y: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub points: Vec<DecayPoint>,
    /// Every distance was exactly zero (e.g. `Γ = 0`).
    pub exact_match: bool,
    /// Slope of `log d` against `−2π inf(y)`.
    pub normalized_slope: Option<f64>,
    /// Slope of `−log d` against `inf(y)`; compare with `2π`.
    pub exponent: Option<f64>,
    pub intercept: Option<f64>,
    pub rms_residual: Option<f64>,
}

/// Least squares `y ≈ a x + b`; returns `(a, b, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Fit the decay of `d(Φ(z), Φ_un(z))` along `z = z0 + i t θ`.
pub fn decay_check(
    sample: &VariationSample,
    z0: &[Complex64],
    direction: &[f64],
    t_grid: &[f64],
    exec: Execution,
) -> Result<DecayReport> {
    if direction.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidOrbit(
            "ray direction must be positive in every coordinate".into(),
        ));
    }
    if direction.len() != z0.len() {
        return Err(Error::Dimension("ray base and direction differ in length".into()));
    }
    let points: Vec<Result<DecayPoint>> = exec.map(t_grid, |&t| {
        let z: Vec<Complex64> = z0
            .iter()
            .zip(direction)
            .map(|(b, d)| b + Complex64::new(0.0, t * d))
            .collect();
        let inf_y = z.iter().map(|c| c.im).fold(f64::INFINITY, f64::min);
        let distance = variation_distance(sample, &z)?;
        Ok(DecayPoint { t, inf_y, distance })
    });
    let points: Vec<DecayPoint> = points.into_iter().collect::<Result<_>>()?;
    let exact_match = sample.preserves_limit();
    if exact_match {
        return Ok(DecayReport {
            points,
            exact_match,
            normalized_slope: None,
            exponent: None,
            intercept: None,
            rms_residual: None,
        });
    }
    if let Some(p) = points.iter().find(|p| p.distance <= f64::MIN_POSITIVE) {
        return Err(Error::Underflow(format!("distance underflows at t = {}", p.t)));
    }
    if points.len() < 2 {
        return Err(Error::Regime("need at least two grid points to fit".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| -2.0 * PI * p.inf_y).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let (a, b, rms) = linear_fit(&xs, &ys);
    Ok(DecayReport {
        points,
        exact_match,
        normalized_slope: Some(a),
        exponent: Some(2.0 * PI * a),
        intercept: Some(b),
        rms_residual: Some(rms),
    })
}

/// `e_A(τ)`: multiplication by `Π τ_j^{ℓ_j/2}` on `A^ℓ`.
pub fn rescaling_operator(a: &Grading<Cf64>, tau: &[f64]) -> Result<Matrix<Cf64>> {
    if let Some(&bad) = tau.iter().find(|&&t| t <= 0.0 || t.is_nan()) {
        return Err(Error::NonpositiveTau(bad));
    }
    if tau.len() != a.index_dim() {
        return Err(Error::Dimension(format!(
            "{} rescaling parameters for a Z^{} grading",
            tau.len(),
            a.index_dim()
        )));
    }
    Ok(a.operator(|l| {
        let factor: f64 = l.iter().zip(tau).map(|(&lj, &tj)| tj.powf(lj as f64 / 2.0)).product();
        Cf64::new(factor, 0.0)
    }))
}

pub fn apply_rescaling(a: &Grading<Cf64>, tau: &[f64], v: &[Cf64]) -> Result<Vec<Cf64>> {
    Ok(rescaling_operator(a, tau)?.apply(v))
}

pub fn apply_rescaling_filtration(a: &Grading<Cf64>, tau: &[f64], f: &Filtration<Cf64>) -> Result<Filtration<Cf64>> {
    Ok(f.transform(&rescaling_operator(a, tau)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gi, rat};

    pub(crate) fn elliptic_orbit(sign: i64) -> NilpotentOrbit {
        let q = Matrix::from_rows(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(-1, 1), rat(0, 1)]], 2).unwrap();
        let lattice = PolarizedLattice::new(q, 1).unwrap();
        let n = Matrix::from_rows(vec![vec![rat(0, 1), rat(0, 1)], vec![rat(sign, 1), rat(0, 1)]], 2).unwrap();
        let e1 = Subspace::span(2, &[vec![gi(1, 0), gi(0, 0)]]).unwrap();
        let f = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, e1)]).unwrap();
        NilpotentOrbit::new(lattice, vec![n], f).unwrap()
    }

    #[test]
    fn primitive_parts_of_a_single_string_sit_on_top() {
        let orbit = crate::fixtures::sym(2).to_orbit().unwrap();
        let report = limiting_mhs_report(&orbit);
        assert!(report.passed(), "{:?}", report.failures);
        let dims: Vec<(i32, usize)> = report.primitive.iter().map(|c| (c.ell, c.dim)).collect();
        assert_eq!(dims, vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn elliptic_orbit_values() {
        let o = elliptic_orbit(1);
        let f = o.evaluate(&[gi(0, 1)]).unwrap();
        assert_eq!(f.get(1), Subspace::span(2, &[vec![gi(1, 0), gi(0, 1)]]).unwrap());
        assert_eq!(o.evaluate(&[gi(0, 0)]).unwrap(), *o.limiting_filtration());
        let z = gi(2, 3);
        let shifted = o.evaluate(&[z.clone() + gi(1, 0)]).unwrap();
        let t = o.translation(&[gi(1, 0)]).unwrap();
        assert_eq!(shifted, o.evaluate(&[z]).unwrap().transform(&t));
    }

    #[test]
    fn orbit_polarization_by_sign() {
        let samples: Vec<Vec<GaussRat>> = [1, 2, 10].iter().map(|&y| vec![gi(0, y)]).collect();
        let good = is_polarized_orbit(&elliptic_orbit(1), 0.5, &samples);
        assert!(good.passed);
        assert_eq!(good.smallest_passing_y, Some(1.0));
        let bad = is_polarized_orbit(&elliptic_orbit(-1), 0.5, &samples);
        assert!(!bad.passed);
    }

    #[test]
    fn elliptic_limit_is_polarized() {
        let l = limiting_mhs(&elliptic_orbit(1)).unwrap();
        assert_eq!(l.report.weight_dims, vec![(0, 1), (2, 1)]);
        let prim: Vec<(i32, usize)> = l.report.primitive.iter().map(|p| (p.ell, p.dim)).collect();
        assert_eq!(prim, vec![(1, 1)]);
        assert!(!limiting_mhs_report(&elliptic_orbit(-1)).passed());
    }

    fn rank2_family(order: Truncation) -> VariationSample {
        let o = elliptic_orbit(1);
        let n = o.generators()[0].map(GaussRat::from_rational);
        VariationSample::new(
            o,
            vec![GammaTerm {
                degree: vec![1],
                coeff: n,
            }],
            order,
        )
        .unwrap()
    }

    #[test]
    fn rank2_family_evaluation() {
        let v = rank2_family(Truncation::Exact);
        let z = Complex64::new(0.0, 1.0);
        let f = v.evaluate(&[z]).unwrap();
        let s = s_coordinate(z);
        let expected = Subspace::span(2, &[vec![Cf64::new(1.0, 0.0), Cf64(z + s)]]).unwrap();
        assert_eq!(f.get(1), expected);
        let exact = v.evaluate_exact(&[gi(0, 1)], &[gi(1, 0)]).unwrap();
        assert_eq!(exact.get(1), Subspace::span(2, &[vec![gi(1, 0), gi(1, 1)]]).unwrap());
    }

    #[test]
    fn truncation_guard() {
        let v = rank2_family(Truncation::Order(1));
        assert!(matches!(
            v.evaluate(&[Complex64::new(0.0, 0.1)]),
            Err(Error::Truncation { .. })
        ));
        assert!(v.evaluate(&[Complex64::new(0.0, 5.0)]).is_ok());
    }

    #[test]
    fn decay_of_rank2_family() {
        let v = rank2_family(Truncation::Exact);
        let grid: Vec<f64> = (2..=8).map(f64::from).collect();
        let r = decay_check(&v, &[Complex64::new(0.0, 0.0)], &[1.0], &grid, Execution::Sequential).unwrap();
        let slope = r.normalized_slope.unwrap();
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
        let flat = VariationSample::unperturbed(elliptic_orbit(1));
        let r = decay_check(&flat, &[Complex64::new(0.0, 0.0)], &[1.0], &grid, Execution::Sequential).unwrap();
        assert!(r.exact_match);
    }

    #[test]
    fn deep_grid_underflows_instead_of_matching() {
        let v = rank2_family(Truncation::Exact);
        assert!(!v.preserves_limit());
        let grid = [150.0, 200.0];
        assert!(matches!(
            decay_check(&v, &[Complex64::new(0.0, 0.0)], &[1.0], &grid, Execution::Sequential),
            Err(Error::Underflow(_))
        ));
    }

    #[test]
    fn distance_basics() {
        let c = |a: f64, b: f64| vec![Cf64::new(a, 0.0), Cf64::new(b, 0.0)];
        let l1 = Subspace::span(2, &[c(1.0, 0.0)]).unwrap();
        let l2 = Subspace::span(2, &[c(0.0, 1.0)]).unwrap();
        let f1 = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, l1)]).unwrap();
        let f2 = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, l2)]).unwrap();
        let g = Matrix::identity(2);
        assert_eq!(filtration_distance(&f1, &f1, &g).unwrap(), 0.0);
        assert!((filtration_distance(&f1, &f2, &g).unwrap() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling() {
        let e = |k| crate::matrix::unit_vector::<Cf64>(2, k);
        let pieces = [
            (vec![1], Subspace::span(2, &[e(0)]).unwrap()),
            (vec![-1], Subspace::span(2, &[e(1)]).unwrap()),
        ]
        .into_iter()
        .collect();
        let a = Grading::new(2, 1, pieces).unwrap();
        let v = apply_rescaling(&a, &[4.0], &e(1)).unwrap();
        assert!((v[1].0.re - 0.5).abs() < 1e-15);
        assert_eq!(apply_rescaling(&a, &[1.0], &e(0)).unwrap(), e(0));
        assert!(matches!(
            apply_rescaling(&a, &[0.0], &e(0)),
            Err(Error::NonpositiveTau(_))
        ));
    }
}
