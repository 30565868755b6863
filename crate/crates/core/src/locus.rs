//! Hodge loci near a boundary point: the locus equations of a class, exact
//! solution sets on nilpotent orbits, the monodromy criterion, enumeration
//! of integral `(0,0)` classes of bounded norm and the finiteness harness.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::Filtration;
use crate::hodge::{angle_sine, PolarizedLattice};
use crate::lattice::{combine, field_vector, gram_matrix, rational_vector, saturated_basis, short_vectors, to_i64};
use crate::matrix::{bilinear, Matrix};
use crate::orbits::{hodge_metric, linear_fit, s_coordinate, NilpotentOrbit, VariationSample};
use crate::par::Execution;
use crate::scalar::{Cf64, Field, GaussRat, Rational};
use crate::subspace::Subspace;
use crate::unipotent::exp_nilpotent;

/// One monomial `c · s^degree` of a series coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub degree: Vec<u32>,
    pub coeff: GaussRat,
}

/// `Σ_j ν_j z_j + γ(s) = 0` in one coordinate of `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocusEquation {
    pub linear: Vec<Rational>,
    pub series: Vec<SeriesTerm>,
}

impl LocusEquation {
    pub fn is_trivial(&self) -> bool {
        self.linear.iter().all(|x| x.is_zero()) && self.series.is_empty()
    }
}

/// The system `(Σ z_j N_j + Γ_{−1}(s)) v = 0`, one equation per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct LocusSystem {
    pub class: Vec<i64>,
    pub equations: Vec<LocusEquation>,
}

impl LocusSystem {
    /// Indices of the equations that constrain `z`.
    pub fn nontrivial(&self) -> Vec<usize> {
        (0..self.equations.len())
            .filter(|&a| !self.equations[a].is_trivial())
            .collect()
    }

    /// No equation constrains `z`: the locus is everything.
    pub fn is_empty(&self) -> bool {
        self.nontrivial().is_empty()
    }

    /// Coefficients `ν^{(α)}_j` as a `dim V × r` matrix.
    pub fn linear_part(&self) -> Matrix<Rational> {
        let r = self.equations.first().map_or(0, |e| e.linear.len());
        Matrix::from_fn(self.equations.len(), r, |a, j| self.equations[a].linear[j].clone())
    }

    /// Left-hand sides at a float point.
    pub fn residual(&self, z: &[Complex64]) -> Vec<Complex64> {
        let s: Vec<Complex64> = z.iter().map(|&zj| s_coordinate(zj)).collect();
        self.equations
            .iter()
            .map(|e| {
                let lin: Complex64 = e
                    .linear
                    .iter()
                    .zip(z)
                    .map(|(nu, zj)| zj * nu.to_f64().unwrap_or(0.0))
                    .sum();
                let ser: Complex64 = e
                    .series
                    .iter()
                    .map(|t| {
                        let mono: Complex64 = t.degree.iter().zip(&s).map(|(&d, sj)| sj.powu(d)).product();
                        t.coeff.to_c64() * mono
                    })
                    .sum();
                lin + ser
            })
            .collect()
    }
}

fn gauss_vector(v: &[i64]) -> Vec<GaussRat> {
    field_vector(v)
}

/// `[N_1 v | … | N_r v]`.
fn coefficient_map(orbit: &NilpotentOrbit, v: &[i64]) -> Result<Matrix<Rational>> {
    if v.len() != orbit.rank() {
        return Err(Error::Dimension(format!(
            "class of length {} on a rank {} lattice",
            v.len(),
            orbit.rank()
        )));
    }
    let rv = rational_vector(v);
    let cols: Vec<Vec<Rational>> = orbit.generators().iter().map(|n| n.apply(&rv)).collect();
    if cols.is_empty() {
        return Ok(Matrix::zeros(orbit.rank(), 0));
    }
    Matrix::from_columns(&cols, orbit.rank())
}

/// The locus equations of a class `v` lying in `⊕_q I^{0,q}` of the limiting
/// bigrading.
pub fn locus_equations(sample: &VariationSample, v: &[i64]) -> Result<LocusSystem> {
    let orbit = &sample.orbit;
    let lin = coefficient_map(orbit, v)?;
    let bigrading = orbit.limiting_bigrading()?;
    let vg = gauss_vector(v);
    let v0 = bigrading.grading().sum_where(|k| k[0] == 0);
    if !v0.contains(&vg) {
        return Err(Error::NotCentered(
            "class is not of Hodge degree 0 for the limiting bigrading; re-centre the coordinates".into(),
        ));
    }
    let n = orbit.rank();
    let mut equations: Vec<LocusEquation> = (0..n)
        .map(|a| LocusEquation {
            linear: lin.row(a).to_vec(),
            series: Vec::new(),
        })
        .collect();
    for term in &sample.gamma {
        let lowered = bigrading.hodge_degree_component(&term.coeff, -1).apply(&vg);
        for (a, c) in lowered.into_iter().enumerate() {
            if !c.is_zero() {
                equations[a].series.push(SeriesTerm {
                    degree: term.degree.clone(),
                    coeff: c,
                });
            }
        }
    }
    Ok(LocusSystem {
        class: v.to_vec(),
        equations,
    })
}

/// `{z ∈ C^r : Σ z_j N_j v = 0}`, spanned by a rational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LocusSolution {
    pub class: Vec<i64>,
    pub r: usize,
    pub basis: Vec<Vec<Rational>>,
    /// Point of the solution set at which `v ∈ Φ⁰_un(z)` was checked.
    pub verified_at: Option<Vec<GaussRat>>,
}

impl LocusSolution {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.r
    }

    fn space(&self) -> Subspace<GaussRat> {
        let rows: Vec<Vec<GaussRat>> = self
            .basis
            .iter()
            .map(|b| b.iter().map(GaussRat::from_rational).collect())
            .collect();
        Subspace::span(self.r, &rows).unwrap_or_else(|_| Subspace::zero(self.r))
    }

    pub fn contains(&self, z: &[GaussRat]) -> bool {
        z.len() == self.r && self.space().contains(z)
    }

    /// A point of the solution set with nonzero imaginary parts where possible.
    pub fn sample_point(&self) -> Vec<GaussRat> {
        let mut z = vec![GaussRat::zero(); self.r];
        for (k, b) in self.basis.iter().enumerate() {
            let c = GaussRat::from_ints(k as i64 + 1, 1);
            for (zj, bj) in z.iter_mut().zip(b) {
                *zj = zj.clone() + c.clone() * GaussRat::from_rational(bj);
            }
        }
        z
    }

    /// Whether `z ↦ z + m` maps the solution set to itself.
    pub fn invariant_under(&self, m: &[i64]) -> bool {
        let shifted: Vec<GaussRat> = self
            .sample_point()
            .into_iter()
            .zip(m)
            .map(|(z, &mj)| z + GaussRat::from_ints(mj, 0))
            .collect();
        self.contains(&shifted)
    }
}

/// The linear solution set of `Σ z_j N_j v = 0`, without checking that `v`
/// is centred.
pub fn solution_set(orbit: &NilpotentOrbit, v: &[i64]) -> Result<LocusSolution> {
    let m = coefficient_map(orbit, v)?;
    let basis = if orbit.r() == 0 { Vec::new() } else { m.kernel() };
    Ok(LocusSolution {
        class: v.to_vec(),
        r: orbit.r(),
        basis,
        verified_at: None,
    })
}

/// Exact locus of a class `v ∈ F⁰ ∩ W_0` on a nilpotent orbit, verified by
/// `v ∈ Φ⁰_un(z)` at a point of the solution set.
pub fn orbit_locus_solve(orbit: &NilpotentOrbit, v: &[i64]) -> Result<LocusSolution> {
    let vg = gauss_vector(v);
    if v.len() != orbit.rank() {
        return Err(Error::Dimension(format!(
            "class of length {} on a rank {} lattice",
            v.len(),
            orbit.rank()
        )));
    }
    if !orbit.limiting_filtration().get(0).contains(&vg) {
        return Err(Error::NotCentered(
            "class is not in F⁰ of the limiting filtration".into(),
        ));
    }
    if !orbit.limiting_weight_filtration()?.get(0).contains(&vg) {
        return Err(Error::NotCentered(
            "class is not in W_0 of the limiting weight filtration".into(),
        ));
    }
    let mut sol = solution_set(orbit, v)?;
    let z = sol.sample_point();
    if !orbit.evaluate(&z)?.get(0).contains(&vg) {
        return Err(Error::Verification(format!(
            "class is not in Φ⁰ at the solution point {z:?}"
        )));
    }
    sol.verified_at = Some(z);
    Ok(sol)
}

/// Both sides of the monodromy criterion for `m ∈ Z^r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MonodromyVerdict {
    /// `Σ m_i N_i v = 0`.
    pub linear: bool,
    /// `exp(Σ m_i N_i) v = v`.
    pub unipotent: bool,
}

impl MonodromyVerdict {
    pub fn agree(&self) -> bool {
        self.linear == self.unipotent
    }
}

pub fn monodromy_verdict(orbit: &NilpotentOrbit, v: &[i64], m: &[i64]) -> Result<MonodromyVerdict> {
    if m.len() != orbit.r() {
        return Err(Error::Dimension(format!(
            "{} monodromy exponents for {} variables",
            m.len(),
            orbit.r()
        )));
    }
    let map = coefficient_map(orbit, v)?;
    let lin = map.apply(&rational_vector(m));
    let n = orbit.rank();
    let log = orbit
        .generators()
        .iter()
        .zip(m)
        .fold(Matrix::zeros(n, n), |acc, (g, &mj)| {
            &acc + &g.scale(&Rational::from_i64(mj))
        });
    let rv = rational_vector(v);
    let moved = exp_nilpotent(&log)?.apply(&rv);
    Ok(MonodromyVerdict {
        linear: lin.iter().all(|x| x.is_zero()),
        unipotent: moved == rv,
    })
}

/// Whether the monodromy `exp(Σ m_i N_i)` fixes `v`; both the linear and the
/// unipotent form are evaluated and must agree.
pub fn monodromy_fixes(orbit: &NilpotentOrbit, v: &[i64], m: &[i64]) -> Result<bool> {
    let verdict = monodromy_verdict(orbit, v, m)?;
    Ok(verdict.linear && verdict.unipotent)
}

/// Orthogonal projector of `C^r` onto the row space of the coefficient map.
fn row_space_projector(orbit: &NilpotentOrbit, v: &[i64]) -> Result<Matrix<Rational>> {
    let m = coefficient_map(orbit, v)?;
    let r = orbit.r();
    let rows = Subspace::row_space(&m).basis().clone();
    if rows.rows() == 0 {
        return Ok(Matrix::zeros(r, r));
    }
    let gram = &rows * &rows.transpose();
    Ok(&(&rows.transpose() * &gram.inverse()?) * &rows)
}

/// A nearby point `z′` with `Σ z′_j N_j v = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct Projection {
    pub z: Vec<[f64; 2]>,
    /// `z′ − z`.
    pub shift: Vec<[f64; 2]>,
    pub distance: f64,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

/// Minimum-norm correction of `z = base + offset` onto the orbit locus;
/// the exact base is projected exactly so small offsets keep their
/// precision.
pub fn project_offset(
    orbit: &NilpotentOrbit,
    v: &[i64],
    base: &[GaussRat],
    offset: &[Complex64],
) -> Result<Projection> {
    let r = orbit.r();
    if base.len() != r || offset.len() != r {
        return Err(Error::Dimension(format!(
            "point of length {} for {} variables",
            base.len(),
            r
        )));
    }
    let p = row_space_projector(orbit, v)?;
    let exact = p.map(GaussRat::from_rational).apply(base);
    let pf: Vec<Vec<f64>> = (0..r)
        .map(|i| (0..r).map(|j| p.get(i, j).to_f64().unwrap_or(0.0)).collect())
        .collect();
    let shift: Vec<Complex64> = (0..r)
        .map(|i| {
            let off: Complex64 = (0..r).map(|j| offset[j] * pf[i][j]).sum();
            -(exact[i].to_c64() + off)
        })
        .collect();
    let z: Vec<Complex64> = (0..r).map(|i| base[i].to_c64() + offset[i] + shift[i]).collect();
    let distance = shift.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(Projection {
        z: z.into_iter().map(pair).collect(),
        shift: shift.into_iter().map(pair).collect(),
        distance,
    })
}

pub fn project_nearby(orbit: &NilpotentOrbit, v: &[i64], z: &[Complex64]) -> Result<Projection> {
    project_offset(orbit, v, &vec![GaussRat::zero(); orbit.r()], z)
}

/// Exact projection of a Gaussian-rational point.
pub fn project_exact(orbit: &NilpotentOrbit, v: &[i64], z: &[GaussRat]) -> Result<Vec<GaussRat>> {
    if z.len() != orbit.r() {
        return Err(Error::Dimension(format!(
            "point of length {} for {} variables",
            z.len(),
            orbit.r()
        )));
    }
    let p = row_space_projector(orbit, v)?.map(GaussRat::from_rational);
    Ok(z.iter().zip(p.apply(z)).map(|(a, b)| a.clone() - b).collect())
}

/// Result of the near-class test `sin∠(v, Φ⁰(z)) ≤ exp(−α sup y)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NearClassVerdict {
    pub sine: f64,
    pub threshold: f64,
    pub near: bool,
}

pub fn near_class_verdict(
    lattice: &PolarizedLattice,
    f: &Filtration<Cf64>,
    v: &[Cf64],
    z: &[Complex64],
    alpha: f64,
) -> Result<NearClassVerdict> {
    if alpha <= 0.0 {
        return Err(Error::Dimension("the exponent α must be positive".into()));
    }
    let metric = hodge_metric(lattice.form(), f, lattice.weight())?;
    let sine = angle_sine(v, &f.get(0), &metric)?;
    let sup_y = z.iter().map(|c| c.im).fold(f64::NEG_INFINITY, f64::max);
    let threshold = (-alpha * sup_y).exp();
    Ok(NearClassVerdict {
        sine,
        threshold,
        near: sine <= threshold,
    })
}

pub fn near_class_test(
    lattice: &PolarizedLattice,
    f: &Filtration<Cf64>,
    v: &[Cf64],
    z: &[Complex64],
    alpha: f64,
) -> Result<bool> {
    Ok(near_class_verdict(lattice, f, v, z, alpha)?.near)
}

/// Rational points of `Φ⁰ ∩ conj(Φ⁰)`.
fn real_type_zero(f: &Filtration<GaussRat>) -> Result<Subspace<Rational>> {
    let f0 = f.get(0);
    let both = f0.intersect(&f0.conjugate())?;
    let basis = both
        .rational_basis()
        .ok_or_else(|| Error::Verification("conjugation-stable subspace has a non-real echelon basis".into()))?;
    Ok(Subspace::row_space(&basis))
}

/// Integral `(0,0)` classes with `Q(v, v) ≤ k` for the weight-0 Hodge
/// structure `f`, sorted by norm and then lexicographically.
pub fn classes_at(
    lattice: &PolarizedLattice,
    f: &Filtration<GaussRat>,
    k: i64,
    exec: Execution,
) -> Result<Vec<(Vec<i64>, i64)>> {
    if lattice.weight() != 0 {
        return Err(Error::InvalidLattice(format!(
            "classes are enumerated in weight 0, found weight {}; Tate-twist first",
            lattice.weight()
        )));
    }
    let u = real_type_zero(f)?;
    let basis = saturated_basis(&u);
    let g = gram_matrix(&basis, lattice.form());
    let xs = short_vectors(&g, &Rational::from_i64(k), exec)?;
    let n = lattice.rank();
    let mut out: Vec<(Vec<i64>, i64)> = xs
        .iter()
        .map(|x| {
            let v = to_i64(&combine(x, &basis, n))?;
            let rv = rational_vector(&v);
            let norm = bilinear(lattice.form(), &rv, &rv);
            let norm = norm
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::Dimension("norm overflows".into()))?;
            Ok((v, norm))
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSource {
    /// `z′` from the minimum-norm projection onto the orbit locus.
    Projection,
    /// The hit point itself, which lies on the nilpotent orbit.
    HitPoint,
}

/// A point `z′` with `v ∈ Φ⁰_un(z′)`.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub z: Vec<[f64; 2]>,
    /// Gaussian-rational coordinates, when `z′` is exact.
    pub exact_z: Option<Vec<String>>,
    /// Membership was decided in exact arithmetic.
    pub exact: bool,
    /// Sine of the angle between `v` and `Φ⁰_un(z′)` for float witnesses.
    pub residual: f64,
    pub source: WitnessSource,
}

#[derive(Clone, Debug)]
pub struct HodgeClassHit {
    pub v: Vec<i64>,
    pub z: Vec<GaussRat>,
    pub q_norm: i64,
    pub in_w0: bool,
    pub limiting_witness: Option<Witness>,
}

fn in_w0(orbit: &NilpotentOrbit, v: &[i64]) -> Result<bool> {
    Ok(orbit.cone_filtration()?.get(0).contains(&rational_vector(v)))
}

fn exact_witness(
    orbit: &NilpotentOrbit,
    v: &[i64],
    z: Vec<GaussRat>,
    source: WitnessSource,
) -> Result<Option<Witness>> {
    if orbit.evaluate(&z)?.get(0).contains(&gauss_vector(v)) {
        Ok(Some(Witness {
            z: z.iter().map(|c| pair(c.to_c64())).collect(),
            exact_z: Some(z.iter().map(|c| c.to_string()).collect()),
            exact: true,
            residual: 0.0,
            source,
        }))
    } else {
        Ok(None)
    }
}

/// Witness search at an exact point of the orbit where `v` is a class.
fn witness_at(orbit: &NilpotentOrbit, v: &[i64], z: &[GaussRat], hit_on_orbit: bool) -> Result<Option<Witness>> {
    let projected = project_exact(orbit, v, z)?;
    if let Some(w) = exact_witness(orbit, v, projected, WitnessSource::Projection)? {
        return Ok(Some(w));
    }
    if hit_on_orbit {
        return exact_witness(orbit, v, z.to_vec(), WitnessSource::HitPoint);
    }
    Ok(None)
}

/// All integral `(0,0)` classes of `Q`-norm at most `k` at an exact point
/// of a weight-0 nilpotent orbit, with the `W_0` and limiting-witness
/// verdicts.
pub fn enumerate_classes(
    orbit: &NilpotentOrbit,
    z: &[GaussRat],
    k: i64,
    exec: Execution,
) -> Result<Vec<HodgeClassHit>> {
    let f = orbit.evaluate(z)?;
    let classes = classes_at(orbit.lattice(), &f, k, exec)?;
    exec.map(&classes, |(v, q_norm)| {
        Ok(HodgeClassHit {
            in_w0: in_w0(orbit, v)?,
            limiting_witness: witness_at(orbit, v, z, true)?,
            v: v.clone(),
            z: z.to_vec(),
            q_norm: *q_norm,
        })
    })
    .into_iter()
    .collect()
}

/// The same enumeration on a variation at exact `(z, s)`; witnesses come
/// from the projection only.
pub fn enumerate_sample_classes(
    sample: &VariationSample,
    z: &[GaussRat],
    s: &[GaussRat],
    k: i64,
    exec: Execution,
) -> Result<Vec<HodgeClassHit>> {
    let f = sample.evaluate_exact(z, s)?;
    let orbit = &sample.orbit;
    let classes = classes_at(orbit.lattice(), &f, k, exec)?;
    exec.map(&classes, |(v, q_norm)| {
        Ok(HodgeClassHit {
            in_w0: in_w0(orbit, v)?,
            limiting_witness: witness_at(orbit, v, z, false)?,
            v: v.clone(),
            z: z.to_vec(),
            q_norm: *q_norm,
        })
    })
    .into_iter()
    .collect()
}

/// Integral vectors of Hodge norm at most `k` at a float point that are near
/// `Φ⁰(z)` in the sense of the near-class test.
pub fn near_class_scan(
    orbit: &NilpotentOrbit,
    z: &[Complex64],
    k: f64,
    alpha: f64,
    limit: usize,
) -> Result<Vec<Vec<i64>>> {
    let f = orbit.evaluate_float(z)?;
    let metric = hodge_metric(orbit.lattice().form(), &f, orbit.weight())?;
    let n = orbit.rank();
    let g: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| metric.get(i, j).0.re).collect())
        .collect();
    let candidates = short_vectors_f64(&g, k, limit)?;
    let mut out = Vec::new();
    for v in candidates {
        if v.iter().all(|&x| x == 0) {
            out.push(v);
            continue;
        }
        let vf: Vec<Cf64> = v.iter().map(|&x| Cf64::new(x as f64, 0.0)).collect();
        if near_class_test(orbit.lattice(), &f, &vf, z, alpha)? {
            out.push(v);
        }
    }
    Ok(out)
}

/// Float Fincke–Pohst for `xᵀ G x ≤ k` with a small safety margin; callers
/// re-test candidates.
fn short_vectors_f64(g: &[Vec<f64>], k: f64, limit: usize) -> Result<Vec<Vec<i64>>> {
    let n = g.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i][j]);
    let chol = m.cholesky().ok_or(Error::NotPositive)?;
    let l = chol.l();
    // xᵀ G x = |Lᵀ x|²; row i of Lᵀ involves x_i..x_{n-1}
    let bound = k * (1.0 + 1e-9) + 1e-12;
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    fn go(
        l: &nalgebra::DMatrix<f64>,
        i: usize,
        x: &mut Vec<i64>,
        rem: f64,
        out: &mut Vec<Vec<i64>>,
        limit: usize,
    ) -> Result<()> {
        let n = x.len();
        let d = l[(i, i)];
        let c: f64 = (i + 1..n).map(|j| l[(j, i)] * x[j] as f64).sum();
        let r = rem.max(0.0).sqrt() / d;
        let lo = (-c / d - r).ceil() as i64;
        let hi = (-c / d + r).floor() as i64;
        for xi in lo..=hi {
            x[i] = xi;
            let t = d * xi as f64 + c;
            let rest = rem - t * t;
            if rest < 0.0 {
                continue;
            }
            if i == 0 {
                if out.len() >= limit {
                    return Err(Error::Underflow(format!("more than {limit} candidate vectors")));
                }
                out.push(x.clone());
            } else {
                go(l, i - 1, x, rest, out, limit)?;
            }
        }
        x[i] = 0;
        Ok(())
    }
    if n == 0 {
        return Ok(vec![Vec::new()]);
    }
    go(&l, n - 1, &mut x, bound, &mut out, limit)?;
    out.sort();
    Ok(out)
}

/// Snap a float to a rational with denominator at most `max_den` within
/// `tol`, via continued fractions.
pub fn snap_rational(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let (p2, q2) = (a.checked_mul(p1)?.checked_add(p0)?, a.checked_mul(q1)?.checked_add(q0)?);
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p1 as f64 / q1 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some(Rational::new(BigInt::from(p1), BigInt::from(q1)));
        }
        let frac = y - a as f64;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    (q1 > 0 && (x - p1 as f64 / q1 as f64).abs() <= tol * x.abs().max(1.0))
        .then(|| Rational::new(BigInt::from(p1), BigInt::from(q1)))
}

/// Snap tolerance for turning float witnesses into exact points.
pub const SNAP_TOLERANCE: f64 = 1e-9;
const SNAP_DENOMINATOR: i64 = 1000;

fn snap_point(z: &[[f64; 2]]) -> Option<Vec<GaussRat>> {
    z.iter()
        .map(|c| {
            Some(GaussRat::new(
                snap_rational(c[0], SNAP_DENOMINATOR, SNAP_TOLERANCE)?,
                snap_rational(c[1], SNAP_DENOMINATOR, SNAP_TOLERANCE)?,
            ))
        })
        .collect()
}

/// A point of an evaluation sequence.
#[derive(Clone, Debug)]
pub enum EvalPoint {
    Exact(Vec<GaussRat>),
    Float(Vec<Complex64>),
}

impl EvalPoint {
    pub fn to_c64(&self) -> Vec<Complex64> {
        match self {
            EvalPoint::Exact(z) => z.iter().map(|c| c.to_c64()).collect(),
            EvalPoint::Float(z) => z.clone(),
        }
    }
}

/// `z(n) = base + i n θ` for the given depths `n`.
pub fn ray_points(base: &[GaussRat], direction: &[Rational], depths: &[u32]) -> Vec<(u32, EvalPoint)> {
    depths
        .iter()
        .map(|&n| {
            let z = base
                .iter()
                .zip(direction)
                .map(|(b, d)| b.clone() + GaussRat::new(Rational::zero(), d * Rational::from_i64(n as i64)))
                .collect();
            (n, EvalPoint::Exact(z))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthHits {
    pub depth: u32,
    pub z: Vec<[f64; 2]>,
    pub classes: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PersistentHit {
    pub v: Vec<i64>,
    pub q_norm: i64,
    pub in_w0: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm25Report {
    pub k: i64,
    pub alpha: f64,
    pub depths: Vec<DepthHits>,
    pub union: Vec<Vec<i64>>,
    /// First depth from which the hit set no longer changes.
    pub stable_from: Option<u32>,
    pub persistent: Vec<PersistentHit>,
    /// Hits that do not persist to the deepest point.
    pub transient: Vec<Vec<i64>>,
    pub all_in_w0: bool,
    pub all_witnessed_exactly: bool,
}

impl Thm25Report {
    pub fn stabilizes_by(&self, depth: u32) -> bool {
        self.stable_from.is_some_and(|d| d <= depth)
    }

    pub fn passed(&self, depth: u32) -> bool {
        self.stabilizes_by(depth) && self.all_in_w0 && self.all_witnessed_exactly
    }
}

/// Finiteness harness along a sequence of points: exact points are
/// enumerated exactly, float points by a near-class scan.
pub fn verify_thm25(
    orbit: &NilpotentOrbit,
    points: &[(u32, EvalPoint)],
    k: i64,
    alpha: f64,
    exec: Execution,
) -> Result<Thm25Report> {
    if points.is_empty() {
        return Err(Error::Dimension("empty evaluation sequence".into()));
    }
    let sets: Vec<Result<Vec<Vec<i64>>>> = exec.map(points, |(_, p)| match p {
        EvalPoint::Exact(z) => Ok(
            classes_at(orbit.lattice(), &orbit.evaluate(z)?, k, Execution::Sequential)?
                .into_iter()
                .map(|(v, _)| v)
                .collect(),
        ),
        EvalPoint::Float(z) => near_class_scan(orbit, z, k as f64, alpha, 1_000_000),
    });
    let sets: Vec<Vec<Vec<i64>>> = sets.into_iter().collect::<Result<_>>()?;
    let depths: Vec<DepthHits> = points
        .iter()
        .zip(&sets)
        .map(|((n, p), s)| DepthHits {
            depth: *n,
            z: p.to_c64().into_iter().map(pair).collect(),
            classes: s.clone(),
        })
        .collect();
    let as_set = |s: &Vec<Vec<i64>>| s.iter().cloned().collect::<BTreeSet<_>>();
    let last = as_set(sets.last().expect("nonempty"));
    let mut stable_index = sets.len() - 1;
    while stable_index > 0 && as_set(&sets[stable_index - 1]) == last {
        stable_index -= 1;
    }
    let union: BTreeSet<Vec<i64>> = sets.iter().flatten().cloned().collect();
    let (_, deep) = points.last().expect("nonempty");
    let mut persistent = Vec::new();
    for v in &last {
        let rv = rational_vector(v);
        let q_norm = bilinear(orbit.lattice().form(), &rv, &rv)
            .to_integer()
            .to_i64()
            .unwrap_or(i64::MAX);
        let witness = match deep {
            EvalPoint::Exact(z) => witness_at(orbit, v, z, true)?,
            EvalPoint::Float(z) => float_witness(orbit, v, z)?,
        };
        persistent.push(PersistentHit {
            v: v.clone(),
            q_norm,
            in_w0: in_w0(orbit, v)?,
            witness,
        });
    }
    persistent.sort_by(|a, b| a.q_norm.cmp(&b.q_norm).then_with(|| a.v.cmp(&b.v)));
    let transient: Vec<Vec<i64>> = union.iter().filter(|v| !last.contains(*v)).cloned().collect();
    let all_in_w0 = persistent.iter().all(|h| h.in_w0);
    let all_witnessed_exactly = persistent.iter().all(|h| h.witness.as_ref().is_some_and(|w| w.exact));
    Ok(Thm25Report {
        k,
        alpha,
        depths,
        union: union.into_iter().collect(),
        stable_from: Some(points[stable_index].0),
        persistent,
        transient,
        all_in_w0,
        all_witnessed_exactly,
    })
}

fn float_witness(orbit: &NilpotentOrbit, v: &[i64], z: &[Complex64]) -> Result<Option<Witness>> {
    let proj = project_nearby(orbit, v, z)?;
    if let Some(exact) = snap_point(&proj.z) {
        if let Some(w) = exact_witness(orbit, v, exact, WitnessSource::Projection)? {
            return Ok(Some(w));
        }
    }
    let zf: Vec<Complex64> = proj.z.iter().map(|c| Complex64::new(c[0], c[1])).collect();
    let f = orbit.evaluate_float(&zf)?;
    let metric = hodge_metric(orbit.lattice().form(), &f, orbit.weight())?;
    let vf: Vec<Cf64> = v.iter().map(|&x| Cf64::new(x as f64, 0.0)).collect();
    let residual = if v.iter().all(|&x| x == 0) {
        0.0
    } else {
        angle_sine(&vf, &f.get(0), &metric)?
    };
    Ok(Some(Witness {
        z: proj.z,
        exact_z: None,
        exact: false,
        residual,
        source: WitnessSource::Projection,
    }))
}

/// One point of a projection-decay fit.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionPoint {
    pub t: f64,
    pub inf_y: f64,
    /// `|z′ − z|` between a locus point and its projection.
    pub distance: f64,
    /// Largest residual of the locus equations at the locus point.
    pub locus_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionDecay {
    pub points: Vec<ProjectionPoint>,
    pub exponent: f64,
    /// Fitted `A` in `|z′ − z| ≈ A e^{−exponent · inf y}`.
    pub constant: f64,
    pub rms_residual: f64,
}

/// Points of the locus of `v` on a variation near the orbit-locus points
/// `base(t)`, found by the fixed-point iteration `z = base − P⁺ γ(s(z))`,
/// followed by the fitted decay of `|z′ − z|` for the projection `z′`.
pub fn projection_decay(
    sample: &VariationSample,
    v: &[i64],
    bases: &[(f64, Vec<GaussRat>)],
    exec: Execution,
) -> Result<ProjectionDecay> {
    let system = locus_equations(sample, v)?;
    let orbit = &sample.orbit;
    let lin = system.linear_part();
    let r = orbit.r();
    // minimum-norm left inverse of the coefficient map on its image
    let pinv = pseudo_inverse(&lin)?;
    let pts: Vec<Result<ProjectionPoint>> = exec.map(bases, |(t, base)| {
        let solution = solution_set(orbit, v)?;
        if !solution.contains(base) {
            return Err(Error::NotCentered(format!(
                "base point at t = {t} is not on the orbit locus"
            )));
        }
        let zb: Vec<Complex64> = base.iter().map(|c| c.to_c64()).collect();
        let mut offset = vec![Complex64::new(0.0, 0.0); r];
        for _ in 0..50 {
            let z: Vec<Complex64> = zb.iter().zip(&offset).map(|(a, b)| a + b).collect();
            let gamma = series_values(&system, &z);
            let next: Vec<Complex64> = (0..r)
                .map(|i| -(0..gamma.len()).map(|a| gamma[a] * pinv[i][a]).sum::<Complex64>())
                .collect();
            let change = next
                .iter()
                .zip(&offset)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            offset = next;
            if change <= 1e-15 * offset.iter().map(|c| c.norm()).fold(f64::MIN_POSITIVE, f64::max) {
                break;
            }
        }
        let z: Vec<Complex64> = zb.iter().zip(&offset).map(|(a, b)| a + b).collect();
        // residual: linear part on the offset plus the series (the base solves the linear part exactly)
        let gamma = series_values(&system, &z);
        let lin_f: Vec<Vec<f64>> = (0..lin.rows())
            .map(|a| (0..r).map(|j| lin.get(a, j).to_f64().unwrap_or(0.0)).collect())
            .collect();
        let locus_residual = (0..lin.rows())
            .map(|a| ((0..r).map(|j| offset[j] * lin_f[a][j]).sum::<Complex64>() + gamma[a]).norm())
            .fold(0.0, f64::max);
        let proj = project_offset(orbit, v, base, &offset)?;
        let inf_y = z.iter().map(|c| c.im).fold(f64::INFINITY, f64::min);
        Ok(ProjectionPoint {
            t: *t,
            inf_y,
            distance: proj.distance,
            locus_residual,
        })
    });
    let points: Vec<ProjectionPoint> = pts.into_iter().collect::<Result<_>>()?;
    if points.len() < 2 {
        return Err(Error::Regime("need at least two points to fit".into()));
    }
    if let Some(p) = points.iter().find(|p| p.distance <= f64::MIN_POSITIVE) {
        return Err(Error::Underflow(format!(
            "projection distance underflows at t = {}",
            p.t
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.inf_y).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let (a, b, rms) = linear_fit(&xs, &ys);
    Ok(ProjectionDecay {
        points,
        exponent: -a,
        constant: b.exp(),
        rms_residual: rms,
    })
}

fn series_values(system: &LocusSystem, z: &[Complex64]) -> Vec<Complex64> {
    let s: Vec<Complex64> = z.iter().map(|&zj| s_coordinate(zj)).collect();
    system
        .equations
        .iter()
        .map(|e| {
            e.series
                .iter()
                .map(|t| {
                    t.coeff.to_c64()
                        * t.degree
                            .iter()
                            .zip(&s)
                            .map(|(&d, sj)| sj.powu(d))
                            .product::<Complex64>()
                })
                .sum()
        })
        .collect()
}

/// Moore–Penrose inverse of a rational matrix as floats, computed exactly
/// from a full-rank factorization `M = C R`.
fn pseudo_inverse(m: &Matrix<Rational>) -> Result<Vec<Vec<f64>>> {
    let (rows, cols) = (m.rows(), m.cols());
    let r_basis = Subspace::row_space(m).basis().clone();
    if r_basis.rows() == 0 {
        return Ok(vec![vec![0.0; rows]; cols]);
    }
    // C = M Rᵀ (R Rᵀ)^{-1}
    let rrt = &r_basis * &r_basis.transpose();
    let c = &(m * &r_basis.transpose()) * &rrt.inverse()?;
    // M⁺ = Rᵀ (R Rᵀ)^{-1} (Cᵀ C)^{-1} Cᵀ
    let ctc = &c.transpose() * &c;
    let p = &(&(&r_basis.transpose() * &rrt.inverse()?) * &ctc.inverse()?) * &c.transpose();
    Ok((0..cols)
        .map(|i| (0..rows).map(|j| p.get(i, j).to_f64().unwrap_or(0.0)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::Filtration;
    use crate::orbits::{GammaTerm, Truncation};
    use crate::scalar::{gi, rat};
    use std::f64::consts::PI;

    fn qmat(rows: &[&[i64]]) -> Matrix<Rational> {
        let n = rows[0].len();
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect(), n).unwrap()
    }

    fn span(n: usize, vs: &[&[i64]]) -> Subspace<GaussRat> {
        let rows: Vec<Vec<GaussRat>> = vs.iter().map(|v| v.iter().map(|&x| gi(x, 0)).collect()).collect();
        Subspace::span(n, &rows).unwrap()
    }

    fn trivial_orbit() -> NilpotentOrbit {
        let lattice = PolarizedLattice::new(qmat(&[&[1]]), 0).unwrap();
        let f = Filtration::decreasing(1, vec![(0, Subspace::full(1))]).unwrap();
        NilpotentOrbit::new(lattice, vec![qmat(&[&[0]])], f).unwrap()
    }

    /// Elliptic orbit twisted to weight −1, so that `e1` has Hodge degree 0.
    fn twisted_elliptic() -> NilpotentOrbit {
        let lattice = PolarizedLattice::new(qmat(&[&[0, 1], &[-1, 0]]), -1).unwrap();
        let f = Filtration::decreasing(2, vec![(-1, Subspace::full(2)), (0, span(2, &[&[1, 0]]))]).unwrap();
        NilpotentOrbit::new(lattice, vec![qmat(&[&[0, 0], &[1, 0]])], f).unwrap()
    }

    /// Product of two elliptic orbits, twisted to weight 0.
    fn product_orbit() -> NilpotentOrbit {
        let qe = qmat(&[&[0, 1], &[-1, 0]]);
        let ne = qmat(&[&[0, 0], &[1, 0]]);
        let id = Matrix::<Rational>::identity(2);
        let lattice = PolarizedLattice::new(qe.kron(&qe), 0).unwrap();
        let f = Filtration::decreasing(
            4,
            vec![
                (-1, Subspace::full(4)),
                (0, span(4, &[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0]])),
                (1, span(4, &[&[1, 0, 0, 0]])),
            ],
        )
        .unwrap();
        NilpotentOrbit::new(lattice, vec![ne.kron(&id), id.kron(&ne)], f).unwrap()
    }

    #[test]
    fn trivial_system_and_full_locus() {
        let sample = VariationSample::unperturbed(trivial_orbit());
        let sys = locus_equations(&sample, &[1]).unwrap();
        assert!(sys.is_empty());
        assert_eq!(sys.equations.len(), 1);
        let sol = orbit_locus_solve(&sample.orbit, &[1]).unwrap();
        assert!(sol.is_full());
    }

    #[test]
    fn product_class_gives_the_diagonal() {
        let o = product_orbit();
        // v = e1⊗e2 − e2⊗e1: N1 v = e2⊗e2 = −N2 v
        let v = [0, 1, -1, 0];
        let sys = locus_equations(&VariationSample::unperturbed(o.clone()), &v).unwrap();
        assert_eq!(sys.nontrivial(), vec![3]);
        assert_eq!(sys.equations[3].linear, vec![rat(1, 1), rat(-1, 1)]);
        let sol = orbit_locus_solve(&o, &v).unwrap();
        assert_eq!(sol.dim(), 1);
        assert!(sol.contains(&[gi(2, 3), gi(2, 3)]));
        assert!(!sol.contains(&[gi(2, 3), gi(0, 3)]));
        assert!(sol.invariant_under(&[1, 1]));
        assert!(!sol.invariant_under(&[1, 0]));
    }

    #[test]
    fn independent_images_give_a_point() {
        let o = product_orbit();
        // v = e1⊗e1 has N1 v = e2⊗e1 and N2 v = e1⊗e2, independent
        let sol = solution_set(&o, &[1, 0, 0, 0]).unwrap();
        assert_eq!(sol.dim(), 0);
    }

    #[test]
    fn series_part_of_the_twisted_family() {
        let o = twisted_elliptic();
        let n = o.generators()[0].map(GaussRat::from_rational);
        let sample = VariationSample::new(
            o,
            vec![GammaTerm {
                degree: vec![1],
                coeff: n,
            }],
            Truncation::Exact,
        )
        .unwrap();
        let sys = locus_equations(&sample, &[1, 0]).unwrap();
        assert_eq!(sys.nontrivial(), vec![1]);
        let eq = &sys.equations[1];
        assert_eq!(eq.linear, vec![rat(1, 1)]);
        assert_eq!(
            eq.series,
            vec![SeriesTerm {
                degree: vec![1],
                coeff: gi(1, 0)
            }]
        );
        // e2 has Hodge degree −1
        assert!(matches!(locus_equations(&sample, &[0, 1]), Err(Error::NotCentered(_))));
    }

    #[test]
    fn monodromy_criterion_examples() {
        let o = twisted_elliptic();
        assert!(monodromy_fixes(&o, &[1, 0], &[0]).unwrap());
        assert!(!monodromy_fixes(&o, &[1, 0], &[1]).unwrap());
        assert!(monodromy_fixes(&o, &[0, 1], &[5]).unwrap());
        let p = product_orbit();
        let v = [0, 1, -1, 0];
        let verdict = monodromy_verdict(&p, &v, &[2, 2]).unwrap();
        assert!(verdict.linear && verdict.agree());
        assert!(!monodromy_fixes(&p, &v, &[2, 1]).unwrap());
    }

    #[test]
    fn projection_examples() {
        let p = product_orbit();
        let v = [0, 1, -1, 0];
        let on = project_nearby(&p, &v, &[Complex64::new(0.5, 2.0), Complex64::new(0.5, 2.0)]).unwrap();
        assert!(on.distance < 1e-15);
        let off = project_nearby(&p, &v, &[Complex64::new(0.0, 3.0), Complex64::new(0.0, 1.0)]).unwrap();
        assert!((off.z[0][1] - 2.0).abs() < 1e-12 && (off.z[1][1] - 2.0).abs() < 1e-12);
        let o = twisted_elliptic();
        let one = project_nearby(&o, &[1, 0], &[Complex64::new(0.3, 4.0)]).unwrap();
        assert!(one.z[0][0].abs() < 1e-15 && one.z[0][1].abs() < 1e-15);
        assert_eq!(
            project_exact(&p, &v, &[gi(0, 3), gi(0, 1)]).unwrap(),
            vec![gi(0, 2), gi(0, 2)]
        );
    }

    #[test]
    fn rank_one_enumeration() {
        let o = trivial_orbit();
        let hits = enumerate_classes(&o, &[gi(0, 1)], 4, Execution::Sequential).unwrap();
        let vs: Vec<Vec<i64>> = hits.iter().map(|h| h.v.clone()).collect();
        assert_eq!(vs, vec![vec![0], vec![-1], vec![1], vec![-2], vec![2]]);
        assert!(hits
            .iter()
            .all(|h| h.in_w0 && h.limiting_witness.as_ref().is_some_and(|w| w.exact)));
        let zero = enumerate_classes(&o, &[gi(0, 1)], 0, Execution::Sequential).unwrap();
        assert_eq!(zero.len(), 1);
    }

    #[test]
    fn product_classes_on_the_diagonal() {
        let p = product_orbit();
        // on z1 = z2 the polarization class is (0,0); off the diagonal it is not
        let on = classes_at(
            p.lattice(),
            &p.evaluate(&[gi(0, 3), gi(0, 3)]).unwrap(),
            4,
            Execution::Parallel,
        )
        .unwrap();
        assert!(on.iter().any(|(v, _)| v == &vec![0, 1, -1, 0]));
        let off = classes_at(
            p.lattice(),
            &p.evaluate(&[gi(1, 7), gi(0, 3)]).unwrap(),
            4,
            Execution::Parallel,
        )
        .unwrap();
        assert!(!off.iter().any(|(v, _)| v == &vec![0, 1, -1, 0]));
        for (v, norm) in &on {
            let rv = rational_vector(v);
            assert_eq!(bilinear(p.lattice().form(), &rv, &rv), rat(*norm, 1));
        }
    }

    #[test]
    fn odd_weight_is_rejected() {
        let o = twisted_elliptic();
        assert!(matches!(
            enumerate_classes(&o, &[gi(0, 1)], 4, Execution::Sequential),
            Err(Error::InvalidLattice(_))
        ));
    }

    #[test]
    fn near_class_verdicts() {
        let o = twisted_elliptic();
        let z = [Complex64::new(0.0, 1.0)];
        let f = o.evaluate_float(&z).unwrap();
        let inside = f.get(0).basis_vectors()[0].clone();
        assert!(near_class_test(o.lattice(), &f, &inside, &z, 5.0).unwrap());
        let delta = (-10.0f64).exp();
        let v = vec![Cf64::new(1.0, 0.0), Cf64::new(delta, 0.0)];
        let verdict = near_class_verdict(o.lattice(), &f, &v, &z, 1.0).unwrap();
        let metric = hodge_metric(o.lattice().form(), &f, -1).unwrap();
        let direct = angle_sine(&v, &f.get(0), &metric).unwrap();
        assert_eq!(verdict.sine, direct);
        assert_eq!(verdict.near, direct <= (-1.0f64).exp());
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_rational(0.75, 1000, 1e-9), Some(rat(3, 4)));
        assert_eq!(snap_rational(-2.0, 1000, 1e-9), Some(rat(-2, 1)));
        assert_eq!(snap_rational(std::f64::consts::PI, 1000, 1e-9), None);
    }

    #[test]
    fn trivial_harness_is_constant() {
        let o = trivial_orbit();
        let pts = ray_points(&[gi(0, 0)], &[rat(1, 1)], &[1, 2, 4, 8]);
        let r = verify_thm25(&o, &pts, 4, 1.0, Execution::Parallel).unwrap();
        assert_eq!(r.stable_from, Some(1));
        assert_eq!(r.persistent.len(), 5);
        assert!(r.passed(4));
        assert!(r.transient.is_empty());
    }

    #[test]
    fn product_harness_with_float_points() {
        let p = product_orbit();
        let pts: Vec<(u32, EvalPoint)> = [2u32, 3, 4]
            .iter()
            .map(|&n| (n, EvalPoint::Float(vec![Complex64::new(0.25, n as f64); 2])))
            .collect();
        let r = verify_thm25(&p, &pts, 4, 1.0, Execution::Sequential).unwrap();
        let pol = vec![0, 1, -1, 0];
        assert!(r.persistent.iter().any(|h| h.v == pol && h.in_w0));
        let h = r.persistent.iter().find(|h| h.v == pol).unwrap();
        assert!(h.witness.as_ref().is_some_and(|w| w.exact));
    }

    #[test]
    fn projection_decay_on_the_product_family() {
        let p = product_orbit();
        let n1 = p.generators()[0].map(GaussRat::from_rational);
        let sample = VariationSample::new(
            p,
            vec![GammaTerm {
                degree: vec![1, 0],
                coeff: n1,
            }],
            Truncation::Exact,
        )
        .unwrap();
        let v = [0, 1, -1, 0];
        let bases: Vec<(f64, Vec<GaussRat>)> = (2..=8).map(|t| (t as f64, vec![gi(0, t); 2])).collect();
        let d = projection_decay(&sample, &v, &bases, Execution::Sequential).unwrap();
        assert!((d.exponent / (2.0 * PI) - 1.0).abs() < 0.1, "exponent {}", d.exponent);
        assert!(d.points.iter().all(|q| q.locus_residual < 1e-12));
    }
}
