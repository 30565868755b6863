//! Representations of `sl(2)^d` carrying a compatible Hodge structure, and
//! the model period maps `z ↦ exp(Σ z_j ĥ_j) F` they define.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{Direction, Filtration, Grading};
use crate::hodge::{hermitian, PolarizedLattice};
use crate::matrix::{unit_vector, Matrix};
use crate::nilpotent::{polarization_compatible_grading, splitting_grading, weight_filtration};
use crate::orbits::{hodge_metric, linear_fit, max_principal_sine, NilpotentOrbit};
use crate::par::Execution;
use crate::scalar::{float_tolerance, Cf64, ComplexField, Field, GaussRat, Rational};
use crate::subspace::{intersect_all, Subspace};
use crate::unipotent::exp_nilpotent;

/// Images of the standard triple of one `sl(2)` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    /// Image of `[[0,0],[1,0]]`.
    pub lowering: Matrix<Rational>,
    /// Image of `[[1,0],[0,-1]]`.
    pub grading: Matrix<Rational>,
    /// Image of `[[0,1],[0,0]]`.
    pub raising: Matrix<Rational>,
}

impl Triple {
    fn zero(n: usize) -> Self {
        Triple {
            lowering: Matrix::zeros(n, n),
            grading: Matrix::zeros(n, n),
            raising: Matrix::zeros(n, n),
        }
    }

    fn map(&self, f: impl Fn(&Matrix<Rational>) -> Matrix<Rational>) -> Self {
        Triple {
            lowering: f(&self.lowering),
            grading: f(&self.grading),
            raising: f(&self.raising),
        }
    }

    fn generators(&self) -> [&Matrix<Rational>; 3] {
        [&self.lowering, &self.grading, &self.raising]
    }
}

/// A representation of `sl(2)^d` on a polarized lattice together with the
/// filtration `F` of the model map `z ↦ exp(Σ z_j ĥ_j) F`.
#[derive(Clone, Debug)]
pub struct Sl2Rep {
    lattice: PolarizedLattice,
    triples: Vec<Triple>,
    f: Filtration<GaussRat>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidRep(msg.into())
}

fn ints(rows: &[&[i64]]) -> Matrix<Rational> {
    let n = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(rows.len(), n, |i, j| Rational::from_i64(rows[i][j]))
}

impl Sl2Rep {
    pub fn new(lattice: PolarizedLattice, triples: Vec<Triple>, f: Filtration<GaussRat>) -> Result<Self> {
        let rep = Sl2Rep { lattice, triples, f };
        rep.check()?;
        Ok(rep)
    }

    /// Weight-one rank-two representation of the elliptic family: `F¹ = ⟨e1⟩`
    /// and `ĥ e1 = e2`, so that `exp(zĥ)F¹` is the line through `(1, z)`.
    pub fn elliptic() -> Self {
        let lattice = PolarizedLattice::new(ints(&[&[0, 1], &[-1, 0]]), 1).expect("symplectic form");
        let triple = Triple {
            lowering: ints(&[&[0, 0], &[1, 0]]),
            grading: ints(&[&[1, 0], &[0, -1]]),
            raising: ints(&[&[0, 1], &[0, 0]]),
        };
        let e1 = Subspace::span(2, &[unit_vector(2, 0)]).expect("line");
        let f = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, e1)]).expect("flag");
        Sl2Rep::new(lattice, vec![triple], f).expect("elliptic representation")
    }

    /// Rank one, weight zero, with `d` factors acting trivially.
    pub fn trivial(d: usize) -> Self {
        let lattice = PolarizedLattice::new(ints(&[&[1]]), 0).expect("unit form");
        let f = Filtration::decreasing(1, vec![(0, Subspace::full(1))]).expect("flag");
        Sl2Rep {
            lattice,
            triples: vec![Triple::zero(1); d],
            f,
        }
    }

    /// A polarized Hodge structure with trivial action of `d` factors.
    pub fn hodge_structure(lattice: PolarizedLattice, f: Filtration<GaussRat>, d: usize) -> Result<Self> {
        let n = lattice.rank();
        let report = crate::hodge::check_polarization(lattice.form(), &f, lattice.weight(), true);
        if let Some(e) = report.failures.first() {
            return Err(bad(format!("trivial factor is not polarized: {e}")));
        }
        Sl2Rep::new(lattice, vec![Triple::zero(n); d], f)
    }

    /// The Hodge structure `⟨(1, i)⟩` of the elliptic curve at `z = i` with
    /// trivial action.
    pub fn elliptic_point(d: usize) -> Self {
        let e = Sl2Rep::elliptic();
        let f = e.f_sharp().expect("exact evaluation");
        Sl2Rep::hodge_structure(e.lattice, f, d).expect("elliptic Hodge structure")
    }

    pub fn lattice(&self) -> &PolarizedLattice {
        &self.lattice
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn weight(&self) -> i32 {
        self.lattice.weight()
    }

    /// Number of `sl(2)` factors.
    pub fn factors(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn lowering(&self) -> Vec<Matrix<Rational>> {
        self.triples.iter().map(|t| t.lowering.clone()).collect()
    }

    pub fn filtration(&self) -> &Filtration<GaussRat> {
        &self.f
    }

    /// Commutation relations, `Q`-skewness, and integral diagonalizability
    /// of the gradings.
    pub fn check(&self) -> Result<()> {
        let n = self.rank();
        let q = self.lattice.form();
        if self.f.ambient_dim() != n || self.f.direction() != Direction::Decreasing {
            return Err(bad("filtration must be decreasing on the lattice"));
        }
        let two = Rational::from_i64(2);
        for (j, t) in self.triples.iter().enumerate() {
            for g in t.generators() {
                if g.rows() != n || g.cols() != n {
                    return Err(bad(format!("factor {j} has generators of the wrong size")));
                }
                if !(&(&g.transpose() * q) + &(q * g)).is_zero() {
                    return Err(bad(format!("factor {j} does not preserve the polarization")));
                }
            }
            if t.grading.commutator(&t.lowering) != t.lowering.scale(&-two.clone()) {
                return Err(bad(format!("factor {j}: [Y, lowering] ≠ −2 lowering")));
            }
            if t.grading.commutator(&t.raising) != t.raising.scale(&two) {
                return Err(bad(format!("factor {j}: [Y, raising] ≠ 2 raising")));
            }
            if t.raising.commutator(&t.lowering) != t.grading {
                return Err(bad(format!("factor {j}: [raising, lowering] ≠ Y")));
            }
        }
        for (i, a) in self.triples.iter().enumerate() {
            for (j, b) in self.triples.iter().enumerate().skip(i + 1) {
                for x in a.generators() {
                    for y in b.generators() {
                        if !x.commutator(y).is_zero() {
                            return Err(bad(format!("factors {i} and {j} do not commute")));
                        }
                    }
                }
            }
        }
        self.weight_grading()?;
        Ok(())
    }

    /// Joint eigenspace decomposition of the `Y_j`.
    pub fn weight_grading(&self) -> Result<WeightGrading> {
        let n = self.rank();
        let bound = n as i32;
        let mut pieces: BTreeMap<Vec<i32>, Subspace<Rational>> = BTreeMap::new();
        pieces.insert(Vec::new(), Subspace::full(n));
        for t in &self.triples {
            let mut next = BTreeMap::new();
            for (idx, piece) in &pieces {
                for l in -bound..=bound {
                    let shifted = &t.grading - &Matrix::identity(n).scale(&Rational::from_i64(l as i64));
                    let eigen = piece.kernel_of(&shifted);
                    if !eigen.is_zero() {
                        let mut k = idx.clone();
                        k.push(l);
                        next.insert(k, eigen);
                    }
                }
            }
            pieces = next;
        }
        let total: usize = pieces.values().map(|s| s.dim()).sum();
        if total != n {
            return Err(bad("the gradings are not diagonalizable with integral eigenvalues"));
        }
        Ok(WeightGrading {
            grading: Grading::new(n, self.factors(), pieces)?,
        })
    }

    /// `exp(Σ z_j ĥ_j)`.
    pub fn translation<T: Field>(&self, z: &[T]) -> Result<Matrix<T>> {
        if z.len() != self.factors() {
            return Err(Error::Dimension(format!(
                "{} coordinates for {} factors",
                z.len(),
                self.factors()
            )));
        }
        let n = self.rank();
        let log = self.triples.iter().zip(z).fold(Matrix::zeros(n, n), |acc, (t, zj)| {
            &acc + &t.lowering.map(T::from_rational).scale(zj)
        });
        exp_nilpotent(&log)
    }

    /// `F♯ = exp(i Σ ĥ_j) F`.
    pub fn f_sharp(&self) -> Result<Filtration<GaussRat>> {
        sl2_orbit_eval(self, &vec![GaussRat::i(); self.factors()])
    }

    /// The nilpotent orbit with generators `ĥ_j` and limiting filtration `F`.
    pub fn to_orbit(&self) -> Result<NilpotentOrbit> {
        NilpotentOrbit::new(self.lattice.clone(), self.lowering(), self.f.clone())
    }

    /// Tensor product over the same factors: each generator acts as
    /// `X ⊗ 1 + 1 ⊗ X`.
    pub fn tensor(&self, other: &Sl2Rep) -> Result<Sl2Rep> {
        if self.factors() != other.factors() {
            return Err(bad("tensor factors must have the same number of sl(2) factors"));
        }
        let (ia, ib) = (Matrix::identity(self.rank()), Matrix::identity(other.rank()));
        let triples = self
            .triples
            .iter()
            .zip(&other.triples)
            .map(|(a, b)| Triple {
                lowering: &a.lowering.kron(&ib) + &ia.kron(&b.lowering),
                grading: &a.grading.kron(&ib) + &ia.kron(&b.grading),
                raising: &a.raising.kron(&ib) + &ia.kron(&b.raising),
            })
            .collect();
        self.combine(other, triples)
    }

    /// Tensor product with disjoint factors: `self`'s factors come first.
    pub fn external_tensor(&self, other: &Sl2Rep) -> Result<Sl2Rep> {
        let (ia, ib) = (Matrix::identity(self.rank()), Matrix::identity(other.rank()));
        let mut triples: Vec<Triple> = self.triples.iter().map(|t| t.map(|g| g.kron(&ib))).collect();
        triples.extend(other.triples.iter().map(|t| t.map(|g| ia.kron(g))));
        self.combine(other, triples)
    }

    fn combine(&self, other: &Sl2Rep, triples: Vec<Triple>) -> Result<Sl2Rep> {
        let lattice = PolarizedLattice::new(
            self.lattice.form().kron(other.lattice.form()),
            self.weight() + other.weight(),
        )?;
        let f = tensor_filtration(&self.f, &other.f)?;
        Sl2Rep::new(lattice, triples, f)
    }

    /// Tensor with a Hodge structure carrying the trivial action.
    pub fn twist(&self, lattice: PolarizedLattice, f: Filtration<GaussRat>) -> Result<Sl2Rep> {
        self.tensor(&Sl2Rep::hodge_structure(lattice, f, self.factors())?)
    }

    /// `V(k)`: weight drops by `2k` and `F^p` becomes `F^{p+k}`.
    pub fn tate_twist(&self, k: i32) -> Result<Sl2Rep> {
        let lattice = PolarizedLattice::new(self.lattice.form().clone(), self.weight() - 2 * k)?;
        Sl2Rep::new(lattice, self.triples.clone(), self.f.shift(k))
    }

    /// Dual representation in the dual basis, polarized by the smallest
    /// positive integral multiple of `(Q^{-1})ᵀ`.
    pub fn dual(&self) -> Result<Sl2Rep> {
        let n = self.rank();
        let inv = self.lattice.form().inverse()?.transpose();
        let den = inv
            .entries()
            .iter()
            .fold(BigInt::from(1), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
        let q = inv.scale(&Rational::from_integer(den));
        let lattice = PolarizedLattice::new(q, -self.weight())?;
        let triples = self.triples.iter().map(|t| t.map(|g| -&g.transpose())).collect();
        let (lo, hi) = self.f.range();
        let mut steps = Vec::new();
        for p in (-hi)..=(1 - lo) {
            let ann = self.f.get(1 - p).annihilator();
            let s = if ann.is_empty() {
                Subspace::zero(n)
            } else {
                Subspace::span(n, &ann)?
            };
            steps.push((p, s));
        }
        let f = Filtration::decreasing(n, steps)?;
        Sl2Rep::new(lattice, triples, f)
    }

    /// `Sym^n`, realized on symmetrized tensors `Σ_{σ} e_{σ(α)}` inside the
    /// `n`-th tensor power, which span the saturated sublattice.
    pub fn sym_power(&self, n: usize) -> Result<Sl2Rep> {
        if n == 0 {
            return Ok(Sl2Rep::trivial(self.factors()));
        }
        let m = self.rank();
        let full = m
            .checked_pow(n as u32)
            .filter(|&s| s <= 4096)
            .ok_or_else(|| bad("tensor power too large"))?;
        let multisets = multisets(m, n);
        let dim = multisets.len();
        let index = |t: &[usize]| t.iter().fold(0, |acc, &k| acc * m + k);
        // columns: symmetrized tensors; rows of `pick`: coordinate at the sorted position
        let mut embed = Matrix::<Rational>::zeros(full, dim);
        for (c, alpha) in multisets.iter().enumerate() {
            for perm in distinct_permutations(alpha) {
                embed.set(index(&perm), c, Rational::one());
            }
        }
        let pick = Matrix::from_fn(dim, full, |r, c| {
            if c == index(&multisets[r]) {
                Rational::one()
            } else {
                Rational::from_i64(0)
            }
        });
        let power = |g: &Matrix<Rational>| -> Matrix<Rational> {
            let id = Matrix::<Rational>::identity(m);
            (0..n).fold(Matrix::zeros(full, full), |acc, slot| {
                let term = (0..n).fold(Matrix::identity(1), |k, s| k.kron(if s == slot { g } else { &id }));
                &acc + &term
            })
        };
        let restrict = |g: &Matrix<Rational>| &(&pick * &power(g)) * &embed;
        let triples = self.triples.iter().map(|t| t.map(|g| restrict(g))).collect();
        let qn = (1..n).fold(self.lattice.form().clone(), |acc, _| acc.kron(self.lattice.form()));
        let q = &(&embed.transpose() * &qn) * &embed;
        let lattice = PolarizedLattice::new(q, self.weight() * n as i32)?;
        let fn_ = (1..n).try_fold(self.f.clone(), |acc, _| tensor_filtration(&acc, &self.f))?;
        let embed_c = embed.map(GaussRat::from_rational);
        let sym = Subspace::full(dim);
        let f = Filtration::decreasing(
            dim,
            fn_.steps()
                .into_iter()
                .map(|(p, s)| (p, sym.preimage(&embed_c, &s)))
                .collect(),
        )?;
        Sl2Rep::new(lattice, triples, f)
    }
}

fn multisets(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn go(m: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for k in start..m {
            cur.push(k);
            go(m, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(m, n, 0, &mut Vec::new(), &mut out);
    out
}

fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..cur.len())
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Basis adapted to a decreasing filtration, each vector tagged with the
/// largest `p` such that it lies in `F^p`.
fn adapted_basis<T: Field>(f: &Filtration<T>) -> Result<Vec<(i32, Vec<T>)>> {
    let (lo, hi) = f.range();
    let mut out = Vec::new();
    let mut cur = Subspace::zero(f.ambient_dim());
    for p in (lo..=hi).rev() {
        let s = f.get(p);
        for v in s.complement_of(&cur)? {
            out.push((p, v));
        }
        cur = s;
    }
    Ok(out)
}

/// `F^p(V ⊗ W) = Σ_a F^a V ⊗ F^{p−a} W`.
pub fn tensor_filtration<T: Field>(a: &Filtration<T>, b: &Filtration<T>) -> Result<Filtration<T>> {
    let (ba, bb) = (adapted_basis(a)?, adapted_basis(b)?);
    let dim = a.ambient_dim() * b.ambient_dim();
    let mut tagged = Vec::new();
    for (p, u) in &ba {
        for (q, v) in &bb {
            let k: Vec<T> = u
                .iter()
                .flat_map(|x| v.iter().map(move |y| x.clone() * y.clone()))
                .collect();
            tagged.push((p + q, k));
        }
    }
    let lo = tagged.iter().map(|t| t.0).min().unwrap_or(0);
    let hi = tagged.iter().map(|t| t.0).max().unwrap_or(0);
    let mut steps = Vec::new();
    for p in lo..=hi + 1 {
        let vs: Vec<Vec<T>> = tagged.iter().filter(|t| t.0 >= p).map(|t| t.1.clone()).collect();
        let s = if vs.is_empty() {
            Subspace::zero(dim)
        } else {
            Subspace::span(dim, &vs)?
        };
        steps.push((p, s));
    }
    Filtration::decreasing(dim, steps)
}

/// `Z^d`-grading by joint eigenvalues of the `Y_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrading {
    grading: Grading<Rational>,
}

impl WeightGrading {
    pub fn grading(&self) -> &Grading<Rational> {
        &self.grading
    }

    /// `W^j_w = ⊕_{ℓ_1+…+ℓ_j ≤ w} V^ℓ`.
    pub fn filtration(&self, j: usize) -> Filtration<Rational> {
        self.grading.partial_sum_filtration(j)
    }

    /// Multiplication by `Π_j c_j^{ℓ_j}` on `V^ℓ`.
    pub fn scaling<T: Field>(&self, c: &[T]) -> Matrix<T> {
        self.grading.map_field(T::from_rational).operator(|l| {
            l.iter().zip(c).fold(T::one(), |acc, (&lj, cj)| {
                let p = if lj >= 0 {
                    pow(cj, lj as u32)
                } else {
                    pow(&cj.inv().expect("nonzero scale"), (-lj) as u32)
                };
                acc * p
            })
        })
    }
}

fn pow<T: Field>(x: &T, k: u32) -> T {
    (0..k).fold(T::one(), |acc, _| acc * x.clone())
}

/// `exp(Σ z_j ĥ_j) F` at an exact point. No purity is required: at real
/// points the result is a flag but not a Hodge filtration.
pub fn sl2_orbit_eval(rep: &Sl2Rep, z: &[GaussRat]) -> Result<Filtration<GaussRat>> {
    Ok(rep.f.transform(&rep.translation(z)?))
}

pub fn sl2_orbit_eval_float(rep: &Sl2Rep, z: &[Complex64]) -> Result<Filtration<Cf64>> {
    let zf: Vec<Cf64> = z.iter().map(|&c| Cf64(c)).collect();
    Ok(rep.f.promote::<Cf64>().transform(&rep.translation(&zf)?))
}

fn rational_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer().sqrt(), x.denom().sqrt());
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Rational::new(n, d))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingCheck {
    pub y: Vec<f64>,
    /// Decided in exact arithmetic (every `y_j` a rational square).
    pub exact: bool,
    /// Largest principal sine between corresponding steps; zero when exact.
    pub deviation: f64,
    pub passed: bool,
}

/// Compares `Φ(iy)` with `exp(−Σ log(y_j) Y_j / 2) F♯`.
pub fn check_imaginary_scaling(rep: &Sl2Rep, y: &[Rational]) -> Result<ScalingCheck> {
    if y.len() != rep.factors() || y.iter().any(|v| !v.is_positive()) {
        return Err(Error::Dimension("need one positive height per factor".into()));
    }
    let yf: Vec<f64> = y.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let grading = rep.weight_grading()?;
    let roots: Option<Vec<Rational>> = y.iter().map(rational_sqrt).collect();
    if let Some(roots) = roots {
        let z: Vec<GaussRat> = y
            .iter()
            .map(|v| GaussRat::new(Rational::from_i64(0), v.clone()))
            .collect();
        let direct = sl2_orbit_eval(rep, &z)?;
        let inv: Vec<GaussRat> = roots.iter().map(|r| GaussRat::from_rational(&r.recip())).collect();
        let scaled = rep.f_sharp()?.transform(&grading.scaling(&inv));
        let passed = direct == scaled;
        return Ok(ScalingCheck {
            y: yf,
            exact: true,
            deviation: if passed { 0.0 } else { 1.0 },
            passed,
        });
    }
    let z: Vec<Complex64> = yf.iter().map(|&v| Complex64::new(0.0, v)).collect();
    let direct = sl2_orbit_eval_float(rep, &z)?;
    let inv: Vec<Cf64> = yf.iter().map(|&v| Cf64::new(v.sqrt().recip(), 0.0)).collect();
    let sharp = rep.f_sharp()?.promote::<Cf64>();
    let scaled = sharp.transform(&grading.scaling(&inv));
    let metric = Matrix::<Cf64>::identity(rep.rank());
    let (lo, hi) = direct.range();
    let mut deviation: f64 = 0.0;
    for p in lo..=hi {
        let (a, b) = (direct.get(p), scaled.get(p));
        if a.dim() != b.dim() {
            deviation = 1.0;
            break;
        }
        if a.is_zero() || a.is_full() {
            continue;
        }
        deviation = deviation.max(max_principal_sine(&a, &b, &metric)?);
    }
    Ok(ScalingCheck {
        y: yf,
        exact: false,
        deviation,
        passed: deviation <= float_tolerance(),
    })
}

/// Centred weight filtrations `W(ĥ_1 + … + ĥ_j)`.
pub fn partial_weight_filtrations(rep: &Sl2Rep) -> Result<Vec<Filtration<Rational>>> {
    let n = rep.rank();
    let mut sum = Matrix::zeros(n, n);
    let mut out = Vec::new();
    for t in &rep.triples {
        sum = &sum + &t.lowering;
        out.push(weight_filtration(&sum)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormPoint {
    pub t: f64,
    pub tau: Vec<f64>,
    pub vector: usize,
    pub hodge_norm_sq: f64,
    pub graded_sum: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormBand {
    /// Largest `τ_1` included.
    pub tau_max: f64,
    /// Smallest `c` with every ratio in `[1/c, c]`.
    pub c: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormAsymptoticsReport {
    pub x0: Vec<f64>,
    pub points: Vec<NormPoint>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Band constant over each prefix of the grid.
    pub bands: Vec<NormBand>,
}

impl NormAsymptoticsReport {
    /// Band constant of the longest prefix with `τ_1 ≤ tau_max`.
    pub fn band_at(&self, tau_max: f64) -> Option<f64> {
        self.bands
            .iter()
            .rfind(|b| b.tau_max <= tau_max * (1.0 + 1e-12))
            .map(|b| b.c)
    }

    /// Relative change of the band constant between two depths.
    pub fn variation(&self, shallow: f64, deep: f64) -> Option<f64> {
        let (a, b) = (self.band_at(shallow)?, self.band_at(deep)?);
        Some((b - a).abs() / a)
    }

    pub fn stable(&self, shallow: f64, deep: f64, tol: f64) -> bool {
        self.variation(shallow, deep).is_some_and(|v| v < tol)
    }
}

/// Compares `‖a‖²` at `Φ(x0 + i y)` with `Σ_ℓ τ^ℓ |a^ℓ|²` along the grid
/// `τ_j = t^{d−j+1}`, `y_i = Σ_{j ≥ i} τ_j`, for a rational grading `A`
/// splitting the `W(ĥ_1 + … + ĥ_j)` and compatible with `Q`, with `|·|`
/// the Hodge norm at `F♯`.
pub fn norm_asymptotics_check(
    rep: &Sl2Rep,
    vectors: &[Vec<Rational>],
    x0: &[f64],
    grid: &[f64],
    exec: Execution,
) -> Result<NormAsymptoticsReport> {
    let d = rep.factors();
    check_ray(d, x0, grid)?;
    if vectors.iter().any(|v| v.len() != rep.rank()) {
        return Err(Error::Dimension("vector length differs from the rank".into()));
    }
    let ws = partial_weight_filtrations(rep)?;
    let split = splitting_grading(&ws)?;
    let a = polarization_compatible_grading(&split, rep.lattice.form())?.map_field(Cf64::from_rational);
    let projectors = a.projectors();
    let sharp = rep.f_sharp()?.promote::<Cf64>();
    let sharp_metric = hodge_metric(rep.lattice.form(), &sharp, rep.weight())?;
    let vs: Vec<Vec<Cf64>> = vectors
        .iter()
        .map(|v| v.iter().map(Cf64::from_rational).collect())
        .collect();
    // |a^ℓ|² per vector and piece
    let pieces: Vec<Vec<(Vec<i32>, f64)>> = vs
        .iter()
        .map(|v| {
            projectors
                .iter()
                .map(|(l, p)| {
                    let c = p.apply(v);
                    (l.clone(), hermitian(&sharp_metric, &c, &c).0.re)
                })
                .collect()
        })
        .collect();
    let per_t: Vec<Result<Vec<NormPoint>>> = exec.map(grid, |&t| {
        let (tau, z) = ray_point(x0, t);
        let f = sl2_orbit_eval_float(rep, &z)?;
        let metric = hodge_metric(rep.lattice.form(), &f, rep.weight())?;
        let mut out = Vec::new();
        for (k, v) in vs.iter().enumerate() {
            if v.iter().all(|c| c.0.norm() == 0.0) {
                continue;
            }
            let lhs = hermitian(&metric, v, v).0.re;
            let rhs: f64 = pieces[k]
                .iter()
                .map(|(l, n2)| l.iter().zip(&tau).map(|(&lj, tj)| tj.powi(lj)).product::<f64>() * n2)
                .sum();
            if !(rhs > 0.0) || !(lhs > 0.0) {
                return Err(Error::Underflow(format!("nonpositive norm at t = {t}")));
            }
            out.push(NormPoint {
                t,
                tau: tau.clone(),
                vector: k,
                hodge_norm_sq: lhs,
                graded_sum: rhs,
                ratio: lhs / rhs,
            });
        }
        Ok(out)
    });
    let groups: Vec<Vec<NormPoint>> = per_t.into_iter().collect::<Result<_>>()?;
    let mut bands = Vec::new();
    let mut c: f64 = 1.0;
    for g in &groups {
        for p in g {
            c = c.max(p.ratio).max(1.0 / p.ratio);
        }
        if let Some(p) = g.first() {
            bands.push(NormBand { tau_max: p.tau[0], c });
        }
    }
    let points: Vec<NormPoint> = groups.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(Error::ZeroVector);
    }
    let min_ratio = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(NormAsymptoticsReport {
        x0: x0.to_vec(),
        points,
        min_ratio,
        max_ratio,
        bands,
    })
}

fn check_ray(d: usize, x0: &[f64], grid: &[f64]) -> Result<()> {
    if x0.len() != d {
        return Err(Error::Dimension(format!("{} real parts for {} factors", x0.len(), d)));
    }
    if grid.is_empty() || grid.iter().any(|&t| !(t > 1.0) || !t.is_finite()) {
        return Err(Error::Regime("grid values must be finite and greater than 1".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Regime("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `τ_j = t^{d−j+1}` and `z_i = x0_i + i Σ_{j ≥ i} τ_j`.
fn ray_point(x0: &[f64], t: f64) -> (Vec<f64>, Vec<Complex64>) {
    let d = x0.len();
    let tau: Vec<f64> = (0..d).map(|j| t.powi((d - j) as i32)).collect();
    let z = (0..d).map(|i| Complex64::new(x0[i], tau[i..].iter().sum())).collect();
    (tau, z)
}

#[derive(Clone, Debug, Serialize)]
pub struct GradedNormPoint {
    pub t: f64,
    pub tau1: f64,
    pub norm_sq: f64,
    pub graded_norm_sq: f64,
    /// `‖v¹‖² / ‖v‖²`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradedNormReport {
    /// Smallest `ℓ_1` with `v ∈ W¹_{ℓ_1}`.
    pub level: i32,
    pub x0: Vec<f64>,
    pub points: Vec<GradedNormPoint>,
    /// Slope of `log(‖v¹‖²/‖v‖²)` against `log τ_1`.
    pub slope: f64,
    /// Prefix maxima of `ratio · τ_1^{ℓ_1/2}`.
    pub half_exponent_bands: Vec<NormBand>,
    /// Prefix maxima of `ratio · τ_1^{ℓ_1}`.
    pub full_exponent_bands: Vec<NormBand>,
}

fn band_variation(bands: &[NormBand], shallow: f64, deep: f64) -> Option<f64> {
    let at = |m: f64| bands.iter().rfind(|b| b.tau_max <= m * (1.0 + 1e-12)).map(|b| b.c);
    let (a, b) = (at(shallow)?, at(deep)?);
    Some((b - a).abs() / a)
}

impl GradedNormReport {
    /// Relative growth of `sup ratio · τ_1^{ℓ_1/2}` between two depths.
    pub fn half_exponent_variation(&self, shallow: f64, deep: f64) -> Option<f64> {
        band_variation(&self.half_exponent_bands, shallow, deep)
    }

    /// Relative growth of `sup ratio · τ_1^{ℓ_1}` between two depths.
    pub fn full_exponent_variation(&self, shallow: f64, deep: f64) -> Option<f64> {
        band_variation(&self.full_exponent_bands, shallow, deep)
    }
}

/// Compares the Hodge norm of `v ∈ W¹_ℓ` at `Φ(x0 + i y)` with that of its
/// image `v¹ ∈ Gr_ℓ^{W¹}` along the grid of [`norm_asymptotics_check`].
/// `Gr_ℓ^{W¹}` is identified with the `Y_1 = ℓ` eigenspace, whose Hodge
/// structure is read off at `Φ(i, z_2, …, z_d)`.
pub fn graded_norm_check(
    rep: &Sl2Rep,
    v: &[Rational],
    x0: &[f64],
    grid: &[f64],
    exec: Execution,
) -> Result<GradedNormReport> {
    let d = rep.factors();
    check_ray(d, x0, grid)?;
    if v.len() != rep.rank() {
        return Err(Error::Dimension("vector length differs from the rank".into()));
    }
    if v.iter().all(|c| c.is_zero()) {
        return Err(Error::ZeroVector);
    }
    let w1 = partial_weight_filtrations(rep)?.remove(0);
    let (lo, hi) = w1.range();
    let level = (lo..=hi).find(|&l| w1.get(l).contains(v)).unwrap_or(hi);
    let grading = rep.weight_grading()?;
    let projector = grading.grading().map_field(Cf64::from_rational).operator(|l| {
        if l[0] == level {
            Cf64::one()
        } else {
            Cf64::zero()
        }
    });
    let vf: Vec<Cf64> = v.iter().map(Cf64::from_rational).collect();
    let graded = projector.apply(&vf);
    let q = rep.lattice.form();
    let points: Vec<Result<GradedNormPoint>> = exec.map(grid, |&t| {
        let (tau, z) = ray_point(x0, t);
        let metric = hodge_metric(q, &sl2_orbit_eval_float(rep, &z)?, rep.weight())?;
        let mut z1 = z.clone();
        z1[0] = Complex64::new(0.0, 1.0);
        let graded_metric = hodge_metric(q, &sl2_orbit_eval_float(rep, &z1)?, rep.weight())?;
        let norm_sq = hermitian(&metric, &vf, &vf).0.re;
        let graded_norm_sq = hermitian(&graded_metric, &graded, &graded).0.re;
        if !(norm_sq > 0.0) {
            return Err(Error::Underflow(format!("nonpositive norm at t = {t}")));
        }
        Ok(GradedNormPoint {
            t,
            tau1: tau[0],
            norm_sq,
            graded_norm_sq,
            ratio: graded_norm_sq / norm_sq,
        })
    });
    let points: Vec<GradedNormPoint> = points.into_iter().collect::<Result<_>>()?;
    let bands = |e: f64| {
        let mut c: f64 = 0.0;
        points
            .iter()
            .map(|p| {
                c = c.max(p.ratio * p.tau1.powf(e));
                NormBand { tau_max: p.tau1, c }
            })
            .collect::<Vec<_>>()
    };
    let positive: Vec<&GradedNormPoint> = points.iter().filter(|p| p.ratio > 0.0).collect();
    let slope = if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|p| p.tau1.ln()).collect();
        let ys: Vec<f64> = positive.iter().map(|p| p.ratio.ln()).collect();
        linear_fit(&xs, &ys).0
    } else {
        f64::NAN
    };
    Ok(GradedNormReport {
        level,
        x0: x0.to_vec(),
        half_exponent_bands: bands(level as f64 / 2.0),
        full_exponent_bands: bands(level as f64),
        points,
        slope,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub weight: i32,
    /// Real points of `⋂_j W^j_0 ∩ F♯^{w/2}`, as rational basis rows.
    pub intersection: Vec<Vec<String>>,
    /// Joint kernel of all generators.
    pub invariants: Vec<Vec<String>>,
    pub contained: bool,
    pub equal: bool,
}

fn rows_as_strings(s: &Subspace<Rational>) -> Vec<Vec<String>> {
    s.basis_vectors()
        .iter()
        .map(|v| v.iter().map(|x| x.to_string()).collect())
        .collect()
}

/// Checks that real classes of Hodge type `(w/2, w/2)` at `F♯` lying in
/// every `W(ĥ_1 + … + ĥ_j)_0` are killed by the whole `sl(2)^d` action.
/// Odd weights carry no such classes.
pub fn invariance_check(rep: &Sl2Rep) -> Result<InvarianceReport> {
    let n = rep.rank();
    let w = rep.weight();
    let intersection = if w % 2 != 0 {
        Subspace::zero(n)
    } else {
        let sharp = rep.f_sharp()?;
        let mut steps: Vec<Subspace<GaussRat>> = partial_weight_filtrations(rep)?
            .iter()
            .map(|wj| wj.get(0).promote::<GaussRat>())
            .collect();
        steps.push(sharp.get(w / 2));
        let refs: Vec<&Subspace<GaussRat>> = steps.iter().collect();
        let x = intersect_all(n, &refs)?;
        let real = x.intersect(&x.conjugate())?;
        let basis = real
            .rational_basis()
            .ok_or_else(|| Error::Verification("conjugation-stable subspace without a rational basis".into()))?;
        Subspace::row_space(&basis)
    };
    let rows: Vec<Vec<Rational>> = rep
        .triples
        .iter()
        .flat_map(|t| t.generators().into_iter().flat_map(|g| g.row_vecs()))
        .collect();
    let invariants = if rows.is_empty() {
        Subspace::full(n)
    } else {
        let k = Matrix::from_rows(rows, n)?.kernel();
        if k.is_empty() {
            Subspace::zero(n)
        } else {
            Subspace::span(n, &k)?
        }
    };
    let contained = invariants.contains_subspace(&intersection);
    Ok(InvarianceReport {
        weight: w,
        intersection: rows_as_strings(&intersection),
        invariants: rows_as_strings(&invariants),
        contained,
        equal: contained && intersection.dim() == invariants.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gi, rat};

    fn spectrum(rep: &Sl2Rep) -> Vec<(Vec<i32>, usize)> {
        rep.weight_grading()
            .unwrap()
            .grading()
            .pieces()
            .iter()
            .map(|(l, s)| (l.clone(), s.dim()))
            .collect()
    }

    fn graded_report(rep: &Sl2Rep, level: i32, x0: &[f64]) -> GradedNormReport {
        let w1 = partial_weight_filtrations(rep).unwrap().remove(0);
        let v = w1
            .get(level)
            .basis_vectors()
            .into_iter()
            .find(|b| !w1.get(level - 1).contains(b))
            .unwrap();
        let grid: Vec<f64> = (1..=8).map(|k| 2f64.powi(k)).collect();
        graded_norm_check(rep, &v, x0, &grid, Execution::Sequential).unwrap()
    }

    #[test]
    fn graded_norm_ratio_decays_like_the_full_exponent() {
        let e = Sl2Rep::elliptic();
        for level in [-1, 1] {
            let r = graded_report(&e, level, &[0.3]);
            assert_eq!(r.level, level);
            assert!((r.slope + level as f64).abs() < 0.05, "slope {}", r.slope);
            assert!(r.full_exponent_variation(16.0, 256.0).unwrap() < 0.05);
        }
        let top = graded_report(&e, 1, &[0.3]);
        assert!(top.half_exponent_variation(16.0, 256.0).unwrap() < 0.05);
        // below the centre the half-exponent bound is not uniform
        let bottom = graded_report(&e, -1, &[0.3]);
        assert!(bottom.half_exponent_variation(16.0, 256.0).unwrap() > 1.0);
    }

    #[test]
    fn elliptic_model_map() {
        let e = Sl2Rep::elliptic();
        let at_i = sl2_orbit_eval(&e, &[gi(0, 1)]).unwrap();
        assert!(at_i.get(1).contains(&[gi(1, 0), gi(0, 1)]));
        // monodromy: Φ(z + 1) = exp(ĥ) Φ(z)
        let shifted = sl2_orbit_eval(&e, &[gi(1, 1)]).unwrap();
        let moved = at_i.transform(&e.translation(&[gi(1, 0)]).unwrap());
        assert_eq!(shifted, moved);
        let at_4i = sl2_orbit_eval(&e, &[gi(0, 4)]).unwrap();
        assert!(at_4i.get(1).contains(&[gi(1, 0), gi(0, 4)]));
        let check = check_imaginary_scaling(&e, &[rat(4, 1)]).unwrap();
        assert!(check.exact && check.passed);
        assert_eq!(e.f_sharp().unwrap(), at_i);
    }

    #[test]
    fn real_points_are_not_pure() {
        let e = Sl2Rep::elliptic();
        let f = sl2_orbit_eval(&e, &[gi(3, 0)]).unwrap();
        assert!(f.get(1).contains(&[gi(1, 0), gi(3, 0)]));
        assert!(crate::hodge::purity_check(&f, 1).is_err());
    }

    #[test]
    fn symmetric_powers() {
        let e = Sl2Rep::elliptic();
        let s1 = e.sym_power(1).unwrap();
        assert_eq!(s1.lattice().form(), e.lattice().form());
        assert_eq!(s1.triples(), e.triples());
        let s2 = e.sym_power(2).unwrap();
        assert_eq!(spectrum(&s2), vec![(vec![-2], 1), (vec![0], 1), (vec![2], 1)]);
        let h = &s2.triples()[0].lowering;
        assert!(!(h * h).is_zero() && (&(h * h) * h).is_zero());
        assert_eq!(s2.weight(), 2);
        // symmetrized tensors e1e1, e1e2 + e2e1, e2e2
        assert_eq!(s2.lattice().form(), &ints(&[&[0, 0, 1], &[0, -2, 0], &[1, 0, 0]]));
        for n in 3..=4 {
            let s = e.sym_power(n).unwrap();
            assert_eq!(s.rank(), n + 1);
            s.to_orbit().unwrap();
        }
    }

    #[test]
    fn tensor_spectra() {
        let e = Sl2Rep::elliptic();
        let t = e.tensor(&e).unwrap();
        assert_eq!(spectrum(&t), vec![(vec![-2], 1), (vec![0], 2), (vec![2], 1)]);
        let x = e.external_tensor(&e).unwrap();
        assert_eq!(x.factors(), 2);
        assert_eq!(x.weight(), 2);
        for (i, t) in x.triples().iter().enumerate() {
            for (j, u) in x.triples().iter().enumerate() {
                if j < i {
                    assert!(t.lowering.commutator(&u.grading).is_zero());
                }
            }
        }
        x.to_orbit().unwrap();
    }

    #[test]
    fn dual_and_twists() {
        let e = Sl2Rep::elliptic();
        let d = e.dual().unwrap();
        assert_eq!(d.weight(), -1);
        d.to_orbit().unwrap();
        let end = e.tensor(&d).unwrap();
        assert_eq!(end.weight(), 0);
        end.to_orbit().unwrap();
        let s2 = e.sym_power(2).unwrap();
        let t = s2.tate_twist(1).unwrap();
        assert_eq!(t.weight(), 0);
        assert_eq!(t.filtration().get(0), s2.filtration().get(1));
        let h = Sl2Rep::elliptic_point(1);
        let tw = e.twist(h.lattice().clone(), h.filtration().clone()).unwrap();
        assert_eq!(tw.weight(), 2);
        tw.to_orbit().unwrap();
    }

    #[test]
    fn scaling_identity_exact_and_float() {
        let e = Sl2Rep::elliptic();
        let x = e.external_tensor(&e.sym_power(2).unwrap()).unwrap();
        assert!(check_imaginary_scaling(&x, &[rat(9, 4), rat(16, 1)]).unwrap().exact);
        assert!(check_imaginary_scaling(&x, &[rat(9, 4), rat(16, 1)]).unwrap().passed);
        let f = check_imaginary_scaling(&x, &[rat(3, 1), rat(7, 2)]).unwrap();
        assert!(!f.exact && f.passed, "{f:?}");
    }

    #[test]
    fn sym2_lowest_vector_norm() {
        // ‖e2²‖² at iy scales as y^{-2}
        let s2 = Sl2Rep::elliptic().sym_power(2).unwrap();
        let v = [Cf64::new(0.0, 0.0), Cf64::new(0.0, 0.0), Cf64::new(1.0, 0.0)];
        let norm = |y: f64| {
            let f = sl2_orbit_eval_float(&s2, &[Complex64::new(0.0, y)]).unwrap();
            let m = hodge_metric(s2.lattice().form(), &f, 2).unwrap();
            hermitian(&m, &v, &v).0.re
        };
        let (a, b) = (norm(3.0), norm(12.0));
        assert!((a / b - 16.0).abs() < 1e-9);
    }

    #[test]
    fn elliptic_norm_band() {
        let e = Sl2Rep::elliptic();
        let r = norm_asymptotics_check(
            &e,
            &[vec![rat(0, 1), rat(1, 1)]],
            &[0.0],
            &[2.0, 4.0, 16.0],
            Execution::Sequential,
        )
        .unwrap();
        for p in &r.points {
            assert!((p.ratio - 1.0).abs() < 1e-12);
        }
        let r2 = norm_asymptotics_check(
            &e,
            &[vec![rat(1, 1), rat(1, 1)]],
            &[0.0],
            &[4.0, 16.0, 64.0, 256.0],
            Execution::Parallel,
        )
        .unwrap();
        assert!(r2.max_ratio / r2.min_ratio < 4.0);
        assert!(matches!(
            norm_asymptotics_check(
                &e,
                &[vec![rat(1, 1), rat(0, 1)]],
                &[0.0],
                &[4.0, 2.0],
                Execution::Sequential
            ),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn invariance_examples() {
        let t = Sl2Rep::trivial(1);
        let r = invariance_check(&t).unwrap();
        assert!(r.equal);
        let e = Sl2Rep::elliptic();
        let r = invariance_check(&e).unwrap();
        assert!(r.intersection.is_empty() && r.contained);
        let end = e.tensor(&e.dual().unwrap()).unwrap();
        let r = invariance_check(&end).unwrap();
        assert!(r.equal);
        assert_eq!(r.intersection.len(), 1);
        // identity endomorphism in the basis e_a ⊗ e_b^*
        assert_eq!(r.intersection[0], vec!["1", "0", "0", "1"]);
    }

    #[test]
    fn broken_relations_are_rejected() {
        let e = Sl2Rep::elliptic();
        let mut triple = e.triples()[0].clone();
        triple.grading = triple.grading.scale(&rat(2, 1));
        assert!(Sl2Rep::new(e.lattice().clone(), vec![triple], e.filtration().clone()).is_err());
    }
}
