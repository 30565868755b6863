//! Pure and mixed Hodge structures: decomposition, Weil operator, Hodge
//! metric, polarization checks, the Deligne bigrading and alignment of
//! nearby mixed Hodge structures.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{Direction, Filtration, Grading};
use crate::matrix::{vec_conj, Matrix};
use crate::scalar::{float_tolerance, Cf64, ComplexField, Field, Rational};
use crate::subspace::Subspace;

/// Integral lattice `Z^n` with a `(−1)^w`-symmetric nondegenerate form.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizedLattice {
    q: Matrix<Rational>,
    weight: i32,
}

pub fn is_integral(m: &Matrix<Rational>) -> bool {
    m.entries().iter().all(|x| x.is_integer())
}

/// `Qᵀ = (−1)^w Q`.
pub fn has_symmetry_type(q: &Matrix<Rational>, weight: i32) -> bool {
    let t = q.transpose();
    if weight.rem_euclid(2) == 0 {
        t == *q
    } else {
        t == -q
    }
}

impl PolarizedLattice {
    pub fn new(q: Matrix<Rational>, weight: i32) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::InvalidLattice("form is not square".into()));
        }
        if !is_integral(&q) {
            return Err(Error::InvalidLattice("form has non-integral entries".into()));
        }
        if !has_symmetry_type(&q, weight) {
            return Err(Error::InvalidLattice(format!("form is not (-1)^{weight}-symmetric")));
        }
        if q.determinant().is_zero() {
            return Err(Error::InvalidLattice("form is degenerate".into()));
        }
        Ok(PolarizedLattice { q, weight })
    }

    pub fn rank(&self) -> usize {
        self.q.rows()
    }

    pub fn weight(&self) -> i32 {
        self.weight
    }

    pub fn form(&self) -> &Matrix<Rational> {
        &self.q
    }
}

/// A lattice with a pure Hodge filtration on its complexification.
#[derive(Clone, Debug)]
pub struct HodgeStructure<T: Field> {
    pub lattice: PolarizedLattice,
    pub f: Filtration<T>,
}

impl<T: ComplexField> HodgeStructure<T> {
    pub fn new(lattice: PolarizedLattice, f: Filtration<T>) -> Result<Self> {
        if f.ambient_dim() != lattice.rank() || f.direction() != Direction::Decreasing {
            return Err(Error::InvalidFiltration(
                "Hodge filtration must be decreasing on the lattice".into(),
            ));
        }
        purity_check(&f, lattice.weight())?;
        Ok(HodgeStructure { lattice, f })
    }

    pub fn weight(&self) -> i32 {
        self.lattice.weight()
    }

    pub fn decomposition(&self) -> Grading<T> {
        hodge_decomposition(&self.f, self.weight()).expect("checked at construction")
    }

    pub fn weil_operator(&self) -> Matrix<T> {
        weil_operator(&self.f, self.weight()).expect("checked at construction")
    }

    /// Gram matrix of `h` in the lattice basis: `h(u, v) = uᵀ G v̄`.
    pub fn gram(&self) -> Matrix<T> {
        hodge_gram(self.lattice.form(), &self.weil_operator())
    }

    pub fn hodge_form(&self, u: &[T], v: &[T]) -> T {
        hermitian(&self.gram(), u, v)
    }

    pub fn polarization_report(&self) -> PolarizationReport {
        check_polarization(self.lattice.form(), &self.f, self.weight(), true)
    }
}

/// Indices `p` where the purity condition has to be tested.
fn purity_range<T: Field>(f: &Filtration<T>, w: i32) -> std::ops::RangeInclusive<i32> {
    let (a, b) = f.range();
    a.min(w + 1 - b)..=b.max(w + 1 - a)
}

/// `F^p ⊕ conj(F^{w+1−p}) = V` for every `p`.
pub fn purity_check<T: ComplexField>(f: &Filtration<T>, w: i32) -> Result<()> {
    let n = f.ambient_dim();
    for p in purity_range(f, w) {
        let fp = f.get(p);
        let conj = f.get(w + 1 - p).conjugate();
        let meet = fp.intersect(&conj)?;
        if fp.dim() + conj.dim() != n || !meet.is_zero() {
            return Err(Error::Purity {
                p,
                dim_fp: fp.dim(),
                dim_conj: conj.dim(),
                dim_meet: meet.dim(),
            });
        }
    }
    Ok(())
}

/// `V^{p,q} = F^p ∩ conj(F^q)` with `p + q = w`, indexed by `[p, q]`.
pub fn hodge_decomposition<T: ComplexField>(f: &Filtration<T>, w: i32) -> Result<Grading<T>> {
    purity_check(f, w)?;
    let n = f.ambient_dim();
    let mut pieces = BTreeMap::new();
    for p in f.jumps() {
        let piece = f.get(p).intersect(&f.get(w - p).conjugate())?;
        pieces.insert(vec![p, w - p], piece);
    }
    Grading::new(n, 2, pieces)
}

/// `i^k`.
pub fn i_power<T: ComplexField>(k: i32) -> T {
    match k.rem_euclid(4) {
        0 => T::one(),
        1 => T::i(),
        2 => -T::one(),
        _ => -T::i(),
    }
}

/// The Weil operator: multiplication by `i^{p−q}` on `V^{p,q}`.
pub fn weil_operator<T: ComplexField>(f: &Filtration<T>, w: i32) -> Result<Matrix<T>> {
    let decomposition = hodge_decomposition(f, w)?;
    Ok(decomposition.operator(|idx| i_power(idx[0] - idx[1])))
}

/// `G = Cᵀ Q`, so that `h(u, v) = Q(Cu, v̄) = uᵀ G v̄`.
pub fn hodge_gram<T: Field>(q: &Matrix<Rational>, c: &Matrix<T>) -> Matrix<T> {
    &c.transpose() * &q.map(T::from_rational)
}

/// `uᵀ G v̄`.
pub fn hermitian<T: Field>(g: &Matrix<T>, u: &[T], v: &[T]) -> T {
    crate::matrix::bilinear(g, u, &vec_conj(v))
}

/// `h(u, v) = Q(Cu, v̄)` for the Hodge structure `(F, w)` polarized by `q`.
pub fn hodge_form<T: ComplexField>(q: &Matrix<Rational>, f: &Filtration<T>, w: i32, u: &[T], v: &[T]) -> Result<T> {
    let c = weil_operator(f, w)?;
    Ok(hermitian(&hodge_gram(q, &c), u, v))
}

/// Whether a scalar is real and strictly positive (exactly, or up to the
/// float tolerance).
pub fn is_positive_real<T: Field>(x: &T) -> bool {
    if T::EXACT {
        x.to_rational().is_some_and(|r| r > Rational::from_integer(0.into()))
    } else {
        let z = x.to_c64();
        z.re > float_tolerance() && z.im.abs() <= float_tolerance() * z.re.abs().max(1.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PolarizationReport {
    pub weight: i32,
    pub pure: bool,
    pub integral: bool,
    pub symmetric: bool,
    pub nondegenerate: bool,
    pub orthogonal: bool,
    pub positive: bool,
    /// `(p, q, dim V^{p,q})`.
    pub hodge_numbers: Vec<(i32, i32, usize)>,
    pub leading_minors: Vec<String>,
    pub failures: Vec<String>,
}

impl PolarizationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check that `q` polarizes the pure Hodge structure `(f, w)`.
///
/// Positivity is decided by Sylvester's criterion on the Gram matrix of the
/// Hodge metric in the given basis.
pub fn check_polarization<T: ComplexField>(
    q: &Matrix<Rational>,
    f: &Filtration<T>,
    w: i32,
    require_integral: bool,
) -> PolarizationReport {
    let mut report = PolarizationReport {
        weight: w,
        pure: false,
        integral: is_integral(q),
        symmetric: q.is_square() && has_symmetry_type(q, w),
        nondegenerate: q.is_square() && !q.determinant().is_zero(),
        orthogonal: false,
        positive: false,
        hodge_numbers: Vec::new(),
        leading_minors: Vec::new(),
        failures: Vec::new(),
    };
    if require_integral && !report.integral {
        report.failures.push("form has non-integral entries".into());
    }
    if !report.symmetric {
        report.failures.push(format!("form is not (-1)^{w}-symmetric"));
    }
    if !report.nondegenerate {
        report.failures.push("form is degenerate".into());
    }
    if !q.is_square() || q.rows() != f.ambient_dim() {
        report
            .failures
            .push("form and filtration have different dimensions".into());
        return report;
    }
    let decomposition = match hodge_decomposition(f, w) {
        Ok(d) => d,
        Err(e) => {
            report.failures.push(e.to_string());
            return report;
        }
    };
    report.pure = true;
    report.hodge_numbers = decomposition
        .pieces()
        .iter()
        .map(|(k, s)| (k[0], k[1], s.dim()))
        .collect();
    let c = decomposition.operator(|idx| i_power(idx[0] - idx[1]));
    let g = hodge_gram(q, &c);

    report.orthogonal = true;
    let pieces: Vec<_> = decomposition.pieces().iter().collect();
    'outer: for (a, (ka, sa)) in pieces.iter().enumerate() {
        for (kb, sb) in pieces.iter().skip(a + 1) {
            for u in sa.basis_vectors() {
                for v in sb.basis_vectors() {
                    if !hermitian(&g, &u, &v).is_zero() {
                        report.orthogonal = false;
                        report
                            .failures
                            .push(format!("V^{:?} and V^{:?} are not orthogonal", ka, kb));
                        break 'outer;
                    }
                }
            }
        }
    }

    let minors = g.leading_minors();
    report.leading_minors = minors.iter().map(|m| m.to_string()).collect();
    report.positive = minors.iter().all(is_positive_real);
    if !report.positive {
        report.failures.push("Hodge metric is not positive definite".into());
    }
    report
}

/// `W_k / W_{k−1}` presented by a complement of `W_{k−1}` in `W_k`.
///
/// When `W` is defined over `Q` the complement is rational, so coordinates
/// commute with complex conjugation.
#[derive(Clone, Debug)]
pub struct GradedPiece<T: Field> {
    pub index: i32,
    pub lift: Vec<Vec<T>>,
    lower_dim: usize,
    adapted: Matrix<T>,
}

impl<T: Field> GradedPiece<T> {
    pub fn new(lower: &Subspace<T>, upper: &Subspace<T>, index: i32) -> Result<Self> {
        let lift = upper.complement_of(lower)?;
        let mut cols = lower.basis_vectors();
        cols.extend(lift.iter().cloned());
        let adapted = Matrix::from_columns(&cols, upper.ambient_dim())?;
        Ok(GradedPiece {
            index,
            lift,
            lower_dim: lower.dim(),
            adapted,
        })
    }

    pub fn of_filtration(w: &Filtration<T>, k: i32) -> Result<Self> {
        Self::new(&w.get(k - 1), &w.get(k), k)
    }

    pub fn dim(&self) -> usize {
        self.lift.len()
    }

    /// Coordinates of the class of `x ∈ W_k` in the graded piece.
    pub fn coordinates(&self, x: &[T]) -> Option<Vec<T>> {
        self.adapted.solve(x).map(|c| c[self.lower_dim..].to_vec())
    }

    /// Image of a subspace of `W_k` in the graded piece.
    pub fn image(&self, s: &Subspace<T>) -> Subspace<T> {
        let rows: Vec<Vec<T>> = s
            .basis_vectors()
            .iter()
            .map(|x| self.coordinates(x).expect("subspace lies in W_k"))
            .collect();
        Subspace::span(self.dim(), &rows).expect("graded coordinates")
    }

    /// The vector `Σ c_i lift_i`.
    pub fn lift_vector(&self, c: &[T]) -> Vec<T> {
        let n = self.adapted.rows();
        let mut v = vec![T::zero(); n];
        for (ci, l) in c.iter().zip(&self.lift) {
            v = crate::matrix::vec_add(&v, &crate::matrix::vec_scale(ci, l));
        }
        v
    }

    /// The filtration induced on the graded piece by `F`.
    pub fn induced(&self, f: &Filtration<T>, upper: &Subspace<T>) -> Result<Filtration<T>> {
        let (a, b) = f.range();
        let mut map = BTreeMap::new();
        for p in a..=b {
            let meet = f.get(p).intersect(upper)?;
            map.insert(p, self.image(&meet));
        }
        Filtration::from_map(f.direction(), self.dim(), map)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GradedCheck {
    pub k: i32,
    pub dim: usize,
    pub pure: bool,
    pub hodge_numbers: Vec<(i32, i32, usize)>,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MhsReport {
    pub w_rational: bool,
    pub graded: Vec<GradedCheck>,
    pub passed: bool,
}

impl MhsReport {
    pub fn first_failure(&self) -> Option<&GradedCheck> {
        self.graded.iter().find(|g| !g.pure)
    }
}

/// Check that `F` induces a pure Hodge structure of weight `k` on every
/// `Gr^W_k`.
pub fn is_mhs<T: ComplexField>(w: &Filtration<T>, f: &Filtration<T>) -> MhsReport {
    let w_rational = w.is_real();
    let mut graded = Vec::new();
    for k in w.jumps() {
        let check = graded_purity(w, f, k);
        graded.push(check);
    }
    let passed = w_rational && graded.iter().all(|g| g.pure);
    MhsReport {
        w_rational,
        graded,
        passed,
    }
}

fn graded_purity<T: ComplexField>(w: &Filtration<T>, f: &Filtration<T>, k: i32) -> GradedCheck {
    let run = || -> Result<Grading<T>> {
        let piece = GradedPiece::of_filtration(w, k)?;
        let induced = piece.induced(f, &w.get(k))?;
        hodge_decomposition(&induced, k)
    };
    let dim = w.graded_dim(k);
    match run() {
        Ok(d) => GradedCheck {
            k,
            dim,
            pure: true,
            hodge_numbers: d.pieces().iter().map(|(i, s)| (i[0], i[1], s.dim())).collect(),
            detail: None,
        },
        Err(e) => GradedCheck {
            k,
            dim,
            pure: false,
            hodge_numbers: Vec::new(),
            detail: Some(e.to_string()),
        },
    }
}

/// The Deligne bigrading `I^{p,q}` of a mixed Hodge structure, with cached
/// projectors.
#[derive(Clone, Debug)]
pub struct Bigrading<T: Field> {
    grading: Grading<T>,
    projectors: BTreeMap<(i32, i32), Matrix<T>>,
}

impl<T: Field> Bigrading<T> {
    pub fn from_grading(grading: Grading<T>) -> Result<Self> {
        if grading.index_dim() != 2 {
            return Err(Error::InvalidGrading("a bigrading is indexed by Z^2".into()));
        }
        let projectors = grading
            .projectors()
            .into_iter()
            .map(|(k, m)| ((k[0], k[1]), m))
            .collect();
        Ok(Bigrading { grading, projectors })
    }

    pub fn grading(&self) -> &Grading<T> {
        &self.grading
    }

    pub fn ambient_dim(&self) -> usize {
        self.grading.ambient_dim()
    }

    pub fn piece(&self, p: i32, q: i32) -> Subspace<T> {
        self.grading.piece(&[p, q])
    }

    pub fn indices(&self) -> Vec<(i32, i32)> {
        self.projectors.keys().copied().collect()
    }

    pub fn projector(&self, p: i32, q: i32) -> Option<&Matrix<T>> {
        self.projectors.get(&(p, q))
    }

    /// The `(a, b)` component `Σ π_{p+a,q+b} X π_{p,q}` of an endomorphism.
    pub fn component(&self, x: &Matrix<T>, a: i32, b: i32) -> Matrix<T> {
        let n = self.ambient_dim();
        let mut out = Matrix::zeros(n, n);
        for (&(p, q), src) in &self.projectors {
            if let Some(dst) = self.projectors.get(&(p + a, q + b)) {
                out = &out + &(&(dst * x) * src);
            }
        }
        out
    }

    /// The part of `X` shifting the first index by `a`: `Σ_b X_{a,b}`.
    pub fn hodge_degree_component(&self, x: &Matrix<T>, a: i32) -> Matrix<T> {
        let n = self.ambient_dim();
        let mut out = Matrix::zeros(n, n);
        for (&(p, _), src) in &self.projectors {
            for (&(p2, _), dst) in &self.projectors {
                if p2 == p + a {
                    out = &out + &(&(dst * x) * src);
                }
            }
        }
        out
    }

    /// Whether `X` is purely of bidegree `(a, b)`.
    pub fn is_of_type(&self, x: &Matrix<T>, a: i32, b: i32) -> bool {
        (&self.component(x, a, b) - x).is_zero()
    }

    /// Whether `X` lies in `⊕_{a<0} g^{a,•}`.
    pub fn is_lowering(&self, x: &Matrix<T>) -> bool {
        let (lo, hi) = self.hodge_span();
        let mut acc = Matrix::zeros(self.ambient_dim(), self.ambient_dim());
        for a in (lo - hi)..0 {
            acc = &acc + &self.hodge_degree_component(x, a);
        }
        (&acc - x).is_zero()
    }

    fn hodge_span(&self) -> (i32, i32) {
        let ps: Vec<i32> = self.projectors.keys().map(|k| k.0).collect();
        (
            ps.iter().copied().min().unwrap_or(0),
            ps.iter().copied().max().unwrap_or(0),
        )
    }

    /// `⊕_{p+q=w} I^{p,q}` split further by `p`: the stratum `C^{w,p} = I^{p,w−p}`.
    pub fn weight_piece(&self, w: i32) -> Subspace<T> {
        self.grading.sum_where(|k| k[0] + k[1] == w)
    }

    /// Check `W_ℓ = ⊕_{p+q≤ℓ} I^{p,q}` and `F^p = ⊕_{a≥p} I^{a,b}`.
    pub fn verify_splitting(&self, w: &Filtration<T>, f: &Filtration<T>) -> Result<()> {
        let (wa, wb) = w.range();
        for l in wa..=wb {
            if self.grading.sum_where(|k| k[0] + k[1] <= l) != w.get(l) {
                return Err(Error::Bigrading(format!("does not split W at index {l}")));
            }
        }
        let (fa, fb) = f.range();
        for p in fa..=fb {
            if self.grading.sum_where(|k| k[0] >= p) != f.get(p) {
                return Err(Error::Bigrading(format!("does not split F at index {p}")));
            }
        }
        Ok(())
    }
}

/// The Deligne splitting
/// `I^{p,q} = F^p ∩ W_{p+q} ∩ (conj(F^q) ∩ W_{p+q} + Σ_{j≥1} conj(F^{q−j}) ∩ W_{p+q−j−1})`,
/// verified against both splitting identities.
pub fn deligne_bigrading<T: ComplexField>(w: &Filtration<T>, f: &Filtration<T>) -> Result<Bigrading<T>> {
    let n = w.ambient_dim();
    let jumps = f.jumps();
    let (wa, wb) = w.range();
    let spread = wb - wa + 2;
    let mut pieces = BTreeMap::new();
    for &p in &jumps {
        for &q in &jumps {
            let wpq = w.get(p + q);
            let left = f.get(p).intersect(&wpq)?;
            if left.is_zero() {
                continue;
            }
            let mut right = f.get(q).conjugate().intersect(&wpq)?;
            for j in 1..=spread {
                let term = f.get(q - j).conjugate().intersect(&w.get(p + q - j - 1))?;
                right = right.sum(&term)?;
            }
            let piece = left.intersect(&right)?;
            if !piece.is_zero() {
                pieces.insert(vec![p, q], piece);
            }
        }
    }
    let grading = Grading::new(n, 2, pieces).map_err(|e| Error::Bigrading(e.to_string()))?;
    let bigrading = Bigrading::from_grading(grading)?;
    bigrading.verify_splitting(w, f)?;
    Ok(bigrading)
}

/// `dim(W_w ∩ F^p)` over the relevant index box.
pub fn intersection_pattern<T: Field>(w: &Filtration<T>, f: &Filtration<T>) -> Result<BTreeMap<(i32, i32), usize>> {
    let (wa, wb) = w.range();
    let (fa, fb) = f.range();
    let mut out = BTreeMap::new();
    for k in wa..=wb {
        let wk = w.get(k);
        for p in fa..=fb {
            out.insert((k, p), wk.intersect(&f.get(p))?.dim());
        }
    }
    Ok(out)
}

/// A linear map `g` with `gW = W` and `gF = F2`.
///
/// Both Deligne bigradings are computed and the echelon basis of each
/// `I^{p,q}(W, F)` is sent to the echelon basis of `I^{p,q}(W, F2)`; for
/// `F2 = F` this is the identity.
pub fn align_mhs<T: ComplexField>(w: &Filtration<T>, f: &Filtration<T>, f2: &Filtration<T>) -> Result<Matrix<T>> {
    let (wa, wb) = w.range();
    let (a1, b1) = f.range();
    let (a2, b2) = f2.range();
    for k in wa..=wb {
        let wk = w.get(k);
        for p in a1.min(a2)..=b1.max(b2) {
            let left = wk.intersect(&f.get(p))?.dim();
            let right = wk.intersect(&f2.get(p))?.dim();
            if left != right {
                return Err(Error::DimensionPattern { w: k, p, left, right });
            }
        }
    }
    let i1 = deligne_bigrading(w, f)?;
    let i2 = deligne_bigrading(w, f2)?;
    let n = w.ambient_dim();
    let mut src = Vec::new();
    let mut dst = Vec::new();
    let keys: std::collections::BTreeSet<(i32, i32)> = i1.indices().into_iter().chain(i2.indices()).collect();
    for (p, q) in keys {
        let s1 = i1.piece(p, q);
        let s2 = i2.piece(p, q);
        if s1.dim() != s2.dim() {
            return Err(Error::Bigrading(format!(
                "I^({p},{q}) has dimension {} for F and {} for F2",
                s1.dim(),
                s2.dim()
            )));
        }
        src.extend(s1.basis_vectors());
        dst.extend(s2.basis_vectors());
    }
    let b1 = Matrix::from_columns(&src, n)?;
    let b2 = Matrix::from_columns(&dst, n)?;
    let g = &b2 * &b1.inverse()?;
    if w.transform(&g) != *w || f.transform(&g) != *f2 {
        return Err(Error::Verification(
            "aligning map does not carry (W, F) to (W, F2)".into(),
        ));
    }
    Ok(g)
}

/// Whether a Hermitian Gram matrix is positive definite (float).
fn metric_is_positive(metric: &Matrix<Cf64>) -> bool {
    let n = metric.rows();
    let scale = metric.entries().iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    if scale == 0.0 {
        return n == 0;
    }
    let normalized = metric.scale(&Cf64::new(1.0 / scale, 0.0));
    normalized.leading_minors().iter().all(|m| m.0.re > 0.0)
}

/// `|v − proj_S v| / |v|` in the Hermitian metric `⟨x, y⟩ = xᵀ G ȳ`.
pub fn angle_sine(v: &[Cf64], s: &Subspace<Cf64>, metric: &Matrix<Cf64>) -> Result<f64> {
    if v.iter().all(|x| x.is_exact_zero()) {
        return Err(Error::ZeroVector);
    }
    if !metric.is_square() || metric.rows() != v.len() || !metric_is_positive(metric) {
        return Err(Error::DegenerateMetric);
    }
    let vv = hermitian(metric, v, v).0.re;
    if vv <= 0.0 {
        return Err(Error::DegenerateMetric);
    }
    let basis = s.basis_vectors();
    if basis.is_empty() {
        return Ok(1.0);
    }
    let k = basis.len();
    // Normal equations: Σ_j c_j ⟨b_j, b_i⟩ = ⟨v, b_i⟩.
    let gram = Matrix::from_fn(k, k, |i, j| hermitian(metric, &basis[j], &basis[i]));
    let rhs: Vec<Cf64> = basis.iter().map(|b| hermitian(metric, v, b)).collect();
    let c = gram.solve(&rhs).ok_or(Error::DegenerateMetric)?;
    let mut residual = v.to_vec();
    for (cj, bj) in c.iter().zip(&basis) {
        residual = crate::matrix::vec_sub(&residual, &crate::matrix::vec_scale(cj, bj));
    }
    let rr = hermitian(metric, &residual, &residual).0.re.max(0.0);
    Ok((rr / vv).sqrt().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unit_vector;
    use crate::scalar::{gi, rat, GaussRat};

    fn qmat(rows: &[&[i64]]) -> Matrix<Rational> {
        let n = rows[0].len();
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect(), n).unwrap()
    }

    fn line(v: Vec<GaussRat>) -> Subspace<GaussRat> {
        Subspace::span(v.len(), &[v]).unwrap()
    }

    fn elliptic(y: i64) -> Filtration<GaussRat> {
        Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, line(vec![gi(1, 0), gi(0, y)]))]).unwrap()
    }

    fn symplectic() -> Matrix<Rational> {
        qmat(&[&[0, 1], &[-1, 0]])
    }

    #[test]
    fn elliptic_decomposition() {
        let d = hodge_decomposition(&elliptic(1), 1).unwrap();
        assert_eq!(d.piece(&[1, 0]), line(vec![gi(1, 0), gi(0, 1)]));
        assert_eq!(d.piece(&[0, 1]), line(vec![gi(1, 0), gi(0, -1)]));
    }

    #[test]
    fn real_line_is_not_pure() {
        let f = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, line(vec![gi(1, 0), gi(0, 0)]))]).unwrap();
        assert!(matches!(hodge_decomposition(&f, 1), Err(Error::Purity { p: 1, .. })));
    }

    #[test]
    fn weil_operator_squares_to_sign() {
        let c = weil_operator(&elliptic(3), 1).unwrap();
        assert_eq!(&c * &c, -&Matrix::identity(2));
        assert_eq!(c.conj(), c);
    }

    #[test]
    fn hodge_metric_values() {
        let f = elliptic(1);
        let u = vec![gi(1, 0), gi(0, 1)];
        assert_eq!(hodge_form(&symplectic(), &f, 1, &u, &u).unwrap(), gi(2, 0));
        for y in [1, 4, 100] {
            let e2 = unit_vector(2, 1);
            let h = hodge_form(&symplectic(), &elliptic(y), 1, &e2, &e2).unwrap();
            assert_eq!(h, GaussRat::real(rat(1, y)));
        }
    }

    #[test]
    fn polarization_reports() {
        assert!(check_polarization(&symplectic(), &elliptic(1), 1, true).passed());
        let neg = check_polarization(&(-&symplectic()), &elliptic(1), 1, true);
        assert!(!neg.positive && neg.symmetric);
        let id = check_polarization(&Matrix::identity(2), &elliptic(1), 1, true);
        assert!(!id.symmetric);
    }

    fn tate() -> (Filtration<GaussRat>, Filtration<GaussRat>) {
        let e2 = line(vec![gi(0, 0), gi(1, 0)]);
        let w = Filtration::increasing(2, vec![(0, e2), (2, Subspace::full(2))]).unwrap();
        let f = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, line(vec![gi(1, 0), gi(0, 0)]))]).unwrap();
        (w, f)
    }

    #[test]
    fn tate_limit_is_mixed() {
        let (w, f) = tate();
        let r = is_mhs(&w, &f);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.graded.len(), 2);
        let bad = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, line(vec![gi(0, 0), gi(1, 0)]))]).unwrap();
        let r = is_mhs(&w, &bad);
        assert!(!r.passed);
        assert_eq!(r.first_failure().unwrap().k, 0);
    }

    #[test]
    fn tate_bigrading() {
        let (w, f) = tate();
        let b = deligne_bigrading(&w, &f).unwrap();
        assert_eq!(b.piece(0, 0), line(vec![gi(0, 0), gi(1, 0)]));
        assert_eq!(b.piece(1, 1).dim(), 1);
        assert!(b.piece(1, 1).contains(&[gi(1, 0), gi(0, 0)]));
        let n = qmat(&[&[0, 0], &[1, 0]]).map(GaussRat::from_rational);
        assert!(b.is_of_type(&n, -1, -1));
    }

    #[test]
    fn pure_bigrading_is_decomposition() {
        let f = elliptic(2);
        let w = Filtration::trivial(Direction::Increasing, 2, 1);
        let b = deligne_bigrading(&w, &f).unwrap();
        let d = hodge_decomposition(&f, 1).unwrap();
        assert_eq!(b.grading(), &d);
    }

    #[test]
    fn align_identity_and_unipotent() {
        let (w, f) = tate();
        assert_eq!(align_mhs(&w, &f, &f).unwrap(), Matrix::identity(2));
        let u = Matrix::from_rows(vec![vec![gi(1, 0), gi(0, 0)], vec![gi(3, 2), gi(1, 0)]], 2).unwrap();
        let f2 = f.transform(&u);
        let g = align_mhs(&w, &f, &f2).unwrap();
        assert_eq!(f.transform(&g), f2);
        let bad = Filtration::decreasing(2, vec![(0, Subspace::full(2)), (1, line(vec![gi(0, 0), gi(1, 0)]))]).unwrap();
        assert!(matches!(align_mhs(&w, &f, &bad), Err(Error::DimensionPattern { .. })));
    }

    #[test]
    fn angle_plane_geometry() {
        let e = |a: f64, b: f64| vec![Cf64::new(a, 0.0), Cf64::new(b, 0.0)];
        let s = Subspace::span(2, &[e(1.0, 0.0)]).unwrap();
        let g = Matrix::identity(2);
        assert_eq!(angle_sine(&e(3.0, 0.0), &s, &g).unwrap(), 0.0);
        assert!((angle_sine(&e(0.0, 2.0), &s, &g).unwrap() - 1.0).abs() < 1e-15);
        let t = angle_sine(&e(1.0, 1.0), &s, &g).unwrap();
        assert!((t - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(matches!(angle_sine(&e(0.0, 0.0), &s, &g), Err(Error::ZeroVector)));
        assert!(matches!(
            angle_sine(&e(1.0, 0.0), &s, &Matrix::zeros(2, 2)),
            Err(Error::DegenerateMetric)
        ));
    }
}
