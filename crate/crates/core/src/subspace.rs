//! Subspaces of `T^n` in canonical (reduced row echelon) form.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::{vec_is_zero, Matrix};
use crate::scalar::{Field, FieldTag, Promote, Rational};

/// A subspace of `T^n`, stored by its reduced row echelon basis.
///
/// Two subspaces are equal iff their echelon bases agree (entrywise within
/// tolerance for floats).
#[derive(Clone)]
pub struct Subspace<T> {
    ambient: usize,
    basis: Matrix<T>,
    pivots: Vec<usize>,
}

impl<T: Field> PartialEq for Subspace<T> {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.pivots == other.pivots && self.basis.approx_eq(&other.basis)
    }
}

impl<T: Field> fmt::Debug for Subspace<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .row_vecs()
            .iter()
            .map(|r| format!("({})", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "span[{}; n={}]", rows.join(", "), self.ambient)
    }
}

impl<T: Field> Subspace<T> {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::zeros(0, ambient),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::identity(ambient),
            pivots: (0..ambient).collect(),
        }
    }

    /// Span of the given vectors.
    pub fn span(ambient: usize, vectors: &[Vec<T>]) -> Result<Self> {
        let m = Matrix::from_rows(vectors.to_vec(), ambient)?;
        Ok(Self::row_space(&m))
    }

    /// Span of the rows of `m`.
    pub fn row_space(m: &Matrix<T>) -> Self {
        let (r, pivots) = m.rref();
        let k = pivots.len();
        let basis = Matrix::from_fn(k, m.cols(), |i, j| r.get(i, j).clone());
        Subspace {
            ambient: m.cols(),
            basis,
            pivots,
        }
    }

    /// Span of the columns of `m`.
    pub fn column_space(m: &Matrix<T>) -> Self {
        Self::row_space(&m.transpose())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_zero(&self) -> bool {
        self.pivots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<T>> {
        self.basis.row_vecs()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::Dimension(format!(
                "subspaces of T^{} and T^{}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }

    pub fn contains(&self, v: &[T]) -> bool {
        assert_eq!(v.len(), self.ambient);
        if vec_is_zero(v) {
            return true;
        }
        self.coordinates(v).is_some()
    }

    /// Coefficients `c` with `v = Σ c_i b_i` in the echelon basis.
    pub fn coordinates(&self, v: &[T]) -> Option<Vec<T>> {
        let c: Vec<T> = self.pivots.iter().map(|&p| v[p].clone()).collect();
        let mut residual = v.to_vec();
        for (k, ck) in c.iter().enumerate() {
            for (j, r) in residual.iter_mut().enumerate() {
                let b = self.basis.get(k, j);
                if !b.is_exact_zero() {
                    *r = r.clone() - ck.clone() * b.clone();
                }
            }
        }
        let tol_ok = if T::EXACT {
            vec_is_zero(&residual)
        } else {
            let scale = v.iter().map(|x| x.magnitude()).fold(1.0, f64::max);
            residual
                .iter()
                .all(|x| x.magnitude() <= crate::scalar::float_tolerance() * scale)
        };
        tol_ok.then_some(c)
    }

    pub fn contains_subspace(&self, other: &Self) -> bool {
        other.basis.row_vecs().iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut rows = self.basis.row_vecs();
        rows.extend(other.basis.row_vecs());
        Subspace::span(self.ambient, &rows)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Subspace::zero(self.ambient));
        }
        if self.is_full() {
            return Ok(other.clone());
        }
        if other.is_full() {
            return Ok(self.clone());
        }
        let a = self.dim();
        let mut rows = self.basis.row_vecs();
        rows.extend(other.basis.row_vecs());
        let stacked = Matrix::from_rows(rows, self.ambient)?;
        let relations = stacked.transpose().kernel();
        let vectors: Vec<Vec<T>> = relations
            .iter()
            .map(|c| {
                let mut v = vec![T::zero(); self.ambient];
                for (i, ci) in c.iter().take(a).enumerate() {
                    if ci.is_exact_zero() {
                        continue;
                    }
                    for (j, vj) in v.iter_mut().enumerate() {
                        *vj = vj.clone() + ci.clone() * self.basis.get(i, j).clone();
                    }
                }
                v
            })
            .collect();
        Subspace::span(self.ambient, &vectors)
    }

    /// Entrywise complex conjugate, re-echelonized.
    pub fn conjugate(&self) -> Self {
        Self::row_space(&self.basis.conj())
    }

    /// Whether the subspace is defined over the real (rational) structure.
    pub fn is_real(&self) -> bool {
        *self == self.conjugate()
    }

    /// Image under the linear map `m` (acting on column vectors).
    pub fn image(&self, m: &Matrix<T>) -> Self {
        let rows: Vec<Vec<T>> = self.basis.row_vecs().iter().map(|v| m.apply(v)).collect();
        Subspace::span(m.rows(), &rows).expect("image rows have the codomain length")
    }

    /// `{x ∈ self : m x ∈ target}`.
    pub fn preimage(&self, m: &Matrix<T>, target: &Self) -> Self {
        // x = c·B; m x ∈ target  ⇔  ann(target) · m · Bᵀ c = 0
        let ann = target.annihilator();
        if ann.is_empty() {
            return self.clone();
        }
        let ann_m = Matrix::from_rows(ann, target.ambient).expect("annihilator rows");
        let restricted = &(&ann_m * m) * &self.basis.transpose();
        let coeffs = restricted.kernel();
        let vectors: Vec<Vec<T>> = coeffs.iter().map(|c| self.combine(c)).collect();
        Subspace::span(self.ambient, &vectors).expect("preimage vectors")
    }

    /// Kernel of `m` restricted to this subspace.
    pub fn kernel_of(&self, m: &Matrix<T>) -> Self {
        self.preimage(m, &Subspace::zero(m.rows()))
    }

    /// `Σ c_i b_i` over the echelon basis.
    pub fn combine(&self, c: &[T]) -> Vec<T> {
        let mut v = vec![T::zero(); self.ambient];
        for (i, ci) in c.iter().enumerate() {
            if ci.is_exact_zero() {
                continue;
            }
            for (j, vj) in v.iter_mut().enumerate() {
                *vj = vj.clone() + ci.clone() * self.basis.get(i, j).clone();
            }
        }
        v
    }

    /// Basis of `{f : f·x = 0 for all x in self}` under the bilinear pairing.
    pub fn annihilator(&self) -> Vec<Vec<T>> {
        if self.is_zero() {
            return (0..self.ambient)
                .map(|k| crate::matrix::unit_vector(self.ambient, k))
                .collect();
        }
        self.basis.kernel()
    }

    /// Vectors extending a basis of `sub` to a basis of `self`.
    ///
    /// Candidates are taken in order from this subspace's echelon basis, so a
    /// subspace with a rational echelon basis yields a rational complement.
    pub fn complement_of(&self, sub: &Self) -> Result<Vec<Vec<T>>> {
        self.check_compatible(sub)?;
        if !self.contains_subspace(sub) {
            return Err(Error::Dimension("complement of a non-subspace".into()));
        }
        let mut acc = sub.clone();
        let mut out = Vec::new();
        for v in self.basis.row_vecs() {
            if acc.dim() == self.dim() {
                break;
            }
            if !acc.contains(&v) {
                acc = acc.sum(&Subspace::span(self.ambient, std::slice::from_ref(&v))?)?;
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn map_field<U: Field>(&self, f: impl Fn(&T) -> U) -> Subspace<U> {
        Subspace::row_space(&self.basis.map(f))
    }

    pub fn promote<U: Field>(&self) -> Subspace<U>
    where
        T: Promote<U>,
    {
        self.map_field(|x| x.promote())
    }

    /// The rational echelon basis, if every basis entry is rational.
    pub fn rational_basis(&self) -> Option<Matrix<Rational>> {
        let rows: Option<Vec<Vec<Rational>>> = self
            .basis
            .row_vecs()
            .iter()
            .map(|r| r.iter().map(|x| x.to_rational()).collect())
            .collect();
        rows.and_then(|rows| Matrix::from_rows(rows, self.ambient).ok())
    }
}

/// Result of [`conjugate_subspace`]: the conjugate and whether conjugation
/// was trivial because the field is `Q`.
#[derive(Clone, Debug)]
pub struct Conjugated<T: Field> {
    pub subspace: Subspace<T>,
    pub trivial_field: bool,
}

pub fn conjugate_subspace<T: Field>(s: &Subspace<T>) -> Conjugated<T> {
    if T::TAG == FieldTag::Rational {
        return Conjugated {
            subspace: s.clone(),
            trivial_field: true,
        };
    }
    Conjugated {
        subspace: s.conjugate(),
        trivial_field: false,
    }
}

pub fn subspace_intersect<T: Field>(a: &Subspace<T>, b: &Subspace<T>) -> Result<Subspace<T>> {
    a.intersect(b)
}

pub fn subspace_sum<T: Field>(a: &Subspace<T>, b: &Subspace<T>) -> Result<Subspace<T>> {
    a.sum(b)
}

/// Intersection of several subspaces of the same ambient space.
pub fn intersect_all<T: Field>(ambient: usize, spaces: &[&Subspace<T>]) -> Result<Subspace<T>> {
    spaces
        .iter()
        .try_fold(Subspace::full(ambient), |acc, s| acc.intersect(s))
}

/// Sum of several subspaces of the same ambient space.
pub fn sum_all<T: Field>(ambient: usize, spaces: &[&Subspace<T>]) -> Result<Subspace<T>> {
    spaces.iter().try_fold(Subspace::zero(ambient), |acc, s| acc.sum(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unit_vector;
    use crate::scalar::{gi, rat, GaussRat};

    fn e(n: usize, k: usize) -> Vec<Rational> {
        unit_vector(n, k)
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let a = Subspace::span(3, &[e(3, 0), e(3, 1)]).unwrap();
        let b = Subspace::span(3, &[e(3, 1), e(3, 2)]).unwrap();
        assert_eq!(a.intersect(&b).unwrap(), Subspace::span(3, &[e(3, 1)]).unwrap());
        let l = Subspace::span(3, &[e(3, 0)]).unwrap();
        assert_eq!(l.intersect(&l).unwrap(), l);
    }

    #[test]
    fn sum_basics() {
        let l = Subspace::span(2, &[e(2, 0)]).unwrap();
        assert_eq!(l.sum(&Subspace::zero(2)).unwrap(), l);
        let m = Subspace::span(2, &[e(2, 1)]).unwrap();
        assert!(l.sum(&m).unwrap().is_full());
        assert!(l.sum(&Subspace::zero(3)).is_err());
    }

    #[test]
    fn conjugate_line() {
        let s = Subspace::span(2, &[vec![gi(1, 0), gi(0, 1)]]).unwrap();
        let c = conjugate_subspace(&s);
        assert!(!c.trivial_field);
        assert_eq!(c.subspace, Subspace::span(2, &[vec![gi(1, 0), gi(0, -1)]]).unwrap());
        let real = Subspace::span(2, &[vec![gi(2, 0), gi(3, 0)]]).unwrap();
        assert_eq!(real.conjugate(), real);
        let q = Subspace::span(2, &[e(2, 0)]).unwrap();
        assert!(conjugate_subspace(&q).trivial_field);
    }

    #[test]
    fn preimage_and_kernel() {
        // N e1 = e2
        let n = Matrix::from_rows(vec![vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(0, 1)]], 2).unwrap();
        let full: Subspace<Rational> = Subspace::full(2);
        assert_eq!(full.kernel_of(&n), Subspace::span(2, &[e(2, 1)]).unwrap());
        let target = Subspace::span(2, &[e(2, 1)]).unwrap();
        assert!(full.preimage(&n, &target).is_full());
    }

    #[test]
    fn complement_is_rational_for_rational_spaces() {
        let w: Subspace<GaussRat> = Subspace::full(3);
        let u = Subspace::span(3, &[vec![gi(1, 0), gi(1, 0), gi(0, 0)]]).unwrap();
        let c = w.complement_of(&u).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().flatten().all(|x| x.is_real()));
    }
}
