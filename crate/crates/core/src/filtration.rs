//! Increasing and decreasing filtrations, and `Z^d`-gradings.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Field, Promote};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `W_k ⊂ W_{k+1}`; zero below the stored range, everything above it.
    Increasing,
    /// `F^p ⊃ F^{p+1}`; everything below the stored range, zero above it.
    Decreasing,
}

/// A finite filtration of `T^n`.
///
/// Stored as a contiguous run of steps `lo..=hi`; outside that run the
/// filtration is `0` or the whole space according to its direction. The
/// representation is trimmed, so structural equality is equality of
/// filtrations.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration<T: Field> {
    direction: Direction,
    ambient: usize,
    lo: i32,
    steps: Vec<Subspace<T>>,
}

impl<T: Field> Filtration<T> {
    /// Build from a sparse map of steps. Missing indices inherit the step at
    /// which the filtration last jumped (the nearest stored index below for
    /// increasing filtrations, above for decreasing ones).
    pub fn from_map(direction: Direction, ambient: usize, map: BTreeMap<i32, Subspace<T>>) -> Result<Self> {
        for s in map.values() {
            if s.ambient_dim() != ambient {
                return Err(Error::InvalidFiltration(format!(
                    "step in T^{} for a filtration of T^{ambient}",
                    s.ambient_dim()
                )));
            }
        }
        let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
            return Ok(Filtration::trivial(direction, ambient, 0));
        };
        let steps = (lo..=hi)
            .map(|k| match direction {
                Direction::Increasing => map.range(..=k).next_back().expect("lo is stored").1.clone(),
                Direction::Decreasing => map.range(k..).next().expect("hi is stored").1.clone(),
            })
            .collect();
        let f = Filtration {
            direction,
            ambient,
            lo,
            steps,
        };
        f.check_nested()?;
        Ok(f.trimmed())
    }

    pub fn increasing(ambient: usize, steps: Vec<(i32, Subspace<T>)>) -> Result<Self> {
        Self::from_map(Direction::Increasing, ambient, steps.into_iter().collect())
    }

    pub fn decreasing(ambient: usize, steps: Vec<(i32, Subspace<T>)>) -> Result<Self> {
        Self::from_map(Direction::Decreasing, ambient, steps.into_iter().collect())
    }

    /// A single jump at `at`: `W_k = V` for `k ≥ at`, or `F^p = V` for `p ≤ at`.
    pub fn trivial(direction: Direction, ambient: usize, at: i32) -> Self {
        Filtration {
            direction,
            ambient,
            lo: at,
            steps: vec![Subspace::full(ambient)],
        }
        .trimmed()
    }

    fn check_nested(&self) -> Result<()> {
        for (k, pair) in self.steps.windows(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            let ok = match self.direction {
                Direction::Increasing => b.contains_subspace(a),
                Direction::Decreasing => a.contains_subspace(b),
            };
            if !ok {
                return Err(Error::InvalidFiltration(format!(
                    "steps {} and {} are not nested",
                    self.lo + k as i32,
                    self.lo + k as i32 + 1
                )));
            }
        }
        Ok(())
    }

    fn outside_low(&self) -> Subspace<T> {
        match self.direction {
            Direction::Increasing => Subspace::zero(self.ambient),
            Direction::Decreasing => Subspace::full(self.ambient),
        }
    }

    fn outside_high(&self) -> Subspace<T> {
        match self.direction {
            Direction::Increasing => Subspace::full(self.ambient),
            Direction::Decreasing => Subspace::zero(self.ambient),
        }
    }

    fn trimmed(mut self) -> Self {
        let low = self.outside_low();
        let high = self.outside_high();
        while self.steps.last() == Some(&high) {
            self.steps.pop();
        }
        let lead = self.steps.iter().take_while(|s| **s == low).count();
        self.steps.drain(..lead);
        self.lo += lead as i32;
        self
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// The step at index `k`.
    pub fn get(&self, k: i32) -> Subspace<T> {
        if k < self.lo {
            self.outside_low()
        } else if k >= self.lo + self.steps.len() as i32 {
            self.outside_high()
        } else {
            self.steps[(k - self.lo) as usize].clone()
        }
    }

    /// Indices `lo..=hi` spanning every jump: outside the range the step is
    /// constantly `0` or `V`.
    pub fn range(&self) -> (i32, i32) {
        (self.lo - 1, self.lo + self.steps.len() as i32)
    }

    /// Indices `k` where `Gr_k` is nonzero.
    pub fn jumps(&self) -> Vec<i32> {
        let (lo, hi) = self.range();
        (lo..=hi).filter(|&k| self.graded_dim(k) > 0).collect()
    }

    /// `dim Gr_k`: `W_k / W_{k-1}` or `F^p / F^{p+1}`.
    pub fn graded_dim(&self, k: i32) -> usize {
        match self.direction {
            Direction::Increasing => self.get(k).dim() - self.get(k - 1).dim(),
            Direction::Decreasing => self.get(k).dim() - self.get(k + 1).dim(),
        }
    }

    /// `W[m]_k = W_{k+m}` (or `F[m]^p = F^{p+m}`).
    pub fn shift(&self, m: i32) -> Self {
        Filtration {
            lo: self.lo - m,
            ..self.clone()
        }
    }

    pub fn map_steps(&self, f: impl Fn(&Subspace<T>) -> Subspace<T>) -> Self {
        Filtration {
            steps: self.steps.iter().map(f).collect(),
            ..self.clone()
        }
        .trimmed()
    }

    /// Image under an invertible linear map.
    pub fn transform(&self, g: &Matrix<T>) -> Self {
        self.map_steps(|s| s.image(g))
    }

    pub fn conjugate(&self) -> Self {
        self.map_steps(|s| s.conjugate())
    }

    pub fn is_real(&self) -> bool {
        self.steps.iter().all(|s| s.is_real())
    }

    pub fn map_field<U: Field>(&self, f: impl Fn(&T) -> U + Copy) -> Filtration<U> {
        Filtration {
            direction: self.direction,
            ambient: self.ambient,
            lo: self.lo,
            steps: self.steps.iter().map(|s| s.map_field(f)).collect(),
        }
    }

    pub fn promote<U: Field>(&self) -> Filtration<U>
    where
        T: Promote<U>,
    {
        self.map_field(|x| x.promote())
    }

    /// Stored steps as `(index, subspace)` pairs covering `range()`.
    pub fn steps(&self) -> Vec<(i32, Subspace<T>)> {
        let (lo, hi) = self.range();
        (lo..=hi).map(|k| (k, self.get(k))).collect()
    }

    /// Whether `m` maps every step into the step `shift` below/above.
    /// For increasing filtrations: `m W_k ⊂ W_{k+shift}`.
    pub fn maps_into(&self, m: &Matrix<T>, shift: i32) -> bool {
        let (lo, hi) = self.range();
        (lo - 1..=hi + 1).all(|k| self.get(k + shift).contains_subspace(&self.get(k).image(m)))
    }

    /// Check that two filtrations have the same flag type (same direction,
    /// ambient and step dimensions).
    pub fn same_type(&self, other: &Self) -> bool {
        if self.direction != other.direction || self.ambient != other.ambient {
            return false;
        }
        let (a, b) = self.range();
        let (c, d) = other.range();
        (a.min(c)..=b.max(d)).all(|k| self.get(k).dim() == other.get(k).dim())
    }
}

/// A `Z^d`-grading of `T^n`: independent pieces summing to the whole space.
#[derive(Clone, Debug, PartialEq)]
pub struct Grading<T: Field> {
    ambient: usize,
    index_dim: usize,
    pieces: BTreeMap<Vec<i32>, Subspace<T>>,
}

impl<T: Field> Grading<T> {
    pub fn new(ambient: usize, index_dim: usize, pieces: BTreeMap<Vec<i32>, Subspace<T>>) -> Result<Self> {
        let pieces: BTreeMap<_, _> = pieces.into_iter().filter(|(_, s)| !s.is_zero()).collect();
        let mut total = 0;
        let mut sum = Subspace::zero(ambient);
        for (idx, s) in &pieces {
            if idx.len() != index_dim {
                return Err(Error::InvalidGrading(format!(
                    "index {idx:?} has length != {index_dim}"
                )));
            }
            if s.ambient_dim() != ambient {
                return Err(Error::InvalidGrading("piece in the wrong ambient space".into()));
            }
            total += s.dim();
            sum = sum.sum(s)?;
        }
        if total != ambient || !sum.is_full() {
            return Err(Error::InvalidGrading(format!(
                "pieces have total dimension {total} and span dimension {} in T^{ambient}",
                sum.dim()
            )));
        }
        Ok(Grading {
            ambient,
            index_dim,
            pieces,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn index_dim(&self) -> usize {
        self.index_dim
    }

    pub fn pieces(&self) -> &BTreeMap<Vec<i32>, Subspace<T>> {
        &self.pieces
    }

    pub fn piece(&self, idx: &[i32]) -> Subspace<T> {
        self.pieces
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Subspace::zero(self.ambient))
    }

    pub fn indices(&self) -> Vec<Vec<i32>> {
        self.pieces.keys().cloned().collect()
    }

    /// Matrix whose columns are the concatenated piece bases, in index order.
    fn adapted_basis(&self) -> Matrix<T> {
        let cols: Vec<Vec<T>> = self.pieces.values().flat_map(|s| s.basis_vectors()).collect();
        Matrix::from_columns(&cols, self.ambient).expect("piece bases")
    }

    /// The components of `v` in each piece (zero components omitted).
    pub fn decompose(&self, v: &[T]) -> BTreeMap<Vec<i32>, Vec<T>> {
        let p = self.adapted_basis();
        let c = p.solve(v).expect("a grading spans the ambient space");
        let mut out = BTreeMap::new();
        let mut offset = 0;
        for (idx, s) in &self.pieces {
            let k = s.dim();
            let comp = s.combine(&c[offset..offset + k]);
            offset += k;
            if !crate::matrix::vec_is_zero(&comp) {
                out.insert(idx.clone(), comp);
            }
        }
        out
    }

    /// The operator acting by `f(ℓ)` on the piece `ℓ`.
    pub fn operator(&self, f: impl Fn(&[i32]) -> T) -> Matrix<T> {
        let p = self.adapted_basis();
        let diag: Vec<T> = self
            .pieces
            .iter()
            .flat_map(|(idx, s)| std::iter::repeat_n(f(idx), s.dim()))
            .collect();
        let pinv = p.inverse().expect("adapted basis is invertible");
        &(&p * &Matrix::diagonal(&diag)) * &pinv
    }

    /// All projectors `π_ℓ`, from one inversion of the adapted basis.
    pub fn projectors(&self) -> BTreeMap<Vec<i32>, Matrix<T>> {
        let p = self.adapted_basis();
        let pinv = p.inverse().expect("adapted basis is invertible");
        let mut out = BTreeMap::new();
        let mut offset = 0;
        for (idx, s) in &self.pieces {
            let k = s.dim();
            let left = Matrix::from_fn(self.ambient, k, |i, j| p.get(i, offset + j).clone());
            let right = Matrix::from_fn(k, self.ambient, |i, j| pinv.get(offset + i, j).clone());
            out.insert(idx.clone(), &left * &right);
            offset += k;
        }
        out
    }

    /// Projection onto the piece `idx` along the others.
    pub fn projector(&self, idx: &[i32]) -> Matrix<T> {
        self.operator(|l| if l == idx { T::one() } else { T::zero() })
    }

    /// Image of every piece under an invertible map.
    pub fn transform(&self, g: &Matrix<T>) -> Result<Self> {
        let pieces = self.pieces.iter().map(|(k, s)| (k.clone(), s.image(g))).collect();
        Grading::new(self.ambient, self.index_dim, pieces)
    }

    /// `⊕ A^ℓ` over indices satisfying `pred`.
    pub fn sum_where(&self, pred: impl Fn(&[i32]) -> bool) -> Subspace<T> {
        let rows: Vec<Vec<T>> = self
            .pieces
            .iter()
            .filter(|(k, _)| pred(k))
            .flat_map(|(_, s)| s.basis_vectors())
            .collect();
        Subspace::span(self.ambient, &rows).expect("piece vectors")
    }

    /// The increasing filtration `W^j_w = ⊕_{ℓ_1+…+ℓ_j ≤ w} A^ℓ` (`j` is 1-based).
    pub fn partial_sum_filtration(&self, j: usize) -> Filtration<T> {
        let sums: Vec<i32> = self.pieces.keys().map(|l| l[..j].iter().sum()).collect();
        let (lo, hi) = (
            sums.iter().copied().min().unwrap_or(0),
            sums.iter().copied().max().unwrap_or(0),
        );
        let map = (lo..=hi)
            .map(|w| (w, self.sum_where(|l| l[..j].iter().sum::<i32>() <= w)))
            .collect();
        Filtration::from_map(Direction::Increasing, self.ambient, map).expect("nested by construction")
    }

    pub fn map_field<U: Field>(&self, f: impl Fn(&T) -> U + Copy) -> Grading<U> {
        Grading {
            ambient: self.ambient,
            index_dim: self.index_dim,
            pieces: self.pieces.iter().map(|(k, s)| (k.clone(), s.map_field(f))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::unit_vector;
    use crate::scalar::{rat, Rational};

    fn line(n: usize, k: usize) -> Subspace<Rational> {
        Subspace::span(n, &[unit_vector(n, k)]).unwrap()
    }

    #[test]
    fn sparse_steps_fill_gaps() {
        let w = Filtration::increasing(2, vec![(-1, line(2, 1)), (1, Subspace::full(2))]).unwrap();
        assert_eq!(w.get(-2), Subspace::zero(2));
        assert_eq!(w.get(0), line(2, 1));
        assert!(w.get(5).is_full());
        assert_eq!(w.jumps(), vec![-1, 1]);

        let f = Filtration::decreasing(2, vec![(1, line(2, 0))]).unwrap();
        assert!(f.get(0).is_full());
        assert_eq!(f.get(1), line(2, 0));
        assert!(f.get(2).is_zero());
    }

    #[test]
    fn trivial_filtrations_keep_their_jump() {
        let w = Filtration::<Rational>::trivial(Direction::Increasing, 2, 3);
        assert!(w.get(2).is_zero());
        assert!(w.get(3).is_full());
        assert_eq!(w.jumps(), vec![3]);
        let f = Filtration::<Rational>::trivial(Direction::Decreasing, 2, 1);
        assert!(f.get(1).is_full());
        assert!(f.get(2).is_zero());
        assert_eq!(f.jumps(), vec![1]);
    }

    #[test]
    fn rejects_non_nested() {
        let bad = Filtration::increasing(2, vec![(0, line(2, 0)), (1, line(2, 1))]);
        assert!(bad.is_err());
    }

    #[test]
    fn shift_and_equality() {
        let w = Filtration::increasing(2, vec![(-1, line(2, 1)), (1, Subspace::full(2))]).unwrap();
        let s = w.shift(-1);
        assert_eq!(s.get(0), w.get(-1));
        assert_eq!(s.shift(1), w);
        let padded = Filtration::increasing(
            2,
            vec![
                (-5, Subspace::zero(2)),
                (-1, line(2, 1)),
                (1, Subspace::full(2)),
                (4, Subspace::full(2)),
            ],
        )
        .unwrap();
        assert_eq!(padded, w);
    }

    #[test]
    fn grading_decompose_and_filtration() {
        let pieces = [(vec![1], line(2, 0)), (vec![-1], line(2, 1))].into_iter().collect();
        let a = Grading::new(2, 1, pieces).unwrap();
        let parts = a.decompose(&[rat(2, 1), rat(3, 1)]);
        assert_eq!(parts[&vec![1]], vec![rat(2, 1), rat(0, 1)]);
        let w = a.partial_sum_filtration(1);
        assert_eq!(w.get(-1), line(2, 1));
        assert!(w.get(1).is_full());
        let y = a.operator(|l| Rational::from_integer(l[0].into()));
        assert_eq!(y, Matrix::diagonal(&[rat(1, 1), rat(-1, 1)]));
    }

    #[test]
    fn grading_rejects_dependent_pieces() {
        let pieces = [(vec![0], line(2, 0)), (vec![1], line(2, 0))].into_iter().collect();
        assert!(Grading::new(2, 1, pieces).is_err());
    }
}
