//! Dense matrices over a [`Field`], acting on column vectors.

use std::any::Any;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{float_tolerance, Field, Promote, Rational};

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<T: Field> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Build from row vectors; `cols` is needed for the empty case.
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self> {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for (k, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {k} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Matrix {
            rows: nrows,
            cols,
            data,
        })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>], rows: usize) -> Result<Self> {
        Ok(Matrix::from_rows(cols.to_vec(), rows)?.transpose())
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let n = entries.len();
        Matrix::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn promote<U: Field>(&self) -> Matrix<U>
    where
        T: Promote<U>,
    {
        self.map(|x| x.promote())
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn conj_transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| c.clone() * x.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.approx_eq(b))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if let (Some(a), Some(b)) = (
            (self as &dyn Any).downcast_ref::<Matrix<Rational>>(),
            (other as &dyn Any).downcast_ref::<Matrix<Rational>>(),
        ) {
            let product: Box<dyn Any> = Box::new(rational_product(a, b));
            return Ok(*product.downcast::<Matrix<T>>().expect("same type"));
        }
        let mut out = Matrix::<T>::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_exact_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_exact_zero() {
                        continue;
                    }
                    let v = out.get(i, j).clone() + a.clone() * b.clone();
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// `M v` for a column vector `v`.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        if let Some(a) = (self as &dyn Any).downcast_ref::<Matrix<Rational>>() {
            let col = Matrix {
                rows: v.len(),
                cols: 1,
                data: v.to_vec(),
            };
            let col: &dyn Any = &col;
            let product: Box<dyn Any> = Box::new(rational_product(a, col.downcast_ref().expect("same type")).data);
            return *product.downcast::<Vec<T>>().expect("same type");
        }
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_exact_zero() && !b.is_exact_zero())
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn pow(&self, k: u32) -> Self {
        assert!(self.is_square());
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Matrix::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self.get(i / r2, j / c2).clone() * other.get(i % r2, j % c2).clone()
        })
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self.get(i, i).clone())
    }

    /// Reduced row echelon form and pivot columns.
    ///
    /// Exact fields pivot on the first nonzero entry; floats use partial
    /// pivoting and treat entries below `tol · max|a_ij|` as zero.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        if let Some(a) = (self as &dyn Any).downcast_ref::<Matrix<Rational>>() {
            let (m, pivots) = rational_rref(a);
            let m: Box<dyn Any> = Box::new(m);
            return (*m.downcast::<Matrix<T>>().expect("same type"), pivots);
        }
        let mut m = self.clone();
        let scale = if T::EXACT {
            0.0
        } else {
            self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
        };
        let negligible = |x: &T| {
            if T::EXACT {
                x.is_zero()
            } else {
                x.magnitude() <= float_tolerance() * scale
            }
        };
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let candidate = if T::EXACT {
                (r..m.rows).find(|&i| !negligible(m.get(i, c)))
            } else {
                (r..m.rows)
                    .filter(|&i| !negligible(m.get(i, c)))
                    .max_by(|&a, &b| m.get(a, c).magnitude().total_cmp(&m.get(b, c).magnitude()))
            };
            let Some(p) = candidate else {
                for i in r..m.rows {
                    m.set(i, c, T::zero());
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).inv().expect("pivot is nonzero");
            for j in c..m.cols {
                let v = m.get(r, j).clone() * inv.clone();
                m.set(r, j, v);
            }
            m.set(r, c, T::one());
            let support: Vec<usize> = (c + 1..m.cols).filter(|&j| !m.get(r, j).is_exact_zero()).collect();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() && T::EXACT {
                    continue;
                }
                for &j in &support {
                    let v = m.get(i, j).clone() - f.clone() * m.get(r, j).clone();
                    m.set(i, j, v);
                }
                m.set(i, c, T::zero());
            }
            pivots.push(c);
            r += 1;
        }
        if !T::EXACT {
            for x in m.data.iter_mut() {
                if x.magnitude() <= float_tolerance() * scale.max(1.0) * 1e-3 {
                    *x = T::zero();
                }
            }
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space `{x : M x = 0}`.
    pub fn kernel(&self) -> Vec<Vec<T>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![T::zero(); self.cols];
                x[f] = T::one();
                for (k, &p) in pivots.iter().enumerate() {
                    x[p] = -r.get(k, f).clone();
                }
                x
            })
            .collect()
    }

    /// Some solution of `M x = b`, if one exists.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.rows);
        let aug = Matrix::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![T::zero(); self.cols];
        for (k, &p) in pivots.iter().enumerate() {
            x[p] = r.get(k, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                T::one()
            } else {
                T::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || (n > 0 && pivots[n - 1] != n - 1) {
            return Err(Error::Singular);
        }
        Ok(Matrix::from_fn(n, n, |i, j| r.get(i, n + j).clone()))
    }

    /// Determinant by Gaussian elimination.
    pub fn determinant(&self) -> T {
        assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = T::one();
        for c in 0..n {
            let p = if T::EXACT {
                (c..n).find(|&i| !m.get(i, c).is_zero())
            } else {
                (c..n).max_by(|&a, &b| m.get(a, c).magnitude().total_cmp(&m.get(b, c).magnitude()))
            };
            let Some(p) = p else { return T::zero() };
            if m.get(p, c).magnitude() == 0.0 {
                return T::zero();
            }
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let pivot = m.get(c, c).clone();
            det = det * pivot.clone();
            let inv = pivot.inv().expect("nonzero pivot");
            for i in c + 1..n {
                let f = m.get(i, c).clone() * inv.clone();
                if f.is_zero() && T::EXACT {
                    continue;
                }
                for j in c..n {
                    let v = m.get(i, j).clone() - f.clone() * m.get(c, j).clone();
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    /// Smallest `k` with `M^k = 0`, if `M` is nilpotent.
    pub fn nilpotency_order(&self) -> Option<usize> {
        if !self.is_square() {
            return None;
        }
        let mut p = Matrix::identity(self.rows);
        for k in 0..=self.rows {
            if p.is_zero() {
                return Some(k);
            }
            p = &p * self;
        }
        None
    }

    pub fn is_nilpotent(&self) -> bool {
        self.nilpotency_order().is_some()
    }

    /// Leading principal minors `det M[..k, ..k]` for `k = 1..=n`.
    pub fn leading_minors(&self) -> Vec<T> {
        (1..=self.rows)
            .map(|k| Matrix::from_fn(k, k, |i, j| self.get(i, j).clone()).determinant())
            .collect()
    }
}

/// Product over Q with one reduction per entry: rows of `a` and columns of
/// `b` are scaled to integers first.
fn rational_product(a: &Matrix<Rational>, b: &Matrix<Rational>) -> Matrix<Rational> {
    let lcm_of = |xs: &mut dyn Iterator<Item = &Rational>| xs.fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let row_den: Vec<BigInt> = (0..a.rows).map(|i| lcm_of(&mut a.row(i).iter())).collect();
    let col_den: Vec<BigInt> = (0..b.cols)
        .map(|j| lcm_of(&mut (0..b.rows).map(|k| b.get(k, j))))
        .collect();
    let scaled = |x: &Rational, d: &BigInt| x.numer() * (d / x.denom());
    let ai: Vec<BigInt> = (0..a.rows * a.cols)
        .map(|k| scaled(&a.data[k], &row_den[k / a.cols]))
        .collect();
    let bi: Vec<BigInt> = (0..b.rows * b.cols)
        .map(|k| scaled(&b.data[k], &col_den[k % b.cols]))
        .collect();
    Matrix::from_fn(a.rows, b.cols, |i, j| {
        let mut acc = BigInt::zero();
        for k in 0..a.cols {
            let x = &ai[i * a.cols + k];
            let y = &bi[k * b.cols + j];
            if !x.is_zero() && !y.is_zero() {
                acc += x * y;
            }
        }
        Rational::new(acc, &row_den[i] * &col_den[j])
    })
}

/// Gauss-Jordan over Z on denominator-cleared rows, dividing each row by
/// its content after every step; pivots are normalized at the end.
fn rational_rref(a: &Matrix<Rational>) -> (Matrix<Rational>, Vec<usize>) {
    let (rows, cols) = (a.rows, a.cols);
    let mut m: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let d = a.row(i).iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            a.row(i).iter().map(|x| x.numer() * (&d / x.denom())).collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let support: Vec<usize> = (c..cols).filter(|&j| !m[r][j].is_zero()).collect();
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let g = m[r][c].gcd(&m[i][c]);
            let (s, t) = (&m[r][c] / &g, &m[i][c] / &g);
            if !s.is_one() {
                for x in m[i].iter_mut() {
                    *x *= &s;
                }
            }
            for &j in &support {
                let d = &t * &m[r][j];
                m[i][j] -= d;
            }
            let content = m[i].iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !content.is_zero() && !content.is_one() {
                for x in m[i].iter_mut() {
                    *x /= &content;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in m.into_iter().enumerate() {
        match pivots.get(i) {
            Some(&c) => {
                let lead = row[c].clone();
                data.extend(row.into_iter().map(|x| Rational::new(x, lead.clone())));
            }
            None => data.extend((0..cols).map(|_| <Rational as Field>::zero())),
        }
    }
    (Matrix { rows, cols, data }, pivots)
}

impl<T: Field> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, other: &Matrix<T>) -> Matrix<T> {
        self.checked_mul(other).expect("matrix product dimensions")
    }
}

impl<T: Field> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, other: &Matrix<T>) -> Matrix<T> {
        self.checked_add(other).expect("matrix sum dimensions")
    }
}

impl<T: Field> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, other: &Matrix<T>) -> Matrix<T> {
        self.checked_sub(other).expect("matrix difference dimensions")
    }
}

impl<T: Field> Neg for &Matrix<T> {
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        self.map(|x| -x.clone())
    }
}

pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn vec_add<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn vec_sub<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn vec_scale<T: Field>(c: &T, a: &[T]) -> Vec<T> {
    a.iter().map(|x| c.clone() * x.clone()).collect()
}

pub fn vec_is_zero<T: Field>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_zero())
}

pub fn vec_conj<T: Field>(a: &[T]) -> Vec<T> {
    a.iter().map(|x| x.conj()).collect()
}

pub fn unit_vector<T: Field>(n: usize, k: usize) -> Vec<T> {
    (0..n).map(|i| if i == k { T::one() } else { T::zero() }).collect()
}

/// `x^T B y` (no conjugation).
pub fn bilinear<T: Field>(form: &Matrix<T>, x: &[T], y: &[T]) -> T {
    dot(x, &form.apply(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gi, rat, GaussRat, Rational};

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect(),
            cols,
        )
        .unwrap()
    }

    #[test]
    fn product_and_inverse() {
        let a = q(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(&a * &inv, Matrix::identity(2));
        assert!(q(&[&[1, 2], &[2, 4]]).inverse().is_err());
        assert!(a.checked_mul(&q(&[&[1, 2, 3]])).is_err());
    }

    #[test]
    fn kernel_and_solve() {
        let a = q(&[&[1, 2, 3], &[2, 4, 6]]);
        let ker = a.kernel();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(vec_is_zero(&a.apply(v)));
        }
        let x = a.solve(&[rat(1, 1), rat(2, 1)]).unwrap();
        assert_eq!(a.apply(&x), vec![rat(1, 1), rat(2, 1)]);
        assert!(a.solve(&[rat(1, 1), rat(0, 1)]).is_none());
    }

    #[test]
    fn determinant_over_gaussian() {
        let m = Matrix::from_rows(vec![vec![gi(1, 1), gi(0, 0)], vec![gi(2, 0), gi(1, -1)]], 2).unwrap();
        assert_eq!(m.determinant(), gi(2, 0));
        let id: Matrix<GaussRat> = Matrix::identity(3);
        assert_eq!(id.determinant(), gi(1, 0));
    }

    #[test]
    fn nilpotency_order_of_jordan_block() {
        let n = q(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0]]);
        assert_eq!(n.nilpotency_order(), Some(3));
        assert_eq!(q(&[&[1, 0], &[0, 0]]).nilpotency_order(), None);
    }
}
