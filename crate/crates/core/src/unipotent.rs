//! Exponential of nilpotent matrices and logarithm of unipotent ones, as
//! finite sums.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Field, Rational};

fn require_square<T: Field>(m: &Matrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix is not square",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Number of series terms needed for a nilpotent `m`, or `None`.
///
/// Exact fields use the exact nilpotency order. For floats `m^n` is compared
/// with `‖m‖^n` so that tiny but genuinely nonzero entries survive.
fn series_length<T: Field>(m: &Matrix<T>) -> Option<usize> {
    if T::EXACT {
        return m.nilpotency_order();
    }
    let n = m.rows();
    let norm = m.entries().iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Some(0);
    }
    let top = m.pow(n as u32);
    let residual = top.entries().iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    let scale = norm.powi(n as i32) * (n as f64).powi(n as i32);
    (residual <= crate::scalar::float_tolerance() * scale).then_some(n)
}

/// `Σ_k N^k / k!`, exact for exact fields.
pub fn exp_nilpotent<T: Field>(n: &Matrix<T>) -> Result<Matrix<T>> {
    require_square(n)?;
    let order = series_length(n).ok_or(Error::NotNilpotent)?;
    let mut out = Matrix::identity(n.rows());
    let mut term = Matrix::identity(n.rows());
    for k in 1..order {
        let c = T::from_rational(&Rational::new(1.into(), (k as i64).into()));
        term = (&term * n).scale(&c);
        out = &out + &term;
    }
    Ok(out)
}

/// `Σ_{k≥1} (−1)^{k+1} (M − I)^k / k`.
pub fn log_unipotent<T: Field>(m: &Matrix<T>) -> Result<Matrix<T>> {
    require_square(m)?;
    let e = m - &Matrix::identity(m.rows());
    let order = series_length(&e).ok_or(Error::NotUnipotent)?;
    let mut out = Matrix::zeros(m.rows(), m.rows());
    let mut power = Matrix::identity(m.rows());
    for k in 1..order {
        power = &power * &e;
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let c = T::from_rational(&Rational::new(sign.into(), (k as i64).into()));
        out = &out + &power.scale(&c);
    }
    Ok(out)
}

/// `exp(t · log g)` for unipotent `g`.
pub fn unipotent_power<T: Field>(g: &Matrix<T>, t: &Rational) -> Result<Matrix<T>> {
    let log = log_unipotent(g)?;
    exp_nilpotent(&log.scale(&T::from_rational(t)))
}

/// The unipotent square root `exp(½ log g)`.
pub fn unipotent_sqrt<T: Field>(g: &Matrix<T>) -> Result<Matrix<T>> {
    unipotent_power(g, &Rational::new(1.into(), 2.into()))
}

pub fn is_unipotent<T: Field>(m: &Matrix<T>) -> bool {
    m.is_square() && (m - &Matrix::identity(m.rows())).is_nilpotent()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        let n = rows[0].len();
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, 1)).collect()).collect(), n).unwrap()
    }

    #[test]
    fn exp_of_zero_and_jordan() {
        assert_eq!(
            exp_nilpotent(&Matrix::<Rational>::zeros(3, 3)).unwrap(),
            Matrix::identity(3)
        );
        let n = q(&[&[0, 0], &[1, 0]]);
        assert_eq!(exp_nilpotent(&n).unwrap(), q(&[&[1, 0], &[1, 1]]));
        let n3 = q(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0]]);
        let e = exp_nilpotent(&n3).unwrap();
        assert_eq!(*e.get(2, 0), rat(1, 2));
    }

    #[test]
    fn log_inverts_exp() {
        let m = q(&[&[1, 0, 0], &[3, 1, 0], &[-2, 5, 1]]);
        let l = log_unipotent(&m).unwrap();
        assert_eq!(exp_nilpotent(&l).unwrap(), m);
        assert!(log_unipotent(&Matrix::<Rational>::identity(3)).unwrap().is_zero());
    }

    #[test]
    fn square_root() {
        let g = q(&[&[1, 0], &[1, 1]]);
        let h = unipotent_sqrt(&g).unwrap();
        assert_eq!(*h.get(1, 0), rat(1, 2));
        assert_eq!(&h * &h, g);
    }

    #[test]
    fn float_exponential_keeps_tiny_entries() {
        use crate::scalar::Cf64;
        let n = Matrix::from_rows(
            vec![
                vec![Cf64::new(0.0, 0.0), Cf64::new(0.0, 0.0)],
                vec![Cf64::new(1e-20, 0.0), Cf64::new(0.0, 0.0)],
            ],
            2,
        )
        .unwrap();
        let e = exp_nilpotent(&n).unwrap();
        assert_eq!(e.get(1, 0).0.re, 1e-20);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            exp_nilpotent(&q(&[&[1, 0], &[0, 0]])),
            Err(Error::NotNilpotent)
        ));
        assert!(matches!(
            log_unipotent(&q(&[&[2, 0], &[0, 1]])),
            Err(Error::NotUnipotent)
        ));
    }
}
