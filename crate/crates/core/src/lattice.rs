//! Integer lattices inside rational subspaces and exact enumeration of
//! short vectors of a positive definite integral form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par::Execution;
use crate::scalar::{floor_rat, Rational};
use crate::subspace::Subspace;

/// Z-basis of `{x ∈ Z^n : A x = 0}` for an integer matrix given by rows.
pub fn integer_kernel(rows: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    let mut a: Vec<Vec<BigInt>> = rows.to_vec();
    // columns of `u` track the unimodular column operations
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect();
    let mut p = 0;
    for r in 0..a.len() {
        if p == n {
            break;
        }
        loop {
            let best = (p..n)
                .filter(|&j| !a[r][j].is_zero())
                .min_by(|&i, &j| a[r][i].abs().cmp(&a[r][j].abs()));
            let Some(j) = best else { break };
            swap_columns(&mut a, &mut u, p, j);
            let mut clean = true;
            for j in p + 1..n {
                if a[r][j].is_zero() {
                    continue;
                }
                let q = a[r][j].div_floor(&a[r][p]);
                column_axpy(&mut a, &mut u, j, p, &q);
                if !a[r][j].is_zero() {
                    clean = false;
                }
            }
            if clean {
                p += 1;
                break;
            }
        }
    }
    (p..n).map(|j| (0..n).map(|i| u[i][j].clone()).collect()).collect()
}

fn swap_columns(a: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], i: usize, j: usize) {
    if i == j {
        return;
    }
    for row in a.iter_mut().chain(u.iter_mut()) {
        row.swap(i, j);
    }
}

/// `col_j −= q · col_p`.
fn column_axpy(a: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], j: usize, p: usize, q: &BigInt) {
    for row in a.iter_mut().chain(u.iter_mut()) {
        let d = &row[p] * q;
        row[j] -= d;
    }
}

/// Scales a rational vector to a primitive integer vector.
pub fn clear_denominators(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * Rational::from_integer(l.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        ints
    } else {
        ints.into_iter().map(|x| x / &g).collect()
    }
}

/// Z-basis of `U ∩ Z^n` for a rational subspace `U`.
pub fn saturated_basis(u: &Subspace<Rational>) -> Vec<Vec<BigInt>> {
    let n = u.ambient_dim();
    let rows: Vec<Vec<BigInt>> = u.annihilator().iter().map(|r| clear_denominators(r)).collect();
    integer_kernel(&rows, n)
}

/// Gram matrix `B Q Bᵀ` of the rows of `B`.
pub fn gram_matrix(basis: &[Vec<BigInt>], q: &Matrix<Rational>) -> Matrix<Rational> {
    let k = basis.len();
    let rb: Vec<Vec<Rational>> = basis
        .iter()
        .map(|b| b.iter().cloned().map(Rational::from_integer).collect())
        .collect();
    Matrix::from_fn(k, k, |i, j| crate::matrix::bilinear(q, &rb[i], &rb[j]))
}

/// Exact quadratic completion `Q(x) = Σ_i d_i (x_i + Σ_{j>i} μ_ij x_j)²`.
struct Completion {
    d: Vec<Rational>,
    mu: Vec<Vec<Rational>>,
}

impl Completion {
    fn new(g: &Matrix<Rational>) -> Result<Self> {
        let k = g.rows();
        let mut q: Vec<Vec<Rational>> = g.row_vecs();
        for i in 0..k {
            if !q[i][i].is_positive() {
                return Err(Error::NotPositive);
            }
            for j in i + 1..k {
                q[j][i] = q[i][j].clone();
                q[i][j] = &q[i][j] / &q[i][i];
            }
            for l in i + 1..k {
                for j in l..k {
                    let t = &q[l][i] * &q[i][j];
                    q[l][j] -= t;
                }
            }
        }
        let d = (0..k).map(|i| q[i][i].clone()).collect();
        let mu = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if j > i { q[i][j].clone() } else { Rational::zero() })
                    .collect()
            })
            .collect();
        Ok(Completion { d, mu })
    }

    /// Integers `x` with `d (x − m)² ≤ t`, as an inclusive range.
    fn range(d: &Rational, m: &Rational, t: &Rational) -> Option<(BigInt, BigInt)> {
        let fits = |x: &BigInt| {
            let y = Rational::from_integer(x.clone()) - m;
            d * &y * &y <= *t
        };
        let radius = (t.to_f64().unwrap_or(f64::MAX) / d.to_f64().unwrap_or(f64::MIN_POSITIVE)).sqrt();
        let mf = m.to_f64().unwrap_or(0.0);
        let centre = floor_rat(m);
        let mut lo = BigInt::from((mf - radius).floor() as i64 - 1).min(centre.clone());
        let mut hi = BigInt::from((mf + radius).ceil() as i64 + 1).max(&centre + 1);
        while lo <= hi && !fits(&lo) {
            lo += 1;
        }
        while hi >= lo && !fits(&hi) {
            hi -= 1;
        }
        (lo <= hi).then_some((lo, hi))
    }
}

/// All `x ∈ Z^k` with `xᵀ G x ≤ bound`, including `0`, for positive definite
/// rational `G`. Branches of the outermost coordinate are explored with the
/// given execution mode; the output is sorted lexicographically.
pub fn short_vectors(g: &Matrix<Rational>, bound: &Rational, exec: Execution) -> Result<Vec<Vec<BigInt>>> {
    let k = g.rows();
    if k == 0 {
        return Ok(if bound.is_negative() {
            Vec::new()
        } else {
            vec![Vec::new()]
        });
    }
    if g.leading_minors().iter().any(|m| !m.is_positive()) {
        return Err(Error::NotPositive);
    }
    let comp = Completion::new(g)?;
    let top = k - 1;
    let Some((lo, hi)) = Completion::range(&comp.d[top], &Rational::zero(), bound) else {
        return Ok(Vec::new());
    };
    let mut firsts = Vec::new();
    let mut x = lo;
    while x <= hi {
        firsts.push(x.clone());
        x += 1;
    }
    let branches = exec.map(&firsts, |x0| {
        let mut out = Vec::new();
        let mut xs = vec![BigInt::zero(); k];
        xs[top] = x0.clone();
        let y = Rational::from_integer(x0.clone());
        let used = &comp.d[top] * &y * &y;
        descend(&comp, top, &mut xs, &(bound - used), &mut out);
        out
    });
    let mut all: Vec<Vec<BigInt>> = branches.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

fn descend(comp: &Completion, level: usize, xs: &mut Vec<BigInt>, remaining: &Rational, out: &mut Vec<Vec<BigInt>>) {
    if level == 0 {
        out.push(xs.clone());
        return;
    }
    let i = level - 1;
    let k = xs.len();
    let c: Rational = (i + 1..k).fold(Rational::zero(), |acc, j| {
        acc + &comp.mu[i][j] * Rational::from_integer(xs[j].clone())
    });
    let m = -c.clone();
    let Some((lo, hi)) = Completion::range(&comp.d[i], &m, remaining) else {
        return;
    };
    let mut x = lo;
    while x <= hi {
        let y = Rational::from_integer(x.clone()) + &c;
        let rest = remaining - &comp.d[i] * &y * &y;
        xs[i] = x.clone();
        descend(comp, i, xs, &rest, out);
        x += 1;
    }
    xs[i] = BigInt::zero();
}

/// `Σ_i x_i b_i`.
pub fn combine(x: &[BigInt], basis: &[Vec<BigInt>], n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    for (xi, b) in x.iter().zip(basis) {
        if xi.is_zero() {
            continue;
        }
        for (vj, bj) in v.iter_mut().zip(b) {
            *vj += xi * bj;
        }
    }
    v
}

pub fn to_i64(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| {
            x.to_i64()
                .ok_or_else(|| Error::Dimension(format!("entry {x} does not fit in 64 bits")))
        })
        .collect()
}

pub fn rational_vector(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect()
}

pub fn field_vector<T: crate::scalar::Field>(v: &[i64]) -> Vec<T> {
    v.iter().map(|&x| T::from_i64(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn kernel_of_a_single_row() {
        let k = integer_kernel(&[ints(&[2, 3, 5])], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            let s: BigInt = v.iter().zip(ints(&[2, 3, 5])).map(|(a, b)| a * b).sum();
            assert!(s.is_zero());
        }
        // unimodular: the kernel basis extends to Z^3, so its 2x2 minors are coprime
        let minors = [(0, 1), (0, 2), (1, 2)].map(|(i, j)| &k[0][i] * &k[1][j] - &k[0][j] * &k[1][i]);
        let g = minors.iter().fold(BigInt::zero(), |a, m| a.gcd(m));
        assert!(g.is_one());
    }

    #[test]
    fn saturation_recovers_primitive_vectors() {
        // U = span((2, 4)) ∩ Z^2 = Z·(1, 2)
        let u = Subspace::span(2, &[vec![rat(2, 1), rat(4, 1)]]).unwrap();
        let b = saturated_basis(&u);
        assert_eq!(b.len(), 1);
        let v = &b[0];
        assert!(v == &ints(&[1, 2]) || v == &ints(&[-1, -2]));
    }

    #[test]
    fn short_vectors_of_the_unit_form() {
        let g = Matrix::<Rational>::identity(1);
        let v = short_vectors(&g, &rat(4, 1), Execution::Sequential).unwrap();
        assert_eq!(v.len(), 5);
        let g2 = Matrix::<Rational>::identity(2);
        // lattice points of the disc of radius sqrt(5): 21
        let v2 = short_vectors(&g2, &rat(5, 1), Execution::Parallel).unwrap();
        assert_eq!(v2.len(), 21);
    }

    #[test]
    fn short_vectors_match_a_box_search() {
        let g = Matrix::from_rows(vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 1)]], 2).unwrap();
        let found = short_vectors(&g, &rat(12, 1), Execution::Sequential).unwrap();
        let mut brute = Vec::new();
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                if 2 * a * a + 2 * a * b + 3 * b * b <= 12 {
                    brute.push(ints(&[a, b]));
                }
            }
        }
        brute.sort();
        assert_eq!(found, brute);
    }

    #[test]
    fn indefinite_forms_are_rejected() {
        let g = Matrix::from_rows(vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]], 2).unwrap();
        assert!(matches!(
            short_vectors(&g, &rat(1, 1), Execution::Sequential),
            Err(Error::NotPositive)
        ));
    }
}
