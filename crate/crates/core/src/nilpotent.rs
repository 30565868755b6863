//! Weight filtrations of nilpotent endomorphisms and cones, relative weight
//! filtrations, splitting gradings of several filtrations and position
//! multi-indices.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filtration::{Direction, Filtration, Grading};
use crate::matrix::{vec_is_zero, Matrix};
use crate::scalar::{Field, Rational};
use crate::subspace::{intersect_all, sum_all, Subspace};
use crate::unipotent::unipotent_sqrt;

/// Default seed for the cone resampling check.
pub const CONE_SEED: u64 = 0x5eed_c0de;

fn nilpotency_exponent<T: Field>(n: &Matrix<T>) -> Result<usize> {
    if !n.is_square() {
        return Err(Error::Dimension("nilpotent endomorphism must be square".into()));
    }
    // smallest k with N^{k+1} = 0
    let order = n.nilpotency_order().ok_or(Error::NotNilpotent)?;
    Ok(order.saturating_sub(1))
}

/// `W(N)`: the increasing filtration centred at 0 with `N W_ℓ ⊂ W_{ℓ−2}` and
/// `N^ℓ : Gr_ℓ ≅ Gr_{−ℓ}`, computed as
/// `W_ℓ = Σ_{j ≥ max(0, −ℓ)} ker N^{ℓ+j+1} ∩ im N^j` and checked afterwards.
pub fn weight_filtration<T: Field>(n: &Matrix<T>) -> Result<Filtration<T>> {
    let k = nilpotency_exponent(n)? as i32;
    let dim = n.rows();
    let full = Subspace::full(dim);
    let powers: Vec<Matrix<T>> = (0..=k + 1).map(|e| n.pow(e as u32)).collect();
    let kernels: Vec<Subspace<T>> = powers.iter().map(|p| full.kernel_of(p)).collect();
    let images: Vec<Subspace<T>> = powers.iter().map(Subspace::column_space).collect();
    let mut steps = Vec::new();
    for l in -k - 1..=k {
        let mut terms = Vec::new();
        for j in 0.max(-l)..=k {
            let e = l + j + 1;
            if e < 0 {
                continue;
            }
            let ker = &kernels[(e as usize).min(kernels.len() - 1)];
            terms.push(ker.intersect(&images[j as usize])?);
        }
        let refs: Vec<&Subspace<T>> = terms.iter().collect();
        steps.push((l, sum_all(dim, &refs)?));
    }
    let w = Filtration::increasing(dim, steps)?;
    check_weight_filtration(n, &w)?;
    Ok(w)
}

/// Verify the two characterizing properties of `W(N)`.
pub fn check_weight_filtration<T: Field>(n: &Matrix<T>, w: &Filtration<T>) -> Result<()> {
    let trivial = Filtration::trivial(Direction::Increasing, n.rows(), 0);
    check_relative_weight_filtration(n, &trivial, w)
}

/// Verify that `M` is the weight filtration of `N` relative to `W`:
/// `N M_i ⊂ M_{i−2}` and `N^ℓ : Gr^M_{k+ℓ} Gr^W_k ≅ Gr^M_{k−ℓ} Gr^W_k`.
pub fn check_relative_weight_filtration<T: Field>(n: &Matrix<T>, w: &Filtration<T>, m: &Filtration<T>) -> Result<()> {
    let fail = |msg: String| Err(Error::Verification(msg));
    if !m.maps_into(n, -2) {
        return fail("N does not lower the weight by 2".into());
    }
    if !w.maps_into(n, 0) {
        return fail("N does not preserve W".into());
    }
    let (ma, mb) = m.range();
    let (wa, wb) = w.range();
    // lower(j, k) = M_{j-1} ∩ W_k + M_j ∩ W_{k-1}, the denominator of Gr^M_j Gr^W_k
    let meet = |j: i32, k: i32| m.get(j).intersect(&w.get(k)).expect("same ambient");
    let lower = |j: i32, k: i32| meet(j - 1, k).sum(&meet(j, k - 1)).expect("same ambient");
    let graded_dim = |j: i32, k: i32| meet(j, k).dim() - lower(j, k).dim();
    let span = (mb - ma).max(wb - wa) + 2;
    for k in wa..=wb {
        for l in 1..=span {
            let top = graded_dim(k + l, k);
            let bottom = graded_dim(k - l, k);
            if top != bottom {
                return fail(format!(
                    "dim Gr^M_{} Gr^W_{k} = {top} but dim Gr^M_{} Gr^W_{k} = {bottom}",
                    k + l,
                    k - l
                ));
            }
            if top == 0 {
                continue;
            }
            let nl = n.pow(l as u32);
            let source = meet(k + l, k);
            let target = lower(k - l, k);
            let killed = source.preimage(&nl, &target);
            if killed.dim() != lower(k + l, k).dim() {
                return fail(format!("N^{l} is not injective on Gr^M_{} Gr^W_{k}", k + l));
            }
        }
    }
    Ok(())
}

/// The weight filtration of a cone with the λ samples it was checked against.
#[derive(Clone, Debug)]
pub struct ConeFiltration<T: Field> {
    pub filtration: Filtration<T>,
    pub samples: Vec<Vec<Rational>>,
}

pub fn check_commuting<T: Field>(gens: &[Matrix<T>]) -> Result<()> {
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            if !gens[i].commutator(&gens[j]).is_zero() {
                return Err(Error::NonCommuting(i, j));
            }
        }
    }
    Ok(())
}

/// `Σ λ_j N_j`.
pub fn cone_element<T: Field>(gens: &[Matrix<T>], lambda: &[Rational]) -> Matrix<T> {
    let n = gens[0].rows();
    gens.iter()
        .zip(lambda)
        .fold(Matrix::zeros(n, n), |acc, (g, l)| &acc + &g.scale(&T::from_rational(l)))
}

/// `W(C)` for the open cone spanned by commuting nilpotents: `W(Σ N_j)`,
/// compared against three further seeded positive rational combinations.
pub fn cone_weight_filtration<T: Field>(gens: &[Matrix<T>], seed: u64) -> Result<ConeFiltration<T>> {
    if gens.is_empty() {
        return Err(Error::InvalidOrbit("empty cone".into()));
    }
    check_commuting(gens)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![vec![Rational::from_integer(1.into()); gens.len()]];
    for _ in 0..3 {
        samples.push(
            (0..gens.len())
                .map(|_| Rational::new(rng.gen_range(1i64..=9).into(), rng.gen_range(1i64..=9).into()))
                .collect(),
        );
    }
    let reference = weight_filtration(&cone_element(gens, &samples[0]))?;
    for lambda in &samples[1..] {
        let other = weight_filtration(&cone_element(gens, lambda))?;
        if other != reference {
            let text: Vec<String> = lambda.iter().map(|x| x.to_string()).collect();
            return Err(Error::ConeDisagreement(format!("({})", text.join(", "))));
        }
    }
    Ok(ConeFiltration {
        filtration: reference,
        samples,
    })
}

/// Partial filtration on a subspace `U`: steps below `lo` are 0, steps from
/// `lo + steps.len()` on are `U`.
struct Partial<T: Field> {
    top: Subspace<T>,
    lo: i32,
    steps: Vec<Subspace<T>>,
}

impl<T: Field> Partial<T> {
    fn get(&self, i: i32) -> Subspace<T> {
        if i < self.lo {
            Subspace::zero(self.top.ambient_dim())
        } else if i >= self.lo + self.steps.len() as i32 {
            self.top.clone()
        } else {
            self.steps[(i - self.lo) as usize].clone()
        }
    }
}

/// The weight filtration of `N` relative to `W`, built one step of `W` at a
/// time: on `W_b / W_{b−1}` it is `W(N̄)` centred at `b`, and each Jordan chain
/// of `N̄` is lifted so that its top lies in `M_{b+ℓ}` and `N^{ℓ+1}` of it in
/// `M_{b−ℓ−2}`. Fails with [`Error::NoRelativeFiltration`] when no such lift
/// exists or the result does not verify.
pub fn relative_weight_filtration<T: Field>(n: &Matrix<T>, w: &Filtration<T>) -> Result<Filtration<T>> {
    let exponent = nilpotency_exponent(n)? as i32;
    if !w.maps_into(n, 0) {
        return Err(Error::InvalidFiltration("N does not preserve W".into()));
    }
    let dim = n.rows();
    let (wa, wb) = w.range();
    let mut partial = Partial {
        top: Subspace::zero(dim),
        lo: 0,
        steps: Vec::new(),
    };
    for b in wa..=wb {
        let wb_space = w.get(b);
        if wb_space.dim() == partial.top.dim() {
            continue;
        }
        let u = partial.top.clone();
        let k_m = |m: i32| wb_space.preimage(&n.pow(m as u32), &u);
        let lo = b - exponent - 1 - (wb - wa);
        let hi = b + exponent + 1 + (wb - wa);
        let lo = lo.min(partial.lo);
        let mut new_steps: BTreeMap<i32, Subspace<T>> = (lo..=hi).map(|i| (i, partial.get(i))).collect();
        for l in 0..=exponent {
            let kl = k_m(l);
            let kl1 = k_m(l + 1);
            let kl2 = k_m(l + 2);
            let known = kl.sum(&kl2.image(n))?;
            let tops = kl1.complement_of(&known)?;
            if tops.is_empty() {
                continue;
            }
            let nl1 = n.pow(l as u32 + 1);
            let target = partial.get(b - l - 2);
            let mut cols: Vec<Vec<T>> = u.basis_vectors().iter().map(|x| nl1.apply(x)).collect();
            cols.extend(target.basis_vectors());
            let udim = u.dim();
            for x in tops {
                let rhs = nl1.apply(&x);
                let lifted = if cols.is_empty() {
                    if !vec_is_zero(&rhs) {
                        return Err(Error::NoRelativeFiltration(format!(
                            "no admissible lift at weight {}",
                            b + l
                        )));
                    }
                    x
                } else {
                    let system = Matrix::from_columns(&cols, dim)?;
                    let c = system.solve(&rhs).ok_or_else(|| {
                        Error::NoRelativeFiltration(format!("no admissible lift at weight {}", b + l))
                    })?;
                    let correction = u.combine(&c[..udim]);
                    crate::matrix::vec_sub(&x, &correction)
                };
                let mut chain = lifted;
                for j in 0..=l {
                    let weight = b + l - 2 * j;
                    for (_, step) in new_steps.range_mut(weight..) {
                        *step = step.sum(&Subspace::span(dim, std::slice::from_ref(&chain))?)?;
                    }
                    chain = n.apply(&chain);
                }
            }
        }
        partial = Partial {
            top: wb_space,
            lo,
            steps: new_steps.into_values().collect(),
        };
    }
    let map: BTreeMap<i32, Subspace<T>> = (partial.lo..partial.lo + partial.steps.len() as i32)
        .map(|i| (i, partial.get(i)))
        .collect();
    let m = Filtration::from_map(Direction::Increasing, dim, map)?;
    check_relative_weight_filtration(n, w, &m).map_err(|e| Error::NoRelativeFiltration(e.to_string()))?;
    Ok(m)
}

/// Multi-index `ℓ` from partial sums `s_j = ℓ_1 + … + ℓ_j`.
fn increments(s: &[i32]) -> Vec<i32> {
    s.iter()
        .enumerate()
        .map(|(j, &x)| if j == 0 { x } else { x - s[j - 1] })
        .collect()
}

fn partial_sums(l: &[i32]) -> Vec<i32> {
    l.iter()
        .scan(0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn all_indices(ranges: &[(i32, i32)]) -> Vec<Vec<i32>> {
    let mut out = vec![Vec::new()];
    for &(a, b) in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (a..=b).map(move |x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// A `Z^d`-grading `A` with `W^j_w = ⊕_{ℓ_1+…+ℓ_j ≤ w} A^ℓ` for every `j`.
///
/// With `X^s = ∩_j W^j_{s_j}`, the piece indexed by partial sums `s` is a
/// complement of `Σ_j X^{s−e_j}` in `X^s`. Complements are taken from echelon
/// bases, so rational filtrations give a rational grading.
pub fn splitting_grading<T: Field>(ws: &[Filtration<T>]) -> Result<Grading<T>> {
    if ws.is_empty() {
        return Err(Error::InvalidGrading("no filtrations to split".into()));
    }
    let dim = ws[0].ambient_dim();
    if ws
        .iter()
        .any(|w| w.ambient_dim() != dim || w.direction() != Direction::Increasing)
    {
        return Err(Error::InvalidFiltration(
            "splitting needs increasing filtrations of one space".into(),
        ));
    }
    let ranges: Vec<(i32, i32)> = ws.iter().map(|w| w.range()).collect();
    let x = |s: &[i32]| -> Result<Subspace<T>> {
        let steps: Vec<Subspace<T>> = ws.iter().zip(s).map(|(w, &k)| w.get(k)).collect();
        let refs: Vec<&Subspace<T>> = steps.iter().collect();
        intersect_all(dim, &refs)
    };
    let mut pieces = BTreeMap::new();
    for s in all_indices(&ranges) {
        let xs = x(&s)?;
        if xs.is_zero() {
            continue;
        }
        let mut below = Vec::new();
        for j in 0..s.len() {
            let mut t = s.clone();
            t[j] -= 1;
            below.push(x(&t)?);
        }
        let refs: Vec<&Subspace<T>> = below.iter().collect();
        let lower = sum_all(dim, &refs)?;
        let comp = xs.complement_of(&lower)?;
        if !comp.is_empty() {
            pieces.insert(increments(&s), Subspace::span(dim, &comp)?);
        }
    }
    let grading = match Grading::new(dim, ws.len(), pieces) {
        Ok(g) => g,
        Err(_) => return Err(Error::NotDistributive(distributivity_witness(ws))),
    };
    for (j, w) in ws.iter().enumerate() {
        if grading.partial_sum_filtration(j + 1) != *w {
            return Err(Error::NotDistributive(distributivity_witness(ws)));
        }
    }
    Ok(grading)
}

/// Search step triples `(X, Y, Z)` from the family for a failure of
/// `dim((X+Y)∩Z) = dim(X∩Z) + dim(Y∩Z) − dim(X∩Y∩Z)`.
pub fn distributivity_witness<T: Field>(ws: &[Filtration<T>]) -> String {
    let mut steps: Vec<(usize, i32, Subspace<T>)> = Vec::new();
    for (j, w) in ws.iter().enumerate() {
        for (k, s) in w.steps() {
            steps.push((j, k, s));
        }
    }
    for (a, b, c) in triples(steps.len()) {
        let (ja, ka, x) = &steps[a];
        let (jb, kb, y) = &steps[b];
        let (jc, kc, z) = &steps[c];
        let lhs = x.sum(y).and_then(|s| s.intersect(z)).map(|s| s.dim());
        let xz = x.intersect(z).map(|s| s.dim());
        let yz = y.intersect(z).map(|s| s.dim());
        let xyz = x.intersect(y).and_then(|s| s.intersect(z)).map(|s| s.dim());
        if let (Ok(l), Ok(p), Ok(q), Ok(r)) = (lhs, xz, yz, xyz) {
            if l + r != p + q {
                return format!("W^{}_{ka}, W^{}_{kb}, W^{}_{kc}", ja + 1, jb + 1, jc + 1);
            }
        }
    }
    "splitting construction failed".into()
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c))))
}

/// Whether `m ≤ ℓ` in the partial order by partial sums, `m ≠ ℓ`.
fn strictly_below(m: &[i32], l: &[i32]) -> bool {
    m != l && partial_sums(m).iter().zip(partial_sums(l)).all(|(a, b)| *a <= b)
}

/// Replace a splitting grading by one compatible with `Q`: `A^ℓ ⊥ A^m`
/// unless `ℓ + m = 0`.
///
/// The grading `A'` obtained by transporting `A` through `Q` and dualizing
/// satisfies `A' = gA` with `g` unipotent; the result is `g^{1/2} A`.
pub fn polarization_compatible_grading<T: Field>(a: &Grading<T>, q: &Matrix<Rational>) -> Result<Grading<T>> {
    let dim = a.ambient_dim();
    let qt = q.map(T::from_rational);
    if qt.determinant().is_zero() {
        return Err(Error::InvalidLattice("form is degenerate".into()));
    }
    let mut dual = BTreeMap::new();
    for l in a.indices() {
        let neg: Vec<i32> = l.iter().map(|x| -x).collect();
        // {v : Q(v, A^m) = 0 for m ≠ −ℓ}
        let constraints: Vec<Vec<T>> = a
            .pieces()
            .iter()
            .filter(|(m, _)| **m != neg)
            .flat_map(|(_, s)| s.basis_vectors())
            .map(|y| qt.apply(&y))
            .collect();
        let piece = if constraints.is_empty() {
            Subspace::full(dim)
        } else {
            Subspace::span(dim, &Matrix::from_rows(constraints, dim)?.kernel())?
        };
        dual.insert(l, piece);
    }
    let dual = Grading::new(dim, a.index_dim(), dual)?;
    let dual_proj = dual.projectors();
    let a_proj = a.projectors();
    let g = a_proj
        .iter()
        .fold(Matrix::zeros(dim, dim), |acc, (l, p)| &acc + &(&dual_proj[l] * p));
    let gm1 = &g - &Matrix::identity(dim);
    for (l, p) in &a_proj {
        let moved = &gm1 * p;
        for (m, pm) in &a_proj {
            if !(pm * &moved).is_zero() && !strictly_below(m, l) {
                return Err(Error::NotGradingUnipotent(format!("(g - 1) A^{l:?} meets A^{m:?}")));
            }
        }
    }
    let h = unipotent_sqrt(&g)?;
    let out = a.transform(&h)?;
    check_compatible(&out, &qt)?;
    Ok(out)
}

/// `Q(A^ℓ, A^m) = 0` unless `ℓ + m = 0`.
pub fn check_compatible<T: Field>(a: &Grading<T>, q: &Matrix<T>) -> Result<()> {
    for (l, sl) in a.pieces() {
        for (m, sm) in a.pieces() {
            if l.iter().zip(m).all(|(x, y)| x + y == 0) {
                continue;
            }
            for u in sl.basis_vectors() {
                for v in sm.basis_vectors() {
                    if !crate::matrix::bilinear(q, &u, &v).is_zero() {
                        return Err(Error::Verification(format!("A^{l:?} and A^{m:?} are not orthogonal")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The lexicographically largest `ℓ` with a nonzero `A^ℓ`-component of `u`.
pub fn position<T: Field>(u: &[T], a: &Grading<T>) -> Result<Vec<i32>> {
    if vec_is_zero(u) {
        return Err(Error::ZeroVector);
    }
    a.decompose(u).into_keys().next_back().ok_or(Error::ZeroVector)
}
