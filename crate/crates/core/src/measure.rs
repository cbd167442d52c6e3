//! Multiplicative-convolution algebra of finitely atomic charges, and the
//! convolution square-root solver behind the Aluthge subnormality tests.
//!
//! The solver looks for a nonnegative charge `nu` with `nu * nu = rho` and
//! atoms restricted to `{+-s : s in candidates} union {0}`: for each
//! zero/sign occupation pattern the pairwise products `y_ij = x_i x_j` form a
//! linear system (the quadratic system seen through its Gram matrix), and a
//! solution exists iff some pattern admits a rank-one, entrywise-positive `Y`.
//! All feasibility checks happen on `Y` in exact arithmetic; densities are
//! `sqrt(y_ii)`, exact as radicals whenever `y_ii` is rational.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{AtomicCharge, SupportSet};
use crate::scalar::Scalar;

/// Raw moment list `(sum_t rho_t lambda_t^k)` for `k = 0..n`; no
/// normalization is assumed or produced.
pub fn moments_of(m: &AtomicCharge, n: usize) -> Vec<Scalar> {
    (0..=n).map(|k| m.moment(k)).collect()
}

/// Multiplicative convolution: atoms at all pairwise products of locations,
/// densities summed over coinciding products, zero densities dropped.
pub fn mult_convolve(a: &AtomicCharge, b: &AtomicCharge) -> AtomicCharge {
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for x in a.atoms() {
        for y in b.atoms() {
            pairs.push((&x.loc * &y.loc, &x.den * &y.den));
        }
    }
    AtomicCharge::accumulate(pairs)
}

/// `t`-weighting: atom `(lambda, rho)` maps to `(lambda, lambda * rho)`;
/// an atom at the origin vanishes.
pub fn t_weight(m: &AtomicCharge) -> AtomicCharge {
    AtomicCharge::accumulate(
        m.atoms()
            .iter()
            .map(|a| (a.loc.clone(), &a.loc * &a.den)),
    )
}

/// `{ |lambda| : lambda in supp(m) }`.
pub fn abs_support(m: &AtomicCharge) -> SupportSet {
    SupportSet::new(m.atoms().iter().map(|a| a.loc.abs()).collect())
}

/// All densities nonnegative (a charge that is a measure).
pub fn is_nonneg(m: &AtomicCharge) -> bool {
    m.is_measure()
}

/// All atom locations in `[0, oo)`.
pub fn is_supported_nonneg(m: &AtomicCharge) -> bool {
    m.atoms().iter().all(|a| !a.loc.is_negative())
}

const MAX_CANDIDATES: usize = 8;

#[derive(Clone, Copy, PartialEq)]
enum SignChoice {
    Absent,
    Plus,
    Minus,
    Both,
}

/// First verified square root in canonical pattern order, or `None`.
pub fn conv_square_root(
    rho: &AtomicCharge,
    candidates: &SupportSet,
) -> Result<Option<AtomicCharge>> {
    let all = solve_square_roots(rho, candidates, true)?;
    Ok(all.into_iter().next())
}

/// Every verified square root over the whole pattern space (used to decide
/// nonexistence claims such as "no R+-supported root").
pub fn conv_square_root_solutions(
    rho: &AtomicCharge,
    candidates: &SupportSet,
) -> Result<Vec<AtomicCharge>> {
    solve_square_roots(rho, candidates, false)
}

fn solve_square_roots(
    rho: &AtomicCharge,
    candidates: &SupportSet,
    first_only: bool,
) -> Result<Vec<AtomicCharge>> {
    if candidates.len() > MAX_CANDIDATES {
        return Err(Error::SearchSpaceTooLarge(format!(
            "{} candidate locations, bound is {MAX_CANDIDATES}",
            candidates.len()
        )));
    }
    if rho.atoms().iter().any(|a| !a.loc.is_exact() || !a.den.is_exact()) {
        return Err(Error::Precondition(
            "conv_square_root requires exact atom data".into(),
        ));
    }
    // Deduplicated absolute candidate values, ascending; zero handled apart.
    let mut abs_vals: Vec<Scalar> = candidates.locations.iter().map(Scalar::abs).collect();
    abs_vals.sort();
    abs_vals.dedup();
    let has_zero_candidate = abs_vals.first().map(Scalar::is_zero) == Some(true);
    if has_zero_candidate {
        abs_vals.remove(0);
    }

    let rho_support: Vec<Scalar> = rho.atoms().iter().map(|a| a.loc.clone()).collect();
    let rho_max_abs = rho_support.iter().map(Scalar::abs).max();

    let mut solutions: Vec<AtomicCharge> = Vec::new();
    let mut undecided = false;

    let n = abs_vals.len();
    let zero_options: &[bool] = if has_zero_candidate {
        &[false, true]
    } else {
        &[false]
    };
    let sign_options = [
        SignChoice::Absent,
        SignChoice::Plus,
        SignChoice::Minus,
        SignChoice::Both,
    ];
    let mut pattern = vec![SignChoice::Absent; n];
    for &zero_on in zero_options {
        let mut counter = vec![0usize; n];
        loop {
            for (i, &c) in counter.iter().enumerate() {
                pattern[i] = sign_options[c];
            }
            let mut locs: Vec<Scalar> = Vec::new();
            if zero_on {
                locs.push(Scalar::zero());
            }
            for (i, choice) in pattern.iter().enumerate() {
                match choice {
                    SignChoice::Absent => {}
                    SignChoice::Plus => locs.push(abs_vals[i].clone()),
                    SignChoice::Minus => locs.push(-&abs_vals[i]),
                    SignChoice::Both => {
                        locs.push(abs_vals[i].clone());
                        locs.push(-&abs_vals[i]);
                    }
                }
            }
            locs.sort();

            // cheap guard: the largest occupied |location| squared must be
            // the largest |support point| of rho
            let viable = match (&rho_max_abs, locs.iter().map(Scalar::abs).max()) {
                (None, None) => true,
                (Some(rm), Some(lm)) => &lm * &lm == *rm,
                _ => false,
            };
            if viable {
                match solve_pattern(rho, &rho_support, &locs) {
                    PatternOutcome::Solutions(mut s) => {
                        solutions.append(&mut s);
                        if first_only && !solutions.is_empty() {
                            return Ok(solutions);
                        }
                    }
                    PatternOutcome::None => {}
                    PatternOutcome::Undecided => undecided = true,
                }
            }

            // advance the mixed-radix counter
            let mut i = 0;
            loop {
                if i == n {
                    break;
                }
                counter[i] += 1;
                if counter[i] < sign_options.len() {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    if solutions.is_empty() && undecided {
        return Err(Error::Undecidable(
            "a sign pattern led to an underdetermined product system the exact solver \
             does not handle"
                .into(),
        ));
    }
    Ok(solutions)
}

enum PatternOutcome {
    Solutions(Vec<AtomicCharge>),
    None,
    Undecided,
}

/// Index of pair `(i, j)`, `i <= j`, in the flattened upper triangle.
fn pair_index(i: usize, j: usize, m: usize) -> usize {
    debug_assert!(i <= j);
    i * m - i * (i + 1) / 2 + j
}

fn solve_pattern(
    rho: &AtomicCharge,
    rho_support: &[Scalar],
    locs: &[Scalar],
) -> PatternOutcome {
    let m = locs.len();
    if m == 0 {
        return if rho.is_empty() {
            PatternOutcome::Solutions(vec![AtomicCharge::empty()])
        } else {
            PatternOutcome::None
        };
    }
    // products and their contributing pairs
    let mut products: BTreeMap<Scalar, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..m {
        for j in i..m {
            products
                .entry(&locs[i] * &locs[j])
                .or_default()
                .push((i, j));
        }
    }
    // every occupied pair contributes a strictly positive product density, so
    // the support of nu*nu is exactly the product set
    let product_support: Vec<&Scalar> = products.keys().collect();
    if product_support.len() != rho_support.len()
        || product_support
            .iter()
            .zip(rho_support)
            .any(|(a, b)| **a != *b)
    {
        return PatternOutcome::None;
    }

    let unknowns = m * (m + 1) / 2;
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(products.len());
    let mut rhs: Vec<Scalar> = Vec::with_capacity(products.len());
    for (u, pairs) in &products {
        let mut row = vec![Scalar::zero(); unknowns];
        for &(i, j) in pairs {
            let coeff = if i == j { 1 } else { 2 };
            row[pair_index(i, j, m)] = Scalar::from_int(coeff);
        }
        rows.push(row);
        rhs.push(rho.density_at(u));
    }
    let solved = match crate::linalg::solve(&rows, &rhs) {
        Ok(s) => s,
        Err(_) => return PatternOutcome::Undecided,
    };
    match solved {
        crate::linalg::LinSolve::Inconsistent => PatternOutcome::None,
        crate::linalg::LinSolve::Unique(y) => match rank_one_root(&y, locs, rho) {
            Some(nu) => PatternOutcome::Solutions(vec![nu]),
            None => PatternOutcome::None,
        },
        crate::linalg::LinSolve::Underdetermined {
            particular,
            nullspace,
        } => {
            if nullspace.len() > 1 {
                return PatternOutcome::Undecided;
            }
            one_parameter_roots(&particular, &nullspace[0], locs, rho)
        }
    }
}

/// Checks that `Y` (upper triangle, flattened) is rank-one with positive
/// entries and extracts `nu` with densities `x_i = sqrt(y_ii)`.
///
/// When some diagonal entry is rational, the other densities come out exactly
/// as `x_i = y_ip / sqrt(y_pp)` (a single-surd division), which keeps the
/// whole root inside the radical domain even when the remaining diagonal
/// entries are themselves irrational.
fn rank_one_root(y: &[Scalar], locs: &[Scalar], rho: &AtomicCharge) -> Option<AtomicCharge> {
    let m = locs.len();
    for i in 0..m {
        if !y[pair_index(i, i, m)].is_positive() {
            return None;
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let yij = &y[pair_index(i, j, m)];
            if !yij.is_positive() {
                return None;
            }
            if &(yij * yij) != &(&y[pair_index(i, i, m)] * &y[pair_index(j, j, m)]) {
                return None;
            }
        }
    }
    let densities = extract_densities(y, m).unwrap_or_else(|| {
        (0..m)
            .map(|i| Scalar::Approx(y[pair_index(i, i, m)].to_f64().sqrt()))
            .collect()
    });
    let nu = AtomicCharge::new(locs.iter().cloned().zip(densities).collect()).ok()?;
    // substitution check
    let conv = mult_convolve(&nu, &nu);
    if nu.atoms().iter().all(|a| a.den.is_exact()) {
        (conv == *rho).then_some(nu)
    } else {
        // densities left the radical domain; the Y-level identities above
        // already pin the product structure exactly
        Some(nu)
    }
}

/// Exact densities from a verified rank-one positive `Y`, when a rational
/// diagonal pivot exists.
fn extract_densities(y: &[Scalar], m: usize) -> Option<Vec<Scalar>> {
    let p = (0..m).find(|&i| {
        matches!(y[pair_index(i, i, m)], Scalar::Exact(_))
    })?;
    let xp = y[pair_index(p, p, m)].sqrt().ok()?;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let xi = if i == p {
            xp.clone()
        } else {
            let yip = &y[pair_index(i.min(p), i.max(p), m)];
            yip.checked_div(&xp).ok()?
        };
        // x_i^2 must reproduce the diagonal exactly
        if &(&xi * &xi) != &y[pair_index(i, i, m)] || !xi.is_positive() {
            return None;
        }
        out.push(xi);
    }
    Some(out)
}

/// One-dimensional solution family `Y(t) = Y0 + t W`: rank-one conditions are
/// rational quadratics in `t`; their exact roots are tested against every
/// condition and the positivity constraints.
fn one_parameter_roots(
    y0: &[Scalar],
    w: &[Scalar],
    locs: &[Scalar],
    rho: &AtomicCharge,
) -> PatternOutcome {
    let m = locs.len();
    let at = |t: &Scalar| -> Vec<Scalar> {
        y0.iter()
            .zip(w)
            .map(|(a, b)| a + &(b * t))
            .collect()
    };
    // Collect candidate t values from the first non-degenerate rank-one
    // condition (y_ij(t)^2 - y_ii(t) y_jj(t) = 0, quadratic in t).
    let mut candidates: Vec<Scalar> = Vec::new();
    let mut found_condition = false;
    for i in 0..m {
        for j in (i + 1)..m {
            let (pi, pii, pjj) = (
                pair_index(i, j, m),
                pair_index(i, i, m),
                pair_index(j, j, m),
            );
            // (y0_ij + t w_ij)^2 - (y0_ii + t w_ii)(y0_jj + t w_jj)
            let a2 = &(&w[pi] * &w[pi]) - &(&w[pii] * &w[pjj]);
            let a1 = &(&(&y0[pi] * &w[pi]) + &(&w[pi] * &y0[pi]))
                - &(&(&y0[pii] * &w[pjj]) + &(&w[pii] * &y0[pjj]));
            let a0 = &(&y0[pi] * &y0[pi]) - &(&y0[pii] * &y0[pjj]);
            if a2.is_zero() && a1.is_zero() && a0.is_zero() {
                continue;
            }
            found_condition = true;
            if a2.is_zero() {
                if !a1.is_zero() {
                    if let Ok(t) = (-&a0).checked_div(&a1) {
                        candidates.push(t);
                    }
                }
                continue;
            }
            let disc = &(&a1 * &a1) - &(&Scalar::from_int(4) * &(&a2 * &a0));
            if disc.is_negative() {
                continue;
            }
            if let Ok(sq) = disc.sqrt() {
                let two_a2 = &Scalar::from_int(2) * &a2;
                let minus_a1 = -&a1;
                for root in [&minus_a1 - &sq, &minus_a1 + &sq] {
                    if let Ok(t) = root.checked_div(&two_a2) {
                        candidates.push(t);
                    }
                }
            }
        }
        if found_condition {
            break;
        }
    }
    if !found_condition {
        // every Y on the line is rank-one-compatible; try a few anchors
        candidates.extend([
            Scalar::zero(),
            Scalar::one(),
            -Scalar::one(),
            Scalar::ratio(1, 2),
            Scalar::ratio(-1, 2),
        ]);
    }
    let mut solutions = Vec::new();
    for t in &candidates {
        if let Some(nu) = rank_one_root(&at(t), locs, rho) {
            if !solutions.contains(&nu) {
                solutions.push(nu);
            }
        }
    }
    if solutions.is_empty() && !found_condition {
        // an unconstrained family we failed to anchor: report undecided
        // rather than claiming nonexistence
        return PatternOutcome::Undecided;
    }
    if solutions.is_empty() {
        PatternOutcome::None
    } else {
        PatternOutcome::Solutions(solutions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn charge(atoms: &[((i64, i64), (i64, i64))]) -> AtomicCharge {
        AtomicCharge::new(
            atoms
                .iter()
                .map(|&((ln, ld), (dn, dd))| (sc(ln, ld), sc(dn, dd)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn moments_examples() {
        let mu = charge(&[((-1, 1), (1, 4)), ((0, 1), (1, 4)), ((1, 1), (1, 2))]);
        assert_eq!(
            moments_of(&mu, 4),
            vec![sc(1, 1), sc(1, 4), sc(3, 4), sc(1, 4), sc(3, 4)]
        );
        let delta1 = charge(&[((1, 1), (1, 1))]);
        assert_eq!(moments_of(&delta1, 3), vec![sc(1, 1); 4]);
        let sym = charge(&[((-2, 1), (1, 2)), ((2, 1), (1, 2))]);
        assert_eq!(
            moments_of(&sym, 3),
            vec![sc(1, 1), sc(0, 1), sc(4, 1), sc(0, 1)]
        );
    }

    #[test]
    fn convolve_point_masses() {
        let a = charge(&[((2, 1), (1, 1))]);
        let b = charge(&[((3, 1), (1, 1))]);
        let c = mult_convolve(&a, &b);
        assert_eq!(c, charge(&[((6, 1), (1, 1))]));
    }

    #[test]
    fn convolve_rademacher_idempotent() {
        let r = charge(&[((-1, 1), (1, 2)), ((1, 1), (1, 2))]);
        assert_eq!(mult_convolve(&r, &r), r);
    }

    #[test]
    fn convolution_formula_three_atoms() {
        // mu = a d_{-p} + b d_r + c d_q with (a,b,c,p,r,q) = (1/4,1/4,1/2,1,1/2,2):
        // mu * t(mu) = -p a^2 d_{p^2} + r b^2 d_{r^2} + q c^2 d_{q^2}
        //            + ab(r-p) d_{-pr} + ac(q-p) d_{-pq} + bc(q+r) d_{rq}
        let mu = charge(&[((-1, 1), (1, 4)), ((1, 2), (1, 4)), ((2, 1), (1, 2))]);
        let got = mult_convolve(&mu, &t_weight(&mu));
        let expected = AtomicCharge::accumulate(vec![
            (sc(1, 1), sc(-1, 16)),  // -p a^2 at p^2
            (sc(1, 4), sc(1, 32)),   // r b^2 at r^2
            (sc(4, 1), sc(1, 2)),    // q c^2 at q^2
            (sc(-1, 2), sc(-1, 32)), // ab(r-p) at -pr
            (sc(-2, 1), sc(1, 8)),   // ac(q-p) at -pq
            (sc(1, 1), sc(5, 16)),   // bc(q+r) at rq (collides with p^2)
        ]);
        assert_eq!(got, expected);
    }

    #[test]
    fn t_weight_examples() {
        let zero = charge(&[((0, 1), (1, 1))]);
        assert!(t_weight(&zero).is_empty());
        let mu = charge(&[((-1, 1), (1, 4)), ((0, 1), (1, 4)), ((1, 1), (1, 2))]);
        assert_eq!(
            t_weight(&mu),
            charge(&[((-1, 1), (-1, 4)), ((1, 1), (1, 2))])
        );
        let q3 = charge(&[((3, 1), (1, 1))]);
        assert_eq!(t_weight(&q3), charge(&[((3, 1), (3, 1))]));
    }

    #[test]
    fn abs_support_examples() {
        let mu = charge(&[((-1, 1), (1, 4)), ((0, 1), (1, 4)), ((1, 1), (1, 2))]);
        assert_eq!(
            abs_support(&mu).locations,
            vec![sc(0, 1), sc(1, 1)]
        );
        let nu = charge(&[((-2, 1), (1, 1)), ((3, 1), (1, 1))]);
        assert_eq!(abs_support(&nu).locations, vec![sc(2, 1), sc(3, 1)]);
        let pm = charge(&[((-3, 2), (1, 1)), ((3, 2), (1, 1))]);
        assert_eq!(abs_support(&pm).locations, vec![sc(3, 2)]);
    }

    #[test]
    fn sign_predicates() {
        let d1 = charge(&[((1, 1), (1, 1))]);
        assert!(is_nonneg(&d1) && is_supported_nonneg(&d1));
        let neg_density = charge(&[((1, 1), (-1, 1))]);
        assert!(!is_nonneg(&neg_density) && is_supported_nonneg(&neg_density));
        let neg_loc = charge(&[((-1, 1), (1, 1))]);
        assert!(is_nonneg(&neg_loc) && !is_supported_nonneg(&neg_loc));
    }

    #[test]
    fn moment_multiplicativity() {
        let a = charge(&[((-1, 2), (1, 3)), ((2, 1), (2, 3))]);
        let b = charge(&[((1, 1), (1, 2)), ((3, 1), (-1, 4))]);
        let c = mult_convolve(&a, &b);
        for k in 0..=20 {
            assert_eq!(c.moment(k), &a.moment(k) * &b.moment(k));
        }
    }

    #[test]
    fn sqrtconv_recovers_planted_root() {
        let nu0 = charge(&[((1, 1), (1, 2)), ((2, 1), (1, 2))]);
        let rho = mult_convolve(&nu0, &nu0);
        let cands = SupportSet::new(vec![sc(1, 1), sc(2, 1)]);
        let got = conv_square_root(&rho, &cands).unwrap().unwrap();
        assert_eq!(got, nu0);
    }

    #[test]
    fn sqrtconv_three_atom_positive_case() {
        // mu = 1/4 d_{-1} + 1/4 d_0 + 1/2 d_1 (r = 0, p = q): some nonneg
        // R+-supported root of mu * t(mu) exists
        let mu = charge(&[((-1, 1), (1, 4)), ((0, 1), (1, 4)), ((1, 1), (1, 2))]);
        let rho = mult_convolve(&mu, &t_weight(&mu));
        let nu = conv_square_root(&rho, &abs_support(&mu)).unwrap().unwrap();
        assert!(is_nonneg(&nu));
        assert!(is_supported_nonneg(&nu));
        // substitution: the Y-level identities guarantee this exactly
        let back = mult_convolve(&nu, &nu);
        assert_eq!(back, rho);
    }

    #[test]
    fn sqrtconv_rejects_r_nonzero_case() {
        // mu = 1/4 d_{-1} + 1/4 d_{1/2} + 1/2 d_1 (r != 0): no R+-supported root
        let mu = charge(&[((-1, 1), (1, 4)), ((1, 2), (1, 4)), ((1, 1), (1, 2))]);
        let rho = mult_convolve(&mu, &t_weight(&mu));
        let sols = conv_square_root_solutions(&rho, &abs_support(&mu)).unwrap();
        assert!(sols.iter().all(|nu| !is_supported_nonneg(nu)));
    }

    #[test]
    fn sqrtconv_bound() {
        let rho = charge(&[((1, 1), (1, 1))]);
        let cands = SupportSet::new((1..=9).map(|i| sc(i, 1)).collect());
        assert!(matches!(
            conv_square_root(&rho, &cands),
            Err(Error::SearchSpaceTooLarge(_))
        ));
    }

    #[test]
    fn sqrtconv_zero_charge() {
        let rho = AtomicCharge::empty();
        let cands = SupportSet::new(vec![sc(1, 1)]);
        let nu = conv_square_root(&rho, &cands).unwrap().unwrap();
        assert!(nu.is_empty());
    }
}
