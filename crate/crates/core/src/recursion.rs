//! Linear recursions in moment sequences: detection, forward/backward
//! extension, characteristic polynomials with exact root finding, and
//! recovery of finitely atomic representing charges through the Vandermonde
//! system at the characteristic roots.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve, LinSolve};
use crate::model::{AtomicCharge, MomentSequence, RecursionSpec};
use crate::scalar::{Scalar, DEFAULT_EPS};

/// Monic polynomial, coefficients ascending by degree (leading 1 included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub monic_coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn new(monic_coeffs: Vec<Scalar>) -> Result<Self> {
        match monic_coeffs.last() {
            Some(lead) if *lead == Scalar::one() && monic_coeffs.len() >= 2 => {
                Ok(Polynomial { monic_coeffs })
            }
            _ => Err(Error::Precondition(
                "polynomial must be monic of degree >= 1".into(),
            )),
        }
    }

    pub fn degree(&self) -> usize {
        self.monic_coeffs.len() - 1
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.monic_coeffs
            .iter()
            .rev()
            .fold(Scalar::zero(), |acc, c| &(&acc * x) + c)
    }
}

/// One root with its multiplicity. Rational and quadratic-surd roots are
/// exact; higher-degree irrational roots fall back to clustered approximate
/// values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: Scalar,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    /// Number of non-real roots, counted with multiplicity.
    pub complex_count: usize,
}

impl RootSet {
    pub fn all_simple(&self) -> bool {
        self.roots.iter().all(|r| r.multiplicity == 1)
    }

    pub fn all_real(&self) -> bool {
        self.complex_count == 0
    }
}

/// Minimal-order recursion consistent with every available window, up to
/// `max_order` (default `ceil(len/2)`); `None` when nothing fits.
pub fn detect_recursion(gamma: &[Scalar], max_order: Option<usize>) -> Option<RecursionSpec> {
    let len = gamma.len();
    if len < 2 {
        return None;
    }
    let cap = max_order.unwrap_or(len.div_ceil(2)).min(len - 1);
    for r in 1..=cap {
        // gamma_m = sum_j a_j gamma_{m-1-j} for every m in [r, len-1]
        let rows: Vec<Vec<Scalar>> = (r..len)
            .map(|m| (0..r).map(|j| gamma[m - 1 - j].clone()).collect())
            .collect();
        let rhs: Vec<Scalar> = (r..len).map(|m| gamma[m].clone()).collect();
        let Ok(solution) = solve(&rows, &rhs) else {
            continue;
        };
        if let Some(coeffs) = solution.particular() {
            let spec = RecursionSpec {
                coeffs: coeffs.clone(),
                initial: gamma[..r].to_vec(),
            };
            return Some(spec);
        }
    }
    None
}

/// Applies the recursion forward `count` times; returns initial segment plus
/// the generated terms.
pub fn extend(spec: &RecursionSpec, count: usize) -> Vec<Scalar> {
    spec.generate(spec.order() + count - 1)
}

/// Inverts the recursion to prepend `steps` earlier terms; the result ends
/// with the spec's initial segment. Requires the trailing coefficient to be
/// nonzero.
pub fn extend_backward(spec: &RecursionSpec, steps: usize) -> Result<Vec<Scalar>> {
    let r = spec.order();
    let a_last = &spec.coeffs[r - 1];
    if a_last.is_zero() {
        return Err(Error::NotInvertible);
    }
    let mut seq = spec.initial.clone();
    for _ in 0..steps {
        // gamma_m = (gamma_{m+r} - sum_{j<r-1} a_j gamma_{m+r-1-j}) / a_{r-1}
        let mut acc = seq[r - 1].clone();
        for j in 0..r - 1 {
            acc = &acc - &(&spec.coeffs[j] * &seq[r - 2 - j]);
        }
        let new_first = acc.checked_div(a_last)?;
        seq.insert(0, new_first);
    }
    Ok(seq)
}

/// `P(z) = z^r - a_0 z^{r-1} - ... - a_{r-1}`.
pub fn characteristic_polynomial(spec: &RecursionSpec) -> Polynomial {
    let r = spec.order();
    let mut coeffs = Vec::with_capacity(r + 1);
    for j in (0..r).rev() {
        coeffs.push(-&spec.coeffs[j]);
    }
    coeffs.push(Scalar::one());
    Polynomial { monic_coeffs: coeffs }
}

// --- rational polynomial helpers -------------------------------------------

fn rat_coeffs(p: &Polynomial) -> Option<Vec<BigRational>> {
    p.monic_coeffs.iter().map(|c| c.as_rational()).collect()
}

fn trim(mut c: Vec<BigRational>) -> Vec<BigRational> {
    while c.len() > 1 && c.last().map(|x| x.is_zero()) == Some(true) {
        c.pop();
    }
    c
}

fn eval_rat(c: &[BigRational], x: &BigRational) -> BigRational {
    c.iter()
        .rev()
        .fold(BigRational::zero(), |acc, k| acc * x + k)
}

/// Exact synthetic division by `(z - root)`; the remainder must vanish.
fn deflate(c: &[BigRational], root: &BigRational) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); c.len() - 1];
    let mut carry = BigRational::zero();
    for i in (0..c.len() - 1).rev() {
        carry = &c[i + 1] + root * &carry;
        out[i] = carry.clone();
    }
    debug_assert!((&c[0] + root * &out[0]).is_zero());
    out
}

const MAX_DIVISORS: usize = 512;
const MAX_ROOT_CANDIDATES: usize = 250_000;

/// Small divisors of `n` from trial division, `None` when the divisor count
/// would blow past the enumeration cap. A residual factor beyond the trial
/// bound is kept whole, so divisors that would split it are not enumerated
/// (irrelevant at the coefficient sizes genuine measure polynomials produce).
fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let mut primes: Vec<(BigInt, u32)> = Vec::new();
    let mut rem = n.abs();
    if rem.is_zero() {
        return Some(vec![]);
    }
    let mut d = BigInt::from(2);
    let bound = BigInt::from(10_000);
    while &d * &d <= rem && d <= bound {
        let mut count = 0;
        while (&rem % &d).is_zero() {
            rem /= &d;
            count += 1;
        }
        if count > 0 {
            primes.push((d.clone(), count));
        }
        d += 1;
    }
    if rem > BigInt::one() {
        primes.push((rem, 1));
    }
    let count = primes
        .iter()
        .try_fold(1usize, |acc, (_, e)| acc.checked_mul(*e as usize + 1))?;
    if count > MAX_DIVISORS {
        return None;
    }
    let mut divs = vec![BigInt::one()];
    for (p, e) in primes {
        let mut next = Vec::new();
        for dv in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(dv * &pk);
                pk *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    divs.dedup();
    Some(divs)
}

/// Cheap screen before exact evaluation: a true rational root evaluates to an
/// f64 residual far below the accumulated magnitude, so anything above the
/// threshold cannot be a root.
fn could_be_root(coeffs_f64: &[f64], x: f64) -> bool {
    let mut value = 0.0f64;
    let mut magnitude = 0.0f64;
    for &c in coeffs_f64.iter().rev() {
        value = value * x + c;
        magnitude = magnitude * x.abs() + c.abs();
    }
    !value.is_finite() || value.abs() <= 1e-9 * magnitude.max(f64::MIN_POSITIVE)
}

/// All rational roots of a monic rational polynomial (with multiplicity),
/// found by divisor search on the integerized coefficients and verified by
/// exact evaluation; returns the deflated remainder factor.
fn rational_roots(c: Vec<BigRational>) -> (Vec<(BigRational, usize)>, Vec<BigRational>) {
    let mut c = trim(c);
    let mut found: Vec<(BigRational, usize)> = Vec::new();

    // roots at the origin first
    let mut zero_mult = 0usize;
    while c.len() > 1 && c[0].is_zero() {
        c.remove(0);
        zero_mult += 1;
    }
    if zero_mult > 0 {
        found.push((BigRational::zero(), zero_mult));
    }

    'outer: while c.len() > 1 {
        let lcm = c
            .iter()
            .fold(BigInt::one(), |acc, q| num_integer::lcm(acc, q.denom().clone()));
        let ints: Vec<BigInt> = c.iter().map(|q| (q * &lcm).to_integer()).collect();
        let (Some(p_divs), Some(q_divs)) = (divisors(&ints[0]), divisors(ints.last().unwrap()))
        else {
            // divisor space too large to enumerate; leave the factor to the
            // companion fallback
            break;
        };
        if p_divs.len().saturating_mul(q_divs.len()) > MAX_ROOT_CANDIDATES {
            break;
        }
        let coeffs_f64: Vec<f64> = c.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect();
        // f64 screening first: exact rationals are only built for survivors
        let p_f64: Vec<f64> = p_divs.iter().map(|d| d.to_f64().unwrap_or(f64::NAN)).collect();
        let q_f64: Vec<f64> = q_divs.iter().map(|d| d.to_f64().unwrap_or(f64::NAN)).collect();
        for (pi, p) in p_divs.iter().enumerate() {
            for (qi, q) in q_divs.iter().enumerate() {
                for sign in [1i32, -1] {
                    if !could_be_root(&coeffs_f64, sign as f64 * p_f64[pi] / q_f64[qi]) {
                        continue;
                    }
                    let cand = BigRational::new(p * BigInt::from(sign), q.clone());
                    if eval_rat(&c, &cand).is_zero() {
                        let mut mult = 0usize;
                        while c.len() > 1 && eval_rat(&c, &cand).is_zero() {
                            c = deflate(&c, &cand);
                            mult += 1;
                        }
                        found.push((cand, mult));
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    (found, c)
}

const ROOT_CLUSTER_TOL: f64 = 1e-9;

/// Characteristic roots with multiplicities.
///
/// Exact mode handles rational roots and quadratic surds; residual factors of
/// degree >= 3 are sent to the companion matrix, with eigenvalues clustered at
/// a relative tolerance of 1e-9.
pub fn roots(p: &Polynomial) -> RootSet {
    let Some(coeffs) = rat_coeffs(p) else {
        return companion_roots(&p.monic_coeffs.iter().map(Scalar::to_f64).collect::<Vec<_>>());
    };
    let (rat, residual) = rational_roots(coeffs);
    let mut out: Vec<Root> = rat
        .into_iter()
        .map(|(value, multiplicity)| Root {
            value: Scalar::Exact(value),
            multiplicity,
        })
        .collect();
    let mut complex_count = 0usize;
    let residual = trim(residual);
    match residual.len() {
        1 => {}
        2 => {
            // monic linear without rational root cannot happen
            out.push(Root {
                value: Scalar::Exact(-residual[0].clone()),
                multiplicity: 1,
            });
        }
        3 => {
            // z^2 + b z + c with no rational roots: surd or complex pair
            let b = &residual[1];
            let c = &residual[0];
            let disc = b * b - BigRational::from_integer(4.into()) * c;
            if disc.is_negative() {
                complex_count += 2;
            } else {
                let sqrt_disc = Scalar::Exact(disc).sqrt().expect("disc >= 0");
                let half = Scalar::ratio(1, 2);
                let minus_b = Scalar::Exact(-b.clone());
                let r1 = &(&minus_b - &sqrt_disc) * &half;
                let r2 = &(&minus_b + &sqrt_disc) * &half;
                out.push(Root {
                    value: r1,
                    multiplicity: 1,
                });
                out.push(Root {
                    value: r2,
                    multiplicity: 1,
                });
            }
        }
        _ => {
            let f: Vec<f64> = residual
                .iter()
                .map(|q| q.to_f64().unwrap_or(f64::NAN))
                .collect();
            let sub = companion_roots(&f);
            complex_count += sub.complex_count;
            out.extend(sub.roots);
        }
    }
    out.sort_by(|a, b| a.value.cmp(&b.value));
    RootSet {
        roots: out,
        complex_count,
    }
}

/// Companion-matrix eigenvalues of a monic polynomial given by f64
/// coefficients (ascending), clustered into roots with multiplicities.
fn companion_roots(coeffs: &[f64]) -> RootSet {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return RootSet {
            roots: vec![],
            complex_count: 0,
        };
    }
    let m = DMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eig = m.complex_eigenvalues();
    let mut vals: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut roots = Vec::new();
    let mut complex_count = 0usize;
    let mut i = 0;
    while i < vals.len() {
        let (re, im) = vals[i];
        let scale = 1f64.max(re.hypot(im));
        let mut mult = 1;
        while i + mult < vals.len() {
            let (re2, im2) = vals[i + mult];
            if ((re2 - re).powi(2) + (im2 - im).powi(2)).sqrt() <= ROOT_CLUSTER_TOL * scale {
                mult += 1;
            } else {
                break;
            }
        }
        // cluster midpoint
        let mre = vals[i..i + mult].iter().map(|v| v.0).sum::<f64>() / mult as f64;
        let mim = vals[i..i + mult].iter().map(|v| v.1).sum::<f64>() / mult as f64;
        if mim.abs() <= ROOT_CLUSTER_TOL * scale {
            roots.push(Root {
                value: Scalar::Approx(mre),
                multiplicity: mult,
            });
        } else {
            complex_count += mult;
        }
        i += mult;
    }
    RootSet {
        roots,
        complex_count,
    }
}

/// Recovers a finitely atomic charge from a raw moment list (no `gamma_0 = 1`
/// normalization): detects the minimal recursion, requires simple
/// characteristic roots, solves the Vandermonde system and verifies the
/// result against every available moment.
pub fn recover_charge(seq: &[Scalar]) -> Result<Option<AtomicCharge>> {
    let Some(spec) = detect_recursion(seq, None) else {
        return Ok(None);
    };
    let poly = characteristic_polynomial(&spec);
    let root_set = roots(&poly);
    if !root_set.all_real() {
        return Ok(None);
    }
    if !root_set.all_simple() {
        return Err(Error::ShapeMismatch(
            "repeated characteristic roots: non-atomic representation (derivative terms) \
             unsupported"
                .into(),
        ));
    }
    let nodes: Vec<Scalar> = root_set.roots.iter().map(|r| r.value.clone()).collect();
    let r = nodes.len();
    if r == 0 || seq.len() < r {
        return Ok(None);
    }
    // Vandermonde system: sum_t c_t nodes_t^i = seq_i for i = 0..r-1.
    let rows: Vec<Vec<Scalar>> = (0..r)
        .map(|i| nodes.iter().map(|l| l.pow(i)).collect())
        .collect();
    let rhs: Vec<Scalar> = seq[..r].to_vec();
    let densities = match solve(&rows, &rhs) {
        Ok(LinSolve::Unique(x)) => x,
        Ok(_) => return Ok(None),
        Err(_) => {
            // exact pivoting left the field (nested radicals): approximate solve
            let a = DMatrix::from_fn(r, r, |i, j| nodes[j].to_f64().powi(i as i32));
            let b = nalgebra::DVector::from_iterator(r, seq[..r].iter().map(Scalar::to_f64));
            match a.lu().solve(&b) {
                Some(x) => x.iter().map(|&v| Scalar::Approx(v)).collect(),
                None => return Ok(None),
            }
        }
    };
    let charge = AtomicCharge::accumulate(
        nodes
            .into_iter()
            .zip(densities)
            .filter(|(_, d)| !d.is_zero()),
    );
    // The charge must reproduce every available moment.
    let exact = seq.iter().all(Scalar::is_exact)
        && charge
            .atoms()
            .iter()
            .all(|a| a.loc.is_exact() && a.den.is_exact());
    for (k, want) in seq.iter().enumerate() {
        let got = charge.moment(k);
        let ok = if exact {
            got == *want
        } else {
            let scale = 1f64.max(want.to_f64().abs());
            (got.to_f64() - want.to_f64()).abs() <= DEFAULT_EPS * scale
        };
        if !ok {
            return Ok(None);
        }
    }
    Ok(Some(charge))
}

/// [`recover_charge`] for normalized moment sequences.
pub fn recover_measure(g: &MomentSequence) -> Result<Option<AtomicCharge>> {
    recover_charge(&g.gamma)
}
