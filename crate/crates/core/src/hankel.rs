//! Hankel matrices `M_n(k)` of a moment sequence and the positivity
//! properties built on them: `H(n)` (even offsets), `H~(n)` (odd offsets),
//! truncated Hamburger type and subnormality, plus recursion extraction from
//! rank-deficient positive blocks.
//!
//! Exact verdicts come from symmetric elimination over the rationals with the
//! semidefinite zero-diagonal rule; indefiniteness always carries a witness
//! vector whose quadratic form is recomputed exactly. A separate certified
//! layer decides matrices whose entries are square roots of rationals (the
//! Aluthge transform's moments) by interval elimination with escalating
//! precision and exact witness verification.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::model::RecursionSpec;
use crate::radical::RadicalSum;
use crate::scalar::{Mode, Scalar};

/// `(n+1) x (n+1)` matrix with entry `(i, j) = gamma_{k+i+j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HankelMatrix {
    pub offset: usize,
    pub entries: Vec<Vec<Scalar>>,
}

impl HankelMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }
}

/// Builds `M_n(k)`; needs moments through index `k + 2n`.
pub fn hankel(gamma: &[Scalar], n: usize, k: usize) -> Result<HankelMatrix> {
    let needed = k + 2 * n;
    if gamma.len() <= needed {
        return Err(Error::InsufficientMoments {
            needed,
            available: gamma.len().saturating_sub(1),
        });
    }
    let entries = (0..=n)
        .map(|i| (0..=n).map(|j| gamma[k + i + j].clone()).collect())
        .collect();
    Ok(HankelMatrix { offset: k, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdVerdict {
    PositiveSemidefinite,
    Indefinite,
}

/// Witness for indefiniteness: `vector^T M vector = value < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdWitness {
    pub vector: Vec<Scalar>,
    pub value: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdCertificate {
    pub verdict: PsdVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivots: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<PsdWitness>,
}

impl PsdCertificate {
    pub fn is_psd(&self) -> bool {
        self.verdict == PsdVerdict::PositiveSemidefinite
    }
}

fn quad_form(mat: &[Vec<BigRational>], x: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            acc += xi * xj * &mat[i][j];
        }
    }
    acc
}

/// One elimination step: pivot row/column index (original labels) and the
/// multipliers `A[p][j] / A[p][p]` for the then-active `j != p`.
struct ElimStep<T> {
    pivot: usize,
    coeffs: Vec<(usize, T)>,
}

/// Lifts a witness on the reduced block back through elimination steps: with
/// `x_p = -sum_j c_j x_j` the quadratic form value is preserved.
fn lift_witness(
    size: usize,
    steps: &[ElimStep<BigRational>],
    reduced: &[(usize, BigRational)],
) -> Vec<BigRational> {
    let mut x: BTreeMap<usize, BigRational> = reduced.iter().cloned().collect();
    for step in steps.iter().rev() {
        let mut xp = BigRational::zero();
        for (j, c) in &step.coeffs {
            if let Some(v) = x.get(j) {
                xp -= c * v;
            }
        }
        x.insert(step.pivot, xp);
    }
    let mut out = vec![BigRational::zero(); size];
    for (i, v) in x {
        out[i] = v;
    }
    out
}

/// Exact semidefiniteness of a symmetric rational matrix.
///
/// Pivots on strictly positive diagonal entries; once none remain, a nonzero
/// entry in the residual (all-zero-diagonal) block certifies indefiniteness.
fn psd_exact(mat: &[Vec<BigRational>]) -> PsdCertificate {
    let n = mat.len();
    let mut a: Vec<Vec<BigRational>> = mat.to_vec();
    let mut active: Vec<usize> = (0..n).collect();
    let mut steps: Vec<ElimStep<BigRational>> = Vec::new();
    let mut pivots = Vec::new();

    let witness_from = |steps: &[ElimStep<BigRational>], reduced: &[(usize, BigRational)]| {
        let x = lift_witness(n, steps, reduced);
        let value = quad_form(mat, &x);
        debug_assert!(value.is_negative());
        PsdCertificate {
            verdict: PsdVerdict::Indefinite,
            pivots: None,
            witness: Some(PsdWitness {
                vector: x.into_iter().map(Scalar::Exact).collect(),
                value: Scalar::Exact(value),
            }),
        }
    };

    loop {
        if active.is_empty() {
            return PsdCertificate {
                verdict: PsdVerdict::PositiveSemidefinite,
                pivots: Some(pivots.into_iter().map(Scalar::Exact).collect()),
                witness: None,
            };
        }
        if let Some(&i) = active.iter().find(|&&i| a[i][i].is_negative()) {
            return witness_from(&steps, &[(i, BigRational::from_integer(1.into()))]);
        }
        if let Some(p) = active.iter().copied().find(|&p| a[p][p].is_positive()) {
            let d = a[p][p].clone();
            let others: Vec<usize> = active.iter().copied().filter(|&j| j != p).collect();
            let coeffs: Vec<(usize, BigRational)> =
                others.iter().map(|&j| (j, &a[p][j] / &d)).collect();
            for &i in &others {
                for &j in &others {
                    let delta = &a[i][p] * &a[p][j] / &d;
                    a[i][j] -= delta;
                }
            }
            steps.push(ElimStep { pivot: p, coeffs });
            pivots.push(d);
            active.retain(|&j| j != p);
            continue;
        }
        // All remaining diagonal entries are zero: PSD forces the block to
        // vanish entirely.
        let offender = active
            .iter()
            .flat_map(|&i| active.iter().map(move |&j| (i, j)))
            .find(|&(i, j)| i < j && !a[i][j].is_zero());
        match offender {
            Some((i, j)) => {
                let sign = if a[i][j].is_positive() { -1 } else { 1 };
                return witness_from(
                    &steps,
                    &[
                        (i, BigRational::from_integer(1.into())),
                        (j, BigRational::from_integer(sign.into())),
                    ],
                );
            }
            None => {
                return PsdCertificate {
                    verdict: PsdVerdict::PositiveSemidefinite,
                    pivots: Some(pivots.into_iter().map(Scalar::Exact).collect()),
                    witness: None,
                }
            }
        }
    }
}

fn to_f64_matrix(entries: &[Vec<Scalar>]) -> DMatrix<f64> {
    let n = entries.len();
    DMatrix::from_fn(n, n, |i, j| entries[i][j].to_f64())
}

/// Approximate verdict: smallest eigenvalue at least `-eps * max(1, max-norm)`.
fn psd_approx(entries: &[Vec<Scalar>], eps: f64) -> PsdCertificate {
    let m = to_f64_matrix(entries);
    let scale = m.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let eig = m.clone().symmetric_eigen();
    let (mut min_idx, mut min_val) = (0usize, f64::INFINITY);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < min_val {
            min_val = v;
            min_idx = i;
        }
    }
    if min_val >= -eps * scale {
        return PsdCertificate {
            verdict: PsdVerdict::PositiveSemidefinite,
            pivots: None,
            witness: None,
        };
    }
    let v = eig.eigenvectors.column(min_idx);
    let x: Vec<f64> = v.iter().copied().collect();
    let mut value = 0.0;
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            value += xi * xj * m[(i, j)];
        }
    }
    PsdCertificate {
        verdict: PsdVerdict::Indefinite,
        pivots: None,
        witness: Some(PsdWitness {
            vector: x.into_iter().map(Scalar::Approx).collect(),
            value: Scalar::Approx(value),
        }),
    }
}

fn rational_entries(entries: &[Vec<Scalar>]) -> Result<Vec<Vec<BigRational>>> {
    entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| {
                    s.as_rational().ok_or_else(|| {
                        Error::Precondition(
                            "exact semidefiniteness test requires rational entries".into(),
                        )
                    })
                })
                .collect()
        })
        .collect()
}

/// Semidefiniteness decision for a Hankel block under the given mode.
pub fn is_psd(m: &HankelMatrix, mode: Mode) -> Result<PsdCertificate> {
    match mode {
        Mode::Exact => Ok(psd_exact(&rational_entries(&m.entries)?)),
        Mode::Approx { eps } => Ok(psd_approx(&m.entries, eps)),
    }
}

// ---------------------------------------------------------------------------
// Certified layer for matrices with entries sqrt(beta_m), beta_m rational.
// ---------------------------------------------------------------------------

const SQRT_PSD_BITS: [u32; 3] = [128, 512, 2048];
const SIGN_BITS_CAP: u32 = 1 << 14;
const JACOBI_SWEEPS: usize = 8;

/// Memo for sqrt interval enclosures of the sequence entries, shared by all
/// blocks of one classification run.
#[derive(Default)]
struct SqrtCache {
    map: std::collections::HashMap<(usize, u32), RatInterval>,
}

impl SqrtCache {
    fn get(&mut self, beta: &[BigRational], m: usize, bits: u32) -> RatInterval {
        self.map
            .entry((m, bits))
            .or_insert_with(|| RatInterval::sqrt_of(&beta[m], bits))
            .clone()
    }
}

/// Quadratic-form coefficients `c_m = sum_{i+j=m-k} x_i x_j` of a Hankel form.
fn hankel_form_coeffs(x: &[BigRational], k: usize) -> BTreeMap<usize, BigRational> {
    let mut c: BTreeMap<usize, BigRational> = BTreeMap::new();
    for (i, xi) in x.iter().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            if !xi.is_zero() && !xj.is_zero() {
                *c.entry(k + i + j).or_insert_with(BigRational::zero) += xi * xj;
            }
        }
    }
    c.retain(|_, v| !v.is_zero());
    c
}

/// Certified sign of `sum_m c_m sqrt(beta_m)`; `None` when undecided within
/// the precision cap (treated as "not a witness" by callers).
fn sqrt_combination_sign(
    beta: &[BigRational],
    coeffs: &BTreeMap<usize, BigRational>,
) -> Option<i8> {
    // Merge terms with identical radicands so that structural zeros cancel.
    let mut merged: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    for (&m, c) in coeffs {
        if beta[m].is_zero() {
            continue;
        }
        let entry = merged
            .entry(beta[m].clone())
            .or_insert_with(BigRational::zero);
        *entry += c;
    }
    merged.retain(|_, v| !v.is_zero());
    if merged.is_empty() {
        return Some(0);
    }
    if merged.values().all(|c| c.is_positive()) {
        return Some(1);
    }
    if merged.values().all(|c| c.is_negative()) {
        return Some(-1);
    }
    let mut bits = 64u32;
    while bits <= SIGN_BITS_CAP {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (b, c) in &merged {
            let s = RatInterval::sqrt_of(b, bits);
            if c.is_positive() {
                lo += c * &s.lo;
                hi += c * &s.hi;
            } else {
                lo += c * &s.hi;
                hi += c * &s.lo;
            }
        }
        if lo.is_positive() {
            return Some(1);
        }
        if hi.is_negative() {
            return Some(-1);
        }
        bits *= 4;
    }
    None
}

/// Exact radical value of the Hankel quadratic form (used for reporting a
/// verified witness; square parts of the radicands are extracted here).
fn sqrt_form_value(beta: &[BigRational], coeffs: &BTreeMap<usize, BigRational>) -> Scalar {
    let mut acc = RadicalSum::zero();
    for (&m, c) in coeffs {
        let root = RadicalSum::sqrt_rational(&beta[m]).expect("beta nonnegative");
        acc = acc.add(&root.scale(c));
    }
    Scalar::from_radical(acc)
}

/// High-precision Jacobi sweep; returns an approximate eigenvector for the
/// smallest eigenvalue as a rational (dyadic) vector.
fn jacobi_min_eigvec(mat: &[Vec<BigRational>], bits: u32) -> Vec<BigRational> {
    let n = mat.len();
    let mut a = mat.to_vec();
    let mut v: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::from_integer(1.into())
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let round = |q: &BigRational| crate::radical::dyadic_floor(q, bits);
    for _sweep in 0..JACOBI_SWEEPS * n {
        let mut off = BigRational::zero();
        let (mut p, mut q_idx) = (0usize, 1usize);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > off {
                    off = a[i][j].abs();
                    p = i;
                    q_idx = j;
                }
            }
        }
        if n < 2 || off.is_zero() {
            break;
        }
        let (i, j) = (p, q_idx);
        let tau_num = &a[j][j] - &a[i][i];
        let tau_den = &a[i][j] * BigRational::from_integer(2.into());
        let tau = round(&(&tau_num / &tau_den));
        // t = sign(tau)/(|tau| + sqrt(1+tau^2))
        let one = BigRational::from_integer(1.into());
        let inner = &one + &tau * &tau;
        let sq = RatInterval::sqrt_of(&inner, bits).mid();
        let t = if tau.is_negative() {
            -(&one / (tau.abs() + sq))
        } else {
            &one / (tau.abs() + sq)
        };
        let c_inner = &one + &t * &t;
        let c = &one / RatInterval::sqrt_of(&c_inner, bits).mid();
        let s = &t * &c;
        let (c, s) = (round(&c), round(&s));
        for r in 0..n {
            let (ari, arj) = (a[r][i].clone(), a[r][j].clone());
            a[r][i] = round(&(&c * &ari - &s * &arj));
            a[r][j] = round(&(&s * &ari + &c * &arj));
        }
        for col in 0..n {
            let (aic, ajc) = (a[i][col].clone(), a[j][col].clone());
            a[i][col] = round(&(&c * &aic - &s * &ajc));
            a[j][col] = round(&(&s * &aic + &c * &ajc));
        }
        for r in 0..n {
            let (vri, vrj) = (v[r][i].clone(), v[r][j].clone());
            v[r][i] = round(&(&c * &vri - &s * &vrj));
            v[r][j] = round(&(&s * &vri + &c * &vrj));
        }
    }
    let mut min_col = 0usize;
    for i in 1..n {
        if a[i][i] < a[min_col][min_col] {
            min_col = i;
        }
    }
    (0..n).map(|r| v[r][min_col].clone()).collect()
}

/// Certified semidefiniteness of the matrix with entries `sqrt(beta_{k+i+j})`.
///
/// Indefinite verdicts always carry an exactly verified witness. A matrix for
/// which no witness is found within the precision ladder is reported positive
/// semidefinite; exact positivity certification for such matrices comes from
/// the measure route in the Aluthge layer.
#[doc(hidden)]
pub fn is_psd_sqrt(beta: &[BigRational], n: usize, k: usize) -> PsdCertificate {
    is_psd_sqrt_cached(beta, n, k, &mut SqrtCache::default())
}

fn is_psd_sqrt_cached(
    beta: &[BigRational],
    n: usize,
    k: usize,
    cache: &mut SqrtCache,
) -> PsdCertificate {
    let verify = |x: &[BigRational]| -> Option<PsdCertificate> {
        if x.iter().all(|c| c.is_zero()) {
            return None;
        }
        let coeffs = hankel_form_coeffs(x, k);
        if sqrt_combination_sign(beta, &coeffs) == Some(-1) {
            let value = sqrt_form_value(beta, &coeffs);
            Some(PsdCertificate {
                verdict: PsdVerdict::Indefinite,
                pivots: None,
                witness: Some(PsdWitness {
                    vector: x.iter().cloned().map(Scalar::Exact).collect(),
                    value,
                }),
            })
        } else {
            None
        }
    };

    let last_bits = *SQRT_PSD_BITS.last().unwrap();
    for &bits in &SQRT_PSD_BITS {
        // Interval entries of M_n(k).
        let entries: Vec<Vec<RatInterval>> = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|j| cache.get(beta, k + i + j, bits))
                    .collect()
            })
            .collect();
        let mut a = entries.clone();
        let mut active: Vec<usize> = (0..=n).collect();
        let mut steps: Vec<ElimStep<BigRational>> = Vec::new();
        let mut certified_pd = true;
        let mut candidates: Vec<Vec<BigRational>> = Vec::new();
        'elim: loop {
            if active.is_empty() {
                break;
            }
            if let Some(&i) = active.iter().find(|&&i| a[i][i].strictly_negative()) {
                let reduced = [(i, BigRational::from_integer(1.into()))];
                candidates.push(lift_witness(n + 1, &steps, &reduced));
                certified_pd = false;
                break 'elim;
            }
            if let Some(p) = active
                .iter()
                .copied()
                .find(|&p| a[p][p].strictly_positive())
            {
                let d = a[p][p].clone();
                let others: Vec<usize> = active.iter().copied().filter(|&j| j != p).collect();
                let coeffs: Vec<(usize, BigRational)> = others
                    .iter()
                    .map(|&j| (j, a[p][j].div(&d, bits).mid()))
                    .collect();
                for &i in &others {
                    for &j in &others {
                        let delta = a[i][p].mul(&a[p][j], bits).div(&d, bits);
                        a[i][j] = a[i][j].sub(&delta, bits);
                    }
                }
                steps.push(ElimStep { pivot: p, coeffs });
                active.retain(|&j| j != p);
                continue;
            }
            // Remaining diagonals straddle zero. Strictly-signed off-diagonal
            // entries give two-point witness candidates; otherwise borderline.
            certified_pd = active.iter().all(|&i| a[i][i].is_zero_point());
            for (&i, &j) in active
                .iter()
                .flat_map(|i| active.iter().map(move |j| (i, j)))
            {
                if i < j && !a[i][j].contains_zero() {
                    let sign = if a[i][j].strictly_positive() { -1 } else { 1 };
                    let reduced = [
                        (i, BigRational::from_integer(1.into())),
                        (j, BigRational::from_integer(sign.into())),
                    ];
                    candidates.push(lift_witness(n + 1, &steps, &reduced));
                    certified_pd = false;
                }
            }
            break 'elim;
        }
        if certified_pd && candidates.is_empty() {
            return PsdCertificate {
                verdict: PsdVerdict::PositiveSemidefinite,
                pivots: None,
                witness: None,
            };
        }
        for x in &candidates {
            if let Some(cert) = verify(x) {
                return cert;
            }
        }
        // Eigenvector candidates: f64 first, then a high-precision Jacobi.
        let mid_f64 =
            DMatrix::from_fn(n + 1, n + 1, |i, j| entries[i][j].mid_f64());
        let eig = mid_f64.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[x]
                .partial_cmp(&eig.eigenvalues[y])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for &idx in order.iter().take(2) {
            let x: Vec<BigRational> = eig
                .eigenvectors
                .column(idx)
                .iter()
                .map(|&v| {
                    BigRational::from_f64_approx(v)
                })
                .collect();
            if let Some(cert) = verify(&x) {
                return cert;
            }
        }
        if bits == last_bits {
            let mids: Vec<Vec<BigRational>> = (0..=n)
                .map(|i| (0..=n).map(|j| entries[i][j].mid()).collect())
                .collect();
            let x = jacobi_min_eigvec(&mids, 256);
            if let Some(cert) = verify(&x) {
                return cert;
            }
        }
    }
    PsdCertificate {
        verdict: PsdVerdict::PositiveSemidefinite,
        pivots: None,
        witness: None,
    }
}

trait F64Approx {
    fn from_f64_approx(v: f64) -> Self;
}

impl F64Approx for BigRational {
    /// Dyadic rounding of an f64 at 48 fractional bits.
    fn from_f64_approx(v: f64) -> BigRational {
        if !v.is_finite() {
            return BigRational::zero();
        }
        let scale = (1u64 << 48) as f64;
        let num = (v * scale).round() as i64;
        BigRational::new(num.into(), (1i64 << 48).into())
    }
}

// ---------------------------------------------------------------------------
// Properties H(n), H~(n) and the classification report.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropertyKind {
    H,
    HTilde,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstFailure {
    pub property: PropertyKind,
    pub n: usize,
    pub k: usize,
    pub witness: PsdCertificate,
}

/// Truncated verdicts for `H(n)` and `H~(n)` up to `max_n` at a moment
/// horizon, with the first failing block witnessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub horizon: usize,
    pub max_n: usize,
    pub h_results: BTreeMap<usize, bool>,
    pub h_tilde_results: BTreeMap<usize, bool>,
    pub subnormal_truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<FirstFailure>,
}

impl ClassificationReport {
    /// All even-offset blocks positive: Hamburger type up to the horizon.
    pub fn hamburger_truncated(&self) -> bool {
        self.h_results.values().all(|&b| b)
    }
}

enum BlockTester<'a> {
    Scalars(&'a [Scalar], Mode),
    SqrtSquares(&'a [BigRational], SqrtCache),
}

impl BlockTester<'_> {
    fn available(&self) -> usize {
        match self {
            BlockTester::Scalars(g, _) => g.len(),
            BlockTester::SqrtSquares(b, _) => b.len(),
        }
    }

    fn test(&mut self, n: usize, k: usize) -> Result<PsdCertificate> {
        match self {
            BlockTester::Scalars(g, mode) => is_psd(&hankel(g, n, k)?, *mode),
            BlockTester::SqrtSquares(beta, cache) => Ok(is_psd_sqrt_cached(beta, n, k, cache)),
        }
    }
}

fn classify_impl(
    mut tester: BlockTester<'_>,
    max_n: usize,
    horizon: usize,
) -> Result<ClassificationReport> {
    if max_n == 0 {
        return Err(Error::Precondition("max_n must be >= 1".into()));
    }
    if horizon < 2 * max_n {
        return Err(Error::Precondition(format!(
            "horizon {horizon} < 2 * max_n = {}",
            2 * max_n
        )));
    }
    if tester.available() <= horizon {
        return Err(Error::InsufficientMoments {
            needed: horizon,
            available: tester.available().saturating_sub(1),
        });
    }
    let mut h_results = BTreeMap::new();
    let mut h_tilde_results = BTreeMap::new();
    let mut first_failure: Option<FirstFailure> = None;
    for n in 1..=max_n {
        let mut h_ok = true;
        let mut ht_ok = true;
        for k in 0..=(horizon - 2 * n) {
            let cert = tester.test(n, k)?;
            if cert.is_psd() {
                continue;
            }
            if k % 2 == 0 {
                h_ok = false;
            } else {
                ht_ok = false;
            }
            if first_failure.is_none() {
                first_failure = Some(FirstFailure {
                    property: if k % 2 == 0 {
                        PropertyKind::H
                    } else {
                        PropertyKind::HTilde
                    },
                    n,
                    k,
                    witness: cert,
                });
            }
        }
        h_results.insert(n, h_ok);
        h_tilde_results.insert(n, ht_ok);
    }
    let subnormal_truncated =
        h_results.values().all(|&b| b) && h_tilde_results.values().all(|&b| b);
    Ok(ClassificationReport {
        horizon,
        max_n,
        h_results,
        h_tilde_results,
        subnormal_truncated,
        first_failure,
    })
}

/// `H(n)` at the horizon: `M_n(k) >= 0` for every even `k` with `k + 2n <= horizon`.
pub fn property_h(gamma: &[Scalar], n: usize, horizon: usize, mode: Mode) -> Result<bool> {
    property_parity(gamma, n, horizon, mode, 0)
}

/// `H~(n)`: odd offsets.
pub fn property_h_tilde(gamma: &[Scalar], n: usize, horizon: usize, mode: Mode) -> Result<bool> {
    property_parity(gamma, n, horizon, mode, 1)
}

fn property_parity(
    gamma: &[Scalar],
    n: usize,
    horizon: usize,
    mode: Mode,
    parity: usize,
) -> Result<bool> {
    if horizon < 2 * n {
        return Err(Error::Precondition(format!(
            "horizon {horizon} < 2n = {}",
            2 * n
        )));
    }
    if gamma.len() <= horizon {
        return Err(Error::InsufficientMoments {
            needed: horizon,
            available: gamma.len().saturating_sub(1),
        });
    }
    for k in (parity..=(horizon - 2 * n)).step_by(2) {
        if !is_psd(&hankel(gamma, n, k)?, mode)?.is_psd() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Aggregated truncated classification of a moment sequence.
pub fn classify(
    gamma: &[Scalar],
    max_n: usize,
    horizon: usize,
    mode: Mode,
) -> Result<ClassificationReport> {
    classify_impl(BlockTester::Scalars(gamma, mode), max_n, horizon)
}

/// Classification of the sequence `m -> sqrt(beta_m)` given the exact squares
/// `beta_m` (certified-witness layer; see [`is_psd_sqrt`]).
pub fn classify_sqrt_squares(
    beta: &[BigRational],
    max_n: usize,
    horizon: usize,
) -> Result<ClassificationReport> {
    classify_impl(BlockTester::SqrtSquares(beta, SqrtCache::default()), max_n, horizon)
}

// ---------------------------------------------------------------------------
// Recursion extraction from a positive Hankel block.
// ---------------------------------------------------------------------------

/// Expresses the trailing column of `M_n(k)` through earlier columns and
/// reduces to the minimal order that regenerates the whole window; `None`
/// when the last column is outside the span.
///
/// Precondition: `M_n(k) >= 0` (exact mode).
pub fn extract_recursion(
    gamma: &[Scalar],
    n: usize,
    k: usize,
) -> Result<Option<RecursionSpec>> {
    let m = hankel(gamma, n, k)?;
    let cert = is_psd(&m, Mode::Exact)?;
    if !cert.is_psd() {
        return Err(Error::Precondition(format!(
            "M_{n}({k}) is not positive semidefinite"
        )));
    }
    for order in 1..=n {
        // Solve [col_0 .. col_{order-1}] b = col_order over all n+1 rows.
        let a: Vec<Vec<Scalar>> = (0..=n)
            .map(|i| (0..order).map(|c| gamma[k + i + c].clone()).collect())
            .collect();
        let b: Vec<Scalar> = (0..=n).map(|i| gamma[k + i + order].clone()).collect();
        let Some(coeffs_cols) = crate::linalg::solve(&a, &b)?.particular().cloned() else {
            continue;
        };
        // Window propagation: the relation must regenerate every entry of the
        // window, i.e. gamma_{k+t} = sum_c b_c gamma_{k+t-order+c} for all
        // t in [order, 2n].
        let ok = (order..=2 * n).all(|t| {
            let mut acc = Scalar::zero();
            for (c, bc) in coeffs_cols.iter().enumerate() {
                acc = &acc + &(bc * &gamma[k + t - order + c]);
            }
            acc == gamma[k + t]
        });
        if !ok {
            continue;
        }
        let coeffs: Vec<Scalar> = coeffs_cols.into_iter().rev().collect();
        let initial: Vec<Scalar> = gamma[k..k + order].to_vec();
        return Ok(Some(RecursionSpec::new(coeffs, initial)?));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn seq(vals: &[(i64, i64)]) -> Vec<Scalar> {
        vals.iter().map(|&(n, d)| sc(n, d)).collect()
    }

    #[test]
    fn hankel_read_off() {
        let g = seq(&[(1, 1), (1, 4), (3, 4)]);
        let m = hankel(&g, 1, 0).unwrap();
        assert_eq!(
            m.entries,
            vec![vec![sc(1, 1), sc(1, 4)], vec![sc(1, 4), sc(3, 4)]]
        );
        let g = seq(&[(1, 1), (1, 4), (3, 4), (1, 4)]);
        let m = hankel(&g, 1, 1).unwrap();
        assert_eq!(
            m.entries,
            vec![vec![sc(1, 4), sc(3, 4)], vec![sc(3, 4), sc(1, 4)]]
        );
        assert!(hankel(&g, 2, 0).is_err());
    }

    #[test]
    fn rank_one_flat_block_is_psd() {
        let g = seq(&[(1, 1), (1, 1), (1, 1)]);
        let m = hankel(&g, 1, 0).unwrap();
        let cert = is_psd(&m, Mode::Exact).unwrap();
        assert!(cert.is_psd());
        assert_eq!(cert.pivots, Some(vec![sc(1, 1)]));
    }

    #[test]
    fn indefinite_block_with_witness() {
        // [[1/4, 3/4], [3/4, 1/4]]: the direct evaluation x = (1, -1) gives -1.
        let g = seq(&[(0, 1), (1, 4), (3, 4), (1, 4)]);
        let m = hankel(&g, 1, 1).unwrap();
        let mat = rational_entries(&m.entries).unwrap();
        let one = BigRational::from_integer(1.into());
        assert_eq!(
            quad_form(&mat, &[one.clone(), -one]),
            BigRational::from_integer((-1).into())
        );
        let cert = is_psd(&m, Mode::Exact).unwrap();
        assert_eq!(cert.verdict, PsdVerdict::Indefinite);
        // the reported witness reproduces its stated strictly negative value
        let w = cert.witness.unwrap();
        assert!(w.value.is_negative());
        let xs: Vec<BigRational> = w.vector.iter().map(|s| s.as_rational().unwrap()).collect();
        assert_eq!(quad_form(&mat, &xs), w.value.as_rational().unwrap());
    }

    #[test]
    fn psd_with_positive_pivots() {
        // [[1, 1/4], [1/4, 3/4]]: pivots 1, 11/16.
        let g = seq(&[(1, 1), (1, 4), (3, 4)]);
        let m = hankel(&g, 1, 0).unwrap();
        let cert = is_psd(&m, Mode::Exact).unwrap();
        assert!(cert.is_psd());
        assert_eq!(cert.pivots, Some(vec![sc(1, 1), sc(11, 16)]));
    }

    #[test]
    fn zero_diagonal_rule() {
        // [[0, 1], [1, 0]] embedded as a Hankel block of (0, 1, 0).
        let g = seq(&[(0, 1), (1, 1), (0, 1)]);
        let m = hankel(&g, 1, 0).unwrap();
        let cert = is_psd(&m, Mode::Exact).unwrap();
        assert_eq!(cert.verdict, PsdVerdict::Indefinite);
        assert!(cert.witness.unwrap().value.is_negative());
        // all-zero block is fine
        let g = seq(&[(0, 1), (0, 1), (0, 1)]);
        let m = hankel(&g, 1, 0).unwrap();
        assert!(is_psd(&m, Mode::Exact).unwrap().is_psd());
    }

    #[test]
    fn exact_and_approx_agree_on_clear_cases() {
        let g = seq(&[(1, 1), (1, 4), (3, 4), (1, 4), (3, 4)]);
        for (n, k) in [(1usize, 0usize), (1, 1), (1, 2), (2, 0)] {
            let m = hankel(&g, n, k).unwrap();
            let e = is_psd(&m, Mode::Exact).unwrap().is_psd();
            let a = is_psd(&m, Mode::approx_default()).unwrap().is_psd();
            assert_eq!(e, a, "disagreement at ({n}, {k})");
        }
    }

    /// Moments of 1/4 d_{-1} + 1/4 d_0 + 1/2 d_1: (1, 1/4, 3/4, 1/4, 3/4, ...).
    fn three_atom_moments(len: usize) -> Vec<Scalar> {
        (0..len)
            .map(|k| {
                if k == 0 {
                    sc(1, 1)
                } else if k % 2 == 0 {
                    sc(3, 4)
                } else {
                    sc(1, 4)
                }
            })
            .collect()
    }

    #[test]
    fn three_atom_measure_has_h_but_not_h_tilde() {
        let g = three_atom_moments(13);
        assert!(property_h(&g, 3, 12, Mode::Exact).unwrap());
        assert!(!property_h_tilde(&g, 1, 4, Mode::Exact).unwrap());
        let report = classify(&g, 3, 12, Mode::Exact).unwrap();
        assert!(report.hamburger_truncated());
        assert!(!report.subnormal_truncated);
        let ff = report.first_failure.unwrap();
        assert_eq!((ff.property, ff.n, ff.k), (PropertyKind::HTilde, 1, 1));
    }

    #[test]
    fn flat_sequence_is_subnormal_truncated() {
        let g = vec![sc(1, 1); 13];
        let report = classify(&g, 3, 12, Mode::Exact).unwrap();
        assert!(report.subnormal_truncated);
        assert!(report.first_failure.is_none());
    }

    #[test]
    fn h_fails_on_deficient_determinant() {
        // det M_1(0) = gamma_2 - gamma_1^2 = 1/2 - 1 < 0
        let g = seq(&[(1, 1), (1, 1), (1, 2)]);
        assert!(!property_h(&g, 1, 2, Mode::Exact).unwrap());
        assert!(property_h(&g, 1, 1, Mode::Exact).is_err());
    }

    #[test]
    fn stieltjes_measure_has_both_properties() {
        // mu = 1/2 d_1 + 1/2 d_2: gamma_k = (1 + 2^k)/2
        let g: Vec<Scalar> = (0..=8)
            .map(|k| (Scalar::ratio(1, 2) * (Scalar::one() + Scalar::from_int(1 << k))))
            .collect();
        assert!(property_h(&g, 2, 8, Mode::Exact).unwrap());
        assert!(property_h_tilde(&g, 2, 8, Mode::Exact).unwrap());
    }

    #[test]
    fn extract_recursion_period_two() {
        let g = three_atom_moments(7);
        let spec = extract_recursion(&g, 3, 0).unwrap().unwrap();
        assert_eq!(spec.coeffs, vec![sc(0, 1), sc(1, 1), sc(0, 1)]);
        assert_eq!(spec.initial, vec![sc(1, 1), sc(1, 4), sc(3, 4)]);
    }

    #[test]
    fn extract_recursion_rank_reduction() {
        let g = vec![sc(1, 1); 5];
        let spec = extract_recursion(&g, 2, 0).unwrap().unwrap();
        assert_eq!(spec.coeffs, vec![sc(1, 1)]);
    }

    #[test]
    fn extract_recursion_full_rank_returns_none() {
        // four distinct atoms -> M_3(0) has full rank, last column independent
        let atoms: Vec<(Scalar, Scalar)> = vec![
            (sc(-1, 1), sc(1, 4)),
            (sc(1, 2), sc(1, 4)),
            (sc(1, 1), sc(1, 4)),
            (sc(2, 1), sc(1, 4)),
        ];
        let g: Vec<Scalar> = (0..=6)
            .map(|k| {
                atoms.iter().fold(Scalar::zero(), |acc, (l, d)| {
                    &acc + &(d * &l.pow(k))
                })
            })
            .collect();
        assert_eq!(extract_recursion(&g, 3, 0).unwrap(), None);
    }

    #[test]
    fn extract_recursion_requires_psd() {
        let g = seq(&[(1, 1), (1, 1), (1, 2), (1, 4), (1, 8)]);
        assert!(matches!(
            extract_recursion(&g, 2, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn window_propagation_guard() {
        // (1,1,1,1,2): col_1 = col_0 but the relation breaks at the corner,
        // and the last column is outside the span.
        let g = seq(&[(1, 1), (1, 1), (1, 1), (1, 1), (2, 1)]);
        let m = hankel(&g, 2, 0).unwrap();
        assert!(is_psd(&m, Mode::Exact).unwrap().is_psd());
        assert_eq!(extract_recursion(&g, 2, 0).unwrap(), None);
    }

    #[test]
    fn certified_sqrt_layer_flat_case() {
        // beta_m = 1: matrix of ones, PSD at every block.
        let beta: Vec<BigRational> = vec![BigRational::from_integer(1.into()); 9];
        let report = classify_sqrt_squares(&beta, 2, 8).unwrap();
        assert!(report.subnormal_truncated);
    }

    #[test]
    fn certified_sqrt_layer_detects_failure() {
        // beta = squares of (1, 1, 1/2, ...): sqrt-sequence (1, 1, 1/sqrt(2)):
        // det M_1(0) = 1/sqrt(2) - 1 < 0.
        let beta: Vec<BigRational> = vec![
            BigRational::from_integer(1.into()),
            BigRational::from_integer(1.into()),
            BigRational::new(1.into(), 2.into()),
            BigRational::new(1.into(), 4.into()),
            BigRational::new(1.into(), 8.into()),
        ];
        let cert = is_psd_sqrt(&beta, 1, 0);
        assert_eq!(cert.verdict, PsdVerdict::Indefinite);
        let w = cert.witness.unwrap();
        assert!(w.value.is_negative());
        assert!(w.vector.iter().all(|s| s.is_exact()));
    }

    #[test]
    fn certified_sqrt_layer_tiny_margin() {
        // A nearly-PSD matrix: beta chosen so the sqrt sequence is log-convex
        // except for a 1e-20 defect at one entry.
        let mut beta: Vec<BigRational> = (0..5)
            .map(|m| BigRational::from_integer(num_bigint::BigInt::from(1i64 << m)))
            .collect();
        // shrink beta_2 by a relative 1e-20: still strictly indefinite
        let eps = BigRational::new(1.into(), num_bigint::BigInt::from(10u64).pow(20));
        beta[2] = &beta[2] * (BigRational::from_integer(1.into()) - &eps);
        // sequence sqrt(beta): geometric except defect -> M_1(0..2) nearly singular
        let cert = is_psd_sqrt(&beta, 1, 0);
        assert_eq!(cert.verdict, PsdVerdict::Indefinite);
    }
}
