//! k-jumping flatness: detection, the type I/II dichotomy, classic flatness
//! implications, and the constructive propagation procedure.
//!
//! `propagate` replays the propagation proof on concrete data rather than
//! proving it: every intermediate object (the Smul'jan recursion at the even
//! base offset, the recursive extension, the recovered three-atom measure,
//! the weight-equality chains) is materialized and checked exactly, and any
//! broken step surfaces as a structured error naming the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{extract_recursion, hankel, is_psd};
use crate::model::{AtomicCharge, MomentSequence, RecursionSpec};
use crate::recursion::{recover_charge, Polynomial};
use crate::scalar::{Mode, Scalar};

/// True iff `alpha_n = alpha_{n+k}` (as squared weights, exactly) for every
/// `n >= 1` with both weights inside the horizon.
pub fn detect_k_jumping(
    w: &crate::model::WeightSequence,
    k: usize,
    horizon: usize,
) -> Result<bool> {
    if k == 0 {
        return Err(Error::Precondition("jump size k must be >= 1".into()));
    }
    if horizon < k + 2 {
        return Err(Error::Precondition(format!(
            "horizon {horizon} too small: need at least {} weights for one comparison",
            k + 2
        )));
    }
    for n in 1..=(horizon - 1 - k) {
        if w.weight_sq(n)? != w.weight_sq(n + k)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpingType {
    TypeI,
    TypeII,
    NotJumping,
}

/// 2-jumping dichotomy: type I iff `alpha_0 < alpha_2`, type II iff
/// `alpha_0 = alpha_2`. The case `alpha_0 > alpha_2` under 2-jumping falls
/// outside the dichotomy and is reported as an error rather than forced into
/// a class.
pub fn jumping_type(w: &crate::model::WeightSequence, horizon: usize) -> Result<JumpingType> {
    if !detect_k_jumping(w, 2, horizon)? {
        return Ok(JumpingType::NotJumping);
    }
    let a0 = w.weight_sq(0)?;
    let a2 = w.weight_sq(2)?;
    if a0 < a2 {
        Ok(JumpingType::TypeI)
    } else if a0 == a2 {
        Ok(JumpingType::TypeII)
    } else {
        Err(Error::ShapeMismatch(
            "2-jumping with alpha_0 > alpha_2: outside the type I/II dichotomy".into(),
        ))
    }
}

/// Generating polynomial of a 2-jumping shift, `p^2 = alpha_1^2 alpha_2^2`:
/// `X(X-p)(X+p)` for type I, `(X-p)(X+p)` for type II. Generating, not
/// necessarily minimal (a flat shift degenerates to minimal degree 1).
pub fn jumping_charpoly(
    w: &crate::model::WeightSequence,
    horizon: usize,
) -> Result<Polynomial> {
    let p_sq = &w.weight_sq(1)? * &w.weight_sq(2)?;
    match jumping_type(w, horizon)? {
        JumpingType::TypeI => Polynomial::new(vec![
            Scalar::zero(),
            -&p_sq,
            Scalar::zero(),
            Scalar::one(),
        ]),
        JumpingType::TypeII => Polynomial::new(vec![-&p_sq, Scalar::zero(), Scalar::one()]),
        JumpingType::NotJumping => Err(Error::Precondition(
            "shift does not have the 2-jumping property".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicHypothesis {
    /// Subnormality (truncated: both Hankel families positive at the horizon).
    Subnormal,
    /// Properties H(2) and H~(2).
    H2H2Tilde,
    /// Property H(3).
    H3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicFlatnessOutcome {
    /// Index of the equal consecutive pair that triggered the check.
    pub n0: usize,
    pub hypothesis_held: bool,
    /// Flatness of `alpha_1 = alpha_2 = ...` over the horizon; only checked
    /// when the hypothesis held.
    pub conclusion_flat: Option<bool>,
}

impl ClassicFlatnessOutcome {
    /// Truth of the implication "hypothesis => flat" on this instance.
    pub fn confirmed(&self) -> bool {
        !self.hypothesis_held || self.conclusion_flat == Some(true)
    }
}

/// Instance check of the classic flatness implications: given two equal
/// consecutive weights `alpha_{n0} = alpha_{n0+1}` (`n0 >= 1`), a shift
/// satisfying the chosen hypothesis must be flat from index 1.
pub fn classic_flatness_check(
    w: &crate::model::WeightSequence,
    which: ClassicHypothesis,
    horizon: usize,
) -> Result<ClassicFlatnessOutcome> {
    let n0 = (1..horizon.saturating_sub(1))
        .find(|&n| {
            matches!((w.weight_sq(n), w.weight_sq(n + 1)), (Ok(a), Ok(b)) if a == b)
        })
        .ok_or_else(|| {
            Error::Precondition("no equal consecutive pair alpha_n0 = alpha_n0+1 found".into())
        })?;
    let gamma = w.moments(horizon)?;
    let hypothesis_held = match which {
        ClassicHypothesis::Subnormal => {
            let max_n = (horizon / 2).max(1);
            crate::hankel::classify(&gamma, max_n, horizon, Mode::Exact)?.subnormal_truncated
        }
        ClassicHypothesis::H2H2Tilde => {
            crate::hankel::property_h(&gamma, 2, horizon, Mode::Exact)?
                && crate::hankel::property_h_tilde(&gamma, 2, horizon, Mode::Exact)?
        }
        ClassicHypothesis::H3 => crate::hankel::property_h(&gamma, 3, horizon, Mode::Exact)?,
    };
    let conclusion_flat = if hypothesis_held {
        let first = w.weight_sq(1)?;
        let mut flat = true;
        for n in 2..horizon.saturating_sub(1) {
            match w.weight_sq(n) {
                Ok(v) => {
                    if v != first {
                        flat = false;
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        Some(flat)
    } else {
        None
    };
    Ok(ClassicFlatnessOutcome {
        n0,
        hypothesis_held,
        conclusion_flat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityConclusion {
    SubnormalFlat,
    Hamburger2Jumping,
}

/// Parity dichotomy of the propagation theorem: odd `k` forces subnormality
/// and flatness, even `k` forces Hamburger type and 2-jumping flatness.
pub fn parity_classification(k: usize) -> Result<ParityConclusion> {
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    Ok(if k % 2 == 1 {
        ParityConclusion::SubnormalFlat
    } else {
        ParityConclusion::Hamburger2Jumping
    })
}

/// Instance check of the extension lemma: if `M_{r-1}(2 n0) >= 0` for the
/// recursion-generated sequence then every `M_n(2m)` reachable by the
/// lemma's order-up/offset-out iteration inside the horizon is positive
/// semidefinite. A vacuously true instance (seed block not positive) returns
/// `true`.
pub fn lemma_extension_check(
    spec: &RecursionSpec,
    n0: usize,
    horizon: usize,
) -> Result<bool> {
    let r = spec.order();
    if r < 1 {
        return Err(Error::InvalidRecursion("order must be >= 1".into()));
    }
    let gamma = spec.generate(horizon);
    let seed_n = r.saturating_sub(1).max(1);
    let seed_k = 2 * n0;
    if seed_k + 2 * seed_n > horizon {
        return Err(Error::Precondition(format!(
            "horizon {horizon} cannot hold the seed block M_{seed_n}({seed_k})"
        )));
    }
    if !is_psd(&hankel(&gamma, seed_n, seed_k)?, Mode::Exact)?.is_psd() {
        return Ok(true);
    }
    let mut t = 1usize;
    loop {
        let n = seed_n + t;
        if 2 * n > horizon {
            break;
        }
        let lo = (2 * n0).saturating_sub(2 * t);
        let hi = 2 * n0 + 2 * t;
        let mut any = false;
        for k in (lo..=hi).step_by(2) {
            if k + 2 * n > horizon {
                continue;
            }
            any = true;
            if !is_psd(&hankel(&gamma, n, k)?, Mode::Exact)?.is_psd() {
                return Ok(false);
            }
        }
        if !any {
            break;
        }
        t += 1;
    }
    Ok(true)
}

/// One inner-descent step of the propagation replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerStep {
    /// Base offset `m'_0` of the extraction block.
    pub base_offset: usize,
    pub recursion: RecursionSpec,
    pub measure: AtomicCharge,
    /// Lowest weight index whose jump equality this step certifies.
    pub verified_from: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub k: usize,
    pub n0: usize,
    /// `floor(3k/2) + 1`, the Hankel order of the positivity hypothesis.
    pub property_order: usize,
    /// Even-rounded outer base offset `m_0 = 2 floor(n0/2)`.
    pub outer_offset: usize,
    pub recursion_at_m0: RecursionSpec,
    /// Measure of the recursive extension at the outer window; at most three
    /// atoms located in `{0, lambda, -lambda}`.
    pub recovered_measure: AtomicCharge,
    pub outer_equalities_verified_to: usize,
    pub inner_steps: Vec<InnerStep>,
    pub inner_equalities_verified_from: usize,
    /// Even-rounded and raw variants of the first inner offset.
    pub inner_offset_even: usize,
    pub inner_offset_raw: usize,
    pub parity_conclusion: ParityConclusion,
}

/// Options for [`propagate`]; `raw_inner_offset` selects the literal
/// `(k-1) n'_0` base offset over the even-rounded variant.
#[derive(Debug, Clone, Copy, Default)]
pub struct PropagateOptions {
    pub raw_inner_offset: bool,
}

fn step_err(step: &str, detail: String) -> Error {
    Error::PropagationStep {
        step: step.into(),
        detail,
    }
}

/// Weights as squared ratios of consecutive moments; `gamma` all positive.
fn weight_sq_of(gamma: &[Scalar], n: usize) -> Scalar {
    &gamma[n + 1] / &gamma[n]
}

fn weights_equal(gamma: &[Scalar], a: usize, b: usize) -> bool {
    // alpha_a^2 = alpha_b^2 as the cross product identity
    &gamma[a + 1] * &gamma[b] == &gamma[b + 1] * &gamma[a]
}

/// Shape check: a measure with at most three atoms in `{0, lambda, -lambda}`
/// for a single `lambda > 0`; odd jumps forbid the `-lambda` atom.
fn check_measure_shape(mu: &AtomicCharge, jump: usize, step: &str) -> Result<Scalar> {
    if !mu.is_measure() {
        return Err(step_err(
            step,
            "recovered charge has a negative density".into(),
        ));
    }
    let positives: Vec<&Scalar> = mu
        .atoms()
        .iter()
        .map(|a| &a.loc)
        .filter(|l| l.is_positive())
        .collect();
    if positives.len() != 1 {
        return Err(step_err(
            step,
            format!(
                "expected exactly one positive atom location, found {}",
                positives.len()
            ),
        ));
    }
    let lambda = positives[0].clone();
    for a in mu.atoms() {
        let ok = a.loc.is_zero()
            || a.loc == lambda
            || (jump % 2 == 0 && a.loc == -&lambda);
        if !ok {
            return Err(step_err(
                step,
                format!("atom at {} outside {{0, lambda, -lambda}}", a.loc),
            ));
        }
    }
    Ok(lambda)
}

/// Extraction + extension + recovery at base offset `m0` with Hankel order
/// `s`; verifies the window agreement and the measure shape.
fn window_step(
    gamma: &[Scalar],
    m0: usize,
    s: usize,
    jump: usize,
    horizon: usize,
    step: &str,
) -> Result<(RecursionSpec, AtomicCharge)> {
    let spec = extract_recursion(gamma, s, m0)
        .map_err(|e| step_err(step, format!("extraction failed: {e}")))?
        .ok_or_else(|| {
            step_err(
                step,
                format!("recursion not extractable from M_{s}({m0})"),
            )
        })?;
    let tau = spec.generate(horizon - m0);
    let window_end = (2 * s).min(horizon - m0);
    for (i, t) in tau.iter().enumerate().take(window_end + 1) {
        if *t != gamma[m0 + i] {
            return Err(step_err(
                step,
                format!("recursive extension disagrees with data at index {}", m0 + i),
            ));
        }
    }
    let mu = recover_charge(&tau)
        .map_err(|e| step_err(step, format!("measure recovery failed: {e}")))?
        .ok_or_else(|| step_err(step, "no atomic measure for the extension".into()))?;
    check_measure_shape(&mu, jump, step)?;
    Ok((spec, mu))
}

/// Constructive replay of the k-jumping propagation on a concrete moment
/// sequence: positivity gate, hypothesis equalities, outer extraction and
/// chain, inner descent to index 1, parity conclusion.
pub fn propagate(
    g: &MomentSequence,
    k: usize,
    n0: usize,
    horizon: usize,
    opts: PropagateOptions,
) -> Result<PropagationReport> {
    if k == 0 || n0 == 0 {
        return Err(Error::Precondition("k >= 1 and n0 >= 1 required".into()));
    }
    let s = (3 * k) / 2 + 1;
    let needed = 2 * s + n0.max(k * n0.div_ceil(k)) + 2 * k;
    if horizon < needed {
        return Err(Error::Precondition(format!(
            "horizon {horizon} < required {needed} for k={k}, n0={n0}"
        )));
    }
    if g.len() <= horizon {
        return Err(Error::InsufficientMoments {
            needed: horizon,
            available: g.len().saturating_sub(1),
        });
    }
    let gamma = &g.gamma[..=horizon];
    if let Some(i) = gamma.iter().position(|x| !x.is_positive()) {
        return Err(Error::NonPositiveMoment { index: i });
    }

    // positivity gate: H(s) over even offsets within the horizon
    for off in (0..=(horizon - 2 * s)).step_by(2) {
        if !is_psd(&hankel(gamma, s, off)?, Mode::Exact)?.is_psd() {
            return Err(Error::Precondition(format!(
                "property H({s}) fails: M_{s}({off}) is not positive semidefinite"
            )));
        }
    }

    // hypothesis block: alpha_{n0+j} = alpha_{n0+k+j}
    for j in 0..k {
        if !weights_equal(gamma, n0 + j, n0 + k + j) {
            return Err(Error::Precondition(format!(
                "hypothesis fails: alpha_{} != alpha_{}",
                n0 + j,
                n0 + k + j
            )));
        }
    }
    // induced identity gamma_{n0} gamma_{n0+2k} = gamma_{n0+k}^2
    if &gamma[n0] * &gamma[n0 + 2 * k] != &gamma[n0 + k] * &gamma[n0 + k] {
        return Err(step_err(
            "hypothesis-identity",
            format!("gamma_{n0} gamma_{} != gamma_{}^2", n0 + 2 * k, n0 + k),
        ));
    }

    // outer pass
    let m0 = 2 * (n0 / 2);
    let (recursion_at_m0, recovered_measure) =
        window_step(gamma, m0, s, k, horizon, "outer-extraction")?;
    if k % 2 == 1 {
        // odd k: no atom at -lambda
        if recovered_measure.atoms().iter().any(|a| a.loc.is_negative()) {
            return Err(step_err(
                "outer-measure-shape",
                "odd k but the recovered measure carries a negative atom".into(),
            ));
        }
    }
    let outer_to = horizon - 1 - k;
    for n in n0..=outer_to {
        if !weights_equal(gamma, n, n + k) {
            return Err(step_err(
                "outer-chain",
                format!("alpha_{n} != alpha_{} breaks the jump chain", n + k),
            ));
        }
    }

    // inner descent with the parity-reduced jump
    let jump = if k % 2 == 1 { 1 } else { 2 };
    let s_inner = (3 * jump) / 2 + 1;
    let mut inner_steps = Vec::new();
    let mut covered = n0;
    let mut first_offsets: Option<(usize, usize)> = None;
    while covered > 1 {
        let n0_prime = covered.div_ceil(jump);
        let raw = (jump - 1) * n0_prime;
        let even = 2 * (raw / 2);
        if first_offsets.is_none() {
            first_offsets = Some((even, raw));
        }
        let base = if opts.raw_inner_offset { raw } else { even };
        let step_name = format!("inner-extraction@{base}");
        let (spec, mu) = window_step(gamma, base, s_inner, jump, horizon, &step_name)?;
        let verified_from = base.max(1);
        for n in verified_from..=(horizon - 1 - jump) {
            if !weights_equal(gamma, n, n + jump) {
                return Err(step_err(
                    &step_name,
                    format!("alpha_{n} != alpha_{} in the inner chain", n + jump),
                ));
            }
        }
        inner_steps.push(InnerStep {
            base_offset: base,
            recursion: spec,
            measure: mu,
            verified_from,
        });
        if verified_from >= covered {
            return Err(step_err(
                &step_name,
                "inner descent made no progress".into(),
            ));
        }
        covered = verified_from;
    }
    let (inner_offset_even, inner_offset_raw) = first_offsets.unwrap_or((0, 0));

    // parity conclusion, verified on the data
    let parity_conclusion = parity_classification(k)?;
    match parity_conclusion {
        ParityConclusion::SubnormalFlat => {
            let first = weight_sq_of(gamma, 1);
            for n in 2..horizon {
                if weight_sq_of(gamma, n) != first {
                    return Err(step_err(
                        "parity-conclusion",
                        format!("odd k but alpha_{n} != alpha_1 (not flat)"),
                    ));
                }
            }
        }
        ParityConclusion::Hamburger2Jumping => {
            for n in 1..=(horizon.saturating_sub(3)) {
                if !weights_equal(gamma, n, n + 2) {
                    return Err(step_err(
                        "parity-conclusion",
                        format!("even k but alpha_{n} != alpha_{} (not 2-jumping)", n + 2),
                    ));
                }
            }
        }
    }
    // the literal k-jumping conclusion, from index 1
    for n in 1..=(horizon - 1 - k) {
        if !weights_equal(gamma, n, n + k) {
            return Err(step_err(
                "k-jumping-conclusion",
                format!("alpha_{n} != alpha_{}", n + k),
            ));
        }
    }

    Ok(PropagationReport {
        k,
        n0,
        property_order: s,
        outer_offset: m0,
        recursion_at_m0,
        recovered_measure,
        outer_equalities_verified_to: outer_to,
        inner_steps,
        inner_equalities_verified_from: 1,
        inner_offset_even,
        inner_offset_raw,
        parity_conclusion,
    })
}
