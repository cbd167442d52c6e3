//! Seeded instance generators and desk-scale verification sweeps.
//!
//! Every generator draws from a `ChaCha8` stream seeded explicitly, so sweeps
//! are bit-reproducible; the drivers here back both the CLI `verify`
//! subcommands and the acceptance suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aluthge::{
    aluthge_classify, fib_obstruction, four_atom_obstruction, shift_of_measure, thm21_predicate,
};
use crate::error::{Error, Result};
use crate::flatness::{parity_classification, propagate, ParityConclusion, PropagateOptions};
use crate::measure::moments_of;
use crate::model::{AtomicCharge, MomentSequence};
use crate::scalar::Scalar;

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_pos_ratio(rng: &mut ChaCha8Rng, max_num: i64, max_den: i64) -> Scalar {
    Scalar::ratio(rng.random_range(1..=max_num), rng.random_range(1..=max_den))
}

/// Charge with the given signed locations and random positive densities
/// normalized to total mass 1.
fn normalized_measure(rng: &mut ChaCha8Rng, locs: &[Scalar]) -> AtomicCharge {
    let raw: Vec<Scalar> = locs.iter().map(|_| rand_pos_ratio(rng, 8, 6)).collect();
    let total = raw.iter().fold(Scalar::zero(), |a, b| &a + b);
    AtomicCharge::new(
        locs.iter()
            .cloned()
            .zip(raw.into_iter().map(|d| &d / &total))
            .collect(),
    )
    .expect("distinct locations")
}

fn moments_positive(mu: &AtomicCharge, horizon: usize) -> bool {
    (1..=horizon).all(|k| mu.moment(k).is_positive())
}

/// Parameter tuple of the three-atom transform test:
/// `mu = a d_{-p} + b d_r + c d_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm21Tuple {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub p: Scalar,
    pub r: Scalar,
    pub q: Scalar,
}

impl Thm21Tuple {
    pub fn charge(&self) -> Result<AtomicCharge> {
        AtomicCharge::new(vec![
            (-&self.p, self.a.clone()),
            (self.r.clone(), self.b.clone()),
            (self.q.clone(), self.c.clone()),
        ])
    }
}

/// Valid tuples (distinct atoms, positive densities summing to 1, moments
/// `gamma_1..gamma_13` positive) with at least `min_true` satisfying
/// `r = 0, p = q`.
pub fn gen_thm21_tuples(rng: &mut ChaCha8Rng, count: usize, min_true: usize) -> Vec<Thm21Tuple> {
    let mut out = Vec::with_capacity(count);
    let mut true_count = 0usize;
    while out.len() < count {
        let remaining = count - out.len();
        let force_true = true_count + remaining <= min_true || rng.random_range(0..100) < 15;
        let p = rand_pos_ratio(rng, 6, 4);
        let (q, r) = if force_true {
            (p.clone(), Scalar::zero())
        } else {
            let q = rand_pos_ratio(rng, 6, 4);
            let bound = p.clone().min(q.clone());
            let t = Scalar::ratio(rng.random_range(-12..=12), 13);
            (q, &t * &bound)
        };
        let is_true = r.is_zero() && p == q;
        if !force_true && is_true {
            continue;
        }
        let locs = [-&p, r.clone(), q.clone()];
        if locs[0] >= locs[1] || locs[1] >= locs[2] {
            continue;
        }
        let mut mu_locs = locs.to_vec();
        mu_locs.sort();
        let mu = normalized_measure(rng, &mu_locs);
        if !moments_positive(&mu, 13) {
            continue;
        }
        let atoms = mu.atoms();
        out.push(Thm21Tuple {
            a: atoms[0].den.clone(),
            b: atoms[1].den.clone(),
            c: atoms[2].den.clone(),
            p: p.clone(),
            r,
            q,
        });
        if is_true {
            true_count += 1;
        }
    }
    out
}

/// Four-atom nonnegative charges with positive moment sequences; roughly a
/// third have all atoms positive (the subnormal branch of the theorem).
pub fn gen_four_atom_measures(rng: &mut ChaCha8Rng, count: usize) -> Vec<AtomicCharge> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let all_positive = rng.random_range(0..3) == 0;
        let mut locs: Vec<Scalar> = Vec::new();
        while locs.len() < 4 {
            let num = rng.random_range(1..=8);
            let den = rng.random_range(1..=5);
            let sign = if all_positive || rng.random_range(0..2) == 0 {
                1
            } else {
                -1
            };
            let l = Scalar::ratio(sign * num, den);
            if !locs.contains(&l) {
                locs.push(l);
            }
        }
        locs.sort();
        if !all_positive && !locs[0].is_negative() {
            continue;
        }
        let mu = normalized_measure(rng, &locs);
        if !moments_positive(&mu, 13) {
            continue;
        }
        out.push(mu);
    }
    out
}

/// Nonnegative charges with a negative atom satisfying the obstruction
/// hypothesis (no product of another atom pair hits the square of a negative
/// atom location).
pub fn gen_fib_instances(rng: &mut ChaCha8Rng, count: usize) -> Vec<AtomicCharge> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n_atoms = rng.random_range(2..=4);
        let mut locs: Vec<Scalar> = Vec::new();
        while locs.len() < n_atoms {
            let num = rng.random_range(1..=8);
            let den = rng.random_range(1..=4);
            let sign = if rng.random_range(0..2) == 0 { 1 } else { -1 };
            let l = Scalar::ratio(sign * num, den);
            if !locs.contains(&l) {
                locs.push(l);
            }
        }
        locs.sort();
        if !locs[0].is_negative() {
            continue;
        }
        let mu = normalized_measure(rng, &locs);
        if !moments_positive(&mu, 13) {
            continue;
        }
        if fib_obstruction(&mu) != Ok(true) {
            continue;
        }
        out.push(mu);
    }
    out
}

/// Valid measures violating the obstruction hypothesis: atoms `-s, s w, s/w`
/// put the product `s^2` exactly on the square of the negative location.
pub fn gen_fib_violators(rng: &mut ChaCha8Rng, count: usize) -> Vec<AtomicCharge> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = rand_pos_ratio(rng, 5, 3);
        let w = rand_pos_ratio(rng, 4, 2);
        if w == Scalar::one() {
            continue;
        }
        let locs = vec![-&s, &s * &w, &s / &w];
        let mut sorted = locs.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != 3 {
            continue;
        }
        let mu = normalized_measure(rng, &sorted);
        if !moments_positive(&mu, 13) {
            continue;
        }
        if fib_obstruction(&mu) != Ok(false) {
            continue;
        }
        out.push(mu);
    }
    out
}

/// Random finitely atomic charges, optionally signed, locations on a small
/// rational grid (zero allowed).
pub fn gen_random_charges(
    rng: &mut ChaCha8Rng,
    count: usize,
    max_atoms: usize,
    signed: bool,
) -> Vec<AtomicCharge> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n_atoms = rng.random_range(1..=max_atoms);
        let mut locs: Vec<Scalar> = Vec::new();
        while locs.len() < n_atoms {
            let num = rng.random_range(0..=9);
            let den = rng.random_range(1..=4);
            let sign = if rng.random_range(0..2) == 0 { 1 } else { -1 };
            let l = Scalar::ratio(sign * num, den);
            if !locs.contains(&l) {
                locs.push(l);
            }
        }
        let atoms: Vec<(Scalar, Scalar)> = locs
            .into_iter()
            .map(|l| {
                let d = rand_pos_ratio(rng, 9, 5);
                let d = if signed && rng.random_range(0..3) == 0 {
                    -&d
                } else {
                    d
                };
                (l, d)
            })
            .collect();
        out.push(AtomicCharge::new(atoms).expect("distinct locations"));
    }
    out
}

/// Planted measure of the propagation shape: `rho_0 d_0 + rho_1 d_lambda`
/// for odd `k`, plus an optional `rho_2 d_{-lambda}` (with `rho_1 > rho_2`)
/// for even `k`; total mass 1.
pub fn gen_planted_jump_measure(rng: &mut ChaCha8Rng, k: usize) -> AtomicCharge {
    let lambda = rand_pos_ratio(rng, 5, 3);
    let with_zero = rng.random_range(0..3) > 0;
    if k % 2 == 1 {
        if with_zero {
            let rho1 = Scalar::ratio(rng.random_range(1..=9), 10);
            let rho0 = &Scalar::one() - &rho1;
            AtomicCharge::new(vec![(Scalar::zero(), rho0), (lambda, rho1)]).unwrap()
        } else {
            AtomicCharge::new(vec![(lambda, Scalar::one())]).unwrap()
        }
    } else {
        // rho_1 > rho_2 > 0 keeps every moment positive
        let rho2 = Scalar::ratio(rng.random_range(1..=3), 12);
        let rho1 = &rho2 + &Scalar::ratio(rng.random_range(1..=4), 12);
        let used = &rho1 + &rho2;
        if with_zero {
            let rho0 = &Scalar::one() - &used;
            AtomicCharge::new(vec![
                (-&lambda, rho2),
                (Scalar::zero(), rho0),
                (lambda, rho1),
            ])
            .unwrap()
        } else {
            // renormalize the two atoms to mass 1
            AtomicCharge::new(vec![(-&lambda, &rho2 / &used), (lambda, &rho1 / &used)])
                .unwrap()
        }
    }
}

// ---------------------------------------------------------------------------
// Sweep drivers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thm21Row {
    pub tuple: Thm21Tuple,
    pub predicate: bool,
    pub subnormal_truncated: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thm21Report {
    pub rows: Vec<Thm21Row>,
    pub all_agree: bool,
}

/// Transform classification vs. the `r = 0, p = q` predicate, row by row.
pub fn run_thm21(tuples: &[Thm21Tuple], max_n: usize, horizon: usize) -> Result<Thm21Report> {
    let mut rows = Vec::with_capacity(tuples.len());
    for t in tuples {
        let mu = t.charge()?;
        let predicate = thm21_predicate(&mu)?;
        let w = shift_of_measure(&mu, horizon + 1)?;
        let res = aluthge_classify(&w, max_n, horizon)?;
        let subnormal_truncated = res.classification.subnormal_truncated;
        rows.push(Thm21Row {
            tuple: t.clone(),
            predicate,
            subnormal_truncated,
            agree: predicate == subnormal_truncated,
        });
    }
    let all_agree = rows.iter().all(|r| r.agree);
    Ok(Thm21Report { rows, all_agree })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionRow {
    pub mu: AtomicCharge,
    /// For the negative-atom sweep: whether the hypothesis held.
    pub hypothesis: Option<bool>,
    /// First failing Hankel block (n, k) of the transform, when one exists.
    pub failing_block: Option<(usize, usize)>,
    pub hamburger_truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub rows: Vec<ObstructionRow>,
    /// Rows asserted by the theorem that indeed lost Hamburger type.
    pub all_failed: bool,
}

/// Four-atom sweep: every transform must lose Hamburger type with a failing
/// block at order `<= max_n`.
pub fn run_four_atoms(
    trials: usize,
    seed: u64,
    max_n: usize,
    horizon: usize,
) -> Result<ObstructionReport> {
    let mut rng = seeded_rng(seed);
    let mus = gen_four_atom_measures(&mut rng, trials);
    let mut rows = Vec::with_capacity(mus.len());
    for mu in &mus {
        four_atom_obstruction(mu)?;
        rows.push(classify_obstruction_row(mu, None, max_n, horizon)?);
    }
    let all_failed = rows.iter().all(|r| !r.hamburger_truncated);
    Ok(ObstructionReport { rows, all_failed })
}

/// Negative-atom sweep: hypothesis-satisfying charges must lose Hamburger
/// type; violators are merely reported.
pub fn run_fib(
    trials: usize,
    violators: usize,
    seed: u64,
    max_n: usize,
    horizon: usize,
) -> Result<ObstructionReport> {
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::new();
    for mu in gen_fib_instances(&mut rng, trials) {
        rows.push(classify_obstruction_row(&mu, Some(true), max_n, horizon)?);
    }
    let all_failed = rows.iter().all(|r| !r.hamburger_truncated);
    for mu in gen_fib_violators(&mut rng, violators) {
        rows.push(classify_obstruction_row(&mu, Some(false), max_n, horizon)?);
    }
    Ok(ObstructionReport { rows, all_failed })
}

fn classify_obstruction_row(
    mu: &AtomicCharge,
    hypothesis: Option<bool>,
    max_n: usize,
    horizon: usize,
) -> Result<ObstructionRow> {
    let w = shift_of_measure(mu, horizon + 1)?;
    let res = aluthge_classify(&w, max_n, horizon)?;
    let failing_block = res
        .classification
        .first_failure
        .as_ref()
        .filter(|f| f.k % 2 == 0)
        .map(|f| (f.n, f.k));
    Ok(ObstructionRow {
        mu: mu.clone(),
        hypothesis,
        failing_block,
        hamburger_truncated: res.classification.hamburger_truncated(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParityRow {
    pub k: usize,
    pub n0: usize,
    pub conclusion: ParityConclusion,
    pub expected: ParityConclusion,
    pub chain_to: usize,
    pub chain_from: usize,
    pub negative_atom: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParityReport {
    pub rows: Vec<ParityRow>,
    pub all_consistent: bool,
}

/// Planted propagation sweep over `k <= k_max`, `n0 <= n0_max`: the replay
/// must succeed with chains through the horizon and the parity conclusion of
/// the final theorem.
pub fn run_parity(
    k_max: usize,
    n0_max: usize,
    instances_per_cell: usize,
    seed: u64,
    min_horizon: usize,
) -> Result<ParityReport> {
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::new();
    for k in 1..=k_max {
        for n0 in 1..=n0_max {
            let s = (3 * k) / 2 + 1;
            let horizon = (2 * s + n0.max(k * n0.div_ceil(k)) + 2 * k).max(min_horizon);
            for _ in 0..instances_per_cell {
                let mu = gen_planted_jump_measure(&mut rng, k);
                let g = MomentSequence::new(moments_of(&mu, horizon))?;
                let report = propagate(&g, k, n0, horizon, PropagateOptions::default())
                    .map_err(|e| {
                        Error::PropagationStep {
                            step: format!("parity sweep k={k} n0={n0}"),
                            detail: e.to_string(),
                        }
                    })?;
                rows.push(ParityRow {
                    k,
                    n0,
                    conclusion: report.parity_conclusion,
                    expected: parity_classification(k)?,
                    chain_to: report.outer_equalities_verified_to,
                    chain_from: report.inner_equalities_verified_from,
                    negative_atom: report
                        .recovered_measure
                        .atoms()
                        .iter()
                        .any(|a| a.loc.is_negative()),
                });
            }
        }
    }
    let all_consistent = rows.iter().all(|r| {
        r.conclusion == r.expected && r.chain_from == 1 && !(r.k % 2 == 1 && r.negative_atom)
    });
    Ok(ParityReport {
        rows,
        all_consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = gen_thm21_tuples(&mut seeded_rng(7), 10, 3);
        let b = gen_thm21_tuples(&mut seeded_rng(7), 10, 3);
        assert_eq!(a, b);
        let c = gen_four_atom_measures(&mut seeded_rng(7), 5);
        let d = gen_four_atom_measures(&mut seeded_rng(7), 5);
        assert_eq!(c, d);
    }

    #[test]
    fn thm21_tuples_are_valid() {
        let tuples = gen_thm21_tuples(&mut seeded_rng(1), 25, 8);
        let true_count = tuples
            .iter()
            .filter(|t| t.r.is_zero() && t.p == t.q)
            .count();
        assert!(true_count >= 8);
        for t in &tuples {
            let mu = t.charge().unwrap();
            assert_eq!(mu.len(), 3);
            assert_eq!(mu.moment(0), Scalar::one());
            assert!((1..=13).all(|k| mu.moment(k).is_positive()));
        }
    }

    #[test]
    fn fib_generators_respect_hypothesis() {
        let good = gen_fib_instances(&mut seeded_rng(2), 5);
        assert!(good.iter().all(|m| fib_obstruction(m) == Ok(true)));
        let bad = gen_fib_violators(&mut seeded_rng(2), 5);
        assert!(bad.iter().all(|m| fib_obstruction(m) == Ok(false)));
    }

    #[test]
    fn planted_measures_have_the_shape() {
        for k in 1..=4 {
            for seed in 0..5 {
                let mu = gen_planted_jump_measure(&mut seeded_rng(seed), k);
                assert!(mu.is_measure());
                assert_eq!(mu.moment(0), Scalar::one());
                if k % 2 == 1 {
                    assert!(mu.atoms().iter().all(|a| !a.loc.is_negative()));
                }
                assert!((1..=20).all(|j| mu.moment(j).is_positive()));
            }
        }
    }

    #[test]
    fn small_parity_sweep() {
        let report = run_parity(2, 2, 1, 3, 20).unwrap();
        assert!(report.all_consistent);
        assert_eq!(report.rows.len(), 4);
    }
}
