//! Canonical data types: weight sequences, moment sequences, finitely atomic
//! charges, and linear recursion specs, plus the weight/moment conversions.
//!
//! The canonical exact quantity for a weighted shift is the squared weight
//! `alpha_n^2`: moments, Hankel tests and the Aluthge identities only ever
//! need squared weights, which keeps exact mode inside the rationals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Linear recursion `gamma_m = a_0 gamma_{m-1} + ... + a_{r-1} gamma_{m-r}`
/// for every `m >= r`, together with the initial segment `gamma_0..gamma_{r-1}`.
///
/// The trailing coefficient may be zero (characteristic root at the origin);
/// backward extension then refuses, see [`crate::recursion::extend_backward`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionSpec {
    pub coeffs: Vec<Scalar>,
    pub initial: Vec<Scalar>,
}

impl RecursionSpec {
    pub fn new(coeffs: Vec<Scalar>, initial: Vec<Scalar>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidRecursion("order must be >= 1".into()));
        }
        if initial.len() != coeffs.len() {
            return Err(Error::InvalidRecursion(format!(
                "initial segment has {} terms, order is {}",
                initial.len(),
                coeffs.len()
            )));
        }
        Ok(RecursionSpec { coeffs, initial })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Next term from the trailing window `last[0], last[1], ...` where
    /// `last[0]` is the most recent term.
    pub fn step(&self, recent_first: &[Scalar]) -> Scalar {
        debug_assert!(recent_first.len() >= self.order());
        self.coeffs
            .iter()
            .zip(recent_first)
            .fold(Scalar::zero(), |acc, (a, g)| &acc + &(a * g))
    }

    /// Generates `gamma_0..gamma_n` from the initial segment.
    pub fn generate(&self, n: usize) -> Vec<Scalar> {
        let mut out = self.initial.clone();
        out.truncate(n + 1);
        while out.len() <= n {
            let window: Vec<Scalar> = out.iter().rev().take(self.order()).cloned().collect();
            out.push(self.step(&window));
        }
        out
    }
}

/// Positive weight list (stored squared), with an optional recursive tail on
/// the induced moment sequence for eventually recursive shifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    pub weights_sq: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<RecursionSpec>,
}

impl WeightSequence {
    pub fn new(weights_sq: Vec<Scalar>) -> Result<Self> {
        for (i, w) in weights_sq.iter().enumerate() {
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight { index: i });
            }
        }
        Ok(WeightSequence {
            weights_sq,
            tail: None,
        })
    }

    pub fn with_tail(weights_sq: Vec<Scalar>, tail: RecursionSpec) -> Result<Self> {
        let mut w = Self::new(weights_sq)?;
        if w.weights_sq.len() + 1 < tail.order() {
            return Err(Error::InvalidRecursion(format!(
                "tail of order {} needs at least {} prefix weights",
                tail.order(),
                tail.order() - 1
            )));
        }
        w.tail = Some(tail);
        Ok(w)
    }

    /// Number of weights available without the recursive tail.
    pub fn prefix_len(&self) -> usize {
        self.weights_sq.len()
    }

    pub fn is_finite_horizon(&self) -> bool {
        self.tail.is_none()
    }

    /// Moments `gamma_0..gamma_n`, exact. `gamma_k = prod_{i<k} alpha_i^2`;
    /// past the prefix the tail recursion extends the moment sequence, and
    /// every generated moment must stay positive.
    pub fn moments(&self, n: usize) -> Result<Vec<Scalar>> {
        let m = self.weights_sq.len();
        let mut gamma = Vec::with_capacity(n + 1);
        gamma.push(Scalar::one());
        for k in 0..n.min(m) {
            let next = &gamma[k] * &self.weights_sq[k];
            gamma.push(next);
        }
        if n <= m {
            return Ok(gamma);
        }
        let tail = self.tail.as_ref().ok_or(Error::InsufficientWeights {
            needed: n,
            available: m,
        })?;
        if !tail.initial.is_empty() {
            let r = tail.order();
            let splice = &gamma[m + 1 - r..=m];
            if splice != tail.initial.as_slice() {
                return Err(Error::InvalidRecursion(
                    "tail initial segment disagrees with prefix-derived moments".into(),
                ));
            }
        }
        while gamma.len() <= n {
            let window: Vec<Scalar> = gamma.iter().rev().take(tail.order()).cloned().collect();
            let next = tail.step(&window);
            if !next.is_positive() {
                return Err(Error::NonPositiveMoment { index: gamma.len() });
            }
            gamma.push(next);
        }
        Ok(gamma)
    }

    /// `alpha_i^2`, from the prefix or from the tail-generated moments.
    pub fn weight_sq(&self, i: usize) -> Result<Scalar> {
        if i < self.weights_sq.len() {
            return Ok(self.weights_sq[i].clone());
        }
        let g = self.moments(i + 1)?;
        g[i + 1].checked_div(&g[i])
    }
}

/// Moment sequence with the shift normalization `gamma_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub gamma: Vec<Scalar>,
}

impl MomentSequence {
    pub fn new(gamma: Vec<Scalar>) -> Result<Self> {
        match gamma.first() {
            Some(g0) if *g0 == Scalar::one() => Ok(MomentSequence { gamma }),
            _ => Err(Error::NotNormalized),
        }
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    /// Highest available index.
    pub fn horizon(&self) -> usize {
        self.gamma.len().saturating_sub(1)
    }
}

/// `gamma_0 = 1` and `gamma_k = prod_{i<k} alpha_i^2` for `k <= n`.
pub fn weights_to_moments(w: &WeightSequence, n: usize) -> Result<MomentSequence> {
    MomentSequence::new(w.moments(n)?)
}

/// Inverse direction: `alpha_n^2 = gamma_{n+1} / gamma_n`. Fails on any
/// nonpositive moment.
pub fn moments_to_weights(g: &MomentSequence) -> Result<WeightSequence> {
    for (i, t) in g.gamma.iter().enumerate() {
        if !t.is_positive() {
            return Err(Error::NonPositiveMoment { index: i });
        }
    }
    let mut weights_sq = Vec::with_capacity(g.gamma.len().saturating_sub(1));
    for pair in g.gamma.windows(2) {
        weights_sq.push(pair[1].checked_div(&pair[0])?);
    }
    WeightSequence::new(weights_sq)
}

/// True iff the generated `gamma_0..gamma_n` are all positive.
pub fn moment_positivity_horizon(spec: &RecursionSpec, n: usize) -> bool {
    spec.generate(n).iter().all(Scalar::is_positive)
}

/// One atom of a charge: a location and a nonzero density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub loc: Scalar,
    pub den: Scalar,
}

/// Finitely atomic signed measure. Locations are pairwise distinct and kept
/// sorted ascending; densities are nonzero. The charge is a measure iff all
/// densities are positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicCharge {
    atoms: Vec<Atom>,
}

impl AtomicCharge {
    pub fn new(atoms: Vec<(Scalar, Scalar)>) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(loc, den)| Atom { loc, den })
            .collect();
        atoms.sort_by(|a, b| a.loc.cmp(&b.loc));
        for pair in atoms.windows(2) {
            if pair[0].loc == pair[1].loc {
                return Err(Error::InvalidCharge(format!(
                    "repeated location {}",
                    pair[0].loc
                )));
            }
        }
        if let Some(a) = atoms.iter().find(|a| a.den.is_zero()) {
            return Err(Error::InvalidCharge(format!(
                "zero density at location {}",
                a.loc
            )));
        }
        Ok(AtomicCharge { atoms })
    }

    /// Builds a charge by summing densities at coinciding locations and
    /// dropping the atoms whose total density cancels to zero.
    pub fn accumulate(pairs: impl IntoIterator<Item = (Scalar, Scalar)>) -> Self {
        let mut merged: Vec<(Scalar, Scalar)> = Vec::new();
        for (loc, den) in pairs {
            match merged.binary_search_by(|(l, _)| l.cmp(&loc)) {
                Ok(i) => merged[i].1 = &merged[i].1 + &den,
                Err(i) => merged.insert(i, (loc, den)),
            }
        }
        AtomicCharge {
            atoms: merged
                .into_iter()
                .filter(|(_, den)| !den.is_zero())
                .map(|(loc, den)| Atom { loc, den })
                .collect(),
        }
    }

    pub fn empty() -> Self {
        AtomicCharge { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All densities positive.
    pub fn is_measure(&self) -> bool {
        self.atoms.iter().all(|a| a.den.is_positive())
    }

    pub fn density_at(&self, loc: &Scalar) -> Scalar {
        self.atoms
            .iter()
            .find(|a| a.loc == *loc)
            .map(|a| a.den.clone())
            .unwrap_or_else(Scalar::zero)
    }

    /// `k`-th moment `sum_t rho_t * lambda_t^k`.
    pub fn moment(&self, k: usize) -> Scalar {
        self.atoms.iter().fold(Scalar::zero(), |acc, a| {
            &acc + &(&a.den * &a.loc.pow(k))
        })
    }
}

/// Sorted set of distinct locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    pub locations: Vec<Scalar>,
}

impl SupportSet {
    pub fn new(mut locations: Vec<Scalar>) -> Self {
        locations.sort();
        locations.dedup();
        SupportSet { locations }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}
