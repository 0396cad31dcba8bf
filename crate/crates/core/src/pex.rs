//! The piecewise exponential distribution `PE(λ, τ)`.
//!
//! A grid `τ = {a_1 = 0 < a_2 < … < a_m}` splits `(0, ∞)` into the intervals
//! `I_j = (a_j, a_{j+1}]` with `a_{m+1} = ∞`. The hazard is `λ_j` on `I_j`, so
//! the cumulative hazard is piecewise linear and every other function of the
//! distribution follows from it in closed form.
//!
//! Interval indices in this module are zero-based: `I_1` is index `0`.

use alloc::vec::Vec;
use core::fmt;

use rand::distr::Open01;
use rand::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PexError {
    #[error("time {0} is outside the support (0, inf)")]
    OutsideSupport(f64),
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error("invalid parameters: {}", DisplayViolations(.0))]
    InvalidParams(Vec<Violation>),
    #[error("invalid truncation bounds: lower {lower:?}, upper {upper:?}")]
    InvalidBounds {
        lower: Option<f64>,
        upper: Option<f64>,
    },
    #[error("requested probability mass is unreachable: the distribution has no mass there")]
    UnreachableMass,
}

/// One broken parameter rule, carrying the index of the first offending element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Violation {
    EmptyGrid,
    /// `a_1` must be exactly zero.
    FirstCutNotZero,
    NonFiniteCut {
        index: usize,
    },
    NotStrictlyIncreasing {
        index: usize,
    },
    NegativeRate {
        index: usize,
    },
    NonFiniteRate {
        index: usize,
    },
    LengthMismatch {
        cut_points: usize,
        rates: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::EmptyGrid => write!(f, "grid has no cut points"),
            Violation::FirstCutNotZero => write!(f, "first cut point is not 0"),
            Violation::NonFiniteCut { index } => write!(f, "cut point {index} is not finite"),
            Violation::NotStrictlyIncreasing { index } => {
                write!(f, "grid is not strictly increasing at index {index}")
            }
            Violation::NegativeRate { index } => write!(f, "rate {index} is negative"),
            Violation::NonFiniteRate { index } => write!(f, "rate {index} is not finite"),
            Violation::LengthMismatch { cut_points, rates } => {
                write!(
                    f,
                    "grid has {cut_points} cut points but {rates} rates were given"
                )
            }
        }
    }
}

struct DisplayViolations<'a>(&'a [Violation]);

impl fmt::Display for DisplayViolations<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn grid_violations(cut_points: &[f64], out: &mut Vec<Violation>) {
    if cut_points.is_empty() {
        out.push(Violation::EmptyGrid);
        return;
    }
    if cut_points[0] != 0.0 {
        out.push(Violation::FirstCutNotZero);
    }
    if let Some(index) = cut_points.iter().position(|a| !a.is_finite()) {
        out.push(Violation::NonFiniteCut { index });
    }
    if let Some(index) = (1..cut_points.len()).find(|&i| !(cut_points[i - 1] < cut_points[i])) {
        out.push(Violation::NotStrictlyIncreasing { index });
    }
}

/// Checks a candidate `(τ, λ)` pair and reports every rule it breaks.
///
/// The rules are: non-negative finite rates, `a_1 = 0`, a strictly increasing
/// finite grid, and one rate per cut point.
pub fn validate_params(cut_points: &[f64], rates: &[f64]) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    grid_violations(cut_points, &mut violations);
    if let Some(index) = rates.iter().position(|r| r.is_nan() || *r < 0.0) {
        violations.push(Violation::NegativeRate { index });
    }
    if let Some(index) = rates.iter().position(|r| r.is_infinite()) {
        violations.push(Violation::NonFiniteRate { index });
    }
    if cut_points.len() != rates.len() {
        violations.push(Violation::LengthMismatch {
            cut_points: cut_points.len(),
            rates: rates.len(),
        });
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// The partition `τ = {a_1, …, a_m}` of the time axis. `a_{m+1} = ∞` is implicit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TimeGrid {
    cut_points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(cut_points: Vec<f64>) -> Result<Self, PexError> {
        let mut violations = Vec::new();
        grid_violations(&cut_points, &mut violations);
        if violations.is_empty() {
            Ok(TimeGrid { cut_points })
        } else {
            Err(PexError::InvalidParams(violations))
        }
    }

    /// `m` equally spaced cut points `a_j = span·(j−1)/m`.
    pub fn equally_spaced(span: f64, m: usize) -> Result<Self, PexError> {
        if m == 0 {
            return Err(PexError::InvalidParams(alloc::vec![Violation::EmptyGrid]));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(PexError::OutsideSupport(span));
        }
        Self::new((0..m).map(|j| span * j as f64 / m as f64).collect())
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    /// Number of intervals `m`.
    pub fn len(&self) -> usize {
        self.cut_points.len()
    }

    /// Always false: a grid holds at least the cut point 0.
    pub fn is_empty(&self) -> bool {
        self.cut_points.is_empty()
    }

    /// Lower end `a_j` of interval `j`.
    pub fn start(&self, j: usize) -> f64 {
        self.cut_points[j]
    }

    /// Upper end `a_{j+1}` of interval `j`; infinite for the last interval.
    pub fn end(&self, j: usize) -> f64 {
        self.cut_points.get(j + 1).copied().unwrap_or(f64::INFINITY)
    }

    /// Zero-based index of the interval `(a_j, a_{j+1}]` holding `t`.
    ///
    /// A time sitting exactly on a cut point belongs to the interval it closes.
    pub fn interval_index(&self, t: f64) -> Result<usize, PexError> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(PexError::OutsideSupport(t));
        }
        Ok(self.index_unchecked(t))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, t: f64) -> usize {
        // number of cut points strictly below t, minus one
        self.cut_points.partition_point(|&a| a < t) - 1
    }

    /// Length of `(0, t] ∩ I_j`.
    #[inline]
    pub fn overlap(&self, t: f64, j: usize) -> f64 {
        let lo = self.start(j);
        if t <= lo {
            0.0
        } else {
            t.min(self.end(j)) - lo
        }
    }
}

/// Optional truncation of the support to `(lower, upper]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TruncationBounds {
    lower: Option<f64>,
    upper: Option<f64>,
}

impl TruncationBounds {
    pub fn new(lower: Option<f64>, upper: Option<f64>) -> Result<Self, PexError> {
        let bad = PexError::InvalidBounds { lower, upper };
        if let Some(l) = lower {
            if !(l >= 0.0) || !l.is_finite() {
                return Err(bad);
            }
        }
        if let Some(u) = upper {
            if !(u > 0.0) || u.is_nan() || u < lower.unwrap_or(0.0) || Some(u) == lower {
                return Err(bad);
            }
        }
        Ok(TruncationBounds { lower, upper })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn above(lower: f64) -> Result<Self, PexError> {
        Self::new(Some(lower), None)
    }

    pub fn lower(&self) -> f64 {
        self.lower.unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }
}

/// A validated `PE(λ, τ)` distribution.
///
/// The cumulative hazard at every cut point is precomputed once, so point
/// evaluations cost a binary search plus O(1) arithmetic.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PeParams {
    grid: TimeGrid,
    rates: Vec<f64>,
    /// `H(a_j)` for every cut point.
    #[cfg_attr(feature = "serde", serde(skip))]
    cum_at_cuts: Vec<f64>,
}

impl PeParams {
    pub fn new(grid: TimeGrid, rates: Vec<f64>) -> Result<Self, PexError> {
        validate_params(grid.cut_points(), &rates).map_err(PexError::InvalidParams)?;
        let mut cum_at_cuts = Vec::with_capacity(rates.len());
        let mut acc = 0.0;
        cum_at_cuts.push(acc);
        for j in 0..rates.len() - 1 {
            acc += rates[j] * (grid.end(j) - grid.start(j));
            cum_at_cuts.push(acc);
        }
        Ok(PeParams {
            grid,
            rates,
            cum_at_cuts,
        })
    }

    pub fn from_parts(cut_points: Vec<f64>, rates: Vec<f64>) -> Result<Self, PexError> {
        validate_params(&cut_points, &rates).map_err(PexError::InvalidParams)?;
        Self::new(TimeGrid { cut_points }, rates)
    }

    /// The same grid with every rate multiplied by `factor`, i.e. a
    /// proportional-hazards shift of the whole distribution.
    pub fn scaled(&self, factor: f64) -> Result<Self, PexError> {
        Self::new(
            self.grid.clone(),
            self.rates.iter().map(|r| r * factor).collect(),
        )
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `H(a_j)` for every cut point of the grid.
    pub fn cum_hazard_at_cuts(&self) -> &[f64] {
        &self.cum_at_cuts
    }

    pub fn hazard(&self, t: f64) -> Result<f64, PexError> {
        Ok(self.rates[self.grid.interval_index(t)?])
    }

    pub fn cum_hazard(&self, t: f64) -> Result<f64, PexError> {
        let j = self.grid.interval_index(t)?;
        Ok(self.cum_in(j, t))
    }

    #[inline]
    fn cum_in(&self, j: usize, t: f64) -> f64 {
        let slope = self.rates[j];
        if slope == 0.0 {
            self.cum_at_cuts[j]
        } else {
            self.cum_at_cuts[j] + slope * (t - self.grid.start(j))
        }
    }

    /// Total cumulative hazard `H(∞)`: infinite unless the last rate is zero.
    pub fn total_cum_hazard(&self) -> f64 {
        let m = self.rates.len();
        if self.rates[m - 1] > 0.0 {
            f64::INFINITY
        } else {
            self.cum_at_cuts[m - 1]
        }
    }

    fn cum_hazard_or_total(&self, t: f64) -> f64 {
        if t.is_infinite() {
            self.total_cum_hazard()
        } else if t <= 0.0 {
            0.0
        } else {
            let j = self.grid.index_unchecked(t);
            self.cum_in(j, t)
        }
    }

    pub fn survival(&self, t: f64) -> Result<f64, PexError> {
        Ok(libm::exp(-self.cum_hazard(t)?))
    }

    pub fn cdf(&self, t: f64) -> Result<f64, PexError> {
        Ok(-libm::expm1(-self.cum_hazard(t)?))
    }

    /// `log h(t) − H(t)`; `-inf` where the hazard is zero.
    pub fn log_density(&self, t: f64) -> Result<f64, PexError> {
        let j = self.grid.interval_index(t)?;
        Ok(libm::log(self.rates[j]) - self.cum_in(j, t))
    }

    pub fn density(&self, t: f64) -> Result<f64, PexError> {
        Ok(libm::exp(self.log_density(t)?))
    }

    /// Smallest `t` with `H(t) ≥ w`, for `w > 0`.
    ///
    /// Zero-rate intervals are flat stretches of `H`; a target landing exactly
    /// on a plateau returns the plateau's left end.
    pub fn inverse_cum_hazard(&self, w: f64) -> Result<f64, PexError> {
        if !(w > 0.0) {
            return Err(PexError::InvalidProbability(w));
        }
        let m = self.rates.len();
        // first interval whose right end reaches w
        let j = self.cum_at_cuts[1..].partition_point(|&h| h < w);
        if j == m - 1 {
            if self.rates[j] == 0.0 || w.is_infinite() {
                return Err(PexError::UnreachableMass);
            }
        } else if w == self.cum_at_cuts[j + 1] {
            return Ok(self.grid.end(j));
        }
        let t = self.grid.start(j) + (w - self.cum_at_cuts[j]) / self.rates[j];
        Ok(t.min(self.grid.end(j)))
    }

    /// Generalized inverse of the CDF.
    pub fn quantile(&self, p: f64) -> Result<f64, PexError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(PexError::InvalidProbability(p));
        }
        self.inverse_cum_hazard(-libm::log1p(-p))
    }

    pub fn median(&self) -> Result<f64, PexError> {
        self.quantile(0.5)
    }

    /// Draws one time from the distribution restricted to `bounds`.
    ///
    /// A uniform draw on the open interval `(F(lower), F(upper))` is mapped back
    /// through the inverse CDF. The mapping is done on the cumulative hazard
    /// scale so that deep-tail truncation keeps full precision.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        bounds: &TruncationBounds,
        rng: &mut R,
    ) -> Result<f64, PexError> {
        let lower = bounds.lower();
        let upper = bounds.upper();
        let h_lower = self.cum_hazard_or_total(lower);
        let h_upper = self.cum_hazard_or_total(upper);
        let span = h_upper - h_lower;
        if !(span > 0.0) {
            return Err(PexError::UnreachableMass);
        }
        let u: f64 = rng.sample(Open01);
        // u·(S(lower) − S(upper)) / S(lower) is the conditional mass below the draw
        let w = h_lower - libm::log1p(u * libm::expm1(-span));
        let t = self.inverse_cum_hazard(w)?;
        Ok(t.clamp(lower, upper))
    }

    /// Typical value of the distribution: its median.
    pub fn typical_value(&self) -> Result<f64, PexError> {
        self.median()
    }
}
