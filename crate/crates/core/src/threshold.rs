//! Piecewise-linear threshold function alpha*(beta_e) built from an ascending
//! coefficient list, plus MSR/MBR points and per-rack repair metrics.
//!
//! For a list L of m coefficients and reconstruction degree k:
//!
//! ```text
//! g(i) = L[0] + ... + L[i-1]
//! f(i) = M / (L[i] (k - i) + g(i))
//! alpha*(b) = (M - g(i) b) / (k - i)   for b in [f(i), f(i-1)),  f(-1) = +inf
//! ```
//!
//! Equal neighbouring coefficients give f(i) = f(i-1); those empty intervals
//! are kept in the bookkeeping but never exposed as segments.

use num_traits::{Signed, Zero};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Ascending income coefficients (multiples of beta_e) for reconstruction
/// degree `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffList {
    values: Vec<Rational>,
    k: usize,
}

impl CoeffList {
    pub fn new(values: Vec<Rational>, k: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyCoeffList);
        }
        if values.len() > k {
            return Err(Error::InvalidCoeffList(format!(
                "{} coefficients for k = {k}",
                values.len()
            )));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidCoeffList("coefficients are not ascending".into()));
        }
        if values[0].is_negative() {
            return Err(Error::InvalidCoeffList("negative coefficient".into()));
        }
        Ok(Self { values, k })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> &Rational {
        self.values.last().expect("non-empty")
    }

    /// Sum over the list of min(L[i] beta, alpha), plus min(bound beta, alpha)
    /// for each of the k - m trimmed newcomers.
    pub fn capped_mincut(&self, beta: &Rational, alpha: &Rational, bound: &Rational) -> Rational {
        let kept: Rational = self
            .values
            .iter()
            .map(|l| rational::min(&(l * beta), alpha))
            .sum();
        let trimmed = rational::from_usize(self.k - self.values.len());
        kept + trimmed * rational::min(&(bound * beta), alpha)
    }

    /// Returns a copy with `values[index]` replaced, re-sorted.
    pub fn with_replaced(&self, index: usize, value: Rational) -> Result<Self> {
        let mut values = self.values.clone();
        let len = values.len();
        let slot = values.get_mut(index).ok_or_else(|| {
            Error::InvalidCoeffList(format!("index {index} out of range for {len} coefficients"))
        })?;
        *slot = value;
        values.sort();
        Self::new(values, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdSegment {
    /// Coefficient index i of the segment.
    pub i: usize,
    pub coeff: Rational,
    /// g(i).
    pub g: Rational,
    /// f(i), inclusive.
    pub beta_lo: Rational,
    /// f(i-1), exclusive; `None` on the MSR plateau.
    pub beta_hi: Option<Rational>,
}

impl ThresholdSegment {
    /// alpha on this segment: (M - g(i) beta) / (k - i).
    pub fn alpha(&self, beta: &Rational, file_size: &Rational, k: usize) -> Rational {
        (file_size - &self.g * beta) / rational::from_usize(k - self.i)
    }

    pub fn contains(&self, beta: &Rational) -> bool {
        *beta >= self.beta_lo && self.beta_hi.as_ref().is_none_or(|hi| beta < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdCurve {
    file_size: Rational,
    coeffs: CoeffList,
    /// f(i) for every i; `None` when the denominator vanishes.
    knees: Vec<Option<Rational>>,
    /// g(i) for every i.
    sums: Vec<Rational>,
    /// Exposed segments, ordered by descending beta_lo.
    segments: Vec<ThresholdSegment>,
}

impl ThresholdCurve {
    pub fn new(coeffs: CoeffList, file_size: Rational) -> Result<Self> {
        if !file_size.is_positive() {
            return Err(Error::InvalidModelParams("file size must be > 0".into()));
        }
        let k = coeffs.k();
        let mut knees = Vec::with_capacity(coeffs.len());
        let mut sums = Vec::with_capacity(coeffs.len());
        let mut g = Rational::zero();
        for (i, l) in coeffs.values().iter().enumerate() {
            let den = l * rational::from_usize(k - i) + &g;
            knees.push(if den.is_zero() { None } else { Some(&file_size / den) });
            sums.push(g.clone());
            g += l;
        }

        let mut segments = Vec::new();
        let mut upper: Option<Rational> = None;
        for (i, knee) in knees.iter().enumerate() {
            let Some(lo) = knee else { continue };
            let nonempty = upper.as_ref().is_none_or(|hi| lo < hi);
            if nonempty {
                segments.push(ThresholdSegment {
                    i,
                    coeff: coeffs.values()[i].clone(),
                    g: sums[i].clone(),
                    beta_lo: lo.clone(),
                    beta_hi: upper.clone(),
                });
            }
            upper = Some(lo.clone());
        }
        debug_assert!(!segments.is_empty());
        Ok(Self { file_size, coeffs, knees, sums, segments })
    }

    pub fn file_size(&self) -> &Rational {
        &self.file_size
    }

    pub fn k(&self) -> usize {
        self.coeffs.k()
    }

    pub fn coeffs(&self) -> &CoeffList {
        &self.coeffs
    }

    pub fn segments(&self) -> &[ThresholdSegment] {
        &self.segments
    }

    /// f(i) for every coefficient index, including hidden empty intervals.
    pub fn knee(&self, i: usize) -> Option<&Rational> {
        self.knees[i].as_ref()
    }

    pub fn g(&self, i: usize) -> &Rational {
        &self.sums[i]
    }

    /// Smallest admissible beta_e: f(m-1).
    pub fn mbr_beta(&self) -> &Rational {
        &self.segments.last().expect("at least one segment").beta_lo
    }

    /// The exposed knees as (i, beta_e, alpha), by descending beta_e.
    pub fn knee_points(&self) -> Vec<(usize, Rational, Rational)> {
        self.segments
            .iter()
            .map(|s| {
                let a = s.alpha(&s.beta_lo, &self.file_size, self.k());
                (s.i, s.beta_lo.clone(), a)
            })
            .collect()
    }

    pub fn segment_at(&self, beta: &Rational) -> Result<&ThresholdSegment> {
        self.segments.iter().find(|s| s.contains(beta)).ok_or_else(|| Error::BelowMbr {
            beta: rational::render(beta),
            mbr: rational::render(self.mbr_beta()),
        })
    }

    /// alpha*(beta_e). A knee belongs to the segment starting at it.
    pub fn alpha_star(&self, beta: &Rational) -> Result<Rational> {
        let seg = self.segment_at(beta)?;
        Ok(seg.alpha(beta, &self.file_size, self.k()))
    }

    /// Scales M, every knee and every alpha by `c`.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        Self::new(self.coeffs.clone(), &self.file_size * c)
    }
}

/// Per-rack repair bandwidths gamma^j and repair costs C_T^j at one beta_e.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairMetrics {
    pub gamma: Vec<Rational>,
    pub cost: Vec<Rational>,
}

pub fn repair_metrics(cfg: &SystemConfig, beta: &Rational) -> RepairMetrics {
    let r = cfg.rack_count();
    RepairMetrics {
        gamma: (0..r).map(|j| cfg.rack_bandwidth_coeff(j) * beta).collect(),
        cost: (0..r).map(|j| cfg.rack_cost_coeff(j) * beta).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffPoint {
    pub beta_e: Rational,
    pub alpha: Rational,
    pub gamma: Vec<Rational>,
    pub cost: Vec<Rational>,
}

impl TradeoffPoint {
    pub fn new(cfg: &SystemConfig, beta_e: Rational, alpha: Rational) -> Self {
        let RepairMetrics { gamma, cost } = repair_metrics(cfg, &beta_e);
        Self { beta_e, alpha, gamma, cost }
    }
}

/// MSR point (top of the curve) and MBR point (its lowest knee).
pub fn extremal_points(curve: &ThresholdCurve, cfg: &SystemConfig) -> (TradeoffPoint, TradeoffPoint) {
    let top = curve.segments().first().expect("non-empty curve");
    let bottom = curve.segments().last().expect("non-empty curve");
    let at = |s: &ThresholdSegment| {
        let alpha = s.alpha(&s.beta_lo, curve.file_size(), curve.k());
        TradeoffPoint::new(cfg, s.beta_lo.clone(), alpha)
    };
    (at(top), at(bottom))
}
