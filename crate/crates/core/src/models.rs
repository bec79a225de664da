//! Reference models (uniform-helper basic model, static cheap/expensive
//! model), the rack model pipeline, and the closed-form cross-checks.

use num_traits::{One, Zero};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::income::{self, Selection};
use crate::rational::{self, Rational};
use crate::threshold::{CoeffList, ThresholdCurve};

/// Parameters of the two earlier models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceModel {
    /// Every helper sends beta.
    Basic { k: usize, d: usize },
    /// Fixed cheap set of size `cheap` at tau*beta_e, expensive set of size
    /// `expensive` at beta_e.
    Static { k: usize, cheap: usize, expensive: usize, tau: Rational },
}

impl ReferenceModel {
    /// Income coefficients, ascending.
    pub fn coeffs(&self) -> Result<CoeffList> {
        match self {
            ReferenceModel::Basic { k, d } => {
                if *k == 0 || k > d {
                    return Err(Error::InvalidModelParams(format!(
                        "basic model needs 1 <= k <= d (k = {k}, d = {d})"
                    )));
                }
                let values = (0..*k).rev().map(|i| rational::from_usize(d - i)).collect();
                CoeffList::new(values, *k)
            }
            ReferenceModel::Static { k, cheap, expensive, tau } => {
                let d = cheap + expensive;
                if *k == 0 || *k > d {
                    return Err(Error::InvalidModelParams(format!(
                        "static model needs 1 <= k <= d_c + d_e (k = {k}, d = {d})"
                    )));
                }
                if *tau < Rational::one() {
                    return Err(Error::InvalidModelParams("static model needs tau >= 1".into()));
                }
                let mut values: Vec<Rational> = (0..=(*cheap).min(k - 1))
                    .map(|i| rational::from_usize(cheap - i) * tau + rational::from_usize(*expensive))
                    .collect();
                if *k > cheap + 1 {
                    values.extend((1..k - cheap).map(|i| rational::from_usize(expensive - i)));
                }
                values.sort();
                CoeffList::new(values, *k)
            }
        }
    }
}

/// Threshold curve of a reference model. The basic model is additionally
/// checked knee by knee against its closed form; a disagreement is an error.
pub fn reference_curve(model: &ReferenceModel, file_size: &Rational) -> Result<ThresholdCurve> {
    let curve = ThresholdCurve::new(model.coeffs()?, file_size.clone())?;
    if let ReferenceModel::Basic { k, d } = model {
        let report = basic_closed_form(&curve, *k, *d);
        if let Some(bad) = report.discrepancies().first() {
            return Err(Error::ClosedFormMismatch(bad.describe()));
        }
    }
    Ok(curve)
}

/// One index of a closed-form versus generic comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KneeComparison {
    pub i: usize,
    /// Knee from the printed closed form; `None` when it cannot be evaluated.
    pub closed_beta: Option<Rational>,
    pub generic_beta: Option<Rational>,
    /// Slope term g(i) from the closed form; `None` when it cannot be evaluated.
    pub closed_g: Option<Rational>,
    pub generic_g: Rational,
    /// Whether the generic curve exposes a segment starting at this index.
    pub exposed: bool,
}

impl KneeComparison {
    pub fn knee_agrees(&self) -> bool {
        self.closed_beta.is_none() || self.closed_beta == self.generic_beta
    }

    pub fn g_agrees(&self) -> bool {
        self.closed_g.as_ref().is_none_or(|g| *g == self.generic_g)
    }

    pub fn agrees(&self) -> bool {
        self.knee_agrees() && self.g_agrees()
    }

    pub fn describe(&self) -> String {
        let show = |q: &Option<Rational>| q.as_ref().map_or("n/a".to_string(), rational::render);
        format!(
            "i={}{}: closed f={} g={} | generic f={} g={}",
            self.i,
            if self.exposed { "" } else { " (hidden)" },
            show(&self.closed_beta),
            show(&self.closed_g),
            show(&self.generic_beta),
            rational::render(&self.generic_g),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClosedFormReport {
    pub comparisons: Vec<KneeComparison>,
}

impl ClosedFormReport {
    pub fn discrepancies(&self) -> Vec<&KneeComparison> {
        self.comparisons.iter().filter(|c| !c.agrees()).collect()
    }

    /// True when every exposed generic knee matches the closed form.
    pub fn exposed_knees_agree(&self) -> bool {
        self.comparisons.iter().filter(|c| c.exposed).all(|c| c.knee_agrees() && c.closed_beta.is_some())
    }

    pub fn warnings(&self) -> Vec<String> {
        self.discrepancies().iter().map(|c| c.describe()).collect()
    }
}

fn compare(
    curve: &ThresholdCurve,
    closed: impl Fn(usize) -> (Option<Rational>, Option<Rational>),
) -> ClosedFormReport {
    let exposed: Vec<usize> = curve.segments().iter().map(|s| s.i).collect();
    let comparisons = (0..curve.coeffs().len())
        .map(|i| {
            let (closed_beta, closed_g) = closed(i);
            KneeComparison {
                i,
                closed_beta,
                generic_beta: curve.knee(i).cloned(),
                closed_g,
                generic_g: curve.g(i).clone(),
                exposed: exposed.contains(&i),
            }
        })
        .collect();
    ClosedFormReport { comparisons }
}

fn q(n: i64) -> Rational {
    rational::int(n)
}

fn nonzero_div(num: Rational, den: Rational) -> Option<Rational> {
    if den.is_zero() {
        None
    } else {
        Some(num / den)
    }
}

/// Uniform-helper closed form, stated over gamma = d beta:
/// f(i) = 2Md / ((2k-i-1)i + 2k(d-k+1)),  g(i) = (2d-2k+i+1)i / (2d).
/// Converted to beta: knee f(i)/d, slope g(i) d.
pub fn basic_closed_form(curve: &ThresholdCurve, k: usize, d: usize) -> ClosedFormReport {
    let m = curve.file_size().clone();
    let (k, d) = (k as i64, d as i64);
    compare(curve, |i| {
        let i = i as i64;
        let f_gamma = nonzero_div(q(2) * &m * q(d), q((2 * k - i - 1) * i + 2 * k * (d - k + 1)));
        let g_gamma = Rational::new(((2 * d - 2 * k + i + 1) * i).into(), (2 * d).into());
        (f_gamma.map(|f| f / q(d)), Some(g_gamma * q(d)))
    })
}

/// Static-model closed forms. For k <= d_c+1 the printed knee and slope
/// formulas are evaluated in full (the printed slope is twice g(i)). For
/// k > d_c+1 only the printed knee formulas f1/f2 can be evaluated.
pub fn static_closed_form(
    curve: &ThresholdCurve,
    k: usize,
    cheap: usize,
    expensive: usize,
    tau: &Rational,
) -> ClosedFormReport {
    let m = curve.file_size().clone();
    let (k, dc, de) = (k as i64, cheap as i64, expensive as i64);
    let d = dc + de;
    if k <= dc + 1 {
        compare(curve, |i| {
            let i = i as i64;
            let den = q(2 * k) * (q(dc) * tau + q(de) - tau * q(k)) + tau * q((i + 1) * (2 * k - i));
            let g = q(i) * (q(2 * dc) * tau + q(2 * de) - q(2 * k) * tau + q(i + 1) * tau);
            (nonzero_div(q(2) * &m, den), Some(g / q(2)))
        })
    } else {
        compare(curve, |i| {
            let i = i as i64;
            let den = if i < k - dc {
                q(2 * k * (d - k) + (i + 1) + (2 * k - 1))
            } else {
                q(2 * k * d - k * k - dc * dc - dc + k) + q(2 * dc) * tau + q(i * (2 * dc - i - 1)) * tau
            };
            (nonzero_div(q(2) * &m, den), None)
        })
    }
}

/// Result of the two-rack special case: the generic curve (authoritative)
/// and its comparison against the printed closed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialCaseCurve {
    pub curve: ThresholdCurve,
    /// Closed-form (knee, g) for every index.
    pub closed: Vec<(Option<Rational>, Rational)>,
    pub report: ClosedFormReport,
}

impl SpecialCaseCurve {
    /// Closed-form knees after deleting empty intervals, as (i, beta_e).
    pub fn closed_knees(&self) -> Vec<(usize, Rational)> {
        let mut out: Vec<(usize, Rational)> = Vec::new();
        let mut upper: Option<Rational> = None;
        for (i, (knee, _)) in self.closed.iter().enumerate() {
            if let Some(lo) = knee {
                if upper.as_ref().is_none_or(|hi| lo < hi) {
                    out.push((i, lo.clone()));
                }
                upper = Some(lo.clone());
            }
        }
        out
    }
}

/// Two-rack case d_e^1 >= d_c^2 tau with k > d_c^1+1 (and the helper identity
/// d_e^1 = d_c^2+1, d_e^2 = d_c^1+1), where incomes decrease monotonically
/// and the threshold has the closed form
///
/// ```text
/// g1(i) = i(2d-2k+i+1)/2            g2(i) = i(2 d_e^1 + tau i - tau)/2
/// f1(i) = 2M / (tau (2k(d-k) + (i+1)(2k-i)))
/// f2(i) = 2M / (2 d_e^1 + 2 d_e^1 d_c^1
///               - tau (i(i-2k+1) + 2(k^2 - k - kd + d_e^1 + d_e^1 d_c^1)))
/// ```
pub fn special_case_curve(cfg: &SystemConfig) -> Result<SpecialCaseCurve> {
    if cfg.rack_count() != 2 {
        return Err(Error::PreconditionUnmet(format!(
            "needs exactly 2 racks, config has {}",
            cfg.rack_count()
        )));
    }
    let (dc1, dc2) = (cfg.cheap_degree(0), cfg.cheap_degree(1));
    let (de1, de2) = (cfg.expensive_degree(0), cfg.expensive_degree(1));
    let tau = &cfg.tau;
    if de1 != dc2 + 1 || de2 != dc1 + 1 {
        return Err(Error::PreconditionUnmet(format!(
            "needs d_e^1 = d_c^2+1 and d_e^2 = d_c^1+1 (d_e = [{de1}, {de2}], d_c = [{dc1}, {dc2}])"
        )));
    }
    if rational::from_usize(de1) < rational::from_usize(dc2) * tau {
        return Err(Error::PreconditionUnmet(format!(
            "needs d_e^1 >= d_c^2 tau ({de1} < {dc2} * {})",
            rational::render(tau)
        )));
    }
    if cfg.k <= dc1 + 1 {
        return Err(Error::PreconditionUnmet(format!("needs k > d_c^1+1 (k = {})", cfg.k)));
    }

    let (_, coeffs) = income::rack_coeffs(cfg)?;
    let curve = ThresholdCurve::new(coeffs, cfg.file_size.clone())?;

    let m = cfg.file_size.clone();
    let (k, d, dc1, de1) = (cfg.k as i64, cfg.d as i64, dc1 as i64, de1 as i64);
    let g1 = |i: i64| Rational::new((i * (2 * d - 2 * k + i + 1)).into(), 2.into());
    let g2 = |i: i64| q(i) * (q(2 * de1) + tau * q(i) - tau) / q(2);
    let f1 = |i: i64| nonzero_div(q(2) * &m, tau * q(2 * k * (d - k) + (i + 1) * (2 * k - i)));
    let f2 = |i: i64| {
        let inner = q(i * (i - 2 * k + 1) + 2 * (k * k - k - k * d + de1 + de1 * dc1));
        nonzero_div(q(2) * &m, q(2 * de1 + 2 * de1 * dc1) - tau * inner)
    };
    let split = k - dc1 - 1;
    let closed: Vec<(Option<Rational>, Rational)> = (0..k)
        .map(|i| {
            if i < split {
                (f1(i), g1(i) * tau)
            } else if i == split {
                (f2(i), g1(split) * tau)
            } else {
                (f2(i), g1(split) * tau + g2(i - split))
            }
        })
        .collect();
    let report = compare(&curve, |i| {
        let (f, g) = closed.get(i).cloned().unwrap_or((None, Rational::zero()));
        (f, Some(g))
    });
    Ok(SpecialCaseCurve { curve, closed, report })
}

/// The rack model end to end: greedy selection, trimming, threshold curve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RackAnalysis {
    pub selection: Selection,
    pub coeffs: CoeffList,
    pub curve: ThresholdCurve,
}

pub fn rack_analysis(cfg: &SystemConfig) -> Result<RackAnalysis> {
    let (selection, coeffs) = income::rack_coeffs(cfg)?;
    let curve = ThresholdCurve::new(coeffs.clone(), cfg.file_size.clone())?;
    Ok(RackAnalysis { selection, coeffs, curve })
}

/// Model selector shared by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Rack,
    Static,
    Basic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rack => "rack",
            ModelKind::Static => "static",
            ModelKind::Basic => "basic",
        }
    }
}

/// Static model matched to a rack config: its cheap set is rack 0's
/// same-rack helpers (d_c = d_c^1, d_e = d - d_c^1).
pub fn matched_static(cfg: &SystemConfig) -> ReferenceModel {
    ReferenceModel::Static {
        k: cfg.k,
        cheap: cfg.cheap_degree(0),
        expensive: cfg.expensive_degree(0),
        tau: cfg.tau.clone(),
    }
}

pub fn matched_basic(cfg: &SystemConfig) -> ReferenceModel {
    ReferenceModel::Basic { k: cfg.k, d: cfg.d }
}

pub fn model_curve(cfg: &SystemConfig, kind: ModelKind) -> Result<ThresholdCurve> {
    match kind {
        ModelKind::Rack => Ok(rack_analysis(cfg)?.curve),
        ModelKind::Static => reference_curve(&matched_static(cfg), &cfg.file_size),
        ModelKind::Basic => reference_curve(&matched_basic(cfg), &cfg.file_size),
    }
}

/// Elementwise L_rack[i] >= L_static[i] over the rack list's length.
pub fn rack_dominates_static(cfg: &SystemConfig) -> Result<bool> {
    let rack = rack_analysis(cfg)?.coeffs;
    let stat = matched_static(cfg).coeffs()?;
    Ok(rack.values().iter().zip(stat.values()).all(|(r, s)| r >= s))
}
