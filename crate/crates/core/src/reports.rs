//! Exploratory fits and reports: log-log slope estimation, scale-band
//! suprema, the majorant series for the smoothing bound, and growth
//! fits over tree classes. Everything here is descriptive; nothing is
//! asserted beyond basic input validity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::increments::Inc2;
use crate::trees::{count_zn, enumerate_trees, classify_tree_banded, TreeClass};

/// Least-squares line through (ln x, ln y); pairs with a nonpositive
/// entry are skipped.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Number of points actually used.
    pub used: usize,
}

pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> LineFit {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    fit_line(&pts)
}

/// Least-squares line through raw (x, y) points.
pub fn fit_line(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len();
    if n < 2 {
        return LineFit { slope: f64::NAN, intercept: f64::NAN, used: n };
    }
    let nf = n as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = nf * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return LineFit { slope: f64::NAN, intercept: f64::NAN, used: n };
    }
    let slope = (nf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / nf;
    LineFit { slope, intercept, used: n }
}

/// Supremum of the entry norm over pairs exactly m steps apart, one
/// value per requested step count, paired with the largest gap in that
/// band. Meant for uniform grids where the band is a single scale.
pub fn band_sup(a: &Inc2<f64>, step_counts: &[usize]) -> Vec<(f64, f64)> {
    let n = a.grid().len();
    let mut out = Vec::with_capacity(step_counts.len());
    for &m in step_counts {
        if m == 0 || m >= n {
            continue;
        }
        let mut sup: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for i in m..n {
            let j = i - m;
            let mut s = 0.0;
            for k in 0..a.dim() {
                let v = a.value(i, j, k);
                s += v * v;
            }
            sup = sup.max(s.sqrt());
            gap = gap.max(a.grid().t(i) - a.grid().t(j));
        }
        out.push((gap, sup));
    }
    out
}

/// Slope of band suprema against band width on dyadic step counts.
pub fn band_slope(a: &Inc2<f64>, step_counts: &[usize]) -> LineFit {
    let bands = band_sup(a, step_counts);
    let xs: Vec<f64> = bands.iter().map(|b| b.0).collect();
    let ys: Vec<f64> = bands.iter().map(|b| b.1).collect();
    fit_log_slope(&xs, &ys)
}

// ---------------------------------------------------------------------------
// Majorant series
// ---------------------------------------------------------------------------

/// One term and running state of the smoothing majorant at a fixed mode
/// and time.
#[derive(Clone, Debug, Serialize)]
pub struct MajorantReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub ratios: Vec<f64>,
    /// True when the tail ratios settle below one.
    pub converges: bool,
    pub alpha: f64,
}

/// Partial sums of the majorant
/// sum_n Z_n B^n exp(-k^2 t / (n+1)) |k|^(-alpha) t^(eps n / 2)
///     u^((n+1)/2) (1+u)^((n+1)/2),
/// with alpha = 2 + eps and u the initial-data norm. The ratio column
/// drives a ratio-test convergence flag. Smoothing exponents eps in
/// [0, 1); at eps = 0 the time factor drops out and small data converges
/// uniformly in t.
pub fn ns_majorant(
    k: f64,
    t: f64,
    eps: f64,
    b: f64,
    u0_norm: f64,
    n_terms: usize,
) -> Result<MajorantReport> {
    if !(t > 0.0) || k == 0.0 || !(0.0..1.0).contains(&eps) || n_terms < 2 || u0_norm < 0.0 {
        return Err(Error::InvalidParam(
            "majorant needs t > 0, k != 0, eps in [0, 1), n >= 2".into(),
        ));
    }
    let alpha = 2.0 + eps;
    let mut terms = Vec::with_capacity(n_terms);
    for n in 1..=n_terms {
        let zn = count_zn(n as u32) as f64;
        let half_pow = (n as f64 + 1.0) / 2.0;
        let term = zn
            * b.powi(n as i32)
            * (-k * k * t / (n as f64 + 1.0)).exp()
            * k.abs().powf(-alpha)
            * t.powf(eps * n as f64 / 2.0)
            * u0_norm.powf(half_pow)
            * (1.0 + u0_norm).powf(half_pow);
        terms.push(term);
    }
    let mut partial_sums = Vec::with_capacity(n_terms);
    let mut acc = 0.0;
    for &t in &terms {
        acc += t;
        partial_sums.push(acc);
    }
    let ratios: Vec<f64> =
        terms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN }).collect();
    // the tail ratio approaches a limit; flag convergence when the last
    // few ratios sit strictly below one
    let tail = ratios.iter().rev().take(3).collect::<Vec<_>>();
    let converges = !tail.is_empty() && tail.iter().all(|r| r.is_finite() && **r < 1.0);
    Ok(MajorantReport { terms, partial_sums, ratios, converges, alpha })
}

// ---------------------------------------------------------------------------
// Tree-class growth reports
// ---------------------------------------------------------------------------

/// Count and tree-factorial range of one class at one weight.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClassBand {
    pub count: usize,
    pub min_factorial: Option<f64>,
    pub max_factorial: Option<f64>,
}

impl ClassBand {
    fn empty() -> Self {
        Self { count: 0, min_factorial: None, max_factorial: None }
    }

    fn admit(&mut self, factorial: f64) {
        self.count += 1;
        self.min_factorial =
            Some(self.min_factorial.map_or(factorial, |m: f64| m.min(factorial)));
        self.max_factorial =
            Some(self.max_factorial.map_or(factorial, |m: f64| m.max(factorial)));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassCounts {
    pub weight: u32,
    pub simple: ClassBand,
    pub short: ClassBand,
    pub other: ClassBand,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeClassReport {
    pub alpha: f64,
    pub band: f64,
    pub counts: Vec<ClassCounts>,
    /// Every simple tree's factorial equals weight!.
    pub simple_factorial_is_weight_factorial: bool,
    /// Fit of the per-weight largest short-class factorial to
    /// D1 n^(-1) D2^n (log regression); None with fewer than two weights.
    pub short_fit_upper: Option<(f64, f64)>,
    /// Same fit through the per-weight smallest short-class factorial,
    /// giving the companion lower bound D3 n^(-1) D4^n.
    pub short_fit_lower: Option<(f64, f64)>,
}

/// Classifies all trees over one label up to `max_weight`, records the
/// factorial range of every class at every weight, and fits geometric
/// envelopes to the short-class factorials from both sides.
pub fn tree_class_report(max_weight: u32, alpha: f64, band: f64) -> Result<TreeClassReport> {
    let mut counts = Vec::new();
    let mut simple_ok = true;
    let mut upper_pts: Vec<(f64, f64)> = Vec::new();
    let mut lower_pts: Vec<(f64, f64)> = Vec::new();
    for w in 1..=max_weight {
        let mut row = ClassCounts {
            weight: w,
            simple: ClassBand::empty(),
            short: ClassBand::empty(),
            other: ClassBand::empty(),
        };
        for t in enumerate_trees(1, w)? {
            if t.weight() != w {
                continue;
            }
            let fact: f64 = t.tree_factorial().to_string().parse().unwrap();
            match classify_tree_banded(&t, alpha, band) {
                TreeClass::Simple => {
                    row.simple.admit(fact);
                    let mut wf = 1.0;
                    for i in 1..=w {
                        wf *= i as f64;
                    }
                    if (fact - wf).abs() > 0.5 {
                        simple_ok = false;
                    }
                }
                TreeClass::Short => row.short.admit(fact),
                TreeClass::Other => row.other.admit(fact),
            }
        }
        // ln gamma + ln n = ln D + n ln D', one point per populated weight
        if let Some(hi) = row.short.max_factorial {
            upper_pts.push((w as f64, hi.ln() + (w as f64).ln()));
        }
        if let Some(lo) = row.short.min_factorial {
            lower_pts.push((w as f64, lo.ln() + (w as f64).ln()));
        }
        counts.push(row);
    }
    let envelope = |pts: &[(f64, f64)]| {
        if pts.len() >= 2 {
            let f = fit_line(pts);
            Some((f.intercept.exp(), f.slope.exp()))
        } else {
            None
        }
    };
    Ok(TreeClassReport {
        alpha,
        band,
        counts,
        simple_factorial_is_weight_factorial: simple_ok,
        short_fit_upper: envelope(&upper_pts),
        short_fit_lower: envelope(&lower_pts),
    })
}

/// Least D with Z_n (n+1)^(3/2) <= D^n for all n up to `n_max`.
pub fn zn_least_d(n_max: u32) -> Result<f64> {
    let mut best: f64 = 0.0;
    for n in 1..=n_max {
        let zn = count_zn(n) as f64;
        let val = (zn * (n as f64 + 1.0).powf(1.5)).powf(1.0 / n as f64);
        best = best.max(val);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    pub c1: f64,
    pub c2: f64,
    pub used: usize,
}

/// Fit tree counts per weight to C1 * C2^n over d labels.
pub fn tree_growth_fit(d: u8, max_weight: u32) -> Result<GrowthFit> {
    let trees = enumerate_trees(d, max_weight)?;
    let mut pts = Vec::new();
    for w in 1..=max_weight {
        let count = trees.iter().filter(|t| t.weight() == w).count();
        if count > 0 {
            pts.push((w as f64, (count as f64).ln()));
        }
    }
    let f = fit_line(&pts);
    Ok(GrowthFit { c1: f.intercept.exp(), c2: f.slope.exp(), used: f.used })
}
