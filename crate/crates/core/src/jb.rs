//! The Judy Benjamin benchmark: uniform prior over `R1, R2, B1, B2` and a
//! report fixing `Pr(R1 | R)`.
//!
//! This module tabulates how each update rule moves the probability of Blue
//! and builds the reports printed by the `jb` binary.

use std::fmt::Write as _;

use serde::Serialize;

use crate::belief::{condition, event_probability, Event, FiniteDistribution};
use crate::ce::{ce_update, CeOptions, ConditionalConstraint, ConstraintSet};
use crate::error::{Error, Result};
use crate::second_order::{
    blue_prob, cond_red, expected_blue_given_message, exact_posterior_quadrants,
    independence_check, ks_critical_value, ks_statistic, mc_posterior_quadrants, sample_prior,
    McConfig, McEstimate, MessageBand, PosteriorEstimate, SecondOrderPrior,
};

pub use crate::second_order::{quadrant_space, QUADRANTS};

/// Significance level behind the KS critical values in reports.
pub const KS_ALPHA: f64 = 0.001;

/// Uniform prior over the four quadrants.
pub fn jb_prior() -> FiniteDistribution {
    FiniteDistribution::uniform(quadrant_space())
}

/// Event over the quadrant space.
pub fn quadrant_event(labels: &[&str]) -> Event {
    Event::from_labels(&quadrant_space(), labels).expect("quadrant labels")
}

pub fn blue_event() -> Event {
    quadrant_event(&["B1", "B2"])
}

pub fn blue_of(p: &FiniteDistribution) -> Result<f64> {
    event_probability(p, &blue_event())
}

/// `{Pr(R1 | R) = target}` over the quadrant space.
pub fn jb_constraint(target: f64) -> Result<ConstraintSet> {
    let c = ConditionalConstraint::new(&quadrant_event(&["R1"]), &quadrant_event(&["R1", "R2"]), target)?;
    ConstraintSet::new(&quadrant_space()).with_conditional(c)
}

/// Base-space reading of the report, defined only at the endpoints:
/// `q = 1` rules out R2 and `q = 0` rules out R1.
pub fn base_space_condition(q: f64) -> Option<FiniteDistribution> {
    let excluded = if q == 1.0 {
        "R2"
    } else if q == 0.0 {
        "R1"
    } else {
        return None;
    };
    let keep = quadrant_event(&[excluded]).complement();
    condition(&jb_prior(), &keep).ok()
}

/// `START:STEP:END`, inclusive of `END` (up to rounding).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, end] = parts.as_slice() else {
            return Err(Error::InvalidGrid(format!("`{s}` is not START:STEP:END")));
        };
        let num = |t: &str| -> Result<f64> {
            t.trim().parse::<f64>().map_err(|_| Error::InvalidGrid(format!("`{t}` is not a number")))
        };
        let g = GridSpec { start: num(start)?, step: num(step)?, end: num(end)? };
        g.points()?;
        Ok(g)
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        let GridSpec { start, step, end } = *self;
        if ![start, step, end].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGrid("grid values must be finite".into()));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start > end {
            return Err(Error::InvalidGrid(format!("[{start}, {end}] is not inside [0, 1]")));
        }
        if start == end {
            return Ok(vec![start]);
        }
        if !(step > 0.0) {
            return Err(Error::InvalidGrid("step must be positive".into()));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(Error::InvalidGrid("grid has more than a million points".into()));
        }
        // Snap to 12 decimals so 0.1-style steps print cleanly.
        Ok((0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .map(|q| q.min(end))
            .collect())
    }
}

/// One line of the sweep table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub q: f64,
    pub ce_blue: f64,
    pub hierarchical_blue: f64,
    /// Only at `q ∈ {0, 1}`.
    pub base_condition_blue: Option<f64>,
    pub ce_r1: f64,
    pub ce_r2: f64,
    pub hier_r1: f64,
    pub hier_r2: f64,
}

pub const SWEEP_HEADER: &str = "q,ce_blue,hier_blue,base_cond_blue,ce_r1,ce_r2,hier_r1,hier_r2";

/// CE and hierarchical answers for every `q` in `grid`.
pub fn sweep(grid: &[f64], epsilon: f64, opts: CeOptions) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&q| {
            let band = MessageBand::new(q, epsilon)?;
            let ce = ce_update(&jb_prior(), &jb_constraint(q)?, opts)?.posterior;
            let hier = exact_posterior_quadrants(&band);
            Ok(SweepRow {
                q,
                ce_blue: blue_of(&ce)?,
                hierarchical_blue: expected_blue_given_message(&band),
                base_condition_blue: base_space_condition(q).map(|p| blue_of(&p)).transpose()?,
                ce_r1: ce.probs()[0],
                ce_r2: ce.probs()[1],
                hier_r1: hier.probs()[0],
                hier_r2: hier.probs()[1],
            })
        })
        .collect()
}

/// The sweep as CSV with [`SWEEP_HEADER`]; an absent base value is an empty cell.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let base = r.base_condition_blue.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.q, r.ce_blue, r.hierarchical_blue, base, r.ce_r1, r.ce_r2, r.hier_r1, r.hier_r2
        );
    }
    out
}

/// Line chart of `ce_blue` and `hier_blue` against `q` on `[0, 1] × [0.4, 0.7]`.
pub fn sweep_svg(rows: &[SweepRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let (y_lo, y_hi) = (0.4, 0.7);
    let sx = |q: f64| M + q * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);
    let polyline = |f: &dyn Fn(&SweepRow) -> f64| -> String {
        rows.iter().map(|r| format!("{:.2},{:.2}", sx(r.q), sy(f(r)))).collect::<Vec<_>>().join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y0} H{x1} M{x0},{y0} V{y1}" stroke="black" fill="none"/>"#,
        x0 = sx(0.0),
        y0 = sy(y_lo),
        x1 = sx(1.0),
        y1 = sy(y_hi)
    );
    for i in 0..=4 {
        let q = i as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{q}</text>"#, sx(q), sy(y_lo) + 18.0);
    }
    for v in [0.4, 0.5, 0.6, 0.7] {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{v}</text>"#, sx(0.0) - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(svg, r#"<polyline points="{}" stroke="firebrick" fill="none" stroke-width="2"/>"#, polyline(&|r| r.ce_blue));
    let _ = writeln!(svg, r#"<polyline points="{}" stroke="steelblue" fill="none" stroke-width="2"/>"#, polyline(&|r| r.hierarchical_blue));
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="firebrick">ce_blue</text>"#, sx(0.78), sy(0.69));
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="steelblue">hier_blue</text>"#, sx(0.78), sy(0.67));
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">q</text>"#, sx(0.5), H - 10.0);
    svg.push_str("</svg>\n");
    svg
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastRow {
    pub rule: String,
    pub posterior: FiniteDistribution,
    pub blue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastTable {
    pub epsilon: f64,
    pub rows: Vec<ContrastRow>,
    pub note: String,
}

/// The `q = 1` report read three ways: as the base-space event "not R2", as
/// the band `[1 - ε, 1]` on HQ's conditional, and as a CE constraint.
pub fn contrast(epsilon: f64) -> Result<ContrastTable> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidBand(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let band = MessageBand::new(1.0, epsilon)?;
    let base = base_space_condition(1.0).expect("defined at q = 1");
    let hier = exact_posterior_quadrants(&band);
    let ce = ce_update(&jb_prior(), &jb_constraint(1.0)?, CeOptions::default())?.posterior;
    let rows = vec![
        ContrastRow { rule: "condition on not-R2".into(), blue: blue_of(&base)?, posterior: base },
        ContrastRow {
            rule: format!("hierarchical band q=1, eps={epsilon}"),
            blue: expected_blue_given_message(&band),
            posterior: hier,
        },
        ContrastRow { rule: "cross-entropy Pr(R1|R)=1".into(), blue: blue_of(&ce)?, posterior: ce },
    ];
    let note = format!(
        "base-space conditioning gives Blue = {:.6} and CE agrees ({:.6}); conditioning on the report as an event about HQ's beliefs keeps Blue = {:.6}",
        rows[0].blue, rows[2].blue, rows[1].blue
    );
    Ok(ContrastTable { epsilon, rows, note })
}

impl ContrastTable {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<40} {:>9} {:>9} {:>9} {:>9} {:>9}", "rule", "R1", "R2", "B1", "B2", "Blue");
        for row in &self.rows {
            let p = row.posterior.probs();
            let _ = writeln!(
                out,
                "{:<40} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>9.6}",
                row.rule, p[0], p[1], p[2], p[3], row.blue
            );
        }
        let _ = writeln!(out, "note: {}", self.note);
        out
    }
}

/// Values keyed by quadrant plus Blue, in a fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PerQuadrant<T> {
    #[serde(rename = "R1")]
    pub r1: T,
    #[serde(rename = "R2")]
    pub r2: T,
    #[serde(rename = "B1")]
    pub b1: T,
    #[serde(rename = "B2")]
    pub b2: T,
    #[serde(rename = "Blue")]
    pub blue: T,
}

impl<T: Copy> PerQuadrant<T> {
    pub fn values(&self) -> [T; 5] {
        [self.r1, self.r2, self.b1, self.b2, self.blue]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandReport {
    pub q: f64,
    pub epsilon: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub n: usize,
    pub cond_red: f64,
    pub blue: f64,
    pub critical: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub grid: usize,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McReport {
    pub prior: SecondOrderPrior,
    pub band: BandReport,
    pub config: McConfig,
    pub posterior: PosteriorEstimate,
    pub exact: PerQuadrant<f64>,
    pub z_scores: PerQuadrant<f64>,
    pub max_z: f64,
    pub ks: KsReport,
    pub independence: IndependenceReport,
}

/// Monte Carlo check of the hierarchical posterior against its closed form,
/// with KS distances of both marginals and the independence deviation.
pub fn mc_report(
    prior: &SecondOrderPrior,
    band: &MessageBand,
    cfg: &McConfig,
    independence_grid: usize,
) -> Result<McReport> {
    let posterior = mc_posterior_quadrants(prior, band, cfg)?;
    let exact_dist = prior.exact_posterior(band)?;
    let e = exact_dist.probs();
    let exact = PerQuadrant { r1: e[0], r2: e[1], b1: e[2], b2: e[3], blue: e[2] + e[3] };
    let z = |m: &McEstimate, t: f64| m.z_score(t);
    let z_scores = PerQuadrant {
        r1: z(&posterior.r1, exact.r1),
        r2: z(&posterior.r2, exact.r2),
        b1: z(&posterior.b1, exact.b1),
        b2: z(&posterior.b2, exact.b2),
        blue: z(&posterior.blue, exact.blue),
    };
    let max_z = z_scores.values().into_iter().fold(0.0, f64::max);

    let mut reds = Vec::with_capacity(cfg.samples as usize);
    let mut blues = Vec::with_capacity(cfg.samples as usize);
    for h in sample_prior(prior, cfg) {
        if let Ok(x) = cond_red(&h) {
            reds.push(x);
        }
        blues.push(blue_prob(&h));
    }
    let ks = KsReport {
        n: blues.len(),
        cond_red: ks_statistic(&reds, |x| prior.cond_red_cdf(x))?,
        blue: ks_statistic(&blues, |p| prior.blue_cdf(p))?,
        critical: ks_critical_value(blues.len(), KS_ALPHA),
    };
    let deviation = independence_check(prior, cfg, independence_grid)?;

    Ok(McReport {
        prior: *prior,
        band: BandReport { q: band.q(), epsilon: band.epsilon(), lo: band.lo(), hi: band.hi() },
        config: *cfg,
        posterior,
        exact,
        z_scores,
        max_z,
        ks,
        independence: IndependenceReport { grid: independence_grid, deviation },
    })
}
