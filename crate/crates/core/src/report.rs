//! Monitor-series persistence and verdict aggregation.
//!
//! A flow run produces a [`MonitorSeries`]: per-sample surface functionals
//! plus the speed-weighted integrals needed by the evolution-identity checks.
//! The series serializes to CSV (fixed column order, 17 significant digits,
//! byte-stable for golden-file comparison), JSON (field names verbatim) and a
//! small hand-rolled SVG with the sharp constant drawn as a reference line.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::hypgeom::sphere_area_constant;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("monitor series is empty")]
    EmptySeries,
    #[error("sample times must increase strictly (violated at sample {index})")]
    NonMonotoneTime { index: usize },
    #[error("non-finite value in column {column} at sample {index}")]
    NonFinite { index: usize, column: &'static str },
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Provenance of a run: hash of the canonical config JSON plus the knobs that
/// determine reproducibility.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub n: usize,
    pub resolution: usize,
    pub prng: String,
    pub seed: Option<u64>,
}

/// One monitor record. `f_sigma{m}` is `int F sigma_m dmu` with `F` the flow
/// speed, recorded during the run so evolution-identity residuals use
/// time-aligned data. `sigma3` is zero when only two principal curvatures
/// exist (n = 3).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample<S> {
    pub t: S,
    pub area: S,
    pub sigma1: S,
    pub sigma2: S,
    pub sigma3: S,
    pub f_sigma0: S,
    pub f_sigma1: S,
    pub f_sigma2: S,
    pub f_sigma3: S,
    pub q: S,
    pub umbilic_dev: S,
    pub main_margin: S,
    pub minkowski_margin: S,
    pub mean_area_margin: S,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "area",
    "sigma1",
    "sigma2",
    "sigma3",
    "f_sigma0",
    "f_sigma1",
    "f_sigma2",
    "f_sigma3",
    "q",
    "umbilic_dev",
    "main_margin",
    "minkowski_margin",
    "mean_area_margin",
];

impl<S: Scalar> MonitorSample<S> {
    pub fn columns(&self) -> [S; 14] {
        [
            self.t,
            self.area,
            self.sigma1,
            self.sigma2,
            self.sigma3,
            self.f_sigma0,
            self.f_sigma1,
            self.f_sigma2,
            self.f_sigma3,
            self.q,
            self.umbilic_dev,
            self.main_margin,
            self.minkowski_margin,
            self.mean_area_margin,
        ]
    }

    fn from_columns(c: [S; 14]) -> Self {
        Self {
            t: c[0],
            area: c[1],
            sigma1: c[2],
            sigma2: c[3],
            sigma3: c[4],
            f_sigma0: c[5],
            f_sigma1: c[6],
            f_sigma2: c[7],
            f_sigma3: c[8],
            q: c[9],
            umbilic_dev: c[10],
            main_margin: c[11],
            minkowski_margin: c[12],
            mean_area_margin: c[13],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSeries<S> {
    pub meta: RunMeta,
    pub samples: Vec<MonitorSample<S>>,
}

impl<S: Scalar> MonitorSeries<S> {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.samples.is_empty() {
            return Err(ReportError::EmptySeries);
        }
        for (index, pair) in self.samples.windows(2).enumerate() {
            if !(pair[1].t > pair[0].t) {
                return Err(ReportError::NonMonotoneTime { index: index + 1 });
            }
        }
        for (index, s) in self.samples.iter().enumerate() {
            for (value, column) in s.columns().iter().zip(CSV_COLUMNS) {
                if !value.is_finite() {
                    return Err(ReportError::NonFinite { index, column });
                }
            }
        }
        Ok(())
    }

    /// CSV bytes: one header row, then one row per sample at 17 significant
    /// digits (lossless for f64).
    pub fn to_csv(&self) -> Result<Vec<u8>, ReportError> {
        self.validate()?;
        let mut out = String::with_capacity(self.samples.len() * 24 * 14 + 256);
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.columns().iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out.into_bytes())
    }

    /// Parses the CSV produced by [`Self::to_csv`]; metadata is not part of
    /// the CSV, so callers supply it.
    pub fn from_csv(meta: RunMeta, bytes: &[u8]) -> Result<Self, ReportError> {
        let text = std::str::from_utf8(bytes).map_err(|e| ReportError::CsvParse {
            line: 0,
            message: e.to_string(),
        })?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ReportError::EmptySeries)?;
        if header != CSV_COLUMNS.join(",") {
            return Err(ReportError::CsvParse {
                line: 1,
                message: "unexpected header".into(),
            });
        }
        let mut samples = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut cols = [S::zero(); 14];
            let mut parts = line.split(',');
            for c in cols.iter_mut() {
                let tok = parts.next().ok_or_else(|| ReportError::CsvParse {
                    line: i + 1,
                    message: "short row".into(),
                })?;
                let x: f64 = tok.parse().map_err(|e| ReportError::CsvParse {
                    line: i + 1,
                    message: format!("{e}"),
                })?;
                *c = S::cst(x);
            }
            samples.push(MonitorSample::from_columns(cols));
        }
        let series = Self { meta, samples };
        series.validate()?;
        Ok(series)
    }

    pub fn to_json(&self) -> Result<Vec<u8>, ReportError> {
        self.validate()?;
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ReportError> {
        let series: Self = serde_json::from_slice(bytes)?;
        series.validate()?;
        Ok(series)
    }

    /// Minimal line-plot SVG: `Q(t)` with the sharp constant as a dashed
    /// reference line, `|Sigma_t|` (log scale), `max |kappa_i - 1|` (log scale).
    pub fn to_svg(&self) -> Result<Vec<u8>, ReportError> {
        self.validate()?;
        let n = self.meta.n;
        let sharp = S::cst((n - 1) as f64 * (n - 2) as f64 / 2.0)
            * sphere_area_constant::<S>(n).powf(S::cst(2.0 / (n - 1) as f64));
        let t: Vec<f64> = self.samples.iter().map(|s| s.t.to_f64().unwrap()).collect();
        let q: Vec<f64> = self.samples.iter().map(|s| s.q.to_f64().unwrap()).collect();
        let log_area: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.area.to_f64().unwrap().max(1e-300).log10())
            .collect();
        let log_dev: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.umbilic_dev.to_f64().unwrap().max(1e-300).log10())
            .collect();

        let mut svg = String::new();
        svg.push_str(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"760\" \
             viewBox=\"0 0 760 760\" font-family=\"monospace\" font-size=\"11\">\n",
        );
        svg.push_str(&format!(
            "<text x=\"20\" y=\"18\">run {} (n={}, N={})</text>\n",
            self.meta.config_hash, n, self.meta.resolution
        ));
        panel(&mut svg, 40.0, &t, &q, "Q(t)", Some(sharp.to_f64().unwrap()));
        panel(&mut svg, 280.0, &t, &log_area, "log10 area(t)", None);
        panel(&mut svg, 520.0, &t, &log_dev, "log10 max|kappa-1|(t)", None);
        svg.push_str("</svg>\n");
        Ok(svg.into_bytes())
    }
}

const PANEL_W: f64 = 680.0;
const PANEL_H: f64 = 200.0;
const PANEL_X: f64 = 60.0;

fn panel(svg: &mut String, y0: f64, t: &[f64], y: &[f64], title: &str, reference: Option<f64>) {
    let (tmin, tmax) = (t[0], t[t.len() - 1]);
    let mut ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = reference {
        ymin = ymin.min(r);
        ymax = ymax.max(r);
    }
    if ymax - ymin < 1e-12 {
        ymax += 0.5;
        ymin -= 0.5;
    }
    let pad = 0.05 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);
    let sx = |tt: f64| PANEL_X + (tt - tmin) / (tmax - tmin).max(1e-300) * PANEL_W;
    let sy = |yy: f64| y0 + PANEL_H - (yy - ymin) / (ymax - ymin) * PANEL_H;

    svg.push_str(&format!(
        "<rect x=\"{PANEL_X}\" y=\"{y0}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" \
         fill=\"none\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{PANEL_X}\" y=\"{}\">{title}</text>\n",
        y0 - 6.0
    ));
    svg.push_str(&format!(
        "<text x=\"6\" y=\"{}\">{:.6e}</text>\n",
        y0 + 10.0,
        ymax
    ));
    svg.push_str(&format!(
        "<text x=\"6\" y=\"{}\">{:.6e}</text>\n",
        y0 + PANEL_H,
        ymin
    ));
    svg.push_str(&format!(
        "<text x=\"{PANEL_X}\" y=\"{}\">t={tmin:.3}</text>\n",
        y0 + PANEL_H + 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">t={tmax:.3}</text>\n",
        PANEL_X + PANEL_W,
        y0 + PANEL_H + 14.0
    ));

    if let Some(r) = reference {
        svg.push_str(&format!(
            "<line x1=\"{PANEL_X}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"red\" \
             stroke-dasharray=\"6 4\"/>\n",
            sy(r),
            PANEL_X + PANEL_W,
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"red\" text-anchor=\"end\">sharp {r:.9e}</text>\n",
            PANEL_X + PANEL_W - 4.0,
            sy(r) - 4.0
        ));
    }

    // decimate long series so file size stays reasonable
    let stride = (t.len() / 2000).max(1);
    let mut points = String::new();
    for i in (0..t.len()).step_by(stride).chain(std::iter::once(t.len() - 1)) {
        points.push_str(&format!("{:.2},{:.2} ", sx(t[i]), sy(y[i])));
    }
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"steelblue\" points=\"{}\"/>\n",
        points.trim_end()
    ));
}

/// Emission formats for [`emit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
    Svg,
}

pub fn emit<S: Scalar>(series: &MonitorSeries<S>, format: EmitFormat) -> Result<Vec<u8>, ReportError> {
    match format {
        EmitFormat::Csv => series.to_csv(),
        EmitFormat::Json => series.to_json(),
        EmitFormat::Svg => series.to_svg(),
    }
}

/// Tolerances (absolute unless noted) used by [`verdicts`].
#[derive(Clone, Copy, Debug)]
pub struct VerdictTolerances<S> {
    /// Allowed upward drift of `Q` per sample.
    pub q_drift: S,
    /// Slack below the sharp constant allowed for `min Q`.
    pub q_limit_slack: S,
    /// Allowed negativity of the initial inequality margin.
    pub margin_floor: S,
    /// Relative tolerance in `d|Sigma|/dt >= |Sigma|`.
    pub area_growth_rel: S,
    /// Allowed deviation of `Q` from `4 pi` for n = 3 runs.
    pub gauss_bonnet: S,
}

impl<S: Scalar> Default for VerdictTolerances<S> {
    fn default() -> Self {
        Self {
            q_drift: S::cst(1e-8),
            q_limit_slack: S::cst(1e-6),
            margin_floor: S::cst(1e-6),
            area_growth_rel: S::cst(1e-5),
            gauss_bonnet: S::cst(1e-4),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Pass,
    Fail,
    Exempt,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub claim: &'static str,
    pub status: VerdictStatus,
    /// Measured extremal violation (sign convention per claim).
    pub measured: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub verdicts: Vec<Verdict>,
}

impl VerdictReport {
    /// True when no non-exempt verdict failed.
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.status != VerdictStatus::Fail)
    }
}

impl fmt::Display for VerdictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<22} {:<7} {:>13} {:>13}  claim",
            "verdict", "status", "measured", "threshold"
        )?;
        for v in &self.verdicts {
            writeln!(
                f,
                "{:<22} {:<7} {:>13.4e} {:>13.4e}  {}",
                v.name,
                match v.status {
                    VerdictStatus::Pass => "pass",
                    VerdictStatus::Fail => "FAIL",
                    VerdictStatus::Exempt => "exempt",
                },
                v.measured,
                v.threshold,
                v.claim
            )?;
        }
        Ok(())
    }
}

/// Evaluates the standing claims against a recorded series:
/// monotone decrease of `Q` (exempt at n = 3, where it is conserved instead),
/// the sharp lower bound for `Q`, nonnegativity of the initial inequality
/// margin, and the area growth law `d|Sigma|/dt >= |Sigma|`.
pub fn verdicts<S: Scalar>(
    series: &MonitorSeries<S>,
    tol: &VerdictTolerances<S>,
) -> Result<VerdictReport, ReportError> {
    series.validate()?;
    let n = series.meta.n;
    let samples = &series.samples;
    let mut out = Vec::new();

    // Q monotone decreasing
    let max_rise = samples
        .windows(2)
        .map(|w| w[1].q - w[0].q)
        .fold(S::neg_infinity(), S::max);
    if n == 3 {
        out.push(Verdict {
            name: "q-monotone",
            claim: "dQ/dt = 0 identically at n=3 (degenerate); strictness not asserted",
            status: VerdictStatus::Exempt,
            measured: max_rise.to_f64().unwrap_or(f64::NAN),
            threshold: tol.q_drift.to_f64().unwrap_or(f64::NAN),
        });
        let four_pi = S::cst(4.0) * S::PI();
        let worst = samples
            .iter()
            .map(|s| (s.q - four_pi).abs())
            .fold(S::zero(), S::max);
        out.push(Verdict {
            name: "q-conservation",
            claim: "Q = int sigma_2 - area stays at 4 pi on closed surfaces in H^3",
            status: status(worst <= tol.gauss_bonnet),
            measured: worst.to_f64().unwrap_or(f64::NAN),
            threshold: tol.gauss_bonnet.to_f64().unwrap_or(f64::NAN),
        });
    } else {
        out.push(Verdict {
            name: "q-monotone",
            claim: "Q(t) is non-increasing along the flow",
            status: status(max_rise <= tol.q_drift),
            measured: max_rise.to_f64().unwrap_or(f64::NAN),
            threshold: tol.q_drift.to_f64().unwrap_or(f64::NAN),
        });

        let sharp = S::cst((n - 1) as f64 * (n - 2) as f64 / 2.0)
            * sphere_area_constant::<S>(n).powf(S::cst(2.0 / (n - 1) as f64));
        let min_gap = samples
            .iter()
            .map(|s| s.q - sharp)
            .fold(S::infinity(), S::min);
        out.push(Verdict {
            name: "q-lower-bound",
            claim: "Q(t) >= (n-1)(n-2)/2 omega^{2/(n-1)} for all samples",
            status: status(min_gap >= -tol.q_limit_slack),
            measured: min_gap.to_f64().unwrap_or(f64::NAN),
            threshold: (-tol.q_limit_slack).to_f64().unwrap_or(f64::NAN),
        });
    }

    out.push(Verdict {
        name: "initial-margin",
        claim: "int sigma_2 >= c_n (omega^{2/(n-1)} area^{(n-3)/(n-1)} + area) at t=0",
        status: status(samples[0].main_margin >= -tol.margin_floor),
        measured: samples[0].main_margin.to_f64().unwrap_or(f64::NAN),
        threshold: (-tol.margin_floor).to_f64().unwrap_or(f64::NAN),
    });

    // strict area growth and d|Sigma|/dt >= |Sigma|
    let strictly_increasing = samples.windows(2).all(|w| w[1].area > w[0].area);
    let mut worst_rate = S::infinity();
    for w in samples.windows(3) {
        let dt = w[2].t - w[0].t;
        let rate = (w[2].area - w[0].area) / dt / w[1].area;
        worst_rate = worst_rate.min(rate);
    }
    let growth_ok = strictly_increasing
        && (samples.len() < 3 || worst_rate >= S::one() - tol.area_growth_rel);
    out.push(Verdict {
        name: "area-growth",
        claim: "area strictly increases and d(area)/dt >= area",
        status: status(growth_ok),
        measured: worst_rate.to_f64().unwrap_or(f64::NAN),
        threshold: (S::one() - tol.area_growth_rel).to_f64().unwrap_or(f64::NAN),
    });

    Ok(VerdictReport { verdicts: out })
}

fn status(ok: bool) -> VerdictStatus {
    if ok {
        VerdictStatus::Pass
    } else {
        VerdictStatus::Fail
    }
}
