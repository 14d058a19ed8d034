//! Trace CSV, text summaries and SVG plots.

use std::fmt::Write as _;
use std::io::{Read, Write};

use thiserror::Error;

use crate::objectives::Direction;
use crate::runner::{
    study_z_scores, summarize, Study, StudySummary, Sweep, Trace, TraceRecord, ZScores,
};

pub const TRACE_HEADER: [&str; 8] = [
    "strategy",
    "repeat",
    "iteration",
    "x",
    "y",
    "best_so_far",
    "c_v",
    "mean_posterior_variance",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("trace file has no rows")]
    Empty,
}

/// One line of the trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub strategy: String,
    pub repeat: usize,
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub best_so_far: f64,
    pub contextual_variance: Option<f64>,
    pub mean_posterior_variance: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Rows for every surviving trace, in strategy, repeat, iteration order.
pub fn trace_rows(study: &Study) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    for outcome in &study.outcomes {
        for (repeat, trace) in &outcome.traces {
            rows.extend(trace.records.iter().map(|r| TraceRow {
                strategy: outcome.summary.label.clone(),
                repeat: *repeat,
                iteration: r.iteration,
                x: r.point.clone(),
                y: r.value,
                best_so_far: r.best_so_far,
                contextual_variance: r.contextual_variance,
                mean_posterior_variance: r.mean_posterior_variance,
            }));
        }
    }
    rows
}

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        let x: Vec<String> = r.x.iter().map(|v| num(*v)).collect();
        w.write_record([
            r.strategy.clone(),
            r.repeat.to_string(),
            r.iteration.to_string(),
            x.join(";"),
            num(r.y),
            num(r.best_so_far),
            opt_num(r.contextual_variance),
            opt_num(r.mean_posterior_variance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_trace_csv<W: Write>(out: W, study: &Study) -> Result<(), ReportError> {
    write_trace_csv(out, &trace_rows(study))
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(ReportError::Parse {
            row: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |field: &str, v: &str| ReportError::Parse {
            row,
            message: format!("invalid {field} {v:?}"),
        };
        let float = |idx: usize| -> Result<f64, ReportError> {
            let v = &rec[idx];
            v.parse().map_err(|_| bad(TRACE_HEADER[idx], v))
        };
        let opt_float = |idx: usize| -> Result<Option<f64>, ReportError> {
            if rec[idx].is_empty() {
                Ok(None)
            } else {
                float(idx).map(Some)
            }
        };
        let x = rec[3]
            .split(';')
            .map(|s| s.parse::<f64>().map_err(|_| bad("x", s)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(TraceRow {
            strategy: rec[0].to_string(),
            repeat: rec[1].parse().map_err(|_| bad("repeat", &rec[1]))?,
            iteration: rec[2].parse().map_err(|_| bad("iteration", &rec[2]))?,
            x,
            y: float(4)?,
            best_so_far: float(5)?,
            contextual_variance: opt_float(6)?,
            mean_posterior_variance: opt_float(7)?,
        });
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

/// Recovers the optimization direction from how `best_so_far` tracks `y`.
/// Ambiguous files (every trace constant) are read as minimization.
pub fn infer_direction(rows: &[TraceRow]) -> Direction {
    let consistent = |dir: Direction| {
        let mut prev: Option<(&str, usize, f64)> = None;
        rows.iter().all(|r| {
            let expected = match prev {
                Some((s, rep, best)) if s == r.strategy && rep == r.repeat => dir.best(best, r.y),
                _ => r.y,
            };
            prev = Some((&r.strategy, r.repeat, r.best_so_far));
            expected == r.best_so_far
        })
    };
    if !consistent(Direction::Minimize) && consistent(Direction::Maximize) {
        Direction::Maximize
    } else {
        Direction::Minimize
    }
}

/// Regroups rows into per-strategy traces, keeping first-seen strategy order.
pub fn traces_from_rows(rows: &[TraceRow], direction: Direction) -> Vec<(String, Vec<Trace>)> {
    let mut groups: Vec<(String, Vec<(usize, Trace)>)> = Vec::new();
    for r in rows {
        let gi = match groups.iter().position(|(s, _)| *s == r.strategy) {
            Some(i) => i,
            None => {
                groups.push((r.strategy.clone(), Vec::new()));
                groups.len() - 1
            }
        };
        let traces = &mut groups[gi].1;
        let ti = match traces.iter().position(|(rep, _)| *rep == r.repeat) {
            Some(i) => i,
            None => {
                traces.push((
                    r.repeat,
                    Trace {
                        seed: 0,
                        direction,
                        records: Vec::new(),
                        failures: Vec::new(),
                    },
                ));
                traces.len() - 1
            }
        };
        traces[ti].1.records.push(TraceRecord {
            iteration: r.iteration,
            point: r.x.clone(),
            value: r.y,
            best_so_far: r.best_so_far,
            contextual_variance: r.contextual_variance,
            mean_posterior_variance: r.mean_posterior_variance,
            kernel_valid: None,
        });
    }
    groups
        .into_iter()
        .map(|(s, mut ts)| {
            ts.sort_by_key(|(rep, _)| *rep);
            for (_, t) in &mut ts {
                t.records.sort_by_key(|r| r.iteration);
            }
            (s, ts.into_iter().map(|(_, t)| t).collect())
        })
        .collect()
}

/// Everything the text summary and the plot need.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportView {
    pub objective: String,
    pub direction: Direction,
    pub n_init: usize,
    pub repeats: usize,
    pub summaries: Vec<StudySummary>,
    pub z: Vec<ZScores>,
}

impl ReportView {
    pub fn from_study(study: &Study) -> Self {
        Self {
            objective: study.objective.clone(),
            direction: study.direction,
            n_init: study.n_init,
            repeats: study.repeats,
            summaries: study.summaries().cloned().collect(),
            z: study.z.clone(),
        }
    }

    /// Rebuilds summaries from CSV rows. The initial design size is the
    /// number of leading rows without a `c_v` value.
    pub fn from_rows(objective: &str, rows: &[TraceRow], resamples: usize, seed: u64) -> Self {
        let direction = infer_direction(rows);
        let groups = traces_from_rows(rows, direction);
        let n_init = groups
            .first()
            .and_then(|(_, ts)| ts.first())
            .map_or(0, |t| {
                t.records
                    .iter()
                    .take_while(|r| r.contextual_variance.is_none())
                    .count()
            });
        let repeats = groups.iter().map(|(_, ts)| ts.len()).max().unwrap_or(0);
        let summaries: Vec<StudySummary> = groups
            .iter()
            .map(|(label, ts)| summarize(label, ts, resamples, seed))
            .collect();
        let z = study_z_scores(&summaries.iter().collect::<Vec<_>>(), direction);
        Self {
            objective: objective.to_string(),
            direction,
            n_init,
            repeats,
            summaries,
            z,
        }
    }

    pub fn samples(&self) -> usize {
        self.summaries.iter().map(|s| s.mean_trace.len()).min().unwrap_or(0)
    }
}

/// Plain-text table of final means, `delta_ci` and Z scores.
///
/// Final means are given twice: after the full acquisition budget (initial
/// design excluded from the count) and at the same total sample count.
pub fn emit_summary(view: &ReportView) -> String {
    let samples = view.samples();
    let acquisitions = samples.saturating_sub(view.n_init);
    let label_width = view
        .summaries
        .iter()
        .map(|s| s.label.len())
        .chain(["strategy".len()])
        .max()
        .unwrap_or(8);
    let after = format!("mean after {acquisitions} acq.");
    let at = format!("mean at sample {acquisitions}");

    let mut s = String::new();
    let _ = writeln!(s, "objective: {} ({})", view.objective, view.direction.name());
    let _ = writeln!(
        s,
        "initial design: {}  acquisitions: {}  repeats: {}",
        view.n_init, acquisitions, view.repeats
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<w$}  {:>22}  {:>22}  {:>12}  {:>8}",
        "strategy",
        after,
        at,
        "delta_ci",
        "repeats",
        w = label_width
    );
    for sum in &view.summaries {
        let at_value = sum
            .mean_at_sample(acquisitions)
            .map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            s,
            "{:<w$}  {:>22.6}  {:>22}  {:>12.6}  {:>8}",
            sum.label,
            sum.final_mean,
            at_value,
            sum.delta_ci,
            sum.repeats,
            w = label_width
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Z scores (0 is best)");
    let _ = writeln!(
        s,
        "{:<w$}  {:>8}  {:>8}  {:>8}",
        "strategy",
        "search",
        "delta_ci",
        "overall",
        w = label_width
    );
    for z in &view.z {
        let _ = writeln!(
            s,
            "{:<w$}  {:>8.4}  {:>8.4}  {:>8.4}",
            z.label,
            z.search,
            z.delta_ci,
            z.overall,
            w = label_width
        );
    }
    s
}

const PALETTE: [&str; 8] = [
    "#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Frame {
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn new(x_max: usize, values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            x_max: x_max.max(2) as f64,
            y_min: lo - pad,
            y_max: hi + pad,
        }
    }

    fn px(&self, sample: f64) -> f64 {
        LEFT + (sample - 1.0) / (self.x_max - 1.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        TOP + (self.y_max - v) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }

    fn polyline(&self, values: &[f64]) -> String {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let cmd = if i == 0 { 'M' } else { 'L' };
                format!("{cmd}{:.2},{:.2}", self.px(i as f64 + 1.0), self.py(*v))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn axes(&self, out: &mut String, title: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r##"<text class="title" x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"##,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r##"<g class="axes" stroke="#333333" fill="none"><line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/></g>"##
        );
        for k in 0..=5 {
            let sample = 1.0 + (self.x_max - 1.0) * k as f64 / 5.0;
            let x = self.px(sample);
            let _ = writeln!(
                out,
                r##"<text class="tick" x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"##,
                y0 + 16.0,
                sample.round()
            );
            let v = self.y_min + (self.y_max - self.y_min) * k as f64 / 5.0;
            let _ = writeln!(
                out,
                r##"<text class="tick" x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"##,
                x0 - 6.0,
                self.py(v) + 4.0,
                format_tick(v)
            );
        }
        let _ = writeln!(
            out,
            r##"<text class="axis-label" x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">sample</text>"##,
            (x0 + x1) / 2.0,
            HEIGHT - 18.0
        );
        let _ = writeln!(
            out,
            r##"<text class="axis-label" x="20" y="{:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {:.1})">{}</text>"##,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }
}

fn format_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
    )
}

/// Mean best-so-far per strategy with shaded 10th to 90th percentile bands.
pub fn render_plot(view: &ReportView) -> String {
    let n = view.samples();
    let frame = Frame::new(
        n,
        view.summaries.iter().flat_map(|s| {
            s.mean_trace
                .iter()
                .chain(&s.band_low)
                .chain(&s.band_high)
                .copied()
        }),
    );
    let mut out = svg_open();
    frame.axes(
        &mut out,
        &format!("{} ({})", view.objective, view.direction.name()),
        "best so far",
    );
    for (i, s) in view.summaries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let len = s.mean_trace.len().min(n);
        if len == 0 {
            continue;
        }
        let upper = frame.polyline(&s.band_high[..len]);
        let lower: Vec<String> = (0..len)
            .rev()
            .map(|k| format!("L{:.2},{:.2}", frame.px(k as f64 + 1.0), frame.py(s.band_low[k])))
            .collect();
        let _ = writeln!(
            out,
            r##"<path class="band" data-strategy="{}" d="{} {} Z" fill="{color}" fill-opacity="0.15" stroke="none"/>"##,
            escape(&s.label),
            upper,
            lower.join(" ")
        );
        let _ = writeln!(
            out,
            r##"<path class="mean-line" data-strategy="{}" d="{}" fill="none" stroke="{color}" stroke-width="2"/>"##,
            escape(&s.label),
            frame.polyline(&s.mean_trace[..len])
        );
        let ly = TOP + 20.0 * i as f64 + 10.0;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            out,
            r##"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text></g>"##,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One grey mean path per fixed margin and one black AEI path.
pub fn render_sweep_plot(sweep: &Sweep, objective: &str) -> String {
    let n = sweep
        .eps_traces
        .iter()
        .map(Vec::len)
        .chain([sweep.aei_trace.len()])
        .min()
        .unwrap_or(0);
    let frame = Frame::new(
        n,
        sweep
            .eps_traces
            .iter()
            .flatten()
            .chain(&sweep.aei_trace)
            .copied(),
    );
    let mut out = svg_open();
    frame.axes(
        &mut out,
        &format!("{objective}: EI margin sweep vs AEI"),
        "mean best so far",
    );
    for (eps, trace) in sweep.epsilons.iter().zip(&sweep.eps_traces) {
        let _ = writeln!(
            out,
            r##"<path class="eps-path" data-epsilon="{eps:?}" d="{}" fill="none" stroke="#999999" stroke-width="1"/>"##,
            frame.polyline(&trace[..n])
        );
    }
    let _ = writeln!(
        out,
        r##"<path class="aei-path" d="{}" fill="none" stroke="#000000" stroke-width="2.5"/>"##,
        frame.polyline(&sweep.aei_trace[..n])
    );
    let lx = WIDTH - RIGHT + 16.0;
    let _ = writeln!(
        out,
        r##"<g class="legend"><line x1="{lx}" y1="{t}" x2="{:.1}" y2="{t}" stroke="#999999"/><text x="{:.1}" y="{:.1}" font-size="12">EI, fixed margin</text><line x1="{lx}" y1="{u}" x2="{:.1}" y2="{u}" stroke="#000000" stroke-width="2.5"/><text x="{:.1}" y="{:.1}" font-size="12">AEI</text></g>"##,
        lx + 24.0,
        lx + 30.0,
        TOP + 14.0,
        lx + 24.0,
        lx + 30.0,
        TOP + 34.0,
        t = TOP + 10.0,
        u = TOP + 30.0,
    );
    out.push_str("</svg>\n");
    out
}

/// Risk-area lines appended to a sweep summary.
pub fn emit_sweep_summary(sweep: &Sweep, objective: &str) -> String {
    let area = sweep.risk_area();
    let mut s = String::new();
    let _ = writeln!(s, "objective: {objective} ({})", sweep.direction.name());
    let eps: Vec<String> = sweep.epsilons.iter().map(|e| format!("{e:?}")).collect();
    let _ = writeln!(s, "epsilon grid: {}", eps.join(", "));
    let _ = writeln!(s, "repeats per strategy: {}", sweep.study.repeats);
    let _ = writeln!(s);
    let _ = writeln!(s, "risk area relative to AEI");
    let _ = writeln!(s, "loss: {:.6}", area.loss);
    let _ = writeln!(s, "gain: {:.6}", area.gain);
    s
}

/// Provenance for one CLI invocation. Kept apart from the deterministic
/// outputs because it carries wall-clock timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub master_seed: u64,
    pub repeat_seeds: Vec<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config_echo: String,
}

impl std::fmt::Display for RunManifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "tool = ctxbo {}", self.tool_version)?;
        writeln!(f, "command = {}", self.command)?;
        writeln!(f, "master_seed = {}", self.master_seed)?;
        let seeds: Vec<String> = self.repeat_seeds.iter().map(u64::to_string).collect();
        writeln!(f, "repeat_seeds = {}", seeds.join(", "))?;
        writeln!(f, "started_unix = {}", self.started_unix)?;
        writeln!(f, "finished_unix = {}", self.finished_unix)?;
        writeln!(f)?;
        writeln!(f, "# resolved configuration")?;
        f.write_str(&self.config_echo)
    }
}
