//! Grid benchmark and figure data.
//!
//! Output is plain CSV with a header row and every float printed as
//! `{:.16e}`, which round-trips `f64` exactly. Rows are computed in parallel
//! but always written in `(k, c)` order, so repeated runs are byte-identical.

use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{all_bounds, lower_l1, BoundSet};
use crate::bs::{
    inflection_sigma, log_price, price, price_to_delta, price_to_vega, StandardizedOption, Vol,
};
use crate::error::{Error, Result};
use crate::solver::{
    oracle_bisection, solve_log_nr, solve_naive_nr, SolverConfig, SolverResult, TracePoint,
};

/// Cartesian `(k, c)` grid, iterated k-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_values: Vec<f64>,
    pub c_values: Vec<f64>,
}

fn decade(exp: i32) -> f64 {
    // parsed, not powi, so that 1e-40 is the nearest double to 10⁻⁴⁰
    format!("1e{exp}").parse().expect("decimal literal")
}

impl Default for GridSpec {
    /// `k ∈ {0, 1e-10, …, 1e-2, 0.02, 0.03, …, 3}` and
    /// `c ∈ {1e-40, …, 1e-4, 0.0002, 0.0003, …, 0.9999}`.
    fn default() -> Self {
        let mut k_values = vec![0.0];
        k_values.extend((-10..=-2).map(decade));
        k_values.extend((2..=300).map(|i| f64::from(i) / 100.0));
        let mut c_values: Vec<f64> = (-40..=-4).map(decade).collect();
        c_values.extend((2..=9999).map(|i| f64::from(i) / 10_000.0));
        GridSpec { k_values, c_values }
    }
}

impl GridSpec {
    /// The comparison region `0.01 ≤ c ≤ 0.5`, `e^k ≤ 1.25`.
    pub fn subset(&self) -> Self {
        GridSpec {
            k_values: self
                .k_values
                .iter()
                .copied()
                .filter(|k| k.exp() <= 1.25)
                .collect(),
            c_values: self
                .c_values
                .iter()
                .copied()
                .filter(|c| (0.01..=0.5).contains(c))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.k_values.len() * self.c_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        for &c in &self.c_values {
            StandardizedOption::new(c, 0.0)?;
        }
        for &k in &self.k_values {
            StandardizedOption::new(0.5, k)?;
        }
        Ok(())
    }

    /// Reads `{"k_values": [...], "c_values": [...]}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let spec: GridSpec = serde_json::from_str(&text).map_err(|e| Error::GridFile {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        spec.validate().map_err(|e| Error::GridFile {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Iterations per solver; iterates `0..=iters` are reported.
    pub iters: u32,
    pub naive: bool,
    pub bounds: bool,
    /// Log tolerance for the bisection oracle; `None` skips it.
    pub oracle_tol: Option<f64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            iters: 5,
            naive: true,
            bounds: true,
            oracle_tol: Some(1e-14),
        }
    }
}

/// One iterate with its log residual magnitude and absolute price error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterPoint {
    pub sigma: f64,
    pub log_err: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub k: f64,
    pub c: f64,
    pub sigma_oracle: Option<f64>,
    pub log_nr: Vec<IterPoint>,
    pub naive: Vec<IterPoint>,
    pub bounds: Option<BoundSet>,
}

/// Column maxima of one iterate index.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IterMax {
    pub log_err: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GridSummary {
    pub points: usize,
    pub log_nr: Vec<IterMax>,
    pub naive: Vec<IterMax>,
    /// `max |σN - σ(N-1)|` for the log solver.
    pub max_last_step: f64,
    /// `max |σN - σ_oracle|` for the log solver.
    pub max_oracle_gap: Option<f64>,
}

fn fixed_iterations(n: u32) -> SolverConfig {
    SolverConfig {
        max_iter: n.max(1),
        tol_log: f64::MIN_POSITIVE,
        record_trace: true,
        ..SolverConfig::default()
    }
}

/// Iterates `0..=n`, repeating the last one if the solver stopped early.
fn iterates(r: &SolverResult, n: u32, opt: StandardizedOption) -> Vec<IterPoint> {
    let (c, k) = (opt.c(), opt.k());
    let point = |t: &TracePoint| IterPoint {
        sigma: t.sigma,
        log_err: t.log_residual.abs(),
        abs_err: (price(Vol::raw(t.sigma.max(0.0)), k) - c).abs(),
    };
    let mut out: Vec<IterPoint> = r.trace.iter().take(n as usize + 1).map(point).collect();
    let last = *out.last().expect("trace holds the seed");
    out.resize(n as usize + 1, last);
    out
}

pub fn bench_point(k: f64, c: f64, opts: &BenchOptions) -> Result<BenchRow> {
    let opt = StandardizedOption::new(c, k)?;
    let cfg = fixed_iterations(opts.iters);
    let log_nr = iterates(&solve_log_nr(opt, &cfg)?, opts.iters, opt);
    let naive = if opts.naive {
        iterates(&solve_naive_nr(opt, &cfg)?, opts.iters, opt)
    } else {
        Vec::new()
    };
    let sigma_oracle = match opts.oracle_tol {
        Some(tol) => Some(oracle_bisection(opt, tol)?.get()),
        None => None,
    };
    Ok(BenchRow {
        k,
        c,
        sigma_oracle,
        log_nr,
        naive,
        bounds: opts.bounds.then(|| all_bounds(opt)),
    })
}

const BOUND_COLUMNS: [&str; 10] = [
    "l1", "l2", "l_inv", "l3", "l_u23", "u1", "u2", "u3", "u3_prime", "u23",
];

fn bound_values(b: &BoundSet) -> [Option<f64>; 10] {
    [
        Some(b.l1.get()),
        Some(b.l2.get()),
        Some(b.l_inv.get()),
        Some(b.l3.get()),
        Some(b.l_u23.get()),
        Some(b.u1.get()),
        b.u2.map(Vol::get),
        Some(b.u3.get()),
        Some(b.u3_prime.get()),
        Some(b.u23.get()),
    ]
}

struct CsvLine(String);

impl CsvLine {
    fn new() -> Self {
        CsvLine(String::with_capacity(512))
    }

    fn field(&mut self, s: &str) {
        if !self.0.is_empty() {
            self.0.push(',');
        }
        self.0.push_str(s);
    }

    fn num(&mut self, x: f64) {
        self.field(&format!("{x:.16e}"));
    }

    fn opt(&mut self, x: Option<f64>) {
        match x {
            Some(x) => self.num(x),
            None => self.field(""),
        }
    }

    fn finish(mut self, out: &mut impl Write) -> io::Result<()> {
        self.0.push('\n');
        out.write_all(self.0.as_bytes())
    }
}

fn header(opts: &BenchOptions) -> CsvLine {
    let mut h = CsvLine::new();
    h.field("k");
    h.field("c");
    if opts.oracle_tol.is_some() {
        h.field("sigma_oracle");
    }
    let n = opts.iters;
    let groups: &[&str] = if opts.naive { &["", "naive_"] } else { &[""] };
    for prefix in groups {
        for name in ["sigma", "log_err", "abs_err"] {
            for i in 0..=n {
                h.field(&format!("{prefix}{name}_{i}"));
            }
        }
    }
    if opts.bounds {
        for name in BOUND_COLUMNS {
            h.field(name);
        }
    }
    h
}

fn write_row(row: &BenchRow, out: &mut impl Write) -> io::Result<()> {
    let mut line = CsvLine::new();
    line.num(row.k);
    line.num(row.c);
    if let Some(s) = row.sigma_oracle {
        line.num(s);
    }
    for points in [&row.log_nr, &row.naive] {
        for p in points.iter() {
            line.num(p.sigma);
        }
        for p in points.iter() {
            line.num(p.log_err);
        }
        for p in points.iter() {
            line.num(p.abs_err);
        }
    }
    if let Some(b) = &row.bounds {
        for x in bound_values(b) {
            line.opt(x);
        }
    }
    line.finish(out)
}

impl GridSummary {
    fn new(opts: &BenchOptions) -> Self {
        let n = opts.iters as usize + 1;
        GridSummary {
            points: 0,
            log_nr: vec![IterMax::default(); n],
            naive: if opts.naive {
                vec![IterMax::default(); n]
            } else {
                Vec::new()
            },
            max_last_step: 0.0,
            max_oracle_gap: opts.oracle_tol.map(|_| 0.0),
        }
    }

    fn absorb(&mut self, row: &BenchRow) {
        self.points += 1;
        for (m, p) in self.log_nr.iter_mut().zip(&row.log_nr) {
            m.log_err = m.log_err.max(p.log_err);
            m.abs_err = m.abs_err.max(p.abs_err);
        }
        for (m, p) in self.naive.iter_mut().zip(&row.naive) {
            m.log_err = m.log_err.max(p.log_err);
            m.abs_err = m.abs_err.max(p.abs_err);
        }
        if let [.., a, b] = row.log_nr.as_slice() {
            self.max_last_step = self.max_last_step.max((b.sigma - a.sigma).abs());
        }
        if let (Some(gap), Some(s), Some(last)) = (
            self.max_oracle_gap.as_mut(),
            row.sigma_oracle,
            row.log_nr.last(),
        ) {
            *gap = gap.max((last.sigma - s).abs());
        }
    }

    /// Human-readable report, one line per iterate.
    pub fn write_report(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "points: {}", self.points)?;
        for (i, m) in self.log_nr.iter().enumerate() {
            write!(
                out,
                "iter {i}: log-nr max |g| = {:.3e}, max |C - c| = {:.3e}",
                m.log_err, m.abs_err
            )?;
            if let Some(n) = self.naive.get(i) {
                write!(
                    out,
                    "; naive max |g| = {:.3e}, max |C - c| = {:.3e}",
                    n.log_err, n.abs_err
                )?;
            }
            writeln!(out)?;
        }
        if self.log_nr.len() > 1 {
            let n = self.log_nr.len() - 1;
            writeln!(
                out,
                "max |sigma_{n} - sigma_{}| = {:.3e}",
                n - 1,
                self.max_last_step
            )?;
        }
        if let Some(gap) = self.max_oracle_gap {
            writeln!(out, "max |sigma - oracle| = {gap:.3e}")?;
        }
        Ok(())
    }
}

/// Evaluates every grid point and streams CSV rows to `out` (pass
/// [`io::sink`] to keep only the summary).
pub fn run_grid_bench(
    spec: &GridSpec,
    opts: &BenchOptions,
    out: &mut impl Write,
) -> Result<GridSummary> {
    spec.validate()?;
    let io_err = |source| Error::Io {
        path: "<output>".into(),
        source,
    };
    header(opts).finish(out).map_err(io_err)?;
    let mut summary = GridSummary::new(opts);
    for &k in &spec.k_values {
        let rows: Vec<BenchRow> = spec
            .c_values
            .par_iter()
            .map(|&c| bench_point(k, c, opts))
            .collect::<Result<_>>()?;
        for row in &rows {
            summary.absorb(row);
            write_row(row, out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;
    Ok(summary)
}

/// Which figure to emit data for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Price, `C_D`, log price and `C_V` against `σ` at fixed `k`.
    PriceShapes,
    /// Every bound and the exact volatility against `c` at fixed `k`.
    BoundsVsPrice,
    /// Every bound against `k` at fixed `σ`.
    BoundsVsK,
}

impl FromStr for FigureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "price-shapes" => Ok(FigureKind::PriceShapes),
            "bounds-vs-price" => Ok(FigureKind::BoundsVsPrice),
            "bounds-vs-k" => Ok(FigureKind::BoundsVsK),
            _ => Err(Error::UnknownFigure(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureParams {
    /// Log-strike for `PriceShapes` and `BoundsVsPrice`.
    pub k: f64,
    /// Volatility for `BoundsVsK`.
    pub sigma: f64,
    pub points: usize,
    /// Upper end of the `σ` axis (`PriceShapes`) or `k` axis (`BoundsVsK`).
    pub x_max: f64,
    /// Replace the price axis by `L1(c)` in `BoundsVsPrice`.
    pub l1_axis: bool,
}

impl Default for FigureParams {
    fn default() -> Self {
        FigureParams {
            k: std::f64::consts::LN_2,
            sigma: 0.2,
            points: 200,
            x_max: 3.0,
            l1_axis: false,
        }
    }
}

/// Writes the data behind one figure as CSV. The last column `inflection`
/// is 1 on the row placed exactly at the inflection point `σ = √(2k)`.
pub fn emit_figure_data(
    which: FigureKind,
    params: &FigureParams,
    out: &mut impl Write,
) -> Result<()> {
    if params.points < 2 {
        return Err(Error::InvalidConfig("figure needs at least 2 points"));
    }
    let io_err = |source| Error::Io {
        path: "<output>".into(),
        source,
    };
    match which {
        FigureKind::PriceShapes => price_shapes(params, out).map_err(io_err),
        FigureKind::BoundsVsPrice => bounds_vs_price(params, out),
        FigureKind::BoundsVsK => bounds_vs_k(params, out),
    }
}

/// `x_0 < … < x_n` with the marker value spliced in at its sorted position,
/// replacing any grid point that differs from it only by rounding.
fn with_marker(xs: impl Iterator<Item = f64>, marker: f64) -> Vec<(f64, bool)> {
    let near = |x: f64| (x - marker).abs() <= 8.0 * f64::EPSILON * marker.abs();
    let mut v: Vec<(f64, bool)> = xs.filter(|&x| !near(x)).map(|x| (x, false)).collect();
    let at = v.partition_point(|&(x, _)| x < marker);
    v.insert(at, (marker, true));
    v
}

fn price_shapes(p: &FigureParams, out: &mut impl Write) -> io::Result<()> {
    let k = p.k;
    let n = p.points;
    let marker = inflection_sigma(k).get();
    let xs = (1..=n).map(|i| p.x_max * i as f64 / n as f64);
    let mut h = CsvLine::new();
    for name in [
        "sigma",
        "price",
        "price_to_delta",
        "log_price",
        "price_to_vega",
        "inflection",
    ] {
        h.field(name);
    }
    h.finish(out)?;
    for (s, mark) in with_marker(xs, marker) {
        if s <= 0.0 {
            continue;
        }
        let v = Vol::raw(s);
        let mut line = CsvLine::new();
        line.num(s);
        line.num(price(v, k));
        line.opt(price_to_delta(v, k).ok());
        line.opt(log_price(v, k).ok());
        line.opt(price_to_vega(v, k).ok());
        line.field(if mark { "1" } else { "0" });
        line.finish(out)?;
    }
    Ok(())
}

fn bounds_header(first: &str) -> CsvLine {
    let mut h = CsvLine::new();
    for name in [first, "c", "k", "sigma"] {
        h.field(name);
    }
    for name in BOUND_COLUMNS {
        h.field(name);
    }
    h.field("inflection");
    h
}

fn bounds_line(x: f64, opt: StandardizedOption, sigma: f64, mark: bool) -> CsvLine {
    let mut line = CsvLine::new();
    line.num(x);
    line.num(opt.c());
    line.num(opt.k());
    line.num(sigma);
    for v in bound_values(&all_bounds(opt)) {
        line.opt(v);
    }
    line.field(if mark { "1" } else { "0" });
    line
}

fn bounds_vs_price(p: &FigureParams, out: &mut impl Write) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<output>".into(),
        source,
    };
    let k = p.k;
    let n = p.points;
    let marker = price(inflection_sigma(k), k);
    let cs = (1..n).map(|i| i as f64 / n as f64);
    bounds_header(if p.l1_axis { "l1_of_c" } else { "c_axis" })
        .finish(out)
        .map_err(io_err)?;
    for (c, mark) in with_marker(cs, marker) {
        if !(c > 0.0 && c < 1.0) {
            continue;
        }
        let opt = StandardizedOption::new(c, k)?;
        let sigma = oracle_bisection(opt, 0.0)?.get();
        let x = if p.l1_axis { lower_l1(opt).get() } else { c };
        bounds_line(x, opt, sigma, mark)
            .finish(out)
            .map_err(io_err)?;
    }
    Ok(())
}

fn bounds_vs_k(p: &FigureParams, out: &mut impl Write) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<output>".into(),
        source,
    };
    let sigma = Vol::new(p.sigma)?;
    let n = p.points;
    let marker = 0.5 * sigma.get() * sigma.get();
    let ks = (0..n).map(|i| p.x_max * i as f64 / (n - 1) as f64);
    bounds_header("k_axis").finish(out).map_err(io_err)?;
    for (k, mark) in with_marker(ks, marker) {
        let c = price(sigma, k);
        // the price underflows or leaves (0, 1) at the ends of the k axis
        let Ok(opt) = StandardizedOption::new(c, k) else {
            continue;
        };
        bounds_line(k, opt, sigma.get(), mark)
            .finish(out)
            .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.k_values.len(), 309);
        assert_eq!(g.c_values.len(), 37 + 9998);
        assert_eq!(g.k_values[1], 1e-10);
        assert_eq!(g.k_values[10], 0.02);
        assert_eq!(*g.k_values.last().unwrap(), 3.0);
        assert_eq!(g.c_values[0], 1e-40);
        assert_eq!(g.c_values[36], 1e-4);
        assert_eq!(g.c_values[37], 0.0002);
        assert_eq!(*g.c_values.last().unwrap(), 0.9999);
        assert!(g.k_values.windows(2).all(|w| w[0] < w[1]));
        assert!(g.c_values.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subset_region() {
        let s = GridSpec::default().subset();
        assert!(s.k_values.iter().all(|k| k.exp() <= 1.25));
        assert!(s.c_values.iter().all(|c| (0.01..=0.5).contains(c)));
        assert_eq!(*s.k_values.last().unwrap(), 0.22);
        assert_eq!(s.c_values.len(), 4901);
    }

    #[test]
    fn invalid_grid_rejected() {
        let g = GridSpec {
            k_values: vec![0.1],
            c_values: vec![0.5, 1.5],
        };
        assert!(g.validate().is_err());
        let g = GridSpec {
            k_values: vec![-1.0],
            c_values: vec![0.5],
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn figure_kind_parse() {
        assert_eq!(
            "bounds-vs-k".parse::<FigureKind>().unwrap(),
            FigureKind::BoundsVsK
        );
        assert!("fig4".parse::<FigureKind>().is_err());
    }

    #[test]
    fn marker_is_spliced_in_order() {
        let v = with_marker([0.1, 0.2, 0.3].into_iter(), 0.25);
        assert_eq!(
            v,
            vec![(0.1, false), (0.2, false), (0.25, true), (0.3, false)]
        );
        let v = with_marker([0.1, 0.2].into_iter(), 0.2);
        assert_eq!(v, vec![(0.1, false), (0.2, true)]);
        let m = 0.2_f64 * 0.2 / 2.0;
        let v = with_marker([0.0, 0.02, 0.04].into_iter(), m);
        assert_eq!(v, vec![(0.0, false), (m, true), (0.04, false)]);
    }
}
