//! Experiment driver: sweeps over `sin θ`, onset bisection, CSV and gnuplot
//! output, figure presets and the POVM interchange format.
//!
//! Every grid point is an independent solve, so sweeps fan out over a small
//! thread pool and are reassembled in grid order. Output is deterministic for a
//! given spec regardless of the number of workers.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::bounds::bound_table;
use crate::channels::{noisy_family, NoiseChannel, NoiseMode};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Pauli, C64};
use crate::sdp::{solve, Povm, SolveReport, SolveStatus, SolverConfig};
use crate::states::{build_family, theta_from_sin, StateFamily, DEFAULT_MAX_QUBITS};

/// Largest `sin θ` actually evaluated. `sin θ = 1` is `θ = π/2`, outside the
/// family's domain, so the top of every grid is pulled in to this value.
pub const SIN_MAX: f64 = 1.0 - 1e-6;

/// Bisection stops once the bracket is this narrow.
pub const ONSET_RESOLUTION: f64 = 1e-3;

/// Allowed upward jitter of `σ` along increasing `sin θ`.
pub const MONOTONE_JITTER: f64 = 1e-6;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "EXCLUSION_LAB_THREADS";

pub const CSV_HEADER: &str = "sin_theta,sigma,sigma_root,dual,gap,iterations,optimal,status";

/// Noise applied to every family of a sweep, independent of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: Pauli,
    pub p: f64,
    /// Affected qubits in collective mode; ignored in independent mode.
    pub j: usize,
    pub mode: NoiseMode,
}

impl NoiseSpec {
    pub fn collective(kind: Pauli, p: f64, j: usize) -> Self {
        Self {
            kind,
            p,
            j,
            mode: NoiseMode::Collective,
        }
    }

    pub fn independent(kind: Pauli, p: f64) -> Self {
        Self {
            kind,
            p,
            j: 0,
            mode: NoiseMode::Independent,
        }
    }

    pub fn channel(&self, n: usize) -> Result<NoiseChannel> {
        match self.mode {
            NoiseMode::Collective => NoiseChannel::collective(self.kind, self.p, self.j, n),
            NoiseMode::Independent => NoiseChannel::independent(self.kind, self.p, n),
        }
    }
}

/// Evenly spaced grid over `sin θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaAxis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Default for ThetaAxis {
    fn default() -> Self {
        Self::unit(101)
    }
}

impl ThetaAxis {
    /// `count` points spanning `[0, 1]`.
    pub fn unit(count: usize) -> Self {
        Self {
            start: 0.0,
            end: 1.0,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least 2 points, got {}",
                self.count
            )));
        }
        if !(0.0 <= self.start && self.start < self.end && self.end <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "grid [{}, {}] is not an increasing range inside [0, 1]",
                self.start, self.end
            )));
        }
        if self.start >= SIN_MAX {
            return Err(Error::InvalidSpec("grid starts above the largest usable sin θ".into()));
        }
        Ok(())
    }

    /// Grid values, with anything above [`SIN_MAX`] clamped to it.
    pub fn points(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let s = if i + 1 == self.count {
                    self.end
                } else {
                    self.start + step * i as f64
                };
                s.min(SIN_MAX)
            })
            .collect()
    }
}

/// One curve: a qubit count, optional noise, a grid and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n: usize,
    pub noise: Option<NoiseSpec>,
    pub theta_axis: ThetaAxis,
    pub solver: SolverConfig,
    /// Where [`emit_csv`] writes this curve, relative to the output directory.
    pub output_path: PathBuf,
}

impl SweepSpec {
    pub fn new(n: usize, noise: Option<NoiseSpec>) -> Self {
        let mut spec = Self {
            n,
            noise,
            theta_axis: ThetaAxis::default(),
            solver: SolverConfig::default(),
            output_path: PathBuf::new(),
        };
        spec.output_path = PathBuf::from(format!("{}.csv", spec.file_stem()));
        spec
    }

    pub fn with_points(mut self, count: usize) -> Self {
        self.theta_axis.count = count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > DEFAULT_MAX_QUBITS {
            return Err(Error::InvalidSpec(format!(
                "n = {} outside 1..={DEFAULT_MAX_QUBITS}",
                self.n
            )));
        }
        if let Some(noise) = &self.noise {
            noise.channel(self.n)?;
        }
        self.theta_axis.validate()?;
        self.solver.validate()
    }

    fn channel(&self) -> Result<Option<NoiseChannel>> {
        self.noise.map(|noise| noise.channel(self.n)).transpose()
    }

    /// The (possibly noisy) family at a given `sin θ`.
    pub fn family_at(&self, sin_theta: f64) -> Result<StateFamily> {
        let fam = build_family(theta_from_sin(sin_theta.clamp(0.0, SIN_MAX)), self.n)?;
        match self.channel()? {
            Some(ch) if !ch.is_identity() => noisy_family(&ch, &fam),
            _ => Ok(fam),
        }
    }

    pub fn solve_at(&self, sin_theta: f64) -> Result<SolveReport> {
        solve(&self.family_at(sin_theta)?, &self.solver)
    }

    /// Noise label such as `noiseless`, `XX` or `Z-ind`.
    pub fn noise_label(&self) -> String {
        match self.channel() {
            Ok(Some(ch)) => ch.label(),
            _ => "noiseless".into(),
        }
    }

    /// Human-readable curve title.
    pub fn title(&self) -> String {
        match &self.noise {
            Some(noise) if noise.mode == NoiseMode::Independent || noise.j > 0 => {
                format!("n={} {} p={}", self.n, self.noise_label(), noise.p)
            }
            _ => format!("n={} noiseless", self.n),
        }
    }

    /// Stem used for output file names, e.g. `n4_ZZ_p0.5`.
    pub fn file_stem(&self) -> String {
        match &self.noise {
            Some(noise) if noise.mode == NoiseMode::Independent || noise.j > 0 => {
                format!("n{}_{}_p{}", self.n, self.noise_label(), noise.p)
            }
            _ => format!("n{}_noiseless", self.n),
        }
    }
}

/// Row status: the solver outcome, or a failure to solve at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Solved(SolveStatus),
    Failed,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Solved(status) => status.fmt(f),
            RowStatus::Failed => f.write_str("failed"),
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sin_theta: f64,
    pub sigma: f64,
    pub sigma_root: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub optimal: bool,
    pub status: RowStatus,
}

impl SweepRow {
    fn from_report(sin_theta: f64, report: &SolveReport) -> Self {
        Self {
            sin_theta,
            sigma: report.sigma,
            sigma_root: report.sigma_root,
            dual: report.dual_value,
            gap: report.gap,
            iterations: report.iterations,
            optimal: report.optimality_ok,
            status: RowStatus::Solved(report.status),
        }
    }

    fn failed(sin_theta: f64) -> Self {
        Self {
            sin_theta,
            sigma: f64::NAN,
            sigma_root: f64::NAN,
            dual: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
            optimal: false,
            status: RowStatus::Failed,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == RowStatus::Solved(SolveStatus::Converged)
    }
}

/// Worker count: `EXCLUSION_LAB_THREADS` if set and positive, otherwise the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on up to `workers` threads, preserving order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every index is processed"))
        .collect()
}

/// Solves every grid point of `spec`. Points that fail to solve are kept as
/// `failed` rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    run_sweep_with_workers(spec, worker_count())
}

pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points = spec.theta_axis.points();
    Ok(parallel_map(&points, workers, |&s| match spec.solve_at(s) {
        Ok(report) => SweepRow::from_report(s, &report),
        Err(err) => {
            log::warn!("solve failed at sin θ = {s}: {err}");
            SweepRow::failed(s)
        }
    }))
}

/// Problems noticed while locating an onset.
#[derive(Debug, Clone, PartialEq)]
pub enum OnsetWarning {
    /// `σ` rose by more than the jitter tolerance between two evaluated points.
    NonMonotone { lower: f64, upper: f64, rise: f64 },
    /// A bisection solve hit the iteration cap.
    MaxIters { sin_theta: f64 },
}

impl fmt::Display for OnsetWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OnsetWarning::NonMonotone { lower, upper, rise } => {
                write!(f, "sigma rises by {rise:.3e} between sin θ = {lower} and {upper}")
            }
            OnsetWarning::MaxIters { sin_theta } => write!(f, "solver hit max_iters at sin θ = {sin_theta}"),
        }
    }
}

/// Result of [`find_onset`].
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetReport {
    /// Smallest `sin θ` with `σ ≤ zero_threshold`, or `None` when even
    /// [`SIN_MAX`] has `σ` above it.
    pub onset: Option<f64>,
    /// Every `(sin θ, σ)` evaluated, sorted by `sin θ`.
    pub evaluations: Vec<(f64, f64)>,
    pub warnings: Vec<OnsetWarning>,
    /// Every evaluation converged and passed the optimality test.
    pub all_optimal: bool,
}

impl OnsetReport {
    /// The onset or `"none"`.
    pub fn display_value(&self) -> String {
        match self.onset {
            Some(s) => format!("{s:.6}"),
            None => "none".into(),
        }
    }
}

/// Bisection on `sin θ` for the start of the zero region, to
/// [`ONSET_RESOLUTION`]. The reported onset is the bracket midpoint.
pub fn find_onset(spec: &SweepSpec) -> Result<OnsetReport> {
    find_onset_observed(spec, |_, _| {})
}

/// [`find_onset`] that hands every intermediate solve to `observe`.
pub fn find_onset_observed(spec: &SweepSpec, mut observe: impl FnMut(f64, &SolveReport)) -> Result<OnsetReport> {
    spec.validate()?;
    let threshold = spec.solver.zero_threshold;
    let mut evaluations = Vec::new();
    let mut warnings = Vec::new();
    let mut all_optimal = true;
    let mut eval = |s: f64| -> Result<f64> {
        let report = spec.solve_at(s)?;
        observe(s, &report);
        if report.status == SolveStatus::MaxIters {
            warnings.push(OnsetWarning::MaxIters { sin_theta: s });
        }
        all_optimal &= report.status == SolveStatus::Converged && report.optimality_ok;
        evaluations.push((s, report.sigma));
        Ok(report.sigma)
    };

    let mut lo = spec.theta_axis.start;
    let mut hi = spec.theta_axis.end.min(SIN_MAX);
    let onset = if eval(hi)? > threshold {
        None
    } else if eval(lo)? <= threshold {
        Some(lo)
    } else {
        while hi - lo > ONSET_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if eval(mid)? <= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };

    evaluations.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in evaluations.windows(2) {
        let rise = pair[1].1 - pair[0].1;
        if rise > MONOTONE_JITTER {
            let warning = OnsetWarning::NonMonotone {
                lower: pair[0].0,
                upper: pair[1].0,
                rise,
            };
            log::warn!("{}: {warning}", spec.title());
            warnings.push(warning);
        }
    }
    Ok(OnsetReport {
        onset,
        evaluations,
        warnings,
        all_optimal,
    })
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Renders rows as CSV text with LF endings.
pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sig12(r.sin_theta),
            format_sig12(r.sigma),
            format_sig12(r.sigma_root),
            format_sig12(r.dual),
            format_sig12(r.gap),
            r.iterations,
            r.optimal,
            r.status
        );
    }
    out
}

/// Writes rows to `path`, creating parent directories.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidSpec("no rows to write".into()));
    }
    write_text(path, &csv_string(rows))
}

/// One curve of a plot script.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotCurve {
    pub title: String,
    /// CSV location relative to the script.
    pub csv: PathBuf,
}

/// Gnuplot script plotting `σ^{1/n}` against `sin θ` for each curve, with
/// optional vertical markers (e.g. analytical onsets).
pub fn plotscript_string(title: &str, curves: &[PlotCurve], markers: &[(String, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# gnuplot script; run from the directory containing it");
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key autotitle columnhead");
    let _ = writeln!(out, "set title '{}'", title.replace('\'', "''"));
    let _ = writeln!(out, "set xlabel 'sin(theta)'");
    let _ = writeln!(out, "set ylabel 'sigma^(1/n)'");
    let _ = writeln!(out, "set xrange [0:1]");
    let _ = writeln!(out, "set yrange [0:*]");
    for (label, x) in markers {
        let _ = writeln!(
            out,
            "set arrow from {x},graph 0 to {x},graph 1 nohead dashtype 2 # {}",
            label.replace('\n', " ")
        );
    }
    let plots: Vec<String> = curves
        .iter()
        .map(|c| {
            format!(
                "'{}' using 1:3 with lines title '{}'",
                c.csv.display().to_string().replace('\\', "/"),
                c.title.replace('\'', "''")
            )
        })
        .collect();
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}

/// Writes a plot script for `rows` stored at `csv` (relative to the script).
pub fn emit_plotscript(rows: &[SweepRow], csv: &Path, title: &str, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidSpec("no rows to plot".into()));
    }
    let curve = PlotCurve {
        title: title.to_string(),
        csv: csv.to_path_buf(),
    };
    write_text(path, &plotscript_string(title, &[curve], &[]))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Named figure reproductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig3,
    Fig4a,
    Fig4b,
    Fig4c,
    Fig5,
    BoundsTable,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig3,
        Preset::Fig4a,
        Preset::Fig4b,
        Preset::Fig4c,
        Preset::Fig5,
        Preset::BoundsTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
            Preset::Fig4c => "fig4c",
            Preset::Fig5 => "fig5",
            Preset::BoundsTable => "bounds_table",
        }
    }

    /// Sweep specs of the preset; empty for the bounds table.
    pub fn specs(self) -> Vec<SweepSpec> {
        match self {
            Preset::Fig3 => (2..=4)
                .flat_map(|n| {
                    [
                        None,
                        Some(NoiseSpec::collective(Pauli::X, DEFAULT_NOISE_P, 1)),
                        Some(NoiseSpec::collective(Pauli::Z, DEFAULT_NOISE_P, 1)),
                    ]
                    .map(|noise| SweepSpec::new(n, noise))
                })
                .collect(),
            Preset::Fig4a => multi_qubit_specs(2),
            Preset::Fig4b => multi_qubit_specs(3),
            Preset::Fig4c => multi_qubit_specs(4),
            Preset::Fig5 => FIG5_P
                .iter()
                .map(|&p| SweepSpec::new(3, Some(NoiseSpec::independent(Pauli::Z, p))))
                .collect(),
            Preset::BoundsTable => Vec::new(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Noise probability used by the collective presets.
pub const DEFAULT_NOISE_P: f64 = 0.5;

/// Independent-noise probabilities of the fig5 preset.
pub const FIG5_P: [f64; 5] = [1.0, 0.98, 0.86, 0.7, 0.52];

/// Largest `n` in the bounds table preset.
pub const BOUNDS_TABLE_MAX_N: usize = 8;

/// Collective words on 2..=n qubits for X, Z and Y, in that order.
fn multi_qubit_specs(n: usize) -> Vec<SweepSpec> {
    [Pauli::X, Pauli::Z, Pauli::Y]
        .into_iter()
        .flat_map(|kind| (2..=n).map(move |j| SweepSpec::new(n, Some(NoiseSpec::collective(kind, DEFAULT_NOISE_P, j)))))
        .collect()
}

/// Looks up a preset by name and returns its specs.
pub fn preset(name: &str) -> Result<Vec<SweepSpec>> {
    Ok(name.parse::<Preset>()?.specs())
}

/// Files written by [`run_preset`].
#[derive(Debug, Clone, Default)]
pub struct PresetOutput {
    pub files: Vec<PathBuf>,
    /// Rows that hit the iteration cap, summed over curves.
    pub max_iter_rows: usize,
    pub failed_rows: usize,
}

/// Runs a preset into `out_dir`: one CSV per curve plus `<preset>.gp`, or
/// `bounds_table.csv` for the bounds table. `adjust` can override grid and
/// solver settings of every spec before it runs.
pub fn run_preset(preset: Preset, out_dir: &Path, adjust: impl Fn(&mut SweepSpec)) -> Result<PresetOutput> {
    let mut output = PresetOutput::default();
    if preset == Preset::BoundsTable {
        let path = out_dir.join("bounds_table.csv");
        write_text(&path, &bounds_table_csv(BOUNDS_TABLE_MAX_N)?)?;
        output.files.push(path);
        return Ok(output);
    }
    let mut curves = Vec::new();
    let mut ns = Vec::new();
    for mut spec in preset.specs() {
        adjust(&mut spec);
        let rows = run_sweep(&spec)?;
        output.max_iter_rows += rows
            .iter()
            .filter(|r| r.status == RowStatus::Solved(SolveStatus::MaxIters))
            .count();
        output.failed_rows += rows.iter().filter(|r| r.status == RowStatus::Failed).count();
        let path = out_dir.join(&spec.output_path);
        emit_csv(&rows, &path)?;
        output.files.push(path);
        curves.push(PlotCurve {
            title: spec.title(),
            csv: spec.output_path.clone(),
        });
        if !ns.contains(&spec.n) {
            ns.push(spec.n);
        }
    }
    let markers = ns
        .iter()
        .filter_map(|&n| crate::bounds::onset_sin(n).ok().map(|d| (format!("d_{n}"), d)))
        .collect::<Vec<_>>();
    let script = out_dir.join(format!("{}.gp", preset.name()));
    write_text(&script, &plotscript_string(preset.name(), &curves, &markers))?;
    output.files.push(script);
    Ok(output)
}

/// `n,theta_min,d_n` rows for `n = 1..=max_n`.
pub fn bounds_table_csv(max_n: usize) -> Result<String> {
    let mut out = String::from("n,theta_min,d_n\n");
    for row in bound_table(max_n)? {
        let _ = writeln!(
            out,
            "{},{},{}",
            row.n,
            format_sig12(row.theta_min),
            format_sig12(row.d_n)
        );
    }
    Ok(out)
}

/// Serializes a POVM: a `dim,count` line, then one line per effect holding
/// its row-major entries as `re,im` pairs.
pub fn povm_to_csv(povm: &Povm) -> String {
    let mut out = format!("{},{}\n", povm.dim(), povm.len());
    for effect in povm.effects() {
        let fields: Vec<String> = effect
            .as_slice()
            .iter()
            .flat_map(|z| [format!("{:e}", z.re), format!("{:e}", z.im)])
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses the format written by [`povm_to_csv`] and validates the result.
pub fn povm_from_csv(text: &str) -> Result<Povm> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|f| f.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("header `{header}`: {e}")))?;
    let [dim, count] = dims[..] else {
        return Err(Error::Parse(format!("header `{header}` must be `dim,count`")));
    };
    if dim == 0 || count == 0 {
        return Err(Error::Parse("dim and count must be positive".into()));
    }
    let mut effects = Vec::with_capacity(count);
    for (idx, line) in lines.enumerate() {
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("effect {idx}: {e}")))?;
        if values.len() != 2 * dim * dim {
            return Err(Error::Parse(format!(
                "effect {idx} has {} numbers, expected {}",
                values.len(),
                2 * dim * dim
            )));
        }
        let data = values.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        effects.push(ComplexMatrix::from_row_major(dim, data));
    }
    if effects.len() != count {
        return Err(Error::Parse(format!(
            "header promises {count} effects, found {}",
            effects.len()
        )));
    }
    Povm::new(effects)
}

pub fn write_povm(povm: &Povm, path: &Path) -> Result<()> {
    write_text(path, &povm_to_csv(povm))
}

pub fn read_povm(path: &Path) -> Result<Povm> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    povm_from_csv(&text)
}
