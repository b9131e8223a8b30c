use std::io::Write;

use clap::{Args, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use ris_align::alignment::{magnitude_moments, rician_approx_half_width, quantization_to_half_width};
use ris_align::multiaccess::{min_angular_spacing, MaRequest, DEFAULT_BETA, SPACING_TABLE};
use ris_align::outage::{
    analytic_outage_perfect_asymptotic, coherent_bound_curve, estimate_diversity_order, mc_outage_curve,
    mc_outage_curve_conditional, perfect_asymptotic_curve, random_outage_curve,
};
use ris_align::pattern::{
    aperture_phase_span, array_factor, full_diversity_beamwidth, off_target_outage, woodward_coefficients,
    write_pattern_csv, DEFAULT_PATTERN_POINTS,
};
use ris_align::rng::run_chunked;
use ris_align::series::{
    branch_series, default_order, invert_termwise, outage_from_maclaurin, raise_to_power_m, rayleigh_series,
    write_series_csv, InversePowerSeries,
};
use ris_align::{
    AlignmentModel, BranchDistribution, FadingLaw, OutageCurve, RandomStream, RisGeometry, SnrGrid,
    WindowConvention, WoodwardConfig,
};

use crate::config::{count_opt, merge, open_output, parse_count, require_seed, CliError, CliResult, IoArgs, Metadata};

const DEFAULT_RICIAN_S: f64 = 1.0;
const DEFAULT_RICIAN_B: f64 = 0.5;
const DEFAULT_TARGET_POUT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DistKind {
    Rayleigh,
    Rician,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlignKind {
    Perfect,
    Coherent,
    Random,
    Destructive,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Section2,
    AppendixA,
}

impl From<Window> for WindowConvention {
    fn from(w: Window) -> Self {
        match w {
            Window::Section2 => WindowConvention::Section2,
            Window::AppendixA => WindowConvention::AppendixA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Plain Monte Carlo.
    Mc,
    /// Monte Carlo conditioned on every branch lying below the largest threshold.
    Conditional,
    /// Closed form: asymptote (perfect), bound (coherent) or exact (random).
    Analytic,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct DistArgs {
    /// Branch amplitude law.
    #[arg(long, value_enum)]
    pub dist: Option<DistKind>,
    /// Scatter scale b (the variance per quadrature).
    #[arg(long)]
    pub b: Option<f64>,
    /// Rician specular amplitude.
    #[arg(long)]
    pub s: Option<f64>,
}

impl DistArgs {
    fn build(&self) -> CliResult<BranchDistribution<f64>> {
        Ok(match self.dist.unwrap_or(DistKind::Rayleigh) {
            DistKind::Rayleigh => {
                if self.s.is_some() {
                    return Err(CliError::Config("--s applies only to --dist rician".into()));
                }
                BranchDistribution::rayleigh(self.b.unwrap_or(1.0))?
            }
            DistKind::Rician => {
                BranchDistribution::rician(self.s.unwrap_or(DEFAULT_RICIAN_S), self.b.unwrap_or(DEFAULT_RICIAN_B))?
            }
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct AlignArgs {
    #[arg(long, value_enum)]
    pub align: Option<AlignKind>,
    /// Common phase, radians.
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Coherent half-width, radians.
    #[arg(long)]
    pub w: Option<f64>,
    /// Quantization levels; needs --window.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub levels: Option<u32>,
    /// How L maps to a half-width.
    #[arg(long, value_enum)]
    pub window: Option<Window>,
}

impl AlignArgs {
    fn kind(&self) -> AlignKind {
        self.align.unwrap_or(AlignKind::Perfect)
    }

    fn build(&self) -> CliResult<AlignmentModel<f64>> {
        let theta0 = self.theta0.unwrap_or(0.0);
        Ok(match self.kind() {
            AlignKind::Perfect => AlignmentModel::perfect(theta0),
            AlignKind::Random => AlignmentModel::random(),
            AlignKind::Destructive => AlignmentModel::destructive(),
            AlignKind::Coherent => match (self.w, self.levels, self.window) {
                (Some(w), None, _) => AlignmentModel::coherent(theta0, w)?,
                (None, Some(l), Some(win)) => AlignmentModel::quantized(theta0, l, win.into())?,
                (None, Some(_), None) => {
                    return Err(CliError::Config("--L needs an explicit --window (section2 or appendix-a)".into()))
                }
                (Some(_), Some(_), _) => return Err(CliError::Config("give either --w or --L, not both".into())),
                (None, None, _) => return Err(CliError::Config("coherent alignment needs --w or --L".into())),
            },
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct GridArgs {
    /// First per-branch SNR, dB.
    #[arg(long)]
    pub snr_start: Option<f64>,
    #[arg(long)]
    pub snr_stop: Option<f64>,
    #[arg(long)]
    pub snr_step: Option<f64>,
    /// Explicit SNR list in dB; overrides start/stop/step.
    #[arg(long, value_delimiter = ',')]
    pub snr_db: Option<Vec<f64>>,
    /// Outage threshold gamma_0 (linear).
    #[arg(long)]
    pub gamma0: Option<f64>,
}

impl GridArgs {
    fn build(&self) -> CliResult<SnrGrid<f64>> {
        let g0 = self.gamma0.unwrap_or(1.0);
        Ok(match &self.snr_db {
            Some(list) => SnrGrid::new(list.clone(), g0)?,
            None => SnrGrid::stepped(
                self.snr_start.unwrap_or(0.0),
                self.snr_stop.unwrap_or(40.0),
                self.snr_step.unwrap_or(2.0),
                g0,
            )?,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct McArgs {
    /// Trials per grid point; accepts 1e6. Defaults to 100 / target-pout.
    #[arg(long, value_parser = parse_count)]
    #[serde(default, deserialize_with = "count_opt")]
    pub trials: Option<u64>,
    /// Smallest outage the run should resolve; sets the default trial count.
    #[arg(long)]
    pub target_pout: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl McArgs {
    fn trials(&self) -> CliResult<u64> {
        if let Some(t) = self.trials {
            return Ok(t);
        }
        let p = self.target_pout.unwrap_or(DEFAULT_TARGET_POUT);
        if !(p > 0.0 && p <= 1.0) {
            return Err(CliError::Config(format!("target-pout must lie in (0, 1], got {p}")));
        }
        Ok((100.0 / p).ceil() as u64)
    }
}

fn warn(meta: &mut Metadata, w: impl std::fmt::Display) {
    eprintln!("warning: {w}");
    meta.push("warning", w);
}

fn branches(m: Option<usize>) -> usize {
    m.unwrap_or(1)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[command(allow_negative_numbers = true)]
pub struct OutageArgs {
    /// Number of surface elements.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub align: AlignArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

pub fn outage(cli: &OutageArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "outage")?;
    let m = branches(a.m);
    let dist = a.dist.build()?;
    let model = a.align.build()?;
    let grid = a.grid.build()?;
    let method = a.method.unwrap_or(Method::Mc);
    let seed = match method {
        Method::Analytic => a.mc.seed,
        _ => Some(require_seed(a.mc.seed)?),
    };
    let mut meta = Metadata::new("outage", seed, &echo);
    let curve: OutageCurve<f64> = match method {
        Method::Mc | Method::Conditional => {
            let trials = a.mc.trials()?;
            meta.push("trials", trials);
            let stream = RandomStream::new(seed.unwrap_or_default());
            if method == Method::Mc {
                mc_outage_curve(&model, &dist, m, &grid, trials, &stream)?
            } else {
                mc_outage_curve_conditional(&model, &dist, m, &grid, trials, &stream)?
            }
        }
        Method::Analytic => match (a.align.kind(), dist.law()) {
            (AlignKind::Random, _) => random_outage_curve(m, &dist, &grid),
            (AlignKind::Perfect, FadingLaw::Rayleigh { b }) => perfect_asymptotic_curve(m, b, &grid),
            (AlignKind::Coherent, _) => coherent_bound_curve(m, &dist, model.half_width().unwrap_or_default(), &grid),
            (kind, _) => {
                return Err(CliError::Config(format!(
                    "no closed form for {kind:?} alignment with this branch law; use --method mc"
                )))
            }
        },
    };
    if let Some(w) = curve.warning {
        warn(&mut meta, w);
    }
    match estimate_diversity_order(&curve) {
        Ok(fit) => {
            meta.push("diversity_order", format!("{:.4}", fit.order));
            meta.push("diversity_stderr", format!("{:.4}", fit.stderr));
            meta.push("diversity_fit_db", format!("{}..{}", fit.gamma_t_db_range.0, fit.gamma_t_db_range.1));
        }
        Err(e) => meta.push("diversity_order", format!("unavailable ({e})")),
    }
    let mut out = open_output(&cli.io)?;
    curve.write_csv(&mut out, &meta.0)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Element pitch in wavelengths.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Scan direction sine.
    #[arg(long)]
    pub u0: Option<f64>,
    /// Observation angles in degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub angles: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

pub fn sweep_angle(cli: &SweepArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "sweep-angle")?;
    let seed = require_seed(a.mc.seed)?;
    let geom = RisGeometry::new(a.m.unwrap_or(8), a.dx.unwrap_or(0.5), a.u0.unwrap_or(0.0))?;
    let dist = a.dist.build()?;
    let grid = a.grid.build()?;
    let angles = a.angles.clone().unwrap_or_else(|| vec![0.0, 15.0, 30.0]);
    let trials = a.mc.trials()?;
    let mut meta = Metadata::new("sweep-angle", Some(seed), &echo);
    meta.push("trials", trials);
    let bw = full_diversity_beamwidth(&geom);
    meta.push("beamwidth_deg", bw.value.exact.to_degrees());
    if let Some(w) = bw.warning {
        warn(&mut meta, w);
    }
    let curves = off_target_outage(&geom, &dist, &angles, &grid, trials, &RandomStream::new(seed))?;
    let mut out = open_output(&cli.io)?;
    for (k, v) in &meta.0 {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "angle_deg,gamma_t_db,p_out,ci_low,ci_high,trials,events,full_diversity,asymptote")?;
    for (deg, curve) in curves {
        let full = aperture_phase_span(&geom, deg.to_radians().sin()) <= std::f64::consts::FRAC_PI_2;
        for p in &curve.points {
            let asym = match dist.law() {
                FadingLaw::Rayleigh { b } => {
                    let g = 10f64.powf(p.gamma_t_db / 10.0);
                    format!("{:e}", analytic_outage_perfect_asymptotic(geom.m, b, grid.gamma_0(), g))
                }
                _ => String::new(),
            };
            writeln!(
                out,
                "{deg},{},{:e},{:e},{:e},{},{},{full},{asym}",
                p.gamma_t_db, p.p_out, p.ci_low, p.ci_high, p.trials, p.events
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[command(allow_negative_numbers = true)]
pub struct PatternArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub u0: Option<f64>,
    /// Grid points over u in [-1, 1].
    #[arg(long)]
    pub points: Option<usize>,
    /// First Woodward beam index; with --beam-last, synthesizes a flat top.
    #[arg(long)]
    pub beam_first: Option<i64>,
    #[arg(long)]
    pub beam_last: Option<i64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

pub fn pattern(cli: &PatternArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "pattern")?;
    let geom = RisGeometry::new(a.m.unwrap_or(16), a.dx.unwrap_or(0.5), a.u0.unwrap_or(0.0))?;
    let points = a.points.unwrap_or(DEFAULT_PATTERN_POINTS);
    if points < 2 {
        return Err(CliError::Config("need at least 2 pattern points".into()));
    }
    let mut meta = Metadata::new("pattern", None, &echo);
    let bw = full_diversity_beamwidth(&geom);
    meta.push("beamwidth_deg", bw.value.exact.to_degrees());
    let mut out = open_output(&cli.io)?;
    match (a.beam_first, a.beam_last) {
        (None, None) => {
            meta.push("pattern", "array_factor");
            write_pattern_csv(&mut out, points, &meta.0, |u| array_factor(&geom, u))?;
        }
        (Some(first), Some(last)) if first <= last => {
            let w = woodward_coefficients(&geom, &WoodwardConfig::flat_top(&geom, first, last))?;
            meta.push("pattern", "woodward_flat_top");
            meta.push("three_db_width_deg", w.three_db_width_deg(20_001));
            write_pattern_csv(&mut out, points, &meta.0, |u| w.pattern(u).norm())?;
        }
        _ => return Err(CliError::Config("give both --beam-first and --beam-last, first <= last".into())),
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct SeriesArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    /// Highest inverse power kept; default 2M + 8.
    #[arg(long)]
    pub order: Option<usize>,
    /// Exact rational arithmetic (Rayleigh only; b is read as a decimal).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exact: Option<bool>,
    /// Amplitudes at which to report the series outage.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

/// Shortest round-trip decimal of `x` as an exact fraction.
fn decimal_rational(x: f64) -> CliResult<BigRational> {
    let text = format!("{x}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int}{frac}")
        .parse()
        .map_err(|_| CliError::Config(format!("cannot read {x} as a decimal")))?;
    Ok(BigRational::new(digits, pow10(frac.len())))
}

fn pow10(n: usize) -> BigInt {
    (0..n).fold(BigInt::from(1), |acc, _| acc * 10)
}

pub fn series(cli: &SeriesArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "series")?;
    let m = branches(a.m);
    let order = a.order.unwrap_or_else(|| default_order(m));
    let dist = a.dist.build()?;
    let mut meta = Metadata::new("series", None, &echo);
    meta.push("order", order);
    let mut out = open_output(&cli.io)?;
    if a.exact.unwrap_or(false) {
        let FadingLaw::Rayleigh { b } = dist.law() else {
            return Err(CliError::Config("--exact supports Rayleigh branches only".into()));
        };
        let base: InversePowerSeries<BigRational> = rayleigh_series(decimal_rational(b)?, order)?;
        let lap = raise_to_power_m(&base, m, order)?;
        let mac = invert_termwise(&lap);
        meta.push("arithmetic", "exact");
        write_series_csv(&mut out, &lap, &mac, &meta.0)?;
    } else {
        let lap = raise_to_power_m(&branch_series(&dist, order)?, m, order)?;
        let mac = invert_termwise(&lap);
        meta.push("arithmetic", "f64");
        if let Some(k) = mac.leading_index() {
            meta.push("leading_power", k);
        }
        for &x in a.x.as_deref().unwrap_or(&[]) {
            let p = outage_from_maclaurin(&mac, x);
            meta.push("outage", format!("x={x} p={:e}", p.value));
            if let Some(w) = p.warning {
                warn(&mut meta, format!("x={x}: {w}"));
            }
        }
        write_series_csv(&mut out, &lap, &mac, &meta.0)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct MomentsArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub align: AlignArgs,
    /// Monte Carlo draws of |H|; accepts 1e6.
    #[arg(long, value_parser = parse_count)]
    #[serde(default, deserialize_with = "count_opt")]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

/// Count, mean and sum of squared deviations.
type Welford = (u64, f64, f64);

fn welford_push((n, mean, m2): Welford, x: f64) -> Welford {
    let n1 = n + 1;
    let d = x - mean;
    let mean1 = mean + d / n1 as f64;
    (n1, mean1, m2 + d * (x - mean1))
}

fn welford_merge(a: Welford, b: Welford) -> Welford {
    if a.0 == 0 {
        return b;
    }
    let n = a.0 + b.0;
    let d = b.1 - a.1;
    (n, a.1 + d * b.0 as f64 / n as f64, a.2 + b.2 + d * d * (a.0 as f64 * b.0 as f64) / n as f64)
}

pub fn moments(cli: &MomentsArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "moments")?;
    let seed = require_seed(a.seed)?;
    let m = branches(a.m);
    let dist = a.dist.build()?;
    let model = a.align.build()?;
    let trials = a.trials.unwrap_or(100_000);
    let closed = magnitude_moments(&model, &dist, m)?;
    let approx = model.half_width().filter(|_| a.align.kind() == AlignKind::Coherent).map(|w| {
        let r = rician_approx_half_width(&dist, m, w);
        json!({ "alpha": r.alpha, "beta_sq": r.beta_sq, "mean": r.mean(), "variance": r.variance() })
    });
    let sampler = model.sampler(m)?;
    let (n, mean, m2) = run_chunked(trials, &RandomStream::new(seed), |rng, len| {
        (0..len).fold((0, 0.0, 0.0), |acc, _| welford_push(acc, sampler.draw(rng, &dist).magnitude))
    })
    .into_iter()
    .fold((0, 0.0, 0.0), welford_merge);
    let variance = if n > 1 { m2 / (n - 1) as f64 } else { f64::NAN };
    let meta = Metadata::new("moments", Some(seed), &echo);
    let mut window = Map::new();
    if let (Some(l), Some(w)) = (a.align.levels, a.align.window) {
        window.insert("half_width".into(), json!(quantization_to_half_width::<f64>(l, w.into())?));
    }
    let report = json!({
        "meta": meta.to_json(),
        "closed_form": closed,
        "rician_approx": approx,
        "monte_carlo": { "trials": n, "mean": mean, "variance": variance },
        "window": window,
    });
    let mut out = open_output(&cli.io)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args)]
pub struct MaArgs {
    /// noma-static, tdma-static, fdma-static, noma-dynamic or tdma-dynamic.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Radiated power budget.
    #[arg(long = "P-rad")]
    pub p_rad: Option<f64>,
    /// Per-user rate targets, comma separated; pairs with --channels.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<f64>>,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn ma_budget(cli: &MaArgs) -> CliResult<()> {
    let mut map = match &cli.io.config {
        Some(p) => crate::config::read_config(p, "ma-budget")?,
        None => Map::new(),
    };
    if let Some(s) = &cli.scheme {
        map.insert("scheme".into(), json!(s.replace('-', "_")));
    }
    if let Some(v) = cli.sigma_sq {
        map.insert("sigma_sq".into(), json!(v));
    }
    if let Some(v) = cli.p_rad {
        map.remove("p_rad");
        map.insert("P_rad".into(), json!(v));
    }
    match (&cli.rates, &cli.channels) {
        (Some(r), Some(c)) if r.len() == c.len() => {
            let users: Vec<Value> = r.iter().zip(c).map(|(r, c)| json!({ "rate": r, "channel": c })).collect();
            map.insert("users".into(), Value::Array(users));
        }
        (None, None) => {}
        _ => return Err(CliError::Config("--rates and --channels must be given together, same length".into())),
    }
    let echo = Value::Object(map);
    let req: MaRequest =
        serde_json::from_value(echo.clone()).map_err(|e| CliError::Config(format!("invalid request: {e}")))?;
    let report = req.evaluate()?;
    let meta = Metadata::new("ma-budget", None, &echo);
    let doc = json!({ "meta": meta.to_json(), "result": report });
    let mut out = open_output(&cli.io)?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
pub struct SpacingArgs {
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    /// Distance ratio d1/d2 of the farther to the nearer user.
    #[arg(long)]
    pub d_ratio: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    /// Path-loss exponent.
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub io: IoArgs,
}

pub fn spacing(cli: &SpacingArgs) -> CliResult<()> {
    let (a, echo) = merge(cli, &cli.io, "spacing")?;
    let beta = a.beta.unwrap_or(DEFAULT_BETA);
    let rows: Vec<(usize, f64, f64)> = match (a.m, a.d_ratio, a.dx) {
        (None, None, None) => SPACING_TABLE.to_vec(),
        (Some(m), Some(r), dx) => vec![(m, r, dx.unwrap_or(0.5))],
        _ => return Err(CliError::Config("give --M and --d-ratio, or nothing for the full table".into())),
    };
    let mut meta = Metadata::new("spacing", None, &echo);
    let mut lines = Vec::new();
    for (m, r, dx) in rows {
        let v = min_angular_spacing(m, r, 1.0, dx, beta)?;
        if let Some(w) = v.warning {
            warn(&mut meta, format!("M={m} d_ratio={r} dx={dx}: {w}"));
        }
        let deg = v.value.to_degrees();
        lines.push(format!("{m},{r},{dx},{beta},{deg:.1},{:e}", v.value));
    }
    let mut out = open_output(&cli.io)?;
    for (k, v) in &meta.0 {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "M,d_ratio,dx_over_lambda,beta,spacing_deg,spacing_rad")?;
    for l in lines {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}
