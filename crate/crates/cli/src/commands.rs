use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use springy_core::ensemble::{aggregate_rates, fit_rate, run_ensemble, sqrt_m_extrapolation, trace_member, RateFit};

use crate::args::{ExtrapolateArgs, InvariantsArgs, RatesArgs, RunArgs};
use crate::config::{Resolved, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{self, num, read_json, read_series, write_json, write_rows, RATES_HEADER};
use crate::plot::{svg, Curve};

/// Everything `rates` needs to know about a `simulate` directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub geometry: String,
    pub model: String,
    pub seed: u64,
    pub m: f64,
    pub e_b0: f64,
    pub bar_period: f64,
    pub members: usize,
    pub failures: usize,
    pub runs: Vec<RunEntry>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub file: String,
    pub members: usize,
    pub failures: usize,
}

/// Wall-clock facts kept apart from `summary.json` so reruns stay byte-identical.
#[derive(Debug, Clone, Serialize)]
struct RunInfo {
    wall_clock_s: f64,
    workers: usize,
    version: &'static str,
}

pub fn resolve(args: &RunArgs) -> Result<Resolved> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => RunConfig::default(),
    };
    config.apply(&args.overrides());
    if let Some(r) = args.trace_run {
        config.trace.run = r;
    }
    if let Some(m) = args.trace_member {
        config.trace.member = m;
    }
    config.resolve()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(path))
}

pub fn simulate(args: &RunArgs) -> Result<Summary> {
    let r = resolve(args)?;
    let dir = r.config.output.dir.clone();
    let clock = Instant::now();
    let outcome = run_ensemble(&r.spec, &r.table, r.workers)?;
    let wall = clock.elapsed().as_secs_f64();
    create_dir(&dir)?;
    io::write_series(&dir.join("series.csv"), &outcome.pooled)?;
    let mut runs = Vec::with_capacity(outcome.runs.len());
    for (i, s) in outcome.runs.iter().enumerate() {
        let file = format!("run_{i:03}.csv");
        io::write_series(&dir.join(&file), s)?;
        runs.push(RunEntry {
            file,
            members: s.members,
            failures: s.failures,
        });
    }
    let summary = Summary {
        geometry: r.spec.geometry.as_str().into(),
        model: r.spec.model.as_str().into(),
        seed: r.spec.seed,
        m: r.spec.m,
        e_b0: r.spec.e_b0,
        bar_period: r.table.bar_period(),
        members: outcome.pooled.members,
        failures: outcome.pooled.failures,
        runs,
        config: r.config.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(
        &dir.join("run_info.json"),
        &RunInfo {
            wall_clock_s: wall,
            workers: r.workers,
            version: env!("CARGO_PKG_VERSION"),
        },
    )?;
    if r.config.emit_plots {
        let s = &outcome.pooled;
        let curve = Curve {
            label: "ΔKE".into(),
            points: s.t.iter().copied().zip(s.delta_ke.iter().copied()).collect(),
            markers: false,
        };
        write_text(&dir.join("series.svg"), &svg(&[curve], "t", "ΔKE"))?;
    }
    println!(
        "{} {} m={} E_b0={}: {} members in {} runs, {} failures -> {}",
        summary.geometry,
        summary.model,
        summary.m,
        summary.e_b0,
        summary.members,
        summary.runs.len(),
        summary.failures,
        dir.display()
    );
    Ok(summary)
}

pub fn trace(args: &RunArgs) -> Result<PathBuf> {
    let r = resolve(args)?;
    let dir = r.config.output.dir.clone();
    let rows = trace_member(&r.spec, &r.table, r.config.trace.run, r.config.trace.member)?;
    create_dir(&dir)?;
    let path = dir.join("trace.csv");
    io::write_trace(&path, &rows)?;
    if r.config.emit_plots {
        let curve = Curve {
            label: "J".into(),
            points: rows.iter().map(|r| (r.t, r.j)).collect(),
            markers: false,
        };
        write_text(&dir.join("trace.svg"), &svg(&[curve], "t", "J"))?;
    }
    let switches = rows.iter().filter(|r| r.switch).count();
    println!("{} samples, {switches} branch switches -> {}", rows.len(), path.display());
    Ok(path)
}

/// One group of rate fits: a `simulate` directory or the loose files.
#[derive(Debug, Clone)]
pub struct RateGroup {
    pub source: String,
    pub m: f64,
    pub e_b0: f64,
    pub fits: Vec<(String, RateFit)>,
}

fn fit_file(path: &Path, bar_period: f64) -> Result<RateFit> {
    let s = read_series(path)?;
    if s.t.len() < 2 {
        return Err(CliError::data(path, "series needs at least two samples"));
    }
    fit_rate(&s.t, &s.delta_ke, s.stderr.as_deref(), bar_period).map_err(|e| CliError::data(path, e))
}

pub fn rates(args: &RatesArgs) -> Result<Vec<RateGroup>> {
    if args.inputs.is_empty() {
        return Err(CliError::Usage("rates needs at least one directory or series file".into()));
    }
    let (dirs, files): (Vec<&PathBuf>, Vec<&PathBuf>) = args.inputs.iter().partition(|p| p.is_dir());
    let mut groups = Vec::new();
    for dir in dirs {
        let summary: Summary = read_json(&dir.join("summary.json"))?;
        let period = args.bar_period.unwrap_or(summary.bar_period);
        let fits = summary
            .runs
            .iter()
            .map(|run| Ok((run.file.clone(), fit_file(&dir.join(&run.file), period)?)))
            .collect::<Result<_>>()?;
        groups.push(RateGroup {
            source: dir.display().to_string(),
            m: summary.m,
            e_b0: summary.e_b0,
            fits,
        });
    }
    if !files.is_empty() {
        let period = args
            .bar_period
            .ok_or_else(|| CliError::Usage("loose series files need --bar-period".into()))?;
        let fits = files
            .iter()
            .map(|f| Ok((f.display().to_string(), fit_file(f, period)?)))
            .collect::<Result<_>>()?;
        groups.push(RateGroup {
            source: "files".into(),
            m: args.m.unwrap_or(f64::NAN),
            e_b0: args.eb0.unwrap_or(f64::NAN),
            fits,
        });
    }
    create_dir(&args.out)?;
    write_rows(
        &args.out.join("rates.csv"),
        &RATES_HEADER,
        groups.iter().map(|g| {
            let fits: Vec<RateFit> = g.fits.iter().map(|f| f.1.clone()).collect();
            let s = aggregate_rates(&fits);
            let mut row = vec![g.source.clone()];
            row.extend([g.m, g.e_b0, s.mean, s.std, s.stderr, s.mean_t_fold].map(num));
            row.extend([s.runs.to_string(), s.no_decay.to_string()]);
            println!(
                "{}: m={} E_b0={} rate {:.6} ± {:.6} (T {:.1}, {} runs, {} without decay)",
                g.source, g.m, g.e_b0, s.mean, s.std, s.mean_t_fold, s.runs, s.no_decay
            );
            row
        }),
    )?;
    write_rows(
        &args.out.join("fits.csv"),
        &["source", "file", "rate", "T", "residual", "points", "no_decay"],
        groups.iter().flat_map(|g| {
            g.fits.iter().map(move |(file, f)| {
                vec![
                    g.source.clone(),
                    file.clone(),
                    num(f.rate),
                    num(f.t_fold.unwrap_or(f64::NAN)),
                    num(f.residual),
                    f.points.to_string(),
                    u8::from(f.no_decay).to_string(),
                ]
            })
        }),
    )?;
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationEntry {
    pub e_b0: f64,
    pub points: usize,
    pub intercept: f64,
    pub slope: f64,
    pub intercept_std: f64,
    pub slope_std: f64,
    pub chi2: f64,
}

pub fn extrapolate(args: &ExtrapolateArgs) -> Result<Vec<ExtrapolationEntry>> {
    let path = &args.input;
    let table = io::Table::read(path)?;
    let (m, e_b0, rate, std) = (
        table.floats(path, "m")?,
        table.floats(path, "E_b0")?,
        table.floats(path, "rate")?,
        table.floats(path, "std")?,
    );
    if m.is_empty() {
        return Err(CliError::Usage(format!("{}: no rate rows", path.display())));
    }
    // group by the exact E_b0 bit pattern; rows keep their file order
    let mut groups: BTreeMap<u64, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for i in 0..m.len() {
        groups.entry(e_b0[i].to_bits()).or_default().push((m[i], rate[i], std[i]));
    }
    let mut out = Vec::new();
    let mut curves = Vec::new();
    for (bits, pts) in groups {
        let e = f64::from_bits(bits);
        let mut ms: Vec<u64> = pts.iter().map(|p| p.0.to_bits()).collect();
        ms.sort_unstable();
        ms.dedup();
        if ms.len() < 2 {
            return Err(CliError::Usage(format!(
                "E_b0={e}: extrapolation needs at least two distinct mass ratios"
            )));
        }
        let fit = sqrt_m_extrapolation(&pts)?;
        println!(
            "E_b0={e}: intercept {:.6} ± {:.6}, slope {:.6} ± {:.6}",
            fit.intercept, fit.intercept_std, fit.slope, fit.slope_std
        );
        let x_max = pts.iter().map(|p| p.0.sqrt()).fold(0.0, f64::max);
        curves.push(Curve {
            label: format!("E_b0={e}"),
            points: pts.iter().map(|p| (p.0.sqrt(), p.1)).collect(),
            markers: true,
        });
        curves.push(Curve {
            label: format!("fit E_b0={e}"),
            points: vec![(0.0, fit.intercept), (x_max, fit.intercept + fit.slope * x_max)],
            markers: false,
        });
        out.push(ExtrapolationEntry {
            e_b0: e,
            points: pts.len(),
            intercept: fit.intercept,
            slope: fit.slope,
            intercept_std: fit.intercept_std,
            slope_std: fit.slope_std,
            chi2: fit.chi2,
        });
    }
    create_dir(&args.out)?;
    write_json(&args.out.join("extrapolation.json"), &out)?;
    if args.emit_plots {
        write_text(&args.out.join("extrapolation.svg"), &svg(&curves, "sqrt(m)", "rate"))?;
    }
    Ok(out)
}

/// Invariant drift over one run of samples on the same branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub branch: String,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    pub j_first: f64,
    pub j_mean: f64,
    pub max_rel_drift: f64,
}

pub fn segments(t: &[f64], j: &[f64], branch: &[String]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    let mut start = 0;
    for i in 1..=t.len() {
        if i < t.len() && branch[i] == branch[start] {
            continue;
        }
        let js = &j[start..i];
        let j0 = js[0];
        let scale = if j0 != 0.0 { j0.abs() } else { 1.0 };
        out.push(Segment {
            branch: branch[start].clone(),
            t_start: t[start],
            t_end: t[i - 1],
            samples: i - start,
            j_first: j0,
            j_mean: js.iter().sum::<f64>() / js.len() as f64,
            max_rel_drift: js.iter().map(|v| (v - j0).abs()).fold(0.0, f64::max) / scale,
        });
        start = i;
    }
    out
}

pub fn invariants(args: &InvariantsArgs) -> Result<Vec<Segment>> {
    let path = &args.input;
    let table = io::Table::read(path)?;
    let t = table.floats(path, "t")?;
    if t.is_empty() {
        return Err(CliError::Usage(format!("{}: empty trace", path.display())));
    }
    let segs = segments(&t, &table.floats(path, "J")?, &table.text(path, "branch")?);
    create_dir(&args.out)?;
    write_rows(
        &args.out.join("invariants.csv"),
        &["segment", "branch", "t_start", "t_end", "samples", "J_first", "J_mean", "max_rel_drift"],
        segs.iter().enumerate().map(|(i, s)| {
            vec![
                i.to_string(),
                s.branch.clone(),
                num(s.t_start),
                num(s.t_end),
                s.samples.to_string(),
                num(s.j_first),
                num(s.j_mean),
                num(s.max_rel_drift),
            ]
        }),
    )?;
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for s in &segs {
        let w = worst.entry(s.branch.as_str()).or_default();
        *w = w.max(s.max_rel_drift);
    }
    for (b, w) in worst {
        println!("{b}: worst relative drift {w:.3e}");
    }
    Ok(segs)
}
