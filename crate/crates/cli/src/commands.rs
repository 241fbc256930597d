//! The four subcommands: `run`, `compare`, `validate`, `spectrum`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use vibcoh::channel::{by_name, ChannelOutput, ChannelRequest};
use vibcoh::dynamics::{exact_rhs, propagate, Method, ParamDerivs};
use vibcoh::gaussian::GaussianCoherence;
use vibcoh::grid::{discretize, pde_rhs, GridSpec, Parallelism};
use vibcoh::model::{HarmonicSurface, PhasePoint, TwoStateSystem};
use vibcoh::observables::{
    find_peaks, peak_spacing, spectrum, CorrelationSeries, Peak, SourceChannel,
};

use crate::config::RunConfig;
use crate::CliError;

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn channel_request<'a>(
    cfg: &RunConfig,
    sys: &'a TwoStateSystem,
) -> Result<ChannelRequest<'a>, CliError> {
    let mut req = ChannelRequest::new(sys, cfg.method()?, cfg.run.dt, cfg.nsamples());
    req.initial = PhasePoint::new(
        cfg.initial.q0.unwrap_or(sys.surface1.q_eq),
        cfg.initial.p0.unwrap_or(0.0),
    );
    req.ode_substeps = cfg.run.substeps;
    req.grid = cfg.grid;
    req.snapshot_every = cfg.run.snapshot_every;
    req.parallel = cfg.run.parallel;
    Ok(req)
}

fn run_channel(
    cfg: &RunConfig,
    sys: &TwoStateSystem,
    name: &str,
) -> Result<ChannelOutput, CliError> {
    let req = channel_request(cfg, sys)?;
    by_name(name)
        .ok_or_else(|| CliError::Config(format!("unknown channel `{name}`")))?
        .run(&req)
        .map_err(CliError::from)
}

fn peak_table(
    cfg: &RunConfig,
    series: &CorrelationSeries,
) -> Result<(vibcoh::observables::Spectrum, Vec<Peak>, Option<(f64, f64)>), CliError> {
    let sp = spectrum(
        series,
        cfg.window()?,
        cfg.spectrum.tau,
        cfg.spectrum.zero_pad,
    );
    let peaks =
        find_peaks(&sp, cfg.spectrum.peak_floor).map_err(|e| CliError::Numerical(e.to_string()))?;
    let spacing = peak_spacing(&peaks).ok();
    Ok((sp, peaks, spacing))
}

fn peaks_json(cfg: &RunConfig, peaks: &[Peak], spacing: Option<(f64, f64)>) -> serde_json::Value {
    serde_json::json!({
        "floor": cfg.spectrum.peak_floor,
        "window": cfg.spectrum.window,
        "tau": cfg.spectrum.tau,
        "zero_pad": cfg.spectrum.zero_pad,
        "peaks": peaks,
        "spacing": spacing.map(|(mean, spread)| serde_json::json!({
            "mean": mean,
            "max_deviation": spread,
        })),
    })
}

/// `run`: propagate every requested channel, write the artifact bundle.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let out = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;

    let mut channel_manifests = serde_json::Map::new();
    for name in &cfg.run.channels {
        let output = run_channel(cfg, &sys, name)?;

        let mut buf = Vec::new();
        output
            .series
            .write_csv(&mut buf)
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&out.join(format!("correlation_{name}.csv")), &buf)?;

        let (sp, peaks, spacing) = peak_table(cfg, &output.series)?;
        let mut buf = Vec::new();
        sp.write_csv(&mut buf)
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(&out.join(format!("spectrum_{name}.csv")), &buf)?;
        write_file(
            &out.join(format!("peaks_{name}.json")),
            serde_json::to_string_pretty(&peaks_json(cfg, &peaks, spacing))
                .unwrap()
                .as_bytes(),
        )?;

        if let Some(traj) = &output.trajectory {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)
                .map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&out.join(format!("trajectory_{name}.csv")), &buf)?;
            write_file(
                &out.join(format!("trajectory_{name}.json")),
                serde_json::to_string_pretty(&traj.to_json())
                    .unwrap()
                    .as_bytes(),
            )?;
        }
        for (k, snap) in output.snapshots.iter().enumerate() {
            let mut buf = Vec::new();
            vibcoh::grid::write_snapshot_csv(snap, &mut buf)
                .map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&out.join(format!("snapshot_{name}_{k:04}.csv")), &buf)?;
            write_file(
                &out.join(format!("snapshot_{name}_{k:04}.json")),
                serde_json::to_string_pretty(&vibcoh::grid::snapshot_metadata(
                    snap,
                    &sys,
                    output.series.method,
                ))
                .unwrap()
                .as_bytes(),
            )?;
        }

        match spacing {
            Some((mean, spread)) => println!(
                "channel {name}: {} samples, {} peaks above {:.0}% of max, spacing {mean:.6} (max deviation {spread:.2e})",
                output.series.len(),
                peaks.len(),
                100.0 * cfg.spectrum.peak_floor,
            ),
            None => println!(
                "channel {name}: {} samples, {} peaks above {:.0}% of max",
                output.series.len(),
                peaks.len(),
                100.0 * cfg.spectrum.peak_floor,
            ),
        }

        channel_manifests.insert(
            name.clone(),
            serde_json::json!({
                "samples": output.series.len(),
                "sample_dt": output.series.dt,
                "max_boundary_ratio": output.max_boundary_ratio,
                "snapshots": output.snapshots.len(),
                "peaks": peaks.len(),
                "spacing": spacing.map(|(mean, spread)| serde_json::json!({
                    "mean": mean, "max_deviation": spread,
                })),
            }),
        );
    }

    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "derived": {
            "omega0": sys.omega0(),
            "q0": sys.q0(),
            "omega_curvature": sys.omega_curvature(),
            "nsamples": cfg.nsamples(),
            "effective_total_time": cfg.nsamples() as f64 * cfg.run.dt,
            "grid_cfl_dt": cfg.grid.map(|spec| vibcoh::grid::cfl_dt(&spec, &sys)),
        },
        "channels": channel_manifests,
    });
    write_file(
        &out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
    )?;
    Ok(())
}

/// One side of a comparison: `channel[:method]`.
#[derive(Debug, Clone)]
struct ChannelSpec {
    channel: String,
    method: Method,
}

fn parse_channel_spec(text: &str, default_method: Method) -> Result<ChannelSpec, CliError> {
    let (channel, method) = match text.split_once(':') {
        Some((c, m)) => (
            c.to_string(),
            Method::parse(m).ok_or_else(|| CliError::Config(format!("unknown method `{m}`")))?,
        ),
        None => (text.to_string(), default_method),
    };
    if by_name(&channel).is_none() {
        return Err(CliError::Config(format!("unknown channel `{channel}`")));
    }
    Ok(ChannelSpec { channel, method })
}

/// `compare`: run two or more channel specs on the common sample grid and
/// report pairwise discrepancies. Same-method pairs are judged against the
/// cross-channel tolerances; cross-method pairs are expected to diverge and
/// report the divergence time instead.
pub fn compare(cfg: &RunConfig, specs: &[String]) -> Result<(), CliError> {
    cfg.validate()?;
    if specs.len() < 2 {
        return Err(CliError::Config(
            "compare needs at least two channel specs".into(),
        ));
    }
    let default_method = cfg.method()?;
    let specs: Vec<ChannelSpec> = specs
        .iter()
        .map(|s| parse_channel_spec(s, default_method))
        .collect::<Result<_, _>>()?;
    let sys = cfg.system()?;

    let mut series = Vec::new();
    for spec in &specs {
        let mut sub = cfg.clone();
        sub.run.method = spec.method.as_str().to_string();
        let output = run_channel(&sub, &sys, &spec.channel)?;
        series.push(output.series);
    }

    let cmax = series
        .iter()
        .flat_map(|s| s.values.iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max);

    let mut pairs = Vec::new();
    let mut all_pass = true;
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (a, b) = (&series[i], &series[j]);
            let n = a.len().min(b.len());
            let mut max_diff: f64 = 0.0;
            let mut sum_sq = 0.0;
            let mut divergence_time = None;
            for k in 0..n {
                let d = (a.values[k] - b.values[k]).norm();
                max_diff = max_diff.max(d);
                sum_sq += d * d;
                if divergence_time.is_none() && d > 0.1 {
                    divergence_time = Some(a.time(k));
                }
            }
            let rms = (sum_sq / n as f64).sqrt();
            let same_method = specs[i].method == specs[j].method;
            let tolerance = if !same_method {
                None
            } else if specs[i].channel == "grid" || specs[j].channel == "grid" {
                Some(1e-3)
            } else {
                Some(1e-6)
            };
            let pass = tolerance.map(|tol| max_diff <= tol * cmax);
            if pass == Some(false) {
                all_pass = false;
            }
            let label_a = format!("{}:{}", specs[i].channel, specs[i].method);
            let label_b = format!("{}:{}", specs[j].channel, specs[j].method);
            match pass {
                Some(ok) => println!(
                    "{label_a} vs {label_b}: max |dc| = {max_diff:.3e}, rms = {rms:.3e} -> {}",
                    if ok { "pass" } else { "FAIL" }
                ),
                None => println!(
                    "{label_a} vs {label_b}: max |dc| = {max_diff:.3e}, rms = {rms:.3e}, divergence at t = {}",
                    divergence_time.map_or("never".into(), |t| format!("{t:.1}")),
                ),
            }
            pairs.push(serde_json::json!({
                "a": label_a,
                "b": label_b,
                "max_diff": max_diff,
                "rms_diff": rms,
                "divergence_time": divergence_time,
                "tolerance": tolerance,
                "pass": pass,
            }));
        }
    }

    let out = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let report = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "pairs": pairs,
        "all_pass": all_pass,
    });
    write_file(
        &out.join("compare.json"),
        serde_json::to_string_pretty(&report).unwrap().as_bytes(),
    )?;
    if !all_pass {
        return Err(CliError::Numerical(
            "same-method channels disagree beyond tolerance (see compare.json)".into(),
        ));
    }
    Ok(())
}

/// `spectrum`: recompute a spectrum from an existing c(t) CSV.
pub fn recompute_spectrum(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let text =
        fs::read_to_string(input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue; // header
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(CliError::Config(format!(
                "{}:{}: expected `t,Re c,Im c[,abs c]`",
                input.display(),
                lineno + 1
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", input.display(), lineno + 1)))
        };
        times.push(parse(cols[0])?);
        values.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    if times.len() < 4 {
        return Err(CliError::Config("series too short for a spectrum".into()));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs() {
            return Err(CliError::Config("series is not uniformly sampled".into()));
        }
    }
    let series = CorrelationSeries::new(dt, values, Method::MoyalExact, SourceChannel::Gaussian)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (sp, peaks, spacing) = peak_table(cfg, &series)?;

    let out = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut buf = Vec::new();
    sp.write_csv(&mut buf)
        .map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&out.join("spectrum_recomputed.csv"), &buf)?;
    write_file(
        &out.join("peaks_recomputed.json"),
        serde_json::to_string_pretty(&peaks_json(cfg, &peaks, spacing))
            .unwrap()
            .as_bytes(),
    )?;
    match spacing {
        Some((mean, spread)) => println!(
            "{} samples -> {} peaks, spacing {mean:.6} (max deviation {spread:.2e})",
            series.len(),
            peaks.len()
        ),
        None => println!("{} samples -> {} peaks", series.len(), peaks.len()),
    }
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// `validate`: the built-in invariant suite. Prints a pass/fail table and
/// fails the process if anything is red.
pub fn validate() -> Result<(), CliError> {
    let sys = TwoStateSystem::new(
        HarmonicSurface::new(2000.0, 0.01, 0.0, 0.0).unwrap(),
        HarmonicSurface::new(2000.0, 0.004, 1.0, 0.1).unwrap(),
        1.0,
    )
    .unwrap();
    let g0 = GaussianCoherence::ground_state(&sys);
    let mut checks = Vec::new();

    // recurrence of |c| after one upper-surface period
    {
        let t_rec = sys.surface2.period();
        let nsteps = 15708;
        let traj = propagate(&g0, &sys, t_rec / nsteps as f64, nsteps, Method::MoyalExact)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let r = traj.trace_series().last().unwrap().norm();
        checks.push(check(
            "recurrence: exact |c(T)| = 1 within 1e-5",
            (r - 1.0).abs() < 1e-5,
            format!("|c(T)| = {r:.8}"),
        ));
    }

    // boundedness of the exact v, secular growth of the semiclassical u
    {
        let nsteps = 31416;
        let traj = propagate(
            &g0,
            &sys,
            2.0 * sys.surface2.period() / nsteps as f64,
            nsteps,
            Method::MoyalExact,
        )
        .map_err(|e| CliError::Numerical(e.to_string()))?;
        let vmax = traj.states.iter().map(|g| g.v.norm()).fold(0.0, f64::max);
        checks.push(check(
            "boundedness: exact sup|v| <= |Q1 - Q2|_max/hbar",
            vmax <= 2.0 + 1e-6,
            format!("sup|v| = {vmax:.9} vs bound 2"),
        ));

        let period0 = std::f64::consts::TAU / sys.omega0();
        let spp = 4125usize;
        let traj = propagate(
            &g0,
            &sys,
            period0 / spp as f64,
            5 * spp,
            Method::Semiclassical,
        )
        .map_err(|e| CliError::Numerical(e.to_string()))?;
        let maxima: Vec<f64> = (0..5)
            .map(|j| {
                (j * spp..=(j + 1) * spp)
                    .map(|k| traj.states[k].u.norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        checks.push(check(
            "secularity: semiclassical per-period max|u| strictly increases",
            maxima.windows(2).all(|w| w[1] > w[0]),
            format!("{maxima:?}"),
        ));
    }

    // closed-form trace against 2-D quadrature on perturbed states
    {
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let mut g = g0;
            let s = 0.05 * k as f64;
            g.a += Complex64::new(0.3 * s, 0.4 * s);
            g.b += Complex64::new(0.001 * s, -0.002 * s);
            g.c = Complex64::new(0.05 * s, 0.3 * s);
            g.u = Complex64::new(0.1 * s, -0.8 * s);
            g.v = Complex64::new(-0.04 * s, 0.3 * s);
            g.w += Complex64::new(0.2 * s, 1.7 * s);
            let closed = g.trace().map_err(|e| CliError::Numerical(e.to_string()))?;
            let quad = quadrature_trace(&g, 400);
            worst = worst.max((closed - quad).norm() / quad.norm());
        }
        checks.push(check(
            "trace: closed form vs 2-D quadrature within 1e-6",
            worst < 1e-6,
            format!("worst relative difference {worst:.3e}"),
        ));
    }

    // stencil orders by Richardson refinement of the lattice rhs
    {
        let mut g = g0;
        g.u = Complex64::new(0.0, 0.8);
        g.v = Complex64::new(0.0, -0.4);
        let p_ratio = dispersive_stencil_err(&sys, &g, 64) / dispersive_stencil_err(&sys, &g, 128);
        checks.push(check(
            "stencil: dispersive p-stencil Richardson ratio in [3.5, 4.5]",
            (3.5..=4.5).contains(&p_ratio),
            format!("ratio {p_ratio:.2}"),
        ));
        let q_ratio = full_rhs_err(&sys, &g, 64) / full_rhs_err(&sys, &g, 128);
        checks.push(check(
            "stencil: advective q-stencil Richardson ratio in [12, 20]",
            (12.0..=20.0).contains(&q_ratio),
            format!("ratio {q_ratio:.2}"),
        ));
    }

    // degeneracy: identical surfaces make exact and semiclassical channels equal
    {
        let s = HarmonicSurface::new(2000.0, 0.01, 0.0, 0.0).unwrap();
        let s2 = HarmonicSurface::new(2000.0, 0.01, 0.0, 0.1).unwrap();
        let dsys = TwoStateSystem::new(s, s2, 1.0).unwrap();
        let dg0 = GaussianCoherence::ground_state(&dsys);
        let a = propagate(&dg0, &dsys, 0.1, 10000, Method::MoyalExact)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let b = propagate(&dg0, &dsys, 0.1, 10000, Method::Semiclassical)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let diff = a
            .trace_series()
            .iter()
            .zip(b.trace_series())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        checks.push(check(
            "degeneracy: identical surfaces give exact == semiclassical",
            diff < 1e-10,
            format!("max |c_exact - c_sc| = {diff:.2e}"),
        ));
    }

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut all = true;
    let mut stdout = std::io::stdout();
    for c in &checks {
        all &= c.pass;
        writeln!(
            stdout,
            "{:width$}  {}  {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail,
        )
        .ok();
    }
    if all {
        Ok(())
    } else {
        Err(CliError::Validation(
            "one or more invariant checks failed".into(),
        ))
    }
}

fn quadrature_trace(g: &GaussianCoherence, n: usize) -> Complex64 {
    let det_r = 4.0 * g.a.re * g.b.re - g.c.re * g.c.re;
    let sigma_q = (2.0 * g.b.re / det_r).sqrt();
    let sigma_p = (2.0 * g.a.re / det_r).sqrt();
    let x0 = (2.0 * g.b.re * g.u.re + g.c.re * g.v.re) / det_r;
    let y0 = (2.0 * g.a.re * g.v.re + g.c.re * g.u.re) / det_r;
    let (qc, pc) = (g.q + x0, g.p + y0);
    let (lq, lp) = (8.0 * sigma_q, 8.0 * sigma_p);
    let (dq, dp) = (2.0 * lq / n as f64, 2.0 * lp / n as f64);
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..=n {
        let wq = if i == 0 || i == n { 0.5 } else { 1.0 };
        let q = qc - lq + i as f64 * dq;
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let wp = if j == 0 || j == n { 0.5 } else { 1.0 };
            row += wp * g.evaluate(q, pc - lp + j as f64 * dp);
        }
        sum += wq * row;
    }
    sum * dq * dp
}

fn dispersive_stencil_err(sys: &TwoStateSystem, g: &GaussianCoherence, np: usize) -> f64 {
    let spec = GridSpec {
        nq: 64,
        np,
        ..GridSpec::default_domain()
    };
    let grid = discretize(g, &spec).unwrap();
    let ex = pde_rhs(&grid, sys, Method::MoyalExact, Parallelism::Serial).unwrap();
    let sc = pde_rhs(&grid, sys, Method::Semiclassical, Parallelism::Serial).unwrap();
    let disp = Complex64::new(0.0, sys.hbar * sys.hbar * sys.omega_curvature() / 8.0);
    let mut err: f64 = 0.0;
    for iq in 0..spec.nq {
        let x = spec.q_at(iq) - g.q;
        for ip in 0..np {
            let y = spec.p_at(ip) - g.p;
            let phi_y = -2.0 * g.b * y + g.c * x + g.v;
            let analytic = disp * grid.field[iq * np + ip] * (phi_y * phi_y - 2.0 * g.b);
            err = err.max((ex[iq * np + ip] - sc[iq * np + ip] - analytic).norm());
        }
    }
    err
}

fn full_rhs_err(sys: &TwoStateSystem, g: &GaussianCoherence, nq: usize) -> f64 {
    let spec = GridSpec {
        nq,
        np: 2048,
        ..GridSpec::default_domain()
    };
    let grid = discretize(g, &spec).unwrap();
    let rhs = pde_rhs(&grid, sys, Method::MoyalExact, Parallelism::Serial).unwrap();
    let d: ParamDerivs = exact_rhs(g, sys);
    let mut err: f64 = 0.0;
    for iq in 0..spec.nq {
        let x = spec.q_at(iq) - g.q;
        for ip in 0..spec.np {
            let y = spec.p_at(ip) - g.p;
            let chain = -d.da * x * x - d.db * y * y
                + d.dc * x * y
                + d.du * x
                + d.dv * y
                + d.dw
                + (2.0 * g.a * x - g.c * y - g.u) * d.dq
                + (2.0 * g.b * y - g.c * x - g.v) * d.dp;
            let analytic = grid.field[iq * spec.np + ip] * chain;
            err = err.max((rhs[iq * spec.np + ip] - analytic).norm());
        }
    }
    err
}
