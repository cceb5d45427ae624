//! The seven CLI commands. Each returns a [`Table`] so the binary can
//! render CSV or JSON uniformly; parallel work (the scan raster) is
//! collected in index order, keeping output independent of thread count.

use std::f64::consts::PI;

use rayon::prelude::*;

use floquet_modes_core::continued::build_mode_set;
use floquet_modes_core::inhom::{periodic_solution, response_residual};
use floquet_modes_core::model::{SystemSpec, Tolerances};
use floquet_modes_core::oracle;
use floquet_modes_core::quantum::{norm_quadrature, QuantumState, StateKind};
use floquet_modes_core::transform::{FLTransform, PhaseState};
use floquet_modes_core::{CVec, Complex64, DVec};

use crate::config::{parse_target, ConfigFile, ScanTarget, TargetMatrix};
use crate::output::{cols, fnum, Table};
use crate::CliError;

fn base_table(cfg: &ConfigFile, command: &str, columns: Vec<String>) -> Table {
    let mut table = Table::new(columns);
    table.meta(
        "tool",
        format!("floquet-modes {}", env!("CARGO_PKG_VERSION")),
    );
    table.meta("command", command);
    table.meta("config", cfg.echo());
    table
}

fn meta_tolerances(table: &mut Table, tol: &Tolerances) {
    table.meta(
        "tolerances",
        format!(
            "truncation_order={} convergence_tol={:e} root_tol={:e} identity_tol={:e} oracle_steps={}",
            tol.truncation_order, tol.convergence_tol, tol.root_tol, tol.identity_tol, tol.oracle_steps
        ),
    );
}

pub fn validate(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let mut table = base_table(cfg, "validate", cols(&["property", "value"]));
    meta_tolerances(&mut table, &tol);
    table.push(vec!["f".into(), spec.dof().to_string()]);
    table.push(vec!["has_q4".into(), spec.has_q4().to_string()]);
    table.push(vec!["has_drive".into(), spec.has_drive().to_string()]);

    let (dec, class) = oracle::assess_stability(&spec, tol.oracle_steps, cfg.margin())?;
    table.push(vec!["stability".into(), class.to_string()]);
    table.push(vec!["margin".into(), fnum(cfg.margin())]);
    table.push(vec![
        "max_multiplier_modulus".into(),
        fnum(oracle::max_multiplier_modulus(&dec)),
    ]);
    table.push(vec![
        "min_exponent_integer_distance".into(),
        fnum(oracle::min_exponent_integer_distance(&dec)),
    ]);
    table.push(vec![
        "monodromy_det_residual".into(),
        fnum(dec.det_residual()),
    ]);
    for (k, l) in dec.multipliers.iter().enumerate() {
        table.push(vec![
            format!("multiplier_{k}"),
            format!(
                "{}{}{}i",
                fnum(l.re),
                if l.im < 0.0 { "-" } else { "+" },
                fnum(l.im.abs())
            ),
        ]);
    }
    Ok(table)
}

pub fn exponents(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let modes = build_mode_set(&spec, &tol).map_err(CliError::Core)?;
    let xi = oracle::integrate_matrizant(&spec, PI, tol.oracle_steps).map_err(CliError::Core)?;
    let dec = oracle::floquet_decompose(&xi).map_err(CliError::Core)?;

    let mut table = base_table(
        cfg,
        "exponents",
        cols(&["j", "beta", "multiplier_mismatch", "n_used"]),
    );
    meta_tolerances(&mut table, &tol);
    for (j, mode) in modes.modes().iter().enumerate() {
        let lam = Complex64::from_polar(1.0, mode.beta() * PI);
        let mismatch = dec
            .multipliers
            .iter()
            .map(|l| (l - lam).norm())
            .fold(f64::INFINITY, f64::min);
        table.push(vec![
            (j + 1).to_string(),
            fnum(mode.beta()),
            fnum(mismatch),
            mode.n_max().to_string(),
        ]);
    }
    Ok(table)
}

pub fn modes(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let mode_set = build_mode_set(&spec, &tol).map_err(CliError::Core)?;
    let f = spec.dof();
    let mut columns = vec!["j".to_string(), "beta".to_string(), "n".to_string()];
    columns.extend((0..f).map(|i| format!("c{i}")));
    let mut table = base_table(cfg, "modes", columns);
    meta_tolerances(&mut table, &tol);
    for (j, mode) in mode_set.modes().iter().enumerate() {
        table.meta(
            &format!("mode_{}", j + 1),
            format!(
                "beta={} residual={:e} converged={}",
                fnum(mode.beta()),
                mode.residual(),
                mode.converged()
            ),
        );
        for (n, c) in mode.coeffs() {
            let mut row = vec![(j + 1).to_string(), fnum(mode.beta()), n.to_string()];
            row.extend(c.iter().map(|&x| fnum(x)));
            table.push(row);
        }
    }
    Ok(table)
}

pub fn propagate(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let pc = cfg
        .propagate
        .as_ref()
        .ok_or_else(|| CliError::Usage("config lacks a 'propagate' section".into()))?;
    let f = spec.dof();
    if pc.u0.len() != f || pc.p0.len() != f {
        return Err(CliError::Usage(format!("u0 and p0 must have {f} entries")));
    }
    let flt = FLTransform::new(build_mode_set(&spec, &tol).map_err(CliError::Core)?, &tol)
        .map_err(CliError::Core)?;
    let state0 = PhaseState::new(DVec::from_vec(pc.u0.clone()), DVec::from_vec(pc.p0.clone()));

    let mut columns = vec!["t".to_string()];
    columns.extend((0..f).map(|i| format!("u{i}")));
    columns.extend((0..f).map(|i| format!("p{i}")));
    let mut table = base_table(cfg, "propagate", columns);
    meta_tolerances(&mut table, &tol);
    let n = pc.t_steps.max(1);
    for k in 0..n {
        let t = if n == 1 {
            pc.t_start
        } else {
            pc.t_start + (pc.t_stop - pc.t_start) * k as f64 / (n - 1) as f64
        };
        let s = flt.propagate(&state0, t).map_err(CliError::Core)?;
        let mut row = vec![fnum(t)];
        row.extend(s.u.iter().map(|&x| fnum(x)));
        row.extend(s.p.iter().map(|&x| fnum(x)));
        table.push(row);
    }
    Ok(table)
}

fn apply_target(
    spec: &SystemSpec,
    target: &ScanTarget,
    value: f64,
) -> Result<SystemSpec, CliError> {
    let mut a = spec.a().clone();
    let mut q2 = spec.q2().clone();
    let mut q4 = spec.q4().clone();
    {
        let m = match target.matrix {
            TargetMatrix::A => &mut a,
            TargetMatrix::Q2 => &mut q2,
            TargetMatrix::Q4 => &mut q4,
        };
        m[(target.i, target.j)] = value;
        m[(target.j, target.i)] = value;
    }
    let mut out = SystemSpec::new(a, q2).map_err(CliError::Core)?;
    if q4.iter().any(|&x| x != 0.0) {
        out = out.with_q4(q4).map_err(CliError::Core)?;
    }
    Ok(out)
}

pub fn scan(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let sc = cfg
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Usage("config lacks a 'scan' section".into()))?;
    let total = sc.p1.steps.saturating_mul(sc.p2.steps);
    if total > 1_000_000 {
        return Err(CliError::Usage(format!(
            "scan grid has {total} points, limit is 1000000"
        )));
    }
    let t1 = parse_target(&sc.p1.target, spec.dof())?;
    let t2 = parse_target(&sc.p2.target, spec.dof())?;
    let steps = sc.oracle_steps.unwrap_or(1024).max(64);
    let margin = cfg.margin();

    let mut table = base_table(cfg, "scan", cols(&["p1", "p2", "class", "margin"]));
    table.meta("oracle_steps", steps.to_string());

    // row-major: p1 outer, p2 inner; the parallel map preserves order
    let points: Vec<(f64, f64)> = (0..sc.p1.steps)
        .flat_map(|i| {
            let v1 = sc.p1.value_at(i);
            (0..sc.p2.steps).map(move |j| (v1, sc.p2.value_at(j)))
        })
        .collect();
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|&(v1, v2)| {
            let outcome = apply_target(&spec, &t1, v1)
                .and_then(|s| apply_target(&s, &t2, v2))
                .and_then(|s| oracle::assess_stability(&s, steps, margin).map_err(CliError::Core));
            match outcome {
                Ok((dec, class)) => {
                    let dist = oracle::min_exponent_integer_distance(&dec);
                    vec![fnum(v1), fnum(v2), class.to_string(), fnum(dist)]
                }
                Err(_) => vec![fnum(v1), fnum(v2), "Error".into(), "NaN".into()],
            }
        })
        .collect();
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

pub fn inhom(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let resp = periodic_solution(&spec, &tol).map_err(CliError::Core)?;
    let f = spec.dof();
    let mut columns = vec!["record".to_string(), "n".to_string()];
    columns.extend((0..f).map(|i| format!("v{i}")));
    let mut table = base_table(cfg, "inhom", columns);
    meta_tolerances(&mut table, &tol);
    table.meta(
        "residual",
        format!("{:e}", response_residual(&resp, &spec, 100)),
    );
    for (n, c) in resp.coeffs() {
        let mut row = vec!["B".to_string(), n.to_string()];
        row.extend(c.iter().map(|&x| fnum(x)));
        table.push(row);
    }
    let mut row = vec![
        "alpha_secular".to_string(),
        String::new(),
        fnum(resp.alpha_secular()),
    ];
    row.resize(2 + f, String::new());
    table.push(row);
    for (k, g) in resp.alpha_osc().iter().enumerate() {
        let mut row = vec!["alpha_osc".to_string(), (k + 1).to_string(), fnum(*g)];
        row.resize(2 + f, String::new());
        table.push(row);
    }
    Ok(table)
}

pub fn wavefunction(cfg: &ConfigFile) -> Result<Table, CliError> {
    let spec = cfg.system()?;
    let tol = cfg.tolerances()?;
    let wc = cfg
        .wavefunction
        .as_ref()
        .ok_or_else(|| CliError::Usage("config lacks a 'wavefunction' section".into()))?;
    let f = spec.dof();
    if f > 3 {
        return Err(CliError::Usage(
            "wavefunction grids support up to three degrees of freedom".into(),
        ));
    }
    if wc.times.is_empty() {
        return Err(CliError::Usage(
            "wavefunction 'times' must not be empty".into(),
        ));
    }
    let flt = FLTransform::new(build_mode_set(&spec, &tol).map_err(CliError::Core)?, &tol)
        .map_err(CliError::Core)?;
    let kind = match &wc.state {
        crate::config::StateConfig::Coherent(pairs) => {
            if pairs.len() != f {
                return Err(CliError::Usage(format!("coherent label needs {f} entries")));
            }
            StateKind::Coherent(CVec::from_iterator(
                f,
                pairs.iter().map(|p| Complex64::new(p[0], p[1])),
            ))
        }
        crate::config::StateConfig::Number(ns) => {
            if ns.len() != f {
                return Err(CliError::Usage(format!(
                    "occupation tuple needs {f} entries"
                )));
            }
            StateKind::Number(ns.clone())
        }
    };
    let resp = if wc.driven {
        Some(periodic_solution(&spec, &tol).map_err(CliError::Core)?)
    } else {
        None
    };
    let mut state = QuantumState::new(&spec, &flt, kind).map_err(CliError::Core)?;
    if let Some(r) = &resp {
        state = state.with_drive(r);
    }

    // axis grids: explicit, or an envelope of the state's support over
    // every output time
    let (mins, maxs, steps) = match &wc.grid {
        Some(g) => {
            if g.min.len() != f || g.max.len() != f || g.steps.len() != f {
                return Err(CliError::Usage(format!("grid must specify {f} axes")));
            }
            (g.min.clone(), g.max.clone(), g.steps.clone())
        }
        None => {
            let mut lo = vec![f64::INFINITY; f];
            let mut hi = vec![f64::NEG_INFINITY; f];
            for &t in &wc.times {
                let c = state.center(t);
                let hw = state.support_halfwidth(t, 6.0).map_err(CliError::Core)?;
                for j in 0..f {
                    lo[j] = lo[j].min(c[j] - hw[j]);
                    hi[j] = hi[j].max(c[j] + hw[j]);
                }
            }
            (lo, hi, vec![61usize; f])
        }
    };

    let mut columns = vec!["t".to_string()];
    columns.extend((0..f).map(|i| format!("u{i}")));
    columns.extend(["re", "im", "density"].iter().map(|s| s.to_string()));
    let mut table = base_table(cfg, "wavefunction", columns);
    meta_tolerances(&mut table, &tol);

    let axis = |j: usize, k: usize| -> f64 {
        if steps[j] <= 1 {
            mins[j]
        } else {
            mins[j] + (maxs[j] - mins[j]) * k as f64 / (steps[j] - 1) as f64
        }
    };
    for &t in &wc.times {
        let frame = state.frame(t).map_err(CliError::Core)?;
        let total: usize = steps.iter().product();
        for flat in 0..total {
            // row-major: the last axis varies fastest
            let mut rem = flat;
            let mut idx = vec![0usize; f];
            for j in (0..f).rev() {
                idx[j] = rem % steps[j];
                rem /= steps[j];
            }
            let u = DVec::from_iterator(f, (0..f).map(|j| axis(j, idx[j])));
            let psi = state
                .amplitude_in_frame(&frame, &u)
                .map_err(CliError::Core)?;
            let mut row = vec![fnum(t)];
            row.extend(u.iter().map(|&x| fnum(x)));
            row.push(fnum(psi.re));
            row.push(fnum(psi.im));
            row.push(fnum(psi.norm_sqr()));
            table.push(row);
        }
    }
    if f <= 2 {
        for &t in &wc.times {
            let norm = norm_quadrature(&state, t, 160).map_err(CliError::Core)?;
            table.note(format!("normalization t={} value={}", fnum(t), fnum(norm)));
        }
    }
    Ok(table)
}
