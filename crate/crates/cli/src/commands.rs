//! Subcommand implementations. Each returns its artifacts; writing them is
//! left to the caller.

use serde_json::{json, Value};

use iterint::coeffs::weight_product_integral;
use iterint::diagnostics::{
    b_constants, delta_sum_trend, delta_tables, legendre_g_corner, trace_residual, DeltaKind, IndexCase,
};
use iterint::expand::{
    ito_truncated, sample_table, strat_correction, strat_truncated, CorrectionFamily,
};
use iterint::oracle::{mse_pathwise, mse_slope, MseStudy};
use iterint::sde::{strong_order_study, Scheme, SchemeSpec, StrongOrderStudy};
use iterint::stats::{variance, MeanEstimate};
use iterint::{coeff_tensor, kernel_norm_sq, trace_sum, BasisKind, Weight};

use crate::config::{CalculusChoice, RunConfig};
use crate::report::{Artifacts, Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Coeffs,
    Expand,
    Verify,
    Diag,
    Sde,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Expand => "expand",
            Command::Verify => "verify",
            Command::Diag => "diag",
            Command::Sde => "sde",
        }
    }

    fn emits_stratonovich(self, cfg: &RunConfig) -> bool {
        match self {
            Command::Expand => true,
            Command::Verify => cfg.verify.calculus == CalculusChoice::Stratonovich,
            _ => false,
        }
    }
}

/// Validates `cfg` for `command` and runs it.
pub fn run(command: Command, cfg: &RunConfig, allow_outside: bool) -> Result<Artifacts, CliError> {
    cfg.validate(command.emits_stratonovich(cfg), allow_outside)?;
    let mut out = match command {
        Command::Coeffs => coeffs(cfg)?,
        Command::Expand => expand(cfg)?,
        Command::Verify => verify(cfg)?,
        Command::Diag => diag(cfg)?,
        Command::Sde => sde(cfg)?,
    };
    out.insert("command", command.name());
    out.insert("seed", cfg.seed);
    out.insert("version", env!("CARGO_PKG_VERSION"));
    out.insert("config", serde_json::to_value(cfg).expect("config serializes"));
    out.insert("outside_guarantees", allow_outside);
    Ok(out)
}

fn coeffs(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let basis = cfg.basis()?;
    let weights = cfg.weights();
    let trunc = cfg.truncation()?;
    let c = coeff_tensor(cfg.k, trunc.orders(), &weights, &basis)?;
    let mut table = Table::new((1..=cfg.k).map(|l| format!("j{l}")).chain(["value".to_string()]));
    for (idx, &v) in c.indices().zip(c.values()) {
        let mut row: Vec<Cell> = idx.into_iter().map(Cell::from).collect();
        row.push(v.into());
        table.push(row);
    }
    let mut out = Artifacts::default();
    let frob = c.frobenius_sq();
    let norm = kernel_norm_sq(&weights, basis.interval)?;
    out.insert("orders", trunc.orders().to_vec());
    out.insert("sum_of_squares", frob);
    out.insert("kernel_norm_sq", norm);
    out.insert("bessel_gap", norm - frob);
    out.summary.push(format!(
        "k={} orders {:?}: sum of squares {frob:.12e}, kernel norm {norm:.12e}",
        cfg.k,
        trunc.orders()
    ));
    if cfg.k == 2 {
        let p = *trunc.orders().iter().min().unwrap_or(&0);
        let trace = trace_sum(p, &weights[0], &weights[1], &basis)?;
        let limit = 0.5 * weight_product_integral(&weights[0], &weights[1], basis.interval)?;
        out.insert("trace", json!({ "p": p, "sum": trace, "limit": limit, "residual": (trace - limit).abs() }));
        out.summary.push(format!("trace over j<={p}: {trace:.12e} (limit {limit:.12e})"));
    }
    out.table("coeffs", table);
    Ok(out)
}

fn expand(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let basis = cfg.basis()?;
    let weights = cfg.weights();
    let trunc = cfg.truncation()?;
    let idx = cfg.index_tuple()?;
    let pmax = trunc.max_order();
    let c = coeff_tensor(cfg.k, trunc.orders(), &weights, &basis)?;
    let family = CorrectionFamily::from_tensor(&c, &trunc)?;
    let m = idx.max_component().max(1);
    let mut table = Table::new(["sample", "seed", "ito", "stratonovich", "correction"]);
    let (mut itos, mut strats) = (Vec::new(), Vec::new());
    for s in 0..cfg.mc_samples {
        let seed = cfg.seed.wrapping_add(s);
        let z = sample_table(seed, m, pmax, &basis)?;
        let ito = ito_truncated(&c, &z, &idx, &trunc)?;
        let strat = strat_truncated(&c, &z, &idx, &trunc)?;
        let corr = strat_correction(&family, &z, &idx)?;
        table.push(vec![s.into(), seed.into(), ito.into(), strat.into(), corr.into()]);
        itos.push(ito);
        strats.push(strat);
    }
    let mut out = Artifacts::default();
    let summary = |xs: &[f64]| {
        let e = MeanEstimate::from_samples(xs);
        json!({ "mean": e.mean, "standard_error": e.se, "variance": variance(xs) })
    };
    out.insert("ito", summary(&itos));
    out.insert("stratonovich", summary(&strats));
    out.insert("samples", cfg.mc_samples);
    out.summary.push(format!(
        "{} samples of k={} indices {:?}: Ito mean {:.6e}, Stratonovich mean {:.6e}",
        cfg.mc_samples,
        cfg.k,
        idx.as_slice(),
        MeanEstimate::from_samples(&itos).mean,
        MeanEstimate::from_samples(&strats).mean
    ));
    out.table("realizations", table);
    Ok(out)
}

fn verify(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let orders = if cfg.verify.orders.is_empty() {
        vec![cfg.truncation()?.max_order()]
    } else {
        cfg.verify.orders.clone()
    };
    if orders.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Validation("verify.orders must be strictly ascending".into()));
    }
    let study = MseStudy {
        basis: cfg.basis()?,
        weights: cfg.weights(),
        idx: cfg.index_tuple()?,
        orders,
        steps: cfg.grid_steps,
        seeds: cfg.mc_samples,
        base_seed: cfg.seed,
        calculus: cfg.calculus(),
    };
    let rows = mse_pathwise(&study)?;
    let mut table = Table::new(["p", "mse", "parseval_bound", "ci_halfwidth"]);
    for r in &rows {
        table.push(vec![r.p.into(), r.mse.into(), r.parseval.into(), (1.96 * r.se).into()]);
    }
    let mut out = Artifacts::default();
    out.insert(
        "rows",
        rows.iter()
            .map(|r| json!({ "p": r.p, "mse": r.mse, "standard_error": r.se, "parseval_bound": r.parseval }))
            .collect::<Vec<_>>(),
    );
    for r in &rows {
        out.summary.push(format!("p={}: mse {:.6e}", r.p, r.mse));
    }
    if rows.len() >= 2 {
        let slope = mse_slope(&rows);
        out.insert("loglog_slope", slope);
        out.summary.push(format!("log-log slope {slope:.3}"));
    }
    out.table("mse", table);
    Ok(out)
}

fn diag(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let basis = cfg.basis()?;
    let p = cfg.diag.p;
    let mut kinds = cfg.delta_kinds()?;
    if !kinds.contains(&DeltaKind::G) {
        kinds.push(DeltaKind::G);
    }
    let mut out = Artifacts::default();

    let weights = if cfg.k == 2 { cfg.weights() } else { vec![Weight::ConstantOne; 2] };
    let mut residuals = Table::new(["p", "residual"]);
    for &q in &cfg.diag.trace_orders {
        residuals.push(vec![q.into(), trace_residual(q, &weights[0], &weights[1], &basis)?.into()]);
    }

    let tables = delta_tables(&kinds, p, &basis)?;
    let mut delta = Table::new(["kind", "row", "col", "value"]);
    let mut moments = serde_json::Map::new();
    for t in &tables {
        for r in 0..=p {
            for c in 0..=p {
                delta.push(vec![t.kind.to_string().as_str().into(), r.into(), c.into(), t.get(r, c).into()]);
            }
        }
        moments.insert(
            t.kind.to_string(),
            json!({
                "diagonal_sum": t.diagonal_sum(),
                "equal_nonzero": t.second_moment(IndexCase::EqualNonzero),
                "distinct_nonzero": t.second_moment(IndexCase::DistinctNonzero),
            }),
        );
    }
    out.insert("delta_p", p);
    out.insert("second_moments", Value::Object(moments));

    let g = tables.iter().find(|t| t.kind == DeltaKind::G).expect("g table requested");
    let len = basis.interval.length();
    match basis.kind {
        BasisKind::Legendre => {
            let closed = legendre_g_corner(p, len);
            let off = (0..=p)
                .flat_map(|r| (0..=p).map(move |c| (r, c)))
                .filter(|&rc| rc != (p, p))
                .map(|(r, c)| (g.get(r, c) + g.get(c, r)).abs())
                .fold(0.0, f64::max);
            out.insert(
                "g_corner",
                json!({ "p": p, "value": g.get(p, p), "closed_form": closed,
                        "abs_error": (g.get(p, p) - closed).abs(), "max_symmetrized_off_corner": off }),
            );
            out.summary.push(format!("g[{p}][{p}] = {:.5e} (closed form {closed:.5e})", g.get(p, p)));
        }
        BasisKind::Trigonometric => {
            out.insert("g_corner", json!({ "p": p, "value": g.get(0, 0) }));
            out.summary.push(format!("g[0][0] = {:.5e}", g.get(0, 0)));
        }
    }

    let mut trend = Table::new(["kind", "p", "diagonal_sum"]);
    if !cfg.diag.trend_orders.is_empty() {
        for &kind in &kinds {
            for (q, s) in delta_sum_trend(kind, &cfg.diag.trend_orders, &basis)? {
                trend.push(vec![kind.to_string().as_str().into(), q.into(), s.into()]);
            }
        }
    }

    if cfg.diag.b_order > 0 {
        let b = b_constants(cfg.diag.b_order, &basis)?;
        out.insert(
            "b_constants",
            json!({ "p": cfg.diag.b_order, "adjacent": b.adjacent, "interleaved": b.interleaved,
                    "nested": b.nested, "adjacent_limit": len * len / 8.0 }),
        );
        out.summary.push(format!(
            "diagonal constants at p={}: {:.6e}, {:.6e}, {:.6e}",
            cfg.diag.b_order, b.adjacent, b.interleaved, b.nested
        ));
    }
    out.table("trace_residuals", residuals);
    out.table("delta", delta);
    out.table("delta_trend", trend);
    Ok(out)
}

fn sde(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let s = &cfg.sde;
    if s.reference_level > 14 {
        return Err(CliError::Validation("sde.reference_level above 14 is not supported".into()));
    }
    let study = StrongOrderStudy {
        schemes: vec![
            SchemeSpec { scheme: Scheme::Euler, p: 0 },
            SchemeSpec { scheme: Scheme::Milstein, p: s.p },
            SchemeSpec { scheme: Scheme::Milstein, p: 0 },
        ],
        levels: s.levels.clone(),
        reference_level: s.reference_level,
        reference_p: s.p.max(1),
        seeds: s.seeds,
        base_seed: cfg.seed,
    };
    let results = strong_order_study(&s.model.model(), &study)?;
    let mut out = Artifacts::default();
    let mut table = Table::new(["scheme", "p", "h", "mean_error", "se"]);
    let mut slopes = Vec::new();
    for r in &results {
        let name = match r.spec.scheme {
            Scheme::Euler => "euler",
            Scheme::Milstein => "milstein",
        };
        for row in &r.rows {
            table.push(vec![name.into(), r.spec.p.into(), row.h.into(), row.mean_error.into(), row.se.into()]);
        }
        slopes.push(json!({ "scheme": name, "p": r.spec.p, "slope": r.slope }));
        out.summary.push(format!("{name} (p={}): slope {:.3}", r.spec.p, r.slope));
    }
    out.insert("slopes", slopes);
    out.table("strong_order", table);
    Ok(out)
}
