use ultradiff::kolmogorov::reduce_potential;
use ultradiff::oracle::{
    build_generator, build_potential_generator, expm_apply, occupancy_distribution, simulate,
    total_variation, tv_standard_error_bound, JumpProcessConfig,
};
use ultradiff::spectral::{eigenpairs, enumerate_basis, gram_residual, solve_cauchy_with_sign};
use ultradiff::PiecewiseFunction;

use crate::config::Run;
use crate::output::Table;
use crate::Failure;

const DEFAULT_PATHS: usize = 100_000;

pub fn spectrum(run: &Run) -> Result<Table, Failure> {
    let mut table = Table::new("spectrum", &["gamma", "parent", "a", "lambda"]);
    for pair in eigenpairs(&run.tree, &run.kernel)? {
        let ix = &pair.index;
        table.rows.push(vec![
            (ix.gamma() as i64).into(),
            ix.parent().path_string().into(),
            (ix.a() as i64).into(),
            pair.lambda.into(),
        ]);
    }
    table.note("eigenfunctions", table.rows.len());
    Ok(table)
}

pub fn basis(run: &Run) -> Result<Table, Failure> {
    let basis = enumerate_basis(&run.tree, run.sign, true)?;
    let mut table = Table::new(
        "basis",
        &[
            "gamma",
            "parent",
            "reference",
            "b",
            "k",
            "on_reference",
            "on_b",
            "on_rest",
        ],
    );
    let p = run.base.get() as u8;
    for e in &basis.elements {
        let rest = (0..p)
            .find(|&d| d != e.reference() && d != e.b())
            .map_or(0.0, |d| e.value_on_child(d));
        table.rows.push(vec![
            (e.gamma() as i64).into(),
            e.parent().path_string().into(),
            (e.reference() as i64).into(),
            (e.b() as i64).into(),
            e.k().into(),
            e.value_on_child(e.reference()).into(),
            e.value_on_child(e.b()).into(),
            rest.into(),
        ]);
    }
    table.note("sign", run.sign.to_string());
    if let Some(c) = basis.constant {
        table.note("constant", c);
    }
    Ok(table)
}

pub fn basis_check(run: &Run) -> Result<Table, Failure> {
    let basis = enumerate_basis(&run.tree, run.sign, true)?;
    let mut table = Table::new("basis-check", &["quantity", "value"]);
    let support = run.tree.support_leaves().len();
    table
        .rows
        .push(vec!["basis_size".into(), basis.len().into()]);
    table
        .rows
        .push(vec!["support_leaves".into(), support.into()]);
    table.rows.push(vec![
        "max_gram_residual".into(),
        gram_residual(&basis, &run.tree).into(),
    ]);
    table.note("sign", run.sign.to_string());
    Ok(table)
}

pub fn solve(run: &Run) -> Result<Table, Failure> {
    let f0 = run.initial()?;
    let times = run.times()?;
    let solutions = solve_cauchy_with_sign(&run.tree, &run.kernel, &f0, times, run.sign)?;
    let mut table = Table::new("solve", &["t", "leaf", "value"]);
    for (&t, f) in times.iter().zip(&solutions) {
        for (leaf, &v) in run.tree.leaves().zip(f.values()) {
            table
                .rows
                .push(vec![t.into(), leaf.path_string().into(), v.into()]);
        }
    }
    Ok(table)
}

pub fn simulate_histogram(run: &Run) -> Result<Table, Failure> {
    let horizon = match (run.config.horizon, run.config.times.last()) {
        (Some(h), _) | (None, Some(&h)) => h,
        _ => {
            return Err(Failure::Config(
                "no horizon given (config \"horizon\" or --horizon)".into(),
            ))
        }
    };
    let cfg = JumpProcessConfig {
        initial_leaf: run.initial_leaf()?,
        horizon,
        paths: run.config.paths.unwrap_or(DEFAULT_PATHS),
        seed: run.config.seed,
    };
    let h = simulate(&cfg, &run.tree, &run.kernel)?;
    let mut table = Table::new("simulate", &["leaf", "probability", "standard_error"]);
    table.note("initial_leaf", cfg.initial_leaf.path_string());
    table.note("horizon", horizon);
    table.note("paths", h.paths);
    table.note("absorbing", h.absorbing.to_string());
    for (leaf, (&p, &se)) in run
        .tree
        .leaves()
        .zip(h.probabilities.iter().zip(&h.standard_errors))
    {
        table
            .rows
            .push(vec![leaf.path_string().into(), p.into(), se.into()]);
    }
    Ok(table)
}

/// Law of the walk started at one leaf, three ways. Returns the table and a
/// description of any threshold breach.
pub fn compare(run: &Run) -> Result<(Table, Option<String>), Failure> {
    let times = run.times()?;
    let x0 = run.initial_leaf()?;
    let paths = run.config.paths.unwrap_or(DEFAULT_PATHS);
    let w = run.tree.leaf_weights_f64();
    let mut delta = PiecewiseFunction::zeros_like(&run.tree);
    delta.values_mut()[x0.index()] = 1.0;
    let spectral = solve_cauchy_with_sign(&run.tree, &run.kernel, &delta, times, run.sign)?;
    let dense = expm_apply(&build_generator(&run.tree, &run.kernel)?, &delta, times)?;

    let mut columns = vec!["t", "leaf", "spectral", "expm"];
    if paths > 0 {
        columns.extend(["monte_carlo", "standard_error"]);
    }
    let mut table = Table::new("compare", &columns);
    let (mut max_dev, mut worst_tv_ratio) = (0.0f64, 0.0f64);
    let mut tv_notes = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        let dev = spectral[ti].max_abs_diff(&dense[ti]);
        max_dev = max_dev.max(dev);
        let exact = occupancy_distribution(&run.tree, &run.kernel, &x0, t)?;
        let histogram = if paths > 0 {
            let cfg = JumpProcessConfig {
                initial_leaf: x0.clone(),
                horizon: t,
                paths,
                seed: run.config.seed,
            };
            let h = simulate(&cfg, &run.tree, &run.kernel)?;
            let tv = total_variation(&h.probabilities, &exact);
            let bound = tv_standard_error_bound(&exact, paths);
            worst_tv_ratio = worst_tv_ratio.max(if bound > 0.0 {
                tv / bound
            } else {
                tv / f64::EPSILON
            });
            tv_notes.push((t, tv, bound));
            Some(h)
        } else {
            None
        };
        let scale = w[x0.index()];
        for (i, leaf) in run.tree.leaves().enumerate() {
            let mut row = vec![
                t.into(),
                leaf.path_string().into(),
                (w[i] * spectral[ti].values()[i] / scale).into(),
                (w[i] * dense[ti].values()[i] / scale).into(),
            ];
            if let Some(h) = &histogram {
                row.push(h.probabilities[i].into());
                row.push(h.standard_errors[i].into());
            }
            table.rows.push(row);
        }
    }
    table.note("initial_leaf", x0.path_string());
    table.note("max_spectral_vs_expm", max_dev);
    table.note("tolerance", run.config.tolerance);
    if paths > 0 {
        table.note("paths", paths);
        for (t, tv, bound) in &tv_notes {
            table.note(
                "tv_distance",
                format!("t={t:.16e} tv={tv:.16e} bound={bound:.16e}"),
            );
        }
    }
    let mut breach = Vec::new();
    if max_dev.is_nan() || max_dev > run.config.tolerance {
        breach.push(format!(
            "spectral vs expm deviation {max_dev:.3e} exceeds {:.3e}",
            run.config.tolerance
        ));
    }
    if worst_tv_ratio > 3.0 {
        breach.push(format!(
            "Monte Carlo total variation is {worst_tv_ratio:.2} standard errors from the expm law (limit 3)"
        ));
    }
    Ok((table, (!breach.is_empty()).then(|| breach.join("; "))))
}

pub fn potential(run: &Run) -> Result<Table, Failure> {
    let u = run.potential()?;
    // the potential table is read as a density; its leaf values are U
    let u = PiecewiseFunction::<f64>::zeros_like(&run.tree).with_values(u.densities().to_vec());
    let direct = build_potential_generator(&run.tree, &run.kernel, &u)?;
    let reduction = reduce_potential(&run.tree, &run.kernel, &u)?;
    let composite = build_generator(&reduction.weighted_measure, &run.kernel)?
        .with_diagonal(&reduction.reaction)?;
    let (mut scaled, mut absolute) = (0.0f64, 0.0f64);
    let n = direct.len();
    for x in 0..n {
        let row_scale = direct.matrix().row(x).amax().max(f64::MIN_POSITIVE);
        for y in 0..n {
            let d = (direct.matrix()[(x, y)] - composite.matrix()[(x, y)]).abs();
            absolute = absolute.max(d);
            scaled = scaled.max(d / row_scale);
        }
    }
    let mut table = Table::new("potential", &["leaf", "U", "reaction"]);
    table.note("identity_residual_row_scaled", scaled);
    table.note("identity_residual_absolute", absolute);
    for (i, leaf) in run.tree.leaves().enumerate() {
        table.rows.push(vec![
            leaf.path_string().into(),
            ultradiff::rational::format_rational(&u.values()[i]).into(),
            reduction.reaction.values()[i].into(),
        ]);
    }
    Ok(table)
}

pub fn generator(run: &Run) -> Result<Table, Failure> {
    let g = build_generator(&run.tree, &run.kernel)?;
    let paths: Vec<String> = run.tree.leaves().map(|l| l.path_string()).collect();
    let mut columns = vec!["leaf"];
    columns.extend(paths.iter().map(String::as_str));
    let mut table = Table::new("generator", &columns);
    for (x, path) in paths.iter().enumerate() {
        let mut row = vec![path.clone().into()];
        row.extend(g.matrix().row(x).iter().map(|&v| v.into()));
        table.rows.push(row);
    }
    Ok(table)
}
