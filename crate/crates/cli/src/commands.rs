use std::fs;
use std::path::{Path, PathBuf};

use qqfit::{
    calibrate_null, correlation_statistic, fit, lilliefors_statistic, mc_p_value,
    normal_approx_p_value, plotting_positions, power_study, render_histogram_svg, render_qq_svg,
    render_table, shapiro_wilk_statistic, Family, GofResult, PMethod, PlotOverrides,
    PositionMethod, Sample, TableFormat, TableRow, TestKind, Transform,
};

use crate::ingest::{parse_csv, Dataset, IngestOptions};
use crate::{effective_reps, CalibrateArgs, CliError, PMethodArg, PlotArgs, PowerArgs, TestArgs};

const MIN_REPS: u64 = 10_000;

fn read_input(
    path: &str,
    decimal_comma: bool,
    columns: &[String],
) -> Result<Vec<Dataset>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read '{path}': {e}")))?;
    parse_csv(
        &text,
        path,
        &IngestOptions {
            decimal_comma,
            columns: columns.to_vec(),
        },
    )
}

fn ensure_out_dir(dir: &str) -> Result<PathBuf, CliError> {
    let path = PathBuf::from(dir);
    fs::create_dir_all(&path)
        .map_err(|e| CliError::data(format!("cannot create output directory '{dir}': {e}")))?;
    Ok(path)
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::data(format!("cannot write '{}': {e}", path.display())))
}

fn file_stem(dataset: &str) -> String {
    dataset
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    if let Some(statistic) = args.statistic {
        return published_statistic_mode(&args, statistic);
    }
    let input = args.input.as_deref().expect("clap enforces input");
    let datasets = read_input(input, args.decimal_comma, &args.column)?;
    let reps = effective_reps(args.reps, args.full_scale);
    if reps < MIN_REPS {
        return Err(CliError::data(format!(
            "--reps {reps} is below the floor of {MIN_REPS}"
        )));
    }

    let mut rows: Vec<TableRow> = Vec::new();
    let mut svgs: Vec<(String, String)> = Vec::new();
    let mut estimate_lines: Vec<String> = Vec::new();

    for ds in &datasets {
        let label = &ds.name;
        let sample = Sample::new(ds.values.clone(), args.transform)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let n = sample.n();

        if !position_method_calibrated(args.positions, n) {
            eprintln!(
                "warning: dataset '{label}': positions '{}' are outside their calibrated range \
                 for n = {n}; values are extrapolated",
                args.positions.name()
            );
        }
        let positions = plotting_positions(Family::Normal, n, args.positions)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let fitted = fit(&sample, &positions)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;

        let t = correlation_statistic(&sample)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let correlation = match args.p_method {
            PMethodArg::Approx => GofResult {
                test: TestKind::CorrelationT,
                statistic: t,
                p_value: normal_approx_p_value(t, n)
                    .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?,
                p_method: PMethod::NormalApprox,
                n,
            },
            PMethodArg::Mc => GofResult {
                test: TestKind::CorrelationT,
                statistic: t,
                p_value: mc_p_value(TestKind::CorrelationT, t, n, reps, args.seed)?,
                p_method: PMethod::MonteCarlo,
                n,
            },
        };

        let d = lilliefors_statistic(&sample)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let lilliefors = GofResult {
            test: TestKind::Lilliefors,
            statistic: d,
            p_value: mc_p_value(TestKind::Lilliefors, d, n, reps, args.seed)?,
            p_method: PMethod::MonteCarlo,
            n,
        };

        let w = shapiro_wilk_statistic(&sample)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let shapiro = GofResult {
            test: TestKind::ShapiroWilk,
            statistic: w,
            p_value: mc_p_value(TestKind::ShapiroWilk, w, n, reps, args.seed)?,
            p_method: PMethod::MonteCarlo,
            n,
        };

        let overrides = PlotOverrides {
            title: Some(format!("Q-Q plot: {label}")),
            y_label: Some(match args.transform {
                Transform::Log => "ordered log observations".to_string(),
                Transform::Identity => "ordered observations".to_string(),
            }),
            annotations: vec![
                format!("T = {:.4}, p = {:.2}%", t, 100.0 * correlation.p_value),
                format!(
                    "d = {:.4} ({:.2}%), W = {:.4} ({:.2}%)",
                    d,
                    100.0 * lilliefors.p_value,
                    w,
                    100.0 * shapiro.p_value
                ),
            ],
            ..Default::default()
        };
        svgs.push((
            format!("{}-qq.svg", file_stem(label)),
            render_qq_svg(&fitted, &overrides),
        ));

        // location/scale of the (transformed) data, plus the Solvency II
        // quantile read off the line
        let var = fitted
            .var_estimate(0.005, args.transform == Transform::Log)
            .map_err(|e| CliError::data(format!("dataset '{label}': {e}")))?;
        let mut line = format!(
            "{label}: mu_hat = {:.6}, sigma_hat = {:.6}, VaR[0.5%] = {:.6}",
            fitted.mu_hat, fitted.sigma_hat, var.value
        );
        if var.upward_biased {
            line.push_str(" (exponentiated estimate, biased upward)");
        }
        estimate_lines.push(line);

        rows.push(TableRow {
            dataset: label.clone(),
            n,
            tests: vec![correlation, lilliefors, shapiro],
        });
    }

    // decisions at the requested levels
    let text = render_table(&rows, TableFormat::Text)?;
    print!("{text}");
    println!();
    for line in &estimate_lines {
        println!("{line}");
    }
    println!();
    for row in &rows {
        for alpha in &args.alphas.0 {
            let rejected: Vec<&str> = row
                .tests
                .iter()
                .filter(|t| t.reject_at(*alpha))
                .map(|t| t.test.name())
                .collect();
            println!(
                "{} at alpha = {}: {}",
                row.dataset,
                alpha,
                if rejected.is_empty() {
                    "no rejection".to_string()
                } else {
                    format!("rejected by {}", rejected.join(", "))
                }
            );
        }
    }

    if let Some(out) = &args.out {
        let dir = ensure_out_dir(out)?;
        if args.format.text {
            write_artifact(&dir, "results.txt", &text)?;
        }
        if args.format.csv {
            write_artifact(&dir, "results.csv", &render_table(&rows, TableFormat::Csv)?)?;
        }
        if args.format.json {
            write_artifact(
                &dir,
                "results.json",
                &render_table(&rows, TableFormat::Json)?,
            )?;
        }
        if args.format.svg {
            for (name, svg) in &svgs {
                write_artifact(&dir, name, svg)?;
            }
        }
    }
    Ok(())
}

fn position_method_calibrated(method: PositionMethod, n: usize) -> bool {
    match method {
        PositionMethod::FittedAB => qqfit::order_stats::fitted_ab_in_calibrated_range(n, false),
        PositionMethod::CompactAB => qqfit::order_stats::fitted_ab_in_calibrated_range(n, true),
        _ => true,
    }
}

fn published_statistic_mode(args: &TestArgs, statistic: f64) -> Result<(), CliError> {
    let n = args.sample_size.ok_or_else(|| {
        CliError::data("--statistic needs --sample-size (clap should have enforced this)")
    })?;
    let p_value = match args.p_method {
        PMethodArg::Approx => normal_approx_p_value(statistic, n)?,
        PMethodArg::Mc => {
            let reps = effective_reps(args.reps, args.full_scale);
            mc_p_value(TestKind::CorrelationT, statistic, n, reps, args.seed)?
        }
    };
    let result = GofResult {
        test: TestKind::CorrelationT,
        statistic,
        p_value,
        p_method: match args.p_method {
            PMethodArg::Approx => PMethod::NormalApprox,
            PMethodArg::Mc => PMethod::MonteCarlo,
        },
        n,
    };
    let rows = [TableRow {
        dataset: "published".to_string(),
        n,
        tests: vec![result.clone()],
    }];
    print!("{}", render_table(&rows, TableFormat::Text)?);
    for alpha in &args.alphas.0 {
        println!(
            "at alpha = {alpha}: {}",
            if result.reject_at(*alpha) {
                "reject"
            } else {
                "accept"
            }
        );
    }
    if let Some(out) = &args.out {
        let dir = ensure_out_dir(out)?;
        if args.format.json {
            write_artifact(
                &dir,
                "results.json",
                &render_table(&rows, TableFormat::Json)?,
            )?;
        }
        if args.format.csv {
            write_artifact(&dir, "results.csv", &render_table(&rows, TableFormat::Csv)?)?;
        }
        if args.format.text {
            write_artifact(
                &dir,
                "results.txt",
                &render_table(&rows, TableFormat::Text)?,
            )?;
        }
    }
    Ok(())
}

pub fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let reps = effective_reps(args.reps, args.full_scale);
    if reps < MIN_REPS {
        return Err(CliError::data(format!(
            "--reps {reps} is below the floor of {MIN_REPS}"
        )));
    }
    let dir = ensure_out_dir(&args.out)?;

    let mut csv = String::from("n,reps,seed,mu,sigma,q01,q05,q10\n");
    for &n in &args.n_range.0 {
        let table = calibrate_null(n, reps, args.seed)?;
        let (q01, q05, q10) = (
            table.quantile(0.01).unwrap(),
            table.quantile(0.05).unwrap(),
            table.quantile(0.10).unwrap(),
        );
        println!(
            "n = {n}: mu = {:.4}, sigma = {:.4}, 5% critical value = {:.4}",
            table.mu, table.sigma, q05
        );
        csv.push_str(&format!(
            "{n},{reps},{},{},{},{q01},{q05},{q10}\n",
            args.seed, table.mu, table.sigma
        ));
        let json = serde_json::to_string_pretty(&table)
            .map_err(|e| CliError::internal(format!("serialize calibration table: {e}")))?;
        write_artifact(&dir, &format!("calibration-n{n}.json"), &(json + "\n"))?;
        write_artifact(
            &dir,
            &format!("calibration-n{n}.svg"),
            &render_histogram_svg(&table),
        )?;
    }
    write_artifact(&dir, "calibration.csv", &csv)?;
    Ok(())
}

pub fn cmd_power(args: PowerArgs) -> Result<(), CliError> {
    let reps = effective_reps(args.reps, args.full_scale);
    let rows = power_study(
        args.test,
        args.alternative,
        args.n,
        &args.alphas.0,
        reps,
        args.seed,
    )?;

    let mut csv = String::from("test,alternative,n,alpha,critical_value,beta,reps,seed\n");
    for row in &rows {
        println!(
            "{} vs {} (n = {}): alpha = {}, critical value = {:.4}, beta = {:.2}%",
            row.test.name(),
            row.alternative.name(),
            row.n,
            row.alpha,
            row.critical_value,
            100.0 * row.beta
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.test.name(),
            row.alternative.name(),
            row.n,
            row.alpha,
            row.critical_value,
            row.beta,
            row.reps,
            row.seed
        ));
    }
    if let Some(out) = &args.out {
        let dir = ensure_out_dir(out)?;
        let stem = format!(
            "power-{}-{}-n{}",
            args.test.name(),
            args.alternative.name(),
            args.n
        );
        write_artifact(&dir, &format!("{stem}.csv"), &csv)?;
        let json = serde_json::to_string_pretty(&rows)
            .map_err(|e| CliError::internal(format!("serialize power rows: {e}")))?;
        write_artifact(&dir, &format!("{stem}.json"), &(json + "\n"))?;
    }
    Ok(())
}

pub fn cmd_plot(args: PlotArgs) -> Result<(), CliError> {
    let datasets = read_input(&args.input, args.decimal_comma, &args.column)?;
    let dir = ensure_out_dir(&args.out)?;
    for ds in &datasets {
        let sample = Sample::new(ds.values.clone(), args.transform)
            .map_err(|e| CliError::data(format!("dataset '{}': {e}", ds.name)))?;
        let positions = plotting_positions(Family::Normal, sample.n(), args.positions)
            .map_err(|e| CliError::data(format!("dataset '{}': {e}", ds.name)))?;
        let fitted = fit(&sample, &positions)
            .map_err(|e| CliError::data(format!("dataset '{}': {e}", ds.name)))?;
        let overrides = PlotOverrides {
            title: Some(format!("Q-Q plot: {}", ds.name)),
            annotations: vec![format!("positions = {}", args.positions.name())],
            ..Default::default()
        };
        let name = format!("{}-qq.svg", file_stem(&ds.name));
        write_artifact(&dir, &name, &render_qq_svg(&fitted, &overrides))?;
        println!("wrote {}", dir.join(&name).display());
    }
    Ok(())
}
