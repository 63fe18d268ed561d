use std::path::{Path, PathBuf};

use revlab::analyze::{
    asymptotic_variance_extended, compare_reversiblizations, default_kinds, expected_hitting, laplace_hitting,
    spectral_report, AnalysisReport, CompareQuery, Comparison, HittingQuery,
};
use revlab::chain::is_reversible;
use revlab::divergence::{dbar_divergence, f_divergence, f_divergence_strict, renyi_from_alpha_divergence, DivergenceSpec};
use revlab::extended;
use revlab::project::{Direction, ProjectionProblem};
use revlab::reversiblize::ReversiblizationKind;
use revlab::verify::{fingerprint, run_suite, CheckResult, SuiteReport};
use revlab::{Distribution, Generator};
use serde::Serialize;

use crate::files::{
    csv_number, csv_opt, load_chain, parse_list, parse_states, resolve_pi, to_json, write_text, ChainFile, LoadedChain,
};
use crate::report::ReportFile;
use crate::{Cli, CliError, Command, DirectionArg, Format, Outcome};

pub fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    if !(cli.tol > 0.0) || !cli.tol.is_finite() {
        return Err(CliError::Parse(format!("--tol must be positive, got {}", cli.tol)));
    }
    match &cli.command {
        Command::Reversiblize { input, method, pi, out } => reversiblize(cli, input, method, pi.as_deref(), out.as_deref()),
        Command::Divergence { a, b, f, variant, pi } => divergence(cli, a, b, f, variant, pi.as_deref()),
        Command::Project {
            inputs,
            f,
            direction,
            lambda,
            pi,
            out,
        } => project(cli, inputs, f, *direction, *lambda, pi.as_deref(), out.as_deref()),
        Command::Analyze {
            input,
            pi,
            target,
            lambda,
            h,
        } => analyze(cli, input, pi.as_deref(), target.as_deref(), *lambda, h.as_deref()),
        Command::Compare {
            input,
            pi,
            kinds,
            target,
            lambda,
            h,
            out,
        } => compare(
            cli,
            input,
            pi.as_deref(),
            kinds,
            target.as_deref(),
            lambda.as_deref(),
            h.as_deref(),
            out.as_deref(),
        ),
        Command::Verify { trials, sizes } => verify(cli, *trials, sizes),
    }
}

fn load(path: &Path) -> Result<LoadedChain, CliError> {
    let chain = load_chain(path)?;
    for w in &chain.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(chain)
}

fn fp(g: &Generator, pi: &Distribution) -> String {
    fingerprint(&[g], pi, "")
}

/// Carries state labels from the source chain over to a derived one.
fn relabel(m: Generator, src: &Generator) -> Result<Generator, CliError> {
    match src.state_space().labels() {
        Some(ls) => Ok(m.with_labels(ls.to_vec())?),
        None => Ok(m),
    }
}

/// Detailed balance of M as an inequality check: max violation ≤ tol·scale.
fn certificate(m: &Generator, pi: &Distribution, tol: f64) -> Result<CheckResult, CliError> {
    let c = is_reversible(m, pi, tol)?;
    let bound = tol * c.scale.max(f64::MIN_POSITIVE);
    Ok(CheckResult {
        check_name: "detailed_balance".into(),
        passed: c.reversible,
        lhs: c.max_violation,
        rhs: bound,
        residual: (c.max_violation - bound).max(0.0),
        tolerance: tol,
        context: fp(m, pi),
    })
}

/// Writes the report to `--report` when given, else returns it for stdout.
fn deliver<T: Serialize>(cli: &Cli, report: &ReportFile<T>, csv: Option<String>) -> Result<String, CliError> {
    let text = match (cli.format, csv) {
        (Format::Csv, Some(c)) => c,
        _ => to_json(report)?,
    };
    match &cli.report {
        Some(path) => {
            write_text(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(e.to_string()))
}

fn matrix_csv(g: &Generator) -> Result<String, CliError> {
    let header: Vec<String> = std::iter::once("from".to_string())
        .chain((0..g.n()).map(|y| state_name(g, y)))
        .collect();
    let rows: Vec<Vec<String>> = (0..g.n())
        .map(|x| {
            std::iter::once(state_name(g, x))
                .chain((0..g.n()).map(|y| csv_number(g.rate(x, y))))
                .collect()
        })
        .collect();
    csv_text(&header, &rows)
}

fn state_name(g: &Generator, x: usize) -> String {
    g.state_space()
        .labels()
        .map(|ls| ls[x].clone())
        .unwrap_or_else(|| x.to_string())
}

/// Writes a chain file after checking that it loads back.
fn emit_chain(file: &ChainFile, out: Option<&Path>) -> Result<(), CliError> {
    file.clone().into_chain()?;
    if let Some(path) = out {
        write_text(path, &to_json(file)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReversiblizeResult {
    method: String,
    chain: ChainFile,
}

fn reversiblize(
    cli: &Cli,
    input: &Path,
    method: &str,
    pi_flag: Option<&str>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let chain = load(input)?;
    let pi = resolve_pi(pi_flag, &chain)?;
    let kind: ReversiblizationKind = method.parse()?;
    let m = relabel(kind.apply(&chain.generator, &pi)?, &chain.generator)?;
    let cert = certificate(&m, &pi, cli.tol)?;
    let file = ChainFile::from_generator(&m, Some(&pi));
    emit_chain(&file, out)?;
    let passed = cert.passed;
    let report = ReportFile::new(
        "reversiblize",
        ReversiblizeResult {
            method: kind.to_string(),
            chain: file,
        },
    )
    .input("input", fp(&chain.generator, &pi))
    .input("method", kind.to_string())
    .check(cert);
    let stdout = deliver(cli, &report, Some(matrix_csv(&m)?))?;
    Ok(Outcome {
        stdout,
        code: if passed { 0 } else { 3 },
    })
}

#[derive(Serialize)]
struct DivergenceResult {
    spec: String,
    variant: String,
    #[serde(with = "extended")]
    value: f64,
}

fn divergence(
    cli: &Cli,
    a: &Path,
    b: &Path,
    f: &str,
    variant: &str,
    pi_flag: Option<&str>,
) -> Result<Outcome, CliError> {
    let ca = load(a)?;
    let cb = load(b)?;
    let pi = resolve_pi(pi_flag, &ca)?;
    let strict_div = |x: &Generator, y: &Generator, spec: &DivergenceSpec| {
        if cli.strict {
            f_divergence_strict(x, y, &pi, spec)
        } else {
            f_divergence(x, y, &pi, spec)
        }
    };
    let (ga, gb) = (&ca.generator, &cb.generator);
    let (spec_name, value) = if let Some(alpha) = variant.strip_prefix("renyi:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| CliError::Parse(format!("bad Rényi order {alpha:?}")))?;
        let spec = DivergenceSpec::alpha(alpha)?;
        let d = strict_div(ga, gb, &spec)?;
        (spec.name(), renyi_from_alpha_divergence(d, alpha)?)
    } else {
        let spec: DivergenceSpec = f.parse()?;
        let v = match variant {
            "plain" => strict_div(ga, gb, &spec)?,
            "dbar" => {
                let mid = ga.midpoint(gb)?;
                if cli.strict {
                    f_divergence_strict(ga, &mid, &pi, &spec)?
                } else {
                    dbar_divergence(ga, gb, &pi, &spec)?
                }
            }
            other => return Err(CliError::Parse(format!("unknown variant {other:?}"))),
        };
        (spec.name(), v)
    };
    let report = ReportFile::new(
        "divergence",
        DivergenceResult {
            spec: spec_name.clone(),
            variant: variant.to_string(),
            value,
        },
    )
    .input("a", fp(ga, &pi))
    .input("b", fp(gb, &pi));
    let csv = csv_text(
        &["spec".into(), "variant".into(), "value".into()],
        &[vec![spec_name, variant.to_string(), csv_number(value)]],
    )?;
    if let Some(path) = &cli.report {
        let text = match cli.format {
            Format::Csv => csv,
            Format::Json => to_json(&report)?,
        };
        write_text(path, &text)?;
    }
    let shown = if value.is_finite() { format!("{value}") } else { csv_number(value) };
    Ok(Outcome {
        stdout: format!("{shown}\n"),
        code: 0,
    })
}

#[derive(Serialize)]
struct ProjectResult {
    spec: String,
    direction: String,
    lambda: f64,
    method: String,
    #[serde(with = "extended")]
    objective: f64,
    iterations: usize,
    #[serde(with = "extended")]
    residual: f64,
    converged: bool,
    chain: ChainFile,
}

fn project(
    cli: &Cli,
    inputs: &[PathBuf],
    f: &str,
    direction: DirectionArg,
    lambda: f64,
    pi_flag: Option<&str>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let chains = inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let pi = resolve_pi(pi_flag, &chains[0])?;
    let spec: DivergenceSpec = f.parse()?;
    let dir = match direction {
        DirectionArg::First => Direction::MIsFirstArg,
        DirectionArg::Second => Direction::MIsSecondArg,
    };
    let gens: Vec<Generator> = chains.iter().map(|c| c.generator.clone()).collect();
    let problem = ProjectionProblem::new(dir, spec, gens, pi.clone(), lambda)?;
    let r = problem.solve()?;
    let m = relabel(r.minimizer.clone(), &chains[0].generator)?;
    let cert = certificate(&m, &pi, cli.tol)?;
    let file = ChainFile::from_generator(&m, Some(&pi));
    emit_chain(&file, out)?;
    let passed = cert.passed;
    let mut report = ReportFile::new(
        "project",
        ProjectResult {
            spec: spec.name(),
            direction: match direction {
                DirectionArg::First => "first".into(),
                DirectionArg::Second => "second".into(),
            },
            lambda,
            method: r.method.as_str().to_string(),
            objective: r.objective,
            iterations: r.iterations,
            residual: r.residual,
            converged: r.converged,
            chain: file,
        },
    )
    .check(cert);
    for (i, c) in chains.iter().enumerate() {
        report = report.input(&format!("input{i}"), fp(&c.generator, &pi));
    }
    let stdout = deliver(cli, &report, Some(matrix_csv(&m)?))?;
    Ok(Outcome {
        stdout,
        code: if passed { 0 } else { 3 },
    })
}

#[derive(Serialize)]
struct AnalyzeResult {
    #[serde(flatten)]
    spectral: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<Vec<usize>>,
    #[serde(with = "extended::option", skip_serializing_if = "Option::is_none")]
    hitting: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    laplace_rate: Option<f64>,
    #[serde(with = "extended::option", skip_serializing_if = "Option::is_none")]
    laplace: Option<f64>,
    #[serde(with = "extended::option", skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
}

fn parse_observable(s: &str) -> Result<Vec<f64>, CliError> {
    parse_list(s).ok_or_else(|| CliError::Parse(format!("bad observable {s:?}")))
}

fn analyze(
    cli: &Cli,
    input: &Path,
    pi_flag: Option<&str>,
    target: Option<&str>,
    lambda: Option<f64>,
    h: Option<&str>,
) -> Result<Outcome, CliError> {
    let chain = load(input)?;
    let pi = resolve_pi(pi_flag, &chain)?;
    let g = &chain.generator;
    let spectral = spectral_report(g, &pi)?;
    let target = target.map(|t| parse_states(t, g)).transpose()?;
    let hitting = match &target {
        Some(a) => Some(expected_hitting(g, &pi, &HittingQuery::new(a.iter().copied(), g.n(), 0.0)?)?),
        None => None,
    };
    let laplace = match (lambda, &target) {
        (Some(rate), Some(a)) => Some(laplace_hitting(g, &pi, &HittingQuery::new(a.iter().copied(), g.n(), rate)?)?),
        (Some(_), None) => return Err(CliError::Parse("--lambda needs --target".into())),
        _ => None,
    };
    let sigma2 = match h {
        Some(s) => Some(asymptotic_variance_extended(g, &pi, &parse_observable(s)?)?),
        None => None,
    };
    let result = AnalyzeResult {
        spectral,
        target,
        hitting,
        laplace_rate: lambda,
        laplace,
        sigma2,
    };
    let mut rows = vec![
        vec!["lambda2".to_string(), csv_number(result.spectral.lambda2)],
        vec!["t_rel".to_string(), csv_number(result.spectral.t_rel)],
        vec!["t_av".to_string(), csv_number(result.spectral.t_av)],
        vec!["irreducible".to_string(), result.spectral.irreducible.to_string()],
    ];
    for (i, v) in result.spectral.spectrum.iter().enumerate() {
        rows.push(vec![format!("eigenvalue[{i}]"), csv_number(*v)]);
    }
    for (name, v) in [("hitting", hitting), ("laplace", laplace), ("sigma2", sigma2)] {
        if let Some(v) = v {
            rows.push(vec![name.to_string(), csv_number(v)]);
        }
    }
    let csv = csv_text(&["quantity".into(), "value".into()], &rows)?;
    let report = ReportFile::new("analyze", result).input("input", fp(g, &pi));
    let stdout = deliver(cli, &report, Some(csv))?;
    Ok(Outcome { stdout, code: 0 })
}

fn comparison_csv(c: &Comparison, query: &CompareQuery) -> Result<String, CliError> {
    let mut header: Vec<String> = [
        "kind", "min_rate", "mean_rate", "max_rate", "lambda2", "t_rel", "t_av", "irreducible", "hitting",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(query.laplace_rates.iter().map(|r| format!("laplace[{}]", csv_number(*r))));
    header.extend(
        ["sigma2", "error", "ordering_violations", "check_holds", "check_violation"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut rows = Vec::new();
    for r in &c.rows {
        let violations = c
            .orderings
            .iter()
            .filter(|o| !o.holds && o.chain.contains(&r.kind))
            .count();
        let mut row = vec![
            r.kind.clone(),
            csv_opt(r.min_rate),
            csv_opt(r.mean_rate),
            csv_opt(r.max_rate),
            csv_opt(r.lambda2),
            csv_opt(r.t_rel),
            csv_opt(r.t_av),
            r.irreducible.map(|b| b.to_string()).unwrap_or_default(),
            csv_opt(r.hitting),
        ];
        for i in 0..query.laplace_rates.len() {
            row.push(csv_opt(r.laplace.get(i).copied()));
        }
        row.push(csv_opt(r.sigma2));
        row.push(r.error.clone().unwrap_or_default());
        row.push(violations.to_string());
        row.push(String::new());
        row.push(String::new());
        rows.push(row);
    }
    for o in &c.orderings {
        let mut row = vec![format!("ordering:{}:{}", o.chain.join("<="), o.functional)];
        row.resize(header.len() - 2, String::new());
        row.push(o.holds.to_string());
        row.push(csv_number(o.worst_violation));
        rows.push(row);
    }
    csv_text(&header, &rows)
}

#[allow(clippy::too_many_arguments)]
fn compare(
    cli: &Cli,
    input: &Path,
    pi_flag: Option<&str>,
    kinds: &[String],
    target: Option<&str>,
    lambda: Option<&str>,
    h: Option<&str>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let chain = load(input)?;
    let pi = resolve_pi(pi_flag, &chain)?;
    let g = &chain.generator;
    let kinds: Vec<ReversiblizationKind> = if kinds.is_empty() {
        default_kinds()
    } else {
        kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>()?
    };
    let query = CompareQuery {
        target: target.map(|t| parse_states(t, g)).transpose()?,
        laplace_rates: match lambda {
            Some(s) => parse_list(s).ok_or_else(|| CliError::Parse(format!("bad rates {s:?}")))?,
            None => Vec::new(),
        },
        observable: h.map(parse_observable).transpose()?,
    };
    let cmp = compare_reversiblizations(g, &pi, &kinds, &query)?;
    let csv = comparison_csv(&cmp, &query)?;
    if let Some(path) = out {
        write_text(path, &csv)?;
    }
    let report = ReportFile::new("compare", cmp).input("input", fp(g, &pi));
    let stdout = deliver(cli, &report, Some(csv))?;
    Ok(Outcome { stdout, code: 0 })
}

/// "a..b" (inclusive), "a..=b", or a comma list.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Parse(format!("bad sizes {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn verify(cli: &Cli, trials: u64, sizes: &str) -> Result<Outcome, CliError> {
    let sizes = parse_sizes(sizes)?;
    let suite: SuiteReport = run_suite(cli.seed, trials, &sizes)?;
    let passed = suite.passed;
    let rows: Vec<Vec<String>> = suite
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.check_name.clone(),
                s.runs.to_string(),
                s.failures.to_string(),
                csv_number(s.max_residual),
                csv_number(s.max_relative_residual),
            ]
        })
        .collect();
    let csv = csv_text(
        &["check".into(), "runs".into(), "failures".into(), "max_residual".into(), "max_relative_residual".into()],
        &rows,
    )?;
    let report = ReportFile::new("verify", suite)
        .input("seed", cli.seed.to_string())
        .input("trials", trials.to_string())
        .input("sizes", format!("{sizes:?}"));
    let stdout = deliver(cli, &report, Some(csv))?;
    Ok(Outcome {
        stdout,
        code: if passed { 0 } else { 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_grammar() {
        assert_eq!(parse_sizes("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_sizes("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_sizes("2,5").unwrap(), vec![2, 5]);
        assert!(parse_sizes("4..2").is_err());
        assert!(parse_sizes("x").is_err());
    }
}
