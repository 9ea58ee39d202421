use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use harvest_sched::baselines::{comparison_csv, ComparisonRow, OnOffLevel};
use harvest_sched::battery::{is_feasible, Feasibility, FEASIBILITY_TOL};
use harvest_sched::experiments::{
    compare_batch, completion_curve, is_strictly_monotone, linspace, sweep_csv, throughput_curve,
    CurvePoint,
};
use harvest_sched::generate::{generate_random, GenParams};
use harvest_sched::io::{
    export_tunnel, fmt_num, read_policy, read_scenario, scenario_to_json, tunnel_csv, write_atomic,
};
use harvest_sched::oracle::{brute_force_max_throughput, Verdict};
use harvest_sched::strategy::OnOff;
use harvest_sched::{
    rate_by_name, solve_min_time, Error, HarvestScenario, PowerPolicy, RateFunction, Result,
    SchedulerRegistry,
};

use crate::{
    Command, Common, CompareArgs, GenerateArgs, LevelKind, MintimeArgs, OnOffArgs, OracleArgs,
    SolveArgs, Source, SweepArgs, TunnelArgs,
};

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnreachableBitTarget { .. } => 3,
        Error::AlgorithmInvariantViolated(_) => 4,
        _ => 2,
    }
}

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Mintime(args) => mintime(args),
        Command::Compare(args) => compare(args),
        Command::Sweep(args) => sweep(args),
        Command::Tunnel(args) => tunnel(args),
        Command::Generate(args) => generate(args),
        Command::Oracle(args) => oracle(args),
    }
}

/// A loaded scenario and, when generated, the parameters behind it.
struct Loaded {
    scenario: HarvestScenario,
    params: Option<GenParams>,
}

fn load(source: &Source, seed: u64) -> Result<Loaded> {
    match (&source.scenario, &source.gen) {
        (Some(path), _) => Ok(Loaded {
            scenario: read_scenario(path)?,
            params: None,
        }),
        (None, Some(spec)) => {
            let params = GenParams::parse_spec(spec, seed)?;
            Ok(Loaded {
                scenario: generate_random(&params)?,
                params: Some(params),
            })
        }
        (None, None) => Err(Error::InvalidScenario(
            "one of --scenario or --gen is required".into(),
        )),
    }
}

fn load_common(common: &Common) -> Result<(Loaded, Arc<dyn RateFunction>)> {
    let rate = rate_by_name(&common.rate)?;
    Ok((load(&common.source, common.seed)?, rate))
}

fn on_off_level(args: &OnOffArgs, params: Option<&GenParams>) -> Result<OnOffLevel> {
    match (args.onoff_level, params) {
        (LevelKind::Realized, _) => Ok(OnOffLevel::Realized),
        (LevelKind::Expected, Some(p)) => Ok(OnOffLevel::Expected {
            mean_energy: 0.5 * p.peak(),
            mean_gap: p.mean_gap,
        }),
        (LevelKind::Expected, None) => Err(Error::InvalidPolicy(
            "--onoff-level expected needs --gen parameters".into(),
        )),
    }
}

fn registry(level: OnOffLevel) -> SchedulerRegistry {
    let mut registry = SchedulerRegistry::with_defaults();
    registry.register(Arc::new(OnOff { level }));
    registry
}

/// Writes `contents` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn write_policy(path: &Path, policy: &PowerPolicy) -> Result<()> {
    let text = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        policy.to_csv()
    } else {
        format!("{}\n", policy.to_json())
    };
    write_atomic(path, &text)
}

fn feasibility_line(scenario: &HarvestScenario, policy: &PowerPolicy, tol: f64) -> (bool, String) {
    match is_feasible(scenario, policy, tol) {
        Feasibility::Ok => (true, "feasible: yes".into()),
        Feasibility::Violated(v) => (
            false,
            format!(
                "feasible: no ({:?} of {} at t={})",
                v.kind,
                fmt_num(v.magnitude),
                fmt_num(v.t)
            ),
        ),
    }
}

fn print_segments(policy: &PowerPolicy) {
    println!("segments: {}", policy.segments.len());
    for (start, end, power) in policy.pieces() {
        println!(
            "  ({}, {}]  power {}",
            fmt_num(start),
            fmt_num(end),
            fmt_num(power)
        );
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let (loaded, rate) = load_common(&args.common)?;
    let deadline = match (args.deadline, &loaded.params) {
        (Some(t), _) => t,
        (None, Some(p)) => p.horizon,
        (None, None) => {
            return Err(Error::Parse {
                context: "--deadline".into(),
                message: "required unless the scenario comes from --gen".into(),
            })
        }
    };
    let level = on_off_level(&args.onoff, loaded.params.as_ref())?;
    let scheduler = registry(level).get(&args.policy)?;
    let policy = scheduler.schedule(&loaded.scenario, deadline)?;
    let scenario = loaded.scenario.normalize()?;

    println!("policy: {}", scheduler.name());
    println!("deadline: {}", fmt_num(deadline));
    println!("bits: {}", fmt_num(policy.throughput(rate.as_ref())));
    print_segments(&policy);
    let (feasible, line) =
        feasibility_line(&scenario, &policy, args.tol.unwrap_or(FEASIBILITY_TOL));
    println!("{line}");
    if let Some(out) = &args.out {
        write_policy(out, &policy)?;
    }
    if !feasible && scheduler.name() == "optimal" {
        return Err(Error::AlgorithmInvariantViolated(
            "optimal schedule failed the feasibility check".into(),
        ));
    }
    Ok(ExitCode::SUCCESS)
}

fn mintime(args: MintimeArgs) -> Result<ExitCode> {
    let (loaded, rate) = load_common(&args.common)?;
    let solution = match solve_min_time(&loaded.scenario, args.bits, rate.as_ref()) {
        Err(Error::UnreachableBitTarget { target, bound }) => {
            eprintln!(
                "bit target {} is unreachable: reachability bound {} bits",
                fmt_num(target),
                fmt_num(bound)
            );
            return Ok(ExitCode::from(3));
        }
        other => other?,
    };
    let scenario = loaded.scenario.normalize()?;

    println!("bits: {}", fmt_num(args.bits));
    println!("completion_time: {}", fmt_num(solution.completion_time));
    print_segments(&solution.policy);
    let (feasible, line) = feasibility_line(
        &scenario,
        &solution.policy,
        args.tol.unwrap_or(FEASIBILITY_TOL),
    );
    println!("{line}");
    if let Some(out) = &args.out {
        write_policy(out, &solution.policy)?;
    }
    if !feasible {
        return Err(Error::AlgorithmInvariantViolated(
            "completion-time schedule failed the feasibility check".into(),
        ));
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(args: CompareArgs) -> Result<ExitCode> {
    let rate = rate_by_name(&args.rate)?;
    let params = GenParams::parse_spec(&args.gen, args.seed)?;
    let level = on_off_level(&args.onoff, Some(&params))?;
    let rows = compare_batch(&params, args.count, rate.as_ref(), &registry(level))?;

    let mut violations = 0;
    for row in &rows {
        if !row.is_ordered(args.tol) {
            violations += 1;
            let index: u64 = row.id.parse().unwrap_or_default();
            eprintln!(
                "ordering violated: scenario {} (seed {}): onoff {} optimal {} unconstrained {}",
                row.id,
                params.split(index).seed,
                fmt_num(row.bits_onoff),
                fmt_num(row.bits_optimal),
                fmt_num(row.bits_unconstrained)
            );
        }
    }
    let mut table = rows.clone();
    if !rows.is_empty() {
        table.push(ComparisonRow::mean("mean", &rows));
    }
    emit(args.out.as_deref(), &comparison_csv(&table))?;
    if let Some(mean) = table.last().filter(|_| args.out.is_some()) {
        println!(
            "{} scenarios; mean bits optimal {} onoff {} unconstrained {}",
            rows.len(),
            fmt_num(mean.bits_optimal),
            fmt_num(mean.bits_onoff),
            fmt_num(mean.bits_unconstrained)
        );
    }
    if violations > 0 {
        return Err(Error::AlgorithmInvariantViolated(format!(
            "ordering violated on {violations} of {} scenarios",
            rows.len()
        )));
    }
    Ok(ExitCode::SUCCESS)
}

fn max_mismatch(
    scenario: &HarvestScenario,
    forward: &[CurvePoint],
    backward: &[CurvePoint],
    rate: &dyn RateFunction,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in forward.iter().filter(|p| p.bits > 0.0) {
        let t = solve_min_time(scenario, p.bits, rate)?.completion_time;
        worst = worst.max((t - p.deadline).abs() / p.deadline);
    }
    for p in backward.iter().filter(|p| p.deadline > 0.0) {
        let b = harvest_sched::solve_max_throughput(scenario, p.deadline)?.throughput(rate);
        worst = worst.max((b - p.bits).abs() / p.bits.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let (loaded, rate) = load_common(&args.common)?;
    let rate = rate.as_ref();
    if args.steps == 0 || !(args.from > 0.0 && args.to >= args.from) {
        return Err(Error::InvalidDeadline(args.from));
    }
    let scenario = loaded.scenario.normalize()?;
    let forward = throughput_curve(&scenario, &linspace(args.from, args.to, args.steps), rate)?;
    let b_from = args.bits_from.unwrap_or(forward[0].bits);
    let b_to = args.bits_to.unwrap_or(forward[forward.len() - 1].bits);
    let backward = completion_curve(&scenario, &linspace(b_from, b_to, args.steps), rate)?;

    emit(args.out.as_deref(), &sweep_csv(&forward, &backward))?;
    let worst = max_mismatch(&scenario, &forward, &backward, rate)?;
    eprintln!("max relative mismatch between curves: {worst:.3e}");
    if worst > args.tol {
        return Err(Error::AlgorithmInvariantViolated(format!(
            "curves differ by {worst:e}, tolerance {}",
            args.tol
        )));
    }
    if !is_strictly_monotone(&forward) || !is_strictly_monotone(&backward) {
        eprintln!("warning: a curve is not strictly increasing on this grid");
    }
    Ok(ExitCode::SUCCESS)
}

fn tunnel(args: TunnelArgs) -> Result<ExitCode> {
    let loaded = load(&args.source, args.seed)?;
    let scenario = loaded.scenario.normalize()?;
    let policy = match (&args.policy_file, args.deadline) {
        (Some(path), _) => Some(read_policy(path)?),
        (None, Some(deadline)) => {
            let scheduler = registry(OnOffLevel::Realized).get(&args.policy)?;
            Some(scheduler.schedule(&scenario, deadline)?)
        }
        (None, None) => None,
    };
    let policy = policy.filter(|p| !p.is_empty());
    let rows = export_tunnel(&scenario, policy.as_ref());
    emit(args.out.as_deref(), &tunnel_csv(&rows, policy.is_some()))?;
    Ok(ExitCode::SUCCESS)
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let params = GenParams::parse_spec(&args.gen, args.seed)?;
    let scenario = generate_random(&params)?;
    emit(args.out.as_deref(), &scenario_to_json(&scenario))?;
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<ExitCode> {
    let (loaded, rate) = load_common(&args.common)?;
    let report = brute_force_max_throughput(
        &loaded.scenario,
        args.deadline,
        rate.as_ref(),
        args.step,
        args.cap,
    )?;
    emit(args.out.as_deref(), &format!("{}\n", report.to_json()))?;
    eprintln!(
        "solver {} bits, grid best {} bits, gap {}, tolerance {}",
        fmt_num(report.solver_bits),
        fmt_num(report.best_bits),
        fmt_num(report.gap),
        fmt_num(report.tolerance)
    );
    if report.verdict == Verdict::Fail {
        return Err(Error::AlgorithmInvariantViolated(
            "grid search beat the solver by more than the grid tolerance".into(),
        ));
    }
    Ok(ExitCode::SUCCESS)
}
