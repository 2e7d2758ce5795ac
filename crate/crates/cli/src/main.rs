//! Command-line workbench for scale, tidiness, contraction, flatness, and
//! residual computations over the fixture catalog.
//!
//! Exit codes: 0 success; 1 a verification invariant failed; 2 a fixture
//! expectation mismatched; 3 a parse error; 4 the step budget ran out.

mod scenario;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tdlc_core::catalog::{all_fixtures, fixture, verify_all, CheckResult, Suite};
use tdlc_core::cert::Grade;

#[derive(Parser)]
#[command(name = "tdlc", about = "workbench for scale and tidiness computations in t.d.l.c. groups", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Depth of the compact-open basis used for iterative computations.
    #[arg(long, default_value_t = 4)]
    resolution: u32,
    /// Step budget for enumerative searches.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Seed for all randomised sampling; fixed seed means fixed output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite against fixture expectations.
    Run {
        #[command(flatten)]
        common: Common,
        /// Fixture id; all fixtures when omitted.
        #[arg(long)]
        fixture: Option<String>,
        /// Check suite: tidy, contraction, flat, residual, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Path to a scenario file to analyse instead of a catalog fixture.
        #[arg(long, conflicts_with = "fixture")]
        scenario: Option<String>,
    },
    /// Check internal invariants (sampled, deterministic in the seed).
    Verify {
        #[command(flatten)]
        common: Common,
        /// Invariant suite; only 'all' is defined.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// List the fixture catalog.
    ListFixtures {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the scenario literal for a fixture.
    ExportFixture {
        #[arg(long)]
        fixture: String,
    },
}

#[derive(Serialize)]
struct JsonResult {
    name: String,
    passed: bool,
    value: String,
    grade: String,
    detail: String,
}

#[derive(Serialize)]
struct JsonReport {
    version: String,
    scenario: String,
    results: Vec<JsonResult>,
    summary: JsonSummary,
}

#[derive(Serialize)]
struct JsonSummary {
    checks: String,
    failed: String,
}

fn grade_text(g: &Option<Grade>) -> String {
    match g {
        None => "-".to_string(),
        Some(Grade::Exact) => "exact".to_string(),
        Some(Grade::Stabilized(k)) => format!("stabilized@{k}"),
        Some(Grade::Bounded(k)) => format!("bounded@{k}"),
    }
}

fn render(scenario_name: &str, results: &[CheckResult], format: Format) {
    let failed = results.iter().filter(|r| !r.passed).count();
    match format {
        Format::Text => {
            for r in results {
                let status = if r.passed { "ok  " } else { "FAIL" };
                println!("{status} {} [{}] value={} — {}", r.name, grade_text(&r.grade), r.value, r.detail);
            }
            println!("summary: {} checks, {} failed", results.len(), failed);
        }
        Format::Json => {
            let report = JsonReport {
                version: "1".to_string(),
                scenario: scenario_name.to_string(),
                results: results
                    .iter()
                    .map(|r| JsonResult {
                        name: r.name.clone(),
                        passed: r.passed,
                        value: r.value.clone(),
                        grade: grade_text(&r.grade),
                        detail: r.detail.clone(),
                    })
                    .collect(),
                summary: JsonSummary {
                    checks: results.len().to_string(),
                    failed: failed.to_string(),
                },
            };
            println!("{}", serde_json::to_string_pretty(&report).expect("serialisable report"));
        }
    }
}

/// Exit code for a finished run: budget exhaustion dominates plain
/// expectation mismatches.
fn run_exit(results: &[CheckResult]) -> ExitCode {
    let failed: Vec<&CheckResult> = results.iter().filter(|r| !r.passed).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else if failed.iter().any(|r| r.detail.contains("budget exhausted")) {
        ExitCode::from(4)
    } else {
        ExitCode::from(2)
    }
}

fn cmd_run(
    common: &Common,
    fixture_id: Option<&str>,
    suite: &str,
    scenario_path: Option<&str>,
) -> ExitCode {
    if let Some(path) = scenario_path {
        return run_scenario(common, path);
    }
    let suite = match Suite::parse(suite) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let fixtures = match fixture_id {
        Some(id) => match fixture(id) {
            Ok(f) => vec![f],
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        },
        None => all_fixtures(),
    };
    let mut results = Vec::new();
    for f in &fixtures {
        results.extend(f.run(suite, common.resolution, common.budget, common.seed));
    }
    let name = fixture_id.unwrap_or("catalog");
    render(name, &results, common.format);
    run_exit(&results)
}

/// Analyses the elements of a standalone scenario file: exact scale of each
/// element and of its inverse.
fn run_scenario(common: &Common, path: &str) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {path}: {e}");
            return ExitCode::from(3);
        }
    };
    let sc = match scenario::Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(3);
        }
    };
    let results = scenario_results(&sc, common.resolution);
    render(&sc.name, &results, common.format);
    run_exit(&results)
}

fn scenario_results(sc: &scenario::Scenario, resolution: u32) -> Vec<CheckResult> {
    use tdlc_core::family::Family;
    use tdlc_core::tidy::scale;

    fn go<F: Family>(
        name: &str,
        fam: &F,
        els: &[(String, F::Elt)],
        resolution: u32,
    ) -> Vec<CheckResult> {
        let mut out = Vec::new();
        for (ename, g) in els {
            let check = format!("{name}/scale({ename})");
            match scale(fam, g, resolution).and_then(|s| {
                let gi = fam.invert(g)?;
                let si = scale(fam, &gi, resolution)?;
                Ok((s, si))
            }) {
                Ok((s, si)) => out.push(CheckResult::computed(
                    check,
                    format!("s={}, s(inverse)={}", s.value, si.value),
                    "minimisation, asymptotics, and the tidy displacement agree",
                    s.certificate.grade,
                )),
                Err(e) => out.push(CheckResult::failure(check, "-", e.to_string())),
            }
        }
        out
    }

    match &sc.body {
        scenario::Body::Padic(m, els) => go(&sc.name, m, els, resolution),
        scenario::Body::Shift(m, els) => go(&sc.name, m, els, resolution),
        scenario::Body::Level(m, _, els) => go(&sc.name, m, els, resolution),
        scenario::Body::Tree(m, els) => go(&sc.name, m, els, resolution),
    }
}

fn cmd_verify(common: &Common, suite: &str) -> ExitCode {
    if suite != "all" {
        eprintln!("error: unknown verify suite '{suite}' (only 'all' is defined)");
        return ExitCode::from(3);
    }
    let results = verify_all(common.resolution, common.seed);
    render("verify-all", &results, common.format);
    match results.iter().find(|r| !r.passed) {
        None => ExitCode::SUCCESS,
        Some(first) => {
            eprintln!("first failing invariant: {} — {}", first.name, first.detail);
            ExitCode::from(1)
        }
    }
}

fn cmd_list(format: Format) -> ExitCode {
    match format {
        Format::Text => {
            for f in all_fixtures() {
                println!("{:24} {}", f.id(), f.summary());
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                id: String,
                summary: String,
                elements: Vec<String>,
            }
            let rows: Vec<Row> = all_fixtures()
                .iter()
                .map(|f| Row {
                    id: f.id().to_string(),
                    summary: f.summary().to_string(),
                    elements: f.element_names().iter().map(|s| s.to_string()).collect(),
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows).expect("serialisable rows"));
        }
    }
    ExitCode::SUCCESS
}

fn cmd_export(id: &str) -> ExitCode {
    match fixture(id) {
        Ok(f) => {
            print!("{}", scenario::Scenario::from_fixture(&f).to_text());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { common, fixture, suite, scenario } => {
            cmd_run(&common, fixture.as_deref(), &suite, scenario.as_deref())
        }
        Command::Verify { common, suite } => cmd_verify(&common, &suite),
        Command::ListFixtures { format } => cmd_list(format),
        Command::ExportFixture { fixture } => cmd_export(&fixture),
    }
}
