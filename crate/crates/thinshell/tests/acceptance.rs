//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use thinshell::harness::{run_convergence_study, run_property_suite, StudyConfig, SuiteOptions, SuiteReport};

struct Outcome {
    ok: bool,
    detail: String,
}

fn suite(selectors: &[&str], budget: Option<Duration>) -> Outcome {
    let opts = SuiteOptions::default();
    let start = Instant::now();
    let mut merged = SuiteReport::default();
    for s in selectors {
        match run_property_suite(s, &opts) {
            Ok(r) => merged.checks.extend(r.checks),
            Err(e) => return Outcome { ok: false, detail: format!("{s}: {e}") },
        }
    }
    let took = start.elapsed();
    let failures: Vec<String> = merged.failures().iter().map(|c| format!("{}: {} = {:.3e}", c.group, c.name, c.value)).collect();
    let in_time = budget.map_or(true, |b| took <= b);
    let mut detail = format!("{} checks, {} failed, {:.1} s", merged.checks.len(), failures.len(), took.as_secs_f64());
    if let Some(b) = budget {
        detail.push_str(&format!(" (budget {} s)", b.as_secs()));
    }
    for f in failures.iter().take(5) {
        detail.push_str(&format!("\n       {f}"));
    }
    Outcome { ok: failures.is_empty() && in_time, detail }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn deterministic_sweep() -> Outcome {
    let cfg = StudyConfig::default();
    let start = Instant::now();
    let out = match run_convergence_study(&cfg, 4) {
        Ok(o) => o,
        Err(e) => return Outcome { ok: false, detail: e.to_string() },
    };
    let took = start.elapsed();
    let r = &out.report;
    let sup: Vec<f64> = r.entries.iter().map(|e| e.sup_l2.unwrap_or(f64::NAN)).collect();
    let rate = r.fits.sup_l2.rate().unwrap_or(f64::NAN);
    let ok = r.entries.len() == 4
        && sup.iter().all(|x| x.is_finite())
        && strictly_decreasing(&sup)
        && rate >= 0.5
        && r.checks.all_finite
        && took <= Duration::from_secs(300);
    Outcome {
        ok,
        detail: format!("sup_t L2 errors [{}], rate {rate:.3} (need >= 0.5), {:.1} s", fmt_list(&sup), took.as_secs_f64()),
    }
}

fn stochastic_sweep() -> Outcome {
    let cfg = StudyConfig { stochastic: true, paths: 8, ..StudyConfig::default() };
    let start = Instant::now();
    let out = match run_convergence_study(&cfg, 4) {
        Ok(o) => o,
        Err(e) => return Outcome { ok: false, detail: e.to_string() },
    };
    let took = start.elapsed();
    let r = &out.report;
    let ms: Vec<f64> = r.entries.iter().map(|e| e.int_l2.unwrap_or(f64::NAN)).collect();
    // fluctuation energy plus its time-integrated dissipation, divided by ε
    let per_eps: Vec<f64> = r.entries.iter().map(|e| e.fluct_total.unwrap_or(f64::NAN) / e.eps).collect();
    let c = per_eps[0];
    let bounded = per_eps.iter().all(|x| x.is_finite() && *x <= 2.0 * c);
    let ok = r.entries.iter().all(|e| e.ok_paths == 8)
        && strictly_decreasing(&ms)
        && bounded
        && r.checks.fluct_within_bound
        && took <= Duration::from_secs(900);
    Outcome {
        ok,
        detail: format!(
            "L2(Ω×[0,T]×S²) errors [{}]; fluctuation/ε [{}] (C = {c:.3e}); {:.1} s",
            fmt_list(&ms),
            fmt_list(&per_eps),
            took.as_secs_f64()
        ),
    }
}

fn determinism() -> Outcome {
    let cfg = StudyConfig { stochastic: true, paths: 3, seed: 17, eps_list: vec![0.3, 0.15, 0.075], ..StudyConfig::default() };
    let a = run_convergence_study(&cfg, 1).and_then(|o| o.report.to_json());
    let b = run_convergence_study(&cfg, 5).and_then(|o| o.report.to_json());
    match (a, b) {
        (Ok(a), Ok(b)) => Outcome { ok: a == b, detail: format!("report.json {} bytes, workers 1 vs 5", a.len()) },
        (Err(e), _) | (_, Err(e)) => Outcome { ok: false, detail: e.to_string() },
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 operator algebra", Box::new(|| suite(&["operators"], Some(Duration::from_secs(30))))),
        ("2 inequalities", Box::new(|| suite(&["inequalities"], Some(Duration::from_secs(60))))),
        ("3 exact identities", Box::new(|| suite(&["identities"], None))),
        ("4 dynamics", Box::new(|| suite(&["dynamics"], None))),
        ("5 stochastic ledger", Box::new(|| suite(&["stochastic"], None))),
        ("6 deterministic convergence", Box::new(deterministic_sweep)),
        ("7 stochastic convergence", Box::new(stochastic_sweep)),
        ("8 determinism", Box::new(determinism)),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let o = run();
        all &= o.ok;
        println!("{} criterion {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
