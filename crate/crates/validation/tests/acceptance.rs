//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1-4 are formula-level checks. Criteria 5-11 run both factorial
//! designs end to end (4032 simulations of 100 s each) and inspect the
//! results and their allocation of variation.

use std::process::ExitCode;
use std::time::Instant;

use afsim_core::anova::{allocate_variation, FactorSchema, ResponseTable, Term};
use afsim_core::diffserv::{
    ConditionerProfile, MultiColorRedQueue, RedColorParams, RedConfig, RedMode, RedPolicyConfig,
    AverageBasis, TrafficConditioner, red_drop_prob,
};
use afsim_core::factorial::{
    Design, DesignMode, LevelValue, GREEN_BUCKET, GREEN_RATE, MAX_P, THRESHOLDS, YELLOW_BUCKET,
    YELLOW_RATE,
};
use afsim_core::harness::config::TrafficKind;
use afsim_core::harness::{analyze, execute_design, DesignOptions, Response, RunResult};
use afsim_core::metrics::fairness_index;
use afsim_core::netmodel::Color;
use afsim_core::simcore::{RngStream, SimTime};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MASTER_SEED: u64 = 1;
const CAPACITY_BPS: f64 = 1_500_000.0;
const DURATION_S: f64 = 100.0;
const PACKET: u64 = 576;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Verdict {
    let mut failures = Vec::new();
    let equal = fairness_index(&[4.2f64; 10]).unwrap();
    if !rel_close(equal, 1.0, 1e-12) {
        failures.push(format!("equal vector gave {equal}"));
    }
    for k in 0..10 {
        let mut x = [0.0f64; 10];
        x[k] = 1.0 + k as f64;
        let f = fairness_index(&x).unwrap();
        if !rel_close(f, 0.1, 1e-12) {
            failures.push(format!("single non-zero at {k} gave {f}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1e4)).collect();
        let base = fairness_index(&x).unwrap();
        for c in [1e-3, 1.0, 1e6] {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            let f = fairness_index(&scaled).unwrap();
            if !rel_close(f, base, 1e-12) {
                failures.push(format!("scale {c}: {f} vs {base}"));
            }
            checked += 1;
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("equal=1, one-of-ten=0.1, {checked} scaled vectors within 1e-12")
        } else {
            failures[..failures.len().min(3)].join("; ")
        },
    )
}

/// Deviation-from-mean decomposition of an r x c table in exact arithmetic:
/// returns (SS_A, SS_B, SS_AB, SS_total).
fn oracle(cells: &[Vec<i64>]) -> [Rational64; 4] {
    let r = cells.len();
    let c = cells[0].len();
    let q = |v: i64| Rational64::from_integer(v);
    let n = q((r * c) as i64);
    let mean = cells.iter().flatten().map(|&v| q(v)).sum::<Rational64>() / n;
    let row_mean: Vec<Rational64> = cells.iter().map(|row| row.iter().map(|&v| q(v)).sum::<Rational64>() / q(c as i64)).collect();
    let col_mean: Vec<Rational64> = (0..c)
        .map(|j| cells.iter().map(|row| q(row[j])).sum::<Rational64>() / q(r as i64))
        .collect();
    let mut ss = [Rational64::from_integer(0); 4];
    for i in 0..r {
        for j in 0..c {
            let y = q(cells[i][j]);
            let a = row_mean[i] - mean;
            let b = col_mean[j] - mean;
            let ab = y - row_mean[i] - col_mean[j] + mean;
            let d = y - mean;
            ss[0] += a * a;
            ss[1] += b * b;
            ss[2] += ab * ab;
            ss[3] += d * d;
        }
    }
    ss
}

fn table_of<S: afsim_core::scalar::Scalar>(cells: &[Vec<i64>], conv: impl Fn(i64) -> S) -> ResponseTable<S> {
    let levels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
    let mut t = ResponseTable::new(
        "y",
        vec![FactorSchema::new("A", levels(cells.len())), FactorSchema::new("B", levels(cells[0].len()))],
    );
    for (i, row) in cells.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            t.push(vec![i, j], conv(v)).unwrap();
        }
    }
    t
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut tables = 0usize;
    let mut failures: Vec<String> = Vec::new();
    for (rows, cols, max) in [(2usize, 2usize, 4i64), (2, 3, 3)] {
        let cells_n = rows * cols;
        let combos = (max + 1).pow(cells_n as u32);
        for code in 0..combos {
            let mut rest = code;
            let mut flat = Vec::with_capacity(cells_n);
            for _ in 0..cells_n {
                flat.push(rest % (max + 1));
                rest /= max + 1;
            }
            let cells: Vec<Vec<i64>> = flat.chunks(cols).map(|c| c.to_vec()).collect();
            tables += 1;
            let [ssa, ssb, ssab, sst] = oracle(&cells);
            let hundred = Rational64::from_integer(100);
            let pct = |v: Rational64| {
                if sst == Rational64::from_integer(0) {
                    Rational64::from_integer(0)
                } else {
                    v / sst * hundred
                }
            };

            let exact = allocate_variation(&table_of(&cells, Rational64::from_integer)).unwrap();
            let got = [
                exact.allocation(Term::Main(0)).unwrap().percent,
                exact.allocation(Term::Main(1)).unwrap().percent,
                exact.allocation(Term::Pair(0, 1)).unwrap().percent,
            ];
            if got != [pct(ssa), pct(ssb), pct(ssab)] || exact.total_variation != sst {
                failures.push(format!("{cells:?}: exact allocation {got:?}"));
            }
            let residual_ok = exact.residual_percent == if sst == Rational64::from_integer(0) { hundred } else { Rational64::from_integer(0) };
            if !residual_ok {
                failures.push(format!("{cells:?}: residual {}", exact.residual_percent));
            }

            let float = allocate_variation(&table_of(&cells, |v| v as f64)).unwrap();
            let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
            for (term, want) in [(Term::Main(0), pct(ssa)), (Term::Main(1), pct(ssb)), (Term::Pair(0, 1), pct(ssab))] {
                let p = float.allocation(term).unwrap().percent;
                if (p - f(want)).abs() > 1e-9 {
                    failures.push(format!("{cells:?}: {term:?} {p} vs {}", f(want)));
                }
            }
            let sum: f64 = float.allocations.iter().map(|a| a.percent).sum::<f64>() + float.residual_percent;
            if (sum - 100.0).abs() > 1e-6 {
                failures.push(format!("{cells:?}: allocations sum to {sum}"));
            }
            for effects in &float.main_effects {
                let s: f64 = effects.iter().sum();
                if s.abs() > 1e-9 {
                    failures.push(format!("{cells:?}: main effects sum to {s}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("took {elapsed:?}"));
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{tables} tables match the exact oracle in {:.0} ms", elapsed.as_secs_f64() * 1e3)
        } else {
            format!("{} problems, first: {}", failures.len(), failures[0])
        },
    )
}

/// Every per-color RED parameter set used by either design.
fn red_parameter_sets() -> Vec<(DesignMode, Vec<RedColorParams>)> {
    let mut out = Vec::new();
    for mode in DesignMode::ALL {
        let d = Design::new(mode);
        let th = &d.factors[d.factor_index(THRESHOLDS).unwrap()];
        let mp = &d.factors[d.factor_index(MAX_P).unwrap()];
        for t in &th.levels {
            for p in &mp.levels {
                let (LevelValue::Thresholds(t), LevelValue::MaxP(p)) = (t, p) else {
                    unreachable!()
                };
                let params = t
                    .iter()
                    .zip(p)
                    .map(|(&(lo, hi), &mp)| RedColorParams::new(lo as f64, hi as f64, mp))
                    .collect();
                out.push((mode, params));
            }
        }
    }
    out
}

fn criterion_3() -> Verdict {
    let mut failures = Vec::new();
    let mut sets = 0;
    let mut worst = 0.0f64;
    const TRIALS: usize = 100_000;
    for (mode, params) in red_parameter_sets() {
        sets += 1;
        for p in &params {
            let mid = (p.min_th + p.max_th) / 2.0;
            let checks = [
                (p.min_th, 0.0),
                (mid, p.max_p / 2.0),
                (p.max_th, 1.0),
                (p.max_th + 5.0, 1.0),
            ];
            for (avg, want) in checks {
                let got = red_drop_prob(avg, p);
                if (got - want).abs() > 1e-12 {
                    failures.push(format!("{p:?} at {avg}: {got} vs {want}"));
                }
            }
            let below = red_drop_prob(p.max_th - 1e-9, p);
            if (below - p.max_p).abs() > 1e-8 {
                failures.push(format!("{p:?} just below max_th: {below}"));
            }
        }
        // one queue per set, colors probed at their own midpoints
        let colors: &[Color] = match mode {
            DesignMode::TwoColor => &[Color::Green, Color::Red],
            DesignMode::ThreeColor => &[Color::Green, Color::Yellow, Color::Red],
        };
        let (g, y, r) = match mode {
            DesignMode::TwoColor => (params[0], params[1], params[1]),
            DesignMode::ThreeColor => (params[0], params[1], params[2]),
        };
        let config = RedConfig {
            limit_packets: 60,
            weight: 0.002,
            count_adjusted: false,
            policy: RedPolicyConfig { mode: RedMode::Samt, basis: AverageBasis::default(), green: g, yellow: y, red: r },
        };
        for (&color, p) in colors.iter().zip(&params) {
            let mut q = MultiColorRedQueue::new(&config, RngStream::new(sets as u64, "red-law")).unwrap();
            let mid = (p.min_th + p.max_th) / 2.0;
            q.force_avg(mid);
            let want = q.drop_prob(color);
            let drops = (0..TRIALS).filter(|_| q.early_drop(color)).count();
            let rate = drops as f64 / TRIALS as f64;
            worst = worst.max((rate - want).abs());
            if (rate - want).abs() > 0.01 {
                failures.push(format!("{color} {p:?}: empirical {rate} vs {want}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{sets} parameter sets, law exact at min/mid/max, worst empirical deviation {worst:.4}")
        } else {
            format!("{} problems, first: {}", failures.len(), failures[0])
        },
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut tightest = f64::INFINITY;
    for trace in 0..1000 {
        let rate_bps: u64 = rng.gen_range(1_000..=2_000_000);
        let capacity = PACKET * rng.gen_range(1..=64);
        let mut cond = TrafficConditioner::new(ConditionerProfile {
            green_rate_bps: rate_bps,
            green_bucket_bytes: capacity,
            yellow_rate_bps: 0,
            yellow_bucket_bytes: PACKET,
        });
        let mean_gap_ns: u64 = rng.gen_range(1_000..=50_000_000);
        let mut now = 0u64;
        for _ in 0..rng.gen_range(1..=2000) {
            now += rng.gen_range(0..=2 * mean_gap_ns);
            let size = rng.gen_range(40..=1500);
            cond.mark_bytes(size, SimTime::from_nanos(now));
        }
        let green = cond.marked_bytes()[Color::Green] as u128;
        // green·8e9 <= capacity·8e9 + rate·T_ns, all in integers
        let lhs = green * 8_000_000_000;
        let rhs = capacity as u128 * 8_000_000_000 + rate_bps as u128 * now as u128;
        if lhs > rhs {
            failures.push(format!("trace {trace}: {green} green bytes exceed the bound"));
        }
        if rhs > 0 {
            tightest = tightest.min(1.0 - lhs as f64 / rhs as f64);
        }
    }
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("1000 random traces within capacity + rate*T/8 (smallest slack {:.2e})", tightest)
        } else {
            format!("{} traces violate the bound, first: {}", failures.len(), failures[0])
        },
    )
}

struct Designs {
    two: Vec<RunResult>,
    three: Vec<RunResult>,
}

fn level<'a>(design: &'a Design, r: &RunResult, factor: &str) -> &'a LevelValue {
    let k = design.factor_index(factor).unwrap();
    let levels = design.levels_of(r.simulation_id).unwrap();
    &design.factors[k].levels[levels[k]]
}

fn rate_of(design: &Design, r: &RunResult, factor: &str) -> u64 {
    match level(design, r, factor) {
        LevelValue::RateBps(v) => *v,
        other => panic!("{factor} is not a rate: {other}"),
    }
}

fn packets_of(design: &Design, r: &RunResult, factor: &str) -> u32 {
    match level(design, r, factor) {
        LevelValue::Packets(v) => *v,
        other => panic!("{factor} is not a size: {other}"),
    }
}

fn udp(r: &RunResult) -> &afsim_core::harness::CustomerResult {
    r.customers_of(TrafficKind::Udp).next().expect("one UDP customer")
}

fn pct(n: usize, d: usize) -> f64 {
    100.0 * n as f64 / d as f64
}

fn criterion_5(d: &Designs) -> Verdict {
    let design = Design::new(DesignMode::TwoColor);
    let runs: Vec<_> = d.two.iter().filter(|r| rate_of(&design, r, GREEN_RATE) <= 76_800).collect();
    let poor = runs.iter().filter(|r| r.fairness < 0.5).count();
    let dominant = runs
        .iter()
        .filter(|r| {
            let tcp: Vec<f64> = r.customers_of(TrafficKind::Tcp).map(|c| c.excess_bps).collect();
            let mean = tcp.iter().sum::<f64>() / tcp.len() as f64;
            udp(r).excess_bps >= 3.0 * mean
        })
        .count();
    let n = runs.len();
    verdict(
        n > 0 && pct(poor, n) >= 90.0 && pct(dominant, n) >= 90.0,
        format!(
            "{n} runs: fairness < 0.5 in {:.1}%, UDP excess >= 3x TCP mean in {:.1}%",
            pct(poor, n),
            pct(dominant, n)
        ),
    )
}

fn criterion_6(d: &Designs) -> Verdict {
    let design = Design::new(DesignMode::ThreeColor);
    let runs: Vec<_> = d
        .three
        .iter()
        .filter(|r| {
            let red_th = match level(&design, r, THRESHOLDS) {
                LevelValue::Thresholds(t) => t[2],
                _ => unreachable!(),
            };
            rate_of(&design, r, YELLOW_RATE) == 128_000
                && packets_of(&design, r, YELLOW_BUCKET) >= 8
                && red_th == (0, 10)
        })
        .collect();
    let best = runs.iter().max_by(|a, b| a.fairness.total_cmp(&b.fairness));
    match best {
        Some(b) => verdict(
            b.fairness >= 0.85,
            format!("{} runs, best fairness {:.4} (simulation {})", runs.len(), b.fairness, b.simulation_id),
        ),
        None => verdict(false, "no runs matched the filter"),
    }
}

fn criterion_7(d: &Designs) -> Verdict {
    let design = Design::new(DesignMode::TwoColor);
    let runs: Vec<_> = d.two.iter().filter(|r| rate_of(&design, r, GREEN_RATE) == 179_200).collect();
    let limit = 0.05 * CAPACITY_BPS;
    let low_excess = runs.iter().filter(|r| r.total_excess_bps() <= limit).count();
    let zero = runs.iter().filter(|r| r.fairness == 0.0).count();
    let both = runs.iter().filter(|r| r.total_excess_bps() <= limit && r.fairness == 0.0).count();
    let min_excess = runs.iter().map(|r| r.total_excess_bps()).fold(f64::INFINITY, f64::min);
    let min_fair = runs.iter().map(|r| r.fairness).fold(f64::INFINITY, f64::min);
    verdict(
        both >= 1,
        format!(
            "{} runs at 179.2 kbps: {low_excess} with excess <= 5% of capacity, {zero} with fairness 0; \
             smallest total excess {:.0} bps, smallest fairness {:.4}",
            runs.len(),
            min_excess,
            min_fair
        ),
    )
}

fn criterion_8(d: &Designs) -> Verdict {
    let mut n = 0;
    let mut bad = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (mode, runs) in [(DesignMode::TwoColor, &d.two), (DesignMode::ThreeColor, &d.three)] {
        let design = Design::new(mode);
        for r in runs.iter().filter(|r| rate_of(&design, r, GREEN_RATE) <= 76_800) {
            n += 1;
            let rate = rate_of(&design, r, GREEN_RATE);
            let bucket = packets_of(&design, r, GREEN_BUCKET) as u64 * PACKET;
            let bound = 1.0 + (bucket * 8) as f64 / (rate as f64 * DURATION_S);
            let u = udp(r).utilization.unwrap_or(f64::NAN);
            lo = lo.min(u);
            hi = hi.max(u);
            if !(u >= 0.95 && u <= bound) {
                bad.push(format!("{mode} {}: {u:.4} outside [0.95, {bound:.4}]", r.simulation_id));
            }
        }
    }
    verdict(
        bad.is_empty() && n > 0,
        if bad.is_empty() {
            format!("{n} runs, UDP utilization in [{lo:.4}, {hi:.4}], all within their bucket bound")
        } else {
            format!("{} of {n} runs out of range, first: {}", bad.len(), bad[0])
        },
    )
}

fn criterion_9(d: &Designs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (mode, runs, paper) in [
        (DesignMode::TwoColor, &d.two, 86.22),
        (DesignMode::ThreeColor, &d.three, 95.25),
    ] {
        let design = Design::new(mode);
        let report = analyze(&design, runs, Response::TcpUtilization).unwrap();
        let ranked = report.ranked();
        let top = ranked[0];
        let bucket = report.main(GREEN_BUCKET).unwrap().percent;
        let ok = top.term == report.main(GREEN_BUCKET).unwrap().term
            && bucket >= 60.0
            && (bucket - paper).abs() <= 25.0;
        pass &= ok;
        parts.push(format!("{mode}: green bucket {bucket:.2}% (top: {}, reference {paper}%)", top.label));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_10(d: &Designs) -> Verdict {
    let design = Design::new(DesignMode::ThreeColor);
    let report = analyze(&design, &d.three, Response::Fairness).unwrap();
    let yr = report.main(YELLOW_RATE).unwrap();
    let yb = report.main(YELLOW_BUCKET).unwrap();
    let inter = report.pair(YELLOW_RATE, YELLOW_BUCKET).unwrap();
    let ranked = report.ranked();
    let top3: Vec<Term> = ranked[..3].iter().map(|a| a.term).collect();
    let expected = [yr.term, yb.term, inter.term];
    let same_set = expected.iter().all(|t| top3.contains(t));
    let joint = yr.percent + yb.percent + inter.percent;
    let yr_rank = ranked.iter().position(|a| a.term == yr.term).unwrap() + 1;
    verdict(
        same_set && joint >= 75.0 && yr_rank <= 2,
        format!(
            "yellow rate {:.2}% (rank {yr_rank}), yellow bucket {:.2}%, interaction {:.2}%, joint {joint:.2}%",
            yr.percent, yb.percent, inter.percent
        ),
    )
}

fn criterion_11(d: &Designs) -> Verdict {
    let bound = 1.0 + (32 * PACKET * 8) as f64 / (12_800.0 * DURATION_S);
    let mut above_one = 0;
    let mut over_bound = Vec::new();
    let mut max_u = f64::NEG_INFINITY;
    let mut n = 0;
    for (mode, runs) in [(DesignMode::TwoColor, &d.two), (DesignMode::ThreeColor, &d.three)] {
        let design = Design::new(mode);
        for r in runs.iter().filter(|r| {
            rate_of(&design, r, GREEN_RATE) == 12_800 && packets_of(&design, r, GREEN_BUCKET) == 32
        }) {
            for c in &r.customers {
                n += 1;
                let u = c.utilization.unwrap_or(f64::NAN);
                max_u = max_u.max(u);
                if u > 1.0 && u <= bound {
                    above_one += 1;
                }
                if !(u <= bound) {
                    over_bound.push(format!("{mode} {} customer {}: {u}", r.simulation_id, c.customer));
                }
            }
        }
    }
    verdict(
        above_one >= 1 && over_bound.is_empty(),
        format!(
            "{n} customer results, {above_one} in (1, {bound:.4}], max {max_u:.4}, {} above the bound",
            over_bound.len()
        ),
    )
}

fn run_designs() -> Designs {
    let run = |mode| {
        let start = Instant::now();
        let out = execute_design(&DesignOptions::new(mode, MASTER_SEED)).expect("design runs");
        assert!(out.failures.is_empty(), "{mode}: failed runs {:?}", out.failures);
        let events: u64 = out.results.iter().map(|r| r.events).sum();
        println!(
            "  {mode}: {} runs, {:.2e} events, {:.1} s",
            out.results.len(),
            events as f64,
            start.elapsed().as_secs_f64()
        );
        out.results
    };
    Designs {
        two: run(DesignMode::TwoColor),
        three: run(DesignMode::ThreeColor),
    }
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    type Check = Box<dyn Fn(&Designs) -> Verdict>;
    let formula: Vec<(u32, &str, fn() -> Verdict)> = vec![
        (1, "fairness index", criterion_1),
        (2, "ANOVA oracle equivalence", criterion_2),
        (3, "RED drop law", criterion_3),
        (4, "token conservation", criterion_4),
    ];
    let end_to_end: Vec<(u32, &str, Check)> = vec![
        (5, "two-color fairness collapse", Box::new(criterion_5)),
        (6, "three-color fairness attainable", Box::new(criterion_6)),
        (7, "oversubscription degeneracy", Box::new(criterion_7)),
        (8, "UDP reserved-rate utilization", Box::new(criterion_8)),
        (9, "TCP utilization driver", Box::new(criterion_9)),
        (10, "three-color fairness drivers", Box::new(criterion_10)),
        (11, "utilization above one", Box::new(criterion_11)),
    ];
    if std::env::args().any(|a| a == "--list") {
        for (n, _, _) in &formula {
            println!("criterion_{n}: test");
        }
        for (n, _, _) in &end_to_end {
            println!("criterion_{n}: test");
        }
        return ExitCode::SUCCESS;
    }
    let wanted = |n: u32| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut failed = Vec::new();
    let mut report = |n: u32, name: &str, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n:>2} ({name}): {}", v.detail);
        if !v.pass {
            failed.push(n);
        }
    };
    for (n, name, check) in formula {
        if wanted(n) {
            report(n, name, check());
        }
    }
    if end_to_end.iter().any(|(n, _, _)| wanted(*n)) {
        println!("running both factorial designs...");
        let designs = run_designs();
        for (n, name, check) in &end_to_end {
            if wanted(*n) {
                report(*n, name, check(&designs));
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
