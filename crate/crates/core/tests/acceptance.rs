//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use kservice_core::instances::{gen_bad_instance, gen_random, BadInstanceParams, GenMode, RandomSpec};
use kservice_core::invariants::{check_bad_instance, check_fact4, check_lemma1, check_lemma2, check_power_triangle};
use kservice_core::list::TheoryConstants;
use kservice_core::metric::{mcpm_centers, psi, CenterSet, Clustering, MetricInstance};
use kservice_core::oracle::{brute_force_mcpm, brute_force_psi, oracle_constrained, oracle_partition, OracleBudget};
use kservice_core::partition::{partition_outlier, partition_r_capacity, partition_r_gather, ConstraintSpec};
use kservice_core::sampling::{substream, SolverRng};
use kservice_core::solver::{solve, SolveOptions};
use kservice_core::streaming::{
    build_representative_graph, stream_list, stream_partition, stream_solve, MemoryStream, PointStream, StreamContext,
    StreamSeeding,
};
use kservice_core::{partition, AlgorithmParams};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn small_instance(rng: &mut SolverRng, max_c: usize, max_l: usize, ell: f64) -> MetricInstance {
    let spec = RandomSpec {
        mode: if rng.random_bool(0.5) { GenMode::Euclidean } else { GenMode::Matrix },
        ell,
        ..RandomSpec::new(rng.random_range(3..=max_c), rng.random_range(3..=max_l))
    };
    gen_random(&spec, rng).unwrap()
}

fn random_centers(rng: &mut SolverRng, inst: &MetricInstance, k: usize) -> CenterSet {
    let idx = rand::seq::index::sample(rng, inst.n_facilities(), k).into_vec();
    CenterSet::new(idx, inst.n_facilities()).unwrap()
}

/// Bounds for r-gather (sum <= n) and r-capacity (sum >= n), not necessarily uniform.
fn random_bounds(rng: &mut SolverRng, n: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    let gather: Vec<usize> = (0..k).map(|_| rng.random_range(0..=n / k)).collect();
    let capacity: Vec<usize> = (0..k).map(|_| rng.random_range(n.div_ceil(k)..=n)).collect();
    (gather, capacity)
}

fn criterion1() -> Outcome {
    let mut rng = substream(101, &[]);
    let budget = OracleBudget::default();
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for t in 0..200 {
        let k = rng.random_range(2..=3);
        let ell = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
        let inst = loop {
            let i = small_instance(&mut rng, 7, 6, ell);
            if i.n_facilities() >= k && i.n_clients() >= k {
                break i;
            }
        };
        let n = inst.n_clients();
        let f = random_centers(&mut rng, &inst, k);
        let (g, c) = random_bounds(&mut rng, n, k);
        let m = rng.random_range(0..n);
        let cases = [
            ("r_gather", partition_r_gather(&inst, &f, &g).unwrap().cost, ConstraintSpec::RGather { r: g }),
            ("r_capacity", partition_r_capacity(&inst, &f, &c).unwrap().cost, ConstraintSpec::RCapacity { r: c }),
            ("outlier", partition_outlier(&inst, &f, m).unwrap().cost, ConstraintSpec::Outlier { m }),
        ];
        for (name, got, spec) in cases {
            let want = oracle_partition(&inst, &f, &spec, &budget).unwrap().1;
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
            if !rel_close(got, want, 1e-9) {
                fails.push(format!("instance {t} {name}: {got} vs oracle {want}"));
            }
        }
    }
    Outcome { pass: fails.is_empty(), detail: format!("600 partitions, worst relative gap {worst:.2e}; {}", fails.join("; ")) }
}

fn criterion2() -> Outcome {
    let mut rng = substream(102, &[]);
    let mut fails = Vec::new();
    for t in 0..200 {
        let k = rng.random_range(2..=3);
        let ell = if rng.random_bool(0.5) { 1.0 } else { 2.0 };
        let inst = loop {
            let i = small_instance(&mut rng, 7, 6, ell);
            if i.n_facilities() >= k {
                break i;
            }
        };
        let labels: Vec<usize> = (0..inst.n_clients()).map(|_| rng.random_range(0..k)).collect();
        let cl = Clustering::from_labels(labels, k).unwrap();
        let f = random_centers(&mut rng, &inst, k);
        let got = psi(&inst, &f, &cl, true).unwrap().total;
        let want = brute_force_psi(&inst, &f, &cl);
        if !rel_close(got, want, 1e-9) {
            fails.push(format!("instance {t} psi {got} vs {want}"));
        }
        let got = mcpm_centers(&inst, &cl, true).unwrap().1.total;
        let want = brute_force_mcpm(&inst, &cl).1;
        if !rel_close(got, want, 1e-9) {
            fails.push(format!("instance {t} mcpm {got} vs {want}"));
        }
    }
    Outcome { pass: fails.is_empty(), detail: format!("200 instances; {}", fails.join("; ")) }
}

fn criterion3() -> Outcome {
    let eps = 0.5;
    let budget = OracleBudget::default();
    let mut pooled = (0, 0);
    let mut lines = Vec::new();
    let mut pass = true;
    let mut below_oracle = 0;
    for ell in [1.0, 2.0] {
        for subset in [false, true] {
            for kind in 0..4 {
                let factor = if subset { 2f64.powf(ell) } else { 3f64.powf(ell) } + eps;
                let mut wins = 0;
                for run in 0..20u64 {
                    let tag = (ell as u64) * 1000 + u64::from(subset) * 100 + kind * 10;
                    let mut rng = substream(103, &[tag, run]);
                    let (nc, nl) = if subset { (6, 7) } else { (8, 6) };
                    let spec = RandomSpec { clients_are_facilities: subset, ell, ..RandomSpec::new(nc, nl) };
                    let inst = gen_random(&spec, &mut rng).unwrap();
                    let c = match kind {
                        0 => ConstraintSpec::Unconstrained,
                        1 => ConstraintSpec::RGather { r: vec![nc / 2 - 1, nc / 2 - 1] },
                        2 => ConstraintSpec::RCapacity { r: vec![nc / 2 + 1, nc / 2 + 1] },
                        _ => ConstraintSpec::Outlier { m: 1 },
                    };
                    let params = AlgorithmParams::practical(2, eps).unwrap().with_eta(40).with_repetitions(4);
                    let sol = solve(&inst, 2, &c, &params, run, &SolveOptions::default()).unwrap();
                    let opt = oracle_constrained(&inst, 2, &c, &budget).unwrap().cost;
                    if sol.cost < opt * (1.0 - 1e-9) {
                        below_oracle += 1;
                    }
                    if sol.cost <= factor * opt * (1.0 + 1e-9) {
                        wins += 1;
                    }
                }
                pooled.0 += wins;
                pooled.1 += 20;
                pass &= wins >= 10;
                lines.push(format!("l={ell} subset={subset} {}: {wins}/20", ["unc", "gather", "cap", "outlier"][kind as usize]));
            }
        }
    }
    pass &= pooled.0 * 5 >= pooled.1 * 4 && below_oracle == 0;
    Outcome {
        pass,
        detail: format!("pooled {}/{}; solver below oracle {below_oracle} times; {}", pooled.0, pooled.1, lines.join(", ")),
    }
}

fn criterion4() -> Outcome {
    let p = BadInstanceParams::new(2, 5, 0.1, 1.0);
    let b = gen_bad_instance(&p).unwrap();
    let params = AlgorithmParams::practical(2, 0.5).unwrap();
    let bound = p.list_lower_bound();
    let seeds: Vec<u64> = (0..10).collect();
    let outcomes = check_bad_instance(&b, &params, &seeds).unwrap();
    let pass = (bound - 23.0).abs() < 1e-6 && outcomes.iter().all(|o| o.passed());
    let detail = outcomes
        .iter()
        .map(|o| format!("{} [{} checked, {} violations{}]", o.name, o.checked, o.violations, if o.detail.is_empty() { String::new() } else { format!(": {}", o.detail) }))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail: format!("bound {bound}; {detail}") }
}

fn criterion5() -> Outcome {
    let budget = OracleBudget::default();
    let mut rng = substream(105, &[]);
    let mut counts = [0u64; 4];
    let mut bad = Vec::new();
    let mut note = |o: &kservice_core::invariants::CheckOutcome, slot: usize, counts: &mut [u64; 4]| {
        counts[slot] += o.checked;
        if !o.passed() {
            bad.push(format!("{}: {}", o.name, o.detail));
        }
    };
    for i in 0..10 {
        let ell = if i % 2 == 0 { 1.0 } else { 2.0 };
        let inst = gen_random(&RandomSpec { ell, mode: if i < 5 { GenMode::Euclidean } else { GenMode::Matrix }, ..RandomSpec::new(30, 12) }, &mut rng).unwrap();
        note(&check_power_triangle(&inst, 10_000, &mut rng), 0, &mut counts);
        note(&check_lemma1(&inst, 100, &mut rng), 1, &mut counts);
        note(&check_lemma2(&inst, 100, &mut rng), 2, &mut counts);
    }
    let graph = gen_bad_instance(&BadInstanceParams::new(2, 3, 0.3, 2.0)).unwrap().instance;
    note(&check_power_triangle(&graph, 10_000, &mut rng), 0, &mut counts);
    for i in 0..50 {
        let ell = if i % 2 == 0 { 1.0 } else { 2.0 };
        let inst = gen_random(&RandomSpec { ell, ..RandomSpec::new(rng.random_range(3..=8), rng.random_range(3..=7)) }, &mut rng).unwrap();
        let k = rng.random_range(1..=3);
        note(&check_fact4(&inst, k, &budget).unwrap(), 3, &mut counts);
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{} power-triangle checks, {} + {} subset averages, {} oracle instances; {}",
            counts[0], counts[1], counts[2], counts[3], bad.join("; ")
        ),
    }
}

fn criterion6() -> Outcome {
    let mut rng = substream(106, &[]);
    let mut bad = Vec::new();
    let mut passes = (0, 0, 0);
    let mut weight_checks = 0u64;
    let mut gather_runs = 0;
    for t in 0..50 {
        let inst = gen_random(&RandomSpec { ell: [1.0, 2.0][t % 2], ..RandomSpec::new(12, 6) }, &mut rng).unwrap();
        let ctx = StreamContext::from_instance(&inst);
        let k = 2 + t % 2;
        let f = random_centers(&mut rng, &inst, k);
        for eps in [0.1, 0.5] {
            let mut s = MemoryStream::from_instance(&inst);
            let g = build_representative_graph(&mut s, &ctx, &f, eps).unwrap();
            s.pass(&mut |_, rec| {
                let v = g.vertex_of(&ctx, rec)?.expect("every record has a class");
                for (i, &fac) in f.as_slice().iter().enumerate() {
                    let truth = ctx.facility_cost(rec, fac)?;
                    let w = g.vertices()[v].weights[i];
                    weight_checks += 1;
                    if !(w >= truth / (1.0 + eps) && w <= truth * (1.0 + eps)) {
                        bad.push(format!("weight {w} vs {truth} at eps {eps}"));
                    }
                }
                Ok(())
            })
            .unwrap();
            let spec = ConstraintSpec::RGather { r: vec![12 / k - 1; k] };
            let offline = partition(&inst, &f, &spec).unwrap().cost;
            let st = stream_partition(&mut MemoryStream::from_instance(&inst), &ctx, &f, &spec, eps).unwrap();
            gather_runs += 1;
            if st.result.cost > (1.0 + eps) * offline * (1.0 + 1e-12) {
                bad.push(format!("instance {t}: streaming r-gather {} > (1+{eps}) * {offline}", st.result.cost));
            }
        }
        let m = 1 + t % 3;
        let spec = ConstraintSpec::Outlier { m };
        let st = stream_partition(&mut MemoryStream::from_instance(&inst), &ctx, &f, &spec, 0.5).unwrap();
        if st.result != partition(&inst, &f, &spec).unwrap() {
            bad.push(format!("instance {t}: streaming outlier differs from offline"));
        }
        if t % 5 == 0 {
            let params = AlgorithmParams::practical(2, 0.5).unwrap().with_eta(10).with_repetitions(2);
            let mut s = MemoryStream::from_instance(&inst);
            let l = stream_list(&mut s, &ctx, 2, &params, &StreamSeeding::Sample { centers: 2 }, t as u64).unwrap();
            passes.0 = passes.0.max(l.passes);
            let so = stream_solve(&mut MemoryStream::from_instance(&inst), &ctx, 2, &spec, &params, 0.5, None, t as u64).unwrap();
            passes.1 = passes.1.max(so.passes);
            let flow = ConstraintSpec::RCapacity { r: vec![7, 7] };
            let sf = stream_solve(&mut MemoryStream::from_instance(&inst), &ctx, 2, &flow, &params, 0.5, None, t as u64).unwrap();
            passes.2 = passes.2.max(sf.passes);
        }
    }
    let pass = bad.is_empty() && passes.0 <= 3 && passes.1 <= 5 && passes.2 <= 6;
    Outcome {
        pass,
        detail: format!(
            "max passes list {} / outlier solve {} / flow solve {}; {weight_checks} weights checked; {gather_runs} r-gather runs; {}",
            passes.0,
            passes.1,
            passes.2,
            bad.join("; ")
        ),
    }
}

fn criterion7() -> Outcome {
    // eta * k slot records dominate the pass-1 sample of 8k*ceil(log2(n+1))
    let params = AlgorithmParams::practical(2, 0.25).unwrap();
    let spec = ConstraintSpec::Outlier { m: 2 };
    let mut peaks = Vec::new();
    for n in [1_000, 100_000] {
        let mut rng = substream(107, &[n as u64]);
        let inst = gen_random(&RandomSpec { blobs: 4, ..RandomSpec::new(n, 10) }, &mut rng).unwrap();
        let ctx = StreamContext::from_instance(&inst);
        let mut s = MemoryStream::from_instance(&inst);
        let sol = stream_solve(&mut s, &ctx, 2, &spec, &params.clone().with_dedup(true), 0.25, None, 7).unwrap();
        peaks.push(sol.peak_records);
    }
    let change = (peaks[1] as f64 - peaks[0] as f64).abs() / peaks[0] as f64;
    Outcome {
        pass: change < 0.05,
        detail: format!("eta {} reps {}: peak records {} at 1e3, {} at 1e5, change {:.2}%", params.eta, params.repetitions, peaks[0], peaks[1], 100.0 * change),
    }
}

fn criterion8() -> Outcome {
    let c = TheoryConstants::compute(1, 1, 1.0, 1.0).unwrap();
    let beta = BigRational::from_integer(BigInt::from(6562));
    let gamma = BigRational::from_integer(BigInt::from(2187));
    Outcome { pass: c.beta == beta && c.gamma == gamma, detail: format!("beta = {}, gamma = {}", c.beta, c.gamma) }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("partition exactness vs exhaustive labelings", criterion1),
        ("psi and mcpm vs brute force", criterion2),
        ("approximation success rate", criterion3),
        ("lower-bound instance regression", criterion4),
        ("invariant suites", criterion5),
        ("streaming parity", criterion6),
        ("streaming memory flat in |C|", criterion7),
        ("theory-mode constants", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail.trim_end_matches("; ")
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
