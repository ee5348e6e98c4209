//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use meshplan::analysis::{build_worst_chain, performance_ratio_bound, BoundCase};
use meshplan::cnd::{residual_capacity, verify_capacity_plan};
use meshplan::generate::{generate, GenParams};
use meshplan::hybrid::verify_hybrid;
use meshplan::model::{cover, HeightFunction, PlanningInstance};
use meshplan::oracle::{brute_force_star, enumerate_logical_neighbors};
use meshplan::plan::{execute, validate, PlanArtifacts, PlanDocument};
use meshplan::steiner_tc::{best_proposal, doubling_increments, star_steiner_tc};
use meshplan::{HybridOrder, PlanOptions};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_meshplan");

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome { ok: true, detail }
}

fn fail(detail: String) -> Outcome {
    Outcome { ok: false, detail }
}

fn meshplan(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("run meshplan binary")
}

/// Small instances in the oracle's range: `|A|` 3..=6, `|B|` 0..=4, six height levels.
fn small_params(i: u64) -> GenParams {
    GenParams {
        seed: 1000 + i,
        terminals: 3 + (i % 4) as usize,
        non_terminals: ((i / 4) % 5) as usize,
        ..Default::default()
    }
}

/// Mixed shapes for pipeline checks. Every other instance uses cheap omni
/// antennas and a third of them carry small demands.
fn pipeline_params(i: u64) -> GenParams {
    let mut p = GenParams {
        seed: 50_000 + i,
        terminals: 4 + (i % 9) as usize,
        non_terminals: (i % 4) as usize,
        area: [4000.0, 6000.0, 10_000.0][(i % 3) as usize],
        ..Default::default()
    };
    if i % 3 == 0 {
        p.demand_min = 5;
        p.demand_max = 15;
    }
    if i % 2 == 1 {
        p.costs.antenna.omni = 150.0;
        p.costs.antenna.omni_sd = 20.0;
    }
    p
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let count = 200;
    for i in 0..count {
        let inst = generate(&small_params(i)).expect("generate");
        if inst.height_levels() > 6 {
            return fail(format!("instance {i} has {} height levels", inst.height_levels()));
        }
        fs::write(dir.path().join(format!("inst{i:03}.json")), inst.to_json().unwrap()).unwrap();
    }
    let pattern = dir.path().join("*.json").display().to_string();
    let start = Instant::now();
    let out = meshplan(&["oracle-compare", &pattern]);
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<Vec<&str>> =
        stdout.lines().skip(1).filter(|l| !l.starts_with("summary")).map(|l| l.split('\t').collect()).collect();
    let passed = rows.iter().filter(|r| r.get(6) == Some(&"PASS")).count();
    let mut worst = 0.0f64;
    for r in &rows {
        if let (Ok(g), Ok(o)) = (r[2].parse::<f64>(), r[3].parse::<f64>()) {
            let a: usize = r[1].parse().unwrap();
            let bound = (2.0 * (a as f64).ln()).max(1.0);
            if !(o <= g && g <= bound * o) {
                return fail(format!("{}: greedy {g}, oracle {o}, bound {bound}", r[0]));
            }
            worst = worst.max(g / o);
        }
    }
    let detail = format!(
        "{passed}/{count} within max(1, 2 ln|A|) of the optimum, worst ratio {worst:.4}, {:.1} s",
        elapsed.as_secs_f64()
    );
    if out.status.success()
        && passed == count as usize
        && rows.len() == count as usize
        && elapsed < Duration::from_secs(120)
    {
        pass(detail)
    } else {
        fail(format!("{detail}; exit {:?}", out.status.code()))
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut compared, mut empty, mut draws) = (0, 0, 0);
    while compared < 500 {
        draws += 1;
        if draws > 20_000 {
            return fail(format!("only {compared} usable triples in {draws} draws"));
        }
        let p = GenParams {
            seed: rng.gen(),
            terminals: rng.gen_range(3..=8),
            non_terminals: rng.gen_range(0..=5),
            area: rng.gen_range(3000.0..10_000.0f64).round(),
            ..Default::default()
        };
        let Ok(inst) = generate(&p) else { continue };
        let mut h = HeightFunction::initial(&inst);
        for _ in 0..rng.gen_range(0..3) {
            let state = cover(&inst, &h);
            if state.phi() == 1 {
                break;
            }
            match best_proposal(&inst, &h, &state) {
                Some(prop) => prop.apply(&mut h),
                None => break,
            }
        }
        let state = cover(&inst, &h);
        let v = inst.terminals()[rng.gen_range(0..inst.terminals().len())];
        let deltas = doubling_increments(inst.height_step(), inst.top_height() - h.at(v));
        if deltas.is_empty() {
            continue;
        }
        let delta = deltas[rng.gen_range(0..deltas.len())];
        if enumerate_logical_neighbors(&inst, &h, &state, v, delta).len() > 12 {
            continue;
        }
        let greedy = star_steiner_tc(&inst, &h, &state, v, delta).map(|p| p.ratio);
        let oracle = brute_force_star(&inst, &h, &state, v, delta).expect("star oracle").map(|o| o.ratio);
        if greedy != oracle {
            return fail(format!(
                "seed {} center {} delta {delta}: greedy {greedy:?}, oracle {oracle:?}",
                p.seed,
                inst.id(v)
            ));
        }
        if oracle.is_some() {
            compared += 1;
        } else {
            empty += 1;
        }
    }
    pass(format!("{compared} triples with equal ratios, {empty} more with no neighbor on either side"))
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    for (a, b, gamma) in [(8usize, 3usize, 2usize), (6, 0, 2), (10, 4, 5)] {
        let inst = build_worst_chain(a, b, gamma, 10.0).expect("chain");
        let art = execute(&inst, HybridOrder::None).expect("pipeline");
        let measured = art.capacity.hub_distance_sum(&art.solution.tree);
        let expected = (a as f64 / gamma as f64 - 1.0) * (b as f64 + a as f64 / 2.0);
        if measured as f64 != expected {
            return fail(format!("({a},{b},{gamma}): measured {measured}, expected {expected}"));
        }
        details.push(format!("({a},{b},{gamma})={measured}"));
    }
    pass(format!("hub distance sums {}", details.join(" ")))
}

/// Net flow out of each vertex, from the per-edge arc flows.
fn net_outflow(inst: &PlanningInstance, art: &PlanArtifacts) -> Vec<f64> {
    let mut net = vec![0.0; inst.len()];
    for l in &art.capacity.loads {
        net[l.child] += l.up - l.down;
        net[l.parent] += l.down - l.up;
    }
    net
}

fn capacity_violation(inst: &PlanningInstance, art: &PlanArtifacts) -> Option<String> {
    let u = inst.radio().link_capacity;
    for l in &art.capacity.loads {
        if l.flow() > u * l.copies as f64 + 1e-9 {
            return Some(format!("edge above {} carries {} on {} copies", inst.id(l.child), l.flow(), l.copies));
        }
    }
    for g in &art.capacity.groups {
        if g.internal_traffic(inst) > u - inst.demand(g.hub) + 1e-9 {
            return Some(format!("group at hub {} overloaded", inst.id(g.hub)));
        }
    }
    let total: f64 = inst.terminals().iter().map(|&t| inst.demand(t)).sum();
    let root = art.solution.tree.root();
    for (v, &out) in net_outflow(inst, art).iter().enumerate() {
        let want = if v == root { inst.demand(v) - total } else { inst.demand(v) };
        if art.solution.tree.contains(v) && (out - want).abs() > 1e-6 {
            return Some(format!("conservation fails at {}: {out} against {want}", inst.id(v)));
        }
    }
    if art.bounds.case == BoundCase::SingleLink && art.capacity.loads.iter().any(|l| l.copies != 1) {
        return Some("single-link instance with extra copies".into());
    }
    verify_capacity_plan(inst, &art.solution.tree, &art.capacity).err().map(|e| e.to_string())
}

fn los_violation(inst: &PlanningInstance, art: &PlanArtifacts) -> Option<String> {
    let h = &art.solution.heights;
    let effective = art.hybrid.as_ref().map_or_else(|| h.clone(), |p| p.effective_heights(h));
    let on_disc: Vec<usize> = art.hybrid.iter().flat_map(|p| &p.omni).flat_map(|c| c.covered.clone()).collect();
    for te in art.solution.tree.edges() {
        let ob = inst.edges()[te.edge].ob;
        if h.at(te.child) + h.at(te.parent) < 2.0 * ob - 1e-9 {
            return Some(format!("edge {}-{} blocked under planned heights", inst.id(te.child), inst.id(te.parent)));
        }
        if !on_disc.contains(&te.child) && effective.at(te.child) + effective.at(te.parent) < 2.0 * ob - 1e-9 {
            return Some(format!("p2p edge {}-{} blocked after overrides", inst.id(te.child), inst.id(te.parent)));
        }
    }
    None
}

struct Sweep {
    plans: Vec<(PlanningInstance, PlanArtifacts, PlanArtifacts)>,
}

fn sweep(count: u64) -> Sweep {
    let plans = (0..count)
        .map(|i| {
            let inst = generate(&pipeline_params(i)).expect("generate");
            let plain = execute(&inst, HybridOrder::None).expect("plain pipeline");
            let hybrid = execute(&inst, HybridOrder::MpOmni).expect("hybrid pipeline");
            (inst, plain, hybrid)
        })
        .collect();
    Sweep { plans }
}

fn criterion_4(s: &Sweep) -> Outcome {
    let mut single = 0;
    for (inst, plain, _) in &s.plans {
        if let Some(msg) = capacity_violation(inst, plain) {
            return fail(msg);
        }
        single += usize::from(plain.bounds.case == BoundCase::SingleLink);
    }
    if single == 0 {
        return fail("no single-link instance in the sample".into());
    }
    pass(format!("{} plans feasible and conserving, {single} single-link plans with one copy per edge", s.plans.len()))
}

fn criterion_5(s: &Sweep) -> Outcome {
    let mut edges = 0;
    let mut overridden = 0;
    for (inst, plain, hybrid) in &s.plans {
        for art in [plain, hybrid] {
            if let Some(msg) = los_violation(inst, art) {
                return fail(msg);
            }
            edges += art.solution.tree.edge_count();
        }
        overridden += usize::from(hybrid.hybrid.as_ref().is_some_and(|p| !p.height_overrides.is_empty()));
    }
    pass(format!("{edges} tree edges clear, {overridden} plans with height overrides"))
}

fn criterion_6(s: &Sweep) -> Outcome {
    let (mut mp, mut omni) = (0, 0);
    for (i, (inst, plain, hy)) in s.plans.iter().enumerate() {
        let p = hy.hybrid.as_ref().expect("hybrid plan");
        if plain.solution.tree != hy.solution.tree || plain.capacity != hy.capacity {
            return fail(format!("sample {i}: hyperlinks changed the tree or flows"));
        }
        if p.cost_after.total > p.cost_before.total || (p.adopted() > 0 && p.cost_after.total >= p.cost_before.total) {
            return fail(format!(
                "cost went {} -> {} with {} configs",
                p.cost_before.total,
                p.cost_after.total,
                p.adopted()
            ));
        }
        if (p.cost_before.total - plain.cost.total).abs() > 1e-9 {
            return fail("cost before hyperlinks differs from the plain plan".into());
        }
        if let Err(e) = verify_hybrid(inst, &hy.solution.heights, &hy.solution.tree, &hy.capacity, p) {
            return fail(e.to_string());
        }
        let doc = PlanDocument::build(inst, hy, false).expect("document");
        if let Err(e) = validate(inst, &doc) {
            return fail(format!("document does not validate: {e}"));
        }
        mp += p.mp.len();
        omni += p.omni.len();
    }
    if mp == 0 || omni == 0 {
        return fail(format!("sample exercised {mp} sector and {omni} omni configs"));
    }
    pass(format!("{} runs monotone, {mp} sector and {omni} omni configs re-verified", s.plans.len()))
}

fn criterion_7() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 2000, failure_persistence: None, ..Config::default() });
    let exact = runner.run(&(0u32..1_000_000, 1u32..10_000), |(f, u)| {
        let (f, u) = (f as f64, u as f64);
        let r = residual_capacity(f, u);
        let expected = u * (f / u).ceil() - f;
        if r != expected || !(0.0..u).contains(&r) {
            return Err(TestCaseError::fail(format!("f={f} U={u}: residual {r}, expected {expected}")));
        }
        if (f == 0.0 || f % u == 0.0) && r != 0.0 {
            return Err(TestCaseError::fail(format!("f={f} U={u}: residual {r} should be 0")));
        }
        Ok(())
    });
    let real = runner.run(&(0.0f64..1e6, 0.5f64..1e4), |(f, u)| {
        let r = residual_capacity(f, u);
        let expected = u * (f / u).ceil() - f;
        if (r - expected).abs() > 1e-9 * u.max(1.0) || r < 0.0 || r >= u {
            return Err(TestCaseError::fail(format!("f={f} U={u}: residual {r}, expected {expected}")));
        }
        Ok(())
    });
    match (exact, real) {
        (Ok(()), Ok(())) => pass("4000 random (f, U) pairs, integer and real".into()),
        (Err(e), _) => fail(e.to_string()),
        (_, Err(e)) => fail(e.to_string()),
    }
}

fn criterion_8() -> Outcome {
    let c1 = performance_ratio_bound(10, 5, 1.0, BoundCase::SingleLink).unwrap();
    let c2 = performance_ratio_bound(10, 5, 5.0, BoundCase::Uniform).unwrap();
    let detail = format!("single link {c1:.6} (6.1052), uniform gamma 5 {c2:.6} (9.8026)");
    if (c1 - 6.1052).abs() <= 1e-4 && (c2 - 9.8026).abs() <= 1e-4 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name).display().to_string();
    let mut checked = 0;
    for seed in [3u64, 17, 91] {
        let (g1, g2) = (path(&format!("gen{seed}a.json")), path(&format!("gen{seed}b.json")));
        let s = seed.to_string();
        for out in [&g1, &g2] {
            let o = meshplan(&[
                "gen",
                "--seed",
                &s,
                "--terminals",
                "9",
                "--non-terminals",
                "3",
                "--area",
                "5000",
                "-o",
                out,
            ]);
            if !o.status.success() {
                return fail(format!("gen failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
        }
        if !same_bytes(Path::new(&g1), Path::new(&g2)) {
            return fail(format!("gen --seed {seed} differs between runs"));
        }
        for hybrid in ["none", "mp,omni", "omni,mp"] {
            let (p1, p2) = (path("plan_a.json"), path("plan_b.json"));
            for out in [&p1, &p2] {
                let o = meshplan(&["plan", &g1, "--hybrid", hybrid, "--trace", "-o", out]);
                if !o.status.success() {
                    return fail(format!("plan failed: {}", String::from_utf8_lossy(&o.stderr)));
                }
            }
            if !same_bytes(Path::new(&p1), Path::new(&p2)) {
                return fail(format!("plan of seed {seed} with --hybrid={hybrid} differs between runs"));
            }
            checked += 1;
        }
    }
    let opts = PlanOptions::default();
    let inst = generate(&pipeline_params(7)).unwrap();
    let a = meshplan::run_pipeline(&inst, opts).unwrap().to_json().unwrap();
    let b = meshplan::run_pipeline(&inst, opts).unwrap().to_json().unwrap();
    if a != b {
        return fail("library pipeline output differs between runs".into());
    }
    pass(format!("{checked} plan pairs and 3 generated instances byte-identical"))
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    fs::read(a).unwrap() == fs::read(b).unwrap()
}

fn main() {
    let start = Instant::now();
    let sample = sweep(500);
    let results = [
        ("greedy tower cost within 2 ln|A| of the optimum", criterion_1()),
        ("star ratio matches exhaustive star search", criterion_2()),
        ("worst-case chain hub distance", criterion_3()),
        ("capacity feasibility and conservation", criterion_4(&sample)),
        ("line of sight on every tree edge", criterion_5(&sample)),
        ("hyperlinks lower cost and keep the tree", criterion_6(&sample)),
        ("residual capacity", criterion_7()),
        ("bound formulas", criterion_8()),
        ("deterministic output", criterion_9()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        println!("{} {}. {name}: {}", if r.ok { "PASS" } else { "FAIL" }, i + 1, r.detail);
        failed += usize::from(!r.ok);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
