//! Acceptance criteria 1-8. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails. Oracles here are written against
//! the public API only and do not reuse the search internals.
//!
//! Pinned tolerances:
//! * criteria 1 and 3 compare scores and masks bit for bit;
//! * criterion 4 accepts a segment gap sequence as non-decreasing when each
//!   step drops by at most `MONOTONE_SLACK`;
//! * criterion 7 allows `WEIGHT_ENDPOINT_TOL` on the extreme modulation
//!   weights, since `lo + (hi - lo)` need not round back to `hi`;
//! * everything else compares exactly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use treemem::backend::{DecodeRequest, DecodeResponse, DecoderBackend, FrameRef, Script, ScriptedBackend};
use treemem::bench::{run_scenario, GreedyOptions, ScenarioRun, TrackSettings};
use treemem::memory::{
    compute_modulation_weights, select_memory_frames, BankEntry, MemoryBankView, MemoryBuilder, MemoryPolicy,
};
use treemem::metrics::region_j;
use treemem::search::{brute_force_best, finalize, step, track, SearchOptions, DEFAULT_ENUMERATION_CAP};
use treemem::simworld::{generate_scenario_suite, SimDecoder, SimWorld};
use treemem::types::{BeamState, CommittedFrame, FrameRecord, Pathway, PathwayNode};
use treemem::{Hyperparams, Mask};

/// Seed of the 200-scenario occlusion suite. The simulator was tuned while
/// looking at seed 0 only; this seed was held out.
const SUITE_SEED: u64 = 20_261_016;
const SUITE_SIZE: usize = 200;
const POST_OCCLUSION_MIN_GAP: f64 = 0.10;
const MONOTONE_FRACTION: f64 = 0.80;
const MONOTONE_SLACK: f64 = 1e-9;
const WEIGHT_ENDPOINT_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn prompt() -> FrameRecord {
    let mask = Mask::from_fn(16, 12, |x, y| (4..11).contains(&x) && (3..8).contains(&y)).unwrap();
    FrameRecord::prompt(0, mask, b"prompt".to_vec())
}

fn frames(t: u32) -> Vec<FrameRef> {
    (1..=t).map(FrameRef::index).collect()
}

// ---------------------------------------------------------------- oracle

/// One fully enumerated pathway: branch indices and the score after each step.
struct Enumerated {
    path: Vec<u8>,
    scores: Vec<f64>,
}

fn enumerate(
    node: &Pathway,
    path: &mut Vec<u8>,
    scores: &mut Vec<f64>,
    horizon: u32,
    backend: &dyn DecoderBackend,
    memory: &MemoryPolicy,
    epsilon: f64,
    out: &mut Vec<Enumerated>,
) {
    let t = node.depth as u32;
    if t == horizon {
        out.push(Enumerated { path: path.clone(), scores: scores.clone() });
        return;
    }
    let request = DecodeRequest {
        object_id: 0,
        time: t + 1,
        frame: FrameRef::index(t + 1),
        bank: memory.build(node, t + 1),
    };
    let response = backend.decode(&request).unwrap();
    for (k, cand) in response.candidates.iter().enumerate() {
        // S_child = S_parent + ln(iou + eps).
        let score = node.cumulative_score + (cand.predicted_iou + epsilon).ln();
        let child = PathwayNode::child(node, FrameRecord::committed(t + 1, cand.clone()), score, k as u8);
        path.push(k as u8);
        scores.push(score);
        enumerate(&child, path, scores, horizon, backend, memory, epsilon, out);
        path.pop();
        scores.pop();
    }
}

/// Documented tie-break: higher score first; on equal scores the pathway
/// whose parent ranks first wins; siblings go by candidate index.
fn rank(a: &Enumerated, b: &Enumerated, depth: usize) -> Ordering {
    let (sa, sb) = (a.scores[depth - 1], b.scores[depth - 1]);
    if sa.to_bits() != sb.to_bits() {
        return sb.total_cmp(&sa);
    }
    if a.path[..depth - 1] == b.path[..depth - 1] {
        return a.path[depth - 1].cmp(&b.path[depth - 1]);
    }
    rank(a, b, depth - 1)
}

fn oracle_best(backend: &dyn DecoderBackend, horizon: u32, h: &Hyperparams) -> Enumerated {
    let mut all = Vec::new();
    let root = PathwayNode::root(prompt());
    enumerate(&root, &mut Vec::new(), &mut Vec::new(), horizon, backend, &MemoryPolicy::object_aware(h), h.epsilon, &mut all);
    assert_eq!(all.len(), 3usize.pow(horizon));
    all.into_iter().min_by(|a, b| rank(a, b, horizon as usize)).unwrap()
}

struct Fixture {
    seed: u64,
    horizon: u32,
    backend: ScriptedBackend,
}

/// Randomized scripted fixtures with T cycling through 3..=8. IoUs are
/// quantized to tenths, which produces plenty of exact score ties.
fn oracle_fixtures() -> Vec<Fixture> {
    (0..50u64)
        .map(|i| Fixture {
            seed: 1_000 + i,
            horizon: 3 + (i % 6) as u32,
            backend: ScriptedBackend::seeded(1_000 + i, Some(10), 3.0),
        })
        .collect()
}

fn criterion_1(fixtures: &[Fixture]) -> (Verdict, Vec<f64>) {
    let start = Instant::now();
    let results: Vec<(bool, f64, String)> = fixtures
        .par_iter()
        .map(|f| {
            let h = Hyperparams { pathways: 3usize.pow(f.horizon), ..Hyperparams::default() };
            let memory = MemoryPolicy::object_aware(&h);
            let (masklet, _) =
                track(0, prompt(), &frames(f.horizon), &f.backend, &memory, &h, SearchOptions::default()).unwrap();
            let best = oracle_best(&f.backend, f.horizon, &h);
            let best_score = *best.scores.last().unwrap();
            let (lib, lib_score) = brute_force_best(
                &PathwayNode::root(prompt()),
                0,
                &frames(f.horizon),
                &f.backend,
                &memory,
                &h,
                DEFAULT_ENUMERATION_CAP,
            )
            .unwrap();
            let ok = masklet.leaf.branch_path() == best.path
                && masklet.score.to_bits() == best_score.to_bits()
                && lib.branch_path() == best.path
                && lib_score.to_bits() == best_score.to_bits();
            let note = format!("seed {} T={} tree {:?} oracle {:?}", f.seed, f.horizon, masklet.leaf.branch_path(), best.path);
            (ok, best_score, note)
        })
        .collect();
    let elapsed = start.elapsed();
    let matched = results.iter().filter(|r| r.0).count();
    let first_bad = results.iter().find(|r| !r.0).map(|r| format!("; first mismatch: {}", r.2)).unwrap_or_default();
    let pass = matched == fixtures.len() && elapsed < Duration::from_secs(60);
    let detail = format!(
        "{matched}/{} fixtures (T in 3..=8) bit-exact against enumeration, {:.1} s (limit 60 s){first_bad}",
        fixtures.len(),
        elapsed.as_secs_f64()
    );
    (verdict(pass, detail), results.into_iter().map(|r| r.1).collect())
}

// ------------------------------------------------------------- dominance

/// Runs the beam step by step, keeping every intermediate beam.
fn beams(backend: &dyn DecoderBackend, horizon: u32, h: &Hyperparams) -> (Vec<BTreeSet<Vec<u8>>>, f64) {
    let memory = MemoryPolicy::object_aware(h);
    let mut state = BeamState::from_prompt(0, prompt());
    let mut history = Vec::new();
    for f in frames(horizon) {
        state = step(&state, &f, backend, &memory, h, SearchOptions::default()).unwrap().0;
        history.push(state.leaves.iter().map(|l| l.branch_path()).collect());
    }
    (history, finalize(&state).unwrap().score)
}

/// Memoryless fixture: fixed, tie-free IoUs per time step and confident
/// occlusion scores. Scores are then additive per step, so the beam of
/// width P holds exactly the global top-P prefixes and beams nest in P.
fn per_time_fixture(seed: u64, horizon: u32) -> ScriptedBackend {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = prompt().mask;
    let table: BTreeMap<u32, DecodeResponse> = (1..=horizon)
        .map(|t| {
            let item = |k: usize, rng: &mut ChaCha8Rng| {
                let mask = if k == 0 { base.clone() } else { base.erode_cross(k as u32) };
                (mask, rng.random_range(0.05..1.0), vec![k as u8])
            };
            let items = [item(0, &mut rng), item(1, &mut rng), item(2, &mut rng)];
            let occ = rng.random_range(3.0..5.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            (t, DecodeResponse::new(occ, items))
        })
        .collect();
    ScriptedBackend::new(Script::PerTime(table))
}

fn criterion_2(fixtures: &[Fixture], oracle_scores: &[f64]) -> Verdict {
    let start = Instant::now();
    let ps = [1usize, 2, 3, 4];

    // Dominance on the oracle fixtures.
    let dominated = fixtures
        .par_iter()
        .zip(oracle_scores)
        .map(|(f, &best)| {
            ps.iter().all(|&p| {
                let h = Hyperparams { pathways: p, ..Hyperparams::default() };
                beams(&f.backend, f.horizon, &h).1 <= best
            })
        })
        .filter(|&ok| ok)
        .count();

    // Monotonicity where beams nest. Memoryless fixtures nest by
    // construction; memory-dependent tie-free fixtures are checked as they come.
    let check = |backend: &ScriptedBackend, horizon: u32| -> (usize, usize, usize) {
        let runs: Vec<_> = ps
            .iter()
            .map(|&p| beams(backend, horizon, &Hyperparams { pathways: p, ..Hyperparams::default() }))
            .collect();
        let (mut nested, mut monotone_when_nested, mut monotone_any) = (0, 0, 0);
        for w in runs.windows(2) {
            let is_nested = w[0].0.iter().zip(&w[1].0).all(|(small, big)| small.is_subset(big));
            let mono = w[0].1 <= w[1].1;
            nested += usize::from(is_nested);
            monotone_when_nested += usize::from(is_nested && mono);
            monotone_any += usize::from(mono);
        }
        (nested, monotone_when_nested, monotone_any)
    };
    let memoryless: Vec<_> =
        (0..50u64).into_par_iter().map(|i| check(&per_time_fixture(5_000 + i, 3 + (i % 6) as u32), 3 + (i % 6) as u32)).collect();
    let bank_dependent: Vec<_> = (0..50u64)
        .into_par_iter()
        .map(|i| check(&ScriptedBackend::seeded(7_000 + i, None, 3.0), 3 + (i % 6) as u32))
        .collect();
    let sum = |v: &[(usize, usize, usize)]| v.iter().fold((0, 0, 0), |a, x| (a.0 + x.0, a.1 + x.1, a.2 + x.2));
    let (ml_nested, ml_mono, _) = sum(&memoryless);
    let (bd_nested, bd_mono, bd_any) = sum(&bank_dependent);
    let pairs = 50 * (ps.len() - 1);
    let elapsed = start.elapsed();
    let pass = dominated == fixtures.len()
        && ml_nested == pairs
        && ml_mono == pairs
        && bd_mono == bd_nested
        && elapsed < Duration::from_secs(60);
    verdict(
        pass,
        format!(
            "score <= oracle for P in 1..=4 on {dominated}/{} fixtures; memoryless tie-free: {ml_nested}/{pairs} P-pairs nested, \
             {ml_mono} monotone; memory-dependent tie-free: {bd_mono}/{bd_nested} nested pairs monotone \
             ({bd_any}/{pairs} monotone overall); {:.1} s (limit 60 s)",
            fixtures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------- greedy/FIFO

/// Hand-rolled greedy tracker: a FIFO of the N most recent committed
/// frames plus the prompt, unit weights, argmax predicted IoU with the
/// lowest candidate index winning ties.
fn fifo_reference(backend: &dyn DecoderBackend, horizon: u32, n: usize) -> Vec<FrameRecord> {
    let prompt = Arc::new(prompt());
    let mut fifo: VecDeque<Arc<FrameRecord>> = VecDeque::new();
    let mut out = vec![(*prompt).clone()];
    for t in 1..=horizon {
        let mut entries = vec![BankEntry { record: Arc::clone(&prompt), weight: 1.0 }];
        entries.extend(fifo.iter().map(|r| BankEntry { record: Arc::clone(r), weight: 1.0 }));
        let request = DecodeRequest {
            object_id: 0,
            time: t,
            frame: FrameRef::index(t),
            bank: MemoryBankView { entries, built_for_time: t },
        };
        let response = backend.decode(&request).unwrap();
        let mut best = 0;
        for k in 1..response.candidates.len() {
            if response.candidates[k].predicted_iou > response.candidates[best].predicted_iou {
                best = k;
            }
        }
        let record = Arc::new(FrameRecord::committed(t, response.candidates[best].clone()));
        fifo.push_back(Arc::clone(&record));
        if fifo.len() > n {
            fifo.pop_front();
        }
        out.push((*record).clone());
    }
    out
}

fn criterion_3() -> Verdict {
    let (horizon, n) = (30u32, 4usize);
    let results: Vec<bool> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let backend = ScriptedBackend::seeded(9_000 + i, Some(10), 3.0);
            let h = Hyperparams { memory_frames: n, ..Hyperparams::default() };
            let settings = TrackSettings::greedy(h, GreedyOptions::default());
            let (masklet, _) =
                track(0, prompt(), &frames(horizon), &backend, &settings.memory, &settings.hyper, settings.options).unwrap();
            let reference = fifo_reference(&backend, horizon, n);
            masklet.records.len() == reference.len()
                && masklet.records.iter().zip(&reference).all(|(a, b)| {
                    CommittedFrame::from(a.as_ref()) == CommittedFrame::from(b)
                        && a.predicted_iou.to_bits() == b.predicted_iou.to_bits()
                        && a.payload == b.payload
                })
        })
        .collect();
    let matched = results.iter().filter(|&&ok| ok).count();
    verdict(
        matched == results.len(),
        format!("strict greedy equals the FIFO reference on {matched}/{} fixtures (T={horizon}, N={n}), frame by frame", results.len()),
    )
}

// ------------------------------------------------------- occlusion suite

struct SuiteRuns {
    worlds: Vec<Arc<SimWorld>>,
    greedy: Vec<ScenarioRun>,
    tree: Vec<ScenarioRun>,
    single_thread: Duration,
}

fn run_all(worlds: &[Arc<SimWorld>], settings: &TrackSettings) -> Vec<ScenarioRun> {
    worlds
        .par_iter()
        .map(|w| run_scenario(w, &SimDecoder::new(Arc::clone(w)), settings).unwrap())
        .collect()
}

fn suite() -> SuiteRuns {
    let worlds: Vec<_> = generate_scenario_suite("occlusion", SUITE_SIZE, SUITE_SEED)
        .unwrap()
        .into_iter()
        .map(|s| Arc::new(SimWorld::new(s).unwrap()))
        .collect();
    let h = Hyperparams::default();
    let (greedy_s, tree_s) = (TrackSettings::greedy(h, GreedyOptions::default()), TrackSettings::tree(h));
    // Criterion 4 is timed on one thread.
    let start = Instant::now();
    let mut greedy = Vec::new();
    let mut tree = Vec::new();
    for w in &worlds {
        let backend = SimDecoder::new(Arc::clone(w));
        greedy.push(run_scenario(w, &backend, &greedy_s).unwrap());
        tree.push(run_scenario(w, &backend, &tree_s).unwrap());
    }
    SuiteRuns { worlds, greedy, tree, single_thread: start.elapsed() }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn suite_mean(runs: &[ScenarioRun]) -> f64 {
    mean(runs.iter().map(|r| r.summary.mean.jf))
}

fn criterion_4(s: &SuiteRuns) -> Verdict {
    let mut post_tree = Vec::new();
    let mut post_greedy = Vec::new();
    let mut monotone = 0usize;
    let mut well_formed = true;
    for ((w, t), g) in s.worlds.iter().zip(&s.tree).zip(&s.greedy) {
        let target = w.spec.target();
        well_formed &= w.spec.num_frames == 200
            && w.spec.objects[target].occlusion_windows.len() == 1
            && w.spec.objects.iter().any(|o| !o.is_target);
        let end = w.spec.objects[target].occlusion_windows[0][1];
        let post = |r: &ScenarioRun| mean(r.scores.iter().filter(|f| f.time > end).map(|f| f.jf));
        post_tree.push(post(t));
        post_greedy.push(post(g));
        let gaps: Vec<f64> = t.summary.segments.iter().zip(&g.summary.segments).map(|(a, b)| a.jf - b.jf).collect();
        if gaps.len() == 4 && gaps.windows(2).all(|p| p[1] >= p[0] - MONOTONE_SLACK) {
            monotone += 1;
        }
    }
    let gap = mean(post_tree.iter().copied()) - mean(post_greedy.iter().copied());
    let frac = monotone as f64 / s.worlds.len() as f64;
    let pass = well_formed
        && gap >= POST_OCCLUSION_MIN_GAP
        && frac >= MONOTONE_FRACTION
        && s.single_thread < Duration::from_secs(600);
    verdict(
        pass,
        format!(
            "post-occlusion J&F tree {:.3} vs greedy {:.3} (gap {gap:.3}, need >= {POST_OCCLUSION_MIN_GAP}); \
             segment gaps non-decreasing in {monotone}/{} scenarios ({:.1}%, need >= {:.0}%); \
             {:.1} s single-threaded (limit 600 s)",
            mean(post_tree.iter().copied()),
            mean(post_greedy.iter().copied()),
            s.worlds.len(),
            100.0 * frac,
            100.0 * MONOTONE_FRACTION,
            s.single_thread.as_secs_f64()
        ),
    )
}

fn criterion_5(s: &SuiteRuns) -> Verdict {
    let h = Hyperparams::default();
    let p1 = suite_mean(&run_all(&s.worlds, &TrackSettings::tree(Hyperparams { pathways: 1, ..h })));
    let p2 = suite_mean(&run_all(&s.worlds, &TrackSettings::tree(Hyperparams { pathways: 2, ..h })));
    let p3 = suite_mean(&s.tree);
    verdict(p1 < p2 && p2 <= p3, format!("mean J&F P=1 {p1:.4} < P=2 {p2:.4} <= P=3 {p3:.4}"))
}

/// Mean pairwise true IoU among the leaves kept on uncertain steps.
fn uncertain_pairwise_iou(world: &Arc<SimWorld>, h: &Hyperparams) -> (f64, usize) {
    let backend = SimDecoder::new(Arc::clone(world));
    let memory = MemoryPolicy::object_aware(h);
    let target = world.spec.target();
    let prompt = FrameRecord::prompt(0, world.mask(target, 0).clone(), b"prompt".to_vec());
    let mut state = BeamState::from_prompt(target as u32, prompt);
    let (mut total, mut steps) = (0.0, 0usize);
    for t in 1..world.spec.num_frames {
        let (next, trace) = step(&state, &FrameRef::index(t), &backend, &memory, h, SearchOptions::default()).unwrap();
        state = next;
        if !trace.uncertain || state.leaves.len() < 2 {
            continue;
        }
        let masks: Vec<&Mask> = state.leaves.iter().map(|l| &l.record.mask).collect();
        let mut pairs = Vec::new();
        for i in 0..masks.len() {
            for j in i + 1..masks.len() {
                pairs.push(region_j(masks[i], masks[j]).unwrap());
            }
        }
        total += mean(pairs);
        steps += 1;
    }
    (total, steps)
}

fn criterion_6(s: &SuiteRuns) -> Verdict {
    let h = Hyperparams::default();
    let off = Hyperparams { iou_rounding_decimals: None, ..h };
    let jf_on = suite_mean(&s.tree);
    let jf_off = suite_mean(&run_all(&s.worlds, &TrackSettings::tree(off)));
    let pairwise = |h: &Hyperparams| {
        let parts: Vec<(f64, usize)> = s.worlds.par_iter().map(|w| uncertain_pairwise_iou(w, h)).collect();
        let (t, n) = parts.iter().fold((0.0, 0), |a, p| (a.0 + p.0, a.1 + p.1));
        (t / n as f64, n)
    };
    let ((iou_on, n_on), (iou_off, n_off)) = (pairwise(&h), pairwise(&off));
    verdict(
        jf_off <= jf_on && iou_on < iou_off,
        format!(
            "mean J&F rounding off {jf_off:.4} <= on {jf_on:.4}; pairwise true IoU of kept candidates on uncertain steps \
             on {iou_on:.3} ({n_on} steps) < off {iou_off:.3} ({n_off} steps)"
        ),
    )
}

// ------------------------------------------------------- memory properties

fn record(frame: u32, iou: f64, occ: f64) -> FrameRecord {
    FrameRecord {
        frame_index: frame,
        mask: Mask::empty(4, 4).unwrap(),
        predicted_iou: iou,
        occlusion_score: occ,
        payload: Vec::new(),
        is_prompt: false,
    }
}

fn chain(records: &[(f64, f64)]) -> Pathway {
    let mut node = PathwayNode::root(FrameRecord::prompt(0, Mask::empty(4, 4).unwrap(), Vec::new()));
    for (i, &(iou, occ)) in records.iter().enumerate() {
        node = PathwayNode::child(&node, record(i as u32 + 1, iou, occ), 0.0, 0);
    }
    node
}

/// Values on a coarse grid hit the gate boundaries exactly.
fn gate_value(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    prop_oneof![(0..=8i32).prop_map(move |k| lo + (hi - lo) * f64::from(k) / 8.0), lo..hi]
}

fn memory_properties() -> Result<usize, String> {
    let mut runner = TestRunner::new(PropConfig { cases: 512, failure_persistence: None, ..PropConfig::default() });
    let mut cases = 0usize;

    let pathway = (prop::collection::vec((gate_value(0.0, 1.0), gate_value(-2.0, 2.0)), 0..20), 1usize..8, gate_value(0.0, 1.0));
    runner
        .run(&pathway, |(records, n, delta)| {
            let leaf = chain(&records);
            let picked = select_memory_frames(&leaf, n, delta);
            // Prompt inclusion: exactly one prompt, first.
            prop_assert!(picked[0].is_prompt);
            prop_assert_eq!(picked.iter().filter(|r| r.is_prompt).count(), 1);
            let rest = &picked[1..];
            // N cap and gate soundness.
            prop_assert!(rest.len() <= n);
            for r in rest {
                prop_assert!(r.predicted_iou > delta && r.occlusion_score > 0.0);
            }
            // Backward scan: the newest N passing frames, reported ascending.
            let mut expected: Vec<u32> = records
                .iter()
                .enumerate()
                .rev()
                .filter(|(_, &(iou, occ))| iou > delta && occ > 0.0)
                .take(n)
                .map(|(i, _)| i as u32 + 1)
                .collect();
            expected.reverse();
            prop_assert_eq!(rest.iter().map(|r| r.frame_index).collect::<Vec<_>>(), expected);
            Ok(())
        })
        .map_err(|e| format!("select_memory_frames: {e}"))?;
    cases += 512;

    let weights = (
        prop::collection::vec((-8i32..=8).prop_map(|k| f64::from(k) / 4.0), 1..12),
        0.5f64..1.0,
        1.0f64..1.5,
        prop::sample::select(vec![0.5, 2.0, 3.7]),
        prop::sample::select(vec![-1.0, 0.0, 2.5]),
    );
    runner
        .run(&weights, |(occ, lo, hi, scale, shift)| {
            let w = compute_modulation_weights(&occ, lo, hi);
            prop_assert_eq!(w.len(), occ.len());
            // Range.
            for &x in &w {
                prop_assert!(lo <= x && x <= hi);
            }
            // Rank assignment: ascending occlusion, ties by position.
            for i in 0..occ.len() {
                for j in 0..occ.len() {
                    if occ[i] < occ[j] || (occ[i] == occ[j] && i < j) {
                        prop_assert!(w[i] < w[j], "occ {:?} weights {:?}", occ, w);
                    }
                }
            }
            if occ.len() >= 2 {
                prop_assert_eq!(w.iter().copied().fold(f64::INFINITY, f64::min), lo);
                prop_assert!((w.iter().copied().fold(f64::NEG_INFINITY, f64::max) - hi).abs() <= WEIGHT_ENDPOINT_TOL);
            } else {
                prop_assert_eq!(w[0], (lo + hi) / 2.0);
            }
            // Scale and shift invariance.
            let moved: Vec<f64> = occ.iter().map(|o| o * scale + shift).collect();
            prop_assert_eq!(compute_modulation_weights(&moved, lo, hi), w);
            // [1, 1] is a no-op.
            prop_assert!(compute_modulation_weights(&occ, 1.0, 1.0).iter().all(|&x| x == 1.0));
            Ok(())
        })
        .map_err(|e| format!("compute_modulation_weights: {e}"))?;
    cases += 512;

    let banks = (prop::collection::vec((gate_value(0.0, 1.0), gate_value(-2.0, 2.0)), 0..15), 1usize..8);
    runner
        .run(&banks, |(records, n)| {
            let leaf = chain(&records);
            let h = Hyperparams { memory_frames: n, ..Hyperparams::default() };
            let bank = MemoryPolicy::object_aware(&h).build(&leaf, records.len() as u32 + 1);
            let frames: Vec<u32> = bank.entries.iter().map(|e| e.record.frame_index).collect();
            prop_assert!(frames.windows(2).all(|p| p[0] < p[1]));
            let occ: Vec<f64> = bank.entries.iter().map(|e| e.record.occlusion_score).collect();
            let w: Vec<f64> = bank.entries.iter().map(|e| e.weight).collect();
            prop_assert_eq!(w, compute_modulation_weights(&occ, h.w_low, h.w_high));
            // The prompt has the largest occlusion score and gets w_high
            // whenever it shares the bank.
            if bank.entries.len() > 1 {
                prop_assert!((bank.entries[0].weight - h.w_high).abs() <= WEIGHT_ENDPOINT_TOL);
            }
            let flat = MemoryPolicy { modulation: Some((1.0, 1.0)), ..MemoryPolicy::object_aware(&h) };
            prop_assert!(flat.build(&leaf, 0).entries.iter().all(|e| e.weight == 1.0));
            Ok(())
        })
        .map_err(|e| format!("bank construction: {e}"))?;
    cases += 512;
    Ok(cases)
}

fn criterion_7() -> Verdict {
    match memory_properties() {
        Ok(cases) => verdict(
            true,
            format!("{cases}/{cases} property cases passed (gate soundness, prompt inclusion, N cap, scan order, weight range, rank, scale invariance, [1,1])"),
        ),
        Err(e) => verdict(false, e),
    }
}

// ------------------------------------------------------------ determinism

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_treemem");
    let dir = tempfile::tempdir().unwrap();
    let scenarios =
        ["--scenario", "suite:occlusion:6:7", "--scenario", "suite:distractor:3:7", "--scenario", "suite:long:2:7", "--scenario", "suite:clean:2:7"];
    let mut checked = 0;
    let mut identical = 0;
    for mode in ["tree", "greedy"] {
        let mut snaps = Vec::new();
        for (tag, par) in [("a", "1"), ("b", "1"), ("c", "4"), ("d", "4")] {
            let out = dir.path().join(format!("{mode}-{tag}"));
            let status = Command::new(bin)
                .args(["run", "--mode", mode, "--svg", "--trace", "--parallelism", par, "--out"])
                .arg(&out)
                .args(scenarios)
                .env_remove("TREEMEM_OUT_DIR")
                .output()
                .unwrap();
            if !status.status.success() {
                return verdict(false, format!("run failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            snaps.push(snapshot(&out));
        }
        for s in &snaps[1..] {
            checked += 1;
            identical += usize::from(*s == snaps[0]);
        }
    }
    let files = snapshot(&dir.path().join("tree-a")).len();
    verdict(
        identical == checked,
        format!("{identical}/{checked} repeated runs byte-identical to the first ({files} files each; tree and greedy; parallelism 1 and 4)"),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut report = |n: u32, name: &'static str, v: Verdict| {
        println!("criterion {n} [{name}]: {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };

    let fixtures = oracle_fixtures();
    let (v1, oracle_scores) = criterion_1(&fixtures);
    report(1, "oracle equivalence", v1);
    report(2, "beam dominance", criterion_2(&fixtures, &oracle_scores));
    report(3, "greedy baseline fidelity", criterion_3());
    let suite = suite();
    report(4, "error accumulation", criterion_4(&suite));
    report(5, "pathway ablation", criterion_5(&suite));
    report(6, "diversity effect", criterion_6(&suite));
    report(7, "memory properties", criterion_7());
    report(8, "determinism", criterion_8());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
}
