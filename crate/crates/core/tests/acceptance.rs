//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adaptive_signal::controller::{webster_schedule, ControlMode, ControllerError, SignalTiming};
use adaptive_signal::flow_model::{fit_speed_density, FlowModelParams, SpeedDensitySample};
use adaptive_signal::metrics::{self, MetricsReport};
use adaptive_signal::road::LaneId;
use adaptive_signal::sensing::{
    ApproachScene, CounterState, SectorLayout, VehicleSighting, VirtualCamera, VirtualCameraConfig,
};
use adaptive_signal::simulator::{run, RunOutput, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const METRICS_REL_TOL: f64 = 0.01;
const METRICS_MAX_RUNTIME: Duration = Duration::from_secs(1);
const GREEN_TOL_S: f64 = 0.1;
const MAX_FLOW_TARGET: f64 = 1679.0;
const MAX_FLOW_TOL: f64 = 1.0;
const FIT_REL_TOL: f64 = 1e-9;
const COUNTER_STREAMS: usize = 200;
const COUNTER_MAX_DROPOUT: f64 = 0.5;
const COUNTER_MIN_ACCURACY: f64 = 0.96;
const SPLIT_MIN_SAVING_PCT: f64 = 25.0;
const RUN_MAX_WALL: Duration = Duration::from_secs(5);
const MIN_GREEN_SEPARATION_S: f64 = 6.0;
const GRID_N: usize = 100;
const GRID_MAX_Y: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// (avg speed km/h, sim time min, reference s lost per pass)
const SPEED_ROWS: [(&str, f64, f64, f64); 16] = [
    ("0.100 fixed", 56.322, 15.2, 11.797),
    ("0.100 adaptive", 56.046, 11.7, 12.701),
    ("0.125 fixed", 54.226, 15.2, 19.211),
    ("0.125 adaptive", 54.898, 10.8, 16.732),
    ("0.150 fixed", 53.704, 15.2, 21.147),
    ("0.150 adaptive", 54.551, 10.7, 17.980),
    ("0.175 fixed", 48.716, 15.2, 41.742),
    ("0.175 adaptive", 51.303, 10.8, 30.517),
    ("50/50 fixed", 53.704, 15.0, 21.147),
    ("50/50 adaptive", 54.551, 10.7, 17.980),
    ("60/40 fixed", 51.178, 15.0, 31.027),
    ("60/40 adaptive", 51.267, 11.4, 30.663),
    ("70/30 fixed", 46.198, 15.0, 53.774),
    ("70/30 adaptive", 50.518, 11.1, 33.784),
    ("80/20 fixed", 40.953, 15.0, 83.716),
    ("80/20 adaptive", 48.007, 11.0, 44.982),
];

fn metrics_round_trip() -> Outcome {
    let start = Instant::now();
    let mut worst: (f64, &str) = (0.0, "");
    for (label, speed, minutes, expected) in SPEED_ROWS {
        let total = metrics::total_time_lost(speed, 60.0, minutes);
        let passes = metrics::average_pass(minutes, total, metrics::DEFAULT_CYCLE_TIME_MIN);
        let Ok(lost) = metrics::average_time_lost(total, passes) else {
            return outcome(false, format!("{label}: no passes"));
        };
        let rel = (lost - expected).abs() / expected;
        if rel > worst.0 {
            worst = (rel, label);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst.0 <= METRICS_REL_TOL && elapsed < METRICS_MAX_RUNTIME,
        format!("16 rows, worst {:.3}% ({}), {:?}", worst.0 * 100.0, worst.1, elapsed),
    )
}

// (reference greens A/B, reference cycle)
const GREEN_ROWS: [(f64, f64, f64); 8] = [
    (13.7, 14.1, 39.8),
    (19.3, 18.4, 49.7),
    (25.3, 25.4, 62.7),
    (38.8, 39.4, 90.2),
    (25.3, 25.4, 62.7),
    (31.6, 21.6, 65.2),
    (36.9, 16.3, 65.2),
    (42.1, 10.6, 64.7),
];

fn webster_regression() -> Outcome {
    let timing = SignalTiming::default();
    let lost = 2.0 * (timing.amber + timing.all_red);
    let mut worst = 0.0f64;
    for (ga, gb, cycle) in GREEN_ROWS {
        if (ga + gb + lost - cycle).abs() > 1e-9 {
            return outcome(false, format!("reference row {ga}/{gb} does not sum to {cycle}"));
        }
        // back-solve: C0 = G_a + G_b + L, Y = 1 - 1.5 L / C0, split by green share
        let c0 = ga + gb + lost;
        let y = 1.0 - 1.5 * lost / c0;
        let (ya, yb) = (y * ga / (ga + gb), y * gb / (ga + gb));
        let w = match webster_schedule(ya, yb, &timing) {
            Ok(w) => w,
            Err(e) => return outcome(false, format!("{ya}/{yb}: {e}")),
        };
        if w.cycle != w.green_a + w.green_b + lost {
            return outcome(false, format!("cycle {} is not G_a + G_b + {lost}", w.cycle));
        }
        worst = worst.max((w.green_a - ga).abs()).max((w.green_b - gb).abs());
    }
    outcome(worst <= GREEN_TOL_S, format!("8 rows, worst green error {worst:.2e} s"))
}

fn calibration_target() -> Outcome {
    let q = FlowModelParams::default().max_flow();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let vf = rng.gen_range(30.0..130.0);
        let kj = rng.gen_range(60.0..220.0);
        let samples: Vec<_> = (0..25)
            .map(|_| {
                let k = rng.gen_range(0.0..kj);
                SpeedDensitySample::new(k, vf - vf / kj * k)
            })
            .collect();
        match fit_speed_density(&samples) {
            Ok(p) => {
                worst = worst
                    .max((p.free_flow_speed - vf).abs() / vf)
                    .max((p.jam_density - kj).abs() / kj);
            }
            Err(e) => return outcome(false, format!("fit failed: {e}")),
        }
    }
    outcome(
        (q - MAX_FLOW_TARGET).abs() <= MAX_FLOW_TOL && worst <= FIT_REL_TOL,
        format!("max_flow {q:.2} veh/h, worst fit error {worst:.1e} over 50 lines"),
    )
}

/// Vehicles entering the camera view at known times and constant speeds.
struct Stream {
    /// (entry time s, speed m/s)
    vehicles: Vec<(f64, f64)>,
    time: f64,
}

const VIEW_START: f64 = -40.0;

impl ApproachScene for Stream {
    fn approach_positions(&self, _lane: LaneId) -> Vec<VehicleSighting> {
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(_, (t0, _))| self.time >= *t0)
            .map(|(i, (t0, v))| VehicleSighting {
                vehicle_id: i as u32,
                pass: 0,
                position: VIEW_START + v * (self.time - t0),
            })
            .collect()
    }
}

struct StreamResult {
    counted: usize,
    truth: usize,
    duplicates: usize,
}

fn count_stream(seed: u64, dropout: f64) -> StreamResult {
    const FPS: f64 = 5.0;
    const SECTOR: f64 = 15.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 30;
    let mut t = 0.0;
    let mut vehicles = Vec::with_capacity(n);
    for _ in 0..n {
        t += rng.gen_range(1.5..6.0);
        // slowest 5 m/s, fastest 60 km/h: at least 4.5 frames in sector one
        vehicles.push((t, rng.gen_range(5.0..60.0 / 3.6)));
    }
    let end = t + (-VIEW_START) / 5.0 + 2.0;
    let lane = LaneId(0);
    let mut camera = VirtualCamera::new(VirtualCameraConfig {
        dropout_probability: dropout,
        ..VirtualCameraConfig::new(lane, seed)
    })
    .unwrap();
    let layout = SectorLayout::at_stop_line(lane, SECTOR).unwrap();
    let mut counter = CounterState::new(FPS);
    let mut scene = Stream { vehicles, time: 0.0 };
    let mut seen = BTreeSet::new();
    let mut duplicates = 0;
    let mut frame = 0u64;
    while scene.time <= end {
        let obs = camera.observe(&scene, frame);
        for id in counter.update(&layout, &obs, frame) {
            if !seen.insert(id) {
                duplicates += 1;
            }
        }
        frame += 1;
        scene.time = frame as f64 / FPS;
    }
    // every vehicle crosses the sector boundary before `end`
    StreamResult { counted: counter.count as usize, truth: n, duplicates }
}

fn counter_accuracy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut counted, mut truth, mut dups) = (0, 0, 0);
    let mut bands = [(0usize, 0usize); 5];
    for i in 0..COUNTER_STREAMS {
        let p = rng.gen_range(0.0..=COUNTER_MAX_DROPOUT);
        let r = count_stream(1000 + i as u64, p);
        counted += r.counted;
        truth += r.truth;
        dups += r.duplicates;
        let b = ((p / COUNTER_MAX_DROPOUT * 5.0) as usize).min(4);
        bands[b].0 += r.counted;
        bands[b].1 += r.truth;
    }
    let accuracy = counted as f64 / truth as f64;

    let (mut clean_counted, mut clean_truth) = (0, 0);
    let (mut worst_counted, mut worst_truth) = (0, 0);
    for i in 0..COUNTER_STREAMS {
        let r = count_stream(5000 + i as u64, 0.0);
        clean_counted += r.counted;
        clean_truth += r.truth;
        dups += r.duplicates;
        let r = count_stream(9000 + i as u64, COUNTER_MAX_DROPOUT);
        worst_counted += r.counted;
        worst_truth += r.truth;
        dups += r.duplicates;
    }
    let band_text: Vec<String> = bands
        .iter()
        .enumerate()
        .map(|(i, (c, t))| format!("p<{:.1}: {:.3}", (i + 1) as f64 * 0.1, *c as f64 / *t as f64))
        .collect();
    outcome(
        accuracy >= COUNTER_MIN_ACCURACY && clean_counted == clean_truth && dups == 0,
        format!(
            "{COUNTER_STREAMS} streams with dropout uniform on [0, {COUNTER_MAX_DROPOUT}]: {accuracy:.4} [{}]; \
             dropout 0: {clean_counted}/{clean_truth}; all at {COUNTER_MAX_DROPOUT}: {:.3} (reported only); duplicates {dups}",
            band_text.join(", "),
            worst_counted as f64 / worst_truth as f64
        ),
    )
}

struct SweepRun {
    output: RunOutput,
    report: MetricsReport,
    wall: Duration,
}

fn sweep() -> Result<Vec<SweepRun>, String> {
    let mut runs = Vec::new();
    for base in ScenarioConfig::equal_flow_grid().into_iter().chain(ScenarioConfig::split_flow_grid()) {
        for mode in [ControlMode::Fixed, ControlMode::Adaptive] {
            let config = ScenarioConfig { mode, ..base.clone() };
            let start = Instant::now();
            let output = run(&config).map_err(|e| format!("{} {mode}: {e}", config.label))?;
            let wall = start.elapsed();
            let report = MetricsReport::from_run(&output).map_err(|e| e.to_string())?;
            runs.push(SweepRun { output, report, wall });
        }
    }
    Ok(runs)
}

fn controller_benefit(runs: &[SweepRun]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in runs.chunks(2) {
        let (f, a) = (&pair[0].report, &pair[1].report);
        let saved = match metrics::compare(f, a) {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let split = f.label.starts_with("ratio");
        let pass = if split {
            a.average_time_lost <= f.average_time_lost
                && (f.label != "ratio 80/20" || saved >= SPLIT_MIN_SAVING_PCT)
        } else {
            f.label == "flow 0.100" || a.average_time_lost <= f.average_time_lost
        };
        ok &= pass;
        parts.push(format!(
            "{} {:.1}/{:.1} s ({saved:+.1}%){}",
            f.label,
            f.average_time_lost,
            a.average_time_lost,
            if pass { "" } else { " <-- short" }
        ));
    }
    let slowest = runs.iter().map(|r| r.wall).max().unwrap_or_default();
    ok &= slowest < RUN_MAX_WALL;
    parts.push(format!("slowest run {slowest:?}"));
    outcome(ok, parts.join("; "))
}

fn safety_and_determinism(runs: &[SweepRun]) -> Outcome {
    let mut min_gap = f64::INFINITY;
    let mut min_sep = f64::INFINITY;
    for r in runs {
        let o = &r.output;
        let s = &o.safety;
        min_gap = min_gap.min(s.min_gap);
        min_sep = min_sep.min(s.min_green_separation);
        let population: usize = o.config.lane_populations().iter().sum();
        let samples = o.trace.len();
        if s.min_gap < 0.0 || s.red_crossings != 0 || s.max_simultaneous_greens > 1 {
            return outcome(false, format!("{} {}: {s:?}", o.config.label, o.config.mode));
        }
        if s.min_green_separation < MIN_GREEN_SEPARATION_S - 1e-9 {
            return outcome(false, format!("{}: green separation {}", o.config.label, s.min_green_separation));
        }
        if o.trace.vehicles() != population || o.trace.samples.iter().any(|row| row.len() != samples) {
            return outcome(false, format!("{}: vehicle count changed", o.config.label));
        }
        let again = match run(&o.config) {
            Ok(x) => x,
            Err(e) => return outcome(false, e.to_string()),
        };
        let bits = |out: &RunOutput| -> Vec<u64> { out.trace.samples.iter().flatten().map(|v| v.to_bits()).collect() };
        if bits(o) != bits(&again) || again.schedule_log != o.schedule_log || again.windows != o.windows {
            return outcome(false, format!("{} {}: rerun differs", o.config.label, o.config.mode));
        }
    }
    outcome(
        true,
        format!("{} runs, min gap {min_gap:.2} m, min green separation {min_sep:.2} s, reruns bit-identical", runs.len()),
    )
}

fn saturation_handling() -> Outcome {
    let timing = SignalTiming::default();
    let axis: Vec<f64> = (0..GRID_N).map(|i| i as f64 * GRID_MAX_Y / (GRID_N - 1) as f64).collect();
    let mut points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).collect();
    // sums of exactly one
    points.extend([(0.5, 0.5), (0.25, 0.75), (1.0, 0.0), (0.0, 1.0), (0.375, 0.625)]);
    let mut exact_one = 0;
    for (ya, yb) in points {
        match webster_schedule(ya, yb, &timing) {
            Ok(w) => {
                let finite = [w.ideal_cycle, w.green_a, w.green_b, w.cycle].iter().all(|v| v.is_finite());
                if !finite || w.green_a < timing.min_green || w.green_b < timing.min_green {
                    return outcome(false, format!("({ya}, {yb}) -> {w:?}"));
                }
                if ya + yb == 1.0 {
                    exact_one += 1;
                }
            }
            // no demand on either road: the controller keeps its running plan
            Err(ControllerError::BothZero) if ya == 0.0 && yb == 0.0 => {}
            Err(e) => return outcome(false, format!("({ya}, {yb}): {e}")),
        }
    }
    outcome(
        exact_one >= 5,
        format!("{GRID_N}x{GRID_N} grid on [0, {GRID_MAX_Y}]^2 finite and floored, {exact_one} points with Y = 1, (0, 0) -> BothZero"),
    )
}

fn main() -> ExitCode {
    let mut results = vec![
        ("1 metrics round-trip", metrics_round_trip()),
        ("2 webster regression", webster_regression()),
        ("3 calibration target", calibration_target()),
        ("4 counter accuracy", counter_accuracy()),
    ];
    match sweep() {
        Ok(runs) => {
            results.push(("5 controller benefit", controller_benefit(&runs)));
            results.push(("6 safety/determinism", safety_and_determinism(&runs)));
        }
        Err(e) => {
            results.push(("5 controller benefit", outcome(false, e.clone())));
            results.push(("6 safety/determinism", outcome(false, e)));
        }
    }
    results.push(("7 saturation handling", saturation_handling()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
