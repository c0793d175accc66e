use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::telemetry::{
    Cohort, ForceQuartet, Orientation, QuartetScale, SensorFrame, SensorId, Session, SessionMeta, TaskKind,
    RAW_MAX, SENSOR_COUNT,
};

use super::{Archetype, SimProfile};

/// Frame spacing of generated sessions (50 Hz).
pub const SIM_STEP_MS: u32 = 20;
/// Idle readings are uniform in `0..=NOISE_MAX`.
pub const NOISE_MAX: u16 = 4;
/// Participant id stamped on generated sessions.
pub const SIM_PARTICIPANT: &str = "simulated";

const LEAD_MS: u32 = 400;
const TAIL_MS: u32 = 400;
const MIN_PRESS_MS: u32 = 400;
const MIN_GAP_MS: u32 = 160;
/// Peaks stay this far inside their quartet.
const PEAK_MARGIN: u16 = 15;
/// Lowest peak drawn, safely above the default onset threshold.
const MIN_PEAK: u16 = 70;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("infeasible profile: {0}")]
pub struct InfeasibleProfile(pub String);

/// One scheduled press envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedPress {
    pub sensor: SensorId,
    pub start_ms: u32,
    pub duration_ms: u32,
    pub peak: u16,
    pub quartet: ForceQuartet,
}

/// Peak range `[lo, hi]` that lands in `q` after noise is added.
fn peak_band(scale: QuartetScale, q: ForceQuartet) -> Option<(u16, u16)> {
    let lo = (scale.lower_edge(q) + PEAK_MARGIN).max(MIN_PEAK);
    let top = match q {
        ForceQuartet::Q4 => scale.bound(),
        _ => scale.lower_edge(ForceQuartet::ALL[q as usize + 1]),
    };
    let hi = top.checked_sub(PEAK_MARGIN + NOISE_MAX + 1)?;
    (lo <= hi).then_some((lo, hi))
}

fn validate(p: &SimProfile) -> Result<QuartetScale, InfeasibleProfile> {
    let bad = |m: String| Err(InfeasibleProfile(m));
    if p.total_presses() == 0 {
        return bad("no presses requested".into());
    }
    if p.quartets.is_empty() {
        return bad("no peak quartets given".into());
    }
    let [pmin, pmax] = p.press_ms;
    if pmin > pmax || pmin < MIN_PRESS_MS || pmin % 40 != 0 || pmax % 40 != 0 {
        return bad(format!("press_ms {:?} must be multiples of 40 with {MIN_PRESS_MS} <= min <= max", p.press_ms));
    }
    let [gmin, gmax] = p.gap_ms;
    if gmin > gmax || gmin < MIN_GAP_MS || gmin % SIM_STEP_MS != 0 || gmax % SIM_STEP_MS != 0 {
        return bad(format!("gap_ms {:?} must be multiples of 20 with {MIN_GAP_MS} <= min <= max", p.gap_ms));
    }
    let scale = QuartetScale::new(p.quartet_bound)
        .ok_or_else(|| InfeasibleProfile(format!("quartet bound {} too small", p.quartet_bound)))?;
    for &q in &p.quartets {
        if peak_band(scale, q).is_none() {
            return bad(format!("{q} is too narrow to target with bound {}", p.quartet_bound));
        }
    }
    if let Some(len) = p.session_ms {
        let n = u64::from(p.total_presses());
        let needed = u64::from(LEAD_MS + TAIL_MS) + n * u64::from(pmin) + (n - 1) * u64::from(gmin);
        if needed > u64::from(len) {
            return bad(format!(
                "{n} presses need at least {needed} ms but the session is {len} ms"
            ));
        }
    }
    Ok(scale)
}

/// Lay out the presses. Deterministic in `(profile, rng state)`.
fn plan(p: &SimProfile, scale: QuartetScale, rng: &mut ChaCha8Rng) -> Vec<PlannedPress> {
    let mut order: Vec<SensorId> = SensorId::ALL
        .iter()
        .flat_map(|&s| std::iter::repeat_n(s, p.press_counts[s] as usize))
        .collect();
    order.shuffle(rng);

    let mut presses: Vec<PlannedPress> = order
        .iter()
        .enumerate()
        .map(|(i, &sensor)| {
            let quartet = p.quartets[i % p.quartets.len()];
            let (lo, hi) = peak_band(scale, quartet).expect("validated");
            PlannedPress {
                sensor,
                start_ms: 0,
                duration_ms: 40 * rng.random_range(p.press_ms[0] / 40..=p.press_ms[1] / 40),
                peak: rng.random_range(lo..=hi),
                quartet,
            }
        })
        .collect();
    let mut gaps: Vec<u32> = (0..presses.len())
        .map(|_| SIM_STEP_MS * rng.random_range(p.gap_ms[0] / SIM_STEP_MS..=p.gap_ms[1] / SIM_STEP_MS))
        .collect();

    if let Some(len) = p.session_ms {
        let used: u64 = presses.iter().map(|x| u64::from(x.duration_ms)).sum::<u64>()
            + gaps.iter().skip(1).map(|&g| u64::from(g)).sum::<u64>()
            + u64::from(LEAD_MS + TAIL_MS);
        if used > u64::from(len) {
            // Random draws overran the fixed length; fall back to the tightest layout.
            presses.iter_mut().for_each(|x| x.duration_ms = p.press_ms[0]);
            gaps.iter_mut().for_each(|g| *g = p.gap_ms[0]);
        }
    }

    let mut t = LEAD_MS;
    for (i, press) in presses.iter_mut().enumerate() {
        if i > 0 {
            t += gaps[i];
        }
        press.start_ms = t;
        t += press.duration_ms;
    }
    presses
}

fn default_meta(p: &SimProfile, task: TaskKind, seed: u64) -> SessionMeta {
    let cohort = match p.archetype {
        Archetype::Tutor1Deep | Archetype::Tutor2Deep | Archetype::Tutor3Deep | Archetype::Tutor4Deep => {
            Cohort::Expert
        }
        _ => Cohort::VT,
    };
    let mut meta = SessionMeta::new(format!("sim-{}-{task}-{seed}", p.archetype), SIM_PARTICIPANT, cohort, task);
    meta.notes = Some(format!("simulated {} seed {seed}", p.archetype));
    meta
}

/// Generate a session with default metadata.
pub fn generate_session(profile: &SimProfile, task: TaskKind, seed: u64) -> Result<Session, InfeasibleProfile> {
    generate_session_with_meta(profile, default_meta(profile, task, seed), seed)
}

pub fn generate_session_with_meta(
    profile: &SimProfile,
    meta: SessionMeta,
    seed: u64,
) -> Result<Session, InfeasibleProfile> {
    let frames = synthesize(profile, seed)?;
    Ok(Session { meta, frames })
}

/// The press schedule a seed produces, for tests that need the ground truth.
pub fn planned_presses(profile: &SimProfile, seed: u64) -> Result<Vec<PlannedPress>, InfeasibleProfile> {
    let scale = validate(profile)?;
    Ok(plan(profile, scale, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn synthesize(p: &SimProfile, seed: u64) -> Result<Vec<SensorFrame>, InfeasibleProfile> {
    let scale = validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let presses = plan(p, scale, &mut rng);

    let last_end = presses.iter().map(|x| x.start_ms + x.duration_ms).max().unwrap_or(0);
    let end_ms = p.session_ms.unwrap_or(last_end + TAIL_MS);
    let n = (end_ms / SIM_STEP_MS + 1) as usize;

    // Orientation random walk in centidegrees, inside a comfortable working range.
    let (mut roll, mut pitch, mut yaw) = (0i32, 1000i32, 0i32);
    let mut frames = Vec::with_capacity(n);
    let mut next = 0usize;
    for i in 0..n {
        let t = i as u32 * SIM_STEP_MS;
        let mut force = [0u16; SENSOR_COUNT];
        for f in force.iter_mut() {
            *f = rng.random_range(0..=NOISE_MAX);
        }
        while next < presses.len() && presses[next].start_ms + presses[next].duration_ms < t {
            next += 1;
        }
        if let Some(x) = presses.get(next).filter(|x| x.start_ms <= t) {
            let phase = f64::from(t - x.start_ms) / f64::from(x.duration_ms);
            let env = (f64::from(x.peak) * (PI * phase).sin()).round().max(0.0) as u16;
            let slot = &mut force[x.sensor.index()];
            *slot = (*slot + env).min(RAW_MAX);
        }
        roll = (roll + rng.random_range(-5..=5)).clamp(-2000, 2000);
        pitch = (pitch + rng.random_range(-5..=5)).clamp(-1000, 3000);
        yaw = (yaw + rng.random_range(-5..=5)).clamp(-1000, 1000);
        let mut frame = SensorFrame::new(i as u32, t, force);
        frame.orientation = Orientation::new(f64::from(roll) / 100.0, f64::from(pitch) / 100.0, f64::from(yaw) / 100.0);
        frames.push(frame);
    }
    Ok(frames)
}
