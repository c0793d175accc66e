use std::fmt::Write;

use crate::telemetry::SensorId;

use super::{CompetencyReport, Criterion, MAX_POINTS, MAX_TOTAL};

/// Plain-text rendering of a report for terminals and printouts.
pub fn render_text(r: &CompetencyReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "Competency report: participant {} ({:?})", r.participant_id, r.cohort);
    let _ = writeln!(w, "Engine {} / schema {}", r.engine_version, r.schema_version);

    for t in &r.tasks {
        let _ = writeln!(w);
        let _ = writeln!(
            w,
            "== {} palpation (session {}, {} frames, {:.1} s) ==",
            t.task,
            t.session_id,
            t.frame_count,
            f64::from(t.duration_ms) / 1000.0
        );
        let _ = writeln!(w, "  sensor  presses  share%   peaks");
        for s in SensorId::ALL {
            let peaks: Vec<String> = t
                .presses
                .iter()
                .filter(|p| p.sensor == s)
                .map(|p| format!("{}({})", p.peak_raw, p.peak_quartet))
                .collect();
            let _ = writeln!(
                w,
                "  {:<6}  {:>7}  {:>6.2}   {}",
                s,
                t.press_counts[s],
                t.contributions.get(s),
                peaks.join(" ")
            );
        }
        let _ = writeln!(w, "  total presses: {}", t.contributions.pc_total);
        for score in &t.scores {
            let _ = write!(w, "  {:<28} {:>5.2} / {MAX_POINTS}", score.criterion.title(), score.points);
            match &score.violation {
                Some(v) => {
                    let _ = writeln!(w, "  [{}]", v.description);
                }
                None => {
                    let _ = writeln!(w);
                }
            }
        }
        if let Some(safety) = &t.safety {
            let _ = writeln!(
                w,
                "  presses above {:.2} N: {}",
                safety.threshold_newtons,
                safety.exceeded.len()
            );
        }
    }

    let _ = writeln!(w);
    for c in Criterion::ALL {
        let _ = writeln!(w, "{:<28} {:>5.2} / {MAX_POINTS}", c.title(), r.averages.get(c));
    }
    let _ = writeln!(w, "{:<28} {:>5.2} / {MAX_TOTAL}", "Total", r.total);
    let _ = writeln!(w, "{:<28} {}", "OSCE rating", r.osce);
    if r.codec_errors > 0 {
        let _ = writeln!(w, "{} corrupt frames were dropped during capture", r.codec_errors);
    }
    out
}
