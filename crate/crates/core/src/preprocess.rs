//! Raw-record preprocessing pipeline.
//!
//! Per flight, in order: project geodetic records into the local tangent
//! frame, bound by radius, resample onto an integer-second grid, drop
//! physically impossible spikes, smooth, scale by the bounding radius and
//! optionally thin to a fixed stride. Flights that fail a stage are
//! dropped with a logged reason; the pipeline fails only when nothing
//! survives.

use std::collections::BTreeMap;

use crate::enu::{geodetic_to_enu, EnuFrame};
use crate::error::{Error, Result};
use crate::savgol::smooth_states;
use crate::traj::{pad_dataset, Dataset, RawRecord, Trajectory};
use crate::Scalar;

/// Maximum plausible horizontal speed (m/s) for the spike check.
pub const MAX_HORIZONTAL_SPEED: f64 = 350.0;
/// Maximum plausible vertical speed (m/s) for the spike check.
pub const MAX_VERTICAL_SPEED: f64 = 60.0;
/// Fraction of flagged states above which a flight counts as too noisy.
pub const MAX_FLAGGED_FRACTION: f64 = 0.2;

/// Which end of a flight is anchored at the terminal area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The flight ends at the airport: keep the in-range suffix.
    Arrival,
    /// The flight starts at the airport: keep the in-range prefix.
    Departure,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arrival" => Ok(Direction::Arrival),
            "departure" => Ok(Direction::Departure),
            other => Err(Error::Config(format!(
                "direction must be `arrival` or `departure`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Arrival => "arrival",
            Direction::Departure => "departure",
        })
    }
}

/// Pipeline configuration.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub frame: EnuFrame,
    pub direction: Direction,
    /// Keep one state every this many seconds after smoothing and scaling;
    /// `None` keeps the full 1 Hz grid.
    pub downsample_s: Option<u32>,
    pub smooth_window: usize,
    pub smooth_order: usize,
}

impl PreprocessOptions {
    pub fn new(frame: EnuFrame, direction: Direction) -> Self {
        PreprocessOptions {
            frame,
            direction,
            downsample_s: None,
            smooth_window: 11,
            smooth_order: 3,
        }
    }
}

/// A flight mid-pipeline: tangent-frame states with their timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedStates {
    pub id: String,
    pub times: Vec<f64>,
    pub states: Vec<[Scalar; 3]>,
    pub label: Option<i32>,
}

/// Why a flight was dropped, and at which stage.
#[derive(Debug, Clone)]
pub struct DropReport {
    pub id: String,
    pub stage: &'static str,
    pub reason: String,
}

/// Groups records by flight id and sorts each flight by timestamp.
///
/// Records sharing a timestamp within one flight keep only their first
/// occurrence so that downstream interpolation sees strictly increasing
/// time.
pub fn group_records(records: Vec<RawRecord>) -> BTreeMap<String, Vec<RawRecord>> {
    let mut flights: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
    for r in records {
        flights.entry(r.flight_id.clone()).or_default().push(r);
    }
    for (id, recs) in flights.iter_mut() {
        recs.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
        let before = recs.len();
        recs.dedup_by(|b, a| b.timestamp_s == a.timestamp_s);
        if recs.len() != before {
            log::warn!(
                "flight {id}: dropped {} duplicate-timestamp records",
                before - recs.len()
            );
        }
    }
    flights
}

/// Projects a sorted flight into the tangent frame.
pub fn to_enu(id: &str, records: &[RawRecord], frame: &EnuFrame) -> Result<TimedStates> {
    let mut times = Vec::with_capacity(records.len());
    let mut states = Vec::with_capacity(records.len());
    for r in records {
        times.push(r.timestamp_s);
        states.push(geodetic_to_enu(r, frame)?);
    }
    Ok(TimedStates {
        id: id.to_string(),
        times,
        states,
        label: None,
    })
}

/// Restricts a flight to the bounding radius.
///
/// Keeps the maximal contiguous run of in-range states anchored at the
/// terminal-area end: the suffix for arrivals, the prefix for departures.
/// A state is in range when its horizontal distance to the frame origin is
/// at most `r_max`.
pub fn bound_by_radius(ts: TimedStates, frame: &EnuFrame, direction: Direction) -> Result<TimedStates> {
    let inside = |s: &[Scalar; 3]| (s[0] * s[0] + s[1] * s[1]).sqrt() <= frame.r_max_m;
    let n = ts.states.len();
    let range = match direction {
        Direction::Arrival => {
            let mut start = n;
            while start > 0 && inside(&ts.states[start - 1]) {
                start -= 1;
            }
            start..n
        }
        Direction::Departure => {
            let mut end = 0;
            while end < n && inside(&ts.states[end]) {
                end += 1;
            }
            0..end
        }
    };
    if range.is_empty() {
        return Err(Error::OutsideBound);
    }
    if range.len() < 2 {
        return Err(Error::TooShort { len: range.len() });
    }
    Ok(TimedStates {
        id: ts.id,
        times: ts.times[range.clone()].to_vec(),
        states: ts.states[range].to_vec(),
        label: ts.label,
    })
}

/// Linearly resamples a flight onto the integer-second grid
/// `⌈t_first⌉ ..= ⌊t_last⌋`.
pub fn resample_1hz(ts: TimedStates) -> Result<TimedStates> {
    let t0 = *ts.times.first().ok_or(Error::SpanTooShort)?;
    let t1 = *ts.times.last().unwrap();
    let g0 = t0.ceil() as i64;
    let g1 = t1.floor() as i64;
    if g1 - g0 < 1 {
        return Err(Error::SpanTooShort);
    }
    let mut times = Vec::with_capacity((g1 - g0 + 1) as usize);
    let mut states = Vec::with_capacity(times.capacity());
    let mut seg = 0usize; // index of the sample interval containing g
    for g in g0..=g1 {
        let t = g as f64;
        while seg + 2 < ts.times.len() && ts.times[seg + 1] < t {
            seg += 1;
        }
        let (ta, tb) = (ts.times[seg], ts.times[seg + 1]);
        let alpha = if tb > ta { (t - ta) / (tb - ta) } else { 0.0 };
        let a = ts.states[seg];
        let b = ts.states[seg + 1];
        times.push(t);
        states.push([
            a[0] + alpha * (b[0] - a[0]),
            a[1] + alpha * (b[1] - a[1]),
            a[2] + alpha * (b[2] - a[2]),
        ]);
    }
    Ok(TimedStates {
        id: ts.id,
        times,
        states,
        label: ts.label,
    })
}

/// Drops physically impossible states from a 1 Hz flight and fills the gaps
/// by linear interpolation.
///
/// An edge between consecutive states is bad when it implies a horizontal
/// speed above [`MAX_HORIZONTAL_SPEED`] or a vertical speed above
/// [`MAX_VERTICAL_SPEED`]. An interior state is a spike when *both* of its
/// edges are bad (a single displaced point corrupts exactly its two
/// edges); an endpoint is a spike when its only edge is bad and its
/// neighbor is not itself a spike. Flights where more than
/// [`MAX_FLAGGED_FRACTION`] of states are flagged are rejected as too
/// noisy rather than repaired.
pub fn remove_outliers(ts: TimedStates) -> Result<TimedStates> {
    let n = ts.states.len();
    if n < 2 {
        return Err(Error::TooShort { len: n });
    }
    let mut edge_bad = vec![false; n - 1];
    for i in 0..n - 1 {
        let dt = (ts.times[i + 1] - ts.times[i]).max(f64::MIN_POSITIVE);
        let dx = ts.states[i + 1][0] - ts.states[i][0];
        let dy = ts.states[i + 1][1] - ts.states[i][1];
        let dz = ts.states[i + 1][2] - ts.states[i][2];
        edge_bad[i] = (dx * dx + dy * dy).sqrt() / dt > MAX_HORIZONTAL_SPEED
            || dz.abs() / dt > MAX_VERTICAL_SPEED;
    }
    let mut flagged = vec![false; n];
    for i in 1..n - 1 {
        flagged[i] = edge_bad[i - 1] && edge_bad[i];
    }
    if edge_bad[0] && !flagged[1] {
        flagged[0] = true;
    }
    if edge_bad[n - 2] && !flagged[n - 2] {
        flagged[n - 1] = true;
    }
    let count = flagged.iter().filter(|f| **f).count();
    if count == 0 {
        return Ok(ts);
    }
    if count as f64 > MAX_FLAGGED_FRACTION * n as f64 {
        return Err(Error::TooNoisy {
            flagged: count,
            total: n,
        });
    }
    // Interpolate interior gaps between surviving neighbors; flagged
    // endpoints have no outer neighbor and are truncated instead.
    let kept: Vec<usize> = (0..n).filter(|&i| !flagged[i]).collect();
    if kept.len() < 2 {
        return Err(Error::TooShort { len: kept.len() });
    }
    let (first, last) = (kept[0], *kept.last().unwrap());
    let mut times = Vec::with_capacity(last - first + 1);
    let mut states = Vec::with_capacity(last - first + 1);
    let mut right = 0usize; // index into `kept` of the next kept state ≥ i
    for i in first..=last {
        while kept[right] < i {
            right += 1;
        }
        if kept[right] == i {
            times.push(ts.times[i]);
            states.push(ts.states[i]);
            continue;
        }
        let (a, b) = (kept[right - 1], kept[right]);
        let alpha = (ts.times[i] - ts.times[a]) / (ts.times[b] - ts.times[a]);
        times.push(ts.times[i]);
        states.push([
            ts.states[a][0] + alpha * (ts.states[b][0] - ts.states[a][0]),
            ts.states[a][1] + alpha * (ts.states[b][1] - ts.states[a][1]),
            ts.states[a][2] + alpha * (ts.states[b][2] - ts.states[a][2]),
        ]);
    }
    log::info!("flight {}: repaired {count} spike states", ts.id);
    Ok(TimedStates {
        id: ts.id,
        times,
        states,
        label: ts.label,
    })
}

/// Divides every coordinate by the bounding radius.
///
/// The pipeline applies this exactly once, after smoothing; callers
/// composing stages by hand must take care not to scale twice.
pub fn scale_states(states: &mut [[Scalar; 3]], r_max_m: f64) {
    for s in states.iter_mut() {
        for v in s.iter_mut() {
            *v /= r_max_m;
        }
    }
}

/// Keeps one state every `stride` seconds (the grid is 1 Hz, so every
/// `stride`-th state), always including the first.
pub fn downsample(ts: TimedStates, stride: u32) -> Result<TimedStates> {
    if stride <= 1 {
        return Ok(ts);
    }
    let stride = stride as usize;
    let times: Vec<f64> = ts.times.iter().copied().step_by(stride).collect();
    let states: Vec<[Scalar; 3]> = ts.states.iter().copied().step_by(stride).collect();
    if states.len() < 2 {
        return Err(Error::TooShort { len: states.len() });
    }
    Ok(TimedStates {
        id: ts.id,
        times,
        states,
        label: ts.label,
    })
}

/// Runs the full pipeline over a bag of raw records.
///
/// Returns the padded dataset of surviving flights plus a report for every
/// dropped one. Fails only when no flight survives.
pub fn preprocess_records(
    records: Vec<RawRecord>,
    opts: &PreprocessOptions,
) -> Result<(Dataset, Vec<DropReport>)> {
    let flights = group_records(records);
    let mut out = Vec::new();
    let mut drops = Vec::new();
    for (id, recs) in &flights {
        match preprocess_flight(id, recs, opts) {
            Ok(traj) => out.push(traj),
            Err((stage, e)) => {
                log::warn!("flight {id} dropped at {stage}: {e}");
                drops.push(DropReport {
                    id: id.clone(),
                    stage,
                    reason: e.to_string(),
                });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoSurvivors);
    }
    let mut ds = pad_dataset(out)?;
    let f = &opts.frame;
    ds.push_meta(
        "stage.project",
        format!(
            "enu ref=({:.6},{:.6},{:.1})",
            f.ref_lat_deg, f.ref_lon_deg, f.ref_alt_m
        ),
    );
    ds.push_meta(
        "stage.bound",
        format!("r_max_m={} direction={}", f.r_max_m, opts.direction),
    );
    ds.push_meta("stage.resample", "1hz".to_string());
    ds.push_meta(
        "stage.despike",
        format!("v_h<={MAX_HORIZONTAL_SPEED} v_v<={MAX_VERTICAL_SPEED}"),
    );
    ds.push_meta(
        "stage.smooth",
        format!("savgol window={} order={}", opts.smooth_window, opts.smooth_order),
    );
    ds.push_meta("stage.scale", format!("1/{}", f.r_max_m));
    if let Some(s) = opts.downsample_s {
        ds.push_meta("stage.downsample", format!("{s}s"));
    }
    Ok((ds, drops))
}

fn preprocess_flight(
    id: &str,
    recs: &[RawRecord],
    opts: &PreprocessOptions,
) -> std::result::Result<Trajectory, (&'static str, Error)> {
    if recs.len() < 2 {
        return Err(("ingest", Error::TooShort { len: recs.len() }));
    }
    let ts = to_enu(id, recs, &opts.frame).map_err(|e| ("project", e))?;
    let ts = bound_by_radius(ts, &opts.frame, opts.direction).map_err(|e| ("bound", e))?;
    let ts = resample_1hz(ts).map_err(|e| ("resample", e))?;
    let mut ts = remove_outliers(ts).map_err(|e| ("despike", e))?;
    ts.states = smooth_states(&ts.states, opts.smooth_window, opts.smooth_order)
        .map_err(|e| ("smooth", e))?;
    scale_states(&mut ts.states, opts.frame.r_max_m);
    if let Some(stride) = opts.downsample_s {
        ts = downsample(ts, stride).map_err(|e| ("downsample", e))?;
    }
    let traj = Trajectory {
        id: ts.id,
        states: ts.states,
        label: ts.label,
    };
    let violations = crate::traj::validate_trajectory(&traj);
    if !violations.is_empty() {
        return Err((
            "validate",
            Error::InvalidTrajectory {
                id: id.to_string(),
                reason: violations.join("; "),
            },
        ));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn timed(xs: &[(f64, [f64; 3])]) -> TimedStates {
        TimedStates {
            id: "t".into(),
            times: xs.iter().map(|(t, _)| *t).collect(),
            states: xs.iter().map(|(_, s)| *s).collect(),
            label: None,
        }
    }

    fn frame(r: f64) -> EnuFrame {
        EnuFrame::new(0.0, 0.0, 0.0, r).unwrap()
    }

    #[test]
    fn bound_keeps_everything_when_inside() {
        let ts = timed(&[(0.0, [10.0, 0.0, 0.0]), (1.0, [20.0, 0.0, 0.0])]);
        let out = bound_by_radius(ts.clone(), &frame(100.0), Direction::Arrival).unwrap();
        assert_eq!(out, ts);
    }

    #[test]
    fn bound_arrival_retains_suffix_from_entry() {
        // Distances 109..100: crosses r_max = 102.5 between index 6 and 7.
        let pts: Vec<(f64, [f64; 3])> = (0..10)
            .map(|i| (i as f64, [(109 - i) as f64, 0.0, 0.0]))
            .collect();
        let out = bound_by_radius(timed(&pts), &frame(102.5), Direction::Arrival).unwrap();
        assert_eq!(out.times, vec![7.0, 8.0, 9.0]);
        assert_eq!(out.states[0][0], 102.0);
    }

    #[test]
    fn bound_departure_retains_prefix() {
        let pts: Vec<(f64, [f64; 3])> = (0..10)
            .map(|i| (i as f64, [(100 + i) as f64, 0.0, 0.0]))
            .collect();
        let out = bound_by_radius(timed(&pts), &frame(104.5), Direction::Departure).unwrap();
        assert_eq!(out.times, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bound_rejects_fully_outside() {
        let ts = timed(&[(0.0, [500.0, 0.0, 0.0]), (1.0, [600.0, 0.0, 0.0])]);
        assert!(matches!(
            bound_by_radius(ts, &frame(100.0), Direction::Arrival),
            Err(Error::OutsideBound)
        ));
    }

    #[test]
    fn resample_interpolates_midpoints() {
        let ts = timed(&[(0.0, [0.0, 0.0, 0.0]), (2.0, [10.0, -4.0, 2.0])]);
        let out = resample_1hz(ts).unwrap();
        assert_eq!(out.times, vec![0.0, 1.0, 2.0]);
        assert_eq!(out.states[1], [5.0, -2.0, 1.0]);
        assert_eq!(out.states[2], [10.0, -4.0, 2.0]);
    }

    #[test]
    fn resample_on_grid_is_identity() {
        let pts: Vec<(f64, [f64; 3])> = (0..5)
            .map(|i| (i as f64, [i as f64 * 3.0, 1.0, 2.0]))
            .collect();
        let ts = timed(&pts);
        let out = resample_1hz(ts.clone()).unwrap();
        assert_eq!(out, ts);
    }

    #[test]
    fn resample_grid_is_interior_ceil_floor() {
        let ts = timed(&[(0.4, [0.4, 0.0, 0.0]), (3.6, [3.6, 0.0, 0.0])]);
        let out = resample_1hz(ts).unwrap();
        assert_eq!(out.times, vec![1.0, 2.0, 3.0]);
        for (t, s) in out.times.iter().zip(&out.states) {
            assert!((s[0] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_rejects_sub_two_second_span() {
        let ts = timed(&[(0.4, [0.0; 3]), (1.2, [1.0, 0.0, 0.0])]);
        assert!(matches!(resample_1hz(ts), Err(Error::SpanTooShort)));
    }

    #[test]
    fn despike_leaves_clean_flight_untouched() {
        let pts: Vec<(f64, [f64; 3])> = (0..20)
            .map(|i| (i as f64, [100.0 * i as f64, 0.0, 10.0 * i as f64 % 50.0]))
            .collect();
        let ts = timed(&pts);
        let out = remove_outliers(ts.clone()).unwrap();
        assert_eq!(out, ts);
    }

    #[test]
    fn despike_repairs_a_teleported_point() {
        let mut pts: Vec<(f64, [f64; 3])> = (0..10)
            .map(|i| (i as f64, [100.0 * i as f64, 0.0, 0.0]))
            .collect();
        pts[5].1[0] += 10_000.0;
        let out = remove_outliers(timed(&pts)).unwrap();
        assert_eq!(out.times.len(), 10);
        assert!((out.states[5][0] - 500.0).abs() < 1e-9, "{:?}", out.states[5]);
        // Neighbors of the spike are untouched.
        assert_eq!(out.states[4][0], 400.0);
        assert_eq!(out.states[6][0], 600.0);
    }

    #[test]
    fn despike_rejects_heavily_corrupted_flights() {
        let mut pts: Vec<(f64, [f64; 3])> = (0..20)
            .map(|i| (i as f64, [100.0 * i as f64, 0.0, 0.0]))
            .collect();
        for i in (1..20).step_by(3) {
            pts[i].1[0] += 50_000.0;
        }
        assert!(matches!(
            remove_outliers(timed(&pts)),
            Err(Error::TooNoisy { .. })
        ));
    }

    #[test]
    fn despike_uses_vertical_limit_too() {
        let mut pts: Vec<(f64, [f64; 3])> = (0..10)
            .map(|i| (i as f64, [100.0 * i as f64, 0.0, 1000.0]))
            .collect();
        pts[4].1[2] = 3000.0; // 2 km altitude jump in 1 s
        let out = remove_outliers(timed(&pts)).unwrap();
        assert!((out.states[4][2] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn scale_divides_and_is_not_idempotent() {
        let mut s = [[60_000.0, -120_000.0, 3_000.0]];
        scale_states(&mut s, 120_000.0);
        assert_eq!(s[0], [0.5, -1.0, 0.025]);
        let once = s[0];
        scale_states(&mut s, 120_000.0);
        assert_ne!(s[0], once, "double scaling must be observable");
    }

    #[test]
    fn downsample_takes_every_nth_state() {
        let pts: Vec<(f64, [f64; 3])> = (0..100)
            .map(|i| (i as f64, [i as f64, 0.0, 0.0]))
            .collect();
        let out = downsample(timed(&pts), 5).unwrap();
        assert_eq!(out.times.len(), 20);
        assert_eq!(out.states[1][0], 5.0);
        assert_eq!(out.states[19][0], 95.0);
    }

    proptest! {
        /// Linear resampling reproduces affine signals exactly (up to
        /// floating-point noise) at every grid point.
        #[test]
        fn resample_preserves_affine_signals(
            a in -5.0f64..5.0,
            b in -100.0f64..100.0,
            steps in proptest::collection::vec(0.05f64..1.9, 3..40),
        ) {
            let mut t = 0.3;
            let mut pts = Vec::new();
            for dt in steps {
                pts.push((t, [a * t + b, -a * t, 2.0 * b]));
                t += dt;
            }
            prop_assume!(pts.last().unwrap().0.floor() >= pts[0].0.ceil() + 1.0);
            let out = resample_1hz(timed(&pts)).unwrap();
            for (g, s) in out.times.iter().zip(&out.states) {
                let want = a * g + b;
                prop_assert!((s[0] - want).abs() < 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pipeline_end_to_end_on_synthetic_records() {
        // A straight 100 m/s inbound track along +x towards the origin,
        // expressed as geodetic records via the inverse projection.
        let f = EnuFrame::new(37.0, 127.0, 10.0, 50_000.0).unwrap();
        let mut records = Vec::new();
        for i in 0..200 {
            let x = 40_000.0 - 100.0 * i as f64;
            let (lat, lon, alt) = crate::enu::enu_to_geodetic(&[x, 5_000.0, 2_000.0], &f).unwrap();
            records.push(RawRecord {
                flight_id: "fl1".into(),
                timestamp_s: i as f64,
                lat_deg: lat,
                lon_deg: lon,
                baro_alt_m: alt,
            });
        }
        // A second, unusable flight: single record.
        records.push(RawRecord {
            flight_id: "fl2".into(),
            timestamp_s: 0.0,
            lat_deg: 37.0,
            lon_deg: 127.0,
            baro_alt_m: 100.0,
        });
        let opts = PreprocessOptions::new(f, Direction::Arrival);
        let (ds, drops) = preprocess_records(records, &opts).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0].id, "fl2");
        assert_eq!(ds.ids[0], "fl1");
        // Scaled planar coordinates stay in range and track the straight line.
        let n = ds.lengths[0];
        assert_eq!(n, 200);
        let first = ds.state(0, 0);
        assert!((first[0] - 0.8).abs() < 1e-3, "{first:?}");
        assert!((first[1] - 0.1).abs() < 1e-3);
        let last = ds.state(0, n - 1);
        assert!((last[0] - (40_000.0 - 100.0 * 199.0) / 50_000.0).abs() < 1e-3);
    }

    #[test]
    fn pipeline_downsamples_when_asked() {
        let f = EnuFrame::new(37.0, 127.0, 0.0, 50_000.0).unwrap();
        let mut records = Vec::new();
        for i in 0..100 {
            let x = 20_000.0 - 100.0 * i as f64;
            let (lat, lon, alt) = crate::enu::enu_to_geodetic(&[x, 0.0, 1_000.0], &f).unwrap();
            records.push(RawRecord {
                flight_id: "fl".into(),
                timestamp_s: i as f64,
                lat_deg: lat,
                lon_deg: lon,
                baro_alt_m: alt,
            });
        }
        let mut opts = PreprocessOptions::new(f, Direction::Arrival);
        opts.downsample_s = Some(5);
        let (ds, _) = preprocess_records(records, &opts).unwrap();
        assert_eq!(ds.lengths[0], 20);
    }

    #[test]
    fn direction_parses_and_rejects() {
        assert_eq!("arrival".parse::<Direction>().unwrap(), Direction::Arrival);
        assert_eq!(
            "departure".parse::<Direction>().unwrap(),
            Direction::Departure
        );
        assert!("sideways".parse::<Direction>().is_err());
    }
}
