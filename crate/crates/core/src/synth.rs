//! Deterministic synthetic terminal-area traffic with ground-truth labels.
//!
//! A scenario is a set of arrival procedures. Each procedure owns a
//! corridor entry bearing, a chain of fixes ending at a runway threshold,
//! and a lateral runway offset that displaces the final segment sideways
//! (two procedures identical up to this offset model parallel runways).
//! A flight starts at a jittered entry point out along the corridor,
//! flies the fix chain as a piecewise-linear path at constant ground
//! speed per leg (en-route speed everywhere, final-approach speed on the
//! last leg, altitude interpolated along each leg), is sampled at 1 Hz,
//! perturbed with Gaussian positional noise, and scaled by the scenario
//! radius into the same `[-1, 1]` frame the preprocessing pipeline
//! produces.
//!
//! Generation is a pure function of (scenario, count, seed): every flight
//! draws from its own counter-indexed ChaCha stream, so datasets are
//! reproducible bit for bit and flights could be generated in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::savgol::smooth_states;
use crate::traj::{pad_dataset, validate_trajectory, Dataset, Trajectory};
use crate::Scalar;

/// Meters per second in one knot.
pub const KNOT_MS: Scalar = 1852.0 / 3600.0;
/// Ground speed on every leg but the last.
pub const EN_ROUTE_KN: Scalar = 220.0;
/// Ground speed on the final segment.
pub const FINAL_KN: Scalar = 140.0;

/// One arrival procedure: entry corridor, fix chain, runway geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureSpec {
    /// Ground-truth class label.
    pub class_id: i32,
    /// Compass bearing (degrees, clockwise from north) from the first fix
    /// toward the corridor the traffic arrives from.
    pub entry_bearing_deg: Scalar,
    /// Fix chain as `[east_m, north_m, alt_m]`, ending at the runway
    /// threshold.
    pub waypoints: Vec<[Scalar; 3]>,
    /// Landing direction (compass degrees).
    pub runway_heading_deg: Scalar,
    /// Lateral displacement of the final segment, positive to the right
    /// of the landing direction. Both endpoints of the last leg shift, so
    /// two specs differing only here fly parallel finals.
    pub runway_offset_m: Scalar,
}

impl ProcedureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::param(
                "procedure",
                format!(
                    "class {}: a chain needs at least 2 waypoints, got {}",
                    self.class_id,
                    self.waypoints.len()
                ),
            ));
        }
        let numbers = self
            .waypoints
            .iter()
            .flatten()
            .chain([
                &self.entry_bearing_deg,
                &self.runway_heading_deg,
                &self.runway_offset_m,
            ]);
        for v in numbers {
            if !v.is_finite() {
                return Err(Error::param(
                    "procedure",
                    format!("class {}: non-finite value", self.class_id),
                ));
            }
        }
        Ok(())
    }

    /// Fix chain with the runway offset applied to the final segment.
    fn realized_chain(&self) -> Vec<[Scalar; 3]> {
        let mut chain = self.waypoints.clone();
        let theta = self.runway_heading_deg.to_radians();
        // Unit vector 90 degrees clockwise of the landing direction.
        let right = [theta.cos(), -theta.sin()];
        let n = chain.len();
        for wp in chain.iter_mut().skip(n - 2) {
            wp[0] += self.runway_offset_m * right[0];
            wp[1] += self.runway_offset_m * right[1];
        }
        chain
    }
}

/// A full generation setup: procedures plus the shared knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub specs: Vec<ProcedureSpec>,
    /// Std of the per-sample Gaussian noise on east/north, meters.
    pub noise_horizontal_m: Scalar,
    /// Std of the per-sample Gaussian noise on altitude, meters.
    pub noise_vertical_m: Scalar,
    /// Diameter of the disk the entry point is jittered within; starts of
    /// one class stay within this distance of each other.
    pub entry_jitter_m: Scalar,
    /// Distance from the first fix out to the nominal entry point.
    pub entry_range_m: Scalar,
    /// Altitude at the entry point.
    pub entry_alt_m: Scalar,
    /// Radius every coordinate is divided by, matching the preprocessing
    /// scale step.
    pub scale_radius_m: Scalar,
    /// Savitzky-Golay window used by [`scenario_dataset`].
    pub smooth_window: usize,
    /// Savitzky-Golay polynomial order used by [`scenario_dataset`].
    pub smooth_order: usize,
    /// Keep-every-n stride applied after smoothing.
    pub downsample_stride: u32,
}

impl Default for Scenario {
    /// The built-in four-class terminal area.
    ///
    /// Classes 0 and 1 approach the *same* threshold through the *same*
    /// final fix but arrive mirrored about the final axis (north-east vs
    /// south-west feeds), so their final states coincide and only the
    /// path history separates them. Classes 2 and 3 share one chain onto
    /// parallel runways 4 km apart — spatially close, operationally
    /// distinct.
    fn default() -> Self {
        let north_feed = ProcedureSpec {
            class_id: 0,
            entry_bearing_deg: 45.0,
            waypoints: vec![
                [-26_000.0, 14_000.0, 2_000.0],
                [-18_000.0, 0.0, 900.0],
                [0.0, 0.0, 0.0],
            ],
            runway_heading_deg: 90.0,
            runway_offset_m: 0.0,
        };
        let south_feed = ProcedureSpec {
            class_id: 1,
            entry_bearing_deg: 225.0,
            waypoints: vec![
                [-26_000.0, -14_000.0, 2_000.0],
                [-18_000.0, 0.0, 900.0],
                [0.0, 0.0, 0.0],
            ],
            runway_heading_deg: 90.0,
            runway_offset_m: 0.0,
        };
        let north_pair = ProcedureSpec {
            class_id: 2,
            entry_bearing_deg: 110.0,
            waypoints: vec![
                [28_000.0, -8_000.0, 2_000.0],
                [18_000.0, 4_000.0, 900.0],
                [0.0, 4_000.0, 0.0],
            ],
            runway_heading_deg: 270.0,
            runway_offset_m: 2_000.0,
        };
        let south_pair = ProcedureSpec {
            class_id: 3,
            runway_offset_m: -2_000.0,
            ..north_pair.clone()
        };
        Scenario {
            specs: vec![north_feed, south_feed, north_pair, south_pair],
            noise_horizontal_m: 150.0,
            noise_vertical_m: 30.0,
            entry_jitter_m: 1_000.0,
            entry_range_m: 15_000.0,
            entry_alt_m: 2_800.0,
            scale_radius_m: 50_000.0,
            smooth_window: 11,
            smooth_order: 3,
            downsample_stride: 20,
        }
    }
}

/// Unit vector of a compass bearing in the east/north plane.
fn bearing_unit(deg: Scalar) -> [Scalar; 2] {
    let theta = deg.to_radians();
    [theta.sin(), theta.cos()]
}

fn horizontal_len(a: &[Scalar; 3], b: &[Scalar; 3]) -> Scalar {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Entry point plus realized fixes: the polyline one flight follows.
fn flight_polyline(
    spec: &ProcedureSpec,
    entry_range_m: Scalar,
    entry_alt_m: Scalar,
    jitter: [Scalar; 2],
) -> Vec<[Scalar; 3]> {
    let chain = spec.realized_chain();
    let dir = bearing_unit(spec.entry_bearing_deg);
    let entry = [
        chain[0][0] + entry_range_m * dir[0] + jitter[0],
        chain[0][1] + entry_range_m * dir[1] + jitter[1],
        entry_alt_m,
    ];
    let mut line = Vec::with_capacity(chain.len() + 1);
    line.push(entry);
    line.extend(chain);
    line
}

/// Seconds spent on each leg at the per-leg ground speed.
fn leg_durations(line: &[[Scalar; 3]]) -> Result<Vec<Scalar>> {
    let mut durations = Vec::with_capacity(line.len() - 1);
    for (i, pair) in line.windows(2).enumerate() {
        let len = horizontal_len(&pair[0], &pair[1]);
        if len <= 0.0 {
            return Err(Error::param(
                "procedure",
                format!("zero-length leg between waypoints {i} and {}", i + 1),
            ));
        }
        let kn = if i == line.len() - 2 {
            FINAL_KN
        } else {
            EN_ROUTE_KN
        };
        durations.push(len / (kn * KNOT_MS));
    }
    Ok(durations)
}

/// Position at `t` seconds into the flight, by leg-local interpolation.
fn position_at(line: &[[Scalar; 3]], durations: &[Scalar], t: Scalar) -> [Scalar; 3] {
    let mut start = 0.0;
    for (leg, &d) in durations.iter().enumerate() {
        if t <= start + d || leg == durations.len() - 1 {
            let u = ((t - start) / d).clamp(0.0, 1.0);
            let a = &line[leg];
            let b = &line[leg + 1];
            return [
                a[0] + u * (b[0] - a[0]),
                a[1] + u * (b[1] - a[1]),
                a[2] + u * (b[2] - a[2]),
            ];
        }
        start += d;
    }
    unreachable!("durations is never empty");
}

/// Generates `per_class` labeled flights per procedure.
///
/// Flight `k` of spec `s` draws from stream `s * per_class + k` of a
/// ChaCha generator seeded with `seed`, so the dataset is a pure function
/// of `(scenario, per_class, seed)` regardless of generation order.
pub fn generate(sc: &Scenario, per_class: usize, seed: u64) -> Result<Vec<Trajectory>> {
    if sc.specs.is_empty() {
        return Err(Error::param("scenario", "no procedures"));
    }
    if per_class == 0 {
        return Err(Error::param("per-class", "at least one flight per class"));
    }
    for knob in [
        ("noise_horizontal_m", sc.noise_horizontal_m),
        ("noise_vertical_m", sc.noise_vertical_m),
        ("entry_jitter_m", sc.entry_jitter_m),
    ] {
        if !(knob.1 >= 0.0) {
            return Err(Error::param("scenario", format!("{} < 0", knob.0)));
        }
    }
    if !(sc.scale_radius_m > 0.0) || !(sc.entry_range_m > 0.0) {
        return Err(Error::param(
            "scenario",
            "scale radius and entry range must be positive",
        ));
    }
    for spec in &sc.specs {
        spec.validate()?;
    }

    let noise_h = Normal::new(0.0, sc.noise_horizontal_m).map_err(|e| {
        Error::param("noise_horizontal_m", e.to_string())
    })?;
    let noise_v = Normal::new(0.0, sc.noise_vertical_m)
        .map_err(|e| Error::param("noise_vertical_m", e.to_string()))?;

    let mut out = Vec::with_capacity(sc.specs.len() * per_class);
    for (s, spec) in sc.specs.iter().enumerate() {
        for k in 0..per_class {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((s * per_class + k) as u64);

            // Entry jitter: uniform over a disk whose *diameter* is the
            // configured jitter, so same-class starts stay within it.
            let radius = 0.5 * sc.entry_jitter_m * rng.random::<Scalar>().sqrt();
            let angle = rng.random::<Scalar>() * std::f64::consts::TAU;
            let jitter = [radius * angle.cos(), radius * angle.sin()];

            let line = flight_polyline(spec, sc.entry_range_m, sc.entry_alt_m, jitter);
            let durations = leg_durations(&line)?;
            let total: Scalar = durations.iter().sum();

            let n = total.floor() as usize + 1;
            let mut states = Vec::with_capacity(n);
            for t in 0..n {
                let mut p = position_at(&line, &durations, t as Scalar);
                if sc.noise_horizontal_m > 0.0 {
                    p[0] += noise_h.sample(&mut rng);
                    p[1] += noise_h.sample(&mut rng);
                }
                if sc.noise_vertical_m > 0.0 {
                    p[2] += noise_v.sample(&mut rng);
                }
                states.push([
                    p[0] / sc.scale_radius_m,
                    p[1] / sc.scale_radius_m,
                    p[2] / sc.scale_radius_m,
                ]);
            }

            let mut traj =
                Trajectory::new(format!("c{}-s{seed}-{k:03}", spec.class_id), states);
            traj.label = Some(spec.class_id);
            let violations = validate_trajectory(&traj);
            if !violations.is_empty() {
                return Err(Error::InvalidTrajectory {
                    id: traj.id,
                    reason: format!(
                        "scenario exceeds its scale radius: {}",
                        violations.join("; ")
                    ),
                });
            }
            out.push(traj);
        }
    }
    Ok(out)
}

/// Generates, smooths, downsamples, and pads one ready-to-train dataset.
pub fn scenario_dataset(sc: &Scenario, per_class: usize, seed: u64) -> Result<Dataset> {
    let trajs = generate(sc, per_class, seed)?;
    let stride = sc.downsample_stride.max(1) as usize;
    let mut refined = Vec::with_capacity(trajs.len());
    for t in trajs {
        let smooth = smooth_states(&t.states, sc.smooth_window, sc.smooth_order)?;
        let states: Vec<[Scalar; 3]> = smooth.into_iter().step_by(stride).collect();
        if states.len() < 2 {
            return Err(Error::TooShort { len: states.len() });
        }
        let mut thin = Trajectory::new(t.id, states);
        thin.label = t.label;
        refined.push(thin);
    }
    let mut ds = pad_dataset(refined)?;
    ds.push_meta("source", "synth");
    ds.push_meta("seed", seed.to_string());
    ds.push_meta("per_class", per_class.to_string());
    Ok(ds)
}

// --- scenario text format ---------------------------------------------
//
// Key-value lines set scenario knobs; a `procedure <class-id>` line opens
// a block whose key-values set that procedure's fields and whose
// `waypoint <east> <north> <alt>` lines append fixes. `#` starts a
// comment.

impl Scenario {
    /// Serializes to the text form [`Scenario::parse`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("noise_horizontal_m = {}\n", self.noise_horizontal_m));
        s.push_str(&format!("noise_vertical_m = {}\n", self.noise_vertical_m));
        s.push_str(&format!("entry_jitter_m = {}\n", self.entry_jitter_m));
        s.push_str(&format!("entry_range_m = {}\n", self.entry_range_m));
        s.push_str(&format!("entry_alt_m = {}\n", self.entry_alt_m));
        s.push_str(&format!("scale_radius_m = {}\n", self.scale_radius_m));
        s.push_str(&format!("smooth_window = {}\n", self.smooth_window));
        s.push_str(&format!("smooth_order = {}\n", self.smooth_order));
        s.push_str(&format!("downsample_stride = {}\n", self.downsample_stride));
        for spec in &self.specs {
            s.push_str(&format!("\nprocedure {}\n", spec.class_id));
            s.push_str(&format!("entry_bearing_deg = {}\n", spec.entry_bearing_deg));
            s.push_str(&format!(
                "runway_heading_deg = {}\n",
                spec.runway_heading_deg
            ));
            s.push_str(&format!("runway_offset_m = {}\n", spec.runway_offset_m));
            for wp in &spec.waypoints {
                s.push_str(&format!("waypoint {} {} {}\n", wp[0], wp[1], wp[2]));
            }
        }
        s
    }

    /// Parses the scenario text format.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut sc = Scenario {
            specs: Vec::new(),
            ..Scenario::default()
        };
        let mut current: Option<ProcedureSpec> = None;

        fn num(line_no: usize, raw: &str) -> Result<Scalar> {
            raw.trim().parse::<Scalar>().map_err(|_| {
                Error::format(format!("scenario line {line_no}: bad number `{raw}`"))
            })
        }

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("procedure") {
                if let Some(spec) = current.take() {
                    sc.specs.push(spec);
                }
                let id = rest.trim().parse::<i32>().map_err(|_| {
                    Error::format(format!("scenario line {line_no}: bad class id `{rest}`"))
                })?;
                current = Some(ProcedureSpec {
                    class_id: id,
                    entry_bearing_deg: 0.0,
                    waypoints: Vec::new(),
                    runway_heading_deg: 0.0,
                    runway_offset_m: 0.0,
                });
                continue;
            }
            if let Some(rest) = line.strip_prefix("waypoint") {
                let spec = current.as_mut().ok_or_else(|| {
                    Error::format(format!(
                        "scenario line {line_no}: waypoint before any procedure"
                    ))
                })?;
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::format(format!(
                        "scenario line {line_no}: waypoint needs east north alt"
                    )));
                }
                spec.waypoints.push([
                    num(line_no, parts[0])?,
                    num(line_no, parts[1])?,
                    num(line_no, parts[2])?,
                ]);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(format!("scenario line {line_no}: expected `key = value`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(spec) = current.as_mut() {
                match key {
                    "entry_bearing_deg" => spec.entry_bearing_deg = num(line_no, value)?,
                    "runway_heading_deg" => spec.runway_heading_deg = num(line_no, value)?,
                    "runway_offset_m" => spec.runway_offset_m = num(line_no, value)?,
                    _ => {
                        return Err(Error::format(format!(
                            "scenario line {line_no}: unknown procedure key `{key}`"
                        )))
                    }
                }
            } else {
                match key {
                    "noise_horizontal_m" => sc.noise_horizontal_m = num(line_no, value)?,
                    "noise_vertical_m" => sc.noise_vertical_m = num(line_no, value)?,
                    "entry_jitter_m" => sc.entry_jitter_m = num(line_no, value)?,
                    "entry_range_m" => sc.entry_range_m = num(line_no, value)?,
                    "entry_alt_m" => sc.entry_alt_m = num(line_no, value)?,
                    "scale_radius_m" => sc.scale_radius_m = num(line_no, value)?,
                    "smooth_window" => sc.smooth_window = num(line_no, value)? as usize,
                    "smooth_order" => sc.smooth_order = num(line_no, value)? as usize,
                    "downsample_stride" => {
                        sc.downsample_stride = num(line_no, value)? as u32
                    }
                    _ => {
                        return Err(Error::format(format!(
                            "scenario line {line_no}: unknown key `{key}`"
                        )))
                    }
                }
            }
        }
        if let Some(spec) = current.take() {
            sc.specs.push(spec);
        }
        if sc.specs.is_empty() {
            return Err(Error::format("scenario defines no procedures"));
        }
        for spec in &sc.specs {
            spec.validate()?;
        }
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::rdp_mask;

    fn quiet(mut sc: Scenario) -> Scenario {
        sc.noise_horizontal_m = 0.0;
        sc.noise_vertical_m = 0.0;
        sc
    }

    /// Distance from `p` to the closest point of segment `ab`.
    fn seg_dist(p: &[Scalar; 3], a: &[Scalar; 3], b: &[Scalar; 3]) -> Scalar {
        let ab: Vec<Scalar> = (0..3).map(|i| b[i] - a[i]).collect();
        let ap: Vec<Scalar> = (0..3).map(|i| p[i] - a[i]).collect();
        let denom: Scalar = ab.iter().map(|v| v * v).sum();
        let u = (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<Scalar>() / denom)
            .clamp(0.0, 1.0);
        (0..3)
            .map(|i| (p[i] - (a[i] + u * ab[i])).powi(2))
            .sum::<Scalar>()
            .sqrt()
    }

    #[test]
    fn zero_noise_flight_lies_on_its_polyline() {
        let mut sc = quiet(Scenario::default());
        sc.entry_jitter_m = 0.0;
        sc.specs.truncate(1);
        let trajs = generate(&sc, 1, 3).unwrap();
        assert_eq!(trajs.len(), 1);
        let line = flight_polyline(&sc.specs[0], sc.entry_range_m, sc.entry_alt_m, [0.0, 0.0]);
        let scaled: Vec<[Scalar; 3]> = line
            .iter()
            .map(|w| {
                [
                    w[0] / sc.scale_radius_m,
                    w[1] / sc.scale_radius_m,
                    w[2] / sc.scale_radius_m,
                ]
            })
            .collect();
        for p in &trajs[0].states {
            let d = scaled
                .windows(2)
                .map(|s| seg_dist(p, &s[0], &s[1]))
                .fold(Scalar::INFINITY, Scalar::min);
            assert!(d < 1e-12, "sample {p:?} strays {d} from the chain");
        }
        // The flight starts exactly at the entry point.
        assert_eq!(trajs[0].states[0], scaled[0]);
    }

    #[test]
    fn fixed_seed_reproduces_the_dataset() {
        let sc = Scenario::default();
        let a = generate(&sc, 3, 11).unwrap();
        let b = generate(&sc, 3, 11).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.label, y.label);
            assert_eq!(x.states.len(), y.states.len());
            for (p, q) in x.states.iter().zip(&y.states) {
                assert_eq!(p[0].to_bits(), q[0].to_bits());
                assert_eq!(p[1].to_bits(), q[1].to_bits());
                assert_eq!(p[2].to_bits(), q[2].to_bits());
            }
        }
        let c = generate(&sc, 3, 12).unwrap();
        assert!(a
            .iter()
            .zip(&c)
            .any(|(x, y)| x.states[0] != y.states[0]));
    }

    #[test]
    fn counts_and_labels_are_balanced() {
        let trajs = generate(&Scenario::default(), 3, 0).unwrap();
        assert_eq!(trajs.len(), 12);
        for c in 0..4 {
            assert_eq!(
                trajs.iter().filter(|t| t.label == Some(c)).count(),
                3,
                "class {c}"
            );
        }
        let mut ids: Vec<&str> = trajs.iter().map(|t| t.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 12, "flight ids must be unique");
    }

    #[test]
    fn zero_noise_flights_pass_every_invariant() {
        let trajs = generate(&quiet(Scenario::default()), 2, 5).unwrap();
        for t in &trajs {
            assert!(validate_trajectory(t).is_empty(), "{}", t.id);
        }
    }

    #[test]
    fn rdp_recovers_the_waypoints_of_quiet_flights() {
        let sc = quiet(Scenario::default());
        let trajs = generate(&sc, 1, 9).unwrap();
        for (s, spec) in sc.specs.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            rng.set_stream(s as u64);
            let radius = 0.5 * sc.entry_jitter_m * rng.random::<Scalar>().sqrt();
            let angle = rng.random::<Scalar>() * std::f64::consts::TAU;
            let jitter = [radius * angle.cos(), radius * angle.sin()];
            let line = flight_polyline(spec, sc.entry_range_m, sc.entry_alt_m, jitter);
            let durations = leg_durations(&line).unwrap();

            let traj = &trajs[s];
            // Samples straddle each corner by up to one step, so ε must
            // sit above that cut (~110 m scaled) yet far below the
            // kilometer-scale corner deviations.
            let mask = rdp_mask(&traj.states, 5e-3).unwrap();
            let kept: Vec<usize> = mask
                .iter()
                .enumerate()
                .filter_map(|(i, &m)| m.then_some(i))
                .collect();
            assert_eq!(
                kept.len(),
                line.len(),
                "class {}: significant points vs waypoints",
                spec.class_id
            );
            // Each waypoint passage time must sit within 3 samples of a
            // significant point.
            let mut when = 0.0;
            for (w, _) in line.iter().enumerate() {
                let idx = when as Scalar;
                assert!(
                    kept.iter()
                        .any(|&k| (k as Scalar - idx).abs() <= 3.0),
                    "class {}: waypoint {w} at t={when:.1} missed",
                    spec.class_id
                );
                if w < durations.len() {
                    when += durations[w];
                }
            }
        }
    }

    #[test]
    fn same_class_starts_stay_within_the_jitter_diameter() {
        let sc = quiet(Scenario::default());
        let trajs = generate(&sc, 8, 21).unwrap();
        let bound = sc.entry_jitter_m / sc.scale_radius_m + 1e-12;
        for c in 0..4 {
            let starts: Vec<&[Scalar; 3]> = trajs
                .iter()
                .filter(|t| t.label == Some(c))
                .map(|t| &t.states[0])
                .collect();
            for a in &starts {
                for b in &starts {
                    let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                    assert!(d <= bound, "class {c}: starts {d} apart, bound {bound}");
                }
            }
        }
    }

    #[test]
    fn merging_arrivals_share_finals_and_the_pair_stays_parallel() {
        let mut sc = quiet(Scenario::default());
        sc.entry_jitter_m = 0.0;
        let trajs = generate(&sc, 1, 2).unwrap();
        let last = |c: usize| *trajs[c].states.last().unwrap();
        // Classes 0 and 1 end at the same threshold (up to rounding in
        // the bearing trigonometry): a final-state-only baseline cannot
        // tell them apart.
        for i in 0..3 {
            assert!((last(0)[i] - last(1)[i]).abs() < 1e-9, "axis {i}");
        }
        // Classes 2 and 3 land on parallel runways; the offset is purely
        // lateral (north/south for a 270-degree heading) and spans the
        // difference of the two runway offsets.
        let want = (sc.specs[2].runway_offset_m - sc.specs[3].runway_offset_m).abs();
        let gap = (last(2)[1] - last(3)[1]).abs() * sc.scale_radius_m;
        assert!((gap - want).abs() < 1e-6, "lateral gap {gap} want {want}");
        // Along-track, the two finals end within one 1 Hz step of each
        // other (the offset changes the approach-leg length slightly).
        let along = (last(2)[0] - last(3)[0]).abs() * sc.scale_radius_m;
        assert!(along <= FINAL_KN * KNOT_MS + 1e-9, "along-track gap {along}");
    }

    #[test]
    fn invalid_setups_are_rejected() {
        let sc = Scenario::default();
        assert!(generate(&sc, 0, 1).is_err(), "zero flights per class");
        let mut no_specs = sc.clone();
        no_specs.specs.clear();
        assert!(generate(&no_specs, 1, 1).is_err());

        let mut short_chain = sc.clone();
        short_chain.specs[0].waypoints.truncate(1);
        assert!(generate(&short_chain, 1, 1).is_err());

        let mut nan_spec = sc.clone();
        nan_spec.specs[0].entry_bearing_deg = Scalar::NAN;
        assert!(generate(&nan_spec, 1, 1).is_err());

        let mut doubled = sc.clone();
        let wp = doubled.specs[0].waypoints[0];
        doubled.specs[0].waypoints.insert(1, wp);
        assert!(generate(&doubled, 1, 1).is_err(), "zero-length leg");

        let mut too_far = sc.clone();
        too_far.specs[0].waypoints[0] = [400_000.0, 0.0, 2_000.0];
        assert!(generate(&too_far, 1, 1).is_err(), "outside scale radius");
    }

    #[test]
    fn scenario_text_round_trips() {
        let sc = Scenario::default();
        let parsed = Scenario::parse(&sc.to_text()).unwrap();
        assert_eq!(parsed, sc);
    }

    #[test]
    fn scenario_parser_rejects_malformed_text() {
        assert!(Scenario::parse("").is_err(), "no procedures");
        assert!(Scenario::parse("bogus_key = 1\nprocedure 0\n").is_err());
        assert!(Scenario::parse("waypoint 1 2 3\n").is_err(), "orphan waypoint");
        assert!(Scenario::parse("procedure 0\nwaypoint 1 2\n").is_err());
        assert!(Scenario::parse("procedure x\n").is_err(), "bad class id");
        assert!(Scenario::parse("noise_horizontal_m = abc\nprocedure 0\n").is_err());
        // A procedure with fewer than two waypoints fails validation.
        assert!(Scenario::parse("procedure 0\nwaypoint 1 2 3\n").is_err());
    }

    #[test]
    fn scenario_dataset_is_smoothed_downsampled_and_padded() {
        let mut sc = Scenario::default();
        sc.downsample_stride = 20;
        let ds = scenario_dataset(&sc, 2, 4).unwrap();
        assert_eq!(ds.len(), 8);
        assert!(ds.labels.iter().all(|l| l.is_some()));
        // Flights run roughly 520 s, so a stride of 20 leaves ~26 rows.
        for &len in &ds.lengths {
            assert!((20..35).contains(&len), "unexpected length {len}");
        }
        assert!(ds
            .meta
            .iter()
            .any(|(k, v)| k == "seed" && v == "4"));
    }
}
