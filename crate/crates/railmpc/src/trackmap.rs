//! Track-condition-and-topography map.
//!
//! The map stores everything the planner and controller know about the
//! route ahead of time: per-segment inclination, speed limit, and the two
//! adhesion profiles (good / bad weather), plus the station timetable.
//! Segments tile `[0, total_length]`; every lookup is total on that range
//! and piecewise constant, with the right-hand segment winning at a
//! breakpoint (a restriction that begins at `p` already applies at `p`).
//!
//! Inclination is stored piecewise constant, but the controller needs a
//! bounded spatial derivative, so a linear ramp over a transition window
//! (default 50 m) centered on each inclination breakpoint replaces the hard
//! step in the smoothed profile served by [`Map::inclination_smoothed_at`]
//! and [`Map::inclination_slope_at`].

use thiserror::Error;

/// Default half-life of an inclination transition, meters.
pub const DEFAULT_SLOPE_WINDOW: f64 = 50.0;

/// Weather-dependent adhesion selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TractionCondition {
    Good,
    Bad,
}

/// One homogeneous stretch of track. Valid until the next segment starts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackSegment {
    /// Position where the segment begins, meters from route start.
    pub start_pos: f64,
    /// Constant inclination on the segment, radians.
    pub inclination: f64,
    /// Speed limit, m/s.
    pub speed_limit: f64,
    /// Maximum adhesion coefficient under good conditions.
    pub traction_good: f64,
    /// Maximum adhesion coefficient under bad conditions.
    pub traction_bad: f64,
}

/// Scheduled stop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Station {
    /// Stop position, meters from route start.
    pub position: f64,
    /// Scheduled arrival, seconds since route start.
    pub arrival_time: f64,
    /// Planned passenger-exchange time, seconds.
    pub dwell_time: f64,
}

/// Route section between two consecutive stops, with its own time budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    /// Index of the station this leg arrives at.
    pub index: usize,
    /// Start position (previous station, or 0 for the first leg).
    pub start_pos: f64,
    /// Arrival-station position.
    pub end_pos: f64,
    /// Scheduled departure time.
    pub t_depart: f64,
    /// Scheduled arrival time.
    pub t_arrive: f64,
}

impl Leg {
    pub fn duration(&self) -> f64 {
        self.t_arrive - self.t_depart
    }

    pub fn length(&self) -> f64 {
        self.end_pos - self.start_pos
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("map validation failed: {0}")]
    Validation(String),
    #[error("position {pos} outside map range [0, {total}]")]
    OutOfRange { pos: f64, total: f64 },
    #[error("station index {index} out of range (map has {count} stations)")]
    BadStationIndex { index: usize, count: usize },
}

/// Immutable route description. Safe to share across threads after load.
#[derive(Clone, Debug)]
pub struct Map {
    segments: Vec<TrackSegment>,
    stations: Vec<Station>,
    total_length: f64,
    slope_window: f64,
    /// Inclination transitions: (breakpoint, left alpha, right alpha,
    /// half-width actually used after clipping against neighbors).
    ramps: Vec<(f64, f64, f64, f64)>,
}

impl Map {
    /// Builds and validates a map from already-parsed parts.
    pub fn new(
        segments: Vec<TrackSegment>,
        stations: Vec<Station>,
        total_length: f64,
    ) -> Result<Self, MapError> {
        Self::with_slope_window(segments, stations, total_length, DEFAULT_SLOPE_WINDOW)
    }

    /// Like [`Map::new`] with an explicit inclination transition window.
    pub fn with_slope_window(
        segments: Vec<TrackSegment>,
        stations: Vec<Station>,
        total_length: f64,
        slope_window: f64,
    ) -> Result<Self, MapError> {
        let mut map = Map {
            segments,
            stations,
            total_length,
            slope_window,
            ramps: Vec::new(),
        };
        map.validate()?;
        map.build_ramps();
        Ok(map)
    }

    fn validate(&self) -> Result<(), MapError> {
        let err = |msg: String| Err(MapError::Validation(msg));
        if !(self.total_length > 0.0) {
            return err(format!("total length must be > 0, got {}", self.total_length));
        }
        if self.segments.is_empty() {
            return err("map must contain at least one segment".into());
        }
        if self.segments[0].start_pos != 0.0 {
            return err(format!(
                "first segment must start at 0, got {}",
                self.segments[0].start_pos
            ));
        }
        for pair in self.segments.windows(2) {
            if pair[1].start_pos <= pair[0].start_pos {
                return err(format!(
                    "segment breakpoints must strictly increase: {} then {} (overlap or reorder)",
                    pair[0].start_pos, pair[1].start_pos
                ));
            }
        }
        if let Some(last) = self.segments.last() {
            if last.start_pos >= self.total_length {
                return err(format!(
                    "last segment start {} must lie before total length {}",
                    last.start_pos, self.total_length
                ));
            }
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.speed_limit > 0.0) {
                return err(format!("segment {i}: speed limit must be > 0"));
            }
            if !(s.traction_bad > 0.0 && s.traction_bad <= s.traction_good && s.traction_good <= 1.0)
            {
                return err(format!(
                    "segment {i}: traction must satisfy 0 < bad <= good <= 1, got bad={} good={}",
                    s.traction_bad, s.traction_good
                ));
            }
            if !(s.inclination.abs() < std::f64::consts::FRAC_PI_4) {
                return err(format!("segment {i}: |inclination| must be < pi/4"));
            }
            if !s.start_pos.is_finite() {
                return err(format!("segment {i}: non-finite start position"));
            }
        }
        let mut prev_departure = 0.0;
        let mut prev_pos = -1.0;
        for (i, st) in self.stations.iter().enumerate() {
            if !(st.position >= 0.0 && st.position <= self.total_length) {
                return err(format!(
                    "station {i} position {} outside [0, {}]",
                    st.position, self.total_length
                ));
            }
            if st.position <= prev_pos {
                return err(format!("station positions must strictly increase at index {i}"));
            }
            if st.arrival_time <= prev_departure {
                return err(format!(
                    "station {i} arrival {} not after previous departure {}",
                    st.arrival_time, prev_departure
                ));
            }
            if st.dwell_time < 0.0 {
                return err(format!("station {i}: dwell time must be >= 0"));
            }
            prev_departure = st.arrival_time + st.dwell_time;
            prev_pos = st.position;
        }
        Ok(())
    }

    /// Precomputes the linear-ramp transitions of the smoothed inclination
    /// profile. Each window is clipped so neighboring windows never overlap
    /// and never extend past the route ends.
    fn build_ramps(&mut self) {
        let mut breaks: Vec<(f64, f64, f64)> = Vec::new();
        for pair in self.segments.windows(2) {
            if pair[0].inclination != pair[1].inclination {
                breaks.push((pair[1].start_pos, pair[0].inclination, pair[1].inclination));
            }
        }
        let n = breaks.len();
        self.ramps = breaks
            .iter()
            .enumerate()
            .map(|(i, &(b, left, right))| {
                let mut half = self.slope_window / 2.0;
                if i > 0 {
                    half = half.min((b - breaks[i - 1].0) / 2.0);
                }
                if i + 1 < n {
                    half = half.min((breaks[i + 1].0 - b) / 2.0);
                }
                half = half.min(b).min(self.total_length - b);
                (b, left, right, half)
            })
            .collect();
    }

    pub fn segments(&self) -> &[TrackSegment] {
        &self.segments
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn slope_window(&self) -> f64 {
        self.slope_window
    }

    fn check_range(&self, p: f64) -> Result<(), MapError> {
        if p.is_finite() && (0.0..=self.total_length).contains(&p) {
            Ok(())
        } else {
            Err(MapError::OutOfRange { pos: p, total: self.total_length })
        }
    }

    /// Segment containing `p`; at a breakpoint the right-hand segment wins.
    fn segment_at(&self, p: f64) -> &TrackSegment {
        let idx = self.segments.partition_point(|s| s.start_pos <= p);
        &self.segments[idx.saturating_sub(1)]
    }

    /// Raw per-segment inclination at `p`, radians.
    pub fn inclination_at(&self, p: f64) -> Result<f64, MapError> {
        self.check_range(p)?;
        Ok(self.segment_at(p).inclination)
    }

    /// Inclination of the smoothed profile: equal to the raw value outside
    /// transition windows, linear ramp inside them.
    pub fn inclination_smoothed_at(&self, p: f64) -> Result<f64, MapError> {
        self.check_range(p)?;
        for &(b, left, right, half) in &self.ramps {
            if half > 0.0 && p >= b - half && p < b + half {
                let s = (p - (b - half)) / (2.0 * half);
                return Ok(left + (right - left) * s);
            }
        }
        Ok(self.segment_at(p).inclination)
    }

    /// Spatial derivative of the smoothed inclination profile, 1/m.
    pub fn inclination_slope_at(&self, p: f64) -> Result<f64, MapError> {
        self.check_range(p)?;
        for &(b, left, right, half) in &self.ramps {
            if half > 0.0 && p >= b - half && p < b + half {
                return Ok((right - left) / (2.0 * half));
            }
        }
        Ok(0.0)
    }

    /// Speed limit at `p`, m/s. Right-hand rule at breakpoints.
    pub fn speed_limit_at(&self, p: f64) -> Result<f64, MapError> {
        self.check_range(p)?;
        Ok(self.segment_at(p).speed_limit)
    }

    /// Maximum adhesion coefficient at `p` for the given weather condition.
    pub fn traction_at(&self, p: f64, cond: TractionCondition) -> Result<f64, MapError> {
        self.check_range(p)?;
        let seg = self.segment_at(p);
        Ok(match cond {
            TractionCondition::Good => seg.traction_good,
            TractionCondition::Bad => seg.traction_bad,
        })
    }

    /// Route leg ending at station `i`. The leg starts at the previous
    /// station (or the route origin) and departs after its dwell.
    pub fn leg_between(&self, i: usize) -> Result<Leg, MapError> {
        if i >= self.stations.len() {
            return Err(MapError::BadStationIndex { index: i, count: self.stations.len() });
        }
        let (start_pos, t_depart) = if i == 0 {
            (0.0, 0.0)
        } else {
            let prev = &self.stations[i - 1];
            (prev.position, prev.arrival_time + prev.dwell_time)
        };
        Ok(Leg {
            index: i,
            start_pos,
            end_pos: self.stations[i].position,
            t_depart,
            t_arrive: self.stations[i].arrival_time,
        })
    }

    pub fn num_legs(&self) -> usize {
        self.stations.len()
    }

    /// Serializes back to the `MAPv1` text format. Numbers use shortest
    /// round-trip formatting, so `load_map(serialize(m))` reproduces every
    /// lookup exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("MAPv1 {}\n", self.total_length));
        for s in &self.segments {
            out.push_str(&format!(
                "SEG {} {} {} {} {}\n",
                s.start_pos, s.inclination, s.speed_limit, s.traction_good, s.traction_bad
            ));
        }
        for st in &self.stations {
            out.push_str(&format!(
                "STA {} {} {}\n",
                st.position, st.arrival_time, st.dwell_time
            ));
        }
        out
    }
}

/// Parses the line-oriented `MAPv1` text format:
///
/// ```text
/// MAPv1 <total_length_m>
/// SEG <start_m> <alpha_rad> <vmax_mps> <mu_good> <mu_bad>
/// STA <pos_m> <arrival_s> <dwell_s>
/// ```
///
/// `#` starts a comment. Segment lines must come in ascending start order
/// with the first at 0.
pub fn load_map(text: &str) -> Result<Map, MapError> {
    let mut total_length = None;
    let mut segments = Vec::new();
    let mut stations = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let tag = fields.next().unwrap();
        let mut next_num = |name: &str| -> Result<f64, MapError> {
            let tok = fields.next().ok_or_else(|| MapError::Parse {
                line,
                msg: format!("missing field <{name}>"),
            })?;
            tok.parse::<f64>().map_err(|_| MapError::Parse {
                line,
                msg: format!("field <{name}>: cannot parse `{tok}` as a number"),
            })
        };
        match tag {
            "MAPv1" => {
                if total_length.is_some() {
                    return Err(MapError::Parse { line, msg: "duplicate MAPv1 header".into() });
                }
                total_length = Some(next_num("total_length_m")?);
            }
            "SEG" => {
                if total_length.is_none() {
                    return Err(MapError::Parse {
                        line,
                        msg: "SEG before MAPv1 header".into(),
                    });
                }
                segments.push(TrackSegment {
                    start_pos: next_num("start_m")?,
                    inclination: next_num("alpha_rad")?,
                    speed_limit: next_num("vmax_mps")?,
                    traction_good: next_num("mu_good")?,
                    traction_bad: next_num("mu_bad")?,
                });
            }
            "STA" => {
                if total_length.is_none() {
                    return Err(MapError::Parse {
                        line,
                        msg: "STA before MAPv1 header".into(),
                    });
                }
                stations.push(Station {
                    position: next_num("pos_m")?,
                    arrival_time: next_num("arrival_s")?,
                    dwell_time: next_num("dwell_s")?,
                });
            }
            other => {
                return Err(MapError::Parse {
                    line,
                    msg: format!("unknown record tag `{other}`"),
                });
            }
        }
        if let Some(extra) = fields.next() {
            return Err(MapError::Parse {
                line,
                msg: format!("unexpected trailing field `{extra}`"),
            });
        }
    }

    let total = total_length
        .ok_or(MapError::Parse { line: 0, msg: "missing MAPv1 header".into() })?;
    Map::new(segments, stations, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;

    fn tiny_map() -> Map {
        load_map(
            "MAPv1 1000\n\
             SEG 0 0.0 20 0.35 0.15\n\
             STA 1000 120 30\n",
        )
        .unwrap()
    }

    fn two_seg_map() -> Map {
        load_map(
            "MAPv1 1000\n\
             SEG 0 0.0 20 0.35 0.15\n\
             SEG 500 0.01 15 0.30 0.12\n\
             STA 1000 120 30\n",
        )
        .unwrap()
    }

    #[test]
    fn loads_minimal_map() {
        let m = tiny_map();
        assert_eq!(m.segments().len(), 1);
        assert_eq!(m.stations().len(), 1);
        assert_eq!(m.total_length(), 1000.0);
    }

    #[test]
    fn rejects_overlapping_segments() {
        let err = load_map(
            "MAPv1 1000\n\
             SEG 0 0.0 20 0.35 0.15\n\
             SEG 500 0.0 20 0.35 0.15\n\
             SEG 400 0.0 20 0.35 0.15\n",
        )
        .unwrap_err();
        match err {
            MapError::Validation(msg) => assert!(msg.contains("strictly increase"), "{msg}"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn rejects_non_monotone_timetable() {
        let err = load_map(
            "MAPv1 1000\n\
             SEG 0 0.0 20 0.35 0.15\n\
             STA 400 100 30\n\
             STA 800 90 30\n",
        )
        .unwrap_err();
        assert!(matches!(err, MapError::Validation(_)), "{err}");
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = load_map("MAPv1 1000\nSEG 0 zero 20 0.35 0.15\n").unwrap_err();
        match err {
            MapError::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("alpha_rad"), "{msg}");
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn demo_map_shape() {
        let m = demo::demo_map();
        assert_eq!(m.segments().len(), 11);
        assert_eq!(m.stations().len(), 4);
        // Breakpoints tile [0, total]; the closing breakpoint is the total length.
        assert_eq!(m.total_length(), 7200.0);
        assert!(m.segments().last().unwrap().start_pos < m.total_length());
    }

    #[test]
    fn lookups_use_right_hand_rule_at_breakpoints() {
        let m = two_seg_map();
        assert_eq!(m.inclination_at(250.0).unwrap(), 0.0);
        assert_eq!(m.inclination_at(600.0).unwrap(), 0.01);
        assert_eq!(m.inclination_at(500.0).unwrap(), 0.01);
        assert_eq!(m.speed_limit_at(500.0).unwrap(), 15.0);
        assert_eq!(m.traction_at(500.0, TractionCondition::Good).unwrap(), 0.30);
        assert_eq!(m.traction_at(500.0, TractionCondition::Bad).unwrap(), 0.12);
    }

    #[test]
    fn lookups_reject_out_of_range() {
        let m = tiny_map();
        assert!(m.inclination_at(-1.0).is_err());
        assert!(m.speed_limit_at(1000.1).is_err());
        assert!(m.traction_at(f64::NAN, TractionCondition::Good).is_err());
        assert!(m.inclination_at(1000.0).is_ok());
    }

    #[test]
    fn slope_is_zero_away_from_transitions() {
        let m = two_seg_map();
        assert_eq!(m.inclination_slope_at(100.0).unwrap(), 0.0);
        assert_eq!(m.inclination_slope_at(900.0).unwrap(), 0.0);
        assert_eq!(m.inclination_slope_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn slope_in_transition_window_matches_ramp() {
        // 50 m window centered at 500 between alpha 0 and 0.01.
        let m = two_seg_map();
        let expected = (0.01 - 0.0) / 50.0;
        assert!((m.inclination_slope_at(500.0).unwrap() - expected).abs() < 1e-15);
        assert!((m.inclination_slope_at(480.0).unwrap() - expected).abs() < 1e-15);
        assert_eq!(m.inclination_slope_at(FAR, ).unwrap(), 0.0);
        const FAR: f64 = 560.0;
    }

    #[test]
    fn slope_integrates_to_inclination_jump() {
        let m = demo::demo_map();
        // Trapezoid quadrature of the slope across each transition window
        // must reproduce the inclination jump.
        for pair in m.segments().windows(2) {
            let (a0, a1) = (pair[0].inclination, pair[1].inclination);
            if a0 == a1 {
                continue;
            }
            let b = pair[1].start_pos;
            let (lo, hi) = (b - 30.0, b + 30.0);
            let n = 60_000;
            let h = (hi - lo) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * m.inclination_slope_at(lo + i as f64 * h).unwrap();
            }
            acc *= h;
            assert!(
                (acc - (a1 - a0)).abs() < 1e-9,
                "window at {b}: integral {acc} vs jump {}",
                a1 - a0
            );
        }
    }

    #[test]
    fn smoothed_profile_is_continuous_and_matches_raw_outside_windows() {
        let m = demo::demo_map();
        let mut prev = m.inclination_smoothed_at(0.0).unwrap();
        let step = 0.05;
        let mut p = step;
        while p <= m.total_length() {
            let cur = m.inclination_smoothed_at(p).unwrap();
            assert!((cur - prev).abs() < 1e-4, "jump at {p}: {prev} -> {cur}");
            prev = cur;
            p += step;
        }
    }

    #[test]
    fn leg_between_arithmetic() {
        let m = demo::demo_map();
        let leg0 = m.leg_between(0).unwrap();
        assert_eq!(leg0.start_pos, 0.0);
        assert_eq!(leg0.t_depart, 0.0);
        assert_eq!(leg0.end_pos, m.stations()[0].position);
        assert_eq!(leg0.t_arrive, m.stations()[0].arrival_time);

        let leg1 = m.leg_between(1).unwrap();
        assert_eq!(leg1.start_pos, m.stations()[0].position);
        assert_eq!(
            leg1.t_depart,
            m.stations()[0].arrival_time + m.stations()[0].dwell_time
        );

        assert!(m.leg_between(m.stations().len()).is_err());
    }

    #[test]
    fn serialize_round_trips_all_lookups() {
        let m = demo::demo_map();
        let re = load_map(&m.serialize()).unwrap();
        let n = 10_000;
        for i in 0..=n {
            let p = m.total_length() * i as f64 / n as f64;
            assert_eq!(m.inclination_at(p).unwrap(), re.inclination_at(p).unwrap());
            assert_eq!(m.speed_limit_at(p).unwrap(), re.speed_limit_at(p).unwrap());
            assert_eq!(
                m.traction_at(p, TractionCondition::Good).unwrap(),
                re.traction_at(p, TractionCondition::Good).unwrap()
            );
            assert_eq!(
                m.traction_at(p, TractionCondition::Bad).unwrap(),
                re.traction_at(p, TractionCondition::Bad).unwrap()
            );
            assert_eq!(
                m.inclination_slope_at(p).unwrap(),
                re.inclination_slope_at(p).unwrap()
            );
        }
    }

    #[test]
    fn bad_traction_never_exceeds_good() {
        let m = demo::demo_map();
        for i in 0..=5000 {
            let p = m.total_length() * i as f64 / 5000.0;
            let good = m.traction_at(p, TractionCondition::Good).unwrap();
            let bad = m.traction_at(p, TractionCondition::Bad).unwrap();
            assert!(bad <= good, "at {p}: bad {bad} > good {good}");
        }
    }
}
