//! A transparent rule-based collision avoidance system.
//!
//! Each aircraft projects every intruder to the horizontal closest point of
//! approach. An intruder is a threat when that point is close in time,
//! horizontal miss and projected vertical separation. Threatened aircraft get
//! a vertical resolution advisory; senses are coordinated pairwise so two
//! aircraft never climb (or descend) against each other.

use serde::{Deserialize, Serialize};

use super::dynamics::{AircraftState, G};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Up,
    Down,
}

impl Sense {
    pub fn opposite(self) -> Sense {
        match self {
            Sense::Up => Sense::Down,
            Sense::Down => Sense::Up,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Advisory {
    #[default]
    None,
    Climb,
    Descend,
    LevelOff,
    StrongClimb,
    StrongDescend,
}

impl Advisory {
    pub fn code(self) -> &'static str {
        match self {
            Advisory::None => "COC",
            Advisory::Climb => "CL1500",
            Advisory::Descend => "DS1500",
            Advisory::LevelOff => "LEVEL",
            Advisory::StrongClimb => "CL2500",
            Advisory::StrongDescend => "DS2500",
        }
    }

    pub fn sense(self) -> Option<Sense> {
        match self {
            Advisory::Climb | Advisory::StrongClimb => Some(Sense::Up),
            Advisory::Descend | Advisory::StrongDescend => Some(Sense::Down),
            Advisory::None | Advisory::LevelOff => None,
        }
    }

    pub fn is_strong(self) -> bool {
        matches!(self, Advisory::StrongClimb | Advisory::StrongDescend)
    }

    pub fn weak(sense: Sense) -> Advisory {
        match sense {
            Sense::Up => Advisory::Climb,
            Sense::Down => Advisory::Descend,
        }
    }

    pub fn strong(sense: Sense) -> Advisory {
        match sense {
            Sense::Up => Advisory::StrongClimb,
            Sense::Down => Advisory::StrongDescend,
        }
    }

    /// Target vertical rate in ft/s and the acceleration used to reach it, or
    /// `None` for clear of conflict.
    pub fn target(self) -> Option<(f64, f64)> {
        const WEAK: f64 = 1500.0 / 60.0;
        const STRONG: f64 = 2500.0 / 60.0;
        match self {
            Advisory::None => None,
            Advisory::Climb => Some((WEAK, G / 4.0)),
            Advisory::Descend => Some((-WEAK, G / 4.0)),
            Advisory::LevelOff => Some((0.0, G / 4.0)),
            Advisory::StrongClimb => Some((STRONG, G / 3.0)),
            Advisory::StrongDescend => Some((-STRONG, G / 3.0)),
        }
    }
}

/// A strengthened advisory may only follow the weaker advisory of the same
/// sense; any other request for one degrades to that weaker advisory.
pub fn enforce_precedence(current: Advisory, requested: Advisory) -> Advisory {
    match requested.sense() {
        Some(sense) if requested.is_strong() && current.sense() != Some(sense) => {
            Advisory::weak(sense)
        }
        _ => requested,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CasParams {
    pub enabled: bool,
    /// Alert when the closest point of approach is at most this many seconds away.
    pub alert_time: f64,
    /// Horizontal miss distance at closest approach (ft) below which an
    /// intruder can be a threat.
    pub alert_range: f64,
    /// Projected vertical separation at closest approach (ft) below which an
    /// intruder can be a threat.
    pub alert_vertical: f64,
    /// Strengthen when closest approach is this near (s) and the weak
    /// advisory is projected to leave less than `alert_vertical`.
    pub strengthen_time: f64,
}

impl Default for CasParams {
    fn default() -> Self {
        CasParams {
            enabled: true,
            alert_time: 30.0,
            alert_range: 2_000.0,
            alert_vertical: 600.0,
            strengthen_time: 20.0,
        }
    }
}

impl CasParams {
    pub fn disabled() -> Self {
        CasParams {
            enabled: false,
            ..Default::default()
        }
    }

    /// A later-alerting variant, used as the system under test against the
    /// default as a baseline.
    pub fn weak() -> Self {
        CasParams {
            alert_time: 15.0,
            strengthen_time: 8.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alert_time", self.alert_time),
            ("alert_range", self.alert_range),
            ("alert_vertical", self.alert_vertical),
            ("strengthen_time", self.strengthen_time),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("cas.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Projection of one intruder relative to own aircraft.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Seconds to horizontal closest approach, zero when diverging.
    pub time_to_cpa: f64,
    pub horizontal_miss: f64,
    /// Intruder altitude minus own altitude at closest approach, using
    /// current vertical rates.
    pub vertical_offset: f64,
    /// As `vertical_offset` but with own aircraft held level.
    pub vertical_offset_level: f64,
    pub closing: bool,
}

pub fn project(own: &AircraftState, intruder: &AircraftState) -> Projection {
    let (own_vn, own_ve) = own.horizontal_velocity();
    let (int_vn, int_ve) = intruder.horizontal_velocity();
    let (dn, de) = (intruder.north - own.north, intruder.east - own.east);
    let (vn, ve) = (int_vn - own_vn, int_ve - own_ve);
    let vv = vn * vn + ve * ve;
    let dot = dn * vn + de * ve;
    let t = if vv > 1e-9 { (-dot / vv).max(0.0) } else { 0.0 };
    let horizontal_miss = (dn + vn * t).hypot(de + ve * t);
    let dz = intruder.altitude - own.altitude;
    Projection {
        time_to_cpa: t,
        horizontal_miss,
        vertical_offset: dz + (intruder.vertical_rate - own.vertical_rate) * t,
        vertical_offset_level: dz + intruder.vertical_rate * t,
        closing: dot < 0.0,
    }
}

/// An advisory currently held by one aircraft and the intruders it was
/// issued against.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActiveAdvisory {
    pub advisory: Advisory,
    pub against: Vec<usize>,
}

/// Coordination state shared by all aircraft: the advisory each one holds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RaState {
    pub active: Vec<ActiveAdvisory>,
}

impl RaState {
    pub fn new(num_aircraft: usize) -> Self {
        RaState {
            active: vec![ActiveAdvisory::default(); num_aircraft],
        }
    }

    /// True when some pair holds same-sense advisories issued against each
    /// other.
    pub fn has_same_sense_conflict(&self) -> bool {
        for (i, a) in self.active.iter().enumerate() {
            for &j in &a.against {
                let b = &self.active[j];
                if b.against.contains(&i)
                    && a.advisory.sense().is_some()
                    && a.advisory.sense() == b.advisory.sense()
                {
                    return true;
                }
            }
        }
        false
    }
}

fn is_threat(p: &Projection, params: &CasParams) -> bool {
    let inbound = p.closing && p.time_to_cpa <= params.alert_time;
    inbound && p.horizontal_miss < params.alert_range && p.vertical_offset.abs() < params.alert_vertical
}

/// Decides the advisory for aircraft `own` given every aircraft's state and
/// the advisories currently held by the others.
pub fn cas_update(
    own: usize,
    states: &[AircraftState],
    ra: &RaState,
    params: &CasParams,
) -> ActiveAdvisory {
    if !params.enabled {
        return ActiveAdvisory::default();
    }
    let me = &states[own];
    let current = ra.active[own].advisory;

    let mut threats: Vec<(usize, Projection)> = states
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != own)
        .map(|(j, s)| (j, project(me, s)))
        .filter(|(_, p)| is_threat(p, params))
        .collect();
    // once alerted, keep the intruders we alerted against while they close
    for &j in &ra.active[own].against {
        if threats.iter().all(|(k, _)| *k != j) {
            let p = project(me, &states[j]);
            if p.closing && p.horizontal_miss < params.alert_range {
                threats.push((j, p));
            }
        }
    }
    if threats.is_empty() {
        return ActiveAdvisory::default();
    }
    threats.sort_by(|a, b| a.1.time_to_cpa.total_cmp(&b.1.time_to_cpa).then(a.0.cmp(&b.0)));
    let against: Vec<usize> = threats.iter().map(|(j, _)| *j).collect();

    // coordination: anyone holding a sense against us forces the opposite
    let mut required: Option<Sense> = None;
    for (j, other) in ra.active.iter().enumerate() {
        if j == own || !other.against.contains(&own) {
            continue;
        }
        if let Some(s) = other.advisory.sense() {
            match required {
                None => required = Some(s.opposite()),
                Some(r) if r != s.opposite() => {
                    return ActiveAdvisory {
                        advisory: Advisory::LevelOff,
                        against,
                    };
                }
                _ => {}
            }
        }
    }

    let (lead, p) = threats[0];
    let sense = match (required, current.sense()) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) => {
            if p.vertical_offset_level.abs() >= params.alert_vertical {
                return ActiveAdvisory {
                    advisory: Advisory::LevelOff,
                    against,
                };
            }
            if p.vertical_offset < 0.0 || (p.vertical_offset == 0.0 && own < lead) {
                Sense::Up
            } else {
                Sense::Down
            }
        }
    };

    let mut requested = Advisory::weak(sense);
    if current.sense() == Some(sense) {
        if current.is_strong() {
            requested = current;
        } else if p.time_to_cpa <= params.strengthen_time {
            let (rate, _) = current.target().unwrap_or((0.0, 0.0));
            let projected = states[lead].altitude - me.altitude
                + (states[lead].vertical_rate - rate) * p.time_to_cpa;
            if projected.abs() < params.alert_vertical {
                requested = Advisory::strong(sense);
            }
        }
    }
    ActiveAdvisory {
        advisory: enforce_precedence(current, requested),
        against,
    }
}

/// Runs the CAS for every aircraft in index order, publishing each decision
/// before the next aircraft decides.
pub fn cas_step(states: &[AircraftState], ra: &mut RaState, params: &CasParams) {
    for i in 0..states.len() {
        let decision = cas_update(i, states, ra, params);
        ra.active[i] = decision;
    }
}
