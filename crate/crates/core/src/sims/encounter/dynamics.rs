//! Point-mass aircraft kinematics integrated with forward Euler at 1 Hz.

use serde::{Deserialize, Serialize};

/// Standard gravity in ft/s^2.
pub const G: f64 = 32.2;
/// Airspeed floor so that the state stays physical under noisy commands.
pub const MIN_AIRSPEED: f64 = 50.0;
/// Magnitude cap on vertical rate (ft/s) under intended commands.
pub const MAX_VERTICAL_RATE: f64 = 100.0;

/// Positions in ft, rates in ft/s, heading in radians clockwise from north.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AircraftState {
    pub north: f64,
    pub east: f64,
    pub altitude: f64,
    pub vertical_rate: f64,
    pub heading: f64,
    pub airspeed: f64,
}

impl AircraftState {
    pub fn horizontal_velocity(&self) -> (f64, f64) {
        (
            self.airspeed * self.heading.cos(),
            self.airspeed * self.heading.sin(),
        )
    }

    pub fn horizontal_distance(&self, other: &AircraftState) -> f64 {
        (self.north - other.north).hypot(self.east - other.east)
    }

    pub fn vertical_distance(&self, other: &AircraftState) -> f64 {
        (self.altitude - other.altitude).abs()
    }

    pub fn distance(&self, other: &AircraftState) -> f64 {
        self.horizontal_distance(other).hypot(self.altitude - other.altitude)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VerticalCommand {
    /// Free vertical acceleration in ft/s^2.
    Accel { accel: f64 },
    /// Move the vertical rate toward `rate` at no more than `accel`, then hold.
    TargetRate { rate: f64, accel: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotCommand {
    pub vertical: VerticalCommand,
    /// rad/s
    pub turn_rate: f64,
    /// ft/s^2
    pub airspeed_accel: f64,
}

impl PilotCommand {
    pub const ZERO: PilotCommand = PilotCommand {
        vertical: VerticalCommand::Accel { accel: 0.0 },
        turn_rate: 0.0,
        airspeed_accel: 0.0,
    };
}

/// Advances one aircraft by `dt` seconds. Positions integrate the current
/// rates; rates then integrate the command.
pub fn step_dynamics(s: &AircraftState, cmd: &PilotCommand, dt: f64) -> AircraftState {
    let (vn, ve) = s.horizontal_velocity();
    let vertical_rate = match cmd.vertical {
        VerticalCommand::Accel { accel } => (s.vertical_rate + accel * dt)
            .clamp(-MAX_VERTICAL_RATE, MAX_VERTICAL_RATE),
        VerticalCommand::TargetRate { rate, accel } => {
            let max_change = accel.abs() * dt;
            s.vertical_rate + (rate - s.vertical_rate).clamp(-max_change, max_change)
        }
    };
    AircraftState {
        north: s.north + vn * dt,
        east: s.east + ve * dt,
        altitude: s.altitude + s.vertical_rate * dt,
        vertical_rate,
        heading: wrap_angle(s.heading + cmd.turn_rate * dt),
        airspeed: (s.airspeed + cmd.airspeed_accel * dt).max(MIN_AIRSPEED),
    }
}

/// Wraps to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
