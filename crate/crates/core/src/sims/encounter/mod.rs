//! A multi-aircraft mid-air encounter with collision avoidance, pilot
//! response delays and stochastic pilot commands.
//!
//! Each step draws the intended commands of every aircraft from one seed,
//! runs the collision avoidance logic, applies pilot response, and integrates
//! the kinematics. The failure event is a near mid-air collision (NMAC).

pub mod cas;
pub mod dynamics;
pub mod pilot;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ContractError;
use crate::seed::{Seed, SeedStream};
use crate::sim::{SeedActionSimulator, StepOutput};
use crate::sims::walker::normal_pdf;

use cas::{cas_step, Advisory, CasParams, RaState};
use dynamics::{step_dynamics, AircraftState, PilotCommand, VerticalCommand};
use pilot::PilotModel;

/// Standard deviations of the intended pilot commands. A zero scale makes
/// that channel deterministic and drops it from the likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommandNoise {
    /// ft/s^2
    pub vertical_accel: f64,
    /// rad/s
    pub turn_rate: f64,
    /// ft/s^2
    pub airspeed_accel: f64,
}

impl Default for CommandNoise {
    fn default() -> Self {
        CommandNoise {
            vertical_accel: 3.0,
            turn_rate: 0.03,
            airspeed_accel: 1.0,
        }
    }
}

impl CommandNoise {
    pub const ZERO: CommandNoise = CommandNoise {
        vertical_accel: 0.0,
        turn_rate: 0.0,
        airspeed_accel: 0.0,
    };
}

/// Uniform ranges `[lo, hi]` sampled by the star initializer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitRanges {
    pub airspeed: [f64; 2],
    pub altitude: [f64; 2],
    pub vertical_rate: [f64; 2],
    /// Seconds until unalerted aircraft converge on the origin.
    pub intersect_time: f64,
}

impl Default for InitRanges {
    fn default() -> Self {
        InitRanges {
            airspeed: [150.0, 250.0],
            altitude: [9_800.0, 10_200.0],
            vertical_rate: [-5.0, 5.0],
            intersect_time: 40.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncounterConfig {
    pub num_aircraft: usize,
    /// Transitions per episode at 1 s each.
    pub horizon: usize,
    pub nmac_horizontal: f64,
    pub nmac_vertical: f64,
    pub pilot_initial_delay: u32,
    pub pilot_subsequent_delay: u32,
    pub command_noise: CommandNoise,
    pub cas: CasParams,
    pub init: InitRanges,
}

impl Default for EncounterConfig {
    fn default() -> Self {
        EncounterConfig {
            num_aircraft: 2,
            horizon: 50,
            nmac_horizontal: 500.0,
            nmac_vertical: 100.0,
            pilot_initial_delay: 5,
            pilot_subsequent_delay: 3,
            command_noise: CommandNoise::default(),
            cas: CasParams::default(),
            init: InitRanges::default(),
        }
    }
}

impl EncounterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(2..=3).contains(&self.num_aircraft) {
            return Err(format!("num_aircraft must be 2 or 3, got {}", self.num_aircraft));
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if !(self.nmac_horizontal > 0.0 && self.nmac_vertical > 0.0) {
            return Err("NMAC thresholds must be positive".into());
        }
        let n = &self.command_noise;
        for (name, v) in [
            ("vertical_accel", n.vertical_accel),
            ("turn_rate", n.turn_rate),
            ("airspeed_accel", n.airspeed_accel),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("command_noise.{name} must be non-negative, got {v}"));
            }
        }
        self.cas.validate()?;
        let r = &self.init;
        for (name, [lo, hi]) in [
            ("airspeed", r.airspeed),
            ("altitude", r.altitude),
            ("vertical_rate", r.vertical_rate),
        ] {
            if !(lo <= hi) {
                return Err(format!("init.{name} range is empty"));
            }
        }
        if r.airspeed[0] <= 0.0 {
            return Err("init.airspeed must be positive".into());
        }
        if !(r.intersect_time > 0.0) {
            return Err("init.intersect_time must be positive".into());
        }
        Ok(())
    }
}

/// Places aircraft on a circle at equal bearings, all heading for the origin,
/// each at the distance it covers in `intersect_time` seconds.
pub fn star_initializer(cfg: &EncounterConfig, init_seed: u64) -> Vec<AircraftState> {
    let mut rng = SeedStream::new(Seed(init_seed));
    let r = &cfg.init;
    (0..cfg.num_aircraft)
        .map(|i| {
            let bearing = std::f64::consts::TAU * i as f64 / cfg.num_aircraft as f64;
            let airspeed = rng.uniform(r.airspeed[0], r.airspeed[1]);
            let altitude = rng.uniform(r.altitude[0], r.altitude[1]);
            let vertical_rate = rng.uniform(r.vertical_rate[0], r.vertical_rate[1]);
            let radius = airspeed * r.intersect_time;
            AircraftState {
                north: radius * bearing.cos(),
                east: radius * bearing.sin(),
                altitude,
                vertical_rate,
                heading: dynamics::wrap_angle(bearing + std::f64::consts::PI),
                airspeed,
            }
        })
        .collect()
}

/// True when any pair is inside both NMAC thresholds.
pub fn nmac_check(states: &[AircraftState], horizontal: f64, vertical: f64) -> bool {
    pairs(states.len()).any(|(i, j)| {
        states[i].horizontal_distance(&states[j]) < horizontal
            && states[i].vertical_distance(&states[j]) < vertical
    })
}

/// Smallest pairwise 3-D distance over a trajectory of snapshots.
pub fn encounter_miss_distance(trajectory: &[Vec<AircraftState>]) -> f64 {
    trajectory
        .iter()
        .map(|s| closest_pair(s))
        .fold(f64::INFINITY, f64::min)
}

fn closest_pair(states: &[AircraftState]) -> f64 {
    pairs(states.len())
        .map(|(i, j)| states[i].distance(&states[j]))
        .fold(f64::INFINITY, f64::min)
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Density factor of one noise channel; deterministic channels contribute 1.
fn channel_density(x: f64, std: f64) -> f64 {
    if std > 0.0 {
        normal_pdf(x, std)
    } else {
        1.0
    }
}

#[derive(Clone, Debug)]
pub struct EncounterSim {
    cfg: EncounterConfig,
    initial: Vec<AircraftState>,
    states: Vec<AircraftState>,
    ra: RaState,
    pilots: Vec<PilotModel>,
    t: usize,
    nmac: bool,
    min_distance: f64,
    initialized: bool,
    log: Option<Value>,
}

impl EncounterSim {
    pub fn new(cfg: EncounterConfig, init_seed: u64) -> Result<Self, String> {
        cfg.validate()?;
        let initial = star_initializer(&cfg, init_seed);
        Ok(Self::with_initial_states(cfg, initial))
    }

    /// Starts from explicit initial states instead of the star model.
    pub fn with_initial_states(cfg: EncounterConfig, initial: Vec<AircraftState>) -> Self {
        let n = initial.len();
        let mut sim = EncounterSim {
            cfg,
            states: initial.clone(),
            initial,
            ra: RaState::new(n),
            pilots: vec![PilotModel::new(cfg.pilot_initial_delay, cfg.pilot_subsequent_delay); n],
            t: 0,
            nmac: false,
            min_distance: f64::INFINITY,
            initialized: false,
            log: None,
        };
        sim.reset();
        sim.initialized = false;
        sim
    }

    fn reset(&mut self) {
        self.states.clone_from(&self.initial);
        self.ra = RaState::new(self.initial.len());
        for p in &mut self.pilots {
            p.reset();
        }
        self.t = 0;
        self.nmac = nmac_check(&self.states, self.cfg.nmac_horizontal, self.cfg.nmac_vertical);
        self.min_distance = closest_pair(&self.states);
        self.log = None;
    }

    pub fn config(&self) -> &EncounterConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[AircraftState] {
        &self.states
    }

    pub fn ra_state(&self) -> &RaState {
        &self.ra
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn nmac(&self) -> bool {
        self.nmac
    }

    fn snapshot(&self, responding: &[bool]) -> Value {
        let aircraft: Vec<Value> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                json!({
                    "north": s.north,
                    "east": s.east,
                    "altitude": s.altitude,
                    "vertical_rate": s.vertical_rate,
                    "heading": s.heading,
                    "airspeed": s.airspeed,
                    "advisory": self.ra.active[i].advisory.code(),
                    "responding": responding.get(i).copied().unwrap_or(false),
                })
            })
            .collect();
        json!({ "time": self.t, "aircraft": aircraft })
    }
}

impl SeedActionSimulator for EncounterSim {
    fn initialize(&mut self) {
        self.reset();
        self.initialized = true;
    }

    fn step(&mut self, seed: Seed) -> Result<StepOutput, ContractError> {
        if !self.initialized {
            return Err(ContractError::NotInitialized);
        }
        let noise = self.cfg.command_noise;
        let mut rng = SeedStream::new(seed);
        // (vertical accel, turn rate, airspeed accel) noise per aircraft
        let draws: Vec<[f64; 3]> = (0..self.states.len())
            .map(|_| {
                [
                    rng.standard_normal() * noise.vertical_accel,
                    rng.standard_normal() * noise.turn_rate,
                    rng.standard_normal() * noise.airspeed_accel,
                ]
            })
            .collect();
        let event = self.nmac;
        let miss_distance = Some(self.min_distance);

        if self.is_terminal() {
            let likelihood = draws
                .iter()
                .map(|&[v, t, a]| {
                    channel_density(v, noise.vertical_accel)
                        * channel_density(t, noise.turn_rate)
                        * channel_density(a, noise.airspeed_accel)
                })
                .product();
            self.log = Some(self.snapshot(&[]));
            return Ok(StepOutput {
                likelihood,
                event,
                miss_distance,
            });
        }

        let now = self.t as f64;
        cas_step(&self.states, &mut self.ra, &self.cfg.cas);
        let mut likelihood = 1.0;
        let mut responding = Vec::with_capacity(self.states.len());
        let mut flown = Vec::with_capacity(self.states.len());
        for (i, &[v, t, a]) in draws.iter().enumerate() {
            let want = PilotCommand {
                vertical: VerticalCommand::Accel { accel: v },
                turn_rate: t,
                airspeed_accel: a,
            };
            let pilot = &mut self.pilots[i];
            pilot.notify(now, self.ra.active[i].advisory);
            let cmd = pilot.command(now, want);
            let follows_ra = pilot.responding_to() != Advisory::None;
            if !follows_ra {
                likelihood *= channel_density(v, noise.vertical_accel);
            }
            likelihood *= channel_density(t, noise.turn_rate) * channel_density(a, noise.airspeed_accel);
            responding.push(follows_ra);
            flown.push(cmd);
        }
        self.log = Some(self.snapshot(&responding));

        for (s, cmd) in self.states.iter_mut().zip(&flown) {
            *s = step_dynamics(s, cmd, 1.0);
        }
        self.t += 1;
        self.nmac = nmac_check(&self.states, self.cfg.nmac_horizontal, self.cfg.nmac_vertical);
        self.min_distance = self.min_distance.min(closest_pair(&self.states));

        Ok(StepOutput {
            likelihood,
            event,
            miss_distance,
        })
    }

    fn is_terminal(&self) -> bool {
        self.nmac || self.t >= self.cfg.horizon
    }

    fn max_steps(&self) -> usize {
        self.cfg.horizon + 1
    }

    fn step_details(&self) -> Option<Value> {
        self.log.clone()
    }
}
