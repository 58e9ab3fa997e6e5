//! Deterministic pilot response with fixed delays.
//!
//! An initial advisory takes effect after the initial delay; strengthenings,
//! reversals and clear-of-conflict take effect after the subsequent delay.
//! Until then the pilot keeps flying whatever it was flying. Advisories are
//! queued so their order and timing are preserved.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::cas::Advisory;
use super::dynamics::{PilotCommand, VerticalCommand};

/// A subsequent advisory this close (s) to a still-pending initial one
/// replaces it and inherits initial-response timing.
const MERGE_WINDOW: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Pending {
    advisory: Advisory,
    issued_at: f64,
    effective_at: f64,
    initial: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PilotModel {
    initial_delay: f64,
    subsequent_delay: f64,
    queue: VecDeque<Pending>,
    responding_to: Advisory,
    last_issued: Advisory,
}

impl PilotModel {
    pub fn new(initial_delay: u32, subsequent_delay: u32) -> Self {
        PilotModel {
            initial_delay: initial_delay as f64,
            subsequent_delay: subsequent_delay as f64,
            queue: VecDeque::new(),
            responding_to: Advisory::None,
            last_issued: Advisory::None,
        }
    }

    pub fn reset(&mut self) {
        self.queue.clear();
        self.responding_to = Advisory::None;
        self.last_issued = Advisory::None;
    }

    /// The advisory the pilot is currently flying, `None` when flying the
    /// intended trajectory.
    pub fn responding_to(&self) -> Advisory {
        self.responding_to
    }

    /// Records the advisory displayed at time `t`. Repeats are ignored.
    pub fn notify(&mut self, t: f64, advisory: Advisory) {
        if advisory == self.last_issued {
            return;
        }
        self.last_issued = advisory;
        let idle = self.responding_to == Advisory::None && self.queue.is_empty();
        if idle {
            if advisory != Advisory::None {
                self.queue.push_back(Pending {
                    advisory,
                    issued_at: t,
                    effective_at: t + self.initial_delay,
                    initial: true,
                });
            }
            return;
        }
        if let Some(back) = self.queue.back_mut() {
            if back.initial && t - back.issued_at <= MERGE_WINDOW {
                if advisory == Advisory::None {
                    self.queue.pop_back();
                } else {
                    *back = Pending {
                        advisory,
                        issued_at: t,
                        effective_at: t + self.initial_delay,
                        initial: true,
                    };
                }
                return;
            }
        }
        self.queue.push_back(Pending {
            advisory,
            issued_at: t,
            effective_at: t + self.subsequent_delay,
            initial: false,
        });
    }

    /// The command actually flown at time `t` given the intended command.
    /// Only the vertical channel follows an advisory.
    pub fn command(&mut self, t: f64, intended: PilotCommand) -> PilotCommand {
        while let Some(front) = self.queue.front() {
            if front.effective_at <= t {
                self.responding_to = front.advisory;
                self.queue.pop_front();
            } else {
                break;
            }
        }
        match self.responding_to.target() {
            Some((rate, accel)) => PilotCommand {
                vertical: VerticalCommand::TargetRate { rate, accel },
                ..intended
            },
            None => intended,
        }
    }
}

/// One-shot query: the command for an advisory history at time `t`.
pub fn pilot_response(
    pilot: &mut PilotModel,
    t: f64,
    displayed: Advisory,
    intended: PilotCommand,
) -> PilotCommand {
    pilot.notify(t, displayed);
    pilot.command(t, intended)
}
