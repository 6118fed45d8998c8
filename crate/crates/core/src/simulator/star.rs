//! The contact process on a star with `n` leaves, lumped to `(j, center)`:
//! `j` infected leaves and the center's state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{replica_rng, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StarState {
    pub n: u32,
    pub j: u32,
    pub center: bool,
}

impl StarState {
    pub fn new(n: u32, j: u32, center: bool) -> Result<Self, SimError> {
        if j > n {
            return Err(SimError::InvalidConfig(format!("{j} infected leaves on a star with {n}")));
        }
        Ok(Self { n, j, center })
    }

    pub fn is_absorbed(&self) -> bool {
        self.j == 0 && !self.center
    }

    /// Index into `0..2(n+1)`: `2j + center`.
    pub fn index(&self) -> usize {
        2 * self.j as usize + self.center as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StarTransition {
    LeafInfected,
    LeafRecovered,
    CenterRecovered,
    CenterInfected,
}

impl StarTransition {
    pub const ALL: [StarTransition; 4] = [
        StarTransition::LeafInfected,
        StarTransition::LeafRecovered,
        StarTransition::CenterRecovered,
        StarTransition::CenterInfected,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarChain {
    pub lambda: f64,
    pub state: StarState,
    pub time: f64,
}

impl StarChain {
    pub fn new(lambda: f64, init: StarState) -> Self {
        Self {
            lambda,
            state: init,
            time: 0.0,
        }
    }

    /// Rates in the order of [`StarTransition::ALL`].
    pub fn rates_at(lambda: f64, s: StarState) -> [f64; 4] {
        let j = s.j as f64;
        let c = s.center as u8 as f64;
        [lambda * (s.n - s.j) as f64 * c, j, c, lambda * j * (1.0 - c)]
    }

    pub fn rates(&self) -> [f64; 4] {
        Self::rates_at(self.lambda, self.state)
    }

    /// Draws the holding time and the next transition without applying them;
    /// `None` in an absorbing state.
    pub fn sample_step(&self, rng: &mut ChaCha8Rng) -> Option<(f64, StarTransition)> {
        let rates = self.rates();
        let total: f64 = rates.iter().sum();
        if total == 0.0 {
            return None;
        }
        let dt = rng.sample::<f64, _>(Exp1) / total;
        let mut u = rng.random::<f64>() * total;
        let mut pick = StarTransition::ALL.len() - 1;
        for (i, &r) in rates.iter().enumerate() {
            if u < r {
                pick = i;
                break;
            }
            u -= r;
        }
        while rates[pick] == 0.0 {
            pick -= 1;
        }
        Some((dt, StarTransition::ALL[pick]))
    }

    pub fn apply(&mut self, dt: f64, tr: StarTransition) {
        self.time += dt;
        let s = &mut self.state;
        match tr {
            StarTransition::LeafInfected => s.j += 1,
            StarTransition::LeafRecovered => s.j -= 1,
            StarTransition::CenterRecovered => s.center = false,
            StarTransition::CenterInfected => s.center = true,
        }
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> Option<(f64, StarTransition)> {
        let event = self.sample_step(rng)?;
        self.apply(event.0, event.1);
        Some(event)
    }
}

/// Stop conditions; absorption at `(0, 0)` always stops the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StarStops {
    pub reach_l: Option<u32>,
    pub horizon: Option<f64>,
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StarHit {
    Absorbed,
    ReachedL,
    Horizon,
    EventCap,
}

impl StarHit {
    pub fn as_str(self) -> &'static str {
        match self {
            StarHit::Absorbed => "absorb_00",
            StarHit::ReachedL => "reach_l",
            StarHit::Horizon => "horizon",
            StarHit::EventCap => "event_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarRun {
    pub hit: StarHit,
    pub time: f64,
    /// Largest `j` seen.
    pub peak: u32,
    /// Time average of `j` over `[0, time]`; `j` itself when `time = 0`.
    pub mean_j: f64,
    pub events: u64,
}

pub fn run_star_with(lambda: f64, init: StarState, stops: &StarStops, rng: &mut ChaCha8Rng) -> StarRun {
    let mut chain = StarChain::new(lambda, init);
    let mut peak = init.j;
    let mut area = 0.0;
    let mut events = 0u64;
    let hit = loop {
        let s = chain.state;
        if s.is_absorbed() {
            break StarHit::Absorbed;
        }
        if stops.reach_l.is_some_and(|l| s.j >= l) {
            break StarHit::ReachedL;
        }
        if stops.max_events.is_some_and(|m| events >= m) {
            break StarHit::EventCap;
        }
        let (dt, tr) = chain.sample_step(rng).expect("only (0,0) is absorbing");
        if let Some(h) = stops.horizon {
            if chain.time + dt > h {
                area += s.j as f64 * (h - chain.time);
                chain.time = h;
                break StarHit::Horizon;
            }
        }
        area += s.j as f64 * dt;
        chain.apply(dt, tr);
        events += 1;
        peak = peak.max(chain.state.j);
    };
    let mean_j = if chain.time > 0.0 {
        area / chain.time
    } else {
        chain.state.j as f64
    };
    StarRun {
        hit,
        time: chain.time,
        peak,
        mean_j,
        events,
    }
}

/// A single star run on replica 0 of `seed`.
pub fn run_star(n: u32, lambda: f64, init: StarState, stops: &StarStops, seed: u64) -> StarRun {
    debug_assert_eq!(init.n, n);
    run_star_with(lambda, init, stops, &mut replica_rng(seed, 0, 1))
}

/// Independent runs, replica `r` on stream `(seed, r)`, returned in replica order.
pub fn star_replicas(lambda: f64, init: StarState, stops: &StarStops, seed: u64, replicas: u64) -> Vec<StarRun> {
    (0..replicas)
        .into_par_iter()
        .map(|r| run_star_with(lambda, init, stops, &mut replica_rng(seed, r, 1)))
        .collect()
}
