//! Direct CTMC simulation. Every occupied vertex (contact process) or particle
//! (BRW) carries rate `1 + lambda * degree`; the next event time is
//! exponential in the total rate, its owner is drawn class by class, and one
//! uniform draw splits the owner's rate into death and the edge to transmit on.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::tree_model::{TreeArena, VertexId};

use super::{replica_rng, BallTree, Mode, SimConfig, SimOutcome, Topology, Truncation};

const VACANT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// Run to extinction, the horizon, or a cap.
    #[default]
    Full,
    /// Also stop as soon as the root is seen occupied inside the local window.
    LocalSuccess,
}

enum Action {
    Die,
    Transmit(u32),
}

struct Classes {
    members: Vec<Vec<VertexId>>,
    rate: Vec<f64>,
    lambda: f64,
}

impl Classes {
    fn new<T: Topology>(topo: &T, lambda: f64) -> Self {
        let k = topo.class_count();
        Self {
            members: vec![Vec::new(); k],
            rate: (0..k)
                .map(|c| 1.0 + lambda * topo.class_degree(c) as f64)
                .collect(),
            lambda,
        }
    }

    fn total_rate(&self) -> f64 {
        self.members
            .iter()
            .zip(&self.rate)
            .map(|(m, r)| m.len() as f64 * r)
            .sum()
    }

    fn population(&self) -> u64 {
        self.members.iter().map(|m| m.len() as u64).sum()
    }

    /// Draws `(class, index)` proportionally to rate, then the action.
    fn pick(&self, total: f64, degree: impl Fn(usize) -> u32, rng: &mut ChaCha8Rng) -> (usize, usize, Action) {
        let mut target = rng.random::<f64>() * total;
        let mut class = self.members.len() - 1;
        for (c, (m, r)) in self.members.iter().zip(&self.rate).enumerate() {
            let w = m.len() as f64 * r;
            if target < w {
                class = c;
                break;
            }
            target -= w;
        }
        // Rounding can push the cumulative draw past the end; fall back to the
        // last nonempty class.
        while self.members[class].is_empty() {
            class -= 1;
        }
        let index = rng.random_range(0..self.members[class].len());
        let u = rng.random::<f64>() * self.rate[class];
        let action = if u < 1.0 {
            Action::Die
        } else {
            let deg = degree(class);
            Action::Transmit((((u - 1.0) / self.lambda) as u32).min(deg - 1))
        };
        (class, index, action)
    }
}

struct Clock {
    t: f64,
    horizon: f64,
    window_start: f64,
    root_in_window: bool,
}

impl Clock {
    /// Advances to the next event; `false` once it falls past the horizon.
    fn advance(&mut self, total: f64, root_occupied: bool, rng: &mut ChaCha8Rng) -> bool {
        let dt = rng.sample::<f64, _>(Exp1) / total;
        let next = self.t + dt;
        if root_occupied && next.min(self.horizon) >= self.window_start {
            self.root_in_window = true;
        }
        if next > self.horizon {
            self.t = self.horizon;
            return false;
        }
        self.t = next;
        true
    }
}

/// Simulates one trajectory on `topo` started from a single occupied root.
pub fn run_on<T: Topology>(topo: &mut T, cfg: &SimConfig, rng: &mut ChaCha8Rng, stop: StopRule) -> SimOutcome {
    match cfg.mode {
        Mode::Contact => contact(topo, cfg, rng, stop),
        Mode::Brw => brw(topo, cfg, rng, stop),
    }
}

fn new_outcome() -> SimOutcome {
    SimOutcome {
        extinct: false,
        extinction_time: None,
        root_visit_times: Vec::new(),
        root_in_window: false,
        peak_infected: 1,
        events: 0,
        wasted_events: 0,
        end_time: 0.0,
        truncated: None,
    }
}

fn contact<T: Topology>(topo: &mut T, cfg: &SimConfig, rng: &mut ChaCha8Rng, stop: StopRule) -> SimOutcome {
    let root = topo.root();
    let mut classes = Classes::new(topo, cfg.lambda);
    let mut pos = vec![VACANT; topo.vertex_count().max(root as usize + 1)];
    let root_class = topo.class_of(root);
    classes.members[root_class].push(root);
    pos[root as usize] = 0;
    let mut infected = 1u64;
    let mut root_occupied = true;
    let mut clock = Clock {
        t: 0.0,
        horizon: cfg.horizon,
        window_start: cfg.window_start(),
        root_in_window: false,
    };
    let mut out = new_outcome();
    loop {
        let total = classes.total_rate();
        if infected == 0 {
            out.extinct = true;
            out.extinction_time = Some(clock.t);
            break;
        }
        if !clock.advance(total, root_occupied, rng) {
            break;
        }
        if stop == StopRule::LocalSuccess && clock.root_in_window {
            break;
        }
        if out.events == cfg.max_events {
            out.truncated = Some(Truncation::EventCap);
            break;
        }
        out.events += 1;
        let (class, index, action) = classes.pick(total, |c| topo.class_degree(c), rng);
        let v = classes.members[class][index];
        match action {
            Action::Die => {
                let list = &mut classes.members[class];
                list.swap_remove(index);
                if index < list.len() {
                    pos[list[index] as usize] = index as u32;
                }
                pos[v as usize] = VACANT;
                infected -= 1;
                if v == root {
                    root_occupied = false;
                }
            }
            Action::Transmit(slot) => {
                let w = match topo.neighbor(v, slot) {
                    Ok(Some(w)) => w,
                    Ok(None) => {
                        out.wasted_events += 1;
                        continue;
                    }
                    Err(_) => {
                        out.truncated = Some(Truncation::VertexCap);
                        break;
                    }
                };
                if w as usize >= pos.len() {
                    pos.resize(topo.vertex_count(), VACANT);
                }
                if pos[w as usize] != VACANT {
                    out.wasted_events += 1;
                } else {
                    let list = &mut classes.members[topo.class_of(w)];
                    pos[w as usize] = list.len() as u32;
                    list.push(w);
                    infected += 1;
                    out.peak_infected = out.peak_infected.max(infected);
                    if w == root {
                        root_occupied = true;
                        out.root_visit_times.push(clock.t);
                    }
                }
            }
        }
        if cfg.audit {
            audit_contact(topo, &classes, &pos, infected, root_occupied);
        }
    }
    out.end_time = clock.t;
    out.root_in_window = clock.root_in_window;
    out
}

fn audit_contact<T: Topology>(topo: &T, classes: &Classes, pos: &[u32], infected: u64, root_occupied: bool) {
    let mut seen = 0u64;
    for (c, list) in classes.members.iter().enumerate() {
        for (i, &v) in list.iter().enumerate() {
            assert!((v as usize) < topo.vertex_count(), "occupied vertex {v} not materialized");
            assert_eq!(topo.class_of(v), c, "vertex {v} filed under the wrong class");
            assert_eq!(pos[v as usize], i as u32, "position map out of sync at {v}");
            seen += 1;
        }
    }
    let marked = pos.iter().filter(|&&p| p != VACANT).count() as u64;
    assert_eq!(seen, infected, "occupied count drifted");
    assert_eq!(marked, infected, "position map marks a vacant vertex");
    assert_eq!(pos[topo.root() as usize] != VACANT, root_occupied, "root flag drifted");
}

fn brw<T: Topology>(topo: &mut T, cfg: &SimConfig, rng: &mut ChaCha8Rng, stop: StopRule) -> SimOutcome {
    let root = topo.root();
    let mut classes = Classes::new(topo, cfg.lambda);
    classes.members[topo.class_of(root)].push(root);
    let mut population = 1u64;
    let mut root_count = 1u64;
    let mut clock = Clock {
        t: 0.0,
        horizon: cfg.horizon,
        window_start: cfg.window_start(),
        root_in_window: false,
    };
    let mut out = new_outcome();
    if population >= cfg.brw_population_cap {
        out.truncated = Some(Truncation::PopulationCap);
    }
    while out.truncated.is_none() {
        let total = classes.total_rate();
        if population == 0 {
            out.extinct = true;
            out.extinction_time = Some(clock.t);
            break;
        }
        if !clock.advance(total, root_count > 0, rng) {
            break;
        }
        if stop == StopRule::LocalSuccess && clock.root_in_window {
            break;
        }
        if out.events == cfg.max_events {
            out.truncated = Some(Truncation::EventCap);
            break;
        }
        out.events += 1;
        let (class, index, action) = classes.pick(total, |c| topo.class_degree(c), rng);
        let v = classes.members[class][index];
        match action {
            Action::Die => {
                classes.members[class].swap_remove(index);
                population -= 1;
                if v == root {
                    root_count -= 1;
                }
            }
            Action::Transmit(slot) => {
                let w = match topo.neighbor(v, slot) {
                    Ok(Some(w)) => w,
                    Ok(None) => {
                        out.wasted_events += 1;
                        continue;
                    }
                    Err(_) => {
                        out.truncated = Some(Truncation::VertexCap);
                        break;
                    }
                };
                classes.members[topo.class_of(w)].push(w);
                population += 1;
                out.peak_infected = out.peak_infected.max(population);
                if w == root {
                    root_count += 1;
                    if root_count == 1 {
                        out.root_visit_times.push(clock.t);
                    }
                }
                if population >= cfg.brw_population_cap {
                    out.truncated = Some(Truncation::PopulationCap);
                }
            }
        }
        if cfg.audit {
            assert_eq!(classes.population(), population, "population drifted");
            let at_root = classes.members.iter().flatten().filter(|&&v| v == root).count() as u64;
            assert_eq!(at_root, root_count, "root occupancy drifted");
        }
    }
    out.end_time = clock.t;
    out.root_in_window = clock.root_in_window;
    out
}

pub(crate) fn run_replica(cfg: &SimConfig, replica: u64, stop: StopRule) -> SimOutcome {
    let mut arena = TreeArena::new(cfg.degrees.clone(), cfg.root_residue, cfg.max_vertices);
    let mut rng = replica_rng(cfg.seed, replica, 0);
    match cfg.radius {
        Some(r) => run_on(&mut BallTree::new(arena, r), cfg, &mut rng, stop),
        None => run_on(&mut arena, cfg, &mut rng, stop),
    }
}

/// One contact-process trajectory on the periodic tree (replica 0 of the seed).
pub fn run_contact(cfg: &SimConfig) -> SimOutcome {
    let cfg = SimConfig {
        mode: Mode::Contact,
        ..cfg.clone()
    };
    run_replica(&cfg, 0, StopRule::Full)
}

/// One branching-random-walk trajectory on the periodic tree.
pub fn run_brw(cfg: &SimConfig) -> SimOutcome {
    let cfg = SimConfig {
        mode: Mode::Brw,
        ..cfg.clone()
    };
    run_replica(&cfg, 0, StopRule::Full)
}
