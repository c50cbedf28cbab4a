//! Synthetic half-hourly households with and without rooftop PV.
//!
//! A user's load shape (base level, morning and evening peaks) and PV size are
//! drawn once from the seed; each day then adds weather and behaviour noise.
//! Solar days show the midday net-import dip of behind-the-meter generation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::DayPattern;

/// Half-hourly readings per day.
pub const INTERVALS_PER_DAY: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Archetype {
    Solar,
    NonSolar,
}

impl Archetype {
    pub fn other(self) -> Archetype {
        match self {
            Archetype::Solar => Archetype::NonSolar,
            Archetype::NonSolar => Archetype::Solar,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScenario {
    pub archetype: Archetype,
    /// From this day on the user behaves as the other archetype.
    pub switch_day: Option<usize>,
    pub days: usize,
    pub noise: f64,
    pub seed: u64,
}

struct Household {
    base: f64,
    morning: f64,
    evening: f64,
    pv_capacity: f64,
}

impl Household {
    fn draw(rng: &mut impl Rng) -> Self {
        Household {
            base: rng.random_range(0.8..1.2),
            morning: rng.random_range(6.5..8.0),
            evening: rng.random_range(18.0..20.0),
            pv_capacity: rng.random_range(1.0..1.4),
        }
    }

    fn load(&self, hour: f64) -> f64 {
        let bump = |centre: f64, width: f64| (-((hour - centre) / width).powi(2)).exp();
        let daytime = if (9.0..16.0).contains(&hour) { 0.12 } else { 0.0 };
        self.base * (0.15 + daytime + 0.35 * bump(self.morning, 1.0) + 0.6 * bump(self.evening, 1.5))
    }

    fn pv(&self, hour: f64) -> f64 {
        if (6.0..19.0).contains(&hour) {
            self.pv_capacity * (std::f64::consts::PI * (hour - 6.0) / 13.0).sin()
        } else {
            0.0
        }
    }
}

/// Deterministic day sequence for one synthetic user.
pub fn generate_synthetic(scenario: &SyntheticScenario) -> Vec<DayPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let house = Household::draw(&mut rng);
    let noise = scenario.noise.max(0.0);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    (0..scenario.days)
        .map(|day| {
            let archetype = match scenario.switch_day {
                Some(s) if day >= s => scenario.archetype.other(),
                _ => scenario.archetype,
            };
            let amplitude = (1.0 + 0.3 * noise * normal(&mut rng)).max(0.2);
            let sun = (1.0 - 0.5 * noise * normal(&mut rng).abs()).clamp(0.0, 1.0);
            let values = (0..INTERVALS_PER_DAY)
                .map(|k| {
                    let hour = (k as f64 + 0.5) / 2.0;
                    let jitter = 1.0 + 0.3 * noise * normal(&mut rng);
                    let additive = 0.02 * noise * normal(&mut rng);
                    let load = (house.load(hour) * amplitude * jitter + additive).max(0.0);
                    match archetype {
                        Archetype::Solar => (load - house.pv(hour) * sun).max(0.0),
                        Archetype::NonSolar => load,
                    }
                })
                .collect();
            DayPattern {
                day_index: day as u32,
                values,
            }
        })
        .collect()
}

/// A fleet of users sharing one scenario shape; user `u` gets its own seed
/// derived from `scenario.seed`.
pub fn generate_fleet(users: usize, scenario: &SyntheticScenario) -> Vec<Vec<DayPattern>> {
    let mut seeds = ChaCha8Rng::seed_from_u64(scenario.seed);
    (0..users)
        .map(|_| {
            let s = SyntheticScenario {
                seed: seeds.next_u64(),
                ..*scenario
            };
            generate_synthetic(&s)
        })
        .collect()
}
