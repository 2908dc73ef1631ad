//! Synthetic instance generator.
//!
//! Riders live at uniform random points of a square centred on the depot;
//! travel times are rounded Euclidean distances with one unit per minute.
//! Each requested arrival time is drawn from a mixture of Gaussian peaks. A
//! drop-off may happen up to `dropoff_window_width` minutes before the
//! requested arrival, and the pickup window is the same interval shifted back
//! by the direct drive time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, InstanceData, Minutes, NodeSpec, ShiftPolicy};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameter `{field}`: {reason}")]
    Param { field: &'static str, reason: String },
    #[error(transparent)]
    Model(#[from] crate::error::ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandPeak {
    pub mean: f64,
    pub sd: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Hourly departures from `first_shift` to `last_shift`.
    Hourly,
    Flexible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n_requests: usize,
    pub n_vehicles: usize,
    /// Half side of the service square, in minutes of direct drive.
    pub area_half_width: f64,
    pub service_time: Minutes,
    pub dropoff_window_width: Minutes,
    pub day_start: Minutes,
    pub day_end: Minutes,
    pub shift_mode: ShiftMode,
    pub first_shift: Minutes,
    pub last_shift: Minutes,
    pub max_shift_span: Minutes,
    pub capacity: i64,
    /// Passengers per request.
    pub passengers: i64,
    /// Probability that a rider books an outbound and a return trip.
    pub round_trip_fraction: f64,
    /// Probability that a rider books a three-leg chain (home, A, B, home).
    pub three_leg_fraction: f64,
    /// Minimum and maximum minutes between consecutive requested arrivals of one rider.
    pub leg_gap: (Minutes, Minutes),
    pub demand_peaks: Vec<DemandPeak>,
    pub big_m: i64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_requests: 100,
            n_vehicles: 6,
            area_half_width: 25.0,
            service_time: 5,
            dropoff_window_width: 30,
            day_start: 300,
            day_end: 1320,
            shift_mode: ShiftMode::Hourly,
            first_shift: 300,
            last_shift: 840,
            max_shift_span: 480,
            capacity: 3,
            passengers: 1,
            round_trip_fraction: 0.5,
            three_leg_fraction: 0.0,
            leg_gap: (120, 300),
            demand_peaks: vec![
                DemandPeak {
                    mean: 540.0,
                    sd: 90.0,
                    weight: 1.0,
                },
                DemandPeak {
                    mean: 840.0,
                    sd: 90.0,
                    weight: 1.0,
                },
            ],
            big_m: 10_000,
            seed: 0,
        }
    }
}

impl GenParams {
    /// Small morning instances for exhaustive checking: a 15-minute square,
    /// two-hour shifts and a single demand peak.
    pub fn tiny(n_requests: usize, n_vehicles: usize, seed: u64) -> Self {
        GenParams {
            n_requests,
            n_vehicles,
            area_half_width: 15.0,
            day_start: 300,
            day_end: 720,
            first_shift: 300,
            last_shift: 600,
            max_shift_span: 120,
            leg_gap: (60, 120),
            demand_peaks: vec![DemandPeak {
                mean: 480.0,
                sd: 60.0,
                weight: 1.0,
            }],
            seed,
            ..GenParams::default()
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |field, reason: &str| {
            Err(GenError::Param {
                field,
                reason: reason.to_string(),
            })
        };
        if self.n_vehicles == 0 {
            return bad("n_vehicles", "at least one vehicle is required");
        }
        if !(self.area_half_width > 0.0) {
            return bad("area_half_width", "must be positive");
        }
        if self.service_time <= 0 || self.dropoff_window_width <= 0 || self.max_shift_span <= 0 {
            return bad("service_time", "durations must be positive");
        }
        if self.day_start < 0 || self.day_end <= self.day_start {
            return bad(
                "day_end",
                "day must be a nonempty interval of nonnegative minutes",
            );
        }
        if self.shift_mode == ShiftMode::Hourly
            && (self.first_shift < self.day_start
                || self.last_shift > self.day_end
                || self.first_shift > self.last_shift)
        {
            return bad("first_shift", "shift candidates must lie inside the day");
        }
        if self.capacity < 0 || self.passengers <= 0 {
            return bad(
                "passengers",
                "passengers must be positive and capacity nonnegative",
            );
        }
        for (field, f) in [
            ("round_trip_fraction", self.round_trip_fraction),
            ("three_leg_fraction", self.three_leg_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(field, "must lie in [0, 1]");
            }
        }
        if self.round_trip_fraction + self.three_leg_fraction > 1.0 + 1e-12 {
            return bad("three_leg_fraction", "fractions must sum to at most 1");
        }
        if self.leg_gap.0 <= 0 || self.leg_gap.0 > self.leg_gap.1 {
            return bad("leg_gap", "must be a positive, ordered range");
        }
        if self.demand_peaks.is_empty()
            || self
                .demand_peaks
                .iter()
                .any(|p| !(p.sd > 0.0) || !(p.weight > 0.0))
        {
            return bad(
                "demand_peaks",
                "need at least one peak with positive sd and weight",
            );
        }
        if self.big_m < 0 {
            return bad("big_m", "must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Point(f64, f64);

impl Point {
    fn minutes_to(self, other: Point) -> Minutes {
        ((self.0 - other.0).hypot(self.1 - other.1)).round() as Minutes
    }
}

struct Leg {
    from: Point,
    to: Point,
    arrival: Minutes,
}

pub fn generate(p: &GenParams) -> Result<Instance, GenError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.n_requests;
    let m = p.n_vehicles;
    let depot = Point(0.0, 0.0);
    let w = p.area_half_width;

    let peak_index = WeightedIndex::new(p.demand_peaks.iter().map(|pk| pk.weight))
        .expect("weights validated positive");
    let peaks: Vec<Normal<f64>> = p
        .demand_peaks
        .iter()
        .map(|pk| Normal::new(pk.mean, pk.sd).expect("sd validated positive"))
        .collect();

    let mut legs: Vec<Leg> = Vec::with_capacity(n);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while legs.len() < n {
        let remaining = n - legs.len();
        let u: f64 = rng.gen();
        let size = if u < p.three_leg_fraction && remaining >= 3 {
            3
        } else if u < p.three_leg_fraction + p.round_trip_fraction && remaining >= 2 {
            2
        } else {
            1
        };

        let mut stops = vec![Point(rng.gen_range(-w..=w), rng.gen_range(-w..=w))];
        for _ in 1..size.max(2) {
            stops.push(Point(rng.gen_range(-w..=w), rng.gen_range(-w..=w)));
        }
        if size >= 2 {
            // chain closes back at home
            stops.push(stops[0]);
        } else if rng.gen_bool(0.5) {
            stops.reverse();
        }

        let mut offsets = vec![0 as Minutes];
        for _ in 1..size {
            let gap = rng.gen_range(p.leg_gap.0..=p.leg_gap.1);
            offsets.push(offsets.last().unwrap() + gap);
        }

        // First requested arrival, clamped so every leg is reachable from the
        // depot after the day opens and can return before it closes.
        let mut lo = Minutes::MIN;
        let mut hi = Minutes::MAX;
        for j in 0..size {
            let (from, to) = (stops[j], stops[j + 1]);
            let drive = from.minutes_to(to);
            lo = lo.max(
                p.day_start + depot.minutes_to(from) + drive + p.dropoff_window_width - offsets[j],
            );
            hi = hi.min(p.day_end - p.service_time - to.minutes_to(depot) - offsets[j]);
        }
        let draw = peaks[peak_index.sample(&mut rng)].sample(&mut rng).round() as Minutes;
        let first = if lo <= hi { draw.clamp(lo, hi) } else { draw };

        let mut group = Vec::with_capacity(size);
        for j in 0..size {
            legs.push(Leg {
                from: stops[j],
                to: stops[j + 1],
                arrival: first + offsets[j],
            });
            group.push(legs.len());
        }
        groups.push(group);
    }

    let mut locations = Vec::with_capacity(2 * n + 2 * m);
    let mut nodes = Vec::with_capacity(2 * n + 2 * m);
    for leg in &legs {
        let drive = leg.from.minutes_to(leg.to);
        locations.push(leg.from);
        nodes.push(NodeSpec {
            a: (leg.arrival - p.dropoff_window_width - drive).max(0),
            b: (leg.arrival - drive).max(0),
            s: p.service_time,
            d: p.passengers,
        });
    }
    for leg in &legs {
        locations.push(leg.to);
        nodes.push(NodeSpec {
            a: (leg.arrival - p.dropoff_window_width).max(0),
            b: leg.arrival.max(0),
            s: p.service_time,
            d: -p.passengers,
        });
    }
    for _ in 0..2 * m {
        locations.push(depot);
        nodes.push(NodeSpec {
            a: p.day_start,
            b: p.day_end,
            s: 0,
            d: 0,
        });
    }
    let travel = locations
        .iter()
        .map(|&a| locations.iter().map(|&b| a.minutes_to(b)).collect())
        .collect();

    let shift_starts = match p.shift_mode {
        ShiftMode::Hourly => ShiftPolicy::hourly(p.first_shift, p.last_shift),
        ShiftMode::Flexible => ShiftPolicy::Flexible,
    };

    Ok(Instance::new(InstanceData {
        n,
        m,
        capacity: p.capacity,
        max_shift_span: p.max_shift_span,
        shift_starts,
        big_m: p.big_m,
        nodes,
        travel,
        groups,
    })?)
}
