//! Seeded uniform sampling of road segments without replacement.
//!
//! The generator is SplitMix64, bounded draws use rejection sampling, and the
//! draw itself is a partial Fisher-Yates shuffle over population indices. All
//! three are fixed so that plans are reproducible in any language.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geo::GeoPoint;
use crate::network::HighwayClass;
use crate::segment::RoadSegment;

/// SplitMix64 pseudo-random generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(Self::GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, bound)`.
    ///
    /// Draws below `2^64 mod bound` are rejected so that the accepted range is
    /// an exact multiple of `bound`; the result is the accepted draw modulo
    /// `bound`.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }
}

/// Indices of a uniform sample of `min(n, population)` items, in draw order.
pub fn sample_indices(population: usize, n: usize, rng: &mut SplitMix64) -> Vec<usize> {
    partial_shuffle(population, n, |bound| rng.next_below(bound))
}

/// Partial Fisher-Yates driven by `draw(bound)`, which must return a value in
/// `[0, bound)`. Step `i` swaps position `i` with `i + draw(population - i)`.
pub fn partial_shuffle(population: usize, n: usize, mut draw: impl FnMut(u64) -> u64) -> Vec<usize> {
    let k = n.min(population);
    let mut idx: Vec<usize> = (0..population).collect();
    for i in 0..k {
        let j = i + draw((population - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub seed: u64,
    pub requested_n: usize,
    pub population_n: usize,
    /// Sampled segments in draw order; position is the sample rank.
    pub segments: Vec<RoadSegment>,
    /// Set when more segments were requested than exist.
    pub exhausted_population: bool,
}

impl SamplePlan {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Unstratified uniform sample of `n` segments.
pub fn sample_segments(population: &[RoadSegment], n: usize, seed: u64) -> SamplePlan {
    let mut rng = SplitMix64::new(seed);
    let segments = sample_indices(population.len(), n, &mut rng)
        .into_iter()
        .map(|i| population[i].clone())
        .collect();
    SamplePlan {
        seed,
        requested_n: n,
        population_n: population.len(),
        segments,
        exhausted_population: n > population.len(),
    }
}

/// Splits `n` across classes proportionally to their counts using
/// largest-remainder rounding. Ties on the remainder go to the class that
/// sorts first.
pub fn allocate_by_class(counts: &BTreeMap<HighwayClass, usize>, n: usize) -> BTreeMap<HighwayClass, usize> {
    let total: usize = counts.values().sum();
    let n = n.min(total);
    let mut alloc = BTreeMap::new();
    if total == 0 {
        return alloc;
    }
    let mut remainders = Vec::with_capacity(counts.len());
    let mut assigned = 0usize;
    for (class, &count) in counts {
        // exact integer arithmetic: quota = n * count / total
        let numerator = n as u128 * count as u128;
        let floor = (numerator / total as u128) as usize;
        let rem = numerator % total as u128;
        alloc.insert(class.clone(), floor);
        assigned += floor;
        remainders.push((rem, class.clone()));
    }
    // stable sort keeps class order among equal remainders
    remainders.sort_by(|a, b| b.0.cmp(&a.0));
    for (_, class) in remainders.into_iter().take(n - assigned) {
        *alloc.get_mut(&class).expect("class allocated above") += 1;
    }
    alloc
}

/// Sample with `n` allocated across highway classes in proportion to their
/// segment counts. Classes are drawn in sorted order from one generator; the
/// plan lists each class's draws contiguously.
pub fn sample_stratified(population: &[RoadSegment], n: usize, seed: u64) -> SamplePlan {
    let mut strata: BTreeMap<HighwayClass, Vec<usize>> = BTreeMap::new();
    for (i, seg) in population.iter().enumerate() {
        strata.entry(seg.highway_class.clone()).or_default().push(i);
    }
    let counts = strata.iter().map(|(c, v)| (c.clone(), v.len())).collect();
    let quotas = allocate_by_class(&counts, n);
    let mut rng = SplitMix64::new(seed);
    let mut segments = Vec::new();
    for (class, members) in &strata {
        let quota = quotas.get(class).copied().unwrap_or(0);
        for j in sample_indices(members.len(), quota, &mut rng) {
            segments.push(population[members[j]].clone());
        }
    }
    SamplePlan {
        seed,
        requested_n: n,
        population_n: population.len(),
        segments,
        exhausted_population: n > population.len(),
    }
}

/// Start point of every sampled segment, in plan order.
pub fn sample_points(plan: &SamplePlan) -> Vec<(String, GeoPoint)> {
    plan.segments.iter().map(|s| (s.segment_id.clone(), s.start)).collect()
}
