//! Cue-identification runs with the machine decoder standing in for a human
//! observer: the 64-trial schedule and noisy confusion matrices.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GuidanceConfig;
use crate::cue::{decode, encode, ActuatorFrame, ActuatorTimeline, CueCategory, CueError, CueKind};
use crate::geometry::DistanceTier;
use crate::seeding;

/// How long each identification cue is played (s). Long enough for at least
/// three pulses in every tier.
pub const PRESENTATION_S: f64 = 3.0;

/// Perturbations applied to a timeline before it is decoded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Probability that each change frame is lost.
    pub drop_probability: f64,
    /// Each frame is shifted by a uniform integer number of ticks in
    /// `[-jitter_ticks, jitter_ticks]`.
    pub jitter_ticks: u32,
    /// Fraction of drive voltage removed, floored at `v_min`.
    pub attenuation: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_none(&self) -> bool {
        self.drop_probability <= 0.0 && self.jitter_ticks == 0 && self.attenuation <= 0.0
    }
}

pub fn perturb<R: Rng>(tl: &ActuatorTimeline, noise: &NoiseSpec, v_min: f64, rng: &mut R) -> ActuatorTimeline {
    if noise.is_none() {
        return tl.clone();
    }
    let j = noise.jitter_ticks as i64;
    let mut frames = Vec::with_capacity(tl.frames().len());
    for f in tl.frames() {
        if noise.drop_probability > 0.0 && rng.random_bool(noise.drop_probability.min(1.0)) {
            continue;
        }
        let shift = if j > 0 { rng.random_range(-j..=j) } else { 0 };
        let mut drives = f.drives;
        if noise.attenuation > 0.0 {
            for d in drives.iter_mut().filter(|d| **d > 0.0) {
                *d = (*d * (1.0 - noise.attenuation)).max(v_min);
            }
        }
        frames.push(ActuatorFrame {
            tick: (f.tick as i64 + shift).max(0) as u32,
            drives,
        });
    }
    frames.sort_by_key(|f| f.tick);
    ActuatorTimeline::new(frames, tl.duration_ticks())
}

/// Decoded-category rates per presented category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `rates[presented][decoded]` over classified trials, indexed by
    /// [`CueKind::index`].
    pub rates: [[f64; 5]; 5],
    /// Share of each row's trials the decoder refused to classify.
    pub unclassified: [f64; 5],
    pub trials: [usize; 5],
}

impl ConfusionMatrix {
    pub fn diagonal(&self) -> [f64; 5] {
        std::array::from_fn(|i| self.rates[i][i])
    }

    pub fn is_identity(&self) -> bool {
        (0..5).all(|i| {
            self.trials[i] == 0
                || (0..5).all(|j| self.rates[i][j] == if i == j { 1.0 } else { 0.0 })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("presented,move_to,move_up,move_down,pause,arrived,unclassified,n\n");
        for k in CueKind::ALL {
            let i = k.index();
            out.push_str(k.as_str());
            for r in self.rates[i] {
                out.push_str(&format!(",{r:.4}"));
            }
            out.push_str(&format!(",{:.4},{}\n", self.unclassified[i], self.trials[i]));
        }
        out
    }
}

/// Encode, perturb and decode every category `trials_per_category` times.
pub fn confusion_matrix(
    categories: &[CueCategory],
    trials_per_category: usize,
    noise: &NoiseSpec,
    cfg: &GuidanceConfig,
    seed: u64,
) -> Result<ConfusionMatrix, CueError> {
    let encoded = categories
        .iter()
        .map(|c| encode(*c, PRESENTATION_S, cfg).map(|t| t.timeline))
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<(CueKind, Option<CueKind>)> = (0..categories.len())
        .into_par_iter()
        .flat_map_iter(|ci| (0..trials_per_category).map(move |ti| (ci, ti)))
        .map(|(ci, ti)| {
            let mut rng = seeding::stream(seed, &[ci as u64, ti as u64]);
            let noisy = perturb(&encoded[ci], noise, cfg.interpolation.v_min, &mut rng);
            let decoded = decode(&noisy, cfg).ok().map(|(c, _)| c.kind());
            (categories[ci].kind(), decoded)
        })
        .collect();

    let mut counts = [[0usize; 5]; 5];
    let mut unclassified = [0usize; 5];
    let mut trials = [0usize; 5];
    for (presented, decoded) in outcomes {
        let i = presented.index();
        trials[i] += 1;
        match decoded {
            Some(d) => counts[i][d.index()] += 1,
            None => unclassified[i] += 1,
        }
    }
    let mut m = ConfusionMatrix {
        rates: [[0.0; 5]; 5],
        unclassified: [0.0; 5],
        trials,
    };
    for i in 0..5 {
        let classified: usize = counts[i].iter().sum();
        if classified > 0 {
            m.rates[i] = counts[i].map(|c| c as f64 / classified as f64);
        }
        if trials[i] > 0 {
            m.unclassified[i] = unclassified[i] as f64 / trials[i] as f64;
        }
    }
    Ok(m)
}

/// The 64-trial identification schedule: 24 planar directions every 15°
/// (tiers cycling far, medium, close) plus ten each of the other four cues,
/// shuffled by `seed`.
pub fn experiment1_schedule(seed: u64) -> Vec<CueCategory> {
    let mut trials: Vec<CueCategory> = (0..24)
        .map(|k| CueCategory::move_to(k as f64 * 15.0, DistanceTier::ALL[k % 3]))
        .collect();
    for c in [
        CueCategory::MoveUp,
        CueCategory::MoveDown,
        CueCategory::Pause,
        CueCategory::Arrived,
    ] {
        trials.extend(std::iter::repeat_n(c, 10));
    }
    trials.shuffle(&mut seeding::stream(seed, &[1]));
    trials
}
