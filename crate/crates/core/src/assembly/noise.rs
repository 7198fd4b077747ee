use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::SampleSet;

/// A clean class corrupted with samples from other classes, with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBench {
    pub samples: SampleSet,
    /// `true` for the original clean samples, `false` for injected ones.
    pub inlier_mask: Vec<bool>,
    pub noise_fraction: f64,
}

impl NoiseBench {
    pub fn n_inliers(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }

    pub fn n_injected(&self) -> usize {
        self.inlier_mask.len() - self.n_inliers()
    }
}

/// Number of distractors added for a given clean-set size.
pub fn injected_count(n_clean: usize, fraction: f64) -> usize {
    (fraction * n_clean as f64).round() as usize
}

/// Appends `round(fraction * |clean|)` distractors drawn uniformly without
/// replacement. Injected samples follow the clean ones, in distractor order.
pub fn inject_noise(
    clean: &SampleSet,
    distractors: &SampleSet,
    fraction: f64,
    seed: u64,
) -> Result<NoiseBench> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "noise fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let m = injected_count(clean.len(), fraction);
    if m > distractors.len() {
        return Err(Error::Validation(format!(
            "need {m} distractors, only {} available",
            distractors.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, distractors.len(), m).into_vec();
    picked.sort_unstable();

    let mut records = clean.records().to_vec();
    records.extend(picked.iter().map(|&i| distractors.records()[i].clone()));
    let mut inlier_mask = vec![true; clean.len()];
    inlier_mask.resize(clean.len() + m, false);
    Ok(NoiseBench {
        samples: SampleSet::new(records)?,
        inlier_mask,
        noise_fraction: fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{SampleRecord, Source};

    fn set(prefix: &str, n: usize) -> SampleSet {
        SampleSet::new(
            (0..n)
                .map(|i| SampleRecord::new(format!("{prefix}{i}"), prefix, Source::Flickr, i))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_fraction() {
        let clean = set("c", 10);
        let bench = inject_noise(&clean, &set("d", 5), 0.0, 1).unwrap();
        assert_eq!(bench.samples, clean);
        assert!(bench.inlier_mask.iter().all(|&m| m));
    }

    #[test]
    fn fifteen_percent_of_hundred() {
        let bench = inject_noise(&set("c", 100), &set("d", 40), 0.15, 3).unwrap();
        assert_eq!(bench.samples.len(), 115);
        assert_eq!((bench.n_inliers(), bench.n_injected()), (100, 15));
        assert!(bench.samples.records()[100..].iter().all(|r| r.class_label == "d"));
    }

    #[test]
    fn seeded_repeatable() {
        let a = inject_noise(&set("c", 50), &set("d", 50), 0.2, 9).unwrap();
        let b = inject_noise(&set("c", 50), &set("d", 50), 0.2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_distractors() {
        assert!(inject_noise(&set("c", 100), &set("d", 4), 0.05, 0).is_err());
        assert!(inject_noise(&set("c", 10), &set("d", 4), 1.0, 0).is_err());
    }
}
