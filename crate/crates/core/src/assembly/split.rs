use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::SampleSet;

/// Stratified random split; each class contributes `round(ratio * n_class)`
/// samples to the first set. Both outputs keep input order.
pub fn split_train_val(set: &SampleSet, ratio: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; set.len()];
    for (class, mut members) in set.class_indices() {
        if members.len() < 2 {
            return Err(Error::Validation(format!(
                "class `{class}` has {} sample(s), need at least 2 to split",
                members.len()
            )));
        }
        let n_train = (ratio * members.len() as f64).round() as usize;
        members.shuffle(&mut rng);
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, val): (Vec<usize>, Vec<usize>) = (0..set.len()).partition(|&i| in_train[i]);
    Ok((set.select(&train), set.select(&val)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{SampleRecord, Source};
    use std::collections::HashSet;

    fn corpus(classes: &[&str], per_class: usize) -> SampleSet {
        let mut recs = Vec::new();
        for c in classes {
            for i in 0..per_class {
                recs.push(SampleRecord::new(format!("{c}-{i}"), *c, Source::Flickr, i));
            }
        }
        SampleSet::new(recs).unwrap()
    }

    #[test]
    fn eight_two_per_class() {
        let set = corpus(&["a", "b"], 10);
        let (train, val) = split_train_val(&set, 0.8, 7).unwrap();
        for c in ["a", "b"] {
            assert_eq!(train.iter().filter(|r| r.class_label == c).count(), 8);
            assert_eq!(val.iter().filter(|r| r.class_label == c).count(), 2);
        }
    }

    #[test]
    fn deterministic_partition() {
        let set = corpus(&["a", "b", "c"], 13);
        let first = split_train_val(&set, 0.8, 42).unwrap();
        assert_eq!(first, split_train_val(&set, 0.8, 42).unwrap());
        let ids: Vec<&str> = first.0.iter().chain(first.1.iter()).map(|r| r.id.as_str()).collect();
        let unique: HashSet<&str> = ids.iter().copied().collect();
        assert_eq!(ids.len(), set.len());
        assert_eq!(unique.len(), set.len());
        assert_ne!(first, split_train_val(&set, 0.8, 43).unwrap());
    }

    #[test]
    fn errors() {
        let set = corpus(&["a"], 1);
        assert!(matches!(split_train_val(&set, 0.8, 0), Err(Error::Validation(_))));
        let set = corpus(&["a"], 4);
        assert!(split_train_val(&set, 1.0, 0).is_err());
        assert!(split_train_val(&set, 0.0, 0).is_err());
    }
}
