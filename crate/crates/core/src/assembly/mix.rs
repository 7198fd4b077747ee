use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{SampleRecord, SampleSet, Source};
use crate::walk::rank_by_score;

/// A group of sources sharing one per-class sample count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaBucket {
    pub sources: Vec<Source>,
    pub count: usize,
}

impl QuotaBucket {
    fn label(&self) -> String {
        self.sources
            .iter()
            .map(|s| s.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    fn first_source(&self) -> Source {
        *self.sources.iter().min().expect("bucket has sources")
    }
}

/// Per-class sample counts for each source bucket.
///
/// Text form: `google_image+flickr=400,youtube_frame=500,gif_frame=100`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixQuota {
    buckets: Vec<QuotaBucket>,
}

impl MixQuota {
    pub fn new(mut buckets: Vec<QuotaBucket>) -> Result<Self> {
        let mut seen = Vec::new();
        for b in &mut buckets {
            if b.sources.is_empty() {
                return Err(Error::InvalidParameter("quota bucket without sources".into()));
            }
            b.sources.sort();
            b.sources.dedup();
            for s in &b.sources {
                if seen.contains(s) {
                    return Err(Error::InvalidParameter(format!(
                        "source {s} appears in more than one quota bucket"
                    )));
                }
                seen.push(*s);
            }
        }
        if buckets.iter().map(|b| b.count).sum::<usize>() == 0 {
            return Err(Error::InvalidParameter("quota total must be positive".into()));
        }
        buckets.sort_by_key(QuotaBucket::first_source);
        Ok(MixQuota { buckets })
    }

    /// 400 web images (Google and Flickr merged), 500 video frames and 100 GIF frames.
    pub fn images_videos_gifs() -> Self {
        MixQuota::new(vec![
            QuotaBucket {
                sources: vec![Source::GoogleImage, Source::Flickr],
                count: 400,
            },
            QuotaBucket {
                sources: vec![Source::YoutubeFrame],
                count: 500,
            },
            QuotaBucket {
                sources: vec![Source::GifFrame],
                count: 100,
            },
        ])
        .expect("static quota is valid")
    }

    pub fn buckets(&self) -> &[QuotaBucket] {
        &self.buckets
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }
}

impl Default for MixQuota {
    fn default() -> Self {
        Self::images_videos_gifs()
    }
}

impl FromStr for MixQuota {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let buckets = s
            .split(',')
            .map(str::trim)
            .filter(|part| !part.is_empty())
            .map(|part| {
                let (srcs, count) = part.split_once('=').ok_or_else(|| {
                    Error::InvalidParameter(format!("quota entry `{part}` must look like source=count"))
                })?;
                let sources = srcs
                    .split('+')
                    .map(|s| s.trim().parse::<Source>())
                    .collect::<Result<Vec<_>>>()?;
                let count = count.trim().parse::<usize>().map_err(|e| {
                    Error::InvalidParameter(format!("bad quota count in `{part}`: {e}"))
                })?;
                Ok(QuotaBucket { sources, count })
            })
            .collect::<Result<Vec<_>>>()?;
        MixQuota::new(buckets)
    }
}

impl fmt::Display for MixQuota {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .buckets
            .iter()
            .map(|b| format!("{}={}", b.label(), b.count))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Picks, per class and source bucket, the quota-many highest-relevance
/// samples from `candidates`.
///
/// `relevance` is aligned with `candidates`. Output is grouped by class
/// (lexicographic), then by bucket in source order, then by descending
/// relevance. With `allow_short`, a bucket with too few candidates
/// contributes everything it has.
pub fn mix_sources(
    candidates: &SampleSet,
    relevance: &[f64],
    quota: &MixQuota,
    allow_short: bool,
) -> Result<SampleSet> {
    if relevance.len() != candidates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} relevance scores for {} samples",
            relevance.len(),
            candidates.len()
        )));
    }
    let records = candidates.records();
    let mut out: Vec<SampleRecord> = Vec::with_capacity(quota.total() * 4);
    let classes: BTreeMap<&str, Vec<usize>> = candidates.class_indices();
    for (class, members) in &classes {
        for bucket in quota.buckets() {
            if bucket.count == 0 {
                continue;
            }
            let pool: Vec<usize> = members
                .iter()
                .copied()
                .filter(|&i| bucket.sources.contains(&records[i].source))
                .collect();
            if pool.len() < bucket.count && !allow_short {
                return Err(Error::Shortage {
                    class: (*class).to_owned(),
                    source_bucket: bucket.label(),
                    needed: bucket.count,
                    available: pool.len(),
                });
            }
            let scores: Vec<f64> = pool.iter().map(|&i| relevance[i]).collect();
            let take = bucket.count.min(pool.len());
            out.extend(
                rank_by_score(&scores)[..take]
                    .iter()
                    .map(|&local| records[pool[local]].clone()),
            );
        }
    }
    SampleSet::new(out)
}
