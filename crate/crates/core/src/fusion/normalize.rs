use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RunList;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    MinMax,
    ZScore,
    Percentile,
}

impl Normalization {
    pub const ALL: [Normalization; 3] = [Self::MinMax, Self::ZScore, Self::Percentile];

    pub fn name(self) -> &'static str {
        match self {
            Self::MinMax => "minmax",
            Self::ZScore => "zscore",
            Self::Percentile => "percentile",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" => Ok(Self::MinMax),
            "zscore" | "z-score" => Ok(Self::ZScore),
            "percentile" | "pct" => Ok(Self::Percentile),
            other => Err(Error::InvalidArgument(format!("unknown normalization `{other}`"))),
        }
    }
}

/// Normalizes one query's candidate scores.
///
/// * min-max maps the list onto `[0, 1]`; a constant list maps to 0.5.
/// * z-score uses the population standard deviation; a constant list maps to 0.
/// * percentile looks each score up in the system's global distribution.
pub fn normalize(scores: &[f64], method: Normalization, dist: Option<&ScoreDistribution>) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("cannot normalize an empty score list".into()));
    }
    Ok(match method {
        Normalization::MinMax => {
            let (min, max) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
            let range = max - min;
            if range == 0.0 {
                vec![0.5; scores.len()]
            } else {
                scores.iter().map(|s| (s - min) / range).collect()
            }
        }
        Normalization::ZScore => {
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if sd == 0.0 {
                vec![0.0; scores.len()]
            } else {
                scores.iter().map(|s| (s - mean) / sd).collect()
            }
        }
        Normalization::Percentile => {
            let dist = dist
                .ok_or_else(|| Error::InvalidArgument("percentile normalization needs a score distribution".into()))?;
            scores.iter().map(|&s| dist.percentile(s)).collect()
        }
    })
}

/// Values kept exactly before switching to reservoir sampling.
pub const DEFAULT_SAMPLE_CAP: usize = 10_000_000;
const RESERVOIR_SEED: u64 = 0x5eed_d157;

/// Empirical global score distribution of one system.
///
/// Keeps a sorted sample of pooled scores: every score up to a cap, a uniform
/// reservoir sample beyond it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    system_id: String,
    sample: Vec<f64>,
    total: u64,
}

impl ScoreDistribution {
    pub fn from_scores<I>(system_id: impl Into<String>, scores: I) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        Self::from_scores_capped(system_id, scores, DEFAULT_SAMPLE_CAP)
    }

    pub fn from_scores_capped<I>(system_id: impl Into<String>, scores: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        if cap == 0 {
            return Err(Error::InvalidArgument("sample cap must be ≥ 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(RESERVOIR_SEED);
        let mut sample = Vec::new();
        let mut total: u64 = 0;
        for s in scores {
            if !s.is_finite() {
                return Err(Error::Validation(format!("non-finite score {s} in distribution")));
            }
            total += 1;
            if sample.len() < cap {
                sample.push(s);
            } else {
                let j = rng.random_range(0..total);
                if (j as usize) < cap {
                    sample[j as usize] = s;
                }
            }
        }
        if sample.is_empty() {
            return Err(Error::InvalidArgument(
                "score distribution needs at least one score".into(),
            ));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self {
            system_id: system_id.into(),
            sample,
            total,
        })
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    /// Number of scores pooled, including those not retained in the sample.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    /// Midpoint empirical CDF: `(#{x < s} + #{x ≤ s}) / 2n`.
    pub fn percentile(&self, score: f64) -> f64 {
        let less = self.sample.partition_point(|&x| x < score);
        let less_eq = self.sample.partition_point(|&x| x <= score);
        (less + less_eq) as f64 / (2 * self.sample.len()) as f64
    }

    /// Inverse of the midpoint CDF: linear interpolation through the points
    /// `((i − ½)/n, x_i)`, clamped to the sample range. For `1..=100` this
    /// gives quartiles 25.5, 50.5 and 75.5.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sample.len();
        let pos = p * n as f64 + 0.5;
        if pos <= 1.0 {
            return self.sample[0];
        }
        if pos >= n as f64 {
            return self.sample[n - 1];
        }
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        let a = self.sample[lo - 1];
        let b = self.sample[lo];
        a + frac * (b - a)
    }

    pub fn q1(&self) -> f64 {
        self.quantile(0.25)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn q3(&self) -> f64 {
        self.quantile(0.75)
    }

    pub fn min(&self) -> f64 {
        self.sample[0]
    }

    pub fn max(&self) -> f64 {
        self.sample[self.sample.len() - 1]
    }
}

/// Pools every (query, document) score of one system.
pub fn build_score_distribution<'a, I>(system_id: impl Into<String>, runs: I) -> Result<ScoreDistribution>
where
    I: IntoIterator<Item = &'a RunList>,
{
    ScoreDistribution::from_scores(system_id, runs.into_iter().flat_map(RunList::scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn min_max_example() {
        assert_eq!(
            normalize(&[2.0, 4.0, 6.0], Normalization::MinMax, None).unwrap(),
            [0.0, 0.5, 1.0]
        );
    }

    #[test]
    fn z_score_example() {
        let z = normalize(&[1.0, 2.0, 3.0], Normalization::ZScore, None).unwrap();
        let expected = 1.5f64.sqrt();
        assert_relative_eq!(z[0], -expected, max_relative = 1e-15);
        assert_eq!(z[1], 0.0);
        assert_relative_eq!(z[2], expected, max_relative = 1e-15);
        assert_relative_eq!(z[2], 1.22474, epsilon = 1e-5);
    }

    #[test]
    fn constant_lists() {
        assert_eq!(normalize(&[3.0; 4], Normalization::MinMax, None).unwrap(), [0.5; 4]);
        assert_eq!(normalize(&[3.0; 4], Normalization::ZScore, None).unwrap(), [0.0; 4]);
    }

    #[test]
    fn empty_and_missing_distribution() {
        assert!(normalize(&[], Normalization::MinMax, None).is_err());
        assert!(normalize(&[1.0], Normalization::Percentile, None).is_err());
    }

    #[test]
    fn quartiles_of_one_to_hundred() {
        let dist = ScoreDistribution::from_scores("s", (1..=100).map(f64::from)).unwrap();
        assert_eq!(dist.q1(), 25.5);
        assert_eq!(dist.median(), 50.5);
        assert_eq!(dist.q3(), 75.5);
        assert_eq!(dist.quantile(0.0), 1.0);
        assert_eq!(dist.quantile(1.0), 100.0);
    }

    #[test]
    fn single_score_is_always_the_median() {
        let dist = ScoreDistribution::from_scores("s", [4.2]).unwrap();
        for probe in [-10.0, 4.2, 99.0] {
            assert_eq!(
                dist.percentile(probe),
                if probe == 4.2 {
                    0.5
                } else if probe < 4.2 {
                    0.0
                } else {
                    1.0
                }
            );
        }
        assert_eq!(dist.percentile(4.2), 0.5);
    }

    #[test]
    fn median_probe_is_half() {
        let dist = ScoreDistribution::from_scores("s", (0..1001).map(f64::from)).unwrap();
        let n = dist.sample().len() as f64;
        assert!((dist.percentile(dist.median()) - 0.5).abs() <= 1.0 / (2.0 * n));
    }

    #[test]
    fn empty_distribution_rejected() {
        assert!(ScoreDistribution::from_scores("s", std::iter::empty()).is_err());
    }

    #[test]
    fn reservoir_keeps_cap_and_counts_total() {
        let dist = ScoreDistribution::from_scores_capped("s", (0..10_000).map(f64::from), 500).unwrap();
        assert_eq!(dist.sample().len(), 500);
        assert_eq!(dist.total(), 10_000);
        assert!(dist.sample().windows(2).all(|w| w[0] <= w[1]));
        // A uniform sample of 0..10000 has its median near 5000.
        assert!((dist.median() - 5000.0).abs() < 800.0);
    }

    #[test]
    fn parse_names() {
        assert_eq!("min-max".parse::<Normalization>().unwrap(), Normalization::MinMax);
        assert_eq!("zscore".parse::<Normalization>().unwrap(), Normalization::ZScore);
        assert!("l2".parse::<Normalization>().is_err());
    }
}
