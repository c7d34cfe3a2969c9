//! Synthetic dataset generator: plants feature clusters per class so the
//! bootstrapping and propagation loops have signal to spread, with a noise
//! knob for cross-class edges.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Record;

/// Parameters of a generated dataset.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub num_instances: usize,
    pub num_features: usize,
    pub num_labels: usize,
    /// Inclusive range for the per-instance feature count.
    pub edges_min: usize,
    pub edges_max: usize,
    /// Fraction of instances labeled with their planted class, in (0, 1].
    pub seed_fraction: f64,
    pub planted_classes: usize,
    /// Probability that a feature draw leaves the instance's own cluster,
    /// in [0, 1).
    pub noise: f64,
    pub rng_seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InfeasibleConfig(msg));
        if self.num_instances == 0 {
            return fail("num_instances must be positive".into());
        }
        if self.num_labels < 2 {
            return fail("need at least two labels".into());
        }
        if self.planted_classes == 0 || self.planted_classes > self.num_labels {
            return fail(format!(
                "planted_classes must be in 1..={}",
                self.num_labels
            ));
        }
        if self.num_features < self.planted_classes {
            return fail("need at least one feature per planted class".into());
        }
        if self.edges_min == 0 || self.edges_min > self.edges_max {
            return fail("edge range must satisfy 1 <= min <= max".into());
        }
        let min_cluster = self.num_features / self.planted_classes;
        if self.edges_max > min_cluster {
            return fail(format!(
                "edges_max {} exceeds the smallest feature cluster ({min_cluster})",
                self.edges_max
            ));
        }
        if !(self.seed_fraction > 0.0 && self.seed_fraction <= 1.0) {
            return fail("seed_fraction must lie in (0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.noise) {
            return fail("noise must lie in [0, 1)".into());
        }
        Ok(())
    }

    /// Number of seeded instances: max(1, round(n * fraction)).
    pub fn num_seeds(&self) -> usize {
        let raw = (self.num_instances as f64 * self.seed_fraction).round() as usize;
        raw.clamp(1, self.num_instances)
    }

    /// Label names written to the dataset header.
    pub fn label_names(&self) -> Vec<String> {
        (0..self.num_labels).map(|j| format!("c{j}")).collect()
    }
}

fn cluster_bounds(f_total: usize, classes: usize, c: usize) -> (usize, usize) {
    (c * f_total / classes, (c + 1) * f_total / classes)
}

const ATTEMPT_FACTOR: usize = 50;

/// Generates records deterministically from the config's rng_seed.
/// Instance i belongs to class i mod planted_classes; each of its feature
/// draws stays in the class cluster with probability 1 - noise. The first
/// num_seeds instances carry their class as label, the rest are unlabeled.
pub fn generate(config: &GenConfig) -> Result<Vec<Record>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let classes = config.planted_classes;
    let seeds = config.num_seeds();
    let mut records = Vec::with_capacity(config.num_instances);
    for i in 0..config.num_instances {
        let class = i % classes;
        let degree = rng.gen_range(config.edges_min..=config.edges_max);
        let mut picked: Vec<usize> = Vec::with_capacity(degree);
        let mut attempts = 0;
        while picked.len() < degree {
            attempts += 1;
            if attempts > ATTEMPT_FACTOR * degree {
                return Err(Error::InfeasibleConfig(format!(
                    "could not draw {degree} distinct features for instance {i}"
                )));
            }
            let cluster = if classes > 1 && rng.gen_bool(config.noise) {
                (class + rng.gen_range(1..classes)) % classes
            } else {
                class
            };
            let (lo, hi) = cluster_bounds(config.num_features, classes, cluster);
            let f = rng.gen_range(lo..hi);
            if !picked.contains(&f) {
                picked.push(f);
            }
        }
        picked.sort_unstable();
        records.push(Record {
            id: format!("x{i}"),
            label: (i < seeds).then_some(class),
            features: picked.iter().map(|f| format!("f{f}")).collect(),
        });
    }
    Ok(records)
}

/// Writes records in the ingestion format, with a label-name header.
pub fn write_tsv<W: Write>(
    records: &[Record],
    label_names: &[String],
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "#labels: {}", label_names.join(","))?;
    for r in records {
        let label = match r.label {
            Some(j) => label_names.get(j).cloned().unwrap_or_else(|| j.to_string()),
            None => "?".to_string(),
        };
        writeln!(w, "{}\t{}\t{}", r.id, label, r.features.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, parse_tsv};

    fn base_config() -> GenConfig {
        GenConfig {
            num_instances: 50,
            num_features: 20,
            num_labels: 2,
            edges_min: 2,
            edges_max: 5,
            seed_fraction: 0.1,
            planted_classes: 2,
            noise: 0.1,
            rng_seed: 42,
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let config = base_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        write_tsv(&a, &config.label_names(), &mut ta).unwrap();
        write_tsv(&b, &config.label_names(), &mut tb).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn seed_count_and_placement() {
        let records = generate(&base_config()).unwrap();
        let labeled: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label.is_some())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(labeled, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn zero_noise_keeps_clusters_pure() {
        let mut config = base_config();
        config.noise = 0.0;
        config.num_instances = 80;
        let records = generate(&config).unwrap();
        // every feature name must be touched by exactly one class
        let mut owner: std::collections::HashMap<&str, usize> = Default::default();
        for (i, r) in records.iter().enumerate() {
            let class = i % config.planted_classes;
            for f in &r.features {
                let prev = owner.insert(f.as_str(), class);
                if let Some(p) = prev {
                    assert_eq!(p, class, "feature {f} crossed classes");
                }
            }
        }
    }

    #[test]
    fn all_planted_classes_appear_among_seeds() {
        let mut config = base_config();
        config.num_labels = 3;
        config.planted_classes = 3;
        config.num_features = 21;
        let records = generate(&config).unwrap();
        let seed_labels: std::collections::BTreeSet<usize> =
            records.iter().filter_map(|r| r.label).collect();
        assert_eq!(seed_labels.len(), 3);
    }

    #[test]
    fn output_round_trips_through_the_parser() {
        let config = base_config();
        let records = generate(&config).unwrap();
        let mut buf = Vec::new();
        write_tsv(&records, &config.label_names(), &mut buf).unwrap();
        let data = parse_tsv(buf.as_slice()).unwrap();
        assert_eq!(data.records, records);
        let l = data.resolve_num_labels(None).unwrap();
        assert_eq!(l, 2);
        build_graph(&data.records, l).unwrap();
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let mut config = base_config();
        config.edges_max = 11; // cluster size is 10
        assert!(generate(&config).is_err());
        let mut config = base_config();
        config.edges_min = 0;
        assert!(generate(&config).is_err());
        let mut config = base_config();
        config.seed_fraction = 0.0;
        assert!(generate(&config).is_err());
        let mut config = base_config();
        config.planted_classes = 3; // exceeds num_labels = 2
        assert!(generate(&config).is_err());
    }
}
