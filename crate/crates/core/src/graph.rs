//! Bipartite data model connecting instances to their features.
//!
//! Instances sit on one side, features on the other, and an edge means
//! "this instance exhibits this feature". Ids are dense and assigned in
//! first-seen order, so construction is deterministic.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Name prefix for features added by [`pad_to_uniform_degree`].
pub const PAD_FEATURE_PREFIX: &str = "__pad_";

/// One input record: an instance, an optional seed label, and its features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub label: Option<usize>,
    pub features: Vec<String>,
}

/// Immutable instance/feature adjacency with dense ids on both sides.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    num_labels: usize,
    features_of: Vec<Vec<usize>>,
    instances_of: Vec<Vec<usize>>,
    instance_names: Vec<String>,
    feature_names: Vec<String>,
}

impl BipartiteGraph {
    pub fn num_instances(&self) -> usize {
        self.features_of.len()
    }

    pub fn num_features(&self) -> usize {
        self.instances_of.len()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Feature ids adjacent to instance `x`, in first-seen order.
    pub fn features_of(&self, x: usize) -> &[usize] {
        &self.features_of[x]
    }

    /// Instance ids adjacent to feature `f`, in first-seen order.
    pub fn instances_of(&self, f: usize) -> &[usize] {
        &self.instances_of[f]
    }

    pub fn num_edges(&self) -> usize {
        self.features_of.iter().map(Vec::len).sum()
    }

    pub fn instance_name(&self, x: usize) -> &str {
        &self.instance_names[x]
    }

    pub fn feature_name(&self, f: usize) -> &str {
        &self.feature_names[f]
    }

    /// True when the feature was introduced by degree padding.
    pub fn is_padded_feature(&self, f: usize) -> bool {
        self.feature_names[f].starts_with(PAD_FEATURE_PREFIX)
    }

    /// Max instance degree; the uniform degree when all instances agree.
    pub fn max_instance_degree(&self) -> usize {
        self.features_of.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// The common instance degree m, or an error naming two that differ.
    pub fn uniform_instance_degree(&self) -> Result<usize> {
        let m = self.max_instance_degree();
        for fx in &self.features_of {
            if fx.len() != m {
                return Err(Error::NonUniformDegree {
                    deg_a: fx.len(),
                    deg_b: m,
                });
            }
        }
        Ok(m)
    }
}

/// Seed labels: instance id to label index. Iteration order is by id.
#[derive(Debug, Clone, Default)]
pub struct SeedLabels {
    entries: BTreeMap<usize, usize>,
}

impl SeedLabels {
    pub fn new(entries: BTreeMap<usize, usize>) -> Self {
        Self { entries }
    }

    pub fn get(&self, instance: usize) -> Option<usize> {
        self.entries.get(&instance).copied()
    }

    pub fn contains(&self, instance: usize) -> bool {
        self.entries.contains_key(&instance)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|(x, y)| (*x, *y))
    }
}

/// Builds the bipartite graph and seed set from parsed records.
///
/// Feature tokens are interned to dense ids in first-seen order and
/// duplicates within one record collapse to a single edge.
pub fn build_graph(records: &[Record], num_labels: usize) -> Result<(BipartiteGraph, SeedLabels)> {
    if num_labels < 2 {
        return Err(Error::Unsupported(format!(
            "need at least 2 labels, got {num_labels}"
        )));
    }
    let mut instance_names = Vec::with_capacity(records.len());
    let mut instance_ids: HashMap<&str, usize> = HashMap::new();
    let mut feature_names: Vec<String> = Vec::new();
    let mut feature_ids: HashMap<String, usize> = HashMap::new();
    let mut features_of: Vec<Vec<usize>> = Vec::with_capacity(records.len());
    let mut instances_of: Vec<Vec<usize>> = Vec::new();
    let mut seeds = BTreeMap::new();

    for rec in records {
        if rec.features.is_empty() {
            return Err(Error::EmptyFeatures {
                record: rec.id.clone(),
            });
        }
        if instance_ids.contains_key(rec.id.as_str()) {
            return Err(Error::DuplicateInstance {
                record: rec.id.clone(),
            });
        }
        if let Some(label) = rec.label {
            if label >= num_labels {
                return Err(Error::LabelOutOfRange {
                    record: rec.id.clone(),
                    label,
                    num_labels,
                });
            }
        }
        let x = instance_names.len();
        instance_ids.insert(rec.id.as_str(), x);
        instance_names.push(rec.id.clone());
        let mut fx = Vec::with_capacity(rec.features.len());
        for tok in &rec.features {
            let f = match feature_ids.get(tok) {
                Some(&f) => f,
                None => {
                    let f = feature_names.len();
                    feature_ids.insert(tok.clone(), f);
                    feature_names.push(tok.clone());
                    instances_of.push(Vec::new());
                    f
                }
            };
            if !fx.contains(&f) {
                fx.push(f);
                instances_of[f].push(x);
            }
        }
        features_of.push(fx);
        if let Some(label) = rec.label {
            seeds.insert(x, label);
        }
    }

    Ok((
        BipartiteGraph {
            num_labels,
            features_of,
            instances_of,
            instance_names,
            feature_names,
        },
        SeedLabels::new(seeds),
    ))
}

/// Brings every instance up to the maximum degree m by attaching fresh
/// singleton features. Original adjacency is untouched, so the call is
/// idempotent: a second application finds nothing to pad.
pub fn pad_to_uniform_degree(graph: &BipartiteGraph) -> (BipartiteGraph, usize) {
    let m = graph.max_instance_degree();
    let mut padded = graph.clone();
    for x in 0..padded.features_of.len() {
        let mut k = 0;
        while padded.features_of[x].len() < m {
            let f = padded.instances_of.len();
            padded
                .feature_names
                .push(format!("{PAD_FEATURE_PREFIX}{x}_{k}"));
            padded.instances_of.push(vec![x]);
            padded.features_of[x].push(f);
            k += 1;
        }
    }
    (padded, m)
}

/// Parsed TSV input: records plus the optional label-name header.
#[derive(Debug, Clone)]
pub struct TsvData {
    pub records: Vec<Record>,
    pub label_names: Option<Vec<String>>,
}

impl TsvData {
    /// Resolves the number of labels: an explicit override wins, then the
    /// header, then one past the largest label seen.
    pub fn resolve_num_labels(&self, explicit: Option<usize>) -> Result<usize> {
        if let Some(l) = explicit {
            if let Some(names) = &self.label_names {
                if names.len() != l {
                    return Err(Error::Unsupported(format!(
                        "label header lists {} names but {l} labels were requested",
                        names.len()
                    )));
                }
            }
            return Ok(l);
        }
        if let Some(names) = &self.label_names {
            return Ok(names.len());
        }
        match self.records.iter().filter_map(|r| r.label).max() {
            Some(top) => Ok((top + 1).max(2)),
            None => Err(Error::NoSeeds),
        }
    }

    pub fn label_name(&self, j: usize) -> String {
        match &self.label_names {
            Some(names) if j < names.len() => names[j].clone(),
            _ => j.to_string(),
        }
    }
}

/// Reads the record format `instance_id<TAB>label_or_?<TAB>feature tokens`,
/// one record per line. `?` marks an unlabeled instance. An optional
/// `#labels: name0,name1,...` header maps label names to indices; other
/// `#` lines are comments.
pub fn parse_tsv<R: BufRead>(reader: R) -> Result<TsvData> {
    let mut records = Vec::new();
    let mut label_names: Option<Vec<String>> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("#labels:") {
            let names: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
            if names.iter().any(String::is_empty) || names.len() < 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "label header needs at least two non-empty names".into(),
                });
            }
            label_names = Some(names);
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let mut cols = trimmed.split('\t');
        let id = cols.next().unwrap_or("").trim();
        let label_col = cols.next();
        let feature_col = cols.next();
        let (label_col, feature_col) = match (label_col, feature_col) {
            (Some(l), Some(f)) => (l.trim(), f),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected 3 tab-separated columns: id, label, features".into(),
                })
            }
        };
        if id.is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "empty instance id".into(),
            });
        }
        let label = parse_label(label_col, &label_names).map_err(|msg| Error::Parse {
            line: lineno + 1,
            msg,
        })?;
        let features: Vec<String> = feature_col
            .split(' ')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().to_string())
            .collect();
        if features.is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("record '{id}' has no feature tokens"),
            });
        }
        records.push(Record {
            id: id.to_string(),
            label,
            features,
        });
    }
    Ok(TsvData {
        records,
        label_names,
    })
}

fn parse_label(
    col: &str,
    label_names: &Option<Vec<String>>,
) -> std::result::Result<Option<usize>, String> {
    if col == "?" {
        return Ok(None);
    }
    if let Some(names) = label_names {
        if let Some(j) = names.iter().position(|n| n == col) {
            return Ok(Some(j));
        }
    }
    col.parse::<usize>()
        .map(Some)
        .map_err(|_| format!("unknown label '{col}'"))
}
