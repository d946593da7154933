//! Reading and writing datasets, rankings and reports.
//!
//! Citations and features are tab-separated pairs of external ids, one per
//! line (`src<TAB>dst` and `item<TAB>attribute`). External ids are opaque
//! strings; dense indices follow the order of first appearance.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ComparisonReport;
use crate::model::{CitationGraph, Feature, FeatureSet, CITATIONS};
use crate::ranking::{ordinal_ranks, RankVector};
use crate::sparse::SparseMatrix;

/// Bijection between external ids and dense indices `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeDictionary {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut dict = Self::new();
        for id in ids {
            if dict.index.contains_key(&id) {
                return Err(Error::InvalidArgument(format!("duplicate id {id:?}")));
            }
            dict.get_or_insert(&id);
        }
        Ok(dict)
    }

    pub fn get_or_insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Parses `a<TAB>b` lines. Blank lines are skipped.
fn read_pairs(path: &Path) -> Result<Vec<(String, String, usize)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: &str| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: message.to_string(),
        };
        let mut fields = line.split('\t');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err("expected exactly two tab-separated fields"));
        };
        if a.is_empty() || b.is_empty() {
            return Err(parse_err("empty id"));
        }
        out.push((a.to_string(), b.to_string(), n + 1));
    }
    Ok(out)
}

/// Reads one id per line; blank lines are skipped.
pub fn load_item_list(path: &Path) -> Result<NodeDictionary> {
    let text = fs::read_to_string(path)?;
    let mut dict = NodeDictionary::new();
    for (n, line) in text.lines().enumerate() {
        let id = line.trim_end_matches('\r');
        if id.trim().is_empty() {
            continue;
        }
        if dict.index_of(id).is_some() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: format!("duplicate item {id:?}"),
            });
        }
        dict.get_or_insert(id);
    }
    Ok(dict)
}

pub fn write_item_list(path: &Path, items: &NodeDictionary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for id in items.ids() {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a citation list. Duplicate lines collapse to one edge and
/// self-citations are dropped (and counted in the log).
pub fn load_citations(path: &Path) -> Result<(CitationGraph, NodeDictionary)> {
    load_citations_with(path, NodeDictionary::new())
}

/// Like [`load_citations`], but items already in `dict` keep their indices,
/// so items without any citation survive.
pub fn load_citations_with(path: &Path, mut dict: NodeDictionary) -> Result<(CitationGraph, NodeDictionary)> {
    let pairs = read_pairs(path)?;
    let mut edges = Vec::with_capacity(pairs.len());
    let mut self_loops = 0usize;
    for (src, dst, _) in &pairs {
        let i = dict.get_or_insert(src);
        let j = dict.get_or_insert(dst);
        if i == j {
            self_loops += 1;
        } else {
            edges.push((i, j));
        }
    }
    if self_loops > 0 {
        log::warn!("{}: dropped {self_loops} self-citations", path.display());
    }
    edges.sort_unstable();
    edges.dedup();
    let graph = CitationGraph::from_edges(dict.len(), &edges)?;
    Ok((graph, dict))
}

/// Writes the edges in row-major index order.
pub fn write_citations(path: &Path, graph: &CitationGraph, items: &NodeDictionary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, j, _) in graph.matrix().triplets() {
        writeln!(w, "{}\t{}", items.id(i), items.id(j))?;
    }
    w.flush()?;
    Ok(())
}

/// Loads one feature over the items of `items`. Every listed item must be
/// known; attributes are numbered by first appearance, so no column is
/// empty. An empty file gives a feature without attributes.
pub fn load_features(path: &Path, name: &str, items: &NodeDictionary) -> Result<(Feature, NodeDictionary)> {
    let pairs = read_pairs(path)?;
    let mut unknown = BTreeSet::new();
    let mut attrs = NodeDictionary::new();
    let mut cells = Vec::with_capacity(pairs.len());
    for (item, attr, _) in &pairs {
        match items.index_of(item) {
            Some(i) => cells.push((i, attrs.get_or_insert(attr))),
            None => {
                unknown.insert(item.clone());
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownItems {
            path: path.to_path_buf(),
            ids: unknown.into_iter().collect(),
        });
    }
    if attrs.is_empty() {
        log::warn!("{}: feature {name} has no attributes", path.display());
    }
    cells.sort_unstable();
    cells.dedup();
    let m = SparseMatrix::from_pattern(items.len(), attrs.len(), &cells)?;
    Ok((Feature::new(name, m)?, attrs))
}

pub fn write_features(
    path: &Path,
    feature: &Feature,
    items: &NodeDictionary,
    attributes: &NodeDictionary,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, j, _) in feature.matrix().triplets() {
        writeln!(w, "{}\t{}", items.id(i), attributes.id(j))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub name: String,
    pub path: PathBuf,
}

/// Where a dataset's files live. Relative paths are taken relative to the
/// manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Optional list of all items, one per line. Fixes the item order and
    /// keeps items that are never cited and cite nothing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<PathBuf>,
    pub citations: PathBuf,
    pub features: Vec<FeatureEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: DatasetManifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.citations = base.join(&m.citations);
        m.items = m.items.map(|p| base.join(p));
        for f in &mut m.features {
            f.path = base.join(&f.path);
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Graph, features and the id dictionaries that map them to external ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: CitationGraph,
    pub features: FeatureSet,
    pub items: NodeDictionary,
    /// One dictionary per feature, in feature order.
    pub attributes: Vec<NodeDictionary>,
}

impl Dataset {
    /// Wraps in-memory data with generated ids: items `i{k}`, attributes
    /// `{feature}:{k}`.
    pub fn with_generated_ids(graph: CitationGraph, features: FeatureSet) -> Self {
        let items = NodeDictionary::from_ids((0..graph.n_items()).map(|i| format!("i{i}")).collect())
            .expect("generated ids are unique");
        let attributes = features
            .features()
            .iter()
            .map(|f| {
                NodeDictionary::from_ids((0..f.n_attributes()).map(|j| format!("{}:{j}", f.name)).collect())
                    .expect("generated ids are unique")
            })
            .collect();
        Self {
            graph,
            features,
            items,
            attributes,
        }
    }

    /// External ids of the class at layout position `k` (features first,
    /// citations last).
    pub fn class_ids(&self, k: usize) -> &NodeDictionary {
        if k < self.attributes.len() {
            &self.attributes[k]
        } else {
            &self.items
        }
    }
}

pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let seed = match &manifest.items {
        Some(p) => load_item_list(p)?,
        None => NodeDictionary::new(),
    };
    let (graph, items) = load_citations_with(&manifest.citations, seed)?;
    let mut features = Vec::with_capacity(manifest.features.len());
    let mut attributes = Vec::with_capacity(manifest.features.len());
    for entry in &manifest.features {
        let (f, attrs) = load_features(&entry.path, &entry.name, &items)?;
        features.push(f);
        attributes.push(attrs);
    }
    let features = FeatureSet::new(graph.n_items(), features)?;
    Ok(Dataset {
        graph,
        features,
        items,
        attributes,
    })
}

/// Writes `items.txt`, `citations.tsv`, one `<name>.tsv` per feature and
/// `manifest.json` into `dir`; returns the manifest path.
pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    write_item_list(&dir.join("items.txt"), &data.items)?;
    write_citations(&dir.join("citations.tsv"), &data.graph, &data.items)?;
    let mut entries = Vec::new();
    for (f, attrs) in data.features.features().iter().zip(&data.attributes) {
        let file = format!("{}.tsv", f.name);
        write_features(&dir.join(&file), f, &data.items, attrs)?;
        entries.push(FeatureEntry {
            name: f.name.clone(),
            path: PathBuf::from(file),
        });
    }
    let manifest = DatasetManifest {
        items: Some(PathBuf::from("items.txt")),
        citations: PathBuf::from("citations.tsv"),
        features: entries,
    };
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

/// Reads an aggregation map: `feature<TAB>fine_attribute<TAB>coarse_label`
/// lines. Coarse ids are numbered per feature by first appearance. Returns
/// the map and, per feature, the coarse labels in id order.
pub fn load_aggregation_map(
    path: &Path,
    data: &Dataset,
) -> Result<(crate::eval::AggregationMap, HashMap<String, NodeDictionary>)> {
    let reader = BufReader::new(File::open(path)?);
    let mut raw: HashMap<String, Vec<Option<usize>>> = HashMap::new();
    let mut labels: HashMap<String, NodeDictionary> = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        let [feature, fine, coarse] = fields[..] else {
            return Err(err("expected feature, fine attribute and coarse label".into()));
        };
        let k = data
            .features
            .features()
            .iter()
            .position(|f| f.name == feature)
            .ok_or_else(|| err(format!("unknown feature {feature:?}")))?;
        let j = data.attributes[k]
            .index_of(fine)
            .ok_or_else(|| err(format!("unknown attribute {fine:?} of feature {feature:?}")))?;
        let c = labels.entry(feature.to_string()).or_default().get_or_insert(coarse);
        let slots = raw
            .entry(feature.to_string())
            .or_insert_with(|| vec![None; data.attributes[k].len()]);
        if slots[j].is_some_and(|prev| prev != c) {
            return Err(err(format!("attribute {fine:?} mapped twice")));
        }
        slots[j] = Some(c);
    }
    let mut map = crate::eval::AggregationMap::default();
    for (feature, slots) in raw {
        if let Some(j) = slots.iter().position(Option::is_none) {
            return Err(Error::UnmappedAttribute { feature, attribute: j });
        }
        map.maps.insert(feature, slots.into_iter().flatten().collect());
    }
    Ok((map, labels))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("CSV output failed: {other:?}")),
    }
}

/// Score formatting shared by every CSV output.
pub fn format_score(x: f64) -> String {
    format!("{x:.12e}")
}

/// Writes `node_external_id,class,score,ordinal_rank` rows, class by class.
/// Ordinal ranks restart at 1 in every class.
pub fn write_ranking_csv(path: &Path, rank: &RankVector, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["node_external_id", "class", "score", "ordinal_rank"])
        .map_err(csv_error)?;
    for k in 0..rank.layout.n_classes() {
        let name = &rank.layout.names[k];
        let ids = if name == CITATIONS { &data.items } else { data.class_ids(k) };
        let scores = rank.class_scores(k);
        let ordinal = ordinal_ranks(scores);
        for (i, s) in scores.iter().enumerate() {
            w.write_record([ids.id(i), name, &format_score(*s), &ordinal[i].to_string()])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `(baseline, model)` pairs as `node_external_id,baseline,model`.
/// Above `cap` points a seeded uniform sample (kept in id order) is written.
pub fn write_scatter_csv(
    path: &Path,
    report: &ComparisonReport,
    ids: &NodeDictionary,
    cap: usize,
    seed: u64,
) -> Result<usize> {
    let n = report.scatter.len();
    let chosen: Vec<usize> = if n > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["node_external_id", "baseline", "model"])
        .map_err(csv_error)?;
    for &i in &chosen {
        let (x, y) = report.scatter[i];
        w.write_record([ids.id(i), &format_score(x), &format_score(y)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(chosen.len())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
