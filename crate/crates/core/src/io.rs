//! JSON instance and solution files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metric::{Metric, MetricInstance};
use crate::partition::ConstraintSpec;
use crate::solver::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Matrix,
    Euclidean,
    Graph,
}

/// Writes integral values without a fractional part.
fn ell_repr<S: Serializer>(ell: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if ell.fract() == 0.0 && ell.abs() < 1e15 {
        s.serialize_i64(*ell as i64)
    } else {
        s.serialize_f64(*ell)
    }
}

/// On-disk instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(serialize_with = "ell_repr")]
    pub ell: f64,
    pub mode: Mode,
    pub clients: Vec<usize>,
    pub facilities: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<BTreeMap<usize, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSpec>,
    /// Free-form; generators record their parameters here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

impl InstanceFile {
    pub fn from_instance(instance: &MetricInstance, constraint: Option<ConstraintSpec>, meta: Option<Value>) -> Self {
        let mut f = InstanceFile {
            ell: instance.ell(),
            mode: Mode::Matrix,
            clients: instance.clients().to_vec(),
            facilities: instance.facilities().to_vec(),
            matrix: None,
            coords: None,
            edges: None,
            constraint,
            meta,
        };
        match instance.metric() {
            Metric::Matrix(m) => f.matrix = Some(m.rows()),
            Metric::Euclidean { coords } => {
                f.mode = Mode::Euclidean;
                f.coords = Some(coords.iter().enumerate().filter_map(|(i, c)| c.clone().map(|c| (i, c))).collect());
            }
            Metric::Graph { edges, .. } => {
                f.mode = Mode::Graph;
                f.edges = Some(edges.clone());
            }
        }
        f
    }

    pub fn to_instance(&self) -> Result<MetricInstance> {
        let missing = |field: &str| Error::Parse(format!("mode \"{:?}\" requires field \"{field}\"", self.mode).to_lowercase());
        let (clients, facilities) = (self.clients.clone(), self.facilities.clone());
        match self.mode {
            Mode::Matrix => {
                let rows = self.matrix.as_ref().ok_or_else(|| missing("matrix"))?;
                MetricInstance::from_matrix(clients, facilities, rows, self.ell)
            }
            Mode::Euclidean => {
                let coords = self.coords.as_ref().ok_or_else(|| missing("coords"))?;
                MetricInstance::from_coords(clients, facilities, coords, self.ell)
            }
            Mode::Graph => {
                let edges = self.edges.as_ref().ok_or_else(|| missing("edges"))?;
                MetricInstance::from_graph(clients, facilities, edges.clone(), self.ell)
            }
        }
    }
}

/// Parse with the failing field path and line/column in the message.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse(format!("at `{path}` (line {}, column {}): {inner}", inner.line(), inner.column()))
    })
}

pub fn parse_instance_file(text: &str) -> Result<InstanceFile> {
    parse_json(text)
}

pub fn load_instance_file(path: impl AsRef<Path>) -> Result<InstanceFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_instance_file(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Instance plus its optional constraint and metadata.
pub fn load_instance(path: impl AsRef<Path>) -> Result<(MetricInstance, InstanceFile)> {
    let file = load_instance_file(path)?;
    Ok((file.to_instance()?, file))
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn save_instance(path: impl AsRef<Path>, instance: &MetricInstance, constraint: Option<ConstraintSpec>, meta: Option<Value>) -> Result<()> {
    save_json(path, &InstanceFile::from_instance(instance, constraint, meta))
}

/// On-disk solution. Centers and keys of `assignment` are point ids;
/// assignment values are cluster positions (cluster `j` uses `centers[j]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub cost: f64,
    pub centers: Vec<usize>,
    pub assignment: BTreeMap<usize, usize>,
    pub excluded: Vec<usize>,
    #[serde(default)]
    pub meta: Value,
}

impl SolutionFile {
    pub fn from_solution(instance: &MetricInstance, solution: &Solution, mut meta: serde_json::Map<String, Value>) -> Self {
        let p = &solution.provenance;
        meta.insert("repetition".into(), p.repetition.into());
        meta.insert("candidate".into(), p.candidate.into());
        meta.insert("seed".into(), p.seed.into());
        meta.insert("candidates_evaluated".into(), solution.candidates_evaluated.into());
        meta.insert("seeding".into(), solution.seeding_note.clone().into());
        if let Some(d) = &solution.demand_assignment {
            meta.insert("demand_assignment".into(), d.clone().into());
        }
        Self::from_parts(instance, solution.centers.as_slice(), &solution.clustering, solution.cost, meta)
    }

    pub fn from_parts(
        instance: &MetricInstance,
        centers: &[usize],
        clustering: &crate::metric::Clustering,
        cost: f64,
        meta: serde_json::Map<String, Value>,
    ) -> Self {
        let mut assignment = BTreeMap::new();
        let mut excluded = Vec::new();
        for (c, l) in clustering.labels().iter().enumerate() {
            match l {
                Some(j) => {
                    assignment.insert(instance.client_point(c), *j);
                }
                None => excluded.push(instance.client_point(c)),
            }
        }
        SolutionFile {
            cost,
            centers: centers.iter().map(|&f| instance.facility_point(f)).collect(),
            assignment,
            excluded,
            meta: Value::Object(meta),
        }
    }
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<SolutionFile> {
    parse_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_ell_is_named() {
        let e = parse_instance_file(r#"{"mode":"matrix","clients":[0],"facilities":[0],"matrix":[[0]]}"#).unwrap_err();
        assert!(e.to_string().contains("ell"), "{e}");
    }

    #[test]
    fn bad_field_path() {
        let e = parse_instance_file(r#"{"ell":1,"mode":"matrix","clients":[0,"x"],"facilities":[0]}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("clients[1]") && msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn unknown_mode() {
        assert!(parse_instance_file(r#"{"ell":1,"mode":"sphere","clients":[0],"facilities":[0]}"#).is_err());
    }

    #[test]
    fn ell_written_as_int() {
        let f = parse_instance_file(r#"{"ell":2,"mode":"matrix","clients":[0],"facilities":[1],"matrix":[[0,1],[1,0]]}"#).unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.starts_with(r#"{"ell":2,"#), "{text}");
        assert_eq!(f.to_instance().unwrap().dist(0, 1), 1.0);
    }

    #[test]
    fn mode_needs_its_payload() {
        let f = parse_instance_file(r#"{"ell":1,"mode":"graph","clients":[0],"facilities":[1]}"#).unwrap();
        assert!(f.to_instance().unwrap_err().to_string().contains("edges"));
    }
}
