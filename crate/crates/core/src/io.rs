//! File formats: problems, solutions, trained models, traces.
//!
//! JSON output is canonical: keys sorted, no whitespace, every float written
//! with 17 significant digits, so serialize -> parse ->
//! serialize reproduces the bytes exactly. Infinite bounds are written as
//! `null`. Every document carries `format_version`.

use crate::error::{Error, Result};
use crate::learn::{Layer, MlpClassifier, StrategyDictionary, TrainConfig, TrainMetrics};
use crate::model::{Basis, ConstraintBlock, ConstraintId, LinearConstraint, SampledProblem, Solution, VariableSpec};
use crate::problems::FamilySpec;
use crate::sequential::SeqTrace;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const FORMAT_VERSION: u32 = 1;

struct Canonical;

impl serde_json::ser::Formatter for Canonical {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

/// Canonical JSON text of `value`, newline-terminated.
pub fn to_canonical_json<S: Serialize>(value: &S) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical);
    // Value objects are BTreeMaps, so this sorts every key.
    serde_json::to_value(value)?.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

fn parse<D: DeserializeOwned>(text: &str) -> Result<D> {
    #[derive(Deserialize)]
    struct Version {
        format_version: Option<u32>,
    }
    let v: Version = serde_json::from_str(text)?;
    match v.format_version {
        Some(FORMAT_VERSION) => Ok(serde_json::from_str(text)?),
        Some(other) => Err(Error::schema(
            "format_version",
            format!("unsupported version {other}, expected {FORMAT_VERSION}"),
        )),
        None => Err(Error::schema("format_version", "missing")),
    }
}

fn check_len(field: impl Into<String>, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::schema(field, format!("expected {expected} entries, found {got}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowFile {
    a: Vec<f64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockFile {
    sample: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<f64>>,
    rows: Vec<RowFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<FamilySpec>,
    d_r: usize,
    d_z: usize,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    base: Vec<RowFile>,
    blocks: Vec<BlockFile>,
}

/// A sampled problem together with the family it was drawn from, if known.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemDocument {
    pub problem: SampledProblem<f64>,
    pub source: Option<FamilySpec>,
}

fn row_file(r: &LinearConstraint<f64>) -> RowFile {
    RowFile { a: r.a.clone(), b: r.b }
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn problem_to_json(doc: &ProblemDocument) -> Result<String> {
    let p = &doc.problem;
    let file = ProblemFile {
        format_version: FORMAT_VERSION,
        source: doc.source.clone(),
        d_r: p.vars.d_r(),
        d_z: p.vars.d_z(),
        lower: p.vars.lower().iter().map(|v| finite_or_none(*v)).collect(),
        upper: p.vars.upper().iter().map(|v| finite_or_none(*v)).collect(),
        c: p.c.clone(),
        base: p.base.iter().map(row_file).collect(),
        blocks: p
            .blocks
            .iter()
            .map(|b| BlockFile {
                sample: b.sample_index,
                q: b.q.clone(),
                rows: b.rows.iter().map(row_file).collect(),
            })
            .collect(),
    };
    to_canonical_json(&file)
}

fn rows_from(field: &str, rows: Vec<RowFile>, sample: usize, d: usize) -> Result<Vec<LinearConstraint<f64>>> {
    rows.into_iter()
        .enumerate()
        .map(|(k, r)| {
            check_len(format!("{field}.rows[{k}].a"), d, r.a.len())?;
            LinearConstraint::new(ConstraintId::new(sample, k), r.a, r.b)
                .map_err(|e| Error::schema(format!("{field}.rows[{k}]"), e.to_string()))
        })
        .collect()
}

pub fn problem_from_json(text: &str) -> Result<ProblemDocument> {
    let f: ProblemFile = parse(text)?;
    let d = f.d_r + f.d_z;
    check_len("lower", d, f.lower.len())?;
    check_len("upper", d, f.upper.len())?;
    check_len("c", d, f.c.len())?;
    let lower = f.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
    let upper = f.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    let vars = VariableSpec::new(f.d_r, f.d_z, lower, upper).map_err(|e| Error::schema("lower", e.to_string()))?;
    let base = rows_from("base", f.base, 0, d)?;
    if f.blocks.is_empty() {
        return Err(Error::schema("blocks", "at least one block is required"));
    }
    let mut blocks = Vec::with_capacity(f.blocks.len());
    let dim_q = f.blocks[0].q.as_ref().map(Vec::len);
    for (k, b) in f.blocks.into_iter().enumerate() {
        let field = format!("blocks[{k}]");
        if b.sample != k + 1 {
            return Err(Error::schema(
                format!("{field}.sample"),
                format!("expected {}, found {}", k + 1, b.sample),
            ));
        }
        if b.q.as_ref().map(Vec::len) != dim_q {
            return Err(Error::schema(format!("{field}.q"), "inconsistent uncertainty dimension"));
        }
        let rows = rows_from(&field, b.rows, b.sample, d)?;
        blocks.push(ConstraintBlock::new(b.sample, b.q, rows)?);
    }
    let problem = SampledProblem::new(vars, f.c, base, blocks)?;
    Ok(ProblemDocument {
        problem,
        source: f.source,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    format_version: u32,
    method: String,
    objective: f64,
    x: Vec<f64>,
    /// `[sample, row]` pairs.
    basis: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionDocument {
    pub method: String,
    pub solution: Solution<f64>,
    pub basis: Basis,
}

pub fn solution_to_json(doc: &SolutionDocument) -> Result<String> {
    to_canonical_json(&SolutionFile {
        format_version: FORMAT_VERSION,
        method: doc.method.clone(),
        objective: doc.solution.objective,
        x: doc.solution.x.clone(),
        basis: doc.basis.members().iter().map(|id| [id.sample, id.row]).collect(),
    })
}

pub fn solution_from_json(text: &str) -> Result<SolutionDocument> {
    let f: SolutionFile = parse(text)?;
    Ok(SolutionDocument {
        method: f.method,
        solution: Solution {
            x: f.x,
            objective: f.objective,
        },
        basis: f.basis.iter().map(|[s, r]| ConstraintId::new(*s, *r)).collect(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    /// Row-major, one inner array per output unit.
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    layer_dims: Vec<usize>,
    shift: Vec<f64>,
    scale: Vec<f64>,
    layers: Vec<LayerFile>,
    dictionary: Vec<Vec<usize>>,
    config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<TrainMetrics>,
}

/// A trained classifier, its label space, and how it was trained.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub net: MlpClassifier<f64>,
    pub dict: StrategyDictionary,
    pub config: TrainConfig,
    pub family: Option<FamilySpec>,
    pub metrics: Option<TrainMetrics>,
}

pub fn model_to_json(doc: &ModelDocument) -> Result<String> {
    to_canonical_json(&ModelFile {
        format_version: FORMAT_VERSION,
        layer_dims: doc.net.layer_dims(),
        shift: doc.net.shift().to_vec(),
        scale: doc.net.scale().to_vec(),
        layers: doc
            .net
            .layers()
            .iter()
            .map(|l| LayerFile {
                w: l.w.chunks(l.inputs).map(<[f64]>::to_vec).collect(),
                b: l.b.clone(),
            })
            .collect(),
        dictionary: doc.dict.entries().to_vec(),
        config: doc.config.clone(),
        family: doc.family.clone(),
        metrics: doc.metrics.clone(),
    })
}

pub fn model_from_json(text: &str) -> Result<ModelDocument> {
    let f: ModelFile = parse(text)?;
    if f.layer_dims.len() != f.layers.len() + 1 {
        return Err(Error::schema("layer_dims", "must have one more entry than layers"));
    }
    let mut layers = Vec::with_capacity(f.layers.len());
    for (k, (l, dims)) in f.layers.into_iter().zip(f.layer_dims.windows(2)).enumerate() {
        check_len(format!("layers[{k}].w"), dims[1], l.w.len())?;
        check_len(format!("layers[{k}].b"), dims[1], l.b.len())?;
        for (o, row) in l.w.iter().enumerate() {
            check_len(format!("layers[{k}].w[{o}]"), dims[0], row.len())?;
        }
        layers.push(Layer {
            inputs: dims[0],
            outputs: dims[1],
            w: l.w.concat(),
            b: l.b,
        });
    }
    let net = MlpClassifier::from_parts(layers, f.shift, f.scale).map_err(|e| Error::schema("layers", e.to_string()))?;
    let dict = StrategyDictionary::from_entries(f.dictionary).map_err(|e| Error::schema("dictionary", e.to_string()))?;
    check_len("dictionary", net.classes(), dict.len())?;
    Ok(ModelDocument {
        net,
        dict,
        config: f.config,
        family: f.family,
        metrics: f.metrics,
    })
}

/// One line per iteration: `t,J,basis_size,violations,constraints_in_solve,
/// nodes,millis,rows_in_solve,fallback,degenerate`.
pub fn trace_csv(trace: &SeqTrace<f64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "t",
        "J",
        "basis_size",
        "violations",
        "constraints_in_solve",
        "nodes",
        "millis",
        "rows_in_solve",
        "fallback",
        "degenerate",
    ])
    .map_err(csv_error)?;
    for r in &trace.records {
        w.write_record([
            r.t.to_string(),
            format!("{:.16e}", r.objective),
            r.basis_size.to_string(),
            r.violations.to_string(),
            r.constraints_in_solve.to_string(),
            r.nodes.to_string(),
            format!("{:.3}", r.millis),
            r.rows_in_solve.to_string(),
            u8::from(r.fallback).to_string(),
            u8::from(r.degenerate).to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w)
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_every_bit() {
        let values = [0.1, -0.0, 1e-300, 123456789.123456789, f64::MIN_POSITIVE, 2.0f64.sqrt()];
        let text = to_canonical_json(&values).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(to_canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn keys_are_sorted() {
        #[derive(Serialize)]
        struct Unsorted {
            zeta: u8,
            alpha: f64,
        }
        assert_eq!(
            to_canonical_json(&Unsorted { zeta: 1, alpha: 0.5 }).unwrap(),
            "{\"alpha\":5.0000000000000000e-1,\"zeta\":1}\n"
        );
    }

    #[test]
    fn version_is_required() {
        assert!(matches!(solution_from_json("{}"), Err(Error::Schema { .. })));
        let bad = r#"{"format_version":9,"method":"x","objective":0,"x":[],"basis":[]}"#;
        assert!(matches!(solution_from_json(bad), Err(Error::Schema { .. })));
    }
}
