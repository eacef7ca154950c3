//! The JSON net file format, matrix literals and DOT export.
//!
//! ```json
//! {
//!   "places": [{"id": "p0", "dim": 2}, {"id": "p1", "dim": 2}],
//!   "transitions": [
//!     {"id": "t", "polarity": "0", "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}
//!   ],
//!   "flow": [["p0", "t"], ["t", "p1"]],
//!   "initial_marking": ["p0"]
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs. `h_dim` defaults to 1 and
//! `metadata` is an arbitrary object kept verbatim. Places and transitions
//! may carry a `label`, used by unfoldings to name the original node.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, CptniMap, Dim, C64};
use crate::annotation::{AnnotatedNet, LocalAnnotation};
use crate::error::{Error, Result};
use crate::net::{Net, NetBuilder, Polarity};
use crate::unfolding::BranchingProcess;

pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceEntry {
    pub id: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    pub id: String,
    pub polarity: String,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub h_dim: usize,
    pub kraus: Vec<MatrixLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn one() -> usize {
    1
}

fn is_one(n: &usize) -> bool {
    *n == 1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDocument {
    pub places: Vec<PlaceEntry>,
    pub transitions: Vec<TransitionEntry>,
    pub flow: Vec<(String, String)>,
    pub initial_marking: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn parse_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn json_error(e: serde_json::Error) -> Error {
    parse_error(format!("line {}, column {}", e.line(), e.column()), e.to_string())
}

/// Decodes a matrix literal; every row must have the same length.
pub fn matrix_from_literal(lit: &MatrixLiteral, location: &str) -> Result<ComplexMatrix> {
    let rows = lit.len();
    let cols = lit.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(parse_error(location, "empty matrix"));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, row) in lit.iter().enumerate() {
        if row.len() != cols {
            return Err(parse_error(
                format!("{location} row {i}"),
                format!("expected {cols} entries, found {}", row.len()),
            ));
        }
        for (j, [re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(parse_error(format!("{location} row {i} column {j}"), "entry is not finite"));
            }
            data.push(C64::new(*re, *im));
        }
    }
    ComplexMatrix::new(rows, cols, data)
}

pub fn matrix_to_literal(m: &ComplexMatrix) -> MatrixLiteral {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

/// Parses a standalone matrix literal, e.g. a density matrix file.
pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let lit: MatrixLiteral = serde_json::from_str(text).map_err(json_error)?;
    matrix_from_literal(&lit, "matrix")
}

/// Parses an object mapping ids to matrix literals.
pub fn parse_matrix_map(text: &str) -> Result<BTreeMap<String, ComplexMatrix>> {
    let lits: BTreeMap<String, MatrixLiteral> = serde_json::from_str(text).map_err(json_error)?;
    lits.iter()
        .map(|(k, lit)| Ok((k.clone(), matrix_from_literal(lit, k)?)))
        .collect()
}

impl NetDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn to_json(&self) -> String {
        render(&serde_json::to_value(self).expect("documents serialise"))
    }

    /// Builds the annotated net, exploring up to `marking_bound` markings
    /// for safety. Structural problems are reported as located parse
    /// errors; an unsafe net is reported as such.
    pub fn to_annotated(&self, marking_bound: usize) -> Result<AnnotatedNet> {
        let mut builder = NetBuilder::new();
        let mut dims = BTreeMap::new();
        for (i, p) in self.places.iter().enumerate() {
            if p.dim == 0 {
                return Err(parse_error(format!("places[{i}] ({})", p.id), "dimension must be positive"));
            }
            builder = builder.place(&p.id);
            dims.insert(p.id.as_str(), p.dim);
        }
        let mut polarity = BTreeMap::new();
        for (i, t) in self.transitions.iter().enumerate() {
            let pol = Polarity::from_symbol(&t.polarity).ok_or_else(|| {
                parse_error(
                    format!("transitions[{i}] ({}).polarity", t.id),
                    format!("expected \"-\", \"0\" or \"+\", found {:?}", t.polarity),
                )
            })?;
            if t.h_dim == 0 {
                return Err(parse_error(format!("transitions[{i}] ({}).h_dim", t.id), "dimension must be positive"));
            }
            builder = builder.transition(&t.id, pol);
            polarity.insert(t.id.as_str(), pol);
        }
        for (a, b) in &self.flow {
            builder = builder.arc(a, b);
        }
        let builder = builder.initial(self.initial_marking.iter().cloned());
        let structural = |e: Error| match e {
            Error::DuplicateId(id) => parse_error("places/transitions", format!("duplicate id {id}")),
            Error::UnknownNode(id) => parse_error("flow/initial_marking", format!("unknown node {id}")),
            Error::InvalidNet(m) => parse_error("flow", m),
            other => other,
        };
        let net = builder.clone().build_unexplored().map_err(structural)?;

        let mut ann = LocalAnnotation::builder(&net);
        for (id, d) in &dims {
            ann = ann.place_dim(*id, *d);
        }
        for (i, t) in self.transitions.iter().enumerate() {
            let location = format!("transitions[{i}] ({})", t.id);
            let idx = net.transition(&t.id)?;
            let pd = |ps: &[usize]| ps.iter().map(|&p| dims[net.place_id(p)]).product::<usize>();
            let pol = polarity[t.id.as_str()];
            let din = pd(net.pre(idx)) * if pol.is_negative() { t.h_dim } else { 1 };
            let dout = pd(net.post(idx)) * if pol == Polarity::Positive { t.h_dim } else { 1 };
            let kraus = t
                .kraus
                .iter()
                .enumerate()
                .map(|(k, lit)| matrix_from_literal(lit, &format!("{location}.kraus[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            for (k, m) in kraus.iter().enumerate() {
                if m.rows() != dout || m.cols() != din {
                    return Err(parse_error(
                        format!("{location}.kraus[{k}]"),
                        format!("expected a {dout}x{din} matrix, found {}x{}", m.rows(), m.cols()),
                    ));
                }
            }
            let map = CptniMap::new(Dim::new(din)?, Dim::new(dout)?, kraus)
                .map_err(|e| parse_error(location.clone(), e.to_string()))?;
            ann = ann.channel(&t.id, map).h(&t.id, t.h_dim);
        }
        let ann = ann.build().map_err(|e| parse_error("transitions", e.to_string()))?;
        let signatures = crate::annotation::validate_signatures(&net, &ann);
        if !signatures.passed {
            return Err(parse_error(signatures.witness.unwrap_or_default(), signatures.detail));
        }
        let net = builder.build_with_bound(marking_bound)?;
        AnnotatedNet::new(net, ann)
    }

    /// Canonical document of an annotated net: nodes and arcs sorted by id.
    pub fn from_annotated(an: &AnnotatedNet) -> Self {
        let net = &an.net;
        let places = (0..net.place_count())
            .map(|p| PlaceEntry {
                id: net.place_id(p).to_string(),
                dim: an.ann.place_dim(p).get(),
                label: None,
            })
            .collect();
        let transitions = (0..net.transition_count())
            .map(|t| TransitionEntry {
                id: net.transition_id(t).to_string(),
                polarity: net.polarity(t).symbol().to_string(),
                h_dim: an.ann.h(t).get(),
                kraus: an.ann.channel(t).kraus().iter().map(matrix_to_literal).collect(),
                label: None,
            })
            .collect();
        Self {
            places,
            transitions,
            flow: net.arcs(),
            initial_marking: net.marking_ids(net.initial_marking()),
            metadata: BTreeMap::new(),
        }
    }

    /// Document of an unfolding with its transferred annotation; every node
    /// carries the id of its label in `net`.
    pub fn from_branching_process(bp: &BranchingProcess, net: &Net, ann: &LocalAnnotation) -> Result<Self> {
        let occ = bp.occ().net().clone();
        let an = AnnotatedNet::new(occ, ann.clone())?;
        let mut doc = Self::from_annotated(&an);
        for (c, entry) in doc.places.iter_mut().enumerate() {
            entry.label = Some(net.place_id(bp.label_place(c)).to_string());
        }
        for (e, entry) in doc.transitions.iter_mut().enumerate() {
            entry.label = Some(net.transition_id(bp.label_event(e)).to_string());
        }
        let exhaustion = bp.exhaustion();
        doc.metadata.insert("depth_exhausted".into(), exhaustion.depth.into());
        doc.metadata.insert("events_exhausted".into(), exhaustion.events.into());
        if let Some(b) = bp.budget() {
            doc.metadata.insert("max_depth".into(), b.max_depth.into());
            doc.metadata.insert("max_events".into(), b.max_events.into());
        }
        Ok(doc)
    }
}

pub fn load_str(text: &str, marking_bound: usize) -> Result<AnnotatedNet> {
    NetDocument::parse(text)?.to_annotated(marking_bound)
}

pub fn load_file(path: &std::path::Path, marking_bound: usize) -> Result<AnnotatedNet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_str(&text, marking_bound)
}

pub fn save_string(an: &AnnotatedNet) -> String {
    NetDocument::from_annotated(an).to_json()
}

fn nesting(v: &serde_json::Value) -> usize {
    match v {
        serde_json::Value::Array(items) => 1 + items.iter().map(nesting).max().unwrap_or(0),
        serde_json::Value::Object(map) => 1 + map.values().map(nesting).max().unwrap_or(0),
        _ => 0,
    }
}

/// Indented JSON in which matrix rows, arcs and flat records stay on one
/// line, so documents diff cleanly.
pub fn render(v: &serde_json::Value) -> String {
    fn go(v: &serde_json::Value, indent: usize, out: &mut String) {
        use serde_json::Value;
        let inline = match v {
            Value::Array(items) => nesting(v) <= 2 && !items.iter().any(Value::is_object),
            Value::Object(_) => nesting(v) <= 1,
            _ => true,
        };
        if inline {
            let text = serde_json::to_string(v).expect("values serialise");
            // serde_json's compact form has no spaces; add them after separators
            let mut spaced = String::with_capacity(text.len() * 5 / 4);
            let mut in_string = false;
            let mut escaped = false;
            for ch in text.chars() {
                spaced.push(ch);
                if in_string {
                    match (escaped, ch) {
                        (true, _) => escaped = false,
                        (false, '\\') => escaped = true,
                        (false, '"') => in_string = false,
                        _ => {}
                    }
                } else if ch == '"' {
                    in_string = true;
                } else if ch == ',' || ch == ':' {
                    spaced.push(' ');
                }
            }
            out.push_str(&spaced);
            return;
        }
        let pad = "  ".repeat(indent + 1);
        match v {
            Value::Array(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad);
                    go(item, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Value::Object(map) => {
                out.push_str("{\n");
                for (i, (k, item)) in map.iter().enumerate() {
                    out.push_str(&pad);
                    out.push_str(&serde_json::to_string(k).expect("keys serialise"));
                    out.push_str(": ");
                    go(item, indent + 1, out);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
            _ => unreachable!(),
        }
    }
    let mut out = String::new();
    go(v, 0, &mut out);
    out.push('\n');
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT rendering: circles for places (filled when initially marked),
/// squares for transitions, suffixed with their polarity.
pub fn to_dot(net: &Net) -> String {
    dot_with_labels(net, |p| net.place_id(p).to_string(), |t| net.transition_id(t).to_string())
}

/// DOT rendering of a branching process, nodes shown as `occ_id : label`.
pub fn branching_process_to_dot(bp: &BranchingProcess, net: &Net) -> String {
    let occ = bp.occ().net();
    dot_with_labels(
        occ,
        |c| format!("{} : {}", occ.place_id(c), net.place_id(bp.label_place(c))),
        |e| format!("{} : {}", occ.transition_id(e), net.transition_id(bp.label_event(e))),
    )
}

fn glyph(p: Polarity) -> &'static str {
    match p {
        Polarity::Negative => "⊖",
        Polarity::Neutral => "0",
        Polarity::Positive => "⊕",
    }
}

fn dot_with_labels(net: &Net, place: impl Fn(usize) -> String, transition: impl Fn(usize) -> String) -> String {
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    for p in 0..net.place_count() {
        let fill = if net.initial_marking().contains(p) { ", style=filled, fillcolor=gray80" } else { "" };
        let _ = writeln!(out, "  {} [shape=circle, label={}{fill}];", quote(net.place_id(p)), quote(&place(p)));
    }
    for t in 0..net.transition_count() {
        let label = format!("{} {}", transition(t), glyph(net.polarity(t)));
        let _ = writeln!(out, "  {} [shape=square, label={}];", quote(net.transition_id(t)), quote(&label));
    }
    for (a, b) in net.arcs() {
        let _ = writeln!(out, "  {} -> {};", quote(&a), quote(&b));
    }
    out.push_str("}\n");
    out
}
