//! JSON forms of transforms and dependence graphs.

use ratlp::rational::{parse_rational, to_fraction_string};
use ratlp::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AffineTransform, Band, ConstraintKind, Cut, Ddg, Level, LevelKind, Program};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    pub statements: Vec<StatementRows>,
    pub levels: Vec<LevelDoc>,
    pub bands: Vec<BandDoc>,
    pub cuts: Vec<CutDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementRows {
    pub id: String,
    /// Columns: iterators, parameters, constant.
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDoc {
    pub kind: String,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandDoc {
    pub start: usize,
    pub end: usize,
    pub permutable: bool,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutDoc {
    pub level: usize,
    pub partition: Vec<Vec<String>>,
}

fn kind_name(k: LevelKind) -> &'static str {
    match k {
        LevelKind::Hyperplane => "hyperplane",
        LevelKind::Scalar => "scalar",
    }
}

pub fn transform_doc(program: &Program, t: &AffineTransform, algorithm: Option<&str>) -> TransformDoc {
    let id = |s: usize| program.statements[s].id.clone();
    TransformDoc {
        algorithm: algorithm.map(str::to_string),
        statements: (0..program.statements.len())
            .map(|s| StatementRows {
                id: id(s),
                rows: t.rows[s]
                    .iter()
                    .map(|r| r.iter().map(to_fraction_string).collect())
                    .collect(),
            })
            .collect(),
        levels: t
            .levels
            .iter()
            .map(|l| LevelDoc {
                kind: kind_name(l.kind).into(),
                parallel: l.parallel,
            })
            .collect(),
        bands: t
            .bands
            .iter()
            .map(|b| BandDoc {
                start: b.start,
                end: b.end,
                permutable: b.permutable,
                parallel: b.parallel,
            })
            .collect(),
        cuts: t
            .cuts
            .iter()
            .map(|c| CutDoc {
                level: c.level,
                partition: c.partition.iter().map(|g| g.iter().map(|&s| id(s)).collect()).collect(),
            })
            .collect(),
    }
}

pub fn transform_to_json(program: &Program, t: &AffineTransform, algorithm: Option<&str>) -> String {
    let mut text = serde_json::to_string_pretty(&transform_doc(program, t, algorithm)).expect("transform serializes");
    text.push('\n');
    text
}

/// Parses a transform emitted by [`transform_to_json`] for `program`.
pub fn transform_from_json(program: &Program, text: &str) -> Result<AffineTransform> {
    let doc: TransformDoc =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("line {}", e.line()), e.to_string()))?;
    let n = program.statements.len();
    if doc.statements.len() != n {
        return Err(Error::parse("statements", format!("expected {n} statements, found {}", doc.statements.len())));
    }
    let lookup = |id: &str, at: &str| {
        program
            .statement_index(id)
            .ok_or_else(|| Error::parse(at, format!("unknown statement `{id}`")))
    };
    let mut rows = vec![Vec::new(); n];
    for (i, st) in doc.statements.iter().enumerate() {
        let at = format!("statements[{i}]");
        let s = lookup(&st.id, &at)?;
        if st.rows.len() != doc.levels.len() {
            return Err(Error::parse(&at, format!("expected {} rows, found {}", doc.levels.len(), st.rows.len())));
        }
        let width = program.row_width(s);
        for (r, row) in st.rows.iter().enumerate() {
            let at = format!("{at}.rows[{r}]");
            if row.len() != width {
                return Err(Error::parse(&at, format!("expected {width} entries, found {}", row.len())));
            }
            let parsed = row
                .iter()
                .map(|v| parse_rational(v).map_err(|e| Error::parse(&at, e.to_string())))
                .collect::<Result<Vec<Rational>>>()?;
            rows[s].push(parsed);
        }
    }
    let levels = doc
        .levels
        .iter()
        .enumerate()
        .map(|(l, d)| {
            let kind = match d.kind.as_str() {
                "hyperplane" => LevelKind::Hyperplane,
                "scalar" => LevelKind::Scalar,
                other => return Err(Error::parse(format!("levels[{l}]"), format!("unknown level kind `{other}`"))),
            };
            Ok(Level {
                kind,
                parallel: d.parallel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bands = doc
        .bands
        .iter()
        .map(|b| Band {
            start: b.start,
            end: b.end,
            permutable: b.permutable,
            parallel: b.parallel,
        })
        .collect();
    let mut cuts = Vec::new();
    for (c, cut) in doc.cuts.iter().enumerate() {
        let at = format!("cuts[{c}]");
        let partition = cut
            .partition
            .iter()
            .map(|g| g.iter().map(|id| lookup(id, &at)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        cuts.push(Cut {
            level: cut.level,
            partition,
        });
    }
    Ok(AffineTransform {
        rows,
        levels,
        bands,
        cuts,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependenceDoc {
    pub src: String,
    pub dst: String,
    pub kind: String,
    /// Rows over source iterators, target iterators, parameters, constant
    /// and relation, as in the input schema.
    pub relation: Vec<Vec<serde_json::Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DdgDoc {
    pub statements: Vec<String>,
    pub dependences: Vec<DependenceDoc>,
}

pub fn ddg_doc(program: &Program, ddg: &Ddg) -> DdgDoc {
    let id = |s: usize| program.statements[s].id.clone();
    DdgDoc {
        statements: (0..program.statements.len()).map(id).collect(),
        dependences: ddg
            .deps
            .iter()
            .map(|d| DependenceDoc {
                src: id(d.src),
                dst: id(d.dst),
                kind: d.kind.name().into(),
                relation: d
                    .relation
                    .constraints
                    .iter()
                    .map(|c| {
                        let mut row: Vec<serde_json::Value> = c.coeffs.iter().map(|&v| v.into()).collect();
                        row.push(c.constant.into());
                        row.push(
                            match c.kind {
                                ConstraintKind::Inequality => ">=",
                                ConstraintKind::Equality => "==",
                            }
                            .into(),
                        );
                        row
                    })
                    .collect(),
                satisfied_at: d.satisfied_at,
            })
            .collect(),
    }
}

pub fn ddg_to_json(program: &Program, ddg: &Ddg) -> String {
    let mut text = serde_json::to_string_pretty(&ddg_doc(program, ddg)).expect("ddg serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::frontend::dependence_graph;
    use crate::pipeline::{run, Algorithm};

    #[test]
    fn transform_round_trips() {
        let p = corpus::bundled("interchange_fusion").unwrap();
        let r = run(&p, &dependence_graph(&p), Algorithm::Dfp).unwrap();
        let text = transform_to_json(&p, &r.transform, Some("dfp"));
        assert_eq!(transform_from_json(&p, &text).unwrap(), r.transform);
    }

    #[test]
    fn rejects_wrong_row_width() {
        let p = corpus::bundled("stencil1d").unwrap();
        let text = r#"{"statements": [{"id": "S", "rows": [["1/1"]]}],
            "levels": [{"kind": "hyperplane", "parallel": false}], "bands": [], "cuts": []}"#;
        assert!(matches!(transform_from_json(&p, text), Err(Error::Parse { .. })));
    }
}
