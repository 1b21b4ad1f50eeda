//! JSON forms of the library types. All scalars travel as strings to keep
//! the arithmetic exact; outputs are deterministic byte for byte.

use serde::{Deserialize, Serialize};

use crate::algebra::{ClassPairSystem, ReducedAlgebra};
use crate::belitskii::{BoxKind, StructuredCanonicalMatrix};
use crate::decompose::Decomposition;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::linalg::{Matrix, StepPartition};
use crate::problems::{ProblemKind, ProblemSpec, QuiverLayout};
use crate::weyr::WeyrStructure;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub field: String,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<String>>,
}

impl MatrixJson {
    pub fn of(m: &Matrix) -> MatrixJson {
        MatrixJson {
            field: m.field().to_string(),
            rows: m.rows(),
            cols: m.cols(),
            entries: m.entries_as_strings(),
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix> {
        let field: FieldSpec = self.field.parse()?;
        if self.entries.len() != self.rows
            || self.entries.iter().any(|r| r.len() != self.cols)
        {
            return Err(Error::Parse("entry grid does not match rows x cols".into()));
        }
        let mut out = Matrix::zero(field, self.rows, self.cols);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                out[(i, j)] = field.parse_element(s)?;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemJson {
    #[serde(rename = "I")]
    pub class_i: usize,
    #[serde(rename = "J")]
    pub class_j: usize,
    pub vars: Vec<(usize, usize)>,
    pub rows: Vec<Vec<String>>,
}

impl SystemJson {
    pub fn of(sys: &ClassPairSystem) -> SystemJson {
        SystemJson {
            class_i: sys.class_pair.0,
            class_j: sys.class_pair.1,
            vars: sys.vars.clone(),
            rows: sys
                .rows
                .iter()
                .map(|r| r.iter().map(FieldElement::to_string).collect())
                .collect(),
        }
    }

    pub fn to_system(&self, field: FieldSpec) -> Result<ClassPairSystem> {
        let mut rows = Vec::new();
        for row in &self.rows {
            if row.len() != self.vars.len() {
                return Err(Error::Parse("system row width differs from variables".into()));
            }
            rows.push(
                row.iter()
                    .map(|s| field.parse_element(s))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(ClassPairSystem {
            class_pair: (self.class_i, self.class_j),
            vars: self.vars.clone(),
            rows,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub sizes: Vec<usize>,
    pub classes: Vec<usize>,
    pub systems: Vec<SystemJson>,
}

impl AlgebraJson {
    pub fn of(alg: &ReducedAlgebra) -> AlgebraJson {
        AlgebraJson {
            sizes: alg.partition.sizes().to_vec(),
            classes: alg.partition.classes().to_vec(),
            systems: alg
                .systems
                .values()
                .filter(|s| !s.rows.is_empty())
                .map(SystemJson::of)
                .collect(),
        }
    }

    pub fn to_algebra(&self, field: FieldSpec) -> Result<ReducedAlgebra> {
        let partition = StepPartition::new(self.sizes.clone(), self.classes.clone())?;
        let systems = self
            .systems
            .iter()
            .map(|s| s.to_system(field))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedAlgebra::new(field, partition, systems))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuiverLayoutJson {
    pub vertices: usize,
    pub arrows: Vec<(usize, usize)>,
    pub strip_vertex: Vec<usize>,
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub kind: String,
    pub field: String,
    pub gamma: AlgebraJson,
    pub mspace: Vec<SystemJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quiver: Option<QuiverLayoutJson>,
}

impl ProblemJson {
    pub fn of(ps: &ProblemSpec) -> ProblemJson {
        ProblemJson {
            kind: ps.kind.as_str().to_string(),
            field: ps.field.to_string(),
            gamma: AlgebraJson::of(&ps.gamma),
            mspace: ps.mspace.values().map(SystemJson::of).collect(),
            quiver: ps.quiver.as_ref().map(|q| QuiverLayoutJson {
                vertices: q.vertices,
                arrows: q.arrows.clone(),
                strip_vertex: q.strip_vertex.clone(),
                cells: q.cells.clone(),
            }),
        }
    }

    pub fn to_problem(&self) -> Result<ProblemSpec> {
        let field: FieldSpec = self.field.parse()?;
        let kind = match self.kind.as_str() {
            "triple" => ProblemKind::Triple,
            "pair" => ProblemKind::Pair,
            "quiver" => ProblemKind::Quiver,
            "poset" => ProblemKind::Poset,
            "simsim" => ProblemKind::SimSim,
            "upper_triangular" => ProblemKind::UpperTriangular,
            "separated" => ProblemKind::Separated,
            "module" => ProblemKind::Module,
            other => return Err(Error::Parse(format!("unknown problem kind {other:?}"))),
        };
        let gamma = self.gamma.to_algebra(field)?;
        let mspace = self
            .mspace
            .iter()
            .map(|s| s.to_system(field))
            .collect::<Result<Vec<_>>>()?;
        let quiver = self.quiver.as_ref().map(|q| QuiverLayout {
            vertices: q.vertices,
            arrows: q.arrows.clone(),
            strip_vertex: q.strip_vertex.clone(),
            cells: q.cells.clone(),
        });
        ProblemSpec::new(field, kind, gamma, mspace, quiver)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionJson {
    pub sizes: Vec<usize>,
    pub classes: Vec<usize>,
}

impl PartitionJson {
    pub fn of(p: &StepPartition) -> PartitionJson {
        PartitionJson { sizes: p.sizes().to_vec(), classes: p.classes().to_vec() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeyrStructureJson {
    pub eigenvalues: Vec<String>,
    pub characteristics: Vec<Vec<usize>>,
    pub standard_partition: PartitionJson,
}

impl WeyrStructureJson {
    pub fn of(ws: &WeyrStructure) -> WeyrStructureJson {
        WeyrStructureJson {
            eigenvalues: ws.eigenvalues.iter().map(FieldElement::to_string).collect(),
            characteristics: ws.characteristics.clone(),
            standard_partition: PartitionJson::of(&ws.standard_partition()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxJson {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyr: Option<WeyrStructureJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalJson {
    pub matrix: MatrixJson,
    pub initial_partition: PartitionJson,
    pub final_partition: PartitionJson,
    pub boxes: Vec<BoxJson>,
    pub stabilizer: AlgebraJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceJson {
    pub box_index: usize,
    pub case: String,
    pub partition_after: PartitionJson,
    pub algebra_after: AlgebraJson,
}

impl CanonicalJson {
    pub fn of(scm: &StructuredCanonicalMatrix, witness: bool, trace: bool) -> CanonicalJson {
        CanonicalJson {
            matrix: MatrixJson::of(&scm.matrix),
            initial_partition: PartitionJson::of(&scm.initial_partition),
            final_partition: PartitionJson::of(&scm.final_partition),
            boxes: scm
                .boxes
                .iter()
                .map(|b| BoxJson {
                    rows: b.rows,
                    cols: b.cols,
                    kind: b.kind.label().to_string(),
                    rank: match &b.kind {
                        BoxKind::ZeroIdentity { rank } => Some(*rank),
                        _ => None,
                    },
                    weyr: match &b.kind {
                        BoxKind::Weyr(ws) => Some(WeyrStructureJson::of(ws)),
                        _ => None,
                    },
                })
                .collect(),
            stabilizer: AlgebraJson::of(&scm.stabilizer),
            witness: witness.then(|| MatrixJson::of(&scm.witness)),
            trace: trace.then(|| {
                scm.trace
                    .iter()
                    .map(|t| TraceJson {
                        box_index: t.box_index,
                        case: scm.boxes[t.box_index].kind.label().to_string(),
                        partition_after: PartitionJson::of(&t.algebra_after.partition),
                        algebra_after: AlgebraJson::of(&t.algebra_after),
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeyrOutputJson {
    pub matrix: MatrixJson,
    pub transform: MatrixJson,
    pub eigenvalues: Vec<String>,
    pub characteristics: Vec<Vec<usize>>,
    pub standard_partition: PartitionJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummandJson {
    pub sizes: Vec<usize>,
    pub matrix: MatrixJson,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub summands: Vec<SummandJson>,
    pub permutation: MatrixJson,
}

impl DecompositionJson {
    pub fn of(d: &Decomposition) -> DecompositionJson {
        DecompositionJson {
            summands: d
                .summands
                .iter()
                .map(|s| SummandJson {
                    sizes: s.block.sizes.clone(),
                    matrix: MatrixJson::of(&s.block.matrix),
                    multiplicity: s.multiplicity,
                })
                .collect(),
            permutation: MatrixJson::of(&d.permutation),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorJson {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ErrorJson {
    pub fn of(e: &Error) -> ErrorJson {
        ErrorJson {
            error: ErrorBody { code: e.code().to_string(), message: e.to_string() },
        }
    }
}

/// Rewrites a problem over another field; coefficients must survive the
/// move (a rational becomes p * q^-1 mod the new characteristic).
pub fn convert_problem_field(ps: &ProblemSpec, field: FieldSpec) -> Result<ProblemSpec> {
    if ps.field == field {
        return Ok(ps.clone());
    }
    let mut json = ProblemJson::of(ps);
    json.field = field.to_string();
    for sys in json.gamma.systems.iter_mut().chain(json.mspace.iter_mut()) {
        for row in &mut sys.rows {
            for s in row.iter_mut() {
                *s = convert_scalar(s, field)?;
            }
        }
    }
    json.to_problem()
}

fn convert_scalar(s: &str, field: FieldSpec) -> Result<String> {
    match field {
        FieldSpec::Rationals => Ok(s.to_string()),
        FieldSpec::PrimeField(p) => {
            let (num, den) = match s.split_once('/') {
                Some((n, d)) => (n, d),
                None => (s, "1"),
            };
            let parse_int = |t: &str| -> Result<i128> {
                t.trim()
                    .parse::<i128>()
                    .map_err(|_| Error::Parse(format!("coefficient {s:?} does not fit the field")))
            };
            let n = parse_int(num)?;
            let d = parse_int(den)?;
            let pm = p as i128;
            if d.rem_euclid(pm) == 0 {
                return Err(Error::Parse(format!(
                    "coefficient {s:?} has denominator divisible by {p}"
                )));
            }
            let nf = field.from_i64(n.rem_euclid(pm) as i64);
            let df = field.from_i64(d.rem_euclid(pm) as i64);
            Ok(nf.div(&df)?.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{kronecker_problem, simsim_problem};

    const Q: FieldSpec = FieldSpec::Rationals;

    #[test]
    fn matrix_round_trip() {
        let mut m = Matrix::from_i64(Q, &[&[1, -2], &[0, 4]]);
        m[(0, 1)] = Q.parse_element("-7/3").unwrap();
        let json = serde_json::to_string(&MatrixJson::of(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn problem_round_trip() {
        for ps in [simsim_problem(Q).unwrap(), kronecker_problem(Q).unwrap()] {
            let json = serde_json::to_string(&ProblemJson::of(&ps)).unwrap();
            let back: ProblemJson = serde_json::from_str(&json).unwrap();
            let ps2 = back.to_problem().unwrap();
            assert_eq!(ps2.gamma, ps.gamma);
            assert_eq!(ps2.mspace, ps.mspace);
            assert_eq!(ps2.quiver, ps.quiver);
        }
    }

    #[test]
    fn canonical_output_is_deterministic() {
        let ps = simsim_problem(Q).unwrap();
        let m = crate::problems::simsim_pack(
            &Matrix::from_i64(Q, &[&[1]]),
            &Matrix::from_i64(Q, &[&[2]]),
        )
        .unwrap();
        let scm = crate::belitskii::canonicalize_problem(&ps, &[1, 1], &m).unwrap();
        let a = serde_json::to_string(&CanonicalJson::of(&scm, true, true)).unwrap();
        let b = serde_json::to_string(&CanonicalJson::of(&scm, true, true)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn field_conversion() {
        let ps = simsim_problem(Q).unwrap();
        let f2 = FieldSpec::prime(2).unwrap();
        let converted = convert_problem_field(&ps, f2).unwrap();
        assert_eq!(converted.field, f2);
        assert_eq!(converted.gamma.dimension(), 1);
    }
}
