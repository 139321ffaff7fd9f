//! Canonical Wavefront OBJ output (`v` and `f` records only).
//!
//! Coordinates are written with six decimals, all vertices precede all
//! faces, and meshes appear in creation order, so the same data always
//! serializes to the same bytes.

use std::fmt::Write as _;

use super::extrude::ExtrudedMesh;
use super::TwinError;
use crate::geom::Vec3;

pub const OBJ_HEADER: &str = "# arstage venue mesh\n";

/// Flattened OBJ content: the vertex list and zero-based triangle indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjData {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl ObjData {
    pub fn from_meshes(meshes: &[ExtrudedMesh]) -> Self {
        let mut out = ObjData::default();
        for m in meshes {
            let base = out.vertices.len();
            out.vertices.extend_from_slice(&m.vertices);
            out.faces.extend(m.faces.iter().map(|f| f.map(|i| i + base)));
        }
        out
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::with_capacity(OBJ_HEADER.len() + 40 * (self.vertices.len() + self.faces.len()));
        s.push_str(OBJ_HEADER);
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", coord(v.x), coord(v.y), coord(v.z));
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}

fn coord(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

pub fn export_obj(meshes: &[ExtrudedMesh]) -> Vec<u8> {
    ObjData::from_meshes(meshes).to_obj_string().into_bytes()
}

/// Reads `v` and triangular `f` records; comments and blank lines are skipped.
/// Face entries may carry `/vt/vn` suffixes, which are ignored.
pub fn parse_obj(text: &str) -> Result<ObjData, TwinError> {
    let mut out = ObjData::default();
    let err = |line: usize, msg: &str| TwinError::Obj { line, msg: msg.to_owned() };
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|_| err(line_no, "bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if xyz.len() < 3 {
                    return Err(err(line_no, "vertex needs three coordinates"));
                }
                out.vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|p| {
                        p.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .ok_or_else(|| err(line_no, "bad face index"))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(err(line_no, "only triangles are supported"));
                }
                out.faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            Some(_) => return Err(err(line_no, "unsupported record")),
            None => {}
        }
    }
    if let Some(bad) = out.faces.iter().flatten().find(|&&i| i >= out.vertices.len()) {
        return Err(err(0, &format!("face index {} out of range", bad + 1)));
    }
    Ok(out)
}
