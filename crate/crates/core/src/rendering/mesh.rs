use std::path::Path;

use nalgebra::Vector3;

use crate::error::MeshError;

/// Triangulated mesh in the link-local frame with one flat color.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Flat RGB in [0,1]; visuals override this from the URDF material.
    pub color: [f64; 3],
    /// Zero-area triangles dropped during load.
    pub dropped: usize,
}

impl TriangleMesh {
    /// Remove zero-area triangles and record how many were dropped.
    fn cleanup(&mut self) {
        let verts = &self.vertices;
        let before = self.triangles.len();
        self.triangles.retain(|t| {
            let a = verts[t[1]] - verts[t[0]];
            let b = verts[t[2]] - verts[t[0]];
            a.cross(&b).norm() > 0.0
        });
        self.dropped += before - self.triangles.len();
    }
}

/// Load an OBJ or STL mesh; format chosen by file extension. Polygon faces
/// are fan-triangulated; degenerate triangles are dropped (count recorded
/// on the mesh).
pub fn load_mesh(path: &Path) -> Result<TriangleMesh, MeshError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let mut mesh = match ext.as_str() {
        "obj" => {
            let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            parse_obj(&text).map_err(|detail| MeshError::Malformed {
                path: path.to_path_buf(),
                detail,
            })?
        }
        "stl" => {
            let bytes = std::fs::read(path).map_err(|e| MeshError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            parse_stl(&bytes).map_err(|detail| MeshError::Malformed {
                path: path.to_path_buf(),
                detail,
            })?
        }
        other => return Err(MeshError::UnsupportedFormat(other.to_string())),
    };
    mesh.cleanup();
    Ok(mesh)
}

fn parse_obj(text: &str) -> Result<TriangleMesh, String> {
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = |name: &str| -> Result<f64, String> {
                    parts
                        .next()
                        .ok_or_else(|| format!("line {}: missing {name}", lineno + 1))?
                        .parse()
                        .map_err(|e| format!("line {}: {e}", lineno + 1))
                };
                vertices.push(Vector3::new(coord("x")?, coord("y")?, coord("z")?));
            }
            Some("f") => {
                let mut indices = Vec::new();
                for spec in parts {
                    // "v", "v/vt", "v//vn", "v/vt/vn"; negative = from end
                    let first = spec.split('/').next().unwrap_or("");
                    let idx: i64 = first
                        .parse()
                        .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                    let resolved = if idx > 0 {
                        idx as usize - 1
                    } else if idx < 0 {
                        let n = vertices.len() as i64 + idx;
                        if n < 0 {
                            return Err(format!("line {}: index {idx} out of range", lineno + 1));
                        }
                        n as usize
                    } else {
                        return Err(format!("line {}: zero face index", lineno + 1));
                    };
                    if resolved >= vertices.len() {
                        return Err(format!("line {}: index {idx} out of range", lineno + 1));
                    }
                    indices.push(resolved);
                }
                if indices.len() < 3 {
                    return Err(format!("line {}: face needs 3+ vertices", lineno + 1));
                }
                for k in 1..indices.len() - 1 {
                    triangles.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            _ => {} // comments, normals, texcoords, groups
        }
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        color: [0.6, 0.6, 0.6],
        dropped: 0,
    })
}

fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, String> {
    let is_ascii = bytes.starts_with(b"solid")
        && std::str::from_utf8(bytes)
            .map(|s| s.contains("facet"))
            .unwrap_or(false);
    let raw_triangles = if is_ascii {
        parse_stl_ascii(std::str::from_utf8(bytes).map_err(|e| e.to_string())?)?
    } else {
        parse_stl_binary(bytes)?
    };
    // weld exactly-equal vertices so shared edges stay shared
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut lookup: std::collections::HashMap<[u64; 3], usize> = std::collections::HashMap::new();
    let mut triangles = Vec::new();
    for tri in raw_triangles {
        let mut idx = [0usize; 3];
        for (slot, v) in idx.iter_mut().zip(tri) {
            let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
            *slot = *lookup.entry(key).or_insert_with(|| {
                vertices.push(v);
                vertices.len() - 1
            });
        }
        triangles.push(idx);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        color: [0.6, 0.6, 0.6],
        dropped: 0,
    })
}

fn parse_stl_ascii(text: &str) -> Result<Vec<[Vector3<f64>; 3]>, String> {
    let mut triangles = Vec::new();
    let mut current: Vec<Vector3<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        if parts.next() == Some("vertex") {
            let mut coord = || -> Result<f64, String> {
                parts
                    .next()
                    .ok_or_else(|| format!("line {}: short vertex", lineno + 1))?
                    .parse()
                    .map_err(|e| format!("line {}: {e}", lineno + 1))
            };
            current.push(Vector3::new(coord()?, coord()?, coord()?));
            if current.len() == 3 {
                triangles.push([current[0], current[1], current[2]]);
                current.clear();
            }
        }
    }
    if !current.is_empty() {
        return Err("dangling vertices at end of file".into());
    }
    Ok(triangles)
}

fn parse_stl_binary(bytes: &[u8]) -> Result<Vec<[Vector3<f64>; 3]>, String> {
    if bytes.len() < 84 {
        return Err("binary STL shorter than header".into());
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(format!(
            "binary STL truncated: {} bytes, need {expected}",
            bytes.len()
        ));
    }
    let read_f32 = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
    let mut triangles = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + t * 50 + 12; // skip normal
        let mut tri = [Vector3::zeros(); 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            let off = base + v * 12;
            *slot = Vector3::new(read_f32(off), read_f32(off + 4), read_f32(off + 8));
        }
        triangles.push(tri);
    }
    Ok(triangles)
}

/// Binary STL bytes for a triangle soup; used by test fixtures.
pub fn write_binary_stl(triangles: &[[Vector3<f64>; 3]]) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(triangles.len() as u32).to_le_bytes());
    for tri in triangles {
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        for v in [n, tri[0], tri[1], tri[2]] {
            for c in 0..3 {
                out.extend_from_slice(&(v[c] as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]); // attribute byte count
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::cuboid_obj;

    fn write_temp(name: &str, bytes: &[u8]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::write(&path, bytes).unwrap();
        (dir, path)
    }

    #[test]
    fn unit_cube_obj_loads_as_8_vertices_12_triangles() {
        let (_d, path) = write_temp("cube.obj", cuboid_obj(1.0, 1.0, 1.0).as_bytes());
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.triangles.len(), 12);
        assert_eq!(mesh.dropped, 0);
    }

    /// Canonical form: set of triangles, each a sorted set of vertex
    /// positions, the whole set sorted — invariant to vertex order.
    fn canonical(mesh: &TriangleMesh) -> Vec<[[i64; 3]; 3]> {
        let q = |v: &Vector3<f64>| {
            [
                (v.x * 1e6).round() as i64,
                (v.y * 1e6).round() as i64,
                (v.z * 1e6).round() as i64,
            ]
        };
        let mut tris: Vec<[[i64; 3]; 3]> = mesh
            .triangles
            .iter()
            .map(|t| {
                let mut corners = [
                    q(&mesh.vertices[t[0]]),
                    q(&mesh.vertices[t[1]]),
                    q(&mesh.vertices[t[2]]),
                ];
                corners.sort();
                corners
            })
            .collect();
        tris.sort();
        tris
    }

    #[test]
    fn stl_cube_matches_obj_cube_up_to_ordering() {
        let (_d1, obj_path) = write_temp("cube.obj", cuboid_obj(2.0, 2.0, 2.0).as_bytes());
        let obj = load_mesh(&obj_path).unwrap();
        let tris: Vec<[Vector3<f64>; 3]> = obj
            .triangles
            .iter()
            .map(|t| [obj.vertices[t[0]], obj.vertices[t[1]], obj.vertices[t[2]]])
            .collect();
        let (_d2, stl_path) = write_temp("cube.stl", &write_binary_stl(&tris));
        let stl = load_mesh(&stl_path).unwrap();
        assert_eq!(stl.triangles.len(), 12);
        assert_eq!(canonical(&obj), canonical(&stl));
    }

    #[test]
    fn ascii_stl_parses() {
        let text = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";
        let (_d, path) = write_temp("tri.stl", text.as_bytes());
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangles.len(), 1);
        assert_eq!(mesh.vertices.len(), 3);
    }

    #[test]
    fn zero_area_triangle_dropped_with_count() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n";
        let (_d, path) = write_temp("degen.obj", text.as_bytes());
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangles.len(), 1);
        assert_eq!(mesh.dropped, 1);
    }

    #[test]
    fn unsupported_extension_rejected() {
        let (_d, path) = write_temp("mesh.ply", b"ply");
        assert!(matches!(
            load_mesh(&path),
            Err(MeshError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn out_of_range_face_index_rejected() {
        let (_d, path) = write_temp("bad.obj", b"v 0 0 0\nf 1 2 3\n");
        assert!(matches!(load_mesh(&path), Err(MeshError::Malformed { .. })));
    }

    #[test]
    fn negative_obj_indices_resolve_from_end() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let (_d, path) = write_temp("neg.obj", text.as_bytes());
        let mesh = load_mesh(&path).unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2]]);
    }
}
