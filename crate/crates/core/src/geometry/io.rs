//! OBJ and STL (ASCII or binary) loading and writing.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::mesh::{MeshWarning, TriangleMesh};
use crate::pose::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

/// Loads a mesh, guessing the format from the extension when `format` is
/// `None`. Degenerate triangles are dropped and reported.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<(TriangleMesh, Vec<MeshWarning>)> {
    let format = match format.or_else(|| MeshFormat::from_path(path)) {
        Some(f) => f,
        None => {
            return Err(Error::InvalidArgument(format!(
                "cannot infer mesh format of {}",
                path.display()
            )))
        }
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (v, t) = match format {
        MeshFormat::Obj => parse_obj(&bytes, path)?,
        MeshFormat::Stl => parse_stl(&bytes, path)?,
    };
    TriangleMesh::new(v, t)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

type Raw = (Vec<Vec3>, Vec<[u32; 3]>);

fn parse_obj(bytes: &[u8], path: &Path) -> Result<Raw> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(path, 0, "not UTF-8 text"))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ix, line) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| parse_err(path, lineno, "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("bad coordinate `{tok}`")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(4);
                for tok in it {
                    // "i", "i/t", "i//n" or "i/t/n"; only the position index matters.
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("bad face index `{tok}`")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(path, lineno, "face index 0 is invalid"));
                    };
                    if resolved < 0 || resolved > u32::MAX as i64 {
                        return Err(parse_err(path, lineno, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(parse_err(path, lineno, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

fn parse_stl(bytes: &[u8], path: &Path) -> Result<Raw> {
    if is_binary_stl(bytes) {
        parse_binary_stl(bytes, path)
    } else {
        parse_ascii_stl(bytes, path)
    }
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    // Some binary exporters start the header with "solid"; the size check wins.
    bytes.len() == 84 + 50 * n
}

/// STL stores unshared corners; vertices are welded on exact bit equality so
/// the edge topology (and the watertightness flag) is recovered.
struct Welder {
    map: HashMap<[u64; 3], u32>,
    vertices: Vec<Vec3>,
}

impl Welder {
    fn new() -> Self {
        Self {
            map: HashMap::new(),
            vertices: Vec::new(),
        }
    }

    fn add(&mut self, p: Vec3) -> u32 {
        // +0.0 and -0.0 weld together.
        let key = [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits);
        *self.map.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }
}

fn parse_binary_stl(bytes: &[u8], path: &Path) -> Result<Raw> {
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let mut w = Welder::new();
    let mut triangles = Vec::with_capacity(n);
    for i in 0..n {
        let rec = &bytes[84 + 50 * i..84 + 50 * (i + 1)];
        let mut tri = [0u32; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let off = 12 + 12 * k;
            let f = |j: usize| f32::from_le_bytes(rec[off + 4 * j..off + 4 * j + 4].try_into().unwrap()) as f64;
            let p = Vec3::new(f(0), f(1), f(2));
            if !p.iter().all(|c| c.is_finite()) {
                return Err(parse_err(path, i + 1, "non-finite vertex in facet"));
            }
            *slot = w.add(p);
        }
        triangles.push(tri);
    }
    Ok((w.vertices, triangles))
}

fn parse_ascii_stl(bytes: &[u8], path: &Path) -> Result<Raw> {
    let text = std::str::from_utf8(bytes).map_err(|_| parse_err(path, 0, "not UTF-8 text"))?;
    let mut w = Welder::new();
    let mut triangles = Vec::new();
    let mut pending: Vec<u32> = Vec::with_capacity(3);
    let mut seen_solid = false;
    for (ix, line) in text.lines().enumerate() {
        let lineno = ix + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("solid") => seen_solid = true,
            Some("vertex") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| parse_err(path, lineno, "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("bad coordinate `{tok}`")))?;
                }
                pending.push(w.add(Vec3::new(c[0], c[1], c[2])));
            }
            Some("endloop") => {
                if pending.len() != 3 {
                    return Err(parse_err(path, lineno, format!("facet has {} vertices", pending.len())));
                }
                triangles.push([pending[0], pending[1], pending[2]]);
                pending.clear();
            }
            _ => {}
        }
    }
    if !seen_solid {
        return Err(parse_err(path, 1, "missing `solid` header"));
    }
    Ok((w.vertices, triangles))
}

/// Writes a Wavefront OBJ with positions and faces only.
pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {:?} {:?} {:?}\n", v.x, v.y, v.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a binary STL (single precision, as the format requires).
pub fn write_stl(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(84 + 50 * mesh.triangles().len());
    buf.extend_from_slice(&[0u8; 80]);
    buf.extend_from_slice(&(mesh.triangles().len() as u32).to_le_bytes());
    for i in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangle(i);
        let n = (b - a).cross(&(c - a)).normalize();
        for p in [n, a, b, c] {
            for k in 0..3 {
                buf.extend_from_slice(&(p[k] as f32).to_le_bytes());
            }
        }
        buf.extend_from_slice(&[0u8; 2]);
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
