//! Triangle `.node` / `.ele` / `.poly` files with 1-based indices and
//! boundary markers 1 (Robin) and 2 (Dirichlet).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{BoundaryEdge, BoundaryTag, NodeKind, TriMesh};

const ROBIN: i64 = 1;
const DIRICHLET: i64 = 2;

fn tag_marker(tag: BoundaryTag) -> i64 {
    match tag {
        BoundaryTag::Robin => ROBIN,
        BoundaryTag::Dirichlet => DIRICHLET,
    }
}

fn marker_tag(m: i64) -> Result<BoundaryTag> {
    match m {
        ROBIN => Ok(BoundaryTag::Robin),
        DIRICHLET => Ok(BoundaryTag::Dirichlet),
        other => Err(Error::UnknownBoundaryTag(other)),
    }
}

/// Contents of the `.node`, `.ele` and `.poly` files.
pub fn write_triangle(mesh: &TriMesh) -> (String, String, String) {
    let mut node = String::new();
    writeln!(node, "{} 2 0 1", mesh.num_nodes()).unwrap();
    for (i, (p, k)) in mesh.nodes().iter().zip(mesh.node_kinds()).enumerate() {
        let m = match k {
            NodeKind::Interior => 0,
            NodeKind::Robin => ROBIN,
            NodeKind::Dirichlet => DIRICHLET,
        };
        writeln!(node, "{} {:?} {:?} {}", i + 1, p.x, p.y, m).unwrap();
    }
    let mut ele = String::new();
    writeln!(ele, "{} 3 0", mesh.num_triangles()).unwrap();
    for (i, t) in mesh.triangles().iter().enumerate() {
        writeln!(ele, "{} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    let mut poly = String::new();
    writeln!(poly, "0 2 0 1").unwrap();
    writeln!(poly, "{} 1", mesh.boundary_edges().len()).unwrap();
    for (i, e) in mesh.boundary_edges().iter().enumerate() {
        writeln!(poly, "{} {} {} {}", i + 1, e.nodes[0] + 1, e.nodes[1] + 1, tag_marker(e.tag)).unwrap();
    }
    writeln!(poly, "0").unwrap();
    (node, ele, poly)
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let f: Vec<&str> = l.split_whitespace().collect();
        (!f.is_empty()).then_some((i + 1, f))
    })
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number '{s}'") })
}

fn index(line: usize, s: &str, first: usize, n: usize) -> Result<usize> {
    let i: usize = num(line, s)?;
    if i < first || i - first >= n {
        return Err(Error::InvalidMesh(format!("line {line}: index {i} references a missing node")));
    }
    Ok(i - first)
}

/// Parses Triangle files. Without a `.poly` text, boundary edges are
/// recovered from the triangle topology and tagged by node markers.
pub fn read_triangle(node: &str, ele: &str, poly: Option<&str>) -> Result<TriMesh> {
    let mut it = records(node);
    let (hl, head) = it.next().ok_or(Error::Parse { line: 1, msg: "empty .node file".into() })?;
    let n: usize = num(hl, head[0])?;
    let n_attr: usize = head.get(2).map(|s| num(hl, s)).transpose()?.unwrap_or(0);
    let has_marker = head.get(3).map(|s| num::<usize>(hl, s)).transpose()?.unwrap_or(0) == 1;
    let mut nodes = Vec::with_capacity(n);
    let mut markers = Vec::with_capacity(n);
    let mut first = 1;
    for (k, (line, f)) in it.by_ref().take(n).enumerate() {
        if f.len() < 3 + n_attr + usize::from(has_marker) {
            return Err(Error::Parse { line, msg: "too few fields in node record".into() });
        }
        let id: usize = num(line, f[0])?;
        if k == 0 {
            first = id.min(1);
        }
        if id != k + first {
            return Err(Error::Parse { line, msg: format!("node ids must be consecutive, got {id}") });
        }
        nodes.push(Point::new(num(line, f[1])?, num(line, f[2])?));
        markers.push(if has_marker { num::<i64>(line, f[3 + n_attr])? } else { 0 });
    }
    if nodes.len() != n {
        return Err(Error::Parse { line: 0, msg: format!(".node declares {n} nodes, found {}", nodes.len()) });
    }

    let mut it = records(ele);
    let (hl, head) = it.next().ok_or(Error::Parse { line: 1, msg: "empty .ele file".into() })?;
    let nt: usize = num(hl, head[0])?;
    let per: usize = head.get(1).map(|s| num(hl, s)).transpose()?.unwrap_or(3);
    if per != 3 {
        return Err(Error::Parse { line: hl, msg: format!("only 3-node triangles are supported, got {per}") });
    }
    let mut triangles = Vec::with_capacity(nt);
    for (line, f) in it.take(nt) {
        if f.len() < 4 {
            return Err(Error::Parse { line, msg: "too few fields in triangle record".into() });
        }
        let mut t = [0; 3];
        for i in 0..3 {
            t[i] = index(line, f[i + 1], first, n)?;
        }
        triangles.push(t);
    }
    if triangles.len() != nt {
        return Err(Error::Parse { line: 0, msg: format!(".ele declares {nt} triangles, found {}", triangles.len()) });
    }

    let edges = match poly {
        Some(text) => {
            let mut it = records(text);
            let (hl, head) = it.next().ok_or(Error::Parse { line: 1, msg: "empty .poly file".into() })?;
            let np: usize = num(hl, head[0])?;
            let mut it = it.skip(np);
            let (sl, shead) = it.next().ok_or(Error::Parse { line: hl, msg: "missing segment header".into() })?;
            let ns: usize = num(sl, shead[0])?;
            let seg_marker = shead.get(1).map(|s| num::<usize>(sl, s)).transpose()?.unwrap_or(0) == 1;
            let mut edges = Vec::with_capacity(ns);
            for (line, f) in it.take(ns) {
                if f.len() < 3 + usize::from(seg_marker) {
                    return Err(Error::Parse { line, msg: "too few fields in segment record".into() });
                }
                let a = index(line, f[1], first, n)?;
                let b = index(line, f[2], first, n)?;
                let tag = if seg_marker { marker_tag(num(line, f[3])?)? } else { BoundaryTag::Robin };
                edges.push(BoundaryEdge { nodes: [a, b], tag, curve: None });
            }
            edges
        }
        None => {
            for &m in &markers {
                if m != 0 {
                    marker_tag(m)?;
                }
            }
            topological_boundary(&triangles, &markers)
        }
    };
    TriMesh::from_parts(nodes, triangles, edges, Vec::new())
}

fn topological_boundary(triangles: &[[usize; 3]], markers: &[i64]) -> Vec<BoundaryEdge> {
    let mut count = std::collections::HashMap::new();
    for t in triangles {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            count.entry((a.min(b), a.max(b))).or_insert((0, a, b)).0 += 1;
        }
    }
    let mut edges: Vec<BoundaryEdge> = count
        .into_values()
        .filter(|&(c, _, _)| c == 1)
        .map(|(_, a, b)| {
            let dir = markers[a] == DIRICHLET && markers[b] == DIRICHLET;
            BoundaryEdge {
                nodes: [a, b],
                tag: if dir { BoundaryTag::Dirichlet } else { BoundaryTag::Robin },
                curve: None,
            }
        })
        .collect();
    edges.sort_by_key(|e| e.nodes);
    edges
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `base.node`, `base.ele` and `base.poly`.
pub fn export_mesh(mesh: &TriMesh, base: impl AsRef<Path>) -> Result<()> {
    let base = base.as_ref();
    let (node, ele, poly) = write_triangle(mesh);
    fs::write(with_ext(base, "node"), node)?;
    fs::write(with_ext(base, "ele"), ele)?;
    fs::write(with_ext(base, "poly"), poly)?;
    Ok(())
}

/// Reads `base.node`, `base.ele` and, when present, `base.poly`. A path
/// ending in one of these extensions is accepted as the base.
pub fn import_mesh(base: impl AsRef<Path>) -> Result<TriMesh> {
    let mut base = base.as_ref().to_path_buf();
    if matches!(base.extension().and_then(|e| e.to_str()), Some("node" | "ele" | "poly")) {
        base.set_extension("");
    }
    let node = fs::read_to_string(with_ext(&base, "node"))?;
    let ele = fs::read_to_string(with_ext(&base, "ele"))?;
    let poly_path = with_ext(&base, "poly");
    let poly = if poly_path.exists() { Some(fs::read_to_string(poly_path)?) } else { None };
    read_triangle(&node, &ele, poly.as_deref())
}
