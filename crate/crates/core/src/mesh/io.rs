use std::fmt::Write as _;
use std::path::Path;

use super::{Polyline, TriMesh2D};
use crate::linalg::Vec2;
use crate::{Error, Result, Scalar};

/// OFF text with z = 0 for every vertex.
pub fn mesh_to_off<T: Scalar>(mesh: &TriMesh2D<T>) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "OFF\n{} {} 0",
        mesh.vertex_count(),
        mesh.triangle_count()
    )
    .unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{} {} 0", v.x, v.y).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    s
}

pub fn mesh_from_off<T: Scalar>(text: &str) -> Result<TriMesh2D<T>> {
    let bad = |msg: &str| Error::invalid(format!("OFF: {msg}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("OFF") {
        return Err(bad("missing OFF header"));
    }
    let mut num = |what: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| bad(&format!("truncated before {what}")))?
            .parse::<f64>()
            .map_err(|_| bad(&format!("bad number in {what}")))
    };
    let nv = num("vertex count")? as usize;
    let nf = num("face count")? as usize;
    num("edge count")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (x, y) = (num("vertex")?, num("vertex")?);
        num("vertex")?;
        vertices.push(Vec2::new(T::lit(x), T::lit(y)));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        if num("face")? as usize != 3 {
            return Err(bad("only triangular faces are supported"));
        }
        triangles.push([
            num("face")? as usize,
            num("face")? as usize,
            num("face")? as usize,
        ]);
    }
    TriMesh2D::new(vertices, triangles)
}

pub fn save_off<T: Scalar>(mesh: &TriMesh2D<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_off(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_off<T: Scalar>(path: impl AsRef<Path>) -> Result<TriMesh2D<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_off(&text)
}

/// `x_mm,y_mm` CSV, one point per row.
pub fn polyline_to_csv<T: Scalar>(line: &Polyline<T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["x_mm", "y_mm"])?;
    for p in &line.points {
        w.write_record([p.x.to_string(), p.y.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn polyline_from_csv<T: Scalar>(text: &str, closed: bool) -> Result<Polyline<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut points = vec![];
    for rec in r.deserialize::<(f64, f64)>() {
        let (x, y) = rec?;
        points.push(Vec2::new(T::lit(x), T::lit(y)));
    }
    Ok(Polyline { points, closed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_roundtrip() {
        let m = TriMesh2D::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.5, 0.0),
                Vec2::new(0.25, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let back: TriMesh2D<f64> = mesh_from_off(&mesh_to_off(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn csv_roundtrip() {
        let l = Polyline::closed(vec![Vec2::new(0.1, 2.0), Vec2::new(-3.0, 1e-7)]);
        let text = polyline_to_csv(&l).unwrap();
        assert!(text.starts_with("x_mm,y_mm\n"));
        assert_eq!(polyline_from_csv::<f64>(&text, true).unwrap(), l);
    }
}
