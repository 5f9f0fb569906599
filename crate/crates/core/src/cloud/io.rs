//! ASCII PLY and XYZ text formats.
//!
//! Coordinates are written with 9 significant digits, so writing a cloud that
//! was itself read from one of these files reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::{CloudError, PointCloud, TriangleMesh};

fn fmt_coord(out: &mut String, v: f64) {
    write!(out, "{v:.8e}").unwrap();
}

fn fmt_point(out: &mut String, p: &Point3<f64>) {
    fmt_coord(out, p.x);
    out.push(' ');
    fmt_coord(out, p.y);
    out.push(' ');
    fmt_coord(out, p.z);
    out.push('\n');
}

pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 48);
    for p in &cloud.points {
        fmt_point(&mut out, p);
    }
    out
}

pub fn parse_xyz(text: &str) -> Result<PointCloud, CloudError> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        points.push(parse_point(line, i + 1)?);
    }
    PointCloud::new(points)
}

fn parse_point(line: &str, line_no: usize) -> Result<Point3<f64>, CloudError> {
    let mut it = line.split_whitespace().map(|t| {
        t.parse::<f64>().map_err(|e| CloudError::Parse {
            line: line_no,
            msg: format!("bad number {t:?}: {e}"),
        })
    });
    let mut next = || {
        it.next().unwrap_or_else(|| {
            Err(CloudError::Parse {
                line: line_no,
                msg: "expected three coordinates".into(),
            })
        })
    };
    Ok(Point3::new(next()?, next()?, next()?))
}

pub fn write_ply(cloud: &PointCloud) -> String {
    write_ply_mesh(&TriangleMesh {
        vertices: cloud.points.clone(),
        triangles: Vec::new(),
    })
}

pub fn write_ply_mesh(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 48 + mesh.triangles.len() * 24);
    out.push_str("ply\nformat ascii 1.0\n");
    writeln!(out, "element vertex {}", mesh.vertices.len()).unwrap();
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if !mesh.triangles.is_empty() {
        writeln!(out, "element face {}", mesh.triangles.len()).unwrap();
        out.push_str("property list uchar int vertex_indices\n");
    }
    out.push_str("end_header\n");
    for p in &mesh.vertices {
        fmt_point(&mut out, p);
    }
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_header(lines: &mut std::iter::Enumerate<std::str::Lines<'_>>) -> Result<Vec<Element>, CloudError> {
    let bad = |line: usize, msg: &str| CloudError::Parse {
        line,
        msg: msg.to_string(),
    };
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(bad(1, "missing 'ply' magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(bad(i + 1, &format!("unsupported PLY format {other:?}")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| bad(i + 1, "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] | ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| bad(i + 1, "property before element"))?
                .properties
                .push(name.to_string()),
            ["end_header"] => return Ok(elements),
            _ => return Err(bad(i + 1, &format!("unexpected header line {line:?}"))),
        }
    }
    Err(bad(0, "missing end_header"))
}

/// Reads an ASCII PLY mesh (vertex x/y/z plus optional faces; polygons are
/// fan-triangulated).
pub fn parse_ply_mesh(text: &str) -> Result<TriangleMesh, CloudError> {
    let mut lines = text.lines().enumerate();
    let elements = parse_header(&mut lines)?;
    let mut mesh = TriangleMesh::default();
    for element in &elements {
        match element.name.as_str() {
            "vertex" => {
                let col = |name: &str| {
                    element.properties.iter().position(|p| p == name).ok_or_else(|| {
                        CloudError::Parse {
                            line: 0,
                            msg: format!("vertex element lacks property {name}"),
                        }
                    })
                };
                let (cx, cy, cz) = (col("x")?, col("y")?, col("z")?);
                for _ in 0..element.count {
                    let (i, line) = lines.next().ok_or(CloudError::Parse {
                        line: 0,
                        msg: "unexpected end of vertex data".into(),
                    })?;
                    let values = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| CloudError::Parse {
                            line: i + 1,
                            msg: e.to_string(),
                        })?;
                    let get = |c: usize| {
                        values.get(c).copied().ok_or(CloudError::Parse {
                            line: i + 1,
                            msg: "too few vertex properties".into(),
                        })
                    };
                    mesh.vertices.push(Point3::new(get(cx)?, get(cy)?, get(cz)?));
                }
            }
            "face" => {
                for _ in 0..element.count {
                    let (i, line) = lines.next().ok_or(CloudError::Parse {
                        line: 0,
                        msg: "unexpected end of face data".into(),
                    })?;
                    let idx = line
                        .split_whitespace()
                        .map(|t| t.parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| CloudError::Parse {
                            line: i + 1,
                            msg: e.to_string(),
                        })?;
                    let n = *idx.first().unwrap_or(&0);
                    if n < 3 || idx.len() < n + 1 {
                        return Err(CloudError::Parse {
                            line: i + 1,
                            msg: "face needs at least three indices".into(),
                        });
                    }
                    for k in 2..n {
                        mesh.triangles.push([idx[1], idx[k], idx[k + 1]]);
                    }
                }
            }
            _ => {
                // skip unknown elements
                for _ in 0..element.count {
                    lines.next();
                }
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn parse_ply(text: &str) -> Result<PointCloud, CloudError> {
    let mesh = parse_ply_mesh(text)?;
    PointCloud::new(mesh.vertices)
}

/// PLY if the text starts with the PLY magic, XYZ otherwise.
pub fn parse_cloud(text: &str) -> Result<PointCloud, CloudError> {
    if text.trim_start().starts_with("ply") {
        parse_ply(text)
    } else {
        parse_xyz(text)
    }
}

pub fn read_cloud(path: &Path) -> Result<PointCloud, CloudError> {
    parse_cloud(&std::fs::read_to_string(path)?)
}

/// Writes PLY for a `.ply` extension, XYZ otherwise.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<(), CloudError> {
    let is_ply = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    let text = if is_ply { write_ply(cloud) } else { write_xyz(cloud) };
    std::fs::write(path, text)?;
    Ok(())
}
