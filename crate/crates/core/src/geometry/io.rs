//! Text format for curvilinear polygons, one arc per record:
//!
//! ```text
//! # comment
//! segment x0 y0 x1 y1
//! circarc cx cy r theta0 theta1
//! spline
//! x y
//! ...
//! end
//! ```
//!
//! Numbers are decimal literals or multiples of `pi` such as `pi/2`,
//! `-3*pi/4` or `2pi`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::arc::{ArcSource, BoundaryArc};
use crate::geometry::point::Point;
use crate::geometry::polygon::{build_polygon, CurvilinearPolygon};

/// A decimal literal or a multiple of `pi`, as accepted in polygon files.
pub fn parse_real(tok: &str) -> Result<f64> {
    parse_number(tok.trim(), 0)
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let err = || Error::Parse { line, msg: format!("bad number '{tok}'") };
    if let Ok(v) = tok.parse::<f64>() {
        return Ok(v);
    }
    let t = tok.to_ascii_lowercase();
    let Some(pos) = t.find("pi") else { return Err(err()) };
    let (head, tail) = (&t[..pos], &t[pos + 2..]);
    let coef = match head.trim_end_matches('*') {
        "" => 1.0,
        "-" => -1.0,
        "+" => 1.0,
        h => h.parse::<f64>().map_err(|_| err())?,
    };
    let div = match tail {
        "" => 1.0,
        d => d.strip_prefix('/').and_then(|d| d.parse::<f64>().ok()).ok_or_else(err)?,
    };
    Ok(coef * std::f64::consts::PI / div)
}

fn numbers(toks: &[&str], want: usize, line: usize, what: &str) -> Result<Vec<f64>> {
    if toks.len() != want {
        return Err(Error::Parse { line, msg: format!("{what} expects {want} numbers, found {}", toks.len()) });
    }
    toks.iter().map(|t| parse_number(t, line)).collect()
}

/// Parses arcs in file order.
pub fn parse_arcs(text: &str) -> Result<Vec<BoundaryArc>> {
    let mut arcs = Vec::new();
    let mut spline: Option<(usize, Vec<Point>)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if let Some((start, pts)) = spline.as_mut() {
            if toks[0] == "end" {
                let arc = BoundaryArc::spline(pts).map_err(|e| Error::Parse { line: *start, msg: e.to_string() })?;
                arcs.push(arc);
                spline = None;
            } else {
                let v = numbers(&toks, 2, line, "spline sample")?;
                pts.push(Point::new(v[0], v[1]));
            }
            continue;
        }
        let wrap = |r: Result<BoundaryArc>| r.map_err(|e| Error::Parse { line, msg: e.to_string() });
        match toks[0] {
            "segment" => {
                let v = numbers(&toks[1..], 4, line, "segment")?;
                arcs.push(wrap(BoundaryArc::segment(Point::new(v[0], v[1]), Point::new(v[2], v[3])))?);
            }
            "circarc" => {
                let v = numbers(&toks[1..], 5, line, "circarc")?;
                arcs.push(wrap(BoundaryArc::circular(Point::new(v[0], v[1]), v[2], v[3], v[4]))?);
            }
            "spline" => {
                if toks.len() != 1 {
                    return Err(Error::Parse { line, msg: "samples of a spline go on the following lines".into() });
                }
                spline = Some((line, Vec::new()));
            }
            other => return Err(Error::Parse { line, msg: format!("unknown record '{other}'") }),
        }
    }
    if let Some((start, _)) = spline {
        return Err(Error::Parse { line: start, msg: "spline without 'end'".into() });
    }
    Ok(arcs)
}

pub fn parse_polygon(text: &str) -> Result<CurvilinearPolygon> {
    build_polygon(parse_arcs(text)?)
}

pub fn load_polygon(path: impl AsRef<Path>) -> Result<CurvilinearPolygon> {
    parse_polygon(&std::fs::read_to_string(path)?)
}

/// Writes the polygon's arcs (in their stored counterclockwise order).
pub fn format_polygon(poly: &CurvilinearPolygon) -> String {
    let mut out = String::new();
    for arc in poly.arcs() {
        match arc.source() {
            ArcSource::Segment { a, b } => {
                writeln!(out, "segment {:?} {:?} {:?} {:?}", a.x, a.y, b.x, b.y).unwrap();
            }
            ArcSource::Circle { center, radius, theta0, theta1 } => {
                writeln!(out, "circarc {:?} {:?} {:?} {:?} {:?}", center.x, center.y, radius, theta0, theta1).unwrap();
            }
            ArcSource::Spline { samples } => {
                out.push_str("spline\n");
                for p in samples {
                    writeln!(out, "{:?} {:?}", p.x, p.y).unwrap();
                }
                out.push_str("end\n");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_number("pi/2", 1).unwrap(), PI / 2.0);
        assert_eq!(parse_number("-3*pi/4", 1).unwrap(), -3.0 * PI / 4.0);
        assert_eq!(parse_number("2pi", 1).unwrap(), 2.0 * PI);
        assert!(parse_number("pie", 1).is_err());
    }

    #[test]
    fn parses_mixed_boundary() {
        let text = "# quarter disk\nsegment 0 0 1 0\ncircarc 0 0 1 0 pi/2  # outer\nsegment 0 1 0 0\n";
        let poly = parse_polygon(text).unwrap();
        assert_eq!(poly.vertices().len(), 3);
        assert!((poly.perimeter() - (2.0 + PI / 2.0)).abs() < 1e-14);
        let again = parse_polygon(&format_polygon(&poly)).unwrap();
        assert_eq!(again.vertices(), poly.vertices());
    }

    #[test]
    fn reports_line_numbers() {
        match parse_arcs("segment 0 0 1 0\nsegment 1 0 x 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_arcs("spline\n0 0\n1 0\n").is_err());
        assert!(parse_arcs("hexagon 1\n").is_err());
    }
}
