//! Tab-separated point and graph tables.
//!
//! Every table opens with a `#` line carrying the metadata needed to rebuild
//! it, then a column header. Floats are written in their shortest
//! round-tripping form, with `inf` for an unbounded length, so that
//! write, read, write reproduces the bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geom::{BoxRegion, Mark, MarkedConfiguration, MarkedPoint, Position};
use crate::knn::KnnIndex;
use crate::lilypond::{self, LilypondSolution};
use crate::model::Model;

const AXES: [&str; 3] = ["x", "y", "z"];

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn num(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| parse_err(line, format!("bad number {s:?}")))
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// `key=value` pairs of a metadata line after its leading tag.
fn meta<'a>(line: &'a str, tag: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let rest = line
        .strip_prefix("# ")
        .and_then(|r| r.strip_prefix(tag))
        .ok_or_else(|| parse_err(1, format!("expected a '# {tag}' metadata line")))?;
    rest.split_whitespace()
        .map(|kv| kv.split_once('=').ok_or_else(|| parse_err(1, format!("bad metadata field {kv:?}"))))
        .collect()
}

fn field<'a>(m: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    m.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| parse_err(1, format!("missing {key}")))
}

pub fn write_points(phi: &MarkedConfiguration) -> String {
    let d = phi.dim();
    let w = phi.window();
    let mut out = format!(
        "# points dim={d} center={} side={} tolerance={}\n",
        join(w.center.coords()),
        w.side,
        phi.tolerance()
    );
    out.push_str(&AXES[..d].join("\t"));
    out.push_str("\tmark\tid\n");
    for p in phi.points() {
        for c in p.position.coords() {
            let _ = write!(out, "{c}\t");
        }
        let _ = writeln!(out, "{}\t{}", p.mark.label(), p.id);
    }
    out
}

pub fn read_points(text: &str) -> Result<MarkedConfiguration> {
    let mut lines = text.lines();
    let m = meta(lines.next().unwrap_or(""), "points")?;
    let d: usize = field(&m, "dim")?.parse().map_err(|_| parse_err(1, "bad dim"))?;
    if !(1..=3).contains(&d) {
        return Err(parse_err(1, format!("dimension {d} unsupported")));
    }
    let center: Vec<f64> = field(&m, "center")?.split(',').map(|c| num(1, c)).collect::<Result<_>>()?;
    let window = BoxRegion::new(Position::new(&center)?, num(1, field(&m, "side")?)?)?;
    let tolerance = num(1, field(&m, "tolerance")?)?;
    let want = format!("{}\tmark\tid", AXES[..d].join("\t"));
    if lines.next() != Some(want.as_str()) {
        return Err(parse_err(2, format!("expected header {want:?}")));
    }
    let mut pts = Vec::new();
    for (k, line) in lines.enumerate() {
        let ln = k + 3;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != d + 2 {
            return Err(parse_err(ln, format!("expected {} columns, got {}", d + 2, cols.len())));
        }
        let c: Vec<f64> = cols[..d].iter().map(|s| num(ln, s)).collect::<Result<_>>()?;
        let mark = Mark::parse(cols[d]).map_err(|e| parse_err(ln, e))?;
        let id: u64 = cols[d + 1].parse().map_err(|_| parse_err(ln, format!("bad id {:?}", cols[d + 1])))?;
        pts.push(MarkedPoint::new(id, Position::new(&c)?, mark));
    }
    MarkedConfiguration::with_tolerance(pts, window, tolerance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphRow {
    pub id: u64,
    pub next: Option<u64>,
    /// Segment length for the lilypond model, distance to the descendant for
    /// the nearest-neighbour walk.
    pub length: f64,
    pub geo: Option<Vec<f64>>,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphTable {
    pub model: String,
    pub dim: usize,
    pub rows: Vec<GraphRow>,
}

impl GraphTable {
    pub fn censored_count(&self) -> usize {
        self.rows.iter().filter(|r| r.censored).count()
    }

    /// Rebuilds the lilypond solution for `phi` (rows matched by id).
    pub fn lily_solution(&self, phi: &MarkedConfiguration) -> Result<LilypondSolution> {
        if self.rows.len() != phi.len() {
            return Err(Error::Invalid(format!("graph has {} rows for {} points", self.rows.len(), phi.len())));
        }
        let mut sol = LilypondSolution {
            f: vec![f64::INFINITY; phi.len()],
            stopper: vec![None; phi.len()],
            tip: vec![None; phi.len()],
        };
        for r in &self.rows {
            let i = phi.index_of(r.id).ok_or_else(|| Error::Invalid(format!("graph row for unknown id {}", r.id)))?;
            sol.f[i] = r.length;
            sol.stopper[i] = match r.next {
                Some(y) => Some(phi.index_of(y).ok_or_else(|| Error::Invalid(format!("unknown stopper id {y}")))?),
                None => None,
            };
            sol.tip[i] = match &r.geo {
                Some(g) if g.len() == 2 => Some([g[0], g[1]]),
                Some(_) => return Err(Error::Invalid("lilypond tips are planar".into())),
                None => None,
            };
        }
        Ok(sol)
    }
}

/// Solves `phi` under `model` and tabulates the result in point order.
pub fn graph_table(phi: &MarkedConfiguration, model: &Model, exec: Execution) -> Result<GraphTable> {
    let d = phi.dim();
    let rows = match model {
        Model::Lilypond => {
            let sol = lilypond::solve(phi)?;
            lily_rows(phi, &sol)
        }
        Model::Knn(m) => {
            let idx = KnnIndex::new(phi, m);
            let desc = exec.try_map(phi.len(), |i| idx.descendant(i, m))?;
            desc.into_iter()
                .enumerate()
                .map(|(i, (j, r))| GraphRow {
                    id: phi.point(i).id,
                    next: Some(phi.point(j).id),
                    length: r,
                    geo: Some(phi.point(j).position.coords().to_vec()),
                    censored: false,
                })
                .collect()
        }
    };
    Ok(GraphTable { model: model.name().to_string(), dim: d, rows })
}

pub fn lily_rows(phi: &MarkedConfiguration, sol: &LilypondSolution) -> Vec<GraphRow> {
    (0..phi.len())
        .map(|i| GraphRow {
            id: phi.point(i).id,
            next: sol.stopper_id(phi, i),
            length: sol.f[i],
            geo: sol.tip[i].map(|t| t.to_vec()),
            censored: sol.stopper[i].is_none(),
        })
        .collect()
}

pub fn write_graph(g: &GraphTable) -> String {
    let d = g.dim;
    let mut out = format!("# graph model={} dim={d}\n", g.model);
    out.push_str("id\tnext_id\tlength\t");
    for a in &AXES[..d] {
        let _ = write!(out, "h{a}\t");
    }
    out.push_str("censored\n");
    for r in &g.rows {
        let next = r.next.map_or("-".to_string(), |n| n.to_string());
        let _ = write!(out, "{}\t{next}\t{}\t", r.id, r.length);
        for k in 0..d {
            match &r.geo {
                Some(c) => {
                    let _ = write!(out, "{}\t", c[k]);
                }
                None => out.push_str("-\t"),
            }
        }
        let _ = writeln!(out, "{}", u8::from(r.censored));
    }
    out
}

pub fn read_graph(text: &str) -> Result<GraphTable> {
    let mut lines = text.lines();
    let m = meta(lines.next().unwrap_or(""), "graph")?;
    let model = field(&m, "model")?.to_string();
    let d: usize = field(&m, "dim")?.parse().map_err(|_| parse_err(1, "bad dim"))?;
    if !(1..=3).contains(&d) {
        return Err(parse_err(1, format!("dimension {d} unsupported")));
    }
    let want = format!(
        "id\tnext_id\tlength\t{}\tcensored",
        AXES[..d].iter().map(|a| format!("h{a}")).collect::<Vec<_>>().join("\t")
    );
    if lines.next() != Some(want.as_str()) {
        return Err(parse_err(2, format!("expected header {want:?}")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let ln = k + 3;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != d + 4 {
            return Err(parse_err(ln, format!("expected {} columns, got {}", d + 4, cols.len())));
        }
        let id = cols[0].parse().map_err(|_| parse_err(ln, "bad id"))?;
        let next = match cols[1] {
            "-" => None,
            s => Some(s.parse().map_err(|_| parse_err(ln, "bad next id"))?),
        };
        let length = num(ln, cols[2])?;
        let geo = if cols[3..3 + d].iter().all(|c| *c == "-") {
            None
        } else {
            Some(cols[3..3 + d].iter().map(|c| num(ln, c)).collect::<Result<Vec<_>>>()?)
        };
        let censored = match cols[3 + d] {
            "0" => false,
            "1" => true,
            s => return Err(parse_err(ln, format!("bad censored flag {s:?}"))),
        };
        if next.is_some() != geo.is_some() || censored != next.is_none() {
            return Err(parse_err(ln, "descendant, location and censored flag disagree"));
        }
        rows.push(GraphRow { id, next, length, geo, censored });
    }
    Ok(GraphTable { model, dim: d, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::KnnModel;
    use crate::ppgen::{sample_poisson, MarkLaw};

    #[test]
    fn points_round_trip_byte_for_byte() {
        let w = BoxRegion::new(Position::xy(0.5, -1.25), 12.0).unwrap();
        let phi = sample_poisson(&w, 1.0, &MarkLaw::Direction, 9).unwrap();
        let text = write_points(&phi);
        let back = read_points(&text).unwrap();
        assert_eq!(back, phi);
        assert_eq!(write_points(&back), text);
        assert_eq!(text.lines().count(), phi.len() + 2);
    }

    #[test]
    fn graphs_round_trip_with_unbounded_segments() {
        let w = BoxRegion::centered(2, 10.0).unwrap();
        let phi = sample_poisson(&w, 1.0, &MarkLaw::Direction, 4).unwrap();
        let g = graph_table(&phi, &Model::Lilypond, Execution::Sequential).unwrap();
        assert!(g.censored_count() > 0);
        let text = write_graph(&g);
        assert!(text.contains("\tinf\t"));
        let back = read_graph(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(write_graph(&back), text);
        let sol = back.lily_solution(&phi).unwrap();
        assert!(lilypond::verify_solution(&phi, &sol));

        let knn = Model::Knn(KnnModel::uniform(2).unwrap());
        let phi = sample_poisson(&w, 1.0, &knn.law(), 4).unwrap();
        let g = graph_table(&phi, &knn, Execution::Sequential).unwrap();
        assert_eq!(read_graph(&write_graph(&g)).unwrap(), g);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(matches!(read_points(""), Err(Error::Parse(_))));
        let bad = "# points dim=2 center=0,0 side=4 tolerance=1e-12\nx\ty\tmark\tid\n0.1\t0.2\t+e1\n";
        assert!(matches!(read_points(bad), Err(Error::Parse(_))));
        let outside = "# points dim=2 center=0,0 side=4 tolerance=1e-12\nx\ty\tmark\tid\n3\t0.2\t+e1\t0\n";
        assert!(matches!(read_points(outside), Err(Error::Invalid(_))));
    }
}
