//! Plain-text surface dumps: `# key=value` header lines followed by a CSV
//! table with one row per grid node.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{make_domain, make_grid, DomainError, DomainPreset};
use crate::graphgeom::{curvature_field, p_field_graph, GeomError, GraphSurface, SurfaceSource};

pub const SURFACE_COLUMNS: [&str; 13] =
    ["s", "phi", "x1", "x2", "u", "u_x1", "u_x2", "w", "lambda1", "lambda2", "S1", "S2", "P"];

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("missing header key '{0}'")]
    MissingKey(&'static str),
    #[error("bad header value for '{key}': {msg}")]
    BadHeader { key: &'static str, msg: String },
    #[error("line {line}: {msg}")]
    BadRow { line: usize, msg: String },
    #[error("expected {expected} rows, found {got}")]
    RowCount { expected: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Header lines `# key=value`, in the given order.
pub fn header_lines(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

/// Parses leading `# key=value` lines; other comment lines are skipped.
pub fn parse_header(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.trim_start_matches('#').trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// Serializes a surface. `extra` header entries precede the geometry keys
/// needed to reload it.
pub fn write_surface(surf: &GraphSurface, extra: &[(String, String)]) -> String {
    let grid = surf.grid();
    let dom = grid.domain();
    let cf = curvature_field(surf);
    let pf = p_field_graph(surf, &cf);
    let mut head: Vec<(String, String)> = extra.to_vec();
    head.push(("domain".into(), serde_json::to_string(dom.preset()).expect("domain presets serialize")));
    let c = dom.center();
    head.push(("center".into(), format!("{},{}", num(c[0]), num(c[1]))));
    head.push(("n_r".into(), grid.n_r().to_string()));
    head.push(("n_phi".into(), grid.n_phi().to_string()));
    head.push((
        "source".into(),
        serde_json::to_value(surf.source()).expect("source serializes").as_str().unwrap_or("sampled").to_string(),
    ));
    let mut out = header_lines(&head);
    out.push_str(&SURFACE_COLUMNS.join(","));
    out.push('\n');
    let pts = grid.points();
    for i in 0..grid.len() {
        let (ring, k) = grid.ring_and_angle(i);
        let d = surf.du()[i];
        let row = [
            grid.s(ring),
            grid.phi(k),
            pts[i][0],
            pts[i][1],
            surf.u()[i],
            d[0],
            d[1],
            surf.w()[i],
            cf.lambda[i][0],
            cf.lambda[i][1],
            cf.s[i][1],
            cf.s[i][2],
            pf.p[i],
        ];
        out.push_str(&row.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn key<'a>(h: &'a BTreeMap<String, String>, k: &'static str) -> Result<&'a str, DumpError> {
    h.get(k).map(String::as_str).ok_or(DumpError::MissingKey(k))
}

fn bad(key: &'static str, msg: impl ToString) -> DumpError {
    DumpError::BadHeader { key, msg: msg.to_string() }
}

/// Rebuilds the grid from the header and the surface from the `u` column.
/// Derivatives are recomputed by finite differences, so analytic dumps come
/// back as [`SurfaceSource::Sampled`].
pub fn read_surface(text: &str) -> Result<GraphSurface, DumpError> {
    let h = parse_header(text);
    let preset: DomainPreset = serde_json::from_str(key(&h, "domain")?).map_err(|e| bad("domain", e))?;
    let center: Vec<f64> = key(&h, "center")?
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad("center", e))?;
    if center.len() != 2 {
        return Err(bad("center", "expected two coordinates"));
    }
    let n_r: usize = key(&h, "n_r")?.parse().map_err(|e| bad("n_r", e))?;
    let n_phi: usize = key(&h, "n_phi")?.parse().map_err(|e| bad("n_phi", e))?;
    let source = match h.get("source").map(String::as_str) {
        Some("solved") => SurfaceSource::Solved,
        _ => SurfaceSource::Sampled,
    };
    let dom = make_domain(preset, [center[0], center[1]])?;
    let grid = Arc::new(make_grid(&dom, n_r, n_phi)?);

    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or(DumpError::RowCount { expected: grid.len(), got: 0 })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let ucol =
        cols.iter().position(|c| *c == "u").ok_or(DumpError::BadRow { line: hl + 1, msg: "no 'u' column".into() })?;
    let mut u = Vec::with_capacity(grid.len());
    for (ln, line) in lines {
        let field = line.split(',').nth(ucol).ok_or(DumpError::BadRow { line: ln + 1, msg: "short row".into() })?;
        u.push(field.trim().parse::<f64>().map_err(|e| DumpError::BadRow { line: ln + 1, msg: e.to_string() })?);
    }
    if u.len() != grid.len() {
        return Err(DumpError::RowCount { expected: grid.len(), got: u.len() });
    }
    Ok(GraphSurface::from_samples(grid, u, source)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::StarDomain;
    use crate::graphgeom::hyperboloid_cap;
    use std::f64::consts::SQRT_2;

    #[test]
    fn round_trip() {
        let dom = StarDomain::disk(1.0).unwrap().with_center([0.1, -0.2]);
        let g = Arc::new(make_grid(&dom, 10, 20).unwrap());
        let cap = hyperboloid_cap(0.3, -SQRT_2, [0.1, -0.2], g).unwrap();
        let text = write_surface(&cap, &[("seed".into(), "7".into())]);
        let h = parse_header(&text);
        assert_eq!(h["seed"], "7");
        assert_eq!(h["n_r"], "10");
        assert!(text.contains(&SURFACE_COLUMNS.join(",")));
        let back = read_surface(&text).unwrap();
        assert_eq!(back.source(), SurfaceSource::Sampled);
        assert_eq!(back.grid().domain(), cap.grid().domain());
        for i in 0..cap.len() {
            assert!((back.u()[i] - cap.u()[i]).abs() < 1e-14);
        }
        assert_eq!(write_surface(&back, &[]).lines().count(), text.lines().count() - 1);
        let e = Arc::new(make_grid(&StarDomain::ellipse(1.0, 1.2).unwrap(), 8, 16).unwrap());
        let bowl = GraphSurface::analytic(e, |x| {
            (0.1 * (x[0] * x[0] + x[1] * x[1]), [0.2 * x[0], 0.2 * x[1]], [0.2, 0.0, 0.2])
        })
        .unwrap();
        let again = read_surface(&write_surface(&bowl, &[])).unwrap();
        assert_eq!(again.grid().domain(), bowl.grid().domain());
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(read_surface("# n_r=8\n"), Err(DumpError::MissingKey(_))));
        let g = Arc::new(make_grid(&StarDomain::disk(1.0).unwrap(), 8, 16).unwrap());
        let flat = GraphSurface::from_samples(g, vec![0.0; 128], SurfaceSource::Sampled).unwrap();
        let text = write_surface(&flat, &[]);
        let cut: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_surface(&cut), Err(DumpError::RowCount { .. })));
        let broken = format!("{cut}1,2,3,4,x\n");
        assert!(matches!(read_surface(&broken), Err(DumpError::BadRow { .. })));
    }
}
