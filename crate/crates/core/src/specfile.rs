//! Line-based `key = value` spec files for manifolds and plane curves.
//!
//! ```text
//! # w = conj(z)^2
//! n = 0
//! variables = z, w
//! rho1 = "re(w - conj(z)^2)"
//! rho2 = "im(w - conj(z)^2)"
//! box.z = -1,1,-1,1
//! tol.rank = 1e-8
//! ```
//!
//! A file with an `f` key describes a curve `f(x, y) = 0` instead, with
//! `box.<var> = min,max`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::blowup::CurveSpec;
use crate::expr::{parse_with, Vars};
use crate::manifold::{ManifoldSpec, Rect, SearchBox, Tolerances};
use crate::{Error, Result};

/// A parsed spec file.
#[derive(Debug, Clone)]
pub enum SpecFile {
    Manifold(ManifoldSpec),
    Curve(CurveSpec),
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::SpecFile {
        line,
        message: message.into(),
    }
}

/// Strip a `#` comment that is not inside double quotes.
fn strip_comment(s: &str) -> &str {
    let mut quoted = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &s[..i],
            _ => {}
        }
    }
    s
}

fn unquote(line: usize, v: &str) -> Result<String> {
    let v = v.trim();
    match (v.starts_with('"'), v.len() >= 2 && v.ends_with('"')) {
        (true, true) => {
            let inner = &v[1..v.len() - 1];
            if inner.contains('"') {
                return Err(err(line, "stray quote inside value"));
            }
            Ok(inner.to_string())
        }
        (true, false) => Err(err(line, "unterminated quote")),
        _ if v.contains('"') => Err(err(line, "stray quote inside value")),
        _ => Ok(v.to_string()),
    }
}

fn entries(text: &str) -> Result<BTreeMap<String, Entry>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(line, format!("expected `key = value`, got {content:?}")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let value = unquote(line, value)?;
        if map.insert(key.to_string(), Entry { line, value }).is_some() {
            return Err(err(line, format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

fn parse_f64(e: &Entry, what: &str) -> Result<f64> {
    e.value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(e.line, format!("{what}: expected a finite number, got {:?}", e.value)))
}

fn parse_list(e: &Entry, len: usize, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(err(e.line, format!("{what}: expected {len} comma-separated numbers")));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(e.line, format!("{what}: {p:?} is not a finite number")))
        })
        .collect()
}

fn names(e: &Entry) -> Vec<String> {
    e.value.split(',').map(|s| s.trim().to_string()).collect()
}

/// Attach a line number to errors from building a spec.
fn at(line: usize, r: Error) -> Error {
    match r {
        Error::SpecFile { .. } => r,
        other => err(line, other.to_string()),
    }
}

/// Parse a manifold or curve spec file.
pub fn parse_spec_file(text: &str) -> Result<SpecFile> {
    let map = entries(text)?;
    if map.contains_key("f") {
        parse_curve(&map).map(SpecFile::Curve)
    } else {
        parse_manifold(&map).map(SpecFile::Manifold)
    }
}

fn parse_manifold(map: &BTreeMap<String, Entry>) -> Result<ManifoldSpec> {
    for (key, e) in map {
        let known = matches!(
            key.as_str(),
            "n" | "variables" | "rho1" | "rho2" | "tol.on_surface" | "tol.rank"
        ) || key.starts_with("box.");
        if !known {
            return Err(err(e.line, format!("unknown key {key:?}")));
        }
    }
    let required = |k: &str| map.get(k).ok_or_else(|| err(0, format!("missing required key {k:?}")));
    let n_entry = required("n")?;
    let n: usize = n_entry.value.trim().parse().map_err(|_| {
        err(
            n_entry.line,
            format!("n: expected a nonnegative integer, got {:?}", n_entry.value),
        )
    })?;
    let var_names = match map.get("variables") {
        Some(e) => names(e),
        None => (1..=n + 2).map(|k| format!("z{k}")).collect(),
    };
    if var_names.len() != n + 2 {
        let line = map.get("variables").map_or(n_entry.line, |e| e.line);
        return Err(err(
            line,
            format!("n = {n} needs {} variables, got {}", n + 2, var_names.len()),
        ));
    }
    let (r1, r2) = (required("rho1")?, required("rho2")?);
    let vars_line = map.get("variables").map_or(n_entry.line, |e| e.line);
    let vars = Arc::new(Vars::new(&var_names).map_err(|e| at(vars_line, e))?);
    for r in [r1, r2] {
        parse_with(&r.value, &vars).map_err(|e| at(r.line, e.into()))?;
    }
    let mut spec = ManifoldSpec::new(n, &var_names, &r1.value, &r2.value)?;

    let mut rects = SearchBox::cube(n + 2, 1.0).0;
    for (key, e) in map.range("box.".to_string()..) {
        let Some(var) = key.strip_prefix("box.") else { break };
        let idx = spec
            .vars
            .index_of(var)
            .ok_or_else(|| err(e.line, format!("box for unknown variable {var:?}")))?;
        let v = parse_list(e, 4, key)?;
        let rect = Rect::new(v[0], v[1], v[2], v[3]);
        if rect.is_empty() {
            return Err(err(e.line, format!("{key}: empty rectangle")));
        }
        rects[idx] = rect;
    }
    spec = spec.with_box(SearchBox(rects));

    let mut tol = Tolerances::default();
    for (key, slot) in [("tol.on_surface", &mut tol.on_surface), ("tol.rank", &mut tol.rank)] {
        if let Some(e) = map.get(key) {
            let x = parse_f64(e, key)?;
            if !(x > 0.0) {
                return Err(err(e.line, format!("{key} must be positive")));
            }
            *slot = x;
        }
    }
    Ok(spec.with_tolerances(tol))
}

fn parse_curve(map: &BTreeMap<String, Entry>) -> Result<CurveSpec> {
    for (key, e) in map {
        if !(matches!(key.as_str(), "f" | "variables" | "tol") || key.starts_with("box.")) {
            return Err(err(e.line, format!("unknown key {key:?} in a curve file")));
        }
    }
    let f = &map["f"];
    let var_names = map
        .get("variables")
        .map_or_else(|| vec!["x".to_string(), "y".to_string()], names);
    let mut curve = CurveSpec::with_vars(&f.value, &var_names).map_err(|e| at(f.line, e))?;
    let mut bounds = curve.search_box;
    for (key, e) in map.range("box.".to_string()..) {
        let Some(var) = key.strip_prefix("box.") else { break };
        let idx = curve
            .vars
            .index_of(var)
            .ok_or_else(|| err(e.line, format!("box for unknown variable {var:?}")))?;
        let v = parse_list(e, 2, key)?;
        if !(v[0] < v[1]) {
            return Err(err(e.line, format!("{key}: empty interval")));
        }
        bounds[idx] = (v[0], v[1]);
    }
    curve = curve.with_box(bounds[0], bounds[1]);
    if let Some(e) = map.get("tol") {
        let x = parse_f64(e, "tol")?;
        if !(x > 0.0) {
            return Err(err(e.line, "tol must be positive"));
        }
        curve.tol = x;
    }
    Ok(curve)
}

/// Canonical text of a spec file: comments and blank lines dropped, keys
/// sorted, one `key = value` per line. Two files with the same content up to
/// formatting normalize identically.
pub fn normalized_text(text: &str) -> Result<String> {
    let map = entries(text)?;
    let mut out = String::new();
    for (key, e) in &map {
        let value = match key.as_str() {
            "rho1" | "rho2" | "f" => format!("\"{}\"", e.value.trim()),
            "variables" => names(e).join(", "),
            _ if key.starts_with("box.") => e.value.split(',').map(str::trim).collect::<Vec<_>>().join(","),
            _ => e.value.trim().to_string(),
        };
        out.push_str(&format!("{key} = {value}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    const Z2: &str = r#"
# graph w = conj(z)^2
n = 0
variables = z, w
rho1 = "re(w - conj(z)^2)"   # real part
rho2 = "im(w - conj(z)^2)"
box.z = -0.5,0.5,-0.5,0.5
tol.rank = 1e-7
"#;

    #[test]
    fn manifold_file() {
        let SpecFile::Manifold(spec) = parse_spec_file(Z2).unwrap() else {
            panic!("expected manifold")
        };
        assert_eq!(spec.n, 0);
        assert_eq!(spec.vars.names(), ["z", "w"]);
        assert_eq!(spec.search_box.0[0], Rect::new(-0.5, 0.5, -0.5, 0.5));
        assert_eq!(spec.search_box.0[1], Rect::new(-1.0, 1.0, -1.0, 1.0));
        assert_eq!(spec.tol.rank, 1e-7);
        assert_eq!(spec.tol.on_surface, 1e-9);
        let p = [C64::new(0.3, 0.1), C64::new(0.3, 0.1).conj().powi(2)];
        assert!(spec.residual(&p).unwrap() < 1e-15);
    }

    #[test]
    fn curve_file() {
        let SpecFile::Curve(c) = parse_spec_file("f = \"y^2 - x^3 - x^2\"\nbox.x = -2,2\n").unwrap() else {
            panic!("expected curve")
        };
        assert_eq!(c.search_box, [(-2.0, 2.0), (-1.0, 1.0)]);
        assert!(c.validate().is_empty());
    }

    fn line_of(text: &str) -> usize {
        match parse_spec_file(text) {
            Err(Error::SpecFile { line, .. }) => line,
            other => panic!("expected a spec-file error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            line_of("n = 0\nvariables = z, w\nrho1 = \"re(w\"\nrho2 = \"im(w)\"\n"),
            3
        );
        assert_eq!(line_of("n = 0\nrho1 = \"re(z2)\"\nrho2 = \"im(z2 +)\"\n"), 3);
        assert_eq!(line_of("n = 0\ncolour = red\n"), 2);
        assert_eq!(line_of("n = 0\nn = 1\n"), 2);
        assert_eq!(line_of("n = 0\nvariables = a, b, c\n"), 2);
        assert_eq!(
            line_of("n = 0\nrho1 = \"re(z2)\"\nrho2 = \"im(z2)\"\nbox.q = 0,1,0,1\n"),
            4
        );
        assert_eq!(
            line_of("n = 0\nrho1 = \"re(z2)\"\nrho2 = \"im(z2)\"\nbox.z1 = 1,0,0,1\n"),
            4
        );
        assert_eq!(
            line_of("n = 0\nrho1 = \"re(z2)\"\nrho2 = \"im(z2)\"\ntol.rank = -1\n"),
            4
        );
        assert_eq!(line_of("just words\n"), 1);
        assert_eq!(line_of("f = \"y - x^2\nbox.x = 0,1\n"), 1);
        assert_eq!(line_of("n = 0\nrho1 = \"re(z2)\"\n"), 0);
    }

    #[test]
    fn normalization_ignores_layout() {
        let a = "n=0\nrho2 = \"im(z2)\"  # c\nrho1=\"re(z2)\"\n";
        let b = "# header\n\nrho1 = \"re(z2)\"\n n = 0 \nrho2=  \"im(z2)\"\n";
        assert_eq!(normalized_text(a).unwrap(), normalized_text(b).unwrap());
        assert_eq!(
            normalized_text(a).unwrap(),
            "n = 0\nrho1 = \"re(z2)\"\nrho2 = \"im(z2)\"\n"
        );
    }
}
