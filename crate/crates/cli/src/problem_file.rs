//! `key = value` problem descriptions.
//!
//! ```text
//! # comment
//! name = bump
//! dim = 2
//! l1 = 0
//! l2 = 1
//! a = 1 + x^2 + y^2
//! u = sin(pi*x)*sin(pi*y)
//! ```
//!
//! With `u` the problem is manufactured (`f` and `g` follow from `a` and `u`).
//! Otherwise `f` and `g` are both required; `u` may then still be given to
//! measure errors.

use std::collections::BTreeMap;
use std::path::Path;

use symfd_core::error::{Error, Result};
use symfd_core::expr::Expression;
use symfd_core::fields::{direct_problem, manufactured_problem, Problem};

const KEYS: [&str; 8] = ["name", "dim", "l1", "l2", "a", "u", "f", "g"];

pub fn parse_problem(text: &str, default_name: &str) -> Result<Problem> {
    let mut map: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = lineno + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("line {lineno}: expected `key = value`")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Usage(format!("line {lineno}: unknown key `{key}`")));
        }
        if map.insert(key, (lineno, value.trim())).is_some() {
            return Err(Error::Usage(format!(
                "line {lineno}: duplicate key `{key}`"
            )));
        }
    }
    let get = |k: &str| map.get(k).map(|v| v.1);
    let need = |k: &str| get(k).ok_or_else(|| Error::Usage(format!("missing key `{k}`")));
    let number = |k: &str| -> Result<f64> {
        let (line, v) = map[k];
        let e = Expression::parse(v, 0)
            .map_err(|e| Error::Usage(format!("line {line}: `{k}` is not a constant: {e}")))?;
        e.evaluate(&[])
    };
    let name = get("name").unwrap_or(default_name);
    need("dim")?;
    let dim: usize = map["dim"].1.parse().map_err(|_| {
        Error::Usage(format!(
            "line {}: dim must be a positive integer",
            map["dim"].0
        ))
    })?;
    if dim == 0 {
        return Err(Error::Usage("dim must be positive".into()));
    }
    need("l1")?;
    need("l2")?;
    let (l1, l2) = (number("l1")?, number("l2")?);
    let a = need("a")?;
    let mut problem = match (get("u"), get("f"), get("g")) {
        (Some(u), None, None) => manufactured_problem(name, dim, l1, l2, a, u)?,
        (u, Some(f), Some(g)) => {
            let mut p = direct_problem(name, dim, l1, l2, a, f, g)?;
            if let Some(u) = u {
                p.exact = Some(Expression::parse(u, dim)?);
            }
            p
        }
        (_, Some(_), None) => return Err(Error::Usage("key `f` needs `g`".into())),
        (_, None, Some(_)) => return Err(Error::Usage("key `g` needs `f`".into())),
        (None, None, None) => return Err(Error::Usage("need `u`, or `f` and `g`".into())),
    };
    problem.name = name.to_string();
    Ok(problem)
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("problem");
    parse_problem(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured() {
        let p = parse_problem("dim = 2\nl1 = 0\nl2 = pi\n# c\na = 1+x^2\nu = x*y\n", "t").unwrap();
        assert_eq!(p.dim, 2);
        assert!((p.l2 - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(p.exact_value(&[2.0, 3.0]).unwrap(), Some(6.0));
    }

    #[test]
    fn direct() {
        let p = parse_problem("dim=1\nl1=-1\nl2=1\na=1\nf=2\ng=0\n", "t").unwrap();
        assert!(p.exact.is_none());
    }

    #[test]
    fn rejects() {
        for text in [
            "dim=1\nl1=0\nl2=1\na=1\n",
            "dim=1\nl1=0\nl2=1\na=1\nu=x\nf=1\n",
            "dim=1\nl1=0\nl2=1\na=1\nu=x\nq=1\n",
            "dim=x\nl1=0\nl2=1\na=1\nu=x\n",
            "dim=1\nl1=0\nl1=1\n",
            "dim=1\nl1=0\nl2=1\na=1\nu=y\n",
        ] {
            assert!(parse_problem(text, "t").unwrap_err().is_usage(), "{text}");
        }
    }
}
