//! Line-oriented group-definition files.
//!
//! ```text
//! # comments start with '#'
//! name = S3
//! engine = coset-table
//! generators = a b
//! relators = a^2 b^2 (a b)^3
//! ```
//!
//! Engines and their keys:
//!
//! | engine | keys |
//! |---|---|
//! | `free` | `generators` |
//! | `abelian` | `generators`, `orders` (`0` is infinite cyclic) |
//! | `coset-table` | `generators`, `relators`, `max_cosets` |
//! | `burnside` | `generators`, `exponent`, `word_length`, `max_cosets` |
//! | `free-product` | `factor = <file>` (repeated) |
//! | `hn` | `hn_rank` |
//! | `lamplighter` | `generators` (`t` then `a_k` names) |
//! | `metabelianized` | `base = <file>`, `max_elements` |
//!
//! Paths are relative to the directory of the file that names them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{
    burnside_group, finite_group, AbelianEngine, FinitePresentation, FreeProductEngine, HnEngine,
    LamplighterEngine, MarkedGroup, MetabelianEngine, DEFAULT_COSET_CAP,
};
use crate::error::{Error, Result};
use crate::syntax::{self, Entry};

const MAX_NESTING: usize = 16;

const KEYS: &[&str] = &[
    "name",
    "engine",
    "generators",
    "relators",
    "orders",
    "hn_rank",
    "base",
    "factor",
    "exponent",
    "word_length",
    "max_cosets",
    "max_elements",
];

struct Definition {
    entries: BTreeMap<String, Vec<Entry>>,
    dir: PathBuf,
    depth: usize,
}

impl Definition {
    fn parse(text: &str, dir: PathBuf, depth: usize) -> Result<Self> {
        let entries = syntax::parse_key_values(text, KEYS, &["factor"])?;
        Ok(Definition { entries, dir, depth })
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key).and_then(|v| v.first())
    }

    fn require(&self, key: &str, engine: &Entry) -> Result<&Entry> {
        self.get(key).ok_or_else(|| {
            Error::config(
                engine.line,
                engine.column,
                format!("engine `{}` requires `{key}`", engine.value),
            )
        })
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(e.line, e.column, format!("`{key}` must be a non-negative integer"))),
        }
    }

    fn generators(&self) -> Result<Option<Vec<String>>> {
        let Some(e) = self.get("generators") else {
            return Ok(None);
        };
        let names: Vec<String> = e.value.split_whitespace().map(str::to_string).collect();
        for (i, n) in names.iter().enumerate() {
            let ok = n.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
            if !ok || names[..i].contains(n) {
                let col = e.column + e.value.find(n.as_str()).unwrap_or(0);
                let msg = if ok { "duplicate generator" } else { "invalid generator name" };
                return Err(Error::config(e.line, col, format!("{msg} `{n}`")));
            }
        }
        Ok(Some(names))
    }

    fn nested(&self, e: &Entry) -> Result<MarkedGroup> {
        if self.depth >= MAX_NESTING {
            return Err(Error::config(e.line, e.column, "group files nested too deeply"));
        }
        let path = self.dir.join(&e.value);
        load_at_depth(&path, self.depth + 1).map_err(|inner| match inner {
            Error::Io(io) => Error::config(e.line, e.column, format!("cannot read `{}`: {io}", e.value)),
            Error::Config { line, column, message } => Error::config(
                e.line,
                e.column,
                format!("in `{}` at {line}:{column}: {message}", e.value),
            ),
            other => other,
        })
    }

    fn build(&self) -> Result<MarkedGroup> {
        let engine = self
            .get("engine")
            .ok_or_else(|| Error::config(1, 1, "missing `engine = ...`"))?;
        let gens = self.generators()?;
        let need_gens = || {
            gens.clone().ok_or_else(|| {
                Error::config(engine.line, engine.column, format!("engine `{}` requires `generators`", engine.value))
            })
        };
        let cosets = self.number::<usize>("max_cosets")?.unwrap_or(DEFAULT_COSET_CAP);
        let g = match engine.value.as_str() {
            "free" => MarkedGroup::free_named(need_gens()?),
            "abelian" => {
                let names = need_gens()?;
                let e = self.require("orders", engine)?;
                let orders = e
                    .value
                    .split_whitespace()
                    .map(|s| s.parse::<u64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::config(e.line, e.column, "`orders` must be non-negative integers"))?;
                if orders.len() != names.len() {
                    return Err(Error::config(e.line, e.column, "one order per generator"));
                }
                MarkedGroup::new("abelian", names, Arc::new(AbelianEngine::new(orders)))?
            }
            "coset-table" => {
                let names = need_gens()?;
                let e = self.require("relators", engine)?;
                let rels = syntax::parse_relators(&e.value, &names)
                    .map_err(|err| err.at_line(e.line, e.column - 1))?;
                let p = FinitePresentation::new(names, rels)
                    .map_err(|err| Error::config(e.line, e.column, err.to_string()))?;
                finite_group("coset-table", &p, cosets)?
            }
            "burnside" => {
                let names = need_gens()?;
                let exponent = self
                    .number::<u32>("exponent")?
                    .ok_or_else(|| Error::config(engine.line, engine.column, "engine `burnside` requires `exponent`"))?;
                let len = self.number::<usize>("word_length")?.unwrap_or(2);
                let (g, _) = burnside_group(names.len(), exponent, len, cosets)?;
                MarkedGroup::new(g.name(), names, g.engine_arc())?
            }
            "free-product" => {
                let factors = self
                    .entries
                    .get("factor")
                    .ok_or_else(|| Error::config(engine.line, engine.column, "engine `free-product` requires `factor`"))?
                    .iter()
                    .map(|e| self.nested(e))
                    .collect::<Result<Vec<_>>>()?;
                let p = FreeProductEngine::marked("free product", factors)
                    .map_err(|err| Error::config(engine.line, engine.column, err.to_string()))?;
                match gens {
                    Some(names) => MarkedGroup::new(p.name(), names, p.engine_arc())
                        .map_err(|err| Error::config(engine.line, engine.column, err.to_string()))?,
                    None => p,
                }
            }
            "hn" => {
                let e = self.require("hn_rank", engine)?;
                let n = self.number::<usize>("hn_rank")?.unwrap();
                HnEngine::marked(n).map_err(|err| Error::config(e.line, e.column, err.to_string()))?
            }
            "lamplighter" => {
                let names = gens.unwrap_or_else(|| vec!["t".into(), "a_0".into()]);
                LamplighterEngine::marked(names)
                    .map_err(|err| Error::config(engine.line, engine.column, err.to_string()))?
            }
            "metabelianized" => {
                let e = self.require("base", engine)?;
                let base = self.nested(e)?;
                let cap = self.number::<usize>("max_elements")?.unwrap_or(1 << 16);
                let m = MetabelianEngine::marked(&base, cap)?;
                match gens {
                    Some(names) => MarkedGroup::new(m.name(), names, m.engine_arc())
                        .map_err(|err| Error::config(engine.line, engine.column, err.to_string()))?,
                    None => m,
                }
            }
            other => {
                return Err(Error::config(
                    engine.line,
                    engine.column,
                    format!("unknown engine `{other}`"),
                ))
            }
        };
        Ok(match self.get("name") {
            Some(n) => g.with_name(n.value.clone()),
            None => g,
        })
    }
}

fn load_at_depth(path: &Path, depth: usize) -> Result<MarkedGroup> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Definition::parse(&text, dir, depth)?.build()
}

/// Reads a group definition from a file.
pub fn load_group_file(path: &Path) -> Result<MarkedGroup> {
    load_at_depth(path, 0)
}

/// Parses a group definition; nested paths resolve against `dir`.
pub fn parse_group_definition(text: &str, dir: &Path) -> Result<MarkedGroup> {
    Definition::parse(text, dir.to_path_buf(), 0)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::EngineKind;

    fn parse(text: &str) -> Result<MarkedGroup> {
        parse_group_definition(text, Path::new("."))
    }

    #[test]
    fn coset_table_file() {
        let g = parse("engine = coset-table\ngenerators = a b\nrelators = a^2 b^2 (a b)^3\n").unwrap();
        assert_eq!(g.order(), Some(6));
        let g = parse("name = B23\nengine = burnside\ngenerators = a b\nexponent = 3\n").unwrap();
        assert_eq!(g.order(), Some(27));
        assert_eq!(g.name(), "B23");
    }

    #[test]
    fn other_engines() {
        assert_eq!(parse("engine = hn\nhn_rank = 2").unwrap().rank(), 6);
        assert_eq!(parse("engine = lamplighter").unwrap().kind(), EngineKind::Lamplighter);
        let g = parse("engine = abelian\ngenerators = a b\norders = 0 0 # Z^2").unwrap();
        assert_eq!(g.kind(), EngineKind::Abelian);
        assert_eq!(g.order(), None);
    }

    #[test]
    fn nested_files() {
        let dir = tempdir();
        std::fs::write(dir.join("k4.grp"), "engine = abelian\ngenerators = a b\norders = 2 2\n").unwrap();
        std::fs::write(dir.join("z3.grp"), "engine = coset-table\ngenerators = c\nrelators = c^3\n").unwrap();
        let m = parse_group_definition("engine = metabelianized\nbase = k4.grp\n", &dir).unwrap();
        assert_eq!(m.kind(), EngineKind::Metabelianized);
        let p = parse_group_definition("engine = free-product\nfactor = k4.grp\nfactor = z3.grp\n", &dir).unwrap();
        assert_eq!(p.generators(), &["a", "b", "c"]);
        let err = parse_group_definition("engine = free-product\nfactor = missing.grp\n", &dir).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, column: 10, .. }), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }

    fn tempdir() -> PathBuf {
        let d = std::env::temp_dir().join(format!("cayley-file-test-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn diagnostics_point_at_the_problem() {
        let e = parse("engine = coset-table\ngenerators = a b\nrelators = a^2 c\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, column: 16, .. }), "{e}");
        let e = parse("engine = free\ngenerators a b\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, column: 1, .. }), "{e}");
        let e = parse("engine = warp\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, column: 10, .. }), "{e}");
        let e = parse("  colour = red\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, column: 3, .. }), "{e}");
        let e = parse("engine = hn\nhn_rank = two\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, column: 11, .. }), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
}
