//! Plain-text instance files.
//!
//! ```text
//! ising3d <Lx> <Ly> <Lz> <periodic|open>
//! # id <identifier>
//! # seed <integer>
//! b <i> <j> <J>
//! f <i> <h>
//! ```
//!
//! Other `#` lines and blank lines are ignored. Only nonzero fields are
//! written. Floats use the shortest representation that round-trips.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{Bond, LatticeSpec, SpinGlassInstance};
use crate::{Error, Result};

pub fn write_instance(inst: &SpinGlassInstance) -> String {
    let [lx, ly, lz] = inst.lattice().dims();
    let mut out = String::new();
    let _ = writeln!(out, "ising3d {lx} {ly} {lz} {}", inst.lattice().boundary());
    let _ = writeln!(out, "# id {}", inst.id());
    let _ = writeln!(out, "# seed {}", inst.seed());
    for b in inst.bonds() {
        let _ = writeln!(out, "b {} {} {:?}", b.i, b.j, b.coupling);
    }
    for (i, &h) in inst.fields().iter().enumerate() {
        if h != 0.0 {
            let _ = writeln!(out, "f {i} {h:?}");
        }
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from '{tok}'")))
}

/// Parses an instance; `default_id` is used when the file carries no `# id`.
pub fn parse_instance(text: &str, default_id: &str) -> Result<SpinGlassInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("ising3d") {
        return Err(parse_err(hline, "header must start with 'ising3d'"));
    }
    let lx = field(tok.next(), hline, "Lx")?;
    let ly = field(tok.next(), hline, "Ly")?;
    let lz = field(tok.next(), hline, "Lz")?;
    let boundary = tok
        .next()
        .ok_or_else(|| parse_err(hline, "missing boundary"))?
        .parse()
        .map_err(|e: Error| parse_err(hline, e.to_string()))?;
    if tok.next().is_some() {
        return Err(parse_err(hline, "trailing tokens in header"));
    }
    let lattice =
        LatticeSpec::new([lx, ly, lz], boundary).map_err(|e| parse_err(hline, e.to_string()))?;
    let n = lattice.num_sites();

    let mut id = default_id.to_string();
    let mut seed = 0u64;
    let mut bonds = Vec::new();
    let mut seen_bonds = HashSet::new();
    let mut fields = vec![0.0; n];
    let mut seen_fields = HashSet::new();

    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("#") => match tok.next() {
                Some("id") => {
                    id = tok
                        .next()
                        .ok_or_else(|| parse_err(ln, "missing id value"))?
                        .to_string()
                }
                Some("seed") => seed = field(tok.next(), ln, "seed")?,
                _ => continue,
            },
            Some(t) if t.starts_with('#') => continue,
            Some("b") => {
                let i: usize = field(tok.next(), ln, "site i")?;
                let j: usize = field(tok.next(), ln, "site j")?;
                let coupling: f64 = field(tok.next(), ln, "coupling")?;
                if !coupling.is_finite() {
                    return Err(parse_err(ln, "non-finite coupling"));
                }
                if i >= j {
                    return Err(parse_err(ln, format!("bond ({i}, {j}) needs i < j")));
                }
                if j >= n {
                    return Err(parse_err(ln, format!("site {j} outside 0..{n}")));
                }
                if !lattice.are_neighbors(i, j) {
                    return Err(parse_err(ln, format!("({i}, {j}) is not a lattice bond")));
                }
                if !seen_bonds.insert((i, j)) {
                    return Err(parse_err(ln, format!("duplicate bond ({i}, {j})")));
                }
                bonds.push(Bond { i, j, coupling });
            }
            Some("f") => {
                let i: usize = field(tok.next(), ln, "site")?;
                let h: f64 = field(tok.next(), ln, "field")?;
                if i >= n {
                    return Err(parse_err(ln, format!("site {i} outside 0..{n}")));
                }
                if !h.is_finite() {
                    return Err(parse_err(ln, "non-finite field"));
                }
                if !seen_fields.insert(i) {
                    return Err(parse_err(ln, format!("duplicate field for site {i}")));
                }
                fields[i] = h;
            }
            Some(other) => return Err(parse_err(ln, format!("unknown record '{other}'"))),
            None => continue,
        }
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
    }
    SpinGlassInstance::new(lattice, bonds, fields, id, seed)
}

pub fn save_instance(inst: &SpinGlassInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_instance(inst)).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<SpinGlassInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_instance(&text, &stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_ferromagnet, generate_spin_glass, Boundary};

    #[test]
    fn round_trip_is_bit_exact() {
        let p = LatticeSpec::cubic(4, Boundary::Periodic).unwrap();
        let inst = generate_spin_glass(p, 7);
        let back = parse_instance(&write_instance(&inst), "unused").unwrap();
        assert_eq!(inst, back);

        let fm = generate_ferromagnet(LatticeSpec::cubic(3, Boundary::Open).unwrap(), 4, 0.1)
            .unwrap();
        assert_eq!(fm, parse_instance(&write_instance(&fm), "unused").unwrap());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        let inst = generate_spin_glass(LatticeSpec::cubic(3, Boundary::Periodic).unwrap(), 3);
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }

    #[test]
    fn duplicate_bond_reports_line() {
        let text = "ising3d 2 2 2 open\nb 0 1 0.5\n\nb 0 1 0.25\n";
        match parse_instance(text, "d") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("duplicate"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn coupling_range_is_not_constrained() {
        let inst = parse_instance("ising3d 2 1 1 open\nb 0 1 3.5\n", "big").unwrap();
        assert_eq!(inst.bonds()[0].coupling, 3.5);
        assert_eq!(inst.id(), "big");
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(
            parse_instance("ising2d 2 2 2 open\n", "x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("ising3d 2 2 2 periodic\n", "x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("ising3d 2 2 2 open\nb 0 7 1.0\n", "x"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("ising3d 2 2 2 open\nb 0 1 abc\n", "x"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("ising3d 2 2 2 open\nf 9 1.0\n", "x"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
