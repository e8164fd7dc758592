//! Line-oriented NodeSet files.
//!
//! ```text
//! a=2
//! 0 0.31 1.2 0.4 0.2 0.2 0
//! 1 0 0 1 0.5 0.5 1
//! ```
//!
//! After the `a=<side>` header each line is `id x y r_comm r_cov r_rej boundary`,
//! with ids `0, 1, …` in order and boundary `0` or `1`. Blank lines and `#`
//! comments are skipped. Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Node, NodeSet, Point};

pub fn nodeset_to_text(ns: &NodeSet) -> String {
    let mut out = format!("a={}\n", ns.side());
    for (id, n) in ns.nodes().iter().enumerate() {
        let _ = writeln!(
            out,
            "{id} {} {} {} {} {} {}",
            n.pos.x,
            n.pos.y,
            n.r_comm,
            n.r_cov,
            n.r_rej,
            u8::from(n.boundary)
        );
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn nodeset_from_text(text: &str) -> Result<NodeSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing 'a=<side>' header"))?;
    let side: f64 = header
        .strip_prefix("a=")
        .ok_or_else(|| parse_err(hline, "expected 'a=<side>'"))?
        .trim()
        .parse()
        .map_err(|e| parse_err(hline, format!("side: {e}")))?;

    let mut nodes = Vec::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(parse_err(
                ln,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|e| parse_err(ln, format!("id: {e}")))?;
        if id != nodes.len() {
            return Err(parse_err(
                ln,
                format!("expected id {}, found {id}", nodes.len()),
            ));
        }
        let mut nums = [0.0; 5];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = fields[k + 1]
                .parse()
                .map_err(|e| parse_err(ln, format!("field {}: {e}", k + 2)))?;
        }
        let boundary = match fields[6] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    ln,
                    format!("boundary must be 0 or 1, found '{other}'"),
                ))
            }
        };
        nodes.push(Node {
            pos: Point::new(nums[0], nums[1]),
            r_comm: nums[2],
            r_cov: nums[3],
            r_rej: nums[4],
            boundary,
        });
    }
    let ns = NodeSet::from_nodes(side, nodes);
    ns.validate()?;
    Ok(ns)
}

pub fn read_nodeset(path: impl AsRef<Path>) -> Result<NodeSet> {
    nodeset_from_text(&std::fs::read_to_string(path)?)
}

pub fn write_nodeset(ns: &NodeSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, nodeset_to_text(ns))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{assign_radii_uniform, make_boundary, sample_poisson, BoundaryMode};
    use crate::seeded_rng;
    use proptest::prelude::*;

    #[test]
    fn parses_the_documented_example() {
        let ns = nodeset_from_text("a=2\n0 0.31 1.2 0.4 0.2 0.2 0\n# fence\n\n1 0 0 1 0.5 0.5 1\n")
            .unwrap();
        assert_eq!(ns.side(), 2.0);
        assert_eq!(ns.len(), 2);
        assert!(ns.nodes()[1].boundary);
        assert_eq!(ns.nodes()[0].r_comm, 0.4);
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in [
            "",
            "side=2\n",
            "a=2\n0 0 0 1 1 1\n",
            "a=2\n1 0 0 1 1 1 0\n",
            "a=2\n0 0 0 1 1 1 2\n",
            "a=2\n0 0 x 1 1 1 0\n",
        ] {
            assert!(nodeset_from_text(bad).is_err(), "{bad:?}");
        }
        match nodeset_from_text("a=2\n0 0 0 1 1 1 0\n1 0 0 1 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(seed in 0u64..10_000) {
            let mut rng = seeded_rng(seed);
            let ns = sample_poisson(8.0, 2.0, &mut rng).unwrap();
            let ns = assign_radii_uniform(ns, 0.2, 0.33, &mut rng).unwrap();
            let ns = make_boundary(ns, BoundaryMode::SquarePerimeter { spacing: 0.5, radius: 0.3 }).unwrap();
            prop_assert_eq!(nodeset_from_text(&nodeset_to_text(&ns)).unwrap(), ns);
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        let ns = NodeSet::from_points(2.0, &[Point::new(0.5, 0.5), Point::new(1.5, 1.0)], 0.4);
        write_nodeset(&ns, &path).unwrap();
        assert_eq!(read_nodeset(&path).unwrap(), ns);
    }
}
