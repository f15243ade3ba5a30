//! Line-oriented text formats: matrices, vocabularies, embeddings, labels and
//! the distance / neighbor exports.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embedding::{EmbeddingSet, Scalar};
use crate::error::{Error, Result};
use crate::matrix::RelationMatrix;
use crate::postproc::{DistanceMatrix, Neighbor};
use crate::registry::{Registry, TypeId};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Formats `x` with 9 significant digits, `%g` style.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

// ---------------------------------------------------------------------------
// Matrix files

pub fn write_matrix<W: Write>(mut w: W, registry: &Registry, m: &RelationMatrix) -> std::io::Result<()> {
    let rt = registry.get(m.row_type());
    let ct = registry.get(m.col_type());
    writeln!(w, "#matrix {} {} alpha={}", rt.name, ct.name, m.alpha())?;
    for c in m.cells() {
        writeln!(
            w,
            "{}\t{}\t{}",
            rt.name_of(c.row).expect("row id registered"),
            ct.name_of(c.col).expect("col id registered"),
            c.weight
        )?;
    }
    Ok(())
}

pub fn save_matrix(path: &Path, registry: &Registry, m: &RelationMatrix) -> Result<()> {
    let mut w = create(path)?;
    write_matrix(&mut w, registry, m).map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Parses a matrix file, registering its types (names ending in `-ctx` become
/// context aliases) and any entities not already known.
pub fn read_matrix<R: Read>(r: R, origin: &Path, registry: &mut Registry) -> Result<RelationMatrix> {
    let mut lines = BufReader::new(r).lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(origin, e))?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
            None => return Err(Error::parse(origin, 1, "missing `#matrix` header")),
        }
    };
    let (row_type, col_type, alpha) = parse_header(&header.1).map_err(|msg| Error::parse(origin, header.0, msg))?;
    let rt = registry.ensure_type_by_convention(&row_type)?;
    let ct = registry.ensure_type_by_convention(&col_type)?;

    let mut triplets = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(rn), Some(cn), Some(wv), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(origin, lineno, "expected `row<TAB>col<TAB>weight`"));
        };
        let weight: f64 =
            wv.trim().parse().map_err(|_| Error::parse(origin, lineno, format!("invalid weight `{wv}`")))?;
        if weight < 0.0 || !weight.is_finite() {
            return Err(Error::parse(origin, lineno, format!("weight must be finite and >= 0, got {weight}")));
        }
        let r = registry.register(rt, rn).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let c = registry.register(ct, cn).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        triplets.push((r, c, weight));
    }
    RelationMatrix::build(registry, rt, ct, triplets)?.with_alpha(alpha)
}

fn parse_header(line: &str) -> std::result::Result<(String, String, f64), String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#matrix") {
        return Err("expected `#matrix <row_type> <col_type> alpha=<float>`".into());
    }
    let row = parts.next().ok_or("missing row type")?.to_string();
    let col = parts.next().ok_or("missing column type")?.to_string();
    let mut alpha = 1.0;
    for extra in parts {
        match extra.strip_prefix("alpha=") {
            Some(v) => alpha = v.parse().map_err(|_| format!("invalid alpha `{v}`"))?,
            None => return Err(format!("unexpected header field `{extra}`")),
        }
    }
    Ok((row, col, alpha))
}

pub fn load_matrix(path: &Path, registry: &mut Registry) -> Result<RelationMatrix> {
    read_matrix(open(path)?, path, registry)
}

// ---------------------------------------------------------------------------
// Vocabulary files

/// `<type><TAB><name>` per line; ids follow line order within each type.
pub fn load_vocab(path: &Path, registry: &mut Registry) -> Result<()> {
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (t, name) =
            line.split_once('\t').ok_or_else(|| Error::parse(path, i + 1, "expected `<type><TAB><name>`"))?;
        let tid = registry.ensure_type_by_convention(t).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        registry.register(tid, name).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(())
}

pub fn save_vocab(path: &Path, registry: &Registry) -> Result<()> {
    let mut w = create(path)?;
    for (_, t) in registry.types() {
        for name in t.names() {
            writeln!(w, "{}\t{}", t.name, name).map_err(|e| Error::io(path, e))?;
        }
    }
    finish(w, path)
}

// ---------------------------------------------------------------------------
// Embedding files

/// Header `<total_entities> <dim>`, then `"type:name" f1 ... fd` per entity.
pub fn write_embeddings<W: Write, F: Scalar>(
    mut w: W,
    registry: &Registry,
    emb: &EmbeddingSet<F>,
) -> std::io::Result<()> {
    let total: usize = registry.types().map(|(t, _)| emb.type_len(t)).sum();
    writeln!(w, "{} {}", total, emb.dim())?;
    let mut line = String::new();
    for (tid, ty) in registry.types() {
        for (id, row) in emb.rows(tid).enumerate() {
            line.clear();
            line.push('"');
            line.push_str(&registry.key(tid, id).to_string());
            line.push('"');
            for x in row {
                line.push(' ');
                line.push_str(&format_sig9(x.as_f64()));
            }
            debug_assert!(ty.name_of(id).is_some());
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn save_embeddings<F: Scalar>(path: &Path, registry: &Registry, emb: &EmbeddingSet<F>) -> Result<()> {
    let mut w = create(path)?;
    write_embeddings(&mut w, registry, emb).map_err(|e| Error::io(path, e))?;
    finish(w, path)
}

/// Reads an embedding file back into a fresh registry (types and ids in file order).
pub fn read_embeddings<R: Read>(r: R, origin: &Path) -> Result<(Registry, EmbeddingSet<f32>)> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty embedding file"))?
        .map_err(|e| Error::io(origin, e))?;
    let mut hp = header.split_whitespace();
    let (Some(n), Some(d), None) = (hp.next(), hp.next(), hp.next()) else {
        return Err(Error::parse(origin, 1, "expected `<total_entities> <dim>`"));
    };
    let n: usize = n.parse().map_err(|_| Error::parse(origin, 1, "invalid entity count"))?;
    let dim: usize = d.parse().map_err(|_| Error::parse(origin, 1, "invalid dimension"))?;
    if dim == 0 {
        return Err(Error::parse(origin, 1, "dimension must be >= 1"));
    }

    let mut registry = Registry::new();
    let mut tables: Vec<Vec<f32>> = Vec::new();
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(origin, lineno, msg);
        let rest = line.strip_prefix('"').ok_or_else(|| err("expected quoted `\"type:name\"`".into()))?;
        let close = rest.rfind('"').ok_or_else(|| err("unterminated entity key".into()))?;
        let key = &rest[..close];
        let (t, name) = key.split_once(':').ok_or_else(|| err(format!("expected `type:name`, got `{key}`")))?;
        let values: Vec<f32> = rest[close + 1..]
            .split_whitespace()
            .map(|v| v.parse::<f32>().map_err(|_| err(format!("invalid float `{v}`"))))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(err(format!("expected {dim} values, found {}", values.len())));
        }
        let tid = registry.ensure_type_by_convention(t).map_err(|e| err(e.to_string()))?;
        let before = registry.get(tid).len();
        let id = registry.register(tid, name).map_err(|e| err(e.to_string()))?;
        if id < before {
            return Err(err(format!("duplicate entity `{key}`")));
        }
        if tables.len() < registry.n_types() {
            tables.resize_with(registry.n_types(), Vec::new);
        }
        tables[tid.0].extend(values);
        count += 1;
    }
    if count != n {
        return Err(Error::parse(origin, 1, format!("header declares {n} entities, file has {count}")));
    }
    tables.resize_with(registry.n_types(), Vec::new);
    Ok((registry, EmbeddingSet::from_tables(dim, tables)?))
}

pub fn load_embeddings(path: &Path) -> Result<(Registry, EmbeddingSet<f32>)> {
    read_embeddings(open(path)?, path)
}

// ---------------------------------------------------------------------------
// Labels

/// `type:name<TAB>label` lines, in file order.
pub fn load_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (key, label) =
            line.rsplit_once('\t').ok_or_else(|| Error::parse(path, i + 1, "expected `type:name<TAB>label`"))?;
        if !key.contains(':') {
            return Err(Error::parse(path, i + 1, format!("expected `type:name`, got `{key}`")));
        }
        out.push((key.to_string(), label.to_string()));
    }
    Ok(out)
}

pub fn save_labels(path: &Path, labels: &[(String, String)]) -> Result<()> {
    let mut w = create(path)?;
    for (k, l) in labels {
        writeln!(w, "{k}\t{l}").map_err(|e| Error::io(path, e))?;
    }
    finish(w, path)
}

// ---------------------------------------------------------------------------
// Exports

/// Header `#dist <type1>,<type2>,...` then one line of space-separated distances per row.
pub fn write_distances<W: Write>(mut w: W, registry: &Registry, d: &DistanceMatrix) -> std::io::Result<()> {
    let names: Vec<&str> = d.types().iter().map(|t| registry.get(*t).name.as_str()).collect();
    writeln!(w, "#dist {}", names.join(","))?;
    let mut line = String::new();
    for i in 0..d.len() {
        line.clear();
        for (j, v) in d.row(i).iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format_sig9(*v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// `query<TAB>rank<TAB>type:name<TAB>score`, ranks from 1.
pub fn write_neighbors<W: Write>(
    mut w: W,
    registry: &Registry,
    query: &str,
    target: TypeId,
    neighbors: &[Neighbor],
) -> std::io::Result<()> {
    for (rank, n) in neighbors.iter().enumerate() {
        writeln!(w, "{query}\t{}\t{}\t{}", rank + 1, registry.key(target, n.id), format_sig9(n.score))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::init_embeddings;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-0.5), "-0.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(2.0e12), "2e12");
        let x = 0.123_456_78_f32;
        assert_eq!(format_sig9(x as f64).parse::<f32>().unwrap(), x);
    }

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let mut reg = Registry::new();
        let a = reg.add_type("A").unwrap();
        let b = reg.add_type("B").unwrap();
        for n in ["x", "y"] {
            reg.register(a, n).unwrap();
            reg.register(b, n).unwrap();
        }
        let m =
            RelationMatrix::build(&reg, a, b, [(0, 1, 0.1 + 0.2), (1, 0, 1.0 / 3.0)]).unwrap().with_alpha(0.3).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &reg, &m).unwrap();
        let mut reg2 = Registry::new();
        let m2 = read_matrix(buf.as_slice(), Path::new("mem"), &mut reg2).unwrap();
        let named = |reg: &Registry, m: &RelationMatrix| -> Vec<(String, String, u64)> {
            let mut v: Vec<_> = m
                .cells()
                .iter()
                .map(|c| (reg.key(a, c.row).to_string(), reg.key(b, c.col).to_string(), c.weight.to_bits()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(named(&reg2, &m2), named(&reg, &m));
        assert_eq!(m2.alpha(), 0.3);
    }

    #[test]
    fn matrix_parse_errors_carry_line_numbers() {
        let text = "#matrix A B alpha=1\nx\ty\t1\nx\ty\n";
        let err = read_matrix(text.as_bytes(), Path::new("m.tsv"), &mut Registry::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let text = "#matrix A B\nx\ty\t-2\n";
        let err = read_matrix(text.as_bytes(), Path::new("m.tsv"), &mut Registry::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_matrix("A B\n".as_bytes(), Path::new("m.tsv"), &mut Registry::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn context_type_from_header() {
        let text = "#matrix A A-ctx alpha=0.5\na1\ta2\t2\n";
        let mut reg = Registry::new();
        let m = read_matrix(text.as_bytes(), Path::new("m"), &mut reg).unwrap();
        assert_eq!(reg.semantic_type(m.col_type()), m.row_type());
    }

    #[test]
    fn embeddings_round_trip() {
        let mut reg = Registry::new();
        let a = reg.add_type("A").unwrap();
        let ctx = reg.ensure_context_of(a).unwrap();
        for i in 0..3 {
            reg.register(a, &format!("e {i}")).unwrap();
            reg.register(ctx, &format!("c{i}")).unwrap();
        }
        let emb: EmbeddingSet<f32> = init_embeddings(&reg, 5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut buf = Vec::new();
        write_embeddings(&mut buf, &reg, &emb).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("6 5\n\"A:e 0\" "));
        let (reg2, emb2) = read_embeddings(buf.as_slice(), Path::new("e")).unwrap();
        assert_eq!(emb2, emb);
        assert_eq!(reg2.lookup("A-ctx", "c2").unwrap().1, 2);
    }

    #[test]
    fn embedding_count_mismatch() {
        let text = "2 1\n\"A:x\" 0.5\n";
        assert!(read_embeddings(text.as_bytes(), Path::new("e")).is_err());
        let text = "1 2\n\"A:x\" 0.5\n";
        assert!(read_embeddings(text.as_bytes(), Path::new("e")).is_err());
    }
}
