use std::io::{BufRead, Write as _};

use anyhow::{bail, Context, Result};
use chromoseg::{train_reference, write_reference, GenotypeClass};

use crate::config::FileConfig;
use crate::output::{header, OutputSet};
use crate::TrainRefArgs;

const KEYS: &[&str] = &["input", "out"];

fn read_triples(path: &std::path::Path) -> Result<Vec<(GenotypeClass, GenotypeClass, f64)>> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open training table {}", path.display()))?;
    let reader = std::io::BufReader::new(file);
    let mut triples = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            let columns: Vec<&str> = line.trim_end().split('\t').collect();
            if columns != ["called", "truth", "score"] {
                bail!("line {lineno}: expected header 'called<TAB>truth<TAB>score'");
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != 3 {
            bail!("line {lineno}: expected 3 columns, found {}", fields.len());
        }
        let called = GenotypeClass::from_token(fields[0])
            .with_context(|| format!("line {lineno}: unknown called class '{}'", fields[0]))?;
        let truth = GenotypeClass::from_token(fields[1])
            .with_context(|| format!("line {lineno}: unknown truth class '{}'", fields[1]))?;
        let score: f64 = fields[2]
            .parse()
            .with_context(|| format!("line {lineno}: unparseable score '{}'", fields[2]))?;
        triples.push((called, truth, score));
    }
    if triples.is_empty() {
        bail!("training table contains no data rows");
    }
    Ok(triples)
}

pub fn run(args: TrainRefArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    file.assert_known(KEYS)?;
    let input = match args.input.or(file.get("input")?) {
        Some(p) => p,
        None => bail!("missing required --input triples table"),
    };
    let out = match args.out.or(file.get("out")?) {
        Some(p) => p,
        None => bail!("missing required --out directory"),
    };

    let triples = read_triples(&input)?;
    eprintln!("training on {} labeled triples", triples.len());
    let model = train_reference(&triples)?;

    let resolved = [("input", input.display().to_string()), ("triples", triples.len().to_string())];
    let head = header("train-ref", 0, &resolved);
    let mut buf = Vec::new();
    write_reference(&mut buf, &model, &[head])?;
    let mut outputs = OutputSet::new(&out);
    outputs.add("reference.tsv", buf);
    for path in outputs.flush()? {
        writeln!(std::io::stderr(), "wrote {}", path.display())?;
    }
    Ok(())
}
