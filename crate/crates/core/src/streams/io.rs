//! Newline-delimited decimal item ids. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hashing::MERSENNE_61;
use crate::streams::Stream;

pub fn parse_stream<R: BufRead>(reader: R) -> Result<Stream> {
    let mut stream = Stream::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.starts_with('#') {
            continue;
        }
        let value: u64 = text.parse().map_err(|e| Error::Parse {
            line: lineno,
            message: format!("invalid item id {text:?}: {e}"),
        })?;
        if value >= MERSENNE_61 {
            return Err(Error::Range {
                line: lineno,
                value,
            });
        }
        stream.push(value)?;
    }
    Ok(stream)
}

pub fn read_stream<P: AsRef<Path>>(path: P) -> Result<Stream> {
    parse_stream(BufReader::new(File::open(path)?))
}

pub fn write_items<W: Write>(stream: &Stream, mut out: W) -> Result<()> {
    for run in stream.runs() {
        let line = format!("{}\n", run.item);
        for _ in 0..run.count {
            out.write_all(line.as_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_stream<P: AsRef<Path>>(stream: &Stream, path: P) -> Result<()> {
    write_items(stream, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::gen_zipf;

    #[test]
    fn parses_simple_file() {
        let s = parse_stream("1\n2\n1\n".as_bytes()).unwrap();
        assert_eq!(s.items().collect::<Vec<_>>(), vec![1, 2, 1]);
    }

    #[test]
    fn comments_and_missing_trailing_newline() {
        let s = parse_stream("# header\n5\n# mid\n6".as_bytes()).unwrap();
        assert_eq!(s.items().collect::<Vec<_>>(), vec![5, 6]);
    }

    #[test]
    fn empty_input_is_an_empty_stream() {
        assert!(parse_stream("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_its_number() {
        match parse_stream("1\n2\nthree\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_stream("1\n\n2\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_stream("-4\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ids_outside_the_field_are_rejected() {
        let text = format!("7\n{}\n", MERSENNE_61);
        assert!(matches!(
            parse_stream(text.as_bytes()),
            Err(Error::Range { line: 2, .. })
        ));
    }

    #[test]
    fn zipf_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.txt");
        let s = gen_zipf(100, 1000, 1.1, 7).unwrap();
        write_stream(&s, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_stream(&path).unwrap();
        assert_eq!(back, s);
        write_stream(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }
}
