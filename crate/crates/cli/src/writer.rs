//! Deterministic artifact writers: JSON records (one per line) and CSV
//! with a comment audit header. Every float is printed with 17 significant
//! digits so identical runs produce byte-identical files.

use serde::Serialize;
use std::io::{self, Write};

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: io::Write + ?Sized>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: io::Write + ?Sized>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
}

/// One JSON line with fixed float formatting.
pub fn json_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value
        .serialize(&mut ser)
        .expect("artifact records serialize");
    String::from_utf8(buf).expect("serde_json emits utf-8")
}

/// Format a float the way every artifact does.
pub fn num(value: f64) -> String {
    format!("{value:.16e}")
}

/// Tagged record: {"record": tag, ...body...}.
pub fn tagged<T: Serialize>(tag: &str, body: &T) -> String {
    #[derive(Serialize)]
    struct Tagged<'a, T> {
        record: &'a str,
        #[serde(flatten)]
        body: &'a T,
    }
    json_line(&Tagged { record: tag, body })
}

pub struct Artifact {
    out: Box<dyn Write>,
    pub csv: bool,
}

impl Artifact {
    pub fn create(path: Option<&str>, csv: bool) -> io::Result<Artifact> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(io::BufWriter::new(io::stdout())),
        };
        Ok(Artifact { out, csv })
    }

    pub fn line(&mut self, text: &str) -> io::Result<()> {
        writeln!(self.out, "{text}")
    }

    /// Audit header: the full resolved configuration, embedded as a JSON
    /// record or as CSV comment lines.
    pub fn header<T: Serialize>(&mut self, config: &T) -> io::Result<()> {
        if self.csv {
            let json = json_line(config);
            writeln!(self.out, "# config = {json}")
        } else {
            self.line(&tagged("config", config))
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}
