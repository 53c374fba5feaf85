use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use super::{create_buffered, open_buffered};
use crate::error::{Error, Result};

/// Options shared by the text loaders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Lowercase every token while loading. When two tokens collide after
    /// lowercasing, the first occurrence wins.
    pub lowercase: bool,
}

/// A vocabulary paired with one vector per token.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Array2<f32>,
    /// Free-form key/value annotations (language, model, layer). Not stored
    /// in the text format.
    pub metadata: BTreeMap<String, String>,
}

impl EmbeddingTable {
    pub fn new(tokens: Vec<String>, matrix: Array2<f32>) -> Result<Self> {
        if tokens.len() != matrix.nrows() {
            return Err(Error::Shape(format!(
                "{} tokens for {} matrix rows",
                tokens.len(),
                matrix.nrows()
            )));
        }
        if matrix.ncols() == 0 {
            return Err(Error::Shape("embedding dimension must be positive".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), i).is_some() {
                return Err(Error::DuplicateToken {
                    line: i + 2,
                    token: token.clone(),
                });
            }
        }
        Ok(EmbeddingTable {
            tokens,
            index,
            matrix,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn matrix(&self) -> &Array2<f32> {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f32> {
        self.matrix.row(i)
    }

    /// The matrix promoted to `f64`, rows are tokens.
    pub fn to_f64(&self) -> Array2<f64> {
        self.matrix.mapv(f64::from)
    }

    pub fn load_text(path: impl AsRef<Path>, options: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        Self::read_text(open_buffered(path)?, options).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    /// Parses the `n d` header followed by `token v1 .. vd` rows.
    pub fn read_text<R: BufRead>(reader: R, options: LoadOptions) -> Result<Self> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io("<embedding text>", e))?,
            None => {
                return Err(Error::MalformedHeader {
                    line: 1,
                    reason: "empty file".into(),
                })
            }
        };
        let (rows, dim) = parse_header(strip_line_end(&header))?;

        let mut tokens = Vec::with_capacity(rows);
        let mut index = HashMap::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        let mut seen = 0usize;
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 2;
            let line = line.map_err(|e| Error::io("<embedding text>", e))?;
            let line = strip_line_end(&line);
            if line.is_empty() {
                continue;
            }
            seen += 1;
            if seen > rows {
                return Err(Error::Shape(format!(
                    "header declares {rows} rows but line {line_no} is row {seen}"
                )));
            }
            let mut fields = line.split(' ');
            let raw_token = fields.next().unwrap_or_default();
            let token = if options.lowercase {
                raw_token.to_lowercase()
            } else {
                raw_token.to_owned()
            };
            let start = data.len();
            for field in fields {
                let value: f32 = field.parse().map_err(|_| Error::BadValue {
                    line: line_no,
                    value: field.to_owned(),
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite {
                        line: line_no,
                        value: field.to_owned(),
                    });
                }
                data.push(value);
            }
            let arity = data.len() - start;
            if arity != dim {
                return Err(Error::BadArity {
                    line: line_no,
                    expected: format!("1 + {dim}"),
                    found: arity + 1,
                });
            }
            if index.contains_key(&token) {
                if options.lowercase {
                    data.truncate(start);
                    continue;
                }
                return Err(Error::DuplicateToken {
                    line: line_no,
                    token,
                });
            }
            index.insert(token.clone(), tokens.len());
            tokens.push(token);
        }
        if seen != rows {
            return Err(Error::Shape(format!(
                "header declares {rows} rows, file holds {seen}"
            )));
        }
        let matrix = Array2::from_shape_vec((tokens.len(), dim), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(EmbeddingTable {
            tokens,
            index,
            matrix,
            metadata: BTreeMap::new(),
        })
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = create_buffered(path)?;
        self.write_text(&mut writer)
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }

    /// Writes values as the shortest decimal that round-trips `f32`.
    pub fn write_text<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim())?;
        for (token, row) in self.tokens.iter().zip(self.matrix.rows()) {
            writer.write_all(token.as_bytes())?;
            for value in row {
                write!(writer, " {value}")?;
            }
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn strip_line_end(line: &str) -> &str {
    let line = line.strip_suffix('\r').unwrap_or(line);
    // fastText writes a trailing space after the last value.
    line.strip_suffix(' ').unwrap_or(line)
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 2 {
        return Err(Error::MalformedHeader {
            line: 1,
            reason: format!("expected \"n d\", found {line:?}"),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::MalformedHeader {
            line: 1,
            reason: format!("{s:?} is not a count"),
        })
    };
    let rows = parse(fields[0])?;
    let dim = parse(fields[1])?;
    if dim == 0 {
        return Err(Error::MalformedHeader {
            line: 1,
            reason: "dimension must be positive".into(),
        });
    }
    Ok((rows, dim))
}
