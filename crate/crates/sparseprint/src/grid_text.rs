//! Shared text codec for boolean grids.
//!
//! One header line `<TAG> <H> <W> <extra fields...>`, then H lines of W
//! characters from {0,1}. Mask files use tag `MASK`, edge maps use `EDGE`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridParseError {
    #[error("missing or malformed header line")]
    MissingHeader,
    #[error("expected tag {expected}, found {found}")]
    WrongTag { expected: &'static str, found: String },
    #[error("malformed header field: {0}")]
    BadField(String),
    #[error("grid has {found} rows, header declares {expected}")]
    RowCountMismatch { expected: usize, found: usize },
    #[error("row {row} has {found} cells, header declares {expected}")]
    RowWidthMismatch { row: usize, expected: usize, found: usize },
    #[error("invalid cell character {0:?}")]
    BadCell(char),
}

pub(crate) struct GridFile {
    pub height: usize,
    pub width: usize,
    /// Header fields after `<TAG> <H> <W>`.
    pub extra: Vec<String>,
    pub cells: Vec<bool>,
}

pub(crate) fn encode(tag: &str, height: usize, width: usize, extra: &[String], cells: &[bool]) -> String {
    debug_assert_eq!(cells.len(), height * width);
    let mut out = String::with_capacity(64 + height * (width + 1));
    out.push_str(tag);
    out.push_str(&format!(" {height} {width}"));
    for field in extra {
        out.push(' ');
        out.push_str(field);
    }
    out.push('\n');
    for row in 0..height {
        for col in 0..width {
            out.push(if cells[row * width + col] { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub(crate) fn decode(text: &str, tag: &'static str) -> Result<GridFile, GridParseError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(GridParseError::MissingHeader)?;
    let mut fields = header.split_whitespace();

    let found_tag = fields.next().ok_or(GridParseError::MissingHeader)?;
    if found_tag != tag {
        return Err(GridParseError::WrongTag {
            expected: tag,
            found: found_tag.to_string(),
        });
    }
    let height: usize = parse_field(fields.next(), "height")?;
    let width: usize = parse_field(fields.next(), "width")?;
    if height == 0 || width == 0 {
        return Err(GridParseError::BadField(format!(
            "non-positive dimensions {height}x{width}"
        )));
    }
    let extra: Vec<String> = fields.map(str::to_string).collect();

    let mut cells = Vec::with_capacity(height * width);
    let mut rows = 0usize;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        rows += 1;
        if rows > height {
            break;
        }
        let before = cells.len();
        for c in line.chars() {
            match c {
                '0' => cells.push(false),
                '1' => cells.push(true),
                _ => return Err(GridParseError::BadCell(c)),
            }
        }
        let got = cells.len() - before;
        if got != width {
            return Err(GridParseError::RowWidthMismatch {
                row: rows - 1,
                expected: width,
                found: got,
            });
        }
    }
    if rows != height {
        return Err(GridParseError::RowCountMismatch {
            expected: height,
            found: rows,
        });
    }
    Ok(GridFile {
        height,
        width,
        extra,
        cells,
    })
}

fn parse_field(field: Option<&str>, name: &str) -> Result<usize, GridParseError> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| GridParseError::BadField(name.to_string()))
}
