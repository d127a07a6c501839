//! Crowdsourcing batch results (MTurk CSV layout) into [`LabelRecord`]s.

use roadsense_core::labels::{LabelRecord, SidewalkAnswer};

use crate::tables::{parse_csv, Columns, TableError};

pub const REQUIRED_COLUMNS: [&str; 9] = [
    "AssignmentId",
    "WorkerId",
    "Input.segment_id",
    "Answer.potholes",
    "Answer.cracks",
    "Answer.markings_present",
    "Answer.markings_clear",
    "Answer.litter",
    "Answer.sidewalk",
];

#[derive(Debug, thiserror::Error)]
pub enum LabelsError {
    #[error("label batch is missing required column `{0}`")]
    Schema(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<TableError> for LabelsError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::MissingColumn(c) => LabelsError::Schema(c),
            TableError::Csv(e) => LabelsError::Csv(e),
            TableError::Field { line, column, message } => LabelsError::Row {
                row: line,
                message: format!("{column}: {message}"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedLabels {
    pub records: Vec<LabelRecord>,
    /// Rows whose `markings_clear` answer was replaced by `na` because the
    /// worker said no markings were present.
    pub coerced_markings_clear: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Yes,
    No,
    Na,
    NoSidewalk,
}

fn token(raw: &str) -> Option<Token> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "yes" => Some(Token::Yes),
        "no" => Some(Token::No),
        "na" => Some(Token::Na),
        "nosidewalk" => Some(Token::NoSidewalk),
        _ => None,
    }
}

/// Parses a results file. Row numbers in errors are 1-based file lines.
pub fn parse_labels(input: &[u8]) -> Result<ParsedLabels, LabelsError> {
    let table = parse_csv(input)?;
    let cols = Columns::new(&table, &REQUIRED_COLUMNS)?;
    let mut out = ParsedLabels::default();
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        let answer = |column: &str| -> Result<Token, LabelsError> {
            let raw = cols.get(row, column);
            token(raw).ok_or_else(|| LabelsError::Row {
                row: line,
                message: format!("{column}: unknown answer `{raw}` (expected yes, no, na or nosidewalk)"),
            })
        };
        let yes_no = |column: &str| -> Result<bool, LabelsError> {
            match answer(column)? {
                Token::Yes => Ok(true),
                Token::No => Ok(false),
                _ => Err(LabelsError::Row {
                    row: line,
                    message: format!("{column}: `{}` is not a yes/no answer", cols.get(row, column)),
                }),
            }
        };
        let nonempty = |column: &str| -> Result<String, LabelsError> {
            let v = cols.get(row, column);
            if v.is_empty() {
                return Err(LabelsError::Row {
                    row: line,
                    message: format!("{column} is empty"),
                });
            }
            Ok(v.to_string())
        };

        let markings_present = yes_no("Answer.markings_present")?;
        let clear = answer("Answer.markings_clear")?;
        let markings_clear = match (markings_present, clear) {
            (false, Token::Na) => None,
            (false, _) => {
                out.coerced_markings_clear += 1;
                None
            }
            (true, Token::Yes) => Some(true),
            (true, Token::No) => Some(false),
            (true, _) => {
                return Err(LabelsError::Row {
                    row: line,
                    message: "Answer.markings_clear must be yes or no when markings are present".into(),
                })
            }
        };
        let sidewalk_paved = match answer("Answer.sidewalk")? {
            Token::Yes => SidewalkAnswer::Paved,
            Token::No => SidewalkAnswer::Unpaved,
            Token::NoSidewalk => SidewalkAnswer::NoSidewalk,
            Token::Na => {
                return Err(LabelsError::Row {
                    row: line,
                    message: "Answer.sidewalk: `na` is not valid (use nosidewalk)".into(),
                })
            }
        };
        out.records.push(LabelRecord {
            assignment_id: nonempty("AssignmentId")?,
            worker_id: nonempty("WorkerId")?,
            segment_id: nonempty("Input.segment_id")?,
            potholes: yes_no("Answer.potholes")?,
            cracks: yes_no("Answer.cracks")?,
            markings_present,
            markings_clear,
            litter: yes_no("Answer.litter")?,
            sidewalk_paved,
        });
    }
    Ok(out)
}
