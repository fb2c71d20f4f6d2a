use std::fmt;

use thiserror::Error;

/// A single problem found while loading site content.
///
/// `path` fields locate the problem inside a document (`layers[1].overlays[0]`),
/// prefixed with the file name when the document is not `site.json`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: unknown id(s) {}", .missing.join(", "))]
    Reference { path: String, missing: Vec<String> },
    #[error("{path}: {message}")]
    GeoJson { path: String, message: String },
    #[error("{path}: duplicate id \"{id}\"")]
    DuplicateId { path: String, id: String },
}

impl ContentError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ContentError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable report code for this error class.
    pub fn code(&self) -> &'static str {
        match self {
            ContentError::Io { file, .. } if file == super::MANIFEST_FILE => "E001",
            ContentError::Io { .. } => "E010",
            ContentError::Syntax { .. } => "E002",
            ContentError::Schema { .. } => "E003",
            ContentError::Reference { .. } => "E004",
            ContentError::GeoJson { .. } => "E005",
            ContentError::DuplicateId { .. } => "E006",
        }
    }

    /// Location of the error, as reported in compile reports.
    pub fn location(&self) -> &str {
        match self {
            ContentError::Io { file, .. } | ContentError::Syntax { file, .. } => file,
            ContentError::Schema { path, .. }
            | ContentError::Reference { path, .. }
            | ContentError::GeoJson { path, .. }
            | ContentError::DuplicateId { path, .. } => path,
        }
    }

    /// Prefix the document path with the file it came from.
    pub(crate) fn in_file(self, file: &str) -> Self {
        let join = |path: String| {
            if path.is_empty() {
                file.to_string()
            } else {
                format!("{file}:{path}")
            }
        };
        match self {
            ContentError::Syntax {
                line,
                column,
                message,
                ..
            } => ContentError::Syntax {
                file: file.to_string(),
                line,
                column,
                message,
            },
            ContentError::Schema { path, message } => ContentError::Schema {
                path: join(path),
                message,
            },
            ContentError::Reference { path, missing } => ContentError::Reference {
                path: join(path),
                missing,
            },
            ContentError::GeoJson { path, message } => ContentError::GeoJson {
                path: join(path),
                message,
            },
            ContentError::DuplicateId { path, id } => ContentError::DuplicateId {
                path: join(path),
                id,
            },
            io @ ContentError::Io { .. } => io,
        }
    }
}

/// Every problem found in one pass. Never empty when returned as an error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ContentErrors(pub Vec<ContentError>);

impl ContentErrors {
    pub fn iter(&self) -> std::slice::Iter<'_, ContentError> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> &ContentError {
        &self.0[0]
    }
}

impl fmt::Display for ContentErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, err) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{err}")?;
        }
        Ok(())
    }
}

impl IntoIterator for ContentErrors {
    type Item = ContentError;
    type IntoIter = std::vec::IntoIter<ContentError>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}
