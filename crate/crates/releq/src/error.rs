use serde::Serialize;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Io(String),
    Numerical(String),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: &'a str,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }

    /// The single-line JSON record written to stderr.
    pub fn record(&self) -> String {
        let rec = ErrorRecord {
            error: ErrorBody { kind: self.kind(), message: self.message(), exit_code: self.exit_code() },
        };
        serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<releq_core::Error> for CliError {
    fn from(e: releq_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 1);
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 2);
    }

    #[test]
    fn record_is_one_json_line() {
        let r = CliError::Validation("bad \"input\"\nhere".into()).record();
        assert!(!r.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&r).unwrap();
        assert_eq!(v["error"]["exit_code"], 1);
        assert_eq!(v["error"]["kind"], "validation");
    }

    #[test]
    fn core_errors_are_split_by_kind() {
        let acc = releq_core::Error::Accuracy { what: "q", coarse: 1.0, fine: 2.0 };
        assert_eq!(CliError::from(acc).exit_code(), 2);
        let dom = releq_core::Error::Domain("m".into());
        assert_eq!(CliError::from(dom).exit_code(), 1);
    }
}
