use sbc_core::SbcError;

/// A failure reported as `sbc: error[class]: message` on one line.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub class: String,
    pub message: String,
}

impl Failure {
    pub fn new(class: &str, message: impl Into<String>) -> Self {
        Failure { class: class.into(), message: message.into() }
    }

    pub fn line(&self) -> String {
        let msg: String = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("sbc: error[{}]: {msg}", self.class)
    }
}

impl From<SbcError> for Failure {
    fn from(e: SbcError) -> Self {
        Failure::new(e.class(), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("io", e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::new("csv", e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new("json", e.to_string())
    }
}
