use std::fmt;

/// Stable diagnostic codes reported by the parser and validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    Syntax,
    Duplicate,
    Unresolved,
    Width,
    /// Connection to something that cannot be driven from here (an input port, a memory).
    IllegalDrive,
    MultiDrive,
    Undriven,
    CombLoop,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::Syntax => "E_SYNTAX",
            DiagCode::Duplicate => "E_DUPLICATE",
            DiagCode::Unresolved => "E_UNRESOLVED",
            DiagCode::Width => "E_WIDTH",
            DiagCode::IllegalDrive => "E_DRIVE",
            DiagCode::MultiDrive => "E_MULTIDRIVE",
            DiagCode::Undriven => "E_UNDRIVEN",
            DiagCode::CombLoop => "E_COMBLOOP",
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The item inside a module a diagnostic is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    Module,
    Port(usize),
    Decl(usize),
    Stmt(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub message: String,
    pub module: Option<String>,
    pub site: Option<Site>,
}

impl Diagnostic {
    pub fn new(code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic { code, message: message.into(), module: None, site: None }
    }

    pub fn at(mut self, module: &str, site: Site) -> Self {
        self.module = Some(module.to_string());
        self.site = Some(site);
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.code)?;
        if let Some(m) = &self.module {
            write!(f, "in module `{m}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for Diagnostic {}
