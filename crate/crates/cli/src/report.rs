//! Error taxonomy mapped to exit codes, and the two output emitters. The
//! exit codes separate bad input (1) from a violated exact identity (2,
//! always an implementation bug) and an exhausted resource budget (3).

use abelia_core::abelian_fields::FieldError;
use abelia_core::bound_calculus::BoundError;
use abelia_core::group_module_algebra::ModuleError;
use abelia_core::prime_counting::CountError;
use abelia_core::quadratic_class_groups::{CacheError, FormError};
use abelia_core::torsion_pipeline::TorsionError;

#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments or configuration.
    Usage(String),
    /// An exact identity failed to hold.
    Identity(String),
    /// A configured bound (sieve limit, disc bound, enumeration budget,
    /// cache integrity) was exceeded.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Identity(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    /// One JSON record for the diagnostic stream.
    pub fn structured(&self) -> String {
        let (class, message) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Identity(m) => ("identity", m),
            CliError::Resource(m) => ("resource", m),
        };
        serde_json::json!({ "error": class, "message": message }).to_string()
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<CountError> for CliError {
    fn from(e: CountError) -> CliError {
        match e {
            CountError::SieveTooSmall { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> CliError {
        match e {
            FormError::BoundExceeded { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<TorsionError> for CliError {
    fn from(e: TorsionError) -> CliError {
        match e {
            TorsionError::BoundExceeded { .. } => CliError::Resource(e.to_string()),
            TorsionError::IdentityViolation(_) => CliError::Identity(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ModuleError> for CliError {
    fn from(e: ModuleError) -> CliError {
        match e {
            ModuleError::BudgetExceeded { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> CliError {
        CliError::Resource(e.to_string())
    }
}

/// Fixed 12-significant-digit decimal rendering, so equal inputs always
/// produce byte-equal cells.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = 1 + exp;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take(point.unsigned_abs() as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat('0').take(point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

/// Space-joined list cell, the flat encoding for vectors inside CSV.
pub fn joined<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn print_csv(header: &[&str], rows: &[Vec<String>]) {
    println!("{}", header.join(","));
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
        println!("{}", line.join(","));
    }
}

pub fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable value"));
}
