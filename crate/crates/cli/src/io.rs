//! Portfolio CSV ingestion and emission.
//!
//! Input schema (UTF-8, header row required, `.` decimal separator, lines
//! starting with `#` ignored):
//!
//! - loans: `loan_id,ead,annual_rate,lgd_wd` — `lgd_wd` may be empty.
//! - recoveries: `loan_id,month_after_default,amount`.
//!
//! Structural problems (missing columns, unparseable fields, unknown loan
//! ids, non-positive EAD) fail the load with the offending line number.
//! Recovery rows past the workout horizon are dropped but always counted in
//! the diagnostics, never silently.

use std::collections::HashMap;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};
use lgdid_core::LoanRecord;

use crate::error::CliError;
use crate::output::write_atomic;

pub const LOANS_SCHEMA: &str = "lgdid.loans.v1";
pub const RECOVERIES_SCHEMA: &str = "lgdid.recoveries.v1";

/// Parse diagnostics of one portfolio load.
#[derive(Debug, Clone, Default)]
pub struct PortfolioDiagnostics {
    pub loan_rows: usize,
    pub recovery_rows: usize,
    /// Rows that were dropped with a reason (e.g. past the horizon).
    pub rejected: Vec<RejectedRow>,
}

#[derive(Debug, Clone)]
pub struct RejectedRow {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadedPortfolio {
    pub loans: Vec<LoanRecord>,
    pub diagnostics: PortfolioDiagnostics,
}

struct Columns {
    indices: Vec<usize>,
}

fn find_columns(
    path: &Path,
    headers: &StringRecord,
    required: &[&str],
    optional: &[&str],
) -> Result<(Columns, Vec<Option<usize>>), CliError> {
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let mut indices = Vec::with_capacity(required.len());
    for name in required {
        match position(name) {
            Some(i) => indices.push(i),
            None => {
                return Err(CliError::MissingColumn {
                    file: path.display().to_string(),
                    column: (*name).to_string(),
                })
            }
        }
    }
    let optional = optional.iter().map(|name| position(name)).collect();
    Ok((Columns { indices }, optional))
}

fn field(record: &StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

fn parse_f64(file: &Path, line: u64, name: &str, raw: &str) -> Result<f64, CliError> {
    raw.parse::<f64>().map_err(|_| CliError::MalformedRow {
        file: file.display().to_string(),
        line,
        reason: format!("cannot parse {name} from '{raw}'"),
    })
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Loads and validates a portfolio from the loans and recoveries files.
/// Same-month payments are aggregated and recoveries past `horizon_months`
/// are dropped (and reported). Loans without a `lgd_wd` value receive the
/// fallback, when one is configured.
pub fn load_portfolio(
    loans_path: &Path,
    recoveries_path: &Path,
    horizon_months: u32,
    lgd_wd_fallback: Option<f64>,
) -> Result<LoadedPortfolio, CliError> {
    let mut diagnostics = PortfolioDiagnostics::default();

    // Loans file.
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(loans_path)
        .map_err(|e| CliError::Csv {
            path: loans_path.display().to_string(),
            source: e,
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: loans_path.display().to_string(),
            source: e,
        })?
        .clone();
    let (cols, optional) = find_columns(
        loans_path,
        &headers,
        &["loan_id", "ead", "annual_rate"],
        &["lgd_wd"],
    )?;
    let lgd_wd_col = optional[0];

    struct Draft {
        ead: f64,
        annual_rate: f64,
        lgd_wd: Option<f64>,
        payments: Vec<(u32, f64)>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut drafts: HashMap<String, Draft> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: loans_path.display().to_string(),
            source: e,
        })?;
        let line = line_of(&record);
        diagnostics.loan_rows += 1;
        let loan_id = field(&record, cols.indices[0]).to_string();
        if loan_id.is_empty() {
            return Err(CliError::MalformedRow {
                file: loans_path.display().to_string(),
                line,
                reason: "empty loan_id".to_string(),
            });
        }
        if drafts.contains_key(&loan_id) {
            return Err(CliError::DuplicateLoan {
                file: loans_path.display().to_string(),
                line,
                loan_id,
            });
        }
        let ead = parse_f64(loans_path, line, "ead", field(&record, cols.indices[1]))?;
        if !ead.is_finite() || ead <= 0.0 {
            return Err(CliError::MalformedRow {
                file: loans_path.display().to_string(),
                line,
                reason: format!("ead must be strictly positive, got {ead}"),
            });
        }
        let annual_rate = parse_f64(
            loans_path,
            line,
            "annual_rate",
            field(&record, cols.indices[2]),
        )?;
        if !annual_rate.is_finite() || annual_rate < 0.0 {
            return Err(CliError::MalformedRow {
                file: loans_path.display().to_string(),
                line,
                reason: format!("annual_rate must be non-negative, got {annual_rate}"),
            });
        }
        let lgd_wd = match lgd_wd_col.map(|i| field(&record, i)) {
            Some("") | None => lgd_wd_fallback,
            Some(raw) => {
                let p = parse_f64(loans_path, line, "lgd_wd", raw)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::MalformedRow {
                        file: loans_path.display().to_string(),
                        line,
                        reason: format!("lgd_wd must lie in [0, 1], got {p}"),
                    });
                }
                Some(p)
            }
        };
        order.push(loan_id.clone());
        drafts.insert(
            loan_id,
            Draft {
                ead,
                annual_rate,
                lgd_wd,
                payments: Vec::new(),
            },
        );
    }

    // Recoveries file.
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(recoveries_path)
        .map_err(|e| CliError::Csv {
            path: recoveries_path.display().to_string(),
            source: e,
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: recoveries_path.display().to_string(),
            source: e,
        })?
        .clone();
    let (cols, _) = find_columns(
        recoveries_path,
        &headers,
        &["loan_id", "month_after_default", "amount"],
        &[],
    )?;

    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: recoveries_path.display().to_string(),
            source: e,
        })?;
        let line = line_of(&record);
        diagnostics.recovery_rows += 1;
        let loan_id = field(&record, cols.indices[0]);
        let Some(draft) = drafts.get_mut(loan_id) else {
            return Err(CliError::OrphanRecovery {
                file: recoveries_path.display().to_string(),
                line,
                loan_id: loan_id.to_string(),
            });
        };
        let raw_month = field(&record, cols.indices[1]);
        let month: u32 = raw_month.parse().map_err(|_| CliError::MalformedRow {
            file: recoveries_path.display().to_string(),
            line,
            reason: format!("cannot parse month_after_default from '{raw_month}'"),
        })?;
        let amount = parse_f64(
            recoveries_path,
            line,
            "amount",
            field(&record, cols.indices[2]),
        )?;
        if !amount.is_finite() || amount < 0.0 {
            return Err(CliError::MalformedRow {
                file: recoveries_path.display().to_string(),
                line,
                reason: format!("amount must be non-negative, got {amount}"),
            });
        }
        if month > horizon_months {
            diagnostics.rejected.push(RejectedRow {
                file: recoveries_path.display().to_string(),
                line,
                reason: format!("month {month} past the {horizon_months}-month horizon"),
            });
            continue;
        }
        draft.payments.push((month, amount));
    }

    let loans = order
        .into_iter()
        .map(|loan_id| {
            let draft = drafts.remove(&loan_id).expect("draft exists for every id");
            LoanRecord::new(
                loan_id,
                draft.ead,
                draft.annual_rate,
                &draft.payments,
                draft.lgd_wd,
            )
            .map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(LoadedPortfolio { loans, diagnostics })
}

/// Writes a portfolio in the input CSV schema (atomically). Float fields use
/// the shortest representation that round-trips, so a rewritten portfolio
/// loads back field-for-field equal.
pub fn write_portfolio(
    loans: &[LoanRecord],
    loans_path: &Path,
    recoveries_path: &Path,
) -> Result<(), CliError> {
    let mut loans_csv = format!("# lgdid-schema: {LOANS_SCHEMA}\nloan_id,ead,annual_rate,lgd_wd\n");
    for loan in loans {
        let lgd_wd = loan.lgd_wd.map(|p| p.to_string()).unwrap_or_default();
        loans_csv.push_str(&format!(
            "{},{},{},{}\n",
            loan.loan_id, loan.ead, loan.annual_rate, lgd_wd
        ));
    }
    let mut recoveries_csv = format!(
        "# lgdid-schema: {RECOVERIES_SCHEMA}\nloan_id,month_after_default,amount\n"
    );
    for loan in loans {
        for &(month, amount) in &loan.recoveries {
            recoveries_csv.push_str(&format!("{},{},{}\n", loan.loan_id, month, amount));
        }
    }
    write_atomic(loans_path, loans_csv.as_bytes())?;
    write_atomic(recoveries_path, recoveries_csv.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::TempDir;

    fn write_file(dir: &TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_the_documented_example() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(&dir, "loans.csv", "loan_id,ead,annual_rate\nL1,100,0.12\n");
        let recoveries = write_file(
            &dir,
            "recoveries.csv",
            "loan_id,month_after_default,amount\nL1,12,112\n",
        );
        let loaded = load_portfolio(&loans, &recoveries, 124, None).unwrap();
        assert_eq!(loaded.loans.len(), 1);
        let loan = &loaded.loans[0];
        assert_eq!(loan.ead, 100.0);
        assert_eq!(loan.annual_rate, 0.12);
        assert_eq!(loan.recoveries, vec![(12, 112.0)]);
        assert_eq!(loaded.diagnostics.loan_rows, 1);
        assert_eq!(loaded.diagnostics.recovery_rows, 1);
        assert!(loaded.diagnostics.rejected.is_empty());
    }

    #[test]
    fn empty_recoveries_file_means_no_payments() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(
            &dir,
            "loans.csv",
            "loan_id,ead,annual_rate,lgd_wd\nL1,100,0.1,0.6\n",
        );
        let recoveries = write_file(&dir, "recoveries.csv", "loan_id,month_after_default,amount\n");
        let loaded = load_portfolio(&loans, &recoveries, 124, None).unwrap();
        assert!(loaded.loans[0].recoveries.is_empty());
        assert_eq!(loaded.loans[0].lgd_wd, Some(0.6));
    }

    #[test]
    fn orphan_recovery_names_the_line() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(&dir, "loans.csv", "loan_id,ead,annual_rate\nL1,100,0.12\n");
        let recoveries = write_file(
            &dir,
            "recoveries.csv",
            "loan_id,month_after_default,amount\nL1,3,10\nL9,4,10\n",
        );
        let err = load_portfolio(&loans, &recoveries, 124, None).unwrap_err();
        match err {
            CliError::OrphanRecovery { line, loan_id, .. } => {
                assert_eq!(line, 3);
                assert_eq!(loan_id, "L9");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_and_invalid_rows_name_the_line() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(
            &dir,
            "loans.csv",
            "loan_id,ead,annual_rate\nL1,100,0.12\nL2,-5,0.1\n",
        );
        let recoveries = write_file(&dir, "recoveries.csv", "loan_id,month_after_default,amount\n");
        match load_portfolio(&loans, &recoveries, 124, None).unwrap_err() {
            CliError::MalformedRow { line, reason, .. } => {
                assert_eq!(line, 3);
                assert!(reason.contains("ead"));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let bad_month = write_file(
            &dir,
            "recoveries_bad.csv",
            "loan_id,month_after_default,amount\nL1,three,10\n",
        );
        let loans_ok = write_file(&dir, "loans_ok.csv", "loan_id,ead,annual_rate\nL1,100,0.12\n");
        assert!(matches!(
            load_portfolio(&loans_ok, &bad_month, 124, None).unwrap_err(),
            CliError::MalformedRow { line: 2, .. }
        ));
    }

    #[test]
    fn duplicate_loans_and_missing_columns_error() {
        let dir = TempDir::new().unwrap();
        let dup = write_file(
            &dir,
            "loans.csv",
            "loan_id,ead,annual_rate\nL1,100,0.12\nL1,50,0.1\n",
        );
        let recoveries = write_file(&dir, "recoveries.csv", "loan_id,month_after_default,amount\n");
        assert!(matches!(
            load_portfolio(&dup, &recoveries, 124, None).unwrap_err(),
            CliError::DuplicateLoan { line: 3, .. }
        ));

        let missing = write_file(&dir, "loans2.csv", "loan_id,balance\nL1,100\n");
        assert!(matches!(
            load_portfolio(&missing, &recoveries, 124, None).unwrap_err(),
            CliError::MissingColumn { .. }
        ));
    }

    #[test]
    fn horizon_overflow_rows_are_counted_not_dropped_silently() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(&dir, "loans.csv", "loan_id,ead,annual_rate\nL1,100,0.0\n");
        let recoveries = write_file(
            &dir,
            "recoveries.csv",
            "loan_id,month_after_default,amount\nL1,3,10\nL1,200,10\n",
        );
        let loaded = load_portfolio(&loans, &recoveries, 124, None).unwrap();
        assert_eq!(loaded.loans[0].recoveries, vec![(3, 10.0)]);
        assert_eq!(loaded.diagnostics.rejected.len(), 1);
        assert!(loaded.diagnostics.rejected[0].reason.contains("124"));
    }

    #[test]
    fn fallback_fills_missing_priors_only() {
        let dir = TempDir::new().unwrap();
        let loans = write_file(
            &dir,
            "loans.csv",
            "loan_id,ead,annual_rate,lgd_wd\nL1,100,0.1,\nL2,100,0.1,0.4\n",
        );
        let recoveries = write_file(&dir, "recoveries.csv", "loan_id,month_after_default,amount\n");
        let loaded = load_portfolio(&loans, &recoveries, 124, Some(0.9)).unwrap();
        assert_eq!(loaded.loans[0].lgd_wd, Some(0.9));
        assert_eq!(loaded.loans[1].lgd_wd, Some(0.4));
    }

    #[test]
    fn write_then_load_round_trips() {
        let loans = vec![
            LoanRecord::new("A", 12345.678901234567, 0.1234567890123, &[(1, 10.5)], Some(0.6))
                .unwrap(),
            LoanRecord::new("B", 0.1 + 0.2, 0.0, &[(3, 1.0 / 3.0), (7, 2e-12)], None).unwrap(),
        ];
        let dir = TempDir::new().unwrap();
        let lp = dir.path().join("loans.csv");
        let rp = dir.path().join("recoveries.csv");
        write_portfolio(&loans, &lp, &rp).unwrap();
        let loaded = load_portfolio(&lp, &rp, 124, None).unwrap();
        assert_eq!(loaded.loans, loans);
    }
}
