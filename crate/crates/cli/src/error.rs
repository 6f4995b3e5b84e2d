use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nbrw_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("compute budget exceeded: {ops} operations requested, budget is {budget}")]
    BudgetExceeded { ops: u128, budget: u64 },
    #[error("configuration: {0}")]
    Config(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
