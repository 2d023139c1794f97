//! Daily gridded fields: storage, file formats, derived quantities and
//! annual event series.

mod agf;
mod field;
mod series;

pub use agf::{decode_bin, encode_bin, load_field, store_field, FieldFormat, AGF_HEADER_LEN, AGF_MAGIC};
pub use field::{compute_anomaly, is_missing, wind_speed, AnomalyField, DailyField, DAYS_PER_YEAR, MISSING};
pub use series::{load_annual_series, store_annual_series, AnnualSeries};
