pub mod bench;
pub mod config;
pub mod csv_data;
pub mod generate;
pub mod output;

pub use config::DetectorConfig;
pub use csv_data::{load_csv, parse_csv, write_csv, ColumnRef, CsvOptions};
pub use generate::{GeneratedStream, StreamSpec};
