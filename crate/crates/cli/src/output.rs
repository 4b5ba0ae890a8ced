//! File formats written by the CLI.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) in both JSON
//! and CSV so that every value round-trips exactly. Files are written to a
//! temporary file in the destination directory and renamed into place.

use std::io::{self, Write};
use std::path::Path;

use collapse_lab::experiment::{
    EnsembleReport, HistogramBin, LudersTable, OutcomeRecord, SphereHistogram,
};
use collapse_lab::qstate::{self, EnergyLevel};
use collapse_lab::reduction::SeriesPoint;
use collapse_lab::stats::Estimate;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use tempfile::NamedTempFile;

use crate::config::EchoedConfig;

pub const REPORT_FILE: &str = "report.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const MARTINGALE_FILE: &str = "martingale.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with every float at 17 significant digits.
struct SignificantDigits(PrettyFormatter<'static>);

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SignificantDigits(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    buf
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct FrequencyEntry {
    pub count: usize,
    pub frequency: f64,
    pub se: f64,
}

#[derive(Debug, Serialize)]
pub struct Frequencies {
    #[serde(rename = "+1")]
    pub plus: FrequencyEntry,
    #[serde(rename = "0")]
    pub zero: FrequencyEntry,
    #[serde(rename = "-1")]
    pub minus: FrequencyEntry,
}

/// Projection-postulate table plus the values of the three statistics it
/// predicts.
#[derive(Debug, Serialize)]
pub struct LudersJson {
    #[serde(flatten)]
    pub table: LudersTable,
    pub p: Option<f64>,
    pub conservation: f64,
    pub s2: Option<f64>,
}

impl LudersJson {
    pub fn new(table: LudersTable) -> Self {
        let sigma = qstate::sigma_1z();
        let conservation = table
            .outcomes
            .iter()
            .map(|o| o.probability * qstate::expectation(&o.state, &sigma).unwrap_or(f64::NAN))
            .sum();
        let zero = table.outcome(EnergyLevel::Zero);
        let p = zero.map(|o| o.state.amplitude(qstate::UP_DOWN).norm_sqr());
        let s2 = zero.and_then(|o| qstate::expectation(&o.state, &qstate::s_squared()).ok());
        Self {
            table,
            p,
            conservation,
            s2,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportJson {
    pub config: EchoedConfig,
    pub frequencies: Frequencies,
    pub p_hat: Option<f64>,
    pub p_hat_se: Option<f64>,
    pub conservation: Option<f64>,
    pub conservation_se: Option<f64>,
    pub s2: Option<f64>,
    pub s2_se: Option<f64>,
    pub n_total: usize,
    pub n_degenerate: usize,
    pub n_failed: usize,
    pub luders_reference: LudersJson,
}

impl ReportJson {
    pub fn new(config: EchoedConfig, report: &EnsembleReport, luders: LudersTable) -> Self {
        let entry = |level| {
            let f = report.frequency(level);
            FrequencyEntry {
                count: f.count,
                frequency: f.frequency,
                se: f.se,
            }
        };
        let split = |e: Option<Estimate>| (e.map(|e| e.mean), e.map(|e| e.se));
        let (p_hat, p_hat_se) = split(report.p_hat);
        let (conservation, conservation_se) = split(report.conservation);
        let (s2, s2_se) = split(report.s2);
        Self {
            config,
            frequencies: Frequencies {
                plus: entry(EnergyLevel::Plus),
                zero: entry(EnergyLevel::Zero),
                minus: entry(EnergyLevel::Minus),
            },
            p_hat,
            p_hat_se,
            conservation,
            conservation_se,
            s2,
            s2_se,
            n_total: report.n_total,
            n_degenerate: report.n_degenerate,
            n_failed: report.n_failed,
            luders_reference: LudersJson::new(luders),
        }
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> io::Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        fill(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

pub const RECORD_COLUMNS: [&str; 14] = [
    "index",
    "seed",
    "eigenvalue",
    "steps",
    "theta",
    "phi",
    "re0",
    "im0",
    "re1",
    "im1",
    "re2",
    "im2",
    "re3",
    "im3",
];

pub fn records_csv(records: &[OutcomeRecord]) -> io::Result<Vec<u8>> {
    csv_bytes(&RECORD_COLUMNS, |w| {
        for r in records {
            let mut row = vec![
                r.index.to_string(),
                r.seed.to_string(),
                r.eigenvalue.as_i8().to_string(),
                r.steps.to_string(),
            ];
            match r.sphere {
                Some(s) => row.extend([fmt_f64(s.theta), fmt_f64(s.phi)]),
                None => row.extend([String::new(), String::new()]),
            }
            for z in r.final_state.to_array() {
                row.extend([fmt_f64(z.re), fmt_f64(z.im)]);
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn martingale_csv(energy: &[SeriesPoint], variance: &[SeriesPoint]) -> io::Result<Vec<u8>> {
    csv_bytes(
        &[
            "time",
            "energy_mean",
            "energy_se",
            "variance_mean",
            "variance_se",
        ],
        |w| {
            for (e, v) in energy.iter().zip(variance) {
                w.write_record([
                    fmt_f64(e.time),
                    fmt_f64(e.estimate.mean),
                    fmt_f64(e.estimate.se),
                    fmt_f64(v.estimate.mean),
                    fmt_f64(v.estimate.se),
                ])?;
            }
            Ok(())
        },
    )
}

pub fn histogram_csv(hist: &SphereHistogram) -> io::Result<Vec<u8>> {
    csv_bytes(
        &[
            "cos_theta_low",
            "cos_theta_high",
            "phi_low",
            "phi_high",
            "count",
        ],
        |w| {
            for HistogramBin {
                z_low,
                z_high,
                phi_low,
                phi_high,
                count,
            } in hist.bins()
            {
                w.write_record([
                    fmt_f64(z_low),
                    fmt_f64(z_high),
                    fmt_f64(phi_low),
                    fmt_f64(phi_high),
                    count.to_string(),
                ])?;
            }
            Ok(())
        },
    )
}
