//! Text serialisers: CSV, `key = value` metadata, JSON lines, gnuplot scripts.
//!
//! CSV numbers use 17 significant digits so every value round-trips exactly;
//! metadata numbers use the shortest round-trip form. Line endings are LF.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest round-trip form, switching to exponent notation for very large
/// or small magnitudes.
pub fn short(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&x| number(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Ordered `key = value` lines in the config file format.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    text: String,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.text, "# {text}");
        self
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.put(key, short(x))
    }

    pub fn finish(&self) -> String {
        self.text.clone()
    }
}

pub fn json_lines<T: Serialize>(items: &[T]) -> Result<String, CliError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).map_err(|e| CliError::Evaluation(format!("serialise: {e}")))?);
        out.push('\n');
    }
    Ok(out)
}

/// `path` with `suffix` appended to the full file name (`out.csv` → `out.csv.meta`).
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// A gnuplot script that draws both sides of the G identity and their gap
/// from the CSV at `data`.
pub fn identity_plot_script(data: &Path, image: &Path) -> String {
    let data = gnuplot_quote(&data.display().to_string());
    let image = gnuplot_quote(&image.display().to_string());
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,700\n\
         set output {image}\n\
         set multiplot layout 2,1\n\
         set xlabel 't'\n\
         set ylabel 'G(t)'\n\
         plot {data} using 1:2 every ::1 with lines title 'quadrature', \\\n     {data} using 1:3 every ::1 with lines dashtype 2 title 'from F'\n\
         set ylabel '|deviation|'\n\
         set logscale y\n\
         plot {data} using 1:($4 > 0 ? $4 : 1/0) every ::1 with lines title 'abs dev'\n\
         unset multiplot\n"
    )
}

fn gnuplot_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}
