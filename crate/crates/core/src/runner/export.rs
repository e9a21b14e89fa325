//! Serialization of time series and manifests.

use std::io::Write;

use serde::Serialize;

use super::{RunManifest, Sample, Series, COLUMNS};
use crate::error::{Error, Result};

/// CSV with a header row and `%.16e` values.
pub fn write_series_csv<W: Write>(series: &Series, mut out: W) -> Result<()> {
    writeln!(out, "{}", COLUMNS.join(","))?;
    let mut line = String::new();
    for sample in &series.samples {
        line.clear();
        for (k, v) in sample.values().iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SeriesDocument<'a> {
    manifest: RunManifest,
    columns: [&'static str; 8],
    samples: &'a [Sample],
}

/// JSON document `{manifest, columns, samples}`. The wall time is left out so
/// identical runs give identical bytes.
pub fn write_series_json<W: Write>(series: &Series, out: W) -> Result<()> {
    let doc = SeriesDocument {
        manifest: series.manifest.without_timing(),
        columns: COLUMNS,
        samples: &series.samples,
    };
    write_json(&doc, out)
}

pub fn write_manifest<W: Write>(manifest: &RunManifest, out: W) -> Result<()> {
    write_json(manifest, out)
}

fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{presets, run};
    use super::*;

    fn small() -> Series {
        let mut c = presets::find("fig5a").unwrap().config().unwrap();
        c.time_axis.samples = 4;
        run(&c).unwrap()
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_series_csv(&small(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "lambda_t,alpha,inversion,s_vn_atom,s_vn_field,s_lin_2,s_lin_3,norm_error");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0,"));
        assert_eq!(lines[4].split(',').count(), 8);
    }

    #[test]
    fn json_is_stable_and_untimed() {
        let s = small();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_series_json(&s, &mut a).unwrap();
        let mut other = s.clone();
        other.manifest.wall_time_s = Some(123.0);
        write_series_json(&other, &mut b).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        assert!(v["manifest"].get("wall_time_s").is_none());
        assert_eq!(v["samples"].as_array().unwrap().len(), 4);
        assert_eq!(v["columns"][7], "norm_error");
    }
}
