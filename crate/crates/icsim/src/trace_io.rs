// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Voltage traces as CSV: a `time_us,voltage_v` header, then one sample
//! per line with strictly increasing times.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use icsim_core::power::PowerTrace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Sample {
    time_us: f64,
    voltage_v: f64,
}

pub fn read_trace(r: impl Read) -> Result<PowerTrace> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_us", "voltage_v"] {
        bail!("trace header must be `time_us,voltage_v`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let mut samples = Vec::new();
    for (i, row) in rdr.deserialize::<Sample>().enumerate() {
        let s = row.with_context(|| format!("trace sample {}", i + 1))?;
        samples.push((s.time_us, s.voltage_v));
    }
    Ok(PowerTrace::from_samples(&samples)?)
}

pub fn load_trace(path: &Path) -> Result<PowerTrace> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trace(f).with_context(|| format!("reading {}", path.display()))
}

pub fn write_trace(t: &PowerTrace, w: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for (time_us, voltage_v) in t.samples() {
        wtr.serialize(Sample { time_us, voltage_v })?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = PowerTrace::from_samples(&[(0.0, 0.0), (12.5, 3.3), (100.0, 1.25)]).unwrap();
        let mut buf = Vec::new();
        write_trace(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_us,voltage_v\n0.0,0.0\n12.5,3.3\n"), "{text}");
        assert_eq!(read_trace(&buf[..]).unwrap(), t);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_trace("t,v\n0,1\n".as_bytes()).is_err());
        assert!(read_trace("time_us,voltage_v\n".as_bytes()).is_err());
        assert!(read_trace("time_us,voltage_v\n5,1\n2,1\n".as_bytes()).is_err());
        assert!(read_trace("time_us,voltage_v\n0,abc\n".as_bytes()).is_err());
    }
}
