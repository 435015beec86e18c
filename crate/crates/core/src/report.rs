//! CSV output for sweeps.
//!
//! Two files per sweep: one row per run (`axis_value,seed,num_oga,num_phy,probability`)
//! and one aggregate row per grid value (`axis_value,n,mean_probability,std_probability`).
//! Floats are written in shortest round-trip form, so identical inputs give
//! identical bytes.

use std::io::Write;

use crate::harness::SweepResult;

pub fn write_rows<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &result.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(result: &SweepResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for agg in &result.aggregates {
        w.serialize(agg)?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_csv(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_rows(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

pub fn summary_csv(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_summary(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{SweepAggregate, SweepAxis, SweepRow};

    fn sample() -> SweepResult {
        SweepResult {
            axis: SweepAxis::UpdateInterval,
            rows: vec![
                SweepRow {
                    axis_value: 60.0,
                    seed: 1,
                    num_oga: 3,
                    num_phy: 4,
                    probability: 0.75,
                },
                SweepRow {
                    axis_value: 60.0,
                    seed: 2,
                    num_oga: 4,
                    num_phy: 4,
                    probability: 1.0,
                },
            ],
            aggregates: vec![SweepAggregate {
                axis_value: 60.0,
                n: 2,
                mean_probability: 0.875,
                std_probability: 0.1767766952966369,
            }],
            violations: vec![],
        }
    }

    #[test]
    fn headers_and_rows() {
        let result = sample();
        assert_eq!(
            rows_csv(&result),
            "axis_value,seed,num_oga,num_phy,probability\n60.0,1,3,4,0.75\n60.0,2,4,4,1.0\n"
        );
        assert_eq!(
            summary_csv(&result),
            "axis_value,n,mean_probability,std_probability\n60.0,2,0.875,0.1767766952966369\n"
        );
    }
}
