//! CSV and aligned-text renderings of evaluation results.

use std::io::Write;

use super::{EvalReport, SweepReport};

/// Fixed-point with at least six significant digits and at least six
/// decimals.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let decimals = if x == 0.0 || x.abs() >= 1.0 {
        6
    } else {
        // leading zeros after the point, plus six significant digits
        (5 - x.abs().log10().floor() as i32).max(6) as usize
    };
    format!("{x:.decimals$}")
}

fn opt_number(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

/// Left-aligned text columns separated by two spaces.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

impl EvalReport {
    /// One row per instance.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "instance_id",
            "tp",
            "fp",
            "fn",
            "scenario",
            "runtime_secs",
            "termination",
            "predicted",
            "truth",
            "error",
        ])?;
        for o in &self.instances {
            wtr.write_record([
                o.id.as_str(),
                &o.counts.tp.to_string(),
                &o.counts.fp.to_string(),
                &o.counts.fn_.to_string(),
                &o.scenario,
                &opt_number(o.runtime_secs),
                o.termination.as_deref().unwrap_or(""),
                &o.predicted.join(";"),
                &o.truth.join(";"),
                o.error.as_deref().unwrap_or(""),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Overall scores, the scenario breakdown and any failures.
    pub fn summary_table(&self) -> String {
        let overall = vec![vec![
            self.instances.len().to_string(),
            self.counts.tp.to_string(),
            self.counts.fp.to_string(),
            self.counts.fn_.to_string(),
            format_number(self.f1),
            format_number(self.runtime_mean),
            format_number(self.runtime_std),
            self.failures.to_string(),
        ]];
        let mut out = render_table(
            &["instances", "tp", "fp", "fn", "f1", "runtime_mean_s", "runtime_std_s", "failures"],
            &overall,
        );
        if !self.scenarios.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .scenarios
                .iter()
                .map(|s| {
                    vec![
                        s.scenario.clone(),
                        s.instances.to_string(),
                        s.counts.tp.to_string(),
                        s.counts.fp.to_string(),
                        s.counts.fn_.to_string(),
                        format_number(s.f1),
                    ]
                })
                .collect();
            out.push_str(&render_table(
                &["scenario (layer, #elements)", "instances", "tp", "fp", "fn", "f1"],
                &rows,
            ));
        }
        let failed: Vec<Vec<String>> = self
            .instances
            .iter()
            .filter_map(|o| o.error.as_ref().map(|e| vec![o.id.clone(), e.clone()]))
            .collect();
        if !failed.is_empty() {
            out.push('\n');
            out.push_str(&render_table(&["failed instance", "error"], &failed));
        }
        out
    }
}

impl SweepReport {
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.parameter.clone(),
                    format_number(r.risk_threshold),
                    format_number(r.pep_threshold),
                    format_number(r.report.f1),
                    format_number(r.report.instance_f1_std()),
                    format_number(r.report.runtime_mean),
                    format_number(r.report.runtime_std),
                    r.report.predicted_elements().to_string(),
                    r.report.failures.to_string(),
                ]
            })
            .collect()
    }

    const HEADER: [&'static str; 9] = [
        "parameter",
        "t_r",
        "t_pep",
        "f1",
        "f1_instance_std",
        "runtime_mean_s",
        "runtime_std_s",
        "predicted_elements",
        "failures",
    ];

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(Self::HEADER)?;
        for row in self.rows() {
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary_table(&self) -> String {
        render_table(&Self::HEADER, &self.rows())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn significant_digits(s: &str) -> usize {
        s.trim_start_matches('-')
            .chars()
            .filter(|c| c.is_ascii_digit())
            .skip_while(|&c| c == '0')
            .count()
    }

    #[test]
    fn numbers_keep_six_significant_digits() {
        for x in [0.964285714, 27.0 / 28.0, 1e-5 / 3.0, 123456.789, -0.000123456789, 2.5e-9] {
            let s = format_number(x);
            assert!(significant_digits(&s) >= 6, "{x} -> {s}");
            assert!((s.parse::<f64>().unwrap() - x).abs() <= x.abs() * 1e-5, "{x} -> {s}");
            assert!(!s.contains(','));
        }
        assert_eq!(format_number(0.0), "0.000000");
        assert_eq!(format_number(0.5), "0.500000");
        assert_eq!(format_number(0.01), "0.0100000");
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["a", "long"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    long\nxyz  1\n");
    }
}
