//! Machine-readable run reports shared by the CLI and the examples.

/// Fixed column order of every CSV emitted by the tooling.
pub const CSV_HEADER: &str =
    "method,molecule,n,n_p,s_ordered,iters,evals,init_seconds,wall_seconds,f_final,grad_inf,procrustes_E,termination";

/// One solver run over one instance. `grad_inf` is populated by the
/// gradient-based baseline only; `procrustes_E` requires ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: String,
    pub molecule: String,
    pub n: usize,
    pub n_p: usize,
    pub s_ordered: usize,
    pub iters: usize,
    pub evals: usize,
    pub init_seconds: f64,
    pub wall_seconds: f64,
    pub f_final: f64,
    pub grad_inf: Option<f64>,
    pub procrustes_e: Option<f64>,
    pub termination: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

impl RunReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{},{},{}",
            self.method,
            self.molecule,
            self.n,
            self.n_p,
            self.s_ordered,
            self.iters,
            self.evals,
            self.init_seconds,
            self.wall_seconds,
            self.f_final,
            opt(self.grad_inf),
            opt(self.procrustes_e),
            self.termination
        )
    }

    /// Full CSV document for a batch of runs; header-only when empty.
    pub fn csv_table(rows: &[RunReport]) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            method: "cd".into(),
            molecule: "toy".into(),
            n: 12,
            n_p: 4,
            s_ordered: 10,
            iters: 37,
            evals: 60,
            init_seconds: 0.001,
            wall_seconds: 0.25,
            f_final: 3.5e-11,
            grad_inf: None,
            procrustes_e: Some(1.2e-7),
            termination: "target_reached".into(),
        }
    }

    #[test]
    fn header_is_stable() {
        assert_eq!(
            CSV_HEADER,
            "method,molecule,n,n_p,s_ordered,iters,evals,init_seconds,wall_seconds,f_final,grad_inf,procrustes_E,termination"
        );
    }

    #[test]
    fn row_has_all_columns() {
        let row = sample().csv_row();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("cd,toy,12,4,10,37,60,"));
        assert!(row.ends_with(",target_reached"));
        // missing grad_inf leaves an empty cell
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[10], "");
        assert_eq!(cells[11], "1.200000e-7");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(RunReport::csv_table(&[]), format!("{CSV_HEADER}\n"));
        let t = RunReport::csv_table(&[sample(), sample()]);
        assert_eq!(t.lines().count(), 3);
    }
}
