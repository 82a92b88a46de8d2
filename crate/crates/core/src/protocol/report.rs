use serde::Serialize;

/// Certified values for one input pair.
#[derive(Clone, Debug, Default, Serialize)]
pub struct InputRow {
    pub x: usize,
    pub y: usize,
    pub f: bool,
    pub eps_ub: Option<f64>,
    pub eps_lb: Option<f64>,
    pub delta_ub: Option<f64>,
    pub delta_lb: Option<f64>,
    /// Short description of the decoder or simulator certifying the row.
    pub witness: Option<String>,
    /// Set when the row could not be certified.
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub protocol: String,
    pub kind: String,
    pub predicate: String,
    pub n: usize,
    pub rows: Vec<InputRow>,
    pub eps_hat: f64,
    pub delta_hat: f64,
    pub declared_eps: f64,
    pub declared_delta: f64,
    pub tol: f64,
    /// Message size in bits (classical) or qubits (quantum).
    pub message_size: f64,
    pub complete: bool,
    pub pass: bool,
}

impl VerificationReport {
    /// Aggregates rows: `eps_hat` over 1-inputs (over all rows when `eps_all_rows`), `delta_hat` over 0-inputs.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        protocol: &str,
        kind: &str,
        predicate: &str,
        n: usize,
        rows: Vec<InputRow>,
        declared: (f64, f64),
        tol: f64,
        message_size: f64,
        eps_all_rows: bool,
    ) -> VerificationReport {
        let complete = rows.iter().all(|r| r.error.is_none());
        let eps_hat = rows.iter().filter(|r| r.f || eps_all_rows).filter_map(|r| r.eps_ub).fold(0.0, f64::max);
        let delta_hat = rows.iter().filter(|r| !r.f).filter_map(|r| r.delta_ub).fold(0.0, f64::max);
        let pass = complete && eps_hat <= declared.0 + tol && delta_hat <= declared.1 + tol;
        VerificationReport {
            protocol: protocol.to_string(),
            kind: kind.to_string(),
            predicate: predicate.to_string(),
            n,
            rows,
            eps_hat,
            delta_hat,
            declared_eps: declared.0,
            declared_delta: declared.1,
            tol,
            message_size,
            complete,
            pass,
        }
    }

    /// Rows violating the declared parameters or the `eps_lb ≤ eps_ub` invariant.
    pub fn failing_rows(&self) -> Vec<&InputRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.error.is_some()
                    || r.eps_ub.is_some_and(|e| e > self.declared_eps + self.tol && (r.f || self.kind == "frouting"))
                    || r.delta_ub.is_some_and(|d| !r.f && d > self.declared_delta + self.tol)
                    || matches!((r.eps_lb, r.eps_ub), (Some(lb), Some(ub)) if lb > ub + 1e-6)
            })
            .collect()
    }
}
