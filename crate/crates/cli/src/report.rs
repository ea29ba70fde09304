//! Text reports: the design certificate and the benchmark reference table.

use std::fmt::Write as _;

use cor_core::scenario::BuiltScenario;

pub fn design_report(built: &BuiltScenario) -> String {
    let mut s = String::new();
    let d = &built.design;
    let _ = writeln!(
        s,
        "agents: {}   reference dimension: {}   stacked dimension: {}",
        d.agents.len(),
        d.exo.dim(),
        d.state_dim()
    );
    let diag: Vec<String> = d.gain_k.diagonal().iter().map(|v| format!("{v:.4}")).collect();
    let _ = writeln!(s, "gain diagonal: [{}]", diag.join(", "));
    let _ = writeln!(s, "gain margin slack: {:+.6e}", d.gain_k.lambda_min_slack());
    let o = &d.observer;
    let _ = writeln!(
        s,
        "observer gains: mu = ({}, {}, {}), alpha = {}, beta = {}",
        o.mu1, o.mu2, o.mu3, o.alpha, o.beta
    );

    match (&d.certificate, &built.certificate_issue) {
        (Some(cert), _) => {
            let c = &cert.constants;
            let _ = writeln!(s, "constants:");
            let _ = writeln!(
                s,
                "  c1 = {:.4}  c2 = {:.4}  c3 = {:.4}  c4 = {:.4}  c5 = {:.4}",
                c.c1, c.c2, c.c3, c.c4, c.c5
            );
            let _ = writeln!(
                s,
                "  hat_c1 = {:.4}  hat_c2 = {:.4}  tilde_c1 = {:.4}  tilde_c2 = {:.4}",
                c.hat_c1, c.hat_c2, c.tilde_c1, c.tilde_c2
            );
            let _ = writeln!(s, "conditions:");
            for (label, idx) in [("i", 0usize), ("ii", 1), ("iii", 2)] {
                let _ = writeln!(
                    s,
                    "  ({label}) slack {:+.6e} ({})",
                    cert.conditions.slack[idx],
                    if cert.conditions.holds[idx] { "holds" } else { "FAILS" }
                );
            }
            let _ = writeln!(s, "settling certificate (s):");
            let _ = writeln!(s, "  attacked-phase bound: {:.4}", cert.times.bar_t_o);
            let _ = writeln!(s, "  estimation bound t_o: {:.4}", cert.times.t_o);
            for (i, agent) in d.agents.iter().enumerate() {
                let bounds: Vec<String> =
                    agent.channels.iter().map(|ch| format!("{:.4}", ch.t_c_channel)).collect();
                let _ = writeln!(s, "  agent {} channel bounds: [{}]", i + 1, bounds.join(", "));
            }
            if let Some((t_c, t_a)) = built.settling_bounds() {
                let _ = writeln!(s, "  feedback bound t_c: {t_c:.4}");
                let _ = writeln!(s, "  total bound t_a: {t_a:.4}");
            }
        }
        (None, Some(issue)) => {
            let _ = writeln!(s, "certificate: unavailable ({issue})");
        }
        (None, None) => {
            let _ = writeln!(s, "certificate: unavailable");
        }
    }
    s
}

pub enum Band {
    Rel(f64),
    Abs(f64),
}

pub struct RefRow {
    pub name: &'static str,
    pub got: f64,
    pub want: f64,
    pub band: Band,
}

impl RefRow {
    /// Deviation in the band's own units (relative or absolute seconds).
    pub fn deviation(&self) -> f64 {
        match self.band {
            Band::Rel(_) => (self.got - self.want).abs() / self.want.abs(),
            Band::Abs(_) => (self.got - self.want).abs(),
        }
    }

    pub fn ok(&self) -> bool {
        match self.band {
            Band::Rel(limit) | Band::Abs(limit) => self.deviation() <= limit,
        }
    }
}

/// Computed certificate numbers against the recorded values of the bundled
/// benchmark (its source rounds to four decimals, hence the bands).
pub fn reference_rows(built: &BuiltScenario) -> Vec<RefRow> {
    let cert = built.design.certificate.as_ref().expect("caller checked the certificate");
    let c = &cert.constants;
    let (t_c, t_a) = built.settling_bounds().expect("certificate implies bounds");
    let row = |name, got, want, band| RefRow { name, got, want, band };
    vec![
        row("c1", c.c1, 21.4662, rel_band()),
        row("c2", c.c2, 10.3531, rel_band()),
        row("c3", c.c3, 21.8649, rel_band()),
        row("c4", c.c4, 10.2899, rel_band()),
        row("c5", c.c5, 0.5727, rel_band()),
        row("hat_c1", c.hat_c1, 0.0736, rel_band()),
        row("hat_c2", c.hat_c2, 0.1011, rel_band()),
        row("tilde_c1", c.tilde_c1, 0.0762, rel_band()),
        row("tilde_c2", c.tilde_c2, 0.1052, rel_band()),
        row("t_o", cert.times.t_o, 79.5692, rel_band()),
        row("t_c", t_c, 69.6789, Band::Rel(1e-2)),
        row("t_a", t_a, 149.2480, Band::Abs(0.1)),
    ]
}

fn rel_band() -> Band {
    // Constants carry four printed decimals; 0.1% covers their rounding.
    Band::Rel(1e-3)
}

pub fn format_reference_table(rows: &[RefRow]) -> (String, bool) {
    let mut s = String::new();
    let mut all_ok = true;
    let _ = writeln!(s, "{:>9}  {:>14}  {:>10}  {:>10}  check", "quantity", "computed", "reference", "deviation");
    for row in rows {
        let ok = row.ok();
        all_ok &= ok;
        let _ = writeln!(
            s,
            "{:>9}  {:>14.6}  {:>10.4}  {:>10.3e}  {}",
            row.name,
            row.got,
            row.want,
            row.deviation(),
            if ok { "ok" } else { "MISMATCH" }
        );
    }
    (s, all_ok)
}
