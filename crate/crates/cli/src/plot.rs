//! Self-contained matplotlib script for the rate/exponent region.

use std::fmt::Write;

use otdr_core::rates::{RegionReport, Strategy};

use crate::output::num;

fn list(values: impl Iterator<Item = f64>) -> String {
    let items: Vec<String> = values.map(num).collect();
    format!("[{}]", items.join(", "))
}

/// Script that redraws both regions from embedded data and saves
/// `region.png` next to itself; it never opens a window.
pub fn region_script(report: &RegionReport) -> String {
    let mut s = String::new();
    s.push_str("#!/usr/bin/env python3\n");
    s.push_str("# Generated by otdr region. Data is embedded; run with python3.\n");
    s.push_str("import os\n\nimport matplotlib\n\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n");
    for (name, strategy) in [("quantum", Strategy::Quantum), ("classical", Strategy::Classical)] {
        let rates = list(report.boundary_of(strategy).map(|p| p.rate));
        let exps = list(report.boundary_of(strategy).map(|p| p.exponent));
        writeln!(s, "{name}_R = {rates}").unwrap();
        writeln!(s, "{name}_D = {exps}").unwrap();
    }
    let corners = list(report.points.iter().map(|p| p.rate));
    writeln!(s, "corner_R = {corners}").unwrap();
    writeln!(s, "corner_D = {}", list(report.points.iter().map(|p| p.exponent))).unwrap();
    s.push_str(
        r##"

def closed(rates, exps):
    # close the polygon down to the rate axis and back to the origin
    return [0.0] + rates + [rates[-1], 0.0], [0.0] + exps + [0.0, 0.0]


fig, ax = plt.subplots(figsize=(6, 4.5))
qx, qy = closed(quantum_R, quantum_D)
cx, cy = closed(classical_R, classical_D)
ax.fill(qx, qy, color="#b8e6b8", label="quantum (achievable)")
ax.fill(cx, cy, color="#2e8b57", label="classical (homodyne / heterodyne)")
ax.plot(quantum_R, quantum_D, color="#1b5e20", lw=1)
ax.plot(classical_R, classical_D, color="#0b3d20", lw=1)
ax.scatter(corner_R, corner_D, color="black", s=12, zorder=3)
ax.set_xlabel("R [bits per channel use]")
ax.set_ylabel("D [nats per channel use]")
ax.set_xlim(left=0.0)
ax.set_ylim(bottom=0.0)
ax.legend(loc="center right", framealpha=0.9)
fig.tight_layout()
fig.savefig(os.path.join(os.path.dirname(os.path.abspath(__file__)), "region.png"), dpi=150)
"##,
    );
    s
}
