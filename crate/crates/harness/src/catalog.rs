//! Built-in domains, each with a ready-to-run configuration.

use serde::Serialize;

use crate::config::{
    AmbientSpec, DomainSpec, ExperimentConfig, InitialSpec, OutputSpec, SamplerSpec, ScattererSpec, ToleranceSpec,
};

#[derive(Debug, Clone, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSchema>,
    pub config: ExperimentConfig,
}

const fn p(name: &'static str, kind: &'static str, constraint: &'static str) -> ParamSchema {
    ParamSchema { name, kind, constraint }
}

fn example(domain: DomainSpec) -> ExperimentConfig {
    ExperimentConfig {
        domain,
        initial: InitialSpec {
            explicit: None,
            sampled: Some(SamplerSpec { count: 10, seed: 1, c0: Some(0.1), clearance: 1e-3, min_cos_phi: None }),
        },
        horizon: 20.0,
        c0: None,
        tolerances: ToleranceSpec::default(),
        output: OutputSpec::default(),
        checks: vec![
            crate::config::CheckKind::Monotonicity,
            crate::config::CheckKind::Growth,
            crate::config::CheckKind::Identities,
        ],
        max_events: billiard_core::dynamics::DEFAULT_MAX_EVENTS,
        grid: billiard_core::diagnostics::DEFAULT_GRID,
    }
}

pub fn catalog() -> Vec<CatalogEntry> {
    let sinai_params = vec![
        p("dim", "integer", ">= 2"),
        p("radius", "number", "0 < 2 radius < side"),
        p("side", "number", "> 0"),
        p("centers", "array of points", "optional; disjoint balls, default one at the cell centre"),
    ];
    let gas_params = vec![
        p("balls", "integer", ">= 2"),
        p("dim", "integer", ">= 2"),
        p("radius", "number", "0 < 2 radius < side / 2"),
        p("side", "number", "> 0"),
    ];
    vec![
        CatalogEntry {
            name: "sinai_2d",
            description: "unit 2-torus minus a disk of radius 0.25",
            parameters: sinai_params.clone(),
            config: example(DomainSpec::Sinai { dim: 2, radius: 0.25, side: 1.0, centers: None }),
        },
        CatalogEntry {
            name: "sinai_3d",
            description: "unit 3-torus minus a ball of radius 0.3",
            parameters: sinai_params,
            config: example(DomainSpec::Sinai { dim: 3, radius: 0.3, side: 1.0, centers: None }),
        },
        CatalogEntry {
            name: "cylinder_torus_3d",
            description: "unit 3-torus minus a cylinder of radius 0.3 along the third axis (semi-dispersing)",
            parameters: vec![
                p("dim", "integer", ">= 3"),
                p("ambient", "object", "{\"torus\": {\"side\": L}} or {\"box\": {\"sides\": [...]}}"),
                p("scatterers", "array", "sphere, cylinder (orthonormal lattice-aligned axes) or halfspace entries"),
            ],
            config: example(DomainSpec::Custom {
                dim: 3,
                ambient: AmbientSpec::Torus { side: 1.0 },
                scatterers: vec![ScattererSpec::Cylinder {
                    axis_point: vec![0.5, 0.5, 0.0],
                    axis_directions: vec![vec![0.0, 0.0, 1.0]],
                    radius: 0.3,
                }],
            }),
        },
        CatalogEntry {
            name: "hardball_gas_n2_d2",
            description: "two disks of radius 0.1 on the unit 2-torus, as a billiard in the 4-torus",
            parameters: gas_params.clone(),
            config: example(DomainSpec::HardballGas { balls: 2, dim: 2, radius: 0.1, side: 1.0 }),
        },
        CatalogEntry {
            name: "hardball_gas_n3_d2",
            description: "three disks of radius 0.1 on the unit 2-torus, as a billiard in the 6-torus",
            parameters: gas_params,
            config: example(DomainSpec::HardballGas { balls: 3, dim: 2, radius: 0.1, side: 1.0 }),
        },
        CatalogEntry {
            name: "pair_reduced_2d",
            description: "relative motion of two disks of radius 0.1: unit 2-torus minus a disk of radius 0.2",
            parameters: vec![p("dim", "integer", ">= 2"), p("radius", "number", "0 < 4 radius < side"), p("side", "number", "> 0")],
            config: example(DomainSpec::PairReduced { dim: 2, radius: 0.1, side: 1.0 }),
        },
    ]
}

pub fn render_text(entries: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{:<20} {}\n", e.name, e.description));
        for p in &e.parameters {
            out.push_str(&format!("    {:<12} {:<16} {}\n", p.name, p.kind, p.constraint));
        }
    }
    out
}
