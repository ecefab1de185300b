//! Writes the shipped scheme presets into the given directory (default
//! `presets`) and prints the post-selection support of every outcome.

use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use abs_core::abs::{conditional_pure_state, ideal_kernel, AbsScheme, AdaptiveRule, SchemeConfig};
use abs_core::fock::FockState;
use abs_core::interferometer::{clements_decompose, MeshProgram, MziCell};
use abs_core::linalg::{haar_unitary, ComplexMatrix};
use abs_core::ml::{classify_2d_pipeline, make_moons, CvOptions};

const HAAR_SEED_B2: u64 = 32;
const HAAR_SEED_B3: u64 = 22;

fn occupation(m: usize, modes: &[usize]) -> FockState {
    let mut occ = vec![0u8; m];
    for &i in modes {
        occ[i] = 1;
    }
    FockState::new(occ)
}

fn cell_index(mesh: &MeshProgram, layer: usize, top: usize) -> usize {
    mesh.cells
        .iter()
        .position(|c| c.layer == layer && c.top_mode == top)
        .expect("cell exists")
}

/// Haar unitary on `active` modes, identity on the others.
fn embedded_haar(m: usize, active: &[usize], seed: u64) -> ComplexMatrix {
    let h = haar_unitary(active.len(), seed).unwrap();
    let mut u = ComplexMatrix::identity(m, m);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            u[(i, j)] = h[(a, b)];
        }
    }
    u
}

fn platform_a() -> SchemeConfig {
    let mut mesh = MeshProgram::rectangular(6, FRAC_PI_4, FRAC_PI_4);
    for cell in mesh.cells.iter_mut().filter(|c| c.top_mode == 0) {
        cell.set_angles(0.0, FRAC_PI_4);
    }
    let slots = vec![
        cell_index(&mesh, 2, 4),
        cell_index(&mesh, 3, 3),
        cell_index(&mesh, 4, 2),
    ];
    SchemeConfig {
        m: 6,
        n: 2,
        input: occupation(6, &[2, 5]),
        adaptive_modes: vec![1, 2, 5],
        r: 1,
        output_rails: vec![3, 4],
        allow_bunching: false,
        rule: AdaptiveRule::cascade(),
        base_mesh: mesh,
        adaptive_slots: slots,
        assignment: vec![],
        d: Some(2),
        outcome_count: Some(3),
        notes: Some(
            "provisional layout: cells coupling modes 0 and 1 are set to bar so mode 0 never receives a photon; \
             adaptive cells sit on one diagonal, all other cells at pi/4"
                .into(),
        ),
    }
}

fn platform_b1() -> SchemeConfig {
    let mesh = MeshProgram::rectangular(8, FRAC_PI_4, FRAC_PI_4);
    let slots = [(3, 5), (4, 4), (5, 3), (6, 2), (7, 1)]
        .iter()
        .map(|&(l, t)| cell_index(&mesh, l, t))
        .collect();
    let mut rule = AdaptiveRule::cascade();
    rule.parameters.inclusive = Some(true);
    SchemeConfig {
        m: 8,
        n: 3,
        input: occupation(8, &[0, 3, 4]),
        adaptive_modes: vec![0, 1, 2, 3, 4, 7],
        r: 2,
        output_rails: vec![5, 6],
        allow_bunching: false,
        rule,
        base_mesh: mesh,
        adaptive_slots: slots,
        assignment: vec![],
        d: Some(2),
        outcome_count: Some(15),
        notes: Some(
            "provisional layout: five adaptive cells on one diagonal, all other cells at pi/4"
                .into(),
        ),
    }
}

fn platform_b2() -> SchemeConfig {
    let m = 8;
    let active = [0, 1, 3, 4, 5, 6, 7];
    let mut mesh = clements_decompose(&embedded_haar(m, &active, HAAR_SEED_B2)).unwrap();
    let depth = mesh.depth();
    mesh.cells.push(MziCell::new(depth, 1, 0.0, 0.0));
    let slot = mesh.cells.len() - 1;
    SchemeConfig {
        m,
        n: 3,
        input: occupation(m, &[0, 3, 4]),
        adaptive_modes: vec![0, 3, 4, 5, 6, 7],
        r: 2,
        output_rails: vec![1, 2],
        allow_bunching: false,
        rule: AdaptiveRule::gaussian_b2(),
        base_mesh: mesh,
        adaptive_slots: vec![slot],
        assignment: vec![],
        d: Some(2),
        outcome_count: Some(15),
        notes: Some(format!(
            "provisional layout: Haar-random first section (seed {HAAR_SEED_B2}) acting as identity on mode 2, \
             followed by one adaptive cell on rails 1 and 2"
        )),
    }
}

fn platform_b3() -> SchemeConfig {
    let m = 8;
    let active = [0, 3, 4, 5, 6, 7];
    let mut mesh = clements_decompose(&embedded_haar(m, &active, HAAR_SEED_B3)).unwrap();
    let depth = mesh.depth();
    mesh.cells.push(MziCell::new(depth, 0, 0.0, 0.0));
    mesh.cells.push(MziCell::new(depth + 1, 1, 0.0, 0.0));
    let slots = vec![mesh.cells.len() - 2, mesh.cells.len() - 1];
    let mut config = SchemeConfig {
        m,
        n: 3,
        input: occupation(m, &[3, 4, 5]),
        adaptive_modes: vec![3, 4, 5, 6, 7],
        r: 2,
        output_rails: vec![0, 1, 2],
        allow_bunching: true,
        rule: AdaptiveRule::gaussian_b3(),
        base_mesh: mesh,
        adaptive_slots: slots,
        assignment: vec![],
        d: Some(3),
        outcome_count: Some(15),
        notes: Some(format!(
            "provisional layout: Haar-random first section (seed {HAAR_SEED_B3}) acting as identity on modes 1 and 2, \
             followed by adaptive cells on rails (0,1) then (1,2); the assignment orders rule indices by angle"
        )),
    };
    // outcome i takes the rule whose angle index is i + 1
    let scheme = AbsScheme::new(config.clone()).unwrap();
    let index: Vec<f64> = scheme
        .outcomes()
        .iter()
        .map(|o| config.rule.gaussian_index(o).unwrap())
        .collect();
    let mut order: Vec<usize> = (0..index.len()).collect();
    order.sort_by(|&a, &b| index[a].total_cmp(&index[b]));
    config.assignment = order;
    config
}

fn report(name: &str, config: &SchemeConfig) {
    let scheme = AbsScheme::new(config.clone()).unwrap();
    let probs: Vec<f64> = (0..scheme.outcome_count())
        .map(|i| conditional_pure_state(&scheme, i).unwrap().0)
        .collect();
    let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let total: f64 = probs.iter().sum();
    print!(
        "{name}: {} cells, min support {min:.4}, total {total:.4}",
        config.base_mesh.cells.len()
    );
    if scheme.outcome_count() == 15 {
        let kernel = ideal_kernel(&scheme).unwrap();
        let moons = make_moons(200, 0.1, 0).unwrap();
        let acc = classify_2d_pipeline(&moons, &kernel, &CvOptions::default()).unwrap();
        print!(", 2D accuracy {:.3}", acc.cv.mean_accuracy);
    }
    println!();
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "presets".into()));
    std::fs::create_dir_all(&dir).unwrap();
    for (name, config) in [
        ("platformA", platform_a()),
        ("platformB1", platform_b1()),
        ("platformB2", platform_b2()),
        ("platformB3", platform_b3()),
    ] {
        report(name, &config);
        let json = serde_json::to_string_pretty(&config).unwrap();
        std::fs::write(dir.join(format!("{name}.json")), json + "\n").unwrap();
    }
}
