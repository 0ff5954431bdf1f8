use std::fs;
use std::path::Path;

use coulomb3::config::{GoalSelector, RunConfig};
use coulomb3::observables::Eta;
use coulomb3::pipeline::{
    cmd_collision, cmd_potential, cmd_slice, cmd_spectrum, cmd_twostep, open_store, states_csv,
};
use coulomb3::store::{EIGENVECTORS_FILE, METADATA_FILE, STATES_FILE, VECTOR_HEADER_LEN};
use coulomb3::Error;

fn config(out: &Path) -> RunConfig {
    RunConfig::parse(&format!(
        "grid.n_r=6\ngrid.n_rho=8\ngrid.n_theta=6\nsolver.k=80\npotential.beta=0.4\noutput.dir={}\n",
        out.display()
    ))
    .unwrap()
}

#[test]
fn observables_regenerate_bit_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let run = cmd_spectrum(&cfg, None).unwrap();
    assert!(run.solved.healthy());
    let dir = &run.dir;

    let (c1, _) = cmd_collision(dir, None).unwrap();
    let (t1, _) = cmd_twostep(dir, None).unwrap();
    let s1 = cmd_slice(dir, GoalSelector::Index(3), std::f64::consts::FRAC_PI_2).unwrap();
    let first: Vec<Vec<u8>> = [&c1, &t1, &s1, &dir.join(STATES_FILE)]
        .iter()
        .map(|p| fs::read(p).unwrap())
        .collect();

    // regenerate from the persisted store alone
    let (c2, _) = cmd_collision(dir, None).unwrap();
    let (t2, _) = cmd_twostep(dir, None).unwrap();
    let s2 = cmd_slice(dir, GoalSelector::Index(3), std::f64::consts::FRAC_PI_2).unwrap();
    let (store, grid) = open_store(dir).unwrap();
    let states = states_csv(&store.config, &grid, &store.spectrum).unwrap();
    assert_eq!(fs::read(c2).unwrap(), first[0]);
    assert_eq!(fs::read(t2).unwrap(), first[1]);
    assert_eq!(fs::read(s2).unwrap(), first[2]);
    assert_eq!(states.into_bytes(), first[3]);

    assert_eq!(store.config, cfg);
    assert_eq!(store.spectrum.eigenvalues, run.solved.spectrum.eigenvalues);
    assert_eq!(
        store.spectrum.eigenvectors_column_major(),
        run.solved.spectrum.eigenvectors_column_major()
    );
}

#[test]
fn vector_file_header_matches_payload() {
    let tmp = tempfile::tempdir().unwrap();
    let run = cmd_spectrum(&config(tmp.path()), None).unwrap();
    let bytes = fs::read(run.dir.join(EIGENVECTORS_FILE)).unwrap();
    assert_eq!(&bytes[..4], b"TCV1");
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    assert_eq!(rows, 6 * 8 * 6);
    assert_eq!(cols, 80);
    assert_eq!(bytes.len() - VECTOR_HEADER_LEN, rows * cols * 8);
    let meta = fs::read_to_string(run.dir.join(METADATA_FILE)).unwrap();
    assert!(meta.lines().any(|l| l.starts_with("version=")));
    assert!(meta.lines().any(|l| l.starts_with("timing.solve_seconds=")));
    assert!(meta.contains("config.potential.beta=0.4"));
}

#[test]
fn run_directories_are_never_reused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let a = cmd_spectrum(&cfg, None).unwrap();
    let b = cmd_spectrum(&cfg, None).unwrap();
    assert_ne!(a.dir, b.dir);
    assert_eq!(
        fs::read(a.dir.join("eigenvalues.csv")).unwrap(),
        fs::read(b.dir.join("eigenvalues.csv")).unwrap()
    );
}

#[test]
fn collision_thresholds_through_the_store() {
    let tmp = tempfile::tempdir().unwrap();
    let run = cmd_spectrum(&config(tmp.path()), None).unwrap();
    let (_, none) = cmd_collision(&run.dir, Some(Eta::Absolute(1e300))).unwrap();
    assert!(none.collision_state_indices.is_empty());
    let (path, all) = cmd_collision(&run.dir, Some(Eta::Absolute(f64::MIN_POSITIVE))).unwrap();
    let positive = all.p_qc.iter().filter(|&&p| p > f64::MIN_POSITIVE).count();
    assert_eq!(all.collision_state_indices.len(), positive);
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 81);
}

#[test]
fn goal_must_differ_from_ground() {
    let tmp = tempfile::tempdir().unwrap();
    let run = cmd_spectrum(&config(tmp.path()), None).unwrap();
    assert!(matches!(
        cmd_twostep(&run.dir, Some(GoalSelector::Index(0))),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn missing_store_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        cmd_collision(&tmp.path().join("absent"), None),
        Err(Error::MissingStore(_))
    ));
    assert!(matches!(cmd_twostep(tmp.path(), None), Err(Error::MissingStore(_))));
}

#[test]
fn potential_table_is_attractive_inside_the_shell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let path = cmd_potential(&cfg, Some(tmp.path())).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let mut inner = 0;
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (r, rho, bare, field) = (f[0], f[1], f[2], f[3]);
        if rho < 0.5 * r {
            inner += 1;
            assert!(bare < 0.0, "R={r} rho={rho}: {bare}");
        }
        let shift = 0.4 * rho * rho * 2.0 / 3.0;
        assert!((field - bare - shift).abs() < 1e-9 * (1.0 + shift));
    }
    assert!(inner > 100);
}
