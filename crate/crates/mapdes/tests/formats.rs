//! Round trips through the on-disk formats using real simulated data.

use std::path::Path;

use mapdes::config::load_community;
use mapdes::profile_csv::{parse_profile_csv, write_profile_csv};
use mapdes::qtable_file::{load_qtable, save_qtable, QTableFileError};
use mapdes::reports::{read_ledger_csv, write_ledger_csv};
use mapdes_core::agents::{train, Hyperparameters};
use mapdes_core::metrics::{summarize, summarize_rows};
use mapdes_core::presets::default_community;
use mapdes_core::profiles::{synth_dairy_load, synth_pv_profile, HOURS_PER_YEAR};
use mapdes_core::simulator::{run_scenario, ScenarioKind};

#[test]
fn committed_config_is_the_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/community.toml");
    for seed in [None, Some(11)] {
        let c = load_community(&path, seed).unwrap();
        assert_eq!(c.training, Hyperparameters::default());
        for scenario in ScenarioKind::ALL {
            assert_eq!(c.simulation(scenario), default_community(seed.unwrap_or(42), scenario));
        }
    }
}

#[test]
fn profile_csv_round_trip() {
    for p in [synth_dairy_load(30_000.0, 4).unwrap(), synth_pv_profile(12.5, 4).unwrap()] {
        let text = write_profile_csv(&p);
        assert_eq!(parse_profile_csv(&text, HOURS_PER_YEAR).unwrap(), p);
    }
}

#[test]
fn ledger_round_trip_reproduces_summary() {
    let cfg = default_community(42, ScenarioKind::ReNoP2p);
    let farm = &cfg.farms[0];
    let hp = Hyperparameters {
        episodes: 2_000,
        ..Hyperparameters::default()
    };
    let q = train(&farm.dataset, &farm.battery.unwrap(), &cfg.tariff, cfg.feed_in, &hp, 1).unwrap().table;
    for scenario in [ScenarioKind::ReNoP2p, ScenarioKind::ReP2p] {
        let cfg = default_community(42, scenario);
        let r = run_scenario(&cfg, Some(&q)).unwrap();
        let mut buf = Vec::new();
        write_ledger_csv(&r.ledger_rows(), &mut buf).unwrap();
        let rows = read_ledger_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, r.ledger_rows());
        assert_eq!(summarize_rows(&rows, &cfg.tariff).unwrap(), summarize(&r, &cfg.tariff));
    }
}

#[test]
fn trained_qtable_file_round_trip() {
    let cfg = default_community(42, ScenarioKind::ReP2p);
    let farm = &cfg.farms[0];
    let hp = Hyperparameters {
        episodes: 1_000,
        ..Hyperparameters::default()
    };
    let q = train(&farm.dataset, &farm.battery.unwrap(), &cfg.tariff, cfg.feed_in, &hp, 2).unwrap().table;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.tbl");
    save_qtable(&q, &path).unwrap();
    assert_eq!(load_qtable(&path).unwrap(), q);

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() * 2 / 3]).unwrap();
    assert!(matches!(load_qtable(&path), Err(QTableFileError::Truncated)));
}
