use stepsls::harness::log::CSV_HEADER;
use stepsls::harness::pipeline::{CONTROLLER_FILE, MANIFEST_FILE, MODEL_FILE};
use stepsls::harness::{run_pipeline, EpisodeLog, ExperimentConfig};
use stepsls::textfmt::KvDoc;
use stepsls::Error;

#[test]
fn config_text_round_trips_and_hash_is_stable() {
    for cfg in [ExperimentConfig::amber(), ExperimentConfig::cassie()] {
        let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
    assert_ne!(ExperimentConfig::amber().hash(), ExperimentConfig::cassie().hash());
    let tweaked = ExperimentConfig::parse("seed = 8\n").unwrap();
    assert_ne!(tweaked.hash(), ExperimentConfig::amber().hash());
}

#[test]
fn config_errors_name_the_line() {
    let cases = [
        ("sls.nf = 4\nbogus.key = 1\n", "bogus.key"),
        ("sls.nf = four\n", "sls.nf"),
        ("sets.u = 1\n", "sets.u"),
        ("preset = hopper\n", "hopper"),
    ];
    for (text, needle) in cases {
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert!(matches!(err, Error::Parse { .. } | Error::Usage(_)), "{text}: {err}");
        assert!(err.to_string().contains(needle), "{text}: {err}");
    }
    assert!(ExperimentConfig::parse("sls.nf = 9\npush.n_push = 8\n").is_err());
    assert!(ExperimentConfig::parse("push.force = 80\n").is_err());
}

#[test]
fn artifacts_carry_the_config_hash_and_csvs_parse_back() {
    let cfg = ExperimentConfig::cassie();
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&cfg, dir.path()).unwrap();
    let hash = cfg.hash();

    let model = KvDoc::parse(&std::fs::read_to_string(dir.path().join(MODEL_FILE)).unwrap()).unwrap();
    assert_eq!(model.get("meta.config_hash"), Some(hash.as_str()));
    let fir = KvDoc::parse(&std::fs::read_to_string(dir.path().join(CONTROLLER_FILE)).unwrap()).unwrap();
    assert_eq!(fir.get("meta.config_hash"), Some(hash.as_str()));
    let manifest = KvDoc::parse(&std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.get("meta.config_hash"), Some(hash.as_str()));
    assert!(manifest.keys().any(|k| k == "sha256.episode_sls.csv"));

    for log in &out.logs {
        let text = std::fs::read_to_string(dir.path().join(format!("episode_{}.csv", log.controller))).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
        assert_eq!(reader.records().count(), log.steps.len());
        let back = EpisodeLog::from_csv(&text).unwrap();
        assert_eq!(back.steps, log.steps);
    }
}

#[test]
fn controllers_see_identical_push_schedules() {
    let cfg = ExperimentConfig::parse("preset = cassie\npush.count = 2\npush.force = -100\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&cfg, dir.path()).unwrap();
    let forces: Vec<Vec<u64>> =
        out.logs.iter().map(|l| l.steps.iter().map(|s| s.push_force.to_bits()).collect()).collect();
    assert_eq!(out.logs.len(), 3);
    assert!(forces.windows(2).all(|w| w[0] == w[1]));
    let pushed: Vec<usize> = out.logs[0].steps.iter().filter(|s| s.push_force != 0.0).map(|s| s.k).collect();
    assert_eq!(pushed, vec![8, 16]);
    let sls = &out.report.rows[0];
    assert_eq!(sls.controller, "sls");
    assert_eq!(sls.input_violations, 0);
    assert!(sls.recovery_steps.iter().all(|r| r.is_some_and(|n| n <= cfg.nf)));
}
