use std::sync::atomic::{AtomicUsize, Ordering};

use petjoy_core::backend::BackendError;
use petjoy_core::faceclient::{DetectedFace, FaceEngine};
use petjoy_core::pipeline::{run_pipeline, run_pipeline_with, PipelineError, RunConfig};
use petjoy_core::synth::{evaluate_pipeline, generate_corpus, SynthConfig, Trap};

fn setup(n_users: usize) -> (tempfile::TempDir, RunConfig, petjoy_core::synth::SynthOutput) {
    let dir = tempfile::tempdir().unwrap();
    let out = generate_corpus(&SynthConfig { n_users, ..Default::default() }).unwrap();
    let files = out.write_to_dir(&dir.path().join("synth")).unwrap();
    let config = RunConfig::with_mocks(files.corpus, files.labels, files.annotations, dir.path().join("run"));
    (dir, config, out)
}

#[test]
fn noiseless_run_recovers_planted_labels() {
    let (_dir, config, synth) = setup(300);
    let run = run_pipeline(&config).unwrap();
    let eval = evaluate_pipeline(&run.profiles, &synth.truth).unwrap();
    assert_eq!(eval.missing, 0);
    assert_eq!(eval.false_eligible, 0);
    assert_eq!(eval.matched, 300);
    assert_eq!(eval.ownership.macro_f1(), 1.0);
    assert_eq!(eval.partner.f1(), 1.0);
    assert_eq!(eval.child.f1(), 1.0);
    assert_eq!(eval.age_mae, 0.0);
    assert_eq!(eval.gender_accuracy, 1.0);
    assert_eq!(eval.race_accuracy, 1.0);
    assert!(eval.visual_mae < 1e-9, "{}", eval.visual_mae);
    assert!(eval.textual_mae < 1e-12, "{}", eval.textual_mae);
    for (trap, (ok, n)) in &eval.traps {
        assert_eq!(ok, n, "{trap:?}");
    }
    assert!(eval.traps.contains_key(&Trap::SingleWeekPetPoster));
    assert_eq!(run.summary.users_total, synth.truth.records.len());
}

#[test]
fn reruns_are_byte_identical() {
    let (dir, config, _) = setup(80);
    run_pipeline(&config).unwrap();
    let second = RunConfig { output_dir: dir.path().join("run2"), concurrency: 3, ..config.clone() };
    run_pipeline(&second).unwrap();
    for name in ["profiles.ndjson", "demographics.tsv", "distributions.tsv", "comparisons.ndjson", "chart_data.tsv", "run_summary.json"] {
        let a = std::fs::read(config.output_dir.join(name)).unwrap();
        let b = std::fs::read(second.output_dir.join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

/// Face engine that fails every detection for selected users.
struct Flaky<'a> {
    inner: &'a dyn FaceEngine,
    failing: fn(&str) -> bool,
    calls: AtomicUsize,
}

impl FaceEngine for Flaky<'_> {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        if (self.failing)(image_ref) {
            return Err(BackendError::Exhausted { attempts: 3, last: Box::new(BackendError::Unreachable("down".into())) });
        }
        self.inner.detect(image_ref)
    }

    fn compare(&self, a: &str, b: &str) -> Result<f64, BackendError> {
        self.inner.compare(a, b)
    }
}

#[test]
fn failed_run_resumes_from_checkpoint() {
    let (_dir, config, _) = setup(40);
    let classifier = config.build_classifier().unwrap();
    let engine = config.build_face_engine().unwrap();

    let flaky = Flaky { inner: engine.as_ref(), failing: |r| r.starts_with("img/u0000"), calls: AtomicUsize::new(0) };
    let err = run_pipeline_with(&config, classifier.as_ref(), &flaky).unwrap_err();
    match err {
        PipelineError::Partial { failed, total, .. } => {
            assert_eq!(failed, 10);
            assert_eq!(total, 42);
        }
        other => panic!("unexpected {other}"),
    }

    let healthy = Flaky { inner: engine.as_ref(), failing: |_| false, calls: AtomicUsize::new(0) };
    let resumed = run_pipeline_with(&config, classifier.as_ref(), &healthy).unwrap();
    assert_eq!(resumed.resumed_users, 32);
    assert_eq!(resumed.outcomes.len(), 42);

    let fresh_dir = tempfile::tempdir().unwrap();
    let fresh = run_pipeline(&RunConfig { output_dir: fresh_dir.path().to_path_buf(), ..config.clone() }).unwrap();
    assert_eq!(fresh.profiles, resumed.profiles);
    assert_eq!(
        std::fs::read(fresh_dir.path().join("comparisons.ndjson")).unwrap(),
        std::fs::read(config.output_dir.join("comparisons.ndjson")).unwrap()
    );
}

#[test]
fn changed_config_discards_checkpoint() {
    let (_dir, config, _) = setup(20);
    run_pipeline(&config).unwrap();
    let again = run_pipeline(&config).unwrap();
    assert_eq!(again.resumed_users, again.outcomes.len());
    let changed = run_pipeline(&RunConfig { alpha: 0.01, ..config }).unwrap();
    assert_eq!(changed.resumed_users, 0);
}
