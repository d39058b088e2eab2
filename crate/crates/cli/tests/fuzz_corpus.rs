//! Replays the checked-in fuzz corpus through the fuzz entry points.

use std::fs;
use std::path::Path;

#[path = "../../../fuzz/src/lib.rs"]
mod entry;

fn replay(target: &str, f: fn(&[u8])) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut n = 0;
    for file in fs::read_dir(&dir).unwrap() {
        let bytes = fs::read(file.unwrap().path()).unwrap();
        f(&bytes);
        // truncations exercise the error paths
        for cut in [1, bytes.len() / 2, bytes.len().saturating_sub(1)] {
            f(&bytes[..cut.min(bytes.len())]);
        }
        n += 1;
    }
    assert!(n > 0, "empty corpus for {target}");
}

#[test]
fn dataset_corpus() {
    replay("dataset_jsonl", entry::dataset_jsonl);
}

#[test]
fn scenario_corpus() {
    replay("scenario_json", entry::scenario_json);
}

#[test]
fn checkpoint_corpus() {
    replay("model_checkpoint", entry::model_checkpoint);
}

#[test]
fn manifest_corpus() {
    replay("mixture_manifest", entry::mixture_manifest);
}

#[test]
fn config_corpus() {
    replay("experiment_config", entry::experiment_config);
}

#[test]
fn garbage_is_rejected_quietly() {
    let inputs: [&[u8]; 5] = [b"", b"\xff\xfe", b"{}", b"[1,2", b"{\"steps\": [[0, 99999999999999999999]]}"];
    for data in inputs {
        entry::dataset_jsonl(data);
        entry::scenario_json(data);
        entry::model_checkpoint(data);
        entry::mixture_manifest(data);
        entry::experiment_config(data);
    }
}

proptest::proptest! {
    #[test]
    fn arbitrary_bytes_never_panic(data in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..256)) {
        entry::dataset_jsonl(&data);
        entry::scenario_json(&data);
        entry::model_checkpoint(&data);
        entry::mixture_manifest(&data);
        entry::experiment_config(&data);
    }
}
