mod common;

use ftqc_core::counts::{count_trace, count_trace_reader, CountsError, EventKind, TraceEvent};
use ftqc_core::layout::{algorithmic_depth, total_t_states};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn events(trace: &[(common::Op, Vec<u64>)]) -> Vec<TraceEvent> {
    let text = common::trace_json_lines(trace);
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn counts_match_brute_force_replay() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..2000 {
        let trace = common::random_trace(&mut rng, 60);
        let want = common::replay(&trace);
        let got = count_trace(&events(&trace)).unwrap();
        assert_eq!(got.num_qubits, want.width, "{trace:?}");
        assert_eq!(got.t_count, want.t);
        assert_eq!(got.rotation_count, want.rz);
        assert_eq!(got.ccz_count, want.ccz);
        assert_eq!(got.ccix_count, want.ccix);
        assert_eq!(got.measurement_count, want.measure);
        assert_eq!(got.rotation_depth, want.rotation_layers, "{trace:?}");
        assert!(got.rotation_depth <= got.rotation_count);
        assert_eq!(got.rotation_depth == 0, got.rotation_count == 0);

        let t_per_rot = if want.rz > 0 { rng.gen_range(1..30) } else { 0 };
        let (cycles, states) = common::replay_cost(&want, t_per_rot);
        assert_eq!(algorithmic_depth(&got, t_per_rot).unwrap(), cycles);
        assert_eq!(total_t_states(&got, t_per_rot).unwrap(), states);
    }
}

#[test]
fn reader_and_slice_agree() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..200 {
        let trace = common::random_trace(&mut rng, 40);
        let mut text = common::trace_json_lines(&trace);
        text.push_str("\n\n");
        let from_reader = count_trace_reader(text.as_bytes()).unwrap();
        assert_eq!(from_reader, count_trace(&events(&trace)).unwrap());
    }
}

#[test]
fn disjoint_blocks_commute() {
    // two blocks on disjoint wires, interleaved differently
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..300 {
        let a = common::random_trace(&mut rng, 20);
        let b: Vec<_> = common::random_trace(&mut rng, 20)
            .into_iter()
            .map(|(op, q)| (op, q.into_iter().map(|x| x + 100).collect::<Vec<_>>()))
            .collect();
        let ab: Vec<_> = a.iter().chain(&b).cloned().collect();
        let mut mixed = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && rng.gen_bool(0.5)) {
                mixed.push(a[i].clone());
                i += 1;
            } else {
                mixed.push(b[j].clone());
                j += 1;
            }
        }
        let x = count_trace(&events(&ab)).unwrap();
        let y = count_trace(&events(&mixed)).unwrap();
        assert_eq!(
            (x.t_count, x.rotation_count, x.rotation_depth, x.ccz_count, x.ccix_count, x.measurement_count),
            (y.t_count, y.rotation_count, y.rotation_depth, y.ccz_count, y.ccix_count, y.measurement_count)
        );
    }
}

#[test]
fn overlapping_alloc_raises_width() {
    for k in 0..6u64 {
        let mut trace = vec![TraceEvent::new(EventKind::Alloc, (0..k).collect::<Vec<_>>())];
        if k == 0 {
            trace.clear();
        }
        trace.push(TraceEvent::new(EventKind::Alloc, vec![50]));
        trace.push(TraceEvent::new(EventKind::Release, vec![50]));
        assert!(count_trace(&trace).unwrap().num_qubits > k);
    }
}

#[test]
fn malformed_traces_are_rejected() {
    let ev = |k, q: &[u64]| TraceEvent::new(k, q.to_vec());
    use EventKind::*;
    assert!(matches!(
        count_trace(&[ev(Alloc, &[0]), ev(Release, &[0]), ev(T, &[0])]),
        Err(CountsError::UseAfterRelease { qubit: 0, event_index: 2 })
    ));
    assert!(matches!(
        count_trace(&[ev(Alloc, &[0]), ev(Alloc, &[0])]),
        Err(CountsError::DoubleAlloc { qubit: 0, .. })
    ));
    assert!(matches!(
        count_trace(&[ev(Alloc, &[0, 1]), ev(Ccz, &[0, 1])]),
        Err(CountsError::ArityMismatch { event_index: 1 })
    ));
    assert!(matches!(
        count_trace(&[ev(Alloc, &[0, 1, 2]), ev(Ccix, &[0, 1, 1])]),
        Err(CountsError::ArityMismatch { event_index: 1 })
    ));
    assert!(matches!(
        count_trace_reader("{\"op\":\"swap\",\"q\":[0]}\n".as_bytes()),
        Err(CountsError::TraceFormat { line: 1, .. })
    ));
}
