//! Store semantics under concurrency, run against both backends.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Barrier};

use nimbus_core::maas::{FileStore, Maas, MemStore, Namespace, StorageKey};

fn backends() -> Vec<(&'static str, Arc<dyn Maas>, Option<tempfile::TempDir>)> {
    let dir = tempfile::tempdir().unwrap();
    vec![
        ("mem", Arc::new(MemStore::new()), None),
        ("file", Arc::new(FileStore::open(dir.path()).unwrap()), Some(dir)),
    ]
}

fn concurrently<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let gate = Barrier::new(n);
    std::thread::scope(|s| {
        let hs: Vec<_> = (0..n)
            .map(|i| {
                let (gate, f) = (&gate, &f);
                s.spawn(move || {
                    gate.wait();
                    f(i)
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

#[test]
fn put_get_and_absent() {
    for (name, store, _dir) in backends() {
        let k = StorageKey::partition(3);
        store.put(&k, b"blob").unwrap();
        assert_eq!(store.get(&k).unwrap(), b"blob", "{name}");
        store.put(&k, b"").unwrap();
        assert_eq!(store.get(&k).unwrap(), b"", "{name}: empty differs from absent");
        let err = store.get(&StorageKey::partition(4)).unwrap_err();
        assert!(err.is_not_found(), "{name}: {err}");
        store.delete(&k).unwrap();
        assert!(!store.exists(&k).unwrap());
    }
}

#[test]
fn thousand_concurrent_puts() {
    for (name, store, _dir) in backends() {
        concurrently(8, |t| {
            for i in (t..1000).step_by(8) {
                store.put(&StorageKey::message(1, i as u32, 0), &(i as u64).to_le_bytes()).unwrap();
            }
        });
        for i in 0..1000u64 {
            let v = store.get(&StorageKey::message(1, i as u32, 0)).unwrap();
            assert_eq!(v, i.to_le_bytes(), "{name} key {i}");
        }
        store.clear_namespace(Namespace::Msg).unwrap();
        assert!(!store.exists(&StorageKey::message(1, 5, 0)).unwrap());
    }
}

#[test]
fn counter_single_zero_observer() {
    for (name, store, _dir) in backends() {
        for round in 0..50 {
            let k = StorageKey::ctl(&format!("unfinished{round}"));
            store.init_counter(&k, 5).unwrap();
            let zeros = AtomicUsize::new(0);
            concurrently(5, |_| {
                if store.atomic_add(&k, -1).unwrap() == 0 {
                    zeros.fetch_add(1, Ordering::SeqCst);
                }
            });
            assert_eq!(zeros.load(Ordering::SeqCst), 1, "{name} round {round}");
            assert_eq!(store.atomic_add(&k, 0).unwrap(), 0);
        }
        let k = StorageKey::ctl("c");
        store.init_counter(&k, 7).unwrap();
        assert_eq!(store.atomic_add(&k, 0).unwrap(), 7);
        for left in (0..7).rev() {
            assert_eq!(store.atomic_add(&k, -1).unwrap(), left);
        }
    }
}

#[test]
fn flags_are_idempotent_and_visible() {
    for (name, store, _dir) in backends() {
        let k = StorageKey::ctl("keep_computing");
        assert!(!store.flag_set(&k).unwrap());
        concurrently(2, |_| store.set_flag(&k).unwrap());
        assert!(store.flag_set(&k).unwrap(), "{name}");
        store.set_flag(&k).unwrap();
        assert!(store.flag_set(&k).unwrap());
        store.clear_flag(&k).unwrap();
        store.clear_flag(&k).unwrap();
        assert!(!store.flag_set(&k).unwrap());
    }
}

#[test]
fn claims_are_exactly_once() {
    for (name, store, _dir) in backends() {
        let q = StorageKey::ctl("queue/0");
        store.queue_init(&q, &[0, 1, 2, 3, 4]).unwrap();
        let mut got: Vec<u32> = (0..5).map(|_| store.queue_pop(&q).unwrap().unwrap()).collect();
        got.sort_unstable();
        assert_eq!(got, vec![0, 1, 2, 3, 4], "{name}");
        assert_eq!(store.queue_pop(&q).unwrap(), None);

        store.queue_init(&q, &[9]).unwrap();
        assert_eq!(store.queue_pop(&q).unwrap(), Some(9));

        for round in 0..30 {
            store.queue_init(&q, &[0, 1, 2, 3, 4]).unwrap();
            let claims = concurrently(8, |_| store.queue_pop(&q).unwrap());
            let mut won: Vec<u32> = claims.iter().flatten().copied().collect();
            won.sort_unstable();
            assert_eq!(won, vec![0, 1, 2, 3, 4], "{name} round {round}");
            assert_eq!(claims.iter().filter(|c| c.is_none()).count(), 3);
        }

        store.queue_init(&q, &[0, 1, 2]).unwrap();
        assert!(store.queue_remove(&q, 1).unwrap());
        assert!(!store.queue_remove(&q, 1).unwrap());
        assert_eq!(store.queue_len(&q).unwrap(), 2);
    }
}

#[test]
fn file_store_is_shared_between_handles() {
    let dir = tempfile::tempdir().unwrap();
    let a = FileStore::open(dir.path()).unwrap();
    let b = FileStore::open(dir.path()).unwrap();
    let k = StorageKey::ctl("unfinished");
    a.init_counter(&k, 2).unwrap();
    assert_eq!(b.atomic_add(&k, -1).unwrap(), 1);
    assert_eq!(a.atomic_add(&k, -1).unwrap(), 0);
    // counters are decimal text on disk
    let text = std::fs::read_dir(dir.path())
        .unwrap()
        .flatten()
        .flat_map(|e| walk(&e.path()))
        .find(|p| p.to_string_lossy().ends_with("unfinished"))
        .map(|p| std::fs::read_to_string(p).unwrap());
    assert_eq!(text.as_deref().map(str::trim), Some("0"));
}

fn walk(p: &std::path::Path) -> Vec<std::path::PathBuf> {
    if p.is_dir() {
        std::fs::read_dir(p).unwrap().flatten().flat_map(|e| walk(&e.path())).collect()
    } else if p.components().any(|c| c.as_os_str() == ".locks") {
        Vec::new()
    } else {
        vec![p.to_path_buf()]
    }
}
