//! Ordered parallel execution.
//!
//! Items are claimed in order by up to `workers` threads, but results are
//! handed to the caller strictly in claim order through a reorder buffer.
//! The caller can stop early; everything claimed after the stopping item is
//! returned unprocessed, so the visible behaviour is the same for any
//! worker count.

use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Runs `work(index, &item)` over `items` and feeds each result to
/// `commit(index, item, result)` in order. Returns the items that were not
/// committed, in their original order.
pub fn run_ordered<T, R, W, C>(items: VecDeque<T>, workers: usize, work: W, mut commit: C) -> VecDeque<T>
where
    T: Send,
    R: Send,
    W: Fn(usize, &T) -> R + Sync,
    C: FnMut(usize, T, R) -> Flow,
{
    let workers = workers.max(1);
    if workers == 1 || items.len() <= 1 {
        let mut items = items;
        let mut index = 0;
        while let Some(item) = items.pop_front() {
            let result = work(index, &item);
            let flow = commit(index, item, result);
            index += 1;
            if flow == Flow::Stop {
                break;
            }
        }
        return items;
    }

    let total = items.len();
    let source = Mutex::new(items.into_iter().enumerate().collect::<VecDeque<_>>());
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, T, R)>();
    let mut leftover: BTreeMap<usize, T> = BTreeMap::new();

    thread::scope(|scope| {
        for _ in 0..workers.min(total) {
            let tx = tx.clone();
            let (source, stop, work) = (&source, &stop, &work);
            scope.spawn(move || loop {
                if stop.load(Ordering::Acquire) {
                    break;
                }
                let Some((index, item)) = source.lock().unwrap().pop_front() else {
                    break;
                };
                let result = work(index, &item);
                if tx.send((index, item, result)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<usize, (T, R)> = BTreeMap::new();
        let mut next = 0;
        let mut stopped = false;
        for (index, item, result) in rx.iter() {
            if stopped {
                leftover.insert(index, item);
                continue;
            }
            pending.insert(index, (item, result));
            while let Some((item, result)) = pending.remove(&next) {
                let flow = commit(next, item, result);
                next += 1;
                if flow == Flow::Stop {
                    stopped = true;
                    stop.store(true, Ordering::Release);
                    break;
                }
            }
            if stopped {
                leftover.extend(std::mem::take(&mut pending).into_iter().map(|(i, (item, _))| (i, item)));
            }
        }
    });

    leftover.extend(source.into_inner().unwrap());
    leftover.into_values().collect()
}

/// Order-preserving parallel map.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let mut out = Vec::with_capacity(items.len());
    let queue: VecDeque<usize> = (0..items.len()).collect();
    run_ordered(queue, workers, |_, &i| f(&items[i]), |_, _, r| {
        out.push(r);
        Flow::Continue
    });
    out
}
