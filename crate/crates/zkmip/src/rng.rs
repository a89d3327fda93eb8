//! Randomness sources.
//!
//! Every random choice in the crate goes through [`Coins::below`], so the same protocol code
//! can run on a seeded ChaCha stream ([`RngStream`]) or be driven through every possible
//! outcome by an enumerating [`Tape`] to get exact output distributions.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::rc::Rc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// A source of uniform integers.
pub trait Coins {
    /// Uniform integer in `[0, n)`. `n` must be positive.
    fn below(&mut self, n: u64) -> u64;

    fn bit(&mut self) -> bool {
        self.below(2) == 1
    }
}

impl<C: Coins + ?Sized> Coins for &mut C {
    fn below(&mut self, n: u64) -> u64 {
        (**self).below(n)
    }
}

impl<C: Coins + ?Sized> Coins for Box<C> {
    fn below(&mut self, n: u64) -> u64 {
        (**self).below(n)
    }
}

/// One coin source shared by several parties; draws interleave in call order.
#[derive(Clone)]
pub struct SharedCoins(Rc<RefCell<Box<dyn Coins>>>);

impl SharedCoins {
    pub fn new(inner: Box<dyn Coins>) -> SharedCoins {
        SharedCoins(Rc::new(RefCell::new(inner)))
    }
}

impl Coins for SharedCoins {
    fn below(&mut self, n: u64) -> u64 {
        self.0.borrow_mut().below(n)
    }
}

/// Deterministic labeled stream. Children derive their key from the parent key and a label,
/// so e.g. prover and verifier randomness can be perturbed independently.
#[derive(Clone, Debug)]
pub struct RngStream {
    key: [u8; 32],
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> RngStream {
        let mut h = Sha256::new();
        h.update(b"zkmip-root");
        h.update(seed.to_le_bytes());
        RngStream::from_key(h.finalize().into())
    }

    fn from_key(key: [u8; 32]) -> RngStream {
        RngStream { key, rng: ChaCha20Rng::from_seed(key) }
    }

    /// Independent child stream; same label always gives the same stream.
    pub fn child(&self, label: &str) -> RngStream {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        RngStream::from_key(h.finalize().into())
    }

    /// Child indexed by an integer, e.g. a trial number.
    pub fn child_idx(&self, label: &str, idx: u64) -> RngStream {
        self.child(&format!("{label}#{idx}"))
    }

    /// Uniform float in [0, 1).
    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }
}

impl Coins for RngStream {
    fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.rng.gen_range(0..n)
    }
}

/// Enumerates every outcome of a randomized computation.
///
/// The computation is re-run once per path; on each run the tape replays the recorded prefix
/// and extends it with zeros. The radix of each draw may depend on earlier draws. Clones share
/// one tape, so several parties can draw from the same enumeration.
#[derive(Clone, Debug, Default)]
pub struct Tape(Rc<RefCell<TapeState>>);

#[derive(Debug, Default)]
struct TapeState {
    path: Vec<(u64, u64)>,
    pos: usize,
}

impl Coins for Tape {
    fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut st = self.0.borrow_mut();
        let pos = st.pos;
        let v = if pos < st.path.len() {
            let (v, r) = st.path[pos];
            assert_eq!(r, n, "draw {pos} changed radix between replays");
            v
        } else {
            st.path.push((0, n));
            0
        };
        st.pos += 1;
        v
    }
}

impl Tape {
    /// Probability of the path just replayed.
    pub fn weight(&self) -> Ratio<u128> {
        let st = self.0.borrow();
        let den = st.path[..st.pos].iter().fold(1u128, |acc, &(_, r)| acc * r as u128);
        Ratio::new(1, den)
    }

    /// Moves to the next path; false once all paths are exhausted.
    fn advance(&mut self) -> bool {
        let mut st = self.0.borrow_mut();
        // draws past the last read position were not consumed on this path
        let pos = st.pos;
        st.path.truncate(pos);
        st.pos = 0;
        while let Some(last) = st.path.last_mut() {
            last.0 += 1;
            if last.0 < last.1 {
                return true;
            }
            st.path.pop();
        }
        false
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("randomness space exceeds {0} paths")]
pub struct TooManyPaths(pub u64);

/// Runs `f` once per coin path, stopping early if it breaks. Inside `f`, [`Tape::weight`]
/// gives the probability of the path just taken.
pub fn for_each_path<B, F>(mut f: F) -> ControlFlow<B>
where
    F: FnMut(&mut Tape) -> ControlFlow<B>,
{
    let mut tape = Tape::default();
    loop {
        f(&mut tape)?;
        if !tape.advance() {
            return ControlFlow::Continue(());
        }
    }
}

/// Exact output distribution of `f` over all coin outcomes.
pub fn exact_distribution<K, F>(mut f: F, max_paths: u64) -> Result<BTreeMap<K, Ratio<u128>>, TooManyPaths>
where
    K: Ord,
    F: FnMut(&mut Tape) -> K,
{
    let mut out: BTreeMap<K, Ratio<u128>> = BTreeMap::new();
    let mut paths = 0u64;
    let flow = for_each_path(|tape| {
        paths += 1;
        if paths > max_paths {
            return ControlFlow::Break(());
        }
        let k = f(tape);
        *out.entry(k).or_insert_with(|| Ratio::new(0, 1)) += tape.weight();
        ControlFlow::Continue(())
    });
    match flow {
        ControlFlow::Break(()) => Err(TooManyPaths(max_paths)),
        ControlFlow::Continue(()) => Ok(out),
    }
}

/// Number of paths `f` branches into.
pub fn count_paths<F: FnMut(&mut Tape)>(mut f: F) -> u64 {
    let mut n = 0;
    let _ = for_each_path::<(), _>(|t| {
        f(t);
        n += 1;
        ControlFlow::Continue(())
    });
    n
}
