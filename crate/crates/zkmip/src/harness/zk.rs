//! Distribution tests between real and simulated views.
//!
//! Samplers receive a shareable coin source and return a view. In exhaustive mode the coins
//! are an enumeration tape and the two view distributions are compared exactly. In chi-square
//! mode views are drawn independently and binned by their canonical serialization.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use num_rational::Ratio;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::field::Fe;
use crate::ipcp::Event;
use crate::poly::Query;
use crate::rng::{for_each_path, RngStream, SharedCoins};
use crate::stats::chi2_contingency;

pub type View = Vec<Event>;

/// A view sampler. Errors are reported as strings so that they can key a distribution.
pub trait Sampler: FnMut(SharedCoins) -> Result<View, String> {}
impl<F: FnMut(SharedCoins) -> Result<View, String>> Sampler for F {}

#[derive(Clone, Debug, PartialEq)]
pub enum ZkMode {
    /// Exact comparison. `max_views` caps the view space and `max_paths` the coin space.
    Exhaustive { max_views: usize, max_paths: u64 },
    Chi2 { samples: usize, p_floor: f64 },
}

impl ZkMode {
    pub fn exhaustive() -> ZkMode {
        ZkMode::Exhaustive { max_views: 1_000_000, max_paths: 10_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ZkReport {
    pub passed: bool,
    /// Exact mode: 1 on equality, 0 otherwise.
    pub p_value: f64,
    pub detail: String,
}

pub fn zk_test(real: impl Sampler, sim: impl Sampler, mode: &ZkMode, seed: u64) -> Result<ZkReport, HarnessError> {
    match *mode {
        ZkMode::Exhaustive { max_views, max_paths } => zk_exhaustive(real, sim, max_views, max_paths),
        ZkMode::Chi2 { samples, p_floor } => zk_chi2(real, sim, samples, p_floor, seed),
    }
}

/// Views are keyed by a SHA-256 digest so that large view spaces stay small in memory.
type Dist = BTreeMap<[u8; 32], Ratio<u128>>;

fn enumerate(side: &str, mut s: impl Sampler, max_views: usize, max_paths: u64) -> Result<Dist, HarnessError> {
    let mut out = Dist::new();
    let mut paths = 0u64;
    let flow = for_each_path(|t| {
        paths += 1;
        if paths > max_paths {
            return ControlFlow::Break(HarnessError::TooManyPaths(max_paths));
        }
        let view = match s(SharedCoins::new(Box::new(t.clone()))) {
            Ok(v) => v,
            Err(e) => return ControlFlow::Break(HarnessError::Sampler(format!("{side}: {e}"))),
        };
        let key: [u8; 32] = Sha256::digest(canonical_bytes(&view)).into();
        *out.entry(key).or_insert_with(|| Ratio::new(0, 1)) += t.weight();
        if out.len() > max_views {
            return ControlFlow::Break(HarnessError::Config(format!("{side} view space exceeds {max_views} views")));
        }
        ControlFlow::Continue(())
    });
    match flow {
        ControlFlow::Break(e) => Err(e),
        ControlFlow::Continue(()) => Ok(out),
    }
}

pub fn zk_exhaustive(real: impl Sampler, sim: impl Sampler, max_views: usize, max_paths: u64) -> Result<ZkReport, HarnessError> {
    let a = enumerate("real", real, max_views, max_paths)?;
    let b = enumerate("simulated", sim, max_views, max_paths)?;
    if a.keys().all(|k| !b.contains_key(k)) {
        return Err(HarnessError::ViewSpaceMismatch("the real and simulated supports are disjoint".into()));
    }
    let differing = a.keys().chain(b.keys()).collect::<BTreeSet<_>>().into_iter().filter(|k| a.get(*k) != b.get(*k)).count();
    let passed = differing == 0;
    Ok(ZkReport {
        passed,
        p_value: if passed { 1.0 } else { 0.0 },
        detail: format!("{} real views, {} simulated views, {differing} with differing probability", a.len(), b.len()),
    })
}

const HASH_BUCKETS: usize = 256;
const VALUE_BUCKETS: usize = 64;
const MAX_POSITIONS: usize = 512;

/// Event kinds, message kinds and lengths; everything but the field elements.
pub fn shape_id(view: &[Event]) -> u64 {
    let mut h = Sha256::new();
    for e in view {
        match e {
            Event::ToProver { ch, msg } | Event::FromProver { ch, msg } => {
                let dir = if matches!(e, Event::ToProver { .. }) { b't' } else { b'f' };
                h.update([dir, *ch]);
                h.update(msg.kind.as_bytes());
                h.update((msg.body.len() as u64).to_le_bytes());
            }
            Event::Query { ch, query, .. } => {
                h.update([if matches!(query, Query::Point(_)) { b'p' } else { b'x' }, *ch]);
                h.update((query.coords().len() as u64).to_le_bytes());
            }
            Event::Abort { ch } => h.update([b'a', *ch]),
        }
        h.update([0xff]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Field elements of a view in order of appearance.
pub fn flat_values(view: &[Event]) -> Vec<Fe> {
    let mut out = Vec::new();
    for e in view {
        match e {
            Event::ToProver { msg, .. } | Event::FromProver { msg, .. } => out.extend(&msg.body),
            Event::Query { query, answer, .. } => {
                out.extend(query.coords());
                out.push(*answer);
            }
            Event::Abort { .. } => {}
        }
    }
    out
}

pub fn canonical_bytes(view: &[Event]) -> Vec<u8> {
    serde_json::to_vec(view).expect("views serialize")
}

/// Binned counts of a stream of views.
#[derive(Clone, Debug, Default)]
pub struct ViewHistogram {
    pub n: u64,
    shapes: BTreeMap<u64, u64>,
    hashes: Vec<u64>,
    values: HashMap<(u64, usize), Vec<u64>>,
}

impl ViewHistogram {
    pub fn new() -> ViewHistogram {
        ViewHistogram { hashes: vec![0; HASH_BUCKETS], ..Default::default() }
    }

    pub fn add(&mut self, view: &[Event]) {
        self.n += 1;
        let s = shape_id(view);
        *self.shapes.entry(s).or_default() += 1;
        let digest = Sha256::digest(canonical_bytes(view));
        self.hashes[digest[0] as usize] += 1;
        for (pos, v) in flat_values(view).into_iter().take(MAX_POSITIONS).enumerate() {
            self.values.entry((s, pos)).or_insert_with(|| vec![0; VALUE_BUCKETS])[v.0 as usize % VALUE_BUCKETS] += 1;
        }
    }
}

/// Two-sample p-value after pooling sparse columns; `None` if there is too little data.
fn pooled_two_sample(a: &[u64], b: &[u64]) -> Option<f64> {
    let total: u64 = a.iter().chain(b).sum();
    if total < 20 {
        return None;
    }
    let (mut ra, mut rb) = (vec![0u64], vec![0u64]);
    for (&x, &y) in a.iter().zip(b) {
        if x + y >= 10 {
            ra.push(x);
            rb.push(y);
        } else {
            ra[0] += x;
            rb[0] += y;
        }
    }
    Some(chi2_contingency(&[ra, rb]))
}

/// Compares two histograms with a family of two-sample tests: view shape, whole-view hash,
/// and the value at each position of each shape. The reported p-value is Bonferroni
/// corrected over the family.
pub fn compare_histograms(a: &ViewHistogram, b: &ViewHistogram, p_floor: f64) -> Result<ZkReport, HarnessError> {
    if a.shapes.keys().all(|s| !b.shapes.contains_key(s)) {
        return Err(HarnessError::ViewSpaceMismatch(format!(
            "{} real shapes and {} simulated shapes, none shared",
            a.shapes.len(),
            b.shapes.len()
        )));
    }
    let mut ps: Vec<(String, f64)> = Vec::new();
    let shapes: BTreeSet<u64> = a.shapes.keys().chain(b.shapes.keys()).copied().collect();
    let col = |m: &BTreeMap<u64, u64>| shapes.iter().map(|s| m.get(s).copied().unwrap_or(0)).collect::<Vec<_>>();
    ps.extend(pooled_two_sample(&col(&a.shapes), &col(&b.shapes)).map(|p| ("shape".to_string(), p)));
    ps.extend(pooled_two_sample(&a.hashes, &b.hashes).map(|p| ("hash".to_string(), p)));
    let keys: BTreeSet<(u64, usize)> = a.values.keys().chain(b.values.keys()).copied().collect();
    let empty = vec![0; VALUE_BUCKETS];
    for k in keys {
        let (x, y) = (a.values.get(&k).unwrap_or(&empty), b.values.get(&k).unwrap_or(&empty));
        ps.extend(pooled_two_sample(x, y).map(|p| (format!("value {} of shape {:016x}", k.1, k.0), p)));
    }
    let tests = ps.len().max(1);
    let (worst, min_p) = ps.iter().min_by(|x, y| x.1.total_cmp(&y.1)).cloned().unwrap_or(("none".into(), 1.0));
    let p = (min_p * tests as f64).min(1.0);
    Ok(ZkReport {
        passed: p >= p_floor,
        p_value: p,
        detail: format!("{} vs {} views, {tests} tests, corrected p = {p:.3e} (weakest: {worst})", a.n, b.n),
    })
}

fn draw(s: &mut impl Sampler, stream: RngStream) -> Result<View, HarnessError> {
    s(SharedCoins::new(Box::new(stream))).map_err(HarnessError::Sampler)
}

pub fn zk_chi2(mut real: impl Sampler, mut sim: impl Sampler, samples: usize, p_floor: f64, seed: u64) -> Result<ZkReport, HarnessError> {
    let root = RngStream::from_seed(seed);
    let (mut ha, mut hb) = (ViewHistogram::new(), ViewHistogram::new());
    for i in 0..samples as u64 {
        ha.add(&draw(&mut real, root.child_idx("real", i))?);
        hb.add(&draw(&mut sim, root.child_idx("sim", i))?);
    }
    compare_histograms(&ha, &hb, p_floor)
}

/// Location of a prover-chosen field element: event index and offset in the message body.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefectSite {
    pub event: usize,
    pub offset: usize,
}

/// The first prover message element that varies across `views`.
pub fn find_defect_site(views: &[View]) -> Option<DefectSite> {
    let first = views.first()?;
    for (i, e) in first.iter().enumerate() {
        let Event::FromProver { msg, .. } = e else { continue };
        for j in 0..msg.body.len() {
            let varies = views.iter().any(|v| match v.get(i) {
                Some(Event::FromProver { msg: m, .. }) => m.body.get(j) != Some(&msg.body[j]),
                _ => false,
            });
            if varies {
                return Some(DefectSite { event: i, offset: j });
            }
        }
    }
    None
}

/// Clears the low bit of the element at `site` with probability `epsilon`.
pub fn plant_bias(view: &mut View, site: DefectSite, epsilon: f64, coins: &mut RngStream) {
    let hit = coins.unit() < epsilon;
    if let Some(Event::FromProver { msg, .. }) = view.get_mut(site.event) {
        if let Some(x) = msg.body.get_mut(site.offset) {
            if hit {
                *x = Fe(x.0 & !1);
            }
        }
    }
}

/// Draws paired real and simulated views and returns three histograms: real, simulated, and
/// simulated with a planted defect at a site found from the first real views.
pub fn zk_chi2_with_control(
    mut real: impl Sampler,
    mut sim: impl Sampler,
    samples: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(ViewHistogram, ViewHistogram, ViewHistogram), HarnessError> {
    let root = RngStream::from_seed(seed);
    let probe: Vec<View> = (0..32).map(|i| draw(&mut real, root.child_idx("probe", i))).collect::<Result<_, _>>()?;
    let site = find_defect_site(&probe).ok_or_else(|| HarnessError::Sampler("no varying prover element to perturb".into()))?;
    let mut plant = root.child("plant");
    let (mut ha, mut hb, mut hd) = (ViewHistogram::new(), ViewHistogram::new(), ViewHistogram::new());
    for i in 0..samples as u64 {
        ha.add(&draw(&mut real, root.child_idx("real", i))?);
        let mut v = draw(&mut sim, root.child_idx("sim", i))?;
        hb.add(&v);
        plant_bias(&mut v, site, epsilon, &mut plant);
        hd.add(&v);
    }
    Ok((ha, hb, hd))
}

/// Fraction of `meta` independent same-sampler comparisons that pass at `p_floor`.
pub fn calibration_rate(mut sampler: impl Sampler, samples: usize, meta: usize, p_floor: f64, seed: u64) -> Result<f64, HarnessError> {
    let root = RngStream::from_seed(seed);
    let mut passes = 0;
    for t in 0..meta as u64 {
        let r = root.child_idx("meta", t);
        let (mut ha, mut hb) = (ViewHistogram::new(), ViewHistogram::new());
        for i in 0..samples as u64 {
            ha.add(&draw(&mut sampler, r.child_idx("a", i))?);
            hb.add(&draw(&mut sampler, r.child_idx("b", i))?);
        }
        passes += compare_histograms(&ha, &hb, p_floor)?.passed as usize;
    }
    Ok(passes as f64 / meta as f64)
}
