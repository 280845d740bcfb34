use crate::netlist::Netlist;
use crate::sim::{lane_bits, pack_patterns, Pattern, Simulator, LANES};

type BlockFn = dyn Fn(&[u64], usize) -> Vec<u64> + Send + Sync;

/// Black-box view of a suspect chip: input patterns in, output bits out.
///
/// Queries are counted and may be capped by a budget. Internally the
/// oracle answers 64 patterns at a time; detectors charge only the
/// patterns a sequential tester would have applied.
pub struct SuspectOracle {
    width: usize,
    outputs: usize,
    eval: Box<BlockFn>,
    queries: u64,
    budget: Option<u64>,
}

impl std::fmt::Debug for SuspectOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuspectOracle")
            .field("width", &self.width)
            .field("outputs", &self.outputs)
            .field("queries", &self.queries)
            .field("budget", &self.budget)
            .finish()
    }
}

impl SuspectOracle {
    /// Oracle answering by simulation of `n`; the netlist is moved into a
    /// closure and is not reachable through the oracle.
    pub fn from_netlist(n: Netlist) -> Self {
        let width = n.inputs().len();
        let outputs = n.outputs().len();
        let sim = Simulator::new(&n);
        drop(n);
        SuspectOracle {
            width,
            outputs,
            eval: Box::new(move |words, _lanes| {
                let mut values = Vec::new();
                sim.run(words, &mut values);
                sim.output_words(&values)
            }),
            queries: 0,
            budget: None,
        }
    }

    /// Oracle backed by an arbitrary per-pattern function.
    pub fn from_fn(
        width: usize,
        outputs: usize,
        f: impl Fn(&Pattern) -> Vec<bool> + Send + Sync + 'static,
    ) -> Self {
        SuspectOracle {
            width,
            outputs,
            eval: Box::new(move |words, lanes| {
                let mut out = vec![0u64; outputs];
                for lane in 0..lanes {
                    let bits = f(&Pattern::from_bits(lane_bits(words, lane)));
                    assert_eq!(bits.len(), outputs, "oracle output width");
                    for (w, b) in out.iter_mut().zip(bits) {
                        *w |= u64::from(b) << lane;
                    }
                }
                out
            }),
            queries: 0,
            budget: None,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.queries))
    }

    /// One counted query; `None` once the budget is spent.
    pub fn query(&mut self, p: &Pattern) -> Option<Vec<bool>> {
        assert_eq!(p.len(), self.width, "pattern width");
        if self.charge(1) == 0 {
            return None;
        }
        Some(self.recheck(p))
    }

    /// Uncounted single query, used only to re-confirm a reported witness.
    pub(crate) fn recheck(&self, p: &Pattern) -> Vec<bool> {
        let words = pack_patterns(std::slice::from_ref(p), self.width).expect("pattern width");
        lane_bits(&(self.eval)(&words, 1), 0)
    }

    /// Uncounted block evaluation; callers must [`charge`](Self::charge)
    /// for the lanes they consume.
    pub(crate) fn peek_block(&self, words: &[u64], lanes: usize) -> Vec<u64> {
        debug_assert!(lanes <= LANES);
        (self.eval)(words, lanes)
    }

    /// Charges up to `n` queries and returns how many the budget allowed.
    pub(crate) fn charge(&mut self, n: u64) -> u64 {
        let granted = match self.remaining() {
            Some(r) => r.min(n),
            None => n,
        };
        self.queries += granted;
        granted
    }
}
