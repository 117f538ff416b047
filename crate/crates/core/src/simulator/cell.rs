/// Operand travelling through the array. `valid` is false for padding
/// injected into rows/columns that fall outside the workload on a partial
/// fold; such pairs advance the schedule but are never multiplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token {
    pub value: i64,
    pub valid: bool,
    pub last: bool,
}

/// Which input the accumulate MUX selects this cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellMode {
    #[default]
    InplaceAccumulate,
    CrossTierReduce,
}

/// What a cell did in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Step {
    Idle,
    Mac {
        product: Option<i64>,
        local_done: Option<i64>,
        merged: Option<i64>,
    },
    Reduce {
        incoming: i64,
    },
}

#[derive(Debug, Clone)]
pub struct MacCell {
    pub acc: i64,
    /// Partial sum received from the tier above, not yet added.
    pub vert_in: Option<i64>,
    pub mode: CellMode,
    local_done: bool,
    finished: bool,
    // Outgoing operand pipelines; one slot per cycle of hop latency.
    a_reg: Vec<Option<Token>>,
    b_reg: Vec<Option<Token>>,
}

impl MacCell {
    pub(crate) fn new(hop_latency: usize) -> Self {
        Self {
            acc: 0,
            vert_in: None,
            mode: CellMode::default(),
            local_done: false,
            finished: false,
            a_reg: vec![None; hop_latency],
            b_reg: vec![None; hop_latency],
        }
    }

    pub(crate) fn reset(&mut self) {
        self.acc = 0;
        self.vert_in = None;
        self.mode = CellMode::default();
        self.local_done = false;
        self.finished = false;
        self.a_reg.fill(None);
        self.b_reg.fill(None);
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub(crate) fn a_out(&self, slot: usize) -> Option<Token> {
        self.a_reg[slot]
    }

    pub(crate) fn b_out(&self, slot: usize) -> Option<Token> {
        self.b_reg[slot]
    }

    pub(crate) fn latch(&mut self, slot: usize, a: Option<Token>, b: Option<Token>) {
        self.a_reg[slot] = a;
        self.b_reg[slot] = b;
    }

    /// One clock edge. `expects_vertical` is true on every tier but the top
    /// one. Returns the new accumulator value through `self.acc`; the
    /// caller range-checks it.
    pub(crate) fn step(
        &mut self,
        a: Option<Token>,
        b: Option<Token>,
        expects_vertical: bool,
    ) -> Result<Step, ()> {
        match (a, b) {
            (Some(a), Some(b)) => {
                debug_assert_eq!(a.last, b.last, "operand streams out of alignment");
                self.mode = CellMode::InplaceAccumulate;
                let product = if a.valid && b.valid {
                    Some(a.value.checked_mul(b.value).ok_or(())?)
                } else {
                    None
                };
                let mut next = self.acc.checked_add(product.unwrap_or(0)).ok_or(())?;
                let mut local_done = None;
                let mut merged = None;
                if a.last {
                    self.local_done = true;
                    local_done = Some(next);
                    if !expects_vertical {
                        self.finished = true;
                    } else if let Some(v) = self.vert_in.take() {
                        next = next.checked_add(v).ok_or(())?;
                        merged = Some(v);
                        self.finished = true;
                    }
                }
                self.acc = next;
                Ok(Step::Mac {
                    product,
                    local_done,
                    merged,
                })
            }
            (None, None) => {
                if self.local_done && !self.finished {
                    if let Some(v) = self.vert_in.take() {
                        self.mode = CellMode::CrossTierReduce;
                        self.acc = self.acc.checked_add(v).ok_or(())?;
                        self.finished = true;
                        return Ok(Step::Reduce { incoming: v });
                    }
                }
                Ok(Step::Idle)
            }
            _ => unreachable!("A and B operands must arrive together"),
        }
    }
}
