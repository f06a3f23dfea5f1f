/// Patience-based stopping on a maximised validation metric.
///
/// A validation counts as an improvement only if it strictly exceeds the best
/// value so far; `patience` consecutive non-improving validations stop training.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    best_index: usize,
    since_best: usize,
    seen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience: patience.max(1),
            best: None,
            best_index: 0,
            since_best: 0,
            seen: 0,
        }
    }

    pub fn observe(&mut self, value: f64) -> Verdict {
        let index = self.seen;
        self.seen += 1;
        match self.best {
            Some(best) if value <= best => {
                self.since_best += 1;
                if self.since_best >= self.patience {
                    Verdict::Stop
                } else {
                    Verdict::Continue
                }
            }
            _ => {
                self.best = Some(value);
                self.best_index = index;
                self.since_best = 0;
                Verdict::Improved
            }
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }

    /// Position of the best observation among those seen.
    pub fn best_index(&self) -> usize {
        self.best_index
    }
}
