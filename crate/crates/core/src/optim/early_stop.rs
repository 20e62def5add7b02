/// Tracks validation loss and keeps the best snapshot seen so far.
///
/// An epoch counts as an improvement when its loss is below
/// `best - min_delta`. Training stops once more than `patience` epochs in a
/// row fail to improve.
#[derive(Debug, Clone)]
pub struct EarlyStopper<S> {
    pub patience: usize,
    pub min_delta: f64,
    best_loss: f64,
    best_epoch: usize,
    epochs_since_best: usize,
    best: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

impl<S> EarlyStopper<S> {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self { patience, min_delta, best_loss: f64::INFINITY, best_epoch: 0, epochs_since_best: 0, best: None }
    }

    /// Records one epoch. `snapshot` is only called on improvement.
    pub fn observe(&mut self, epoch: usize, val_loss: f64, snapshot: impl FnOnce() -> S) -> Decision {
        if val_loss < self.best_loss - self.min_delta {
            self.best_loss = val_loss;
            self.best_epoch = epoch;
            self.epochs_since_best = 0;
            self.best = Some(snapshot());
        } else {
            self.epochs_since_best += 1;
        }
        if self.epochs_since_best > self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    /// 1-based epoch of the best snapshot, 0 before any observation.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn epochs_since_best(&self) -> usize {
        self.epochs_since_best
    }

    pub fn best(&self) -> Option<&S> {
        self.best.as_ref()
    }

    pub fn into_best(self) -> Option<S> {
        self.best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patience_two_counter_semantics() {
        let losses = [1.0, 0.9, 0.95, 0.97, 0.99];
        let mut es = EarlyStopper::new(2, 1e-4);
        let mut stopped_at = None;
        for (i, &l) in losses.iter().enumerate() {
            let epoch = i + 1;
            if es.observe(epoch, l, || epoch) == Decision::Stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(5));
        assert_eq!(es.best_epoch(), 2);
        assert_eq!(es.best(), Some(&2));
    }

    #[test]
    fn improvements_below_min_delta_do_not_count() {
        let mut es = EarlyStopper::new(0, 0.1);
        assert_eq!(es.observe(1, 1.0, || ()), Decision::Continue);
        assert_eq!(es.observe(2, 0.95, || ()), Decision::Stop);
        assert_eq!(es.best_epoch(), 1);
    }
}
