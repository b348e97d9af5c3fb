use std::collections::VecDeque;

pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_MIN_FRAMES: usize = 5;

/// Sliding-window majority vote over raw per-frame labels.
///
/// A label is stable once it fills a strict majority of the *configured*
/// window (`2·count > window`) and at least `min_frames` labels have been
/// seen; until then the output is `None` ("unstable").
#[derive(Debug, Clone)]
pub struct LabelSmoother {
    window: usize,
    min_frames: usize,
    recent: VecDeque<usize>,
    seen: usize,
}

impl LabelSmoother {
    pub fn new(window: usize, min_frames: usize) -> Self {
        assert!(window >= 1, "smoothing window must hold at least one label");
        LabelSmoother {
            window,
            min_frames,
            recent: VecDeque::with_capacity(window),
            seen: 0,
        }
    }

    pub fn push(&mut self, label: usize) -> Option<usize> {
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(label);
        self.seen += 1;
        self.current()
    }

    pub fn current(&self) -> Option<usize> {
        if self.seen < self.min_frames {
            return None;
        }
        // the window is short, so a quadratic count is fine
        self.recent
            .iter()
            .copied()
            .find(|&l| 2 * self.recent.iter().filter(|&&m| m == l).count() > self.window)
    }
}

impl Default for LabelSmoother {
    fn default() -> Self {
        LabelSmoother::new(DEFAULT_WINDOW, DEFAULT_MIN_FRAMES)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_stream_stabilizes_at_frame_eight() {
        let mut s = LabelSmoother::default();
        let out: Vec<Option<usize>> = (0..30).map(|_| s.push(2)).collect();
        assert!(out[..7].iter().all(Option::is_none));
        assert!(out[7..].iter().all(|&l| l == Some(2)));
    }

    #[test]
    fn split_window_is_unstable() {
        let mut s = LabelSmoother::new(4, 1);
        for l in [0, 0, 1, 1] {
            s.push(l);
        }
        assert_eq!(s.current(), None);
        assert_eq!(s.push(1), Some(1));
    }

    #[test]
    fn min_frames_gate() {
        let mut s = LabelSmoother::new(1, 5);
        for _ in 0..4 {
            assert_eq!(s.push(0), None);
        }
        assert_eq!(s.push(0), Some(0));
    }
}
