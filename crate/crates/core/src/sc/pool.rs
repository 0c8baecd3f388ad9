//! Reference-counted fixed-width slot storage shared between list paths.

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub(crate) struct Pool<T> {
    width: usize,
    data: Vec<T>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl<T: Copy + Default> Pool<T> {
    pub(crate) fn new(width: usize) -> Self {
        Pool {
            width,
            data: Vec::new(),
            refs: Vec::new(),
            free: Vec::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        self.data.clear();
        self.refs.clear();
        self.free.clear();
    }

    #[inline]
    pub(crate) fn alloc(&mut self) -> u32 {
        if let Some(id) = self.free.pop() {
            self.refs[id as usize] = 1;
            id
        } else {
            let id = self.refs.len() as u32;
            self.refs.push(1);
            self.data.resize(self.data.len() + self.width, T::default());
            id
        }
    }

    #[inline]
    pub(crate) fn retain(&mut self, id: u32) {
        if id != NONE {
            self.refs[id as usize] += 1;
        }
    }

    #[inline]
    pub(crate) fn release(&mut self, id: u32) {
        if id != NONE {
            let r = &mut self.refs[id as usize];
            debug_assert!(*r > 0, "double release");
            *r -= 1;
            if *r == 0 {
                self.free.push(id);
            }
        }
    }

    /// Returns `id` if it is exclusively owned, otherwise a fresh slot.
    /// The contents of a fresh slot are unspecified.
    #[inline]
    pub(crate) fn writable(&mut self, id: &mut u32) -> u32 {
        if *id != NONE && self.refs[*id as usize] == 1 {
            return *id;
        }
        self.release(*id);
        *id = self.alloc();
        *id
    }

    #[inline]
    pub(crate) fn get(&self, id: u32) -> &[T] {
        let o = id as usize * self.width;
        &self.data[o..o + self.width]
    }

    #[inline]
    pub(crate) fn get_mut(&mut self, id: u32) -> &mut [T] {
        let o = id as usize * self.width;
        &mut self.data[o..o + self.width]
    }

    #[cfg(test)]
    pub(crate) fn live(&self) -> usize {
        self.refs.len() - self.free.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn copy_on_write() {
        let mut p: Pool<f64> = Pool::new(4);
        let mut a = p.alloc();
        p.get_mut(a).copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let mut b = a;
        p.retain(b);
        let old = b;
        let fresh = p.writable(&mut b);
        assert_ne!(fresh, old);
        let before = a;
        assert_eq!(p.writable(&mut a), before);
        assert_eq!(p.live(), 2);
        p.release(a);
        p.release(b);
        assert_eq!(p.live(), 0);
        let c = p.alloc();
        assert!(c <= 1);
    }
}
