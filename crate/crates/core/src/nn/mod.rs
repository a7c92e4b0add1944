//! Fully-connected networks with explicit reverse-mode gradients, and Adam.

mod adam;
pub(crate) mod checkpoint;
mod dense;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_net, write_net, NetHeader, NET_FORMAT};
pub use dense::{Activation, DenseNet, ForwardCache, GradientBundle, LayerGrads, NetSpec};

/// Uniform access to a flat sequence of parameter slices.
///
/// Networks, gradient bundles and whole models implement this with the
/// same traversal order, which is what lets the optimizer pair a
/// parameter slice with its gradient.
pub trait Parameters<T> {
    fn visit(&self, f: &mut dyn FnMut(&[T]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut [T]));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |s| n += s.len());
        n
    }

    fn to_flat(&self) -> Vec<T>
    where
        T: Copy,
    {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |s| out.extend_from_slice(s));
        out
    }

    /// Overwrites every parameter from `flat`; panics if the length is wrong.
    fn set_flat(&mut self, flat: &[T])
    where
        T: Copy,
    {
        let mut off = 0;
        self.visit_mut(&mut |s| {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        });
        assert_eq!(off, flat.len(), "flat parameter vector has the wrong length");
    }
}
