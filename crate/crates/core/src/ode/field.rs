/// Right-hand side `dy/dt = f(t, y)`.
///
/// `eval` must not read `dy` and must fill every entry of it; `y` and `dy`
/// always have length [`VectorField::dim`].
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: VectorField + ?Sized> VectorField for &mut F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        (**self).eval(t, y, dy)
    }
}

impl<F: VectorField + ?Sized> VectorField for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        (**self).eval(t, y, dy)
    }
}

/// Adapts a closure `(t, y, dy)` into a [`VectorField`].
pub struct FnField<G> {
    dim: usize,
    g: G,
}

impl<G: FnMut(f64, &[f64], &mut [f64])> FnField<G> {
    pub fn new(dim: usize, g: G) -> Self {
        Self { dim, g }
    }
}

impl<G: FnMut(f64, &[f64], &mut [f64])> VectorField for FnField<G> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.g)(t, y, dy)
    }
}

/// A vector field plus its evaluation counter (NFE).
pub struct FieldHandle<F: ?Sized> {
    nfe: u64,
    field: F,
}

impl<F: VectorField> FieldHandle<F> {
    pub fn new(field: F) -> Self {
        Self { nfe: 0, field }
    }

    pub fn into_inner(self) -> F {
        self.field
    }
}

impl<G: FnMut(f64, &[f64], &mut [f64])> FieldHandle<FnField<G>> {
    pub fn from_fn(dim: usize, g: G) -> Self {
        FieldHandle::new(FnField::new(dim, g))
    }
}

impl<F: VectorField + ?Sized> FieldHandle<F> {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn nfe(&self) -> u64 {
        self.nfe
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        debug_assert_eq!(y.len(), self.field.dim());
        debug_assert_eq!(dy.len(), self.field.dim());
        self.nfe += 1;
        self.field.eval(t, y, dy);
    }

    pub fn eval_vec(&mut self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut dy = vec![0.0; y.len()];
        self.eval(t, y, &mut dy);
        dy
    }
}
