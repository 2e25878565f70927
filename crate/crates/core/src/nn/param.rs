use super::{NnError, Tensor};

/// A named trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSlot {
    pub name: String,
    pub value: Tensor,
    /// `None` until a backward pass populates it; same shape as `value` when set.
    pub grad: Option<Tensor>,
    pub trainable: bool,
}

/// Ordered collection of uniquely named parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    slots: Vec<ParamSlot>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, value: Tensor) -> Result<usize, NnError> {
        if self.index_of(name).is_some() {
            return Err(NnError::DuplicateParam(name.to_string()));
        }
        self.slots.push(ParamSlot {
            name: name.to_string(),
            value,
            grad: None,
            trainable: true,
        });
        Ok(self.slots.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, NnError> {
        self.index_of(name)
            .map(|i| &self.slots[i].value)
            .ok_or_else(|| NnError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, NnError> {
        match self.index_of(name) {
            Some(i) => Ok(&mut self.slots[i].value),
            None => Err(NnError::UnknownParam(name.to_string())),
        }
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [ParamSlot] {
        &mut self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Total number of scalar values.
    pub fn count(&self) -> usize {
        self.slots.iter().map(|s| s.value.len()).sum()
    }

    pub fn clear_grads(&mut self) {
        for s in &mut self.slots {
            s.grad = None;
        }
    }

    /// Set every gradient to zeros of the right shape.
    pub fn zero_grads(&mut self) {
        for s in &mut self.slots {
            s.grad = Some(Tensor::zeros(s.value.shape()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::zeros(&[2])).unwrap();
        assert!(matches!(
            p.insert("w", Tensor::zeros(&[3])),
            Err(NnError::DuplicateParam(_))
        ));
        assert!(matches!(p.get("missing"), Err(NnError::UnknownParam(_))));
    }

    #[test]
    fn zeroed_grads_match_value_shapes() {
        let mut p = ParamStore::new();
        p.insert("a", Tensor::zeros(&[2, 3])).unwrap();
        p.insert("b", Tensor::zeros(&[4])).unwrap();
        p.zero_grads();
        for s in p.slots() {
            assert_eq!(s.grad.as_ref().unwrap().shape(), s.value.shape());
        }
        assert_eq!(p.count(), 10);
    }
}
