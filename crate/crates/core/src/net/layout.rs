//! Named tensor layout over the flat parameter vector.

use super::NetConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Parameter count of `cfg`, or `None` on overflow.
pub(crate) fn param_count(cfg: &NetConfig) -> Option<usize> {
    let d = cfg.hidden_dim;
    let mut n = d.checked_mul(4)?.checked_mul(ENC_INPUTS.checked_add(d)? + 1)?;
    let mut in_ch = d.checked_add(1)?;
    for (&out_ch, &k) in cfg.conv_filters.iter().zip(&cfg.kernel_sizes) {
        n = n.checked_add(out_ch.checked_mul(in_ch)?.checked_mul(k)?.checked_add(out_ch)?)?;
        in_ch = out_ch;
    }
    n.checked_add(in_ch)?.checked_add(3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ConvSlot {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub weight: usize,
    pub bias: usize,
}

/// Offsets of every tensor. Gate order in the encoder is input, forget,
/// cell, output; its weight matrix acts on `[x; h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub(crate) hidden: usize,
    pub(crate) enc_w: usize,
    pub(crate) enc_b: usize,
    pub(crate) convs: Vec<ConvSlot>,
    pub(crate) head_w: usize,
    pub(crate) head_b: usize,
    pub(crate) log_gamma_sq: usize,
    pub(crate) log_eta_b_sq: usize,
    pub(crate) total: usize,
    tensors: Vec<TensorSpec>,
}

/// Encoder input features per step: normalized cycle and HI.
pub(crate) const ENC_INPUTS: usize = 2;

impl Layout {
    pub fn new(cfg: &NetConfig) -> Self {
        let d = cfg.hidden_dim;
        let mut tensors = Vec::new();
        let mut at = 0usize;
        let mut push = |name: String, shape: Vec<usize>| {
            let spec = TensorSpec {
                name,
                shape,
                offset: at,
            };
            at += spec.len();
            let off = spec.offset;
            tensors.push(spec);
            off
        };
        let enc_w = push("encoder.weight".into(), vec![4 * d, ENC_INPUTS + d]);
        let enc_b = push("encoder.bias".into(), vec![4 * d]);
        let mut convs = Vec::new();
        let mut in_ch = d + 1;
        for (l, (&out_ch, &kernel)) in cfg.conv_filters.iter().zip(&cfg.kernel_sizes).enumerate() {
            let weight = push(format!("decoder.conv{l}.weight"), vec![out_ch, in_ch, kernel]);
            let bias = push(format!("decoder.conv{l}.bias"), vec![out_ch]);
            convs.push(ConvSlot {
                in_ch,
                out_ch,
                kernel,
                weight,
                bias,
            });
            in_ch = out_ch;
        }
        let head_w = push("decoder.head.weight".into(), vec![in_ch]);
        let head_b = push("decoder.head.bias".into(), vec![1]);
        let log_gamma_sq = push("variance.log_gamma_sq".into(), vec![]);
        let log_eta_b_sq = push("variance.log_eta_b_sq".into(), vec![]);
        Layout {
            hidden: d,
            enc_w,
            enc_b,
            convs,
            head_w,
            head_b,
            log_gamma_sq,
            log_eta_b_sq,
            total: at,
            tensors,
        }
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Indices of the two log-variance scalars.
    pub fn variance_indices(&self) -> [usize; 2] {
        [self.log_gamma_sq, self.log_eta_b_sq]
    }

    /// Whether weight decay applies at index `i` (weights only, not biases
    /// or the variance branch).
    pub(crate) fn decays(&self, i: usize) -> bool {
        self.tensors
            .iter()
            .find(|t| t.range().contains(&i))
            .is_some_and(|t| t.name.ends_with(".weight"))
    }
}
