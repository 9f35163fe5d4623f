//! The nonlinear estimator: a small 1-D convolutional network with
//! zero-fixing soft-shrink nonlinearities and an enforced Lipschitz budget.
//!
//! The flat input vector of length `2N` is viewed as a `(channels × length)`
//! signal with `length = 2N / in_channels(first layer)`; circular
//! convolutions preserve the length, so any architecture whose first input
//! channel count equals its last output channel count maps `R^{2N} → R^{2N}`.
//! A kernel-1 convolution on a length-1 view is a dense matrix, which keeps
//! tiny linear configurations expressible for oracle comparisons.
//!
//! Reverse-mode derivatives are implemented by hand per layer (the network
//! is small and fixed); there is no general autodiff.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// One network layer.
#[derive(Debug, Clone)]
pub enum Layer {
    /// Circular 1-D convolution, odd kernel, no bias unless explicitly
    /// enabled for ablation studies. Weights indexed `w[out][in][tap]`,
    /// flattened row-major.
    Conv1d {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        w: Vec<f64>,
        /// Per-output-channel bias; `None` for the standard zero-bias net.
        bias: Option<Vec<f64>>,
    },
    /// Per-channel soft shrinkage `y = sign(x)·max(|x| − λ, 0)` with a
    /// learnable nonnegative threshold per channel. Zero-fixing and
    /// 1-Lipschitz for any λ ≥ 0.
    SoftShrink { lambda: Vec<f64> },
}

impl Layer {
    fn trainable_len(&self) -> usize {
        match self {
            Layer::Conv1d { w, bias, .. } => w.len() + bias.as_ref().map_or(0, |b| b.len()),
            Layer::SoftShrink { lambda } => lambda.len(),
        }
    }
}

/// Parameters of the nonlinear estimator plus its Lipschitz bookkeeping.
#[derive(Debug, Clone)]
pub struct NleParams {
    pub layers: Vec<Layer>,
    /// Lipschitz budget for the whole network, in (0, 1).
    pub lip_target: f64,
    /// Per-convolution spectral-norm estimates from the latest
    /// normalization pass (empty before the first pass).
    layer_norms: Vec<f64>,
    /// Power-iteration vectors keyed by (conv layer index, signal length).
    /// Runtime-only state; never serialized.
    power_state: HashMap<(usize, usize), Vec<f64>>,
}

impl NleParams {
    /// Validate and wrap a layer stack.
    pub fn new(layers: Vec<Layer>, lip_target: f64) -> Result<Self> {
        if !(lip_target > 0.0 && lip_target < 1.0) {
            return Err(Error::Validation(format!(
                "Lipschitz budget must lie in (0,1), got {lip_target}"
            )));
        }
        if layers.is_empty() {
            return Err(Error::Validation("network needs at least one layer".into()));
        }
        let first_in = match &layers[0] {
            Layer::Conv1d { in_ch, .. } => *in_ch,
            Layer::SoftShrink { .. } => {
                return Err(Error::Validation(
                    "first layer must be a convolution (defines the channel view)".into(),
                ))
            }
        };
        let mut ch = first_in;
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Conv1d {
                    in_ch,
                    out_ch,
                    kernel,
                    w,
                    bias,
                } => {
                    if *in_ch != ch {
                        return Err(Error::Dim {
                            what: "conv input channels",
                            expected: ch,
                            got: *in_ch,
                        });
                    }
                    if *kernel % 2 == 0 || *kernel == 0 {
                        return Err(Error::Validation(format!(
                            "layer {i}: kernel size must be odd, got {kernel}"
                        )));
                    }
                    if w.len() != in_ch * out_ch * kernel {
                        return Err(Error::Dim {
                            what: "conv weight buffer",
                            expected: in_ch * out_ch * kernel,
                            got: w.len(),
                        });
                    }
                    if let Some(b) = bias {
                        if b.len() != *out_ch {
                            return Err(Error::Dim {
                                what: "conv bias",
                                expected: *out_ch,
                                got: b.len(),
                            });
                        }
                    }
                    ch = *out_ch;
                }
                Layer::SoftShrink { lambda } => {
                    if lambda.len() != ch {
                        return Err(Error::Dim {
                            what: "shrink thresholds",
                            expected: ch,
                            got: lambda.len(),
                        });
                    }
                }
            }
        }
        if ch != first_in {
            return Err(Error::Validation(format!(
                "network must preserve the flat dimension: first in_ch = {first_in}, last out_ch = {ch}"
            )));
        }
        Ok(NleParams {
            layers,
            lip_target,
            layer_norms: Vec::new(),
            power_state: HashMap::new(),
        })
    }

    /// Channel count of the flat-vector view (first conv's input channels).
    pub fn view_channels(&self) -> usize {
        match &self.layers[0] {
            Layer::Conv1d { in_ch, .. } => *in_ch,
            Layer::SoftShrink { .. } => unreachable!("validated at construction"),
        }
    }

    fn signal_len(&self, flat_len: usize) -> Result<usize> {
        let ch = self.view_channels();
        if flat_len == 0 || flat_len % ch != 0 {
            return Err(Error::Dim {
                what: "input vector (must be a multiple of the channel view)",
                expected: ch,
                got: flat_len,
            });
        }
        Ok(flat_len / ch)
    }

    /// Total number of trainable scalars.
    pub fn param_len(&self) -> usize {
        self.layers.iter().map(Layer::trainable_len).sum()
    }

    /// Flatten all trainable parameters (layer order; conv weights, then
    /// bias if present; shrink thresholds).
    pub fn get_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_len());
        for layer in &self.layers {
            match layer {
                Layer::Conv1d { w, bias, .. } => {
                    out.extend_from_slice(w);
                    if let Some(b) = bias {
                        out.extend_from_slice(b);
                    }
                }
                Layer::SoftShrink { lambda } => out.extend_from_slice(lambda),
            }
        }
        out
    }

    /// Overwrite all trainable parameters from a flat vector
    /// (inverse of [`NleParams::get_params`]).
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_len() {
            return Err(Error::Dim {
                what: "flat parameter vector",
                expected: self.param_len(),
                got: flat.len(),
            });
        }
        let mut pos = 0;
        for layer in &mut self.layers {
            match layer {
                Layer::Conv1d { w, bias, .. } => {
                    let wl = w.len();
                    w.copy_from_slice(&flat[pos..pos + wl]);
                    pos += wl;
                    if let Some(b) = bias {
                        let bl = b.len();
                        b.copy_from_slice(&flat[pos..pos + bl]);
                        pos += bl;
                    }
                }
                Layer::SoftShrink { lambda } => {
                    let ll = lambda.len();
                    lambda.copy_from_slice(&flat[pos..pos + ll]);
                    pos += ll;
                }
            }
        }
        Ok(())
    }

    /// Clamp shrink thresholds to be nonnegative (call after an optimizer
    /// step; negative thresholds would break the 1-Lipschitz guarantee).
    pub fn clamp_thresholds(&mut self) {
        for layer in &mut self.layers {
            if let Layer::SoftShrink { lambda } = layer {
                for v in lambda.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
    }
}

fn circ(idx: i64, len: usize) -> usize {
    idx.rem_euclid(len as i64) as usize
}

/// Fill `padded` (length `len + kernel − 1`) so that
/// `padded[t + j] = signal[(t + j − pad) mod len]`.
fn fill_padded(signal: &[f64], padded: &mut [f64], kernel: usize) {
    let len = signal.len();
    let pad = (kernel / 2) as i64;
    for (s, slot) in padded.iter_mut().enumerate() {
        *slot = signal[circ(s as i64 - pad, len)];
    }
}

/// Circular convolution of a (in_ch × len) signal into (out_ch × len).
fn conv1d_apply(
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    w: &[f64],
    bias: Option<&[f64]>,
    x: &[f64],
    len: usize,
    out: &mut [f64],
) {
    out.fill(0.0);
    let mut padded = vec![0.0; len + kernel - 1];
    for ic in 0..in_ch {
        fill_padded(&x[ic * len..(ic + 1) * len], &mut padded, kernel);
        for oc in 0..out_ch {
            let wbase = (oc * in_ch + ic) * kernel;
            let dst = &mut out[oc * len..(oc + 1) * len];
            for j in 0..kernel {
                let wj = w[wbase + j];
                if wj != 0.0 {
                    let seg = &padded[j..j + len];
                    for (d, s) in dst.iter_mut().zip(seg) {
                        *d += wj * s;
                    }
                }
            }
        }
    }
    if let Some(b) = bias {
        for oc in 0..out_ch {
            let bv = b[oc];
            for d in &mut out[oc * len..(oc + 1) * len] {
                *d += bv;
            }
        }
    }
}

/// Adjoint of the (bias-free) convolution: maps an (out_ch × len) cotangent
/// back to (in_ch × len). Equals a convolution with the tap-reversed,
/// channel-transposed kernel.
fn conv1d_adjoint(
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    w: &[f64],
    cot: &[f64],
    len: usize,
    out: &mut [f64],
) {
    out.fill(0.0);
    let mut padded = vec![0.0; len + kernel - 1];
    for oc in 0..out_ch {
        fill_padded(&cot[oc * len..(oc + 1) * len], &mut padded, kernel);
        for ic in 0..in_ch {
            let wbase = (oc * in_ch + ic) * kernel;
            let dst = &mut out[ic * len..(ic + 1) * len];
            for j in 0..kernel {
                // reversed tap
                let wj = w[wbase + (kernel - 1 - j)];
                if wj != 0.0 {
                    let seg = &padded[j..j + len];
                    for (d, s) in dst.iter_mut().zip(seg) {
                        *d += wj * s;
                    }
                }
            }
        }
    }
}

/// Saved forward activations: the input to every layer, plus the view length.
pub struct Tape {
    inputs: Vec<Vec<f64>>,
    len: usize,
}

/// Evaluate the network on a flat vector.
pub fn nle_forward(p: &NleParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_impl(p, x, None)?.0)
}

/// Evaluate and keep the activations needed for [`nle_vjp_with_tape`].
pub fn nle_forward_with_tape(p: &NleParams, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
    let mut tape = Tape {
        inputs: Vec::with_capacity(p.layers.len()),
        len: 0,
    };
    let (y, len) = forward_impl(p, x, Some(&mut tape))?;
    tape.len = len;
    Ok((y, tape))
}

fn forward_impl(p: &NleParams, x: &[f64], mut tape: Option<&mut Tape>) -> Result<(Vec<f64>, usize)> {
    let len = p.signal_len(x.len())?;
    let mut cur = x.to_vec();
    for layer in &p.layers {
        if let Some(t) = tape.as_deref_mut() {
            t.inputs.push(cur.clone());
        }
        match layer {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                w,
                bias,
            } => {
                let mut out = vec![0.0; out_ch * len];
                conv1d_apply(*in_ch, *out_ch, *kernel, w, bias.as_deref(), &cur, len, &mut out);
                cur = out;
            }
            Layer::SoftShrink { lambda } => {
                for (c, &lam) in lambda.iter().enumerate() {
                    for v in &mut cur[c * len..(c + 1) * len] {
                        let mag = v.abs() - lam;
                        *v = if mag > 0.0 { v.signum() * mag } else { 0.0 };
                    }
                }
            }
        }
    }
    Ok((cur, len))
}

/// Smallest distance of any shrink-layer preactivation magnitude from its
/// threshold. The network is nondifferentiable exactly where this is zero,
/// so finite-difference gradient checks are meaningful only for inputs with
/// a margin comfortably above the probe step.
pub fn shrink_kink_margin(p: &NleParams, x: &[f64]) -> Result<f64> {
    let len = p.signal_len(x.len())?;
    let mut cur = x.to_vec();
    let mut margin = f64::INFINITY;
    for layer in &p.layers {
        match layer {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                w,
                bias,
            } => {
                let mut out = vec![0.0; out_ch * len];
                conv1d_apply(*in_ch, *out_ch, *kernel, w, bias.as_deref(), &cur, len, &mut out);
                cur = out;
            }
            Layer::SoftShrink { lambda } => {
                for (c, &lam) in lambda.iter().enumerate() {
                    for v in &mut cur[c * len..(c + 1) * len] {
                        margin = margin.min((v.abs() - lam).abs());
                        let mag = v.abs() - lam;
                        *v = if mag > 0.0 { v.signum() * mag } else { 0.0 };
                    }
                }
            }
        }
    }
    Ok(margin)
}

/// Reverse-mode products against a cotangent on the output:
/// returns `(∂out/∂Θᵀ·cot, ∂out/∂xᵀ·cot)` with the parameter gradient laid
/// out like [`NleParams::get_params`].
pub fn nle_vjp(p: &NleParams, x: &[f64], cotangent: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, tape) = nle_forward_with_tape(p, x)?;
    nle_vjp_with_tape(p, &tape, cotangent)
}

/// Reverse-mode products reusing activations from a prior forward pass.
pub fn nle_vjp_with_tape(
    p: &NleParams,
    tape: &Tape,
    cotangent: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = tape.len;
    let out_len = tape.inputs.first().map_or(0, Vec::len);
    if cotangent.len() != out_len {
        return Err(Error::Dim {
            what: "output cotangent",
            expected: out_len,
            got: cotangent.len(),
        });
    }
    let mut grad_params = vec![0.0; p.param_len()];
    // Offsets of each layer's parameter block in the flat layout.
    let mut offsets = Vec::with_capacity(p.layers.len());
    let mut pos = 0;
    for layer in &p.layers {
        offsets.push(pos);
        pos += layer.trainable_len();
    }

    let mut cot = cotangent.to_vec();
    for (i, layer) in p.layers.iter().enumerate().rev() {
        let x_in = &tape.inputs[i];
        let off = offsets[i];
        match layer {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                w,
                bias,
            } => {
                // Weight gradient: correlate the cotangent with padded input.
                let mut padded = vec![0.0; len + kernel - 1];
                for ic in 0..*in_ch {
                    fill_padded(&x_in[ic * len..(ic + 1) * len], &mut padded, *kernel);
                    for oc in 0..*out_ch {
                        let cslice = &cot[oc * len..(oc + 1) * len];
                        let gbase = off + (oc * in_ch + ic) * kernel;
                        for j in 0..*kernel {
                            let seg = &padded[j..j + len];
                            let mut acc = 0.0;
                            for (c, s) in cslice.iter().zip(seg) {
                                acc += c * s;
                            }
                            grad_params[gbase + j] += acc;
                        }
                    }
                }
                if bias.is_some() {
                    let bias_off = off + w.len();
                    for oc in 0..*out_ch {
                        grad_params[bias_off + oc] +=
                            cot[oc * len..(oc + 1) * len].iter().sum::<f64>();
                    }
                }
                // Input gradient: adjoint convolution.
                let mut next = vec![0.0; in_ch * len];
                conv1d_adjoint(*in_ch, *out_ch, *kernel, w, &cot, len, &mut next);
                cot = next;
            }
            Layer::SoftShrink { lambda } => {
                for (c, &lam) in lambda.iter().enumerate() {
                    let mut glam = 0.0;
                    for t in 0..len {
                        let idx = c * len + t;
                        let xv = x_in[idx];
                        if xv.abs() > lam {
                            glam -= xv.signum() * cot[idx];
                            // pass-through region: d(out)/d(in) = 1
                        } else {
                            cot[idx] = 0.0;
                        }
                    }
                    grad_params[off + c] = glam;
                }
            }
        }
    }
    Ok((grad_params, cot))
}

/// Deterministic pseudo-random unit vector for power-iteration starts.
fn seed_vector(n: usize, tag: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i * 2654435761 + tag * 40503 + 17) as f64 * 1e-4).sin() + 0.01)
        .collect();
    let norm = crate::linalg::nrm2(&v);
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}

/// Estimate the spectral norm of one convolution layer acting on signals of
/// the given length, warm-starting from (and updating) `v`.
fn conv_spectral_norm(
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    w: &[f64],
    len: usize,
    v: &mut Vec<f64>,
    iters: usize,
) -> f64 {
    let mut fwd = vec![0.0; out_ch * len];
    for _ in 0..iters.max(1) {
        conv1d_apply(in_ch, out_ch, kernel, w, None, v, len, &mut fwd);
        let sigma = crate::linalg::nrm2(&fwd);
        if sigma < 1e-300 {
            return 0.0;
        }
        for x in fwd.iter_mut() {
            *x /= sigma;
        }
        let mut back = vec![0.0; in_ch * len];
        conv1d_adjoint(in_ch, out_ch, kernel, w, &fwd, len, &mut back);
        let bn = crate::linalg::nrm2(&back);
        if bn < 1e-300 {
            return 0.0;
        }
        for x in back.iter_mut() {
            *x /= bn;
        }
        *v = back;
    }
    // One more application for the Rayleigh estimate with the final vector.
    conv1d_apply(in_ch, out_ch, kernel, w, None, v, len, &mut fwd);
    crate::linalg::nrm2(&fwd)
}

/// Refresh per-convolution spectral-norm estimates by power iteration at
/// the given flat width, then rescale any convolution whose norm exceeds
/// its budget down to `lip_target^(1/#convs)`; layers already inside the
/// budget are left untouched, so constrained training can move freely
/// below the cap instead of being pinned to the exact-norm manifold
/// (norm-decreasing descent directions stay feasible). Shrink layers are
/// 1-Lipschitz and untouched.
///
/// With one iteration per training step this is projection-style spectral
/// normalization; evaluation passes use ~50 iterations for a tight product.
pub fn spectral_normalize(p: &mut NleParams, width: usize, iters: usize) -> Result<()> {
    let len = p.signal_len(width)?;
    let n_conv = p
        .layers
        .iter()
        .filter(|l| matches!(l, Layer::Conv1d { .. }))
        .count();
    let per_layer = p.lip_target.powf(1.0 / n_conv as f64);
    let mut norms = Vec::with_capacity(n_conv);
    for (i, layer) in p.layers.iter_mut().enumerate() {
        if let Layer::Conv1d {
            in_ch,
            out_ch,
            kernel,
            w,
            ..
        } = layer
        {
            let v = p
                .power_state
                .entry((i, len))
                .or_insert_with(|| seed_vector(*in_ch * len, i + 1));
            let sigma = conv_spectral_norm(*in_ch, *out_ch, *kernel, w, len, v, iters);
            if sigma > per_layer {
                let scale = per_layer / sigma;
                for x in w.iter_mut() {
                    *x *= scale;
                }
                norms.push(per_layer);
            } else {
                norms.push(sigma.max(0.0));
            }
        }
    }
    p.layer_norms = norms;
    Ok(())
}

/// Product of the per-convolution spectral norms — an upper bound on the
/// network's Lipschitz constant (shrink layers are 1-Lipschitz).
///
/// Returns `+∞` before the first [`spectral_normalize`] pass: with no
/// estimates available, infinity is the only honest upper bound.
pub fn lipschitz_upper_bound(p: &NleParams) -> f64 {
    if p.layer_norms.is_empty() {
        return f64::INFINITY;
    }
    p.layer_norms.iter().product()
}

/// Default desk-scale architecture: three circular kernel-3 convolutions
/// (channels 1 → 16 → 16 → 1, no bias) with per-channel soft shrinkage
/// after the first two, Gaussian-initialized and spectrally normalized at
/// width `n2` (50 iterations).
pub fn init_default(n2: usize, lip_target: f64, rng: &mut impl Rng) -> Result<NleParams> {
    init_with_channels(n2, lip_target, 16, false, rng)
}

/// Same architecture with configurable hidden width and optional biases
/// (biases exist solely for the zero-bias ablation study).
pub fn init_with_channels(
    n2: usize,
    lip_target: f64,
    hidden: usize,
    with_bias: bool,
    rng: &mut impl Rng,
) -> Result<NleParams> {
    let mut conv = |in_ch: usize, out_ch: usize| -> Layer {
        let w: Vec<f64> = (0..in_ch * out_ch * 3)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let bias = with_bias.then(|| vec![0.0; out_ch]);
        Layer::Conv1d {
            in_ch,
            out_ch,
            kernel: 3,
            w,
            bias,
        }
    };
    let layers = vec![
        conv(1, hidden),
        Layer::SoftShrink {
            lambda: vec![2e-2; hidden],
        },
        conv(hidden, hidden),
        Layer::SoftShrink {
            lambda: vec![2e-2; hidden],
        },
        conv(hidden, 1),
    ];
    let mut p = NleParams::new(layers, lip_target)?;
    spectral_normalize(&mut p, n2, 50)?;
    Ok(p)
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"GNLE";
const CHECKPOINT_VERSION: u32 = 1;
const TAG_CONV: u8 = 0;
const TAG_SHRINK: u8 = 1;

/// Serialize the network (architecture + weights + Lipschitz budget).
/// Power-iteration state is runtime-only and not written.
pub fn save_model(path: &Path, p: &NleParams) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, p)?;
    w.flush()?;
    Ok(())
}

/// Serialize into any writer (used to embed models inside checkpoints).
pub fn write_model(w: &mut impl Write, p: &NleParams) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&p.lip_target.to_le_bytes())?;
    w.write_all(&(p.layers.len() as u32).to_le_bytes())?;
    for layer in &p.layers {
        match layer {
            Layer::Conv1d {
                in_ch,
                out_ch,
                kernel,
                w: wts,
                bias,
            } => {
                w.write_all(&[TAG_CONV])?;
                w.write_all(&(*in_ch as u32).to_le_bytes())?;
                w.write_all(&(*out_ch as u32).to_le_bytes())?;
                w.write_all(&(*kernel as u32).to_le_bytes())?;
                w.write_all(&[u8::from(bias.is_some())])?;
                for v in wts {
                    w.write_all(&v.to_le_bytes())?;
                }
                if let Some(b) = bias {
                    for v in b {
                        w.write_all(&v.to_le_bytes())?;
                    }
                }
            }
            Layer::SoftShrink { lambda } => {
                w.write_all(&[TAG_SHRINK])?;
                w.write_all(&(lambda.len() as u32).to_le_bytes())?;
                for v in lambda {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated model file".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact_or_truncated(r, &mut b)?;
    Ok(b[0])
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64_vec(r: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(read_f64(r)?);
    }
    Ok(out)
}

/// Model dimensions are bounded to reject corrupt headers before allocating.
const MAX_LAYER_DIM: u32 = 1 << 16;

/// Deserialize a model written by [`save_model`].
///
/// Spectral-norm estimates are not stored; run [`spectral_normalize`]
/// before relying on [`lipschitz_upper_bound`].
pub fn load_model(path: &Path) -> Result<NleParams> {
    let mut r = BufReader::new(File::open(path)?);
    read_model(&mut r)
}

/// Deserialize from any reader (counterpart of [`write_model`]).
pub fn read_model(r: &mut impl Read) -> Result<NleParams> {
    let mut magic = [0u8; 4];
    read_exact_or_truncated(r, &mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad model magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
        )));
    }
    let version = read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let lip_target = read_f64(r)?;
    let n_layers = read_u32(r)?;
    if n_layers > MAX_LAYER_DIM {
        return Err(Error::Format("implausible layer count".into()));
    }
    let mut layers = Vec::with_capacity(n_layers as usize);
    for _ in 0..n_layers {
        match read_u8(r)? {
            TAG_CONV => {
                let in_ch = read_u32(r)?;
                let out_ch = read_u32(r)?;
                let kernel = read_u32(r)?;
                if in_ch > MAX_LAYER_DIM || out_ch > MAX_LAYER_DIM || kernel > MAX_LAYER_DIM {
                    return Err(Error::Format("implausible conv dimensions".into()));
                }
                let has_bias = read_u8(r)? != 0;
                let w = read_f64_vec(r, (in_ch * out_ch * kernel) as usize)?;
                let bias = if has_bias {
                    Some(read_f64_vec(r, out_ch as usize)?)
                } else {
                    None
                };
                layers.push(Layer::Conv1d {
                    in_ch: in_ch as usize,
                    out_ch: out_ch as usize,
                    kernel: kernel as usize,
                    w,
                    bias,
                });
            }
            TAG_SHRINK => {
                let ch = read_u32(r)?;
                if ch > MAX_LAYER_DIM {
                    return Err(Error::Format("implausible channel count".into()));
                }
                layers.push(Layer::SoftShrink {
                    lambda: read_f64_vec(r, ch as usize)?,
                });
            }
            tag => return Err(Error::Format(format!("unknown layer tag {tag}"))),
        }
    }
    NleParams::new(layers, lip_target)
}
