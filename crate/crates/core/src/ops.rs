//! Tensor helpers missing from candle.

use candle_core::backend::BackendStorage;
use candle_core::cpu_backend::unary_map;
use candle_core::{CpuStorage, CustomOp1, CustomOp2, Layout, Shape, Tensor, D};

struct Acos;

impl CustomOp1 for Acos {
    fn name(&self) -> &'static str {
        "acos"
    }

    fn cpu_fwd(&self, storage: &CpuStorage, layout: &Layout) -> candle_core::Result<(CpuStorage, Shape)> {
        let out = match storage {
            CpuStorage::F64(xs) => CpuStorage::F64(unary_map(xs, layout, f64::acos)),
            CpuStorage::F32(xs) => CpuStorage::F32(unary_map(xs, layout, f32::acos)),
            other => {
                return Err(candle_core::Error::UnsupportedDTypeForOp(other.dtype(), "acos"));
            }
        };
        Ok((out, layout.shape().clone()))
    }

    fn bwd(&self, arg: &Tensor, _res: &Tensor, grad_res: &Tensor) -> candle_core::Result<Option<Tensor>> {
        // d/dx acos(x) = -1 / sqrt(1 - x^2)
        let denom = arg.sqr()?.affine(-1.0, 1.0)?.sqrt()?;
        Ok(Some(grad_res.neg()?.div(&denom)?))
    }
}

/// Element-wise arccosine with gradient. Inputs must lie strictly inside
/// (-1, 1) for a finite gradient.
pub fn acos(x: &Tensor) -> candle_core::Result<Tensor> {
    x.apply_op1(Acos)
}

struct StraightThrough;

impl CustomOp2 for StraightThrough {
    fn name(&self) -> &'static str {
        "straight-through"
    }

    fn cpu_fwd(
        &self,
        _z: &CpuStorage,
        lz: &Layout,
        q: &CpuStorage,
        lq: &Layout,
    ) -> candle_core::Result<(CpuStorage, Shape)> {
        if lz.shape() != lq.shape() {
            return Err(candle_core::Error::ShapeMismatchBinaryOp {
                lhs: lz.shape().clone(),
                rhs: lq.shape().clone(),
                op: "straight-through",
            });
        }
        let out = match q {
            CpuStorage::F64(xs) => CpuStorage::F64(unary_map(xs, lq, |x| x)),
            CpuStorage::F32(xs) => CpuStorage::F32(unary_map(xs, lq, |x| x)),
            other => {
                return Err(candle_core::Error::UnsupportedDTypeForOp(other.dtype(), "straight-through"));
            }
        };
        Ok((out, lq.shape().clone()))
    }

    fn bwd(
        &self,
        _z: &Tensor,
        q: &Tensor,
        _res: &Tensor,
        grad_res: &Tensor,
    ) -> candle_core::Result<(Option<Tensor>, Option<Tensor>)> {
        // An explicit zero keeps backprop valid when `q` has no other consumer.
        Ok((Some(grad_res.clone()), Some(q.zeros_like()?)))
    }
}

/// Returns `q` bitwise in the forward pass and routes the incoming gradient
/// to `z` unchanged; `q` receives a zero gradient.
pub fn straight_through(z: &Tensor, q: &Tensor) -> candle_core::Result<Tensor> {
    z.apply_op2(q, StraightThrough)
}

/// Squared L2 norm over the last dimension.
pub fn sq_norm_last(x: &Tensor) -> candle_core::Result<Tensor> {
    x.sqr()?.sum(D::Minus1)
}

/// Euclidean norm that is exactly zero at zero and has a finite gradient
/// there: `sqrt(s + eps) - sqrt(eps)`.
pub fn safe_norm(sum_sq: &Tensor) -> candle_core::Result<Tensor> {
    const EPS: f64 = 1e-16;
    sum_sq.affine(1.0, EPS)?.sqrt()?.affine(1.0, -EPS.sqrt())
}
