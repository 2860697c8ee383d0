#pragma once

#include <cstddef>

namespace softrl::linalg {

// Dense row-major kernels sized for small-MLP training. Weight matrices are
// stored input-major ([in x out]) so all three passes run unit-stride.

/// Y[b,o] = sum_i X[b,i] * W[i,o] + bias[o]   (bias may be null)
inline void affine_forward(const double* __restrict x, std::size_t batch, std::size_t in,
                           const double* __restrict w, const double* __restrict bias,
                           double* __restrict y, std::size_t out) {
    for (std::size_t b = 0; b < batch; ++b) {
        double* __restrict yrow = y + b * out;
        if (bias) {
            for (std::size_t o = 0; o < out; ++o) yrow[o] = bias[o];
        } else {
            for (std::size_t o = 0; o < out; ++o) yrow[o] = 0.0;
        }
        const double* __restrict xrow = x + b * in;
        for (std::size_t i = 0; i < in; ++i) {
            double xv = xrow[i];
            const double* __restrict wrow = w + i * out;
            for (std::size_t o = 0; o < out; ++o) yrow[o] += xv * wrow[o];
        }
    }
}

/// WT[o,i] = W[i,o]
inline void transpose(const double* __restrict w, std::size_t in, std::size_t out,
                      double* __restrict wt) {
    for (std::size_t i = 0; i < in; ++i)
        for (std::size_t o = 0; o < out; ++o) wt[o * in + i] = w[i * out + o];
}

/// dX[b,i] = sum_o dY[b,o] * WT[o,i] with WT the [out x in] transpose of W;
/// same axpy structure as the forward pass so it vectorizes.
inline void affine_backward_input(const double* __restrict dy, std::size_t batch,
                                  std::size_t out, const double* __restrict wt, std::size_t in,
                                  double* __restrict dx) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* __restrict dyrow = dy + b * out;
        double* __restrict dxrow = dx + b * in;
        for (std::size_t i = 0; i < in; ++i) dxrow[i] = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
            double dv = dyrow[o];
            const double* __restrict wtrow = wt + o * in;
            for (std::size_t i = 0; i < in; ++i) dxrow[i] += dv * wtrow[i];
        }
    }
}

/// dW[i,o] += sum_b X[b,i] * dY[b,o];  dB[o] += sum_b dY[b,o]  (either may be null)
inline void affine_backward_params(const double* __restrict x, std::size_t batch, std::size_t in,
                                   const double* __restrict dy, std::size_t out,
                                   double* __restrict dw, double* __restrict db) {
    for (std::size_t b = 0; b < batch; ++b) {
        const double* __restrict xrow = x + b * in;
        const double* __restrict dyrow = dy + b * out;
        if (dw) {
            for (std::size_t i = 0; i < in; ++i) {
                double xv = xrow[i];
                double* __restrict dwrow = dw + i * out;
                for (std::size_t o = 0; o < out; ++o) dwrow[o] += xv * dyrow[o];
            }
        }
        if (db) {
            for (std::size_t o = 0; o < out; ++o) db[o] += dyrow[o];
        }
    }
}

}  // namespace softrl::linalg
