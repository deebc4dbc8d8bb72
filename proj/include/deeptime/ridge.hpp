#pragma once

#include <string>

#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"

namespace deeptime::numkit {

// Solves A X = B for symmetric positive-definite A via Cholesky (A = L L^T).
// Throws NotPositiveDefinite when a pivot is <= 0.
inline Matrix spd_solve(const Matrix& a, const Matrix& b) {
    const std::size_t d = a.rows();
    if (d == 0 || a.cols() != d) throw ShapeMismatch("spd_solve: A must be square");
    if (b.rows() != d) throw ShapeMismatch("spd_solve: B row count mismatch");

    const double asym_tol = 1e-9 * (1.0 + max_abs(a));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::abs(a(i, j) - a(j, i)) > asym_tol)
                throw ShapeMismatch("spd_solve: A is not symmetric");

    Matrix l(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0))
            throw NotPositiveDefinite("spd_solve: pivot " + std::to_string(j) +
                                      " is not positive");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }

    // L y = B, then L^T x = y, one RHS column block at a time.
    Matrix x = b;
    const std::size_t m = b.cols();
    for (std::size_t i = 0; i < d; ++i) {
        double* xi = x.row_ptr(i);
        for (std::size_t k = 0; k < i; ++k) {
            const double lik = l(i, k);
            const double* xk = x.row_ptr(k);
            for (std::size_t c = 0; c < m; ++c) xi[c] -= lik * xk[c];
        }
        const double inv = 1.0 / l(i, i);
        for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
    }
    for (std::size_t ii = d; ii-- > 0;) {
        double* xi = x.row_ptr(ii);
        for (std::size_t k = ii + 1; k < d; ++k) {
            const double lki = l(k, ii);
            const double* xk = x.row_ptr(k);
            for (std::size_t c = 0; c < m; ++c) xi[c] -= lki * xk[c];
        }
        const double inv = 1.0 / l(ii, ii);
        for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
    }

    ensure_finite(x, "spd_solve");
    return x;
}

enum class RidgeBranch { kAuto, kStandard, kWoodbury };

struct RidgeSolution {
    Matrix weights;             // (d+1) x m with bias, d x m otherwise
    bool used_woodbury = false; // n_samples < n_features (incl. bias)
};

// Regularized least squares with an optional all-ones bias column appended to
// Z. The regularizer hits the full diagonal, bias row included. lam is the
// already-transformed (positive) coefficient.
//
//   n >= d':  solve (Z'^T Z' + lam I) W = Z'^T Y          (d' x d' system)
//   n <  d':  W = Z'^T (Z' Z'^T + lam I)^{-1} Y           (n x n system)
inline RidgeSolution ridge_fit(const Matrix& z, const Matrix& y, double lam, bool with_bias,
                               RidgeBranch force = RidgeBranch::kAuto) {
    const std::size_t n = z.rows();
    if (n == 0 || z.cols() == 0) throw ShapeMismatch("ridge_fit: Z must be non-empty");
    if (y.rows() != n) throw ShapeMismatch("ridge_fit: Z and Y row counts differ");
    if (lam < 0.0) throw InvalidConfig("ridge_fit: lam must be >= 0");

    const Matrix zb = with_bias ? hcat_ones(z) : z;
    const std::size_t d_full = zb.cols();

    RidgeSolution sol;
    sol.used_woodbury = force == RidgeBranch::kAuto ? (n < d_full)
                                                    : force == RidgeBranch::kWoodbury;
    try {
        if (!sol.used_woodbury) {
            Matrix a = matmul_tn(zb, zb);
            add_diag(a, lam);
            sol.weights = spd_solve(a, matmul_tn(zb, y));
        } else {
            Matrix a = matmul_nt(zb, zb);
            add_diag(a, lam);
            sol.weights = matmul_tn(zb, spd_solve(a, y));
        }
    } catch (const NotPositiveDefinite&) {
        if (lam == 0.0) throw Degenerate("ridge_fit: lam = 0 and Gram matrix is singular");
        throw;
    }

    ensure_finite(sol.weights, "ridge_fit");
    return sol;
}

struct RidgeGrads {
    Matrix d_z;   // n x d (bias column dropped)
    Matrix d_y;   // n x m
    double d_lam; // scalar
};

// Adjoint of ridge_fit. With A = Z'^T Z' + lam I and B = Z'^T Y so that
// W = A^{-1} B, and G = dL/dW:
//   S     = A^{-1} G
//   dL/dA = -S W^T,  dL/dB = S
//   dL/dZ' = Z' (dL/dA + dL/dA^T) + Y (dL/dB)^T
//   dL/dlam = trace(dL/dA)
//   dL/dY  = Z' S
// The products are regrouped so dL/dA is never materialized:
//   dL/dZ' = -(Z'S) W^T - (Z'W) S^T + Y S^T,  dL/dlam = -<S, W>.
// For n < d' (and lam > 0), S comes from the same Woodbury identity as the
// fit: A^{-1} G = (G - Z'^T (Z'Z'^T + lam I)^{-1} Z' G) / lam, keeping the
// solve at min(n, d') like the forward pass.
inline RidgeGrads ridge_backward(const Matrix& z, const Matrix& y, double lam, bool with_bias,
                                 const Matrix& g, const RidgeSolution* sol = nullptr) {
    const std::size_t n = z.rows();
    const Matrix zb = with_bias ? hcat_ones(z) : z;
    const std::size_t d_full = zb.cols();
    if (g.rows() != d_full || g.cols() != y.cols())
        throw ShapeMismatch("ridge_backward: G shape must match the ridge weights");

    RidgeSolution local;
    if (sol == nullptr) {
        local = ridge_fit(z, y, lam, with_bias);
        sol = &local;
    }
    const Matrix& w = sol->weights;

    Matrix s;
    try {
        if (n < d_full && lam > 0.0) {
            Matrix gram = matmul_nt(zb, zb);
            add_diag(gram, lam);
            const Matrix q = spd_solve(gram, matmul(zb, g));
            s = g;
            s -= matmul_tn(zb, q);
            s *= 1.0 / lam;
        } else {
            Matrix a = matmul_tn(zb, zb);
            add_diag(a, lam);
            s = spd_solve(a, g);
        }
    } catch (const NotPositiveDefinite&) {
        if (lam == 0.0) throw Degenerate("ridge_backward: lam = 0 and Gram matrix is singular");
        throw;
    }

    const Matrix zs = matmul(zb, s); // n x m
    const Matrix zw = matmul(zb, w); // n x m

    Matrix d_z_full = matmul_nt(zs, w);
    d_z_full *= -1.0;
    d_z_full -= matmul_nt(zw, s);
    d_z_full += matmul_nt(y, s);

    double d_lam = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) d_lam -= s.data()[i] * w.data()[i];

    RidgeGrads out;
    out.d_z = with_bias ? drop_last_col(d_z_full) : std::move(d_z_full);
    out.d_y = zs;
    out.d_lam = d_lam;

    ensure_finite(out.d_z, "ridge_backward dZ");
    ensure_finite(out.d_y, "ridge_backward dY");
    if (!std::isfinite(out.d_lam)) throw NonFiniteValue("ridge_backward dLam: non-finite");
    return out;
}

} // namespace deeptime::numkit
