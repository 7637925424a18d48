#pragma once

#include "sparsa/common.hpp"

#include <atomic>
#include <memory>
#include <string_view>
#include <vector>

namespace sparsa {

enum class OperatorKind { dense, partial_fourier_2d, blur_2d, haar_dwt_2d, composition, identity };

std::string_view to_string(OperatorKind kind);

/// Number of forward and adjoint products performed. `total()` is the "Ax"
/// statistic reported in tables.
struct MatvecCounter {
    std::uint64_t forward_count = 0;
    std::uint64_t adjoint_count = 0;

    std::uint64_t total() const { return forward_count + adjoint_count; }

    MatvecCounter& operator+=(const MatvecCounter& o) {
        forward_count += o.forward_count;
        adjoint_count += o.adjoint_count;
        return *this;
    }
    friend bool operator==(const MatvecCounter&, const MatvecCounter&) = default;
};

/// Real linear map A : R^domain -> R^range with its adjoint.
///
/// Instances are immutable after construction apart from the two product
/// counters, which are atomic. Solvers that need per-run accounting wrap the
/// operator in their own counting oracle (see LeastSquaresObjective).
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    LinearOperator(const LinearOperator&) = delete;
    LinearOperator& operator=(const LinearOperator&) = delete;

    Index domain_dim() const { return domain_dim_; }
    Index range_dim() const { return range_dim_; }
    OperatorKind kind() const { return kind_; }

    /// y = A x. Throws DimensionMismatch when x has the wrong length.
    Vector apply(const Vector& x) const;
    /// x = A^T y. Throws DimensionMismatch when y has the wrong length.
    Vector adjoint(const Vector& y) const;

    MatvecCounter counts() const;
    void reset_counts() const;

protected:
    LinearOperator(Index domain_dim, Index range_dim, OperatorKind kind);

    virtual Vector do_apply(const Vector& x) const = 0;
    virtual Vector do_adjoint(const Vector& y) const = 0;

private:
    Index domain_dim_;
    Index range_dim_;
    OperatorKind kind_;
    mutable std::atomic<std::uint64_t> forward_{0};
    mutable std::atomic<std::uint64_t> adjoint_{0};
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

/// Row-major boolean mask over a rows x cols grid.
struct Mask2D {
    Index rows = 0;
    Index cols = 0;
    std::vector<bool> on;

    Index count() const;
    bool at(Index r, Index c) const { return on[static_cast<std::size_t>(r * cols + c)]; }
};

OperatorPtr make_identity(Index n);
OperatorPtr make_dense(Matrix a);

/// Masked unitary 2-D DFT of a real image. The range vector stacks the real
/// parts of the selected coefficients (row-major mask order) followed by their
/// imaginary parts, so range_dim = 2 * mask.count().
OperatorPtr make_partial_fourier(Index rows, Index cols, const Mask2D& mask);

/// Circular convolution with a uniform mask_size x mask_size box kernel.
/// Output pixel (r, c) averages the block whose top-left corner is
/// (r - mask_size/2, c - mask_size/2), indices taken modulo the image size.
OperatorPtr make_blur(Index rows, Index cols, Index mask_size);

/// Orthonormal 2-D Haar transform with `levels` decomposition levels.
/// apply() synthesizes an image from wavelet coefficients; adjoint() analyzes.
/// Coefficients use the standard pyramid layout (approximation block top-left).
OperatorPtr make_haar_dwt(Index rows, Index cols, int levels);

/// outer ∘ inner. Each apply/adjoint touches both constituents exactly once.
OperatorPtr compose(OperatorPtr outer, OperatorPtr inner);

/// Dense copy of an operator, built column by column with apply().
Matrix materialize(const LinearOperator& op);

/// Power-iteration estimate of ||A||^2 = lambda_max(A^T A). The returned
/// Rayleigh quotients are nondecreasing in `iters`.
double operator_norm_sq_estimate(const LinearOperator& op, int iters);

}  // namespace sparsa
