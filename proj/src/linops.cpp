#include "sparsa/linops.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <stdexcept>
#include <utility>

namespace sparsa {

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::dense: return "dense";
        case OperatorKind::partial_fourier_2d: return "partial-fourier-2d";
        case OperatorKind::blur_2d: return "blur-2d";
        case OperatorKind::haar_dwt_2d: return "haar-dwt-2d";
        case OperatorKind::composition: return "composition";
        case OperatorKind::identity: return "identity";
    }
    return "unknown";
}

LinearOperator::LinearOperator(Index domain_dim, Index range_dim, OperatorKind kind)
    : domain_dim_(domain_dim), range_dim_(range_dim), kind_(kind) {
    if (domain_dim <= 0 || range_dim <= 0) {
        throw std::invalid_argument("linear operator dimensions must be positive");
    }
}

Vector LinearOperator::apply(const Vector& x) const {
    require_dim(x.size(), domain_dim_, "LinearOperator::apply");
    forward_.fetch_add(1, std::memory_order_relaxed);
    return do_apply(x);
}

Vector LinearOperator::adjoint(const Vector& y) const {
    require_dim(y.size(), range_dim_, "LinearOperator::adjoint");
    adjoint_.fetch_add(1, std::memory_order_relaxed);
    return do_adjoint(y);
}

MatvecCounter LinearOperator::counts() const {
    return {forward_.load(std::memory_order_relaxed), adjoint_.load(std::memory_order_relaxed)};
}

void LinearOperator::reset_counts() const {
    forward_.store(0, std::memory_order_relaxed);
    adjoint_.store(0, std::memory_order_relaxed);
}

Index Mask2D::count() const {
    Index n = 0;
    for (bool b : on) n += b ? 1 : 0;
    return n;
}

namespace {

using Complex = std::complex<double>;

// FFTW's planner is not reentrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        if (p != nullptr) fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

/// Unnormalized complex 2-D DFT pair on a fixed grid.
class Fft2d {
public:
    Fft2d(Index rows, Index cols) : rows_(rows), cols_(cols) {
        std::vector<Complex> scratch(static_cast<std::size_t>(rows * cols));
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        forward_.reset(fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                        FFTW_FORWARD, flags));
        backward_.reset(fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf,
                                         FFTW_BACKWARD, flags));
        if (!forward_ || !backward_) throw std::runtime_error("FFTW plan creation failed");
    }

    void forward(std::vector<Complex>& data) const { run(forward_.get(), data); }
    void backward(std::vector<Complex>& data) const { run(backward_.get(), data); }
    Index size() const { return rows_ * cols_; }

private:
    static void run(fftw_plan p, std::vector<Complex>& data) {
        auto* buf = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(p, buf, buf);
    }

    Index rows_, cols_;
    Plan forward_, backward_;
};

class IdentityOperator final : public LinearOperator {
public:
    explicit IdentityOperator(Index n) : LinearOperator(n, n, OperatorKind::identity) {}

protected:
    Vector do_apply(const Vector& x) const override { return x; }
    Vector do_adjoint(const Vector& y) const override { return y; }
};

class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(Matrix a)
        : LinearOperator(a.cols(), a.rows(), OperatorKind::dense), a_(std::move(a)) {}

protected:
    Vector do_apply(const Vector& x) const override { return a_ * x; }
    Vector do_adjoint(const Vector& y) const override { return a_.transpose() * y; }

private:
    Matrix a_;
};

class PartialFourierOperator final : public LinearOperator {
public:
    PartialFourierOperator(Index rows, Index cols, std::vector<Index> selected)
        : LinearOperator(rows * cols, 2 * static_cast<Index>(selected.size()),
                         OperatorKind::partial_fourier_2d),
          fft_(rows, cols),
          selected_(std::move(selected)),
          scale_(1.0 / std::sqrt(static_cast<double>(rows * cols))) {}

protected:
    Vector do_apply(const Vector& x) const override {
        std::vector<Complex> buf(static_cast<std::size_t>(fft_.size()));
        for (Index i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = x[i];
        fft_.forward(buf);
        const Index p = static_cast<Index>(selected_.size());
        Vector y(2 * p);
        for (Index i = 0; i < p; ++i) {
            const Complex c = buf[static_cast<std::size_t>(selected_[static_cast<std::size_t>(i)])];
            y[i] = c.real() * scale_;
            y[p + i] = c.imag() * scale_;
        }
        return y;
    }

    Vector do_adjoint(const Vector& y) const override {
        std::vector<Complex> buf(static_cast<std::size_t>(fft_.size()), Complex{0.0, 0.0});
        const Index p = static_cast<Index>(selected_.size());
        for (Index i = 0; i < p; ++i) {
            buf[static_cast<std::size_t>(selected_[static_cast<std::size_t>(i)])] = {y[i], y[p + i]};
        }
        fft_.backward(buf);
        Vector x(fft_.size());
        for (Index i = 0; i < x.size(); ++i) x[i] = buf[static_cast<std::size_t>(i)].real() * scale_;
        return x;
    }

private:
    Fft2d fft_;
    std::vector<Index> selected_;
    double scale_;
};

class BlurOperator final : public LinearOperator {
public:
    BlurOperator(Index rows, Index cols, Index mask_size)
        : LinearOperator(rows * cols, rows * cols, OperatorKind::blur_2d), fft_(rows, cols) {
        const Index n = rows * cols;
        std::vector<Complex> kernel(static_cast<std::size_t>(n), Complex{0.0, 0.0});
        const Index offset = mask_size / 2;
        const double w = 1.0 / static_cast<double>(mask_size * mask_size);
        // y[r] = sum_t k[t] x[r - t]  with t = offset - a  (a in [0, mask_size)).
        for (Index a = 0; a < mask_size; ++a) {
            const Index tr = ((offset - a) % rows + rows) % rows;
            for (Index b = 0; b < mask_size; ++b) {
                const Index tc = ((offset - b) % cols + cols) % cols;
                kernel[static_cast<std::size_t>(tr * cols + tc)] += w;
            }
        }
        fft_.forward(kernel);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& k : kernel) k *= inv_n;
        spectrum_ = std::move(kernel);
    }

protected:
    Vector do_apply(const Vector& x) const override { return filter(x, false); }
    Vector do_adjoint(const Vector& y) const override { return filter(y, true); }

private:
    Vector filter(const Vector& x, bool conjugate) const {
        std::vector<Complex> buf(static_cast<std::size_t>(fft_.size()));
        for (Index i = 0; i < x.size(); ++i) buf[static_cast<std::size_t>(i)] = x[i];
        fft_.forward(buf);
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] *= conjugate ? std::conj(spectrum_[i]) : spectrum_[i];
        }
        fft_.backward(buf);
        Vector out(x.size());
        for (Index i = 0; i < out.size(); ++i) out[i] = buf[static_cast<std::size_t>(i)].real();
        return out;
    }

    Fft2d fft_;
    std::vector<Complex> spectrum_;  // kernel DFT, pre-divided by rows*cols
};

class HaarOperator final : public LinearOperator {
public:
    HaarOperator(Index rows, Index cols, int levels)
        : LinearOperator(rows * cols, rows * cols, OperatorKind::haar_dwt_2d),
          rows_(rows),
          cols_(cols),
          levels_(levels) {}

protected:
    // synthesis: coarsest level first
    Vector do_apply(const Vector& coeffs) const override {
        Vector img = coeffs;
        for (int l = levels_ - 1; l >= 0; --l) {
            const Index r = rows_ >> l, c = cols_ >> l;
            for (Index j = 0; j < c; ++j) inverse_step(img.data() + j, r, cols_);
            for (Index i = 0; i < r; ++i) inverse_step(img.data() + i * cols_, c, 1);
        }
        return img;
    }

    // analysis: rows then columns on the shrinking approximation block
    Vector do_adjoint(const Vector& img) const override {
        Vector out = img;
        for (int l = 0; l < levels_; ++l) {
            const Index r = rows_ >> l, c = cols_ >> l;
            for (Index i = 0; i < r; ++i) forward_step(out.data() + i * cols_, c, 1);
            for (Index j = 0; j < c; ++j) forward_step(out.data() + j, r, cols_);
        }
        return out;
    }

private:
    static void forward_step(double* v, Index len, Index stride) {
        const Index half = len / 2;
        std::vector<double> tmp(static_cast<std::size_t>(len));
        for (Index i = 0; i < half; ++i) {
            const double a = v[2 * i * stride], b = v[(2 * i + 1) * stride];
            tmp[static_cast<std::size_t>(i)] = (a + b) * M_SQRT1_2;
            tmp[static_cast<std::size_t>(half + i)] = (a - b) * M_SQRT1_2;
        }
        for (Index i = 0; i < len; ++i) v[i * stride] = tmp[static_cast<std::size_t>(i)];
    }

    static void inverse_step(double* v, Index len, Index stride) {
        const Index half = len / 2;
        std::vector<double> tmp(static_cast<std::size_t>(len));
        for (Index i = 0; i < half; ++i) {
            const double s = v[i * stride], d = v[(half + i) * stride];
            tmp[static_cast<std::size_t>(2 * i)] = (s + d) * M_SQRT1_2;
            tmp[static_cast<std::size_t>(2 * i + 1)] = (s - d) * M_SQRT1_2;
        }
        for (Index i = 0; i < len; ++i) v[i * stride] = tmp[static_cast<std::size_t>(i)];
    }

    Index rows_, cols_;
    int levels_;
};

class CompositionOperator final : public LinearOperator {
public:
    CompositionOperator(OperatorPtr outer, OperatorPtr inner)
        : LinearOperator(inner->domain_dim(), outer->range_dim(), OperatorKind::composition),
          outer_(std::move(outer)),
          inner_(std::move(inner)) {}

protected:
    Vector do_apply(const Vector& x) const override { return outer_->apply(inner_->apply(x)); }
    Vector do_adjoint(const Vector& y) const override {
        return inner_->adjoint(outer_->adjoint(y));
    }

private:
    OperatorPtr outer_, inner_;
};

}  // namespace

OperatorPtr make_identity(Index n) { return std::make_shared<IdentityOperator>(n); }

OperatorPtr make_dense(Matrix a) { return std::make_shared<DenseOperator>(std::move(a)); }

OperatorPtr make_partial_fourier(Index rows, Index cols, const Mask2D& mask) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("partial Fourier: empty grid");
    if (mask.rows != rows || mask.cols != cols ||
        static_cast<Index>(mask.on.size()) != rows * cols) {
        throw DimensionMismatch("partial Fourier: mask shape does not match image");
    }
    std::vector<Index> selected;
    for (Index i = 0; i < rows * cols; ++i) {
        if (mask.on[static_cast<std::size_t>(i)]) selected.push_back(i);
    }
    if (selected.empty()) throw std::invalid_argument("partial Fourier: empty mask");
    return std::make_shared<PartialFourierOperator>(rows, cols, std::move(selected));
}

OperatorPtr make_blur(Index rows, Index cols, Index mask_size) {
    if (mask_size < 1 || mask_size > std::min(rows, cols)) {
        throw std::invalid_argument("blur: mask size must lie in [1, min(rows, cols)]");
    }
    return std::make_shared<BlurOperator>(rows, cols, mask_size);
}

OperatorPtr make_haar_dwt(Index rows, Index cols, int levels) {
    if (levels < 0) throw std::invalid_argument("haar: negative level count");
    const Index block = Index{1} << levels;
    if (rows % block != 0 || cols % block != 0) {
        throw std::invalid_argument("haar: image dimensions must be divisible by 2^levels");
    }
    return std::make_shared<HaarOperator>(rows, cols, levels);
}

OperatorPtr compose(OperatorPtr outer, OperatorPtr inner) {
    if (!outer || !inner) throw std::invalid_argument("compose: null operator");
    if (outer->domain_dim() != inner->range_dim()) {
        throw DimensionMismatch("compose: outer domain does not match inner range");
    }
    return std::make_shared<CompositionOperator>(std::move(outer), std::move(inner));
}

Matrix materialize(const LinearOperator& op) {
    Matrix m(op.range_dim(), op.domain_dim());
    Vector e = Vector::Zero(op.domain_dim());
    for (Index j = 0; j < op.domain_dim(); ++j) {
        e[j] = 1.0;
        m.col(j) = op.apply(e);
        e[j] = 0.0;
    }
    return m;
}

double operator_norm_sq_estimate(const LinearOperator& op, int iters) {
    if (iters < 1) throw std::invalid_argument("operator_norm_sq_estimate: iters must be >= 1");
    // Fixed-seed start so repeated calls agree and the start is not orthogonal
    // to the dominant singular vector in practice.
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    Vector v(op.domain_dim());
    for (Index i = 0; i < v.size(); ++i) v[i] = uni(rng);
    v.normalize();

    double estimate = 0.0;
    for (int it = 0; it < iters; ++it) {
        const Vector w = op.adjoint(op.apply(v));
        estimate = v.dot(w);
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        v = w / nrm;
    }
    return estimate;
}

}  // namespace sparsa
