#pragma once

#include "sparsa/common.hpp"
#include "sparsa/io.hpp"
#include "sparsa/linops.hpp"
#include "sparsa/regularizers.hpp"
#include "sparsa/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace sparsa {

/// Independent random substreams of one experiment seed. Each component of a
/// generated problem draws from its own stream, so changing e.g. the matrix
/// shape does not shift the noise realization.
enum class Stream : std::uint64_t { matrix = 1, signal = 2, noise = 3, mask = 4 };

/// mt19937_64 seeded with splitmix64(seed ^ splitmix64(stream)).
std::mt19937_64 substream(std::uint64_t seed, Stream stream);

/// f(x) = 1/2 ||A x - b||^2 with gradient A^T (A x - b).
///
/// Counts its own products with A and A^T. The residual of the most recent
/// value() call is cached, so gradient() at that same point costs one adjoint
/// product; any other point costs a forward and an adjoint product.
class LeastSquaresObjective final : public SmoothFunction {
public:
    LeastSquaresObjective(OperatorPtr op, std::shared_ptr<const Vector> b);

    Index dim() const override { return op_->domain_dim(); }
    double value(const Vector& x) const override;
    Vector gradient(const Vector& x) const override;
    MatvecCounter matvecs() const override { return counter_; }

    std::uint64_t value_calls() const { return value_calls_; }
    std::uint64_t gradient_calls() const { return gradient_calls_; }

private:
    const Vector& residual(const Vector& x) const;

    OperatorPtr op_;
    std::shared_ptr<const Vector> b_;
    mutable MatvecCounter counter_;
    mutable Vector cache_x_;
    mutable Vector cache_r_;
    mutable bool has_cache_ = false;
    mutable std::uint64_t value_calls_ = 0;
    mutable std::uint64_t gradient_calls_ = 0;
};

struct LeastSquaresProblem {
    OperatorPtr op;
    std::shared_ptr<const Vector> b;
    Regularizer regularizer = Regularizer::zero();
    Vector x1;
    std::optional<Vector> x_true;
    std::uint64_t seed = 0;
    /// ||A^T b||_inf, the smallest l1 weight for which x = 0 is optimal.
    double atb_inf = 0.0;
    /// Image grid for the image families, 0 otherwise.
    Index rows = 0;
    Index cols = 0;
    std::optional<Mask2D> mask;

    /// Fresh counting oracle; create one per solve.
    LeastSquaresObjective objective() const { return LeastSquaresObjective(op, b); }
    LeastSquaresProblem with_tau(double tau) const;
};

enum class Family { bpdn, group, deblur, tv_phantom };
enum class TauRule { absolute, relative_atb };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);

/// Parameters for any of the four families. Fields irrelevant to a family are
/// ignored. `defaults(f)` gives the settings used by the experiments.
struct GeneratorSpec {
    Family family = Family::bpdn;
    std::uint64_t seed = 1;

    // bpdn / group
    Index k = 256;
    Index n = 1024;
    Index spikes = 160;
    double noise_variance = 1e-4;
    Index num_groups = 64;
    Index group_len = 64;
    Index active_groups = 8;

    // image families
    Index rows = 64;
    Index cols = 64;
    Index mask_size = 8;
    int levels = 3;
    double noise_std = 0.0055;
    std::string image_path;  // empty: built-in test pattern
    Index num_lines = 0;     // 0: chosen to match the target sampling ratio
    double sampling_ratio = 6136.0 / 65536.0;

    double tau = 0.1;
    TauRule tau_rule = TauRule::absolute;

    static GeneratorSpec defaults(Family f);
};

LeastSquaresProblem generate(const GeneratorSpec& spec);

/// Gaussian A with N(0, 1/(2n)) entries, `spikes` random +-1 entries in
/// x_true, b = A x_true + N(0, noise_variance). x1 = 0, psi = tau ||x||_1.
LeastSquaresProblem gen_bpdn(Index k, Index n, Index spikes, std::uint64_t seed, double tau,
                             double noise_variance = 1e-4);

/// Row-orthonormalized Gaussian A (k x num_groups*group_len); x_true has
/// `active_groups` contiguous groups filled with N(0, 1). tau = tau_fraction * ||A^T b||_inf.
LeastSquaresProblem gen_group(std::uint64_t seed, Index k = 1024, Index num_groups = 64,
                              Index group_len = 64, Index active_groups = 8,
                              double tau_fraction = 0.3, double noise_variance = 1e-4);

/// A = blur ∘ haar synthesis, b = blur(image) + N(0, noise_std^2), x1 = analysis(b).
LeastSquaresProblem gen_deblur(const Image2D& image, Index mask_size, int levels,
                               std::uint64_t seed, double noise_std = 0.0055, double tau = 5e-5);

/// Shepp-Logan phantom observed through a radial-line partial Fourier mask;
/// psi = tau * TV, x1 = A^T b. num_lines = 0 sizes the mask to sampling_ratio.
LeastSquaresProblem gen_tv_phantom(Index rows, Index cols, Index num_lines, std::uint64_t seed,
                                   double tau = 0.01, double noise_std = 0.0,
                                   double sampling_ratio = 6136.0 / 65536.0);

/// Modified Shepp-Logan head phantom (10 ellipses, intensities in [0, 1]).
Image2D shepp_logan(Index rows, Index cols);

/// Lines through the DC term of the unshifted DFT grid.
Mask2D radial_line_mask(Index rows, Index cols, Index num_lines);
/// Radial mask trimmed (outermost frequencies first) to round(ratio*rows*cols) samples.
Mask2D radial_mask_with_ratio(Index rows, Index cols, double ratio);

/// Synthetic piecewise-smooth test image (bars, disc, ramp) in [0, 1].
Image2D test_pattern(Index rows, Index cols);

/// Writes A (raw + sidecar), b, x1 and x_true (CSV) into `dir`.
void export_problem(const LeastSquaresProblem& p, const std::filesystem::path& dir);

}  // namespace sparsa
