#include "sparsa/problems.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparsa {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Vector gaussian_vector(Index n, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

// Filled column by column so the draw order does not depend on storage order.
Matrix gaussian_matrix(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) a(i, j) = dist(rng);
    return a;
}

double inf_norm_atb(const LinearOperator& op, const Vector& b) {
    return op.adjoint(b).lpNorm<Eigen::Infinity>();
}

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, Stream stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

LeastSquaresObjective::LeastSquaresObjective(OperatorPtr op, std::shared_ptr<const Vector> b)
    : op_(std::move(op)), b_(std::move(b)) {
    if (!op_ || !b_) throw std::invalid_argument("LeastSquaresObjective: null operator or data");
    require_dim(b_->size(), op_->range_dim(), "LeastSquaresObjective: data vector");
}

const Vector& LeastSquaresObjective::residual(const Vector& x) const {
    if (!(has_cache_ && cache_x_.size() == x.size() && cache_x_ == x)) {
        require_dim(x.size(), op_->domain_dim(), "LeastSquaresObjective");
        cache_r_ = op_->apply(x) - *b_;
        ++counter_.forward_count;
        cache_x_ = x;
        has_cache_ = true;
    }
    return cache_r_;
}

double LeastSquaresObjective::value(const Vector& x) const {
    ++value_calls_;
    has_cache_ = false;  // every value() call is charged a forward product
    return 0.5 * residual(x).squaredNorm();
}

Vector LeastSquaresObjective::gradient(const Vector& x) const {
    ++gradient_calls_;
    const Vector& r = residual(x);
    ++counter_.adjoint_count;
    return op_->adjoint(r);
}

LeastSquaresProblem LeastSquaresProblem::with_tau(double tau) const {
    LeastSquaresProblem p = *this;
    p.regularizer = regularizer.with_tau(tau);
    return p;
}

std::string_view to_string(Family f) {
    switch (f) {
        case Family::bpdn: return "bpdn";
        case Family::group: return "group";
        case Family::deblur: return "deblur";
        case Family::tv_phantom: return "tv-phantom";
    }
    return "unknown";
}

Family family_from_string(std::string_view s) {
    if (s == "bpdn") return Family::bpdn;
    if (s == "group") return Family::group;
    if (s == "deblur") return Family::deblur;
    if (s == "tv-phantom") return Family::tv_phantom;
    throw std::invalid_argument("unknown problem family: " + std::string(s));
}

GeneratorSpec GeneratorSpec::defaults(Family f) {
    GeneratorSpec s;
    s.family = f;
    switch (f) {
        case Family::bpdn: break;
        case Family::group:
            s.k = 1024;
            s.tau = 0.3;
            s.tau_rule = TauRule::relative_atb;
            break;
        case Family::deblur: s.tau = 5e-5; break;
        case Family::tv_phantom:
            s.tau = 0.01;
            s.noise_std = 0.0;
            break;
    }
    return s;
}

LeastSquaresProblem gen_bpdn(Index k, Index n, Index spikes, std::uint64_t seed, double tau,
                             double noise_variance) {
    if (k <= 0 || n <= 0) throw std::invalid_argument("gen_bpdn: dimensions must be positive");
    if (spikes < 0 || spikes > n) throw std::invalid_argument("gen_bpdn: need 0 <= spikes <= n");

    auto mrng = substream(seed, Stream::matrix);
    Matrix a = gaussian_matrix(k, n, std::sqrt(1.0 / (2.0 * static_cast<double>(n))), mrng);

    auto srng = substream(seed, Stream::signal);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), srng);
    std::bernoulli_distribution coin(0.5);
    Vector x_true = Vector::Zero(n);
    for (Index i = 0; i < spikes; ++i) x_true[idx[static_cast<std::size_t>(i)]] = coin(srng) ? 1.0 : -1.0;

    auto nrng = substream(seed, Stream::noise);
    Vector b = a * x_true + gaussian_vector(k, std::sqrt(noise_variance), nrng);

    LeastSquaresProblem p;
    p.op = make_dense(std::move(a));
    p.atb_inf = inf_norm_atb(*p.op, b);
    p.b = std::make_shared<const Vector>(std::move(b));
    p.regularizer = Regularizer::l1(tau);
    p.x1 = Vector::Zero(n);
    p.x_true = std::move(x_true);
    p.seed = seed;
    p.op->reset_counts();
    return p;
}

LeastSquaresProblem gen_group(std::uint64_t seed, Index k, Index num_groups, Index group_len,
                              Index active_groups, double tau_fraction, double noise_variance) {
    const Index n = num_groups * group_len;
    if (k <= 0 || num_groups <= 0 || group_len <= 0 || k > n) {
        throw std::invalid_argument("gen_group: need positive sizes and k <= num_groups*group_len");
    }
    if (active_groups < 0 || active_groups > num_groups) {
        throw std::invalid_argument("gen_group: active_groups out of range");
    }

    auto mrng = substream(seed, Stream::matrix);
    const Matrix g = gaussian_matrix(k, n, std::sqrt(1.0 / (2.0 * static_cast<double>(n))), mrng);
    // Rows of A are an orthonormal basis of the row space of g.
    Eigen::HouseholderQR<Matrix> qr(g.transpose());
    Matrix q = qr.householderQ() * Matrix::Identity(n, k);
    Matrix a = q.transpose();

    auto srng = substream(seed, Stream::signal);
    std::vector<Index> order(static_cast<std::size_t>(num_groups));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), srng);
    std::normal_distribution<double> unit(0.0, 1.0);
    Vector x_true = Vector::Zero(n);
    std::vector<Index> active(order.begin(), order.begin() + active_groups);
    std::sort(active.begin(), active.end());
    for (Index grp : active)
        for (Index i = 0; i < group_len; ++i) x_true[grp * group_len + i] = unit(srng);

    auto nrng = substream(seed, Stream::noise);
    Vector b = a * x_true + gaussian_vector(k, std::sqrt(noise_variance), nrng);

    std::vector<Group> groups(static_cast<std::size_t>(num_groups));
    for (Index grp = 0; grp < num_groups; ++grp) {
        auto& gi = groups[static_cast<std::size_t>(grp)];
        gi.resize(static_cast<std::size_t>(group_len));
        std::iota(gi.begin(), gi.end(), grp * group_len);
    }

    LeastSquaresProblem p;
    p.op = make_dense(std::move(a));
    p.atb_inf = inf_norm_atb(*p.op, b);
    p.b = std::make_shared<const Vector>(std::move(b));
    p.regularizer = Regularizer::group_l2(tau_fraction * p.atb_inf, std::move(groups));
    p.x1 = Vector::Zero(n);
    p.x_true = std::move(x_true);
    p.seed = seed;
    p.op->reset_counts();
    return p;
}

LeastSquaresProblem gen_deblur(const Image2D& image, Index mask_size, int levels,
                               std::uint64_t seed, double noise_std, double tau) {
    if (static_cast<Index>(image.pixels.size()) != image.rows * image.cols || image.rows <= 0) {
        throw DimensionMismatch("gen_deblur: malformed image");
    }
    auto blur = make_blur(image.rows, image.cols, mask_size);
    auto haar = make_haar_dwt(image.rows, image.cols, levels);

    auto nrng = substream(seed, Stream::noise);
    Vector b = blur->apply(image.to_vector());
    if (noise_std > 0.0) b += gaussian_vector(b.size(), noise_std, nrng);

    LeastSquaresProblem p;
    p.x1 = haar->adjoint(b);
    p.x_true = haar->adjoint(image.to_vector());
    p.op = compose(std::move(blur), haar);
    p.atb_inf = inf_norm_atb(*p.op, b);
    p.b = std::make_shared<const Vector>(std::move(b));
    p.regularizer = Regularizer::l1(tau);
    p.seed = seed;
    p.rows = image.rows;
    p.cols = image.cols;
    return p;
}

Image2D shepp_logan(Index rows, Index cols) {
    struct Ellipse {
        double intensity, a, b, x0, y0, phi_deg;
    };
    // Modified Shepp-Logan table (Toft): contrast-enhanced intensities.
    static constexpr std::array<Ellipse, 10> table{{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
        {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
        {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
        {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
        {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
        {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
        {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
    }};
    Image2D img(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        // pixel centres on [-1, 1]; y points up
        const double y = 1.0 - (2.0 * static_cast<double>(r) + 1.0) / static_cast<double>(rows);
        for (Index c = 0; c < cols; ++c) {
            const double x = (2.0 * static_cast<double>(c) + 1.0) / static_cast<double>(cols) - 1.0;
            double v = 0.0;
            for (const auto& e : table) {
                const double phi = e.phi_deg * M_PI / 180.0;
                const double dx = x - e.x0, dy = y - e.y0;
                const double xr = dx * std::cos(phi) + dy * std::sin(phi);
                const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
                if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
            }
            img.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

namespace {

// Pixels of each radial line in centred (fftshift) coordinates.
std::vector<std::pair<Index, Index>> radial_points(Index rows, Index cols, Index num_lines) {
    std::vector<std::pair<Index, Index>> pts;
    const Index cr = rows / 2, cc = cols / 2;
    for (Index l = 0; l < num_lines; ++l) {
        const double theta = M_PI * static_cast<double>(l) / static_cast<double>(num_lines);
        const double ct = std::cos(theta), st = std::sin(theta);
        if (std::abs(ct) >= std::abs(st)) {
            for (Index dc = -cc; dc < cols - cc; ++dc) {
                const Index dr = static_cast<Index>(std::lround(static_cast<double>(dc) * st / ct));
                if (cr + dr >= 0 && cr + dr < rows) pts.emplace_back(cr + dr, cc + dc);
            }
        } else {
            for (Index dr = -cr; dr < rows - cr; ++dr) {
                const Index dc = static_cast<Index>(std::lround(static_cast<double>(dr) * ct / st));
                if (cc + dc >= 0 && cc + dc < cols) pts.emplace_back(cr + dr, cc + dc);
            }
        }
    }
    return pts;
}

Index unshift(Index v, Index n) { return ((v - n / 2) % n + n) % n; }

}  // namespace

Mask2D radial_line_mask(Index rows, Index cols, Index num_lines) {
    if (rows <= 0 || cols <= 0 || num_lines <= 0) {
        throw std::invalid_argument("radial_line_mask: need positive grid and line count");
    }
    Mask2D m{rows, cols, std::vector<bool>(static_cast<std::size_t>(rows * cols), false)};
    for (auto [r, c] : radial_points(rows, cols, num_lines)) {
        m.on[static_cast<std::size_t>(unshift(r, rows) * cols + unshift(c, cols))] = true;
    }
    m.on[0] = true;  // DC
    return m;
}

Mask2D radial_mask_with_ratio(Index rows, Index cols, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw std::invalid_argument("radial mask: ratio must be in (0, 1]");
    const Index target = std::max<Index>(1, static_cast<Index>(std::lround(ratio * static_cast<double>(rows * cols))));
    Index lines = 1;
    Mask2D m = radial_line_mask(rows, cols, lines);
    while (m.count() < target && lines < 4 * std::max(rows, cols)) {
        m = radial_line_mask(rows, cols, ++lines);
    }
    if (m.count() <= target) return m;

    // Drop the highest frequencies until the count matches.
    std::vector<std::pair<double, Index>> by_radius;
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const Index i = r * cols + c;
            if (!m.on[static_cast<std::size_t>(i)] || i == 0) continue;
            const double fr = static_cast<double>(r <= rows / 2 ? r : r - rows);
            const double fc = static_cast<double>(c <= cols / 2 ? c : c - cols);
            by_radius.emplace_back(std::hypot(fr, fc), i);
        }
    }
    std::sort(by_radius.begin(), by_radius.end(),
              [](const auto& l, const auto& r) { return l.first != r.first ? l.first > r.first : l.second > r.second; });
    Index excess = m.count() - target;
    for (std::size_t j = 0; excess > 0 && j < by_radius.size(); ++j, --excess) {
        m.on[static_cast<std::size_t>(by_radius[j].second)] = false;
    }
    return m;
}

LeastSquaresProblem gen_tv_phantom(Index rows, Index cols, Index num_lines, std::uint64_t seed,
                                   double tau, double noise_std, double sampling_ratio) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("gen_tv_phantom: empty grid");
    const Image2D phantom = shepp_logan(rows, cols);
    Mask2D mask = num_lines > 0 ? radial_line_mask(rows, cols, num_lines)
                                : radial_mask_with_ratio(rows, cols, sampling_ratio);
    auto op = make_partial_fourier(rows, cols, mask);

    Vector b = op->apply(phantom.to_vector());
    if (noise_std > 0.0) {
        auto nrng = substream(seed, Stream::noise);
        b += gaussian_vector(b.size(), noise_std, nrng);
    }

    LeastSquaresProblem p;
    p.x1 = op->adjoint(b);
    p.atb_inf = p.x1.lpNorm<Eigen::Infinity>();
    p.x_true = phantom.to_vector();
    p.op = std::move(op);
    p.b = std::make_shared<const Vector>(std::move(b));
    p.regularizer = Regularizer::tv_iso(tau, rows, cols);
    p.seed = seed;
    p.rows = rows;
    p.cols = cols;
    p.mask = std::move(mask);
    p.op->reset_counts();
    return p;
}

Image2D test_pattern(Index rows, Index cols) {
    Image2D img(rows, cols, 0.1);
    const double R = static_cast<double>(rows), C = static_cast<double>(cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            const double y = (static_cast<double>(r) + 0.5) / R;
            const double x = (static_cast<double>(c) + 0.5) / C;
            double v = 0.1;
            if (y < 0.45 && x < 0.45) {
                // bars whose period shrinks to the right
                const double period = 0.12 - 0.2 * x;
                v = std::fmod(x, std::max(period, 0.02)) < 0.5 * std::max(period, 0.02) ? 0.9 : 0.15;
            } else if (y >= 0.55 && x < 0.45) {
                v = 0.1 + 0.8 * (x / 0.45);  // ramp
            }
            const double dx = x - 0.72, dy = y - 0.7;
            if (dx * dx + dy * dy < 0.04) v = 0.7;
            if (x > 0.6 && x < 0.85 && y > 0.12 && y < 0.35) v = 0.5;
            img.at(r, c) = v;
        }
    }
    return img;
}

LeastSquaresProblem generate(const GeneratorSpec& s) {
    auto resolve_tau = [&](LeastSquaresProblem p) {
        if (s.tau_rule == TauRule::relative_atb) return p.with_tau(s.tau * p.atb_inf);
        return p.with_tau(s.tau);
    };
    switch (s.family) {
        case Family::bpdn:
            return resolve_tau(gen_bpdn(s.k, s.n, s.spikes, s.seed, 0.0, s.noise_variance));
        case Family::group: {
            // gen_group applies the fraction rule itself
            const double frac = s.tau_rule == TauRule::relative_atb ? s.tau : 0.0;
            auto p = gen_group(s.seed, s.k, s.num_groups, s.group_len, s.active_groups, frac,
                               s.noise_variance);
            return s.tau_rule == TauRule::relative_atb ? p : p.with_tau(s.tau);
        }
        case Family::deblur: {
            const Image2D img = s.image_path.empty() ? test_pattern(s.rows, s.cols) : read_pgm(s.image_path);
            return resolve_tau(gen_deblur(img, s.mask_size, s.levels, s.seed, s.noise_std, 0.0));
        }
        case Family::tv_phantom:
            return resolve_tau(gen_tv_phantom(s.rows, s.cols, s.num_lines, s.seed, 0.0, s.noise_std,
                                              s.sampling_ratio));
    }
    throw std::invalid_argument("generate: unknown family");
}

void export_problem(const LeastSquaresProblem& p, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_raw_matrix(dir / "A.f64", materialize(*p.op));
    write_csv_vector(dir / "b.csv", *p.b);
    write_csv_vector(dir / "x1.csv", p.x1);
    if (p.x_true) write_csv_vector(dir / "x_true.csv", *p.x_true);
    p.op->reset_counts();
}

}  // namespace sparsa
