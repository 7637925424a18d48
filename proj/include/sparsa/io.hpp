#pragma once

#include "sparsa/common.hpp"

#include <filesystem>
#include <vector>

namespace sparsa {

/// Gray-scale image, row-major, intensities nominally in [0, 1].
struct Image2D {
    Index rows = 0;
    Index cols = 0;
    std::vector<double> pixels;

    Image2D() = default;
    Image2D(Index r, Index c, double fill = 0.0);

    double& at(Index r, Index c) { return pixels[static_cast<std::size_t>(r * cols + c)]; }
    double at(Index r, Index c) const { return pixels[static_cast<std::size_t>(r * cols + c)]; }

    Vector to_vector() const;
    static Image2D from_vector(const Vector& v, Index rows, Index cols);
};

enum class PgmFormat { ascii_p2, binary_p5 };

/// Reads P2 or P5 PGM; samples are divided by maxval.
Image2D read_pgm(const std::filesystem::path& path);
/// Writes with maxval 255; values are clamped to [0, 1] and rounded.
void write_pgm(const std::filesystem::path& path, const Image2D& img,
               PgmFormat format = PgmFormat::binary_p5);

/// CSV, one matrix row per line. A vector is a single column.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);
Vector read_csv_vector(const std::filesystem::path& path);
void write_csv_vector(const std::filesystem::path& path, const Vector& v);

/// Raw little-endian float64 payload, row-major, with `<path>.json` sidecar
/// holding {"rows": R, "cols": C}.
void write_raw_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_raw_matrix(const std::filesystem::path& path);

}  // namespace sparsa
