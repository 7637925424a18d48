#include "sparsa/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sparsa {

namespace fs = std::filesystem;

Image2D::Image2D(Index r, Index c, double fill)
    : rows(r), cols(c), pixels(static_cast<std::size_t>(r * c), fill) {}

Vector Image2D::to_vector() const {
    Vector v(rows * cols);
    for (Index i = 0; i < v.size(); ++i) v[i] = pixels[static_cast<std::size_t>(i)];
    return v;
}

Image2D Image2D::from_vector(const Vector& v, Index rows, Index cols) {
    require_dim(v.size(), rows * cols, "Image2D::from_vector");
    Image2D img(rows, cols);
    for (Index i = 0; i < v.size(); ++i) img.pixels[static_cast<std::size_t>(i)] = v[i];
    return img;
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    while (in) {
        int ch = in.peek();
        if (ch == '#') {
            std::string discard;
            std::getline(in, discard);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    in >> tok;
    return tok;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

Image2D read_pgm(const fs::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    const std::string magic = pgm_token(in);
    if (magic != "P2" && magic != "P5") throw std::runtime_error("not a PGM file: " + path.string());
    const long cols = std::stol(pgm_token(in));
    const long rows = std::stol(pgm_token(in));
    const long maxval = std::stol(pgm_token(in));
    if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) {
        throw std::runtime_error("invalid PGM header in " + path.string());
    }
    Image2D img(rows, cols);
    const double scale = 1.0 / static_cast<double>(maxval);
    if (magic == "P2") {
        for (auto& p : img.pixels) {
            long v = 0;
            if (!(in >> v)) throw std::runtime_error("truncated PGM data in " + path.string());
            p = static_cast<double>(v) * scale;
        }
    } else {
        in.get();  // single whitespace after maxval
        const bool wide = maxval > 255;
        for (auto& p : img.pixels) {
            unsigned v = 0;
            if (wide) {
                unsigned char b[2];
                in.read(reinterpret_cast<char*>(b), 2);
                v = (static_cast<unsigned>(b[0]) << 8) | b[1];
            } else {
                unsigned char b = 0;
                in.read(reinterpret_cast<char*>(&b), 1);
                v = b;
            }
            if (!in) throw std::runtime_error("truncated PGM data in " + path.string());
            p = static_cast<double>(v) * scale;
        }
    }
    return img;
}

void write_pgm(const fs::path& path, const Image2D& img, PgmFormat format) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    auto quantize = [](double v) {
        return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    if (format == PgmFormat::ascii_p2) {
        out << "P2\n" << img.cols << ' ' << img.rows << "\n255\n";
        for (Index r = 0; r < img.rows; ++r) {
            for (Index c = 0; c < img.cols; ++c) out << (c ? " " : "") << quantize(img.at(r, c));
            out << '\n';
        }
    } else {
        out << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
        for (double p : img.pixels) out.put(static_cast<char>(quantize(p)));
    }
}

Matrix read_csv_matrix(const fs::path& path) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error("ragged CSV matrix in " + path.string());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void write_csv_matrix(const fs::path& path, const Matrix& m) {
    auto out = open_out(path);
    out << std::setprecision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
        out << '\n';
    }
}

Vector read_csv_vector(const fs::path& path) {
    const Matrix m = read_csv_matrix(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.size() == 0) return Vector(0);
    throw std::runtime_error("CSV file is not a vector: " + path.string());
}

void write_csv_vector(const fs::path& path, const Vector& v) { write_csv_matrix(path, v); }

void write_raw_matrix(const fs::path& path, const Matrix& m) {
    static_assert(std::endian::native == std::endian::little, "raw format assumes little-endian host");
    auto out = open_out(path, std::ios::out | std::ios::binary);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    nlohmann::json side = {{"rows", m.rows()}, {"cols", m.cols()}};
    auto sidecar = open_out(fs::path(path.string() + ".json"));
    sidecar << side.dump() << '\n';
}

Matrix read_raw_matrix(const fs::path& path) {
    auto sidecar = open_in(fs::path(path.string() + ".json"));
    const auto side = nlohmann::json::parse(sidecar);
    const Index rows = side.at("rows").get<Index>();
    const Index cols = side.at("cols").get<Index>();
    if (rows < 0 || cols < 0) throw std::runtime_error("negative shape in raw sidecar");
    auto in = open_in(path, std::ios::in | std::ios::binary);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            if (!in) throw std::runtime_error("raw payload shorter than sidecar shape: " + path.string());
            m(i, j) = v;
        }
    return m;
}

}  // namespace sparsa
