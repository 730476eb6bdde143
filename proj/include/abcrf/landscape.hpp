#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/csv.hpp"

namespace abcrf {

struct CellId {
    int row = 0;
    int col = 0;
    bool operator==(const CellId&) const = default;
};

/// Regular grid of host densities. Cell centres sit at
/// ((col + 0.5) * cell_size, (row + 0.5) * cell_size); immutable once built.
class Landscape {
  public:
    Landscape(int n_rows, int n_cols, double cell_size, std::vector<double> h)
        : n_rows_(n_rows), n_cols_(n_cols), cell_size_(cell_size), h_(std::move(h)) {
        if (n_rows_ < 1 || n_cols_ < 1)
            throw std::invalid_argument("Landscape: grid dimensions must be >= 1");
        if (!(cell_size_ > 0.0))
            throw std::invalid_argument("Landscape: cell_size must be > 0");
        if (h_.size() != static_cast<std::size_t>(n_rows_) * static_cast<std::size_t>(n_cols_))
            throw std::invalid_argument("Landscape: density vector does not match grid size");
        for (std::size_t k = 0; k < h_.size(); ++k) {
            if (!(h_[k] >= 0.0 && h_[k] <= 1.0))
                throw std::invalid_argument("Landscape: density out of [0,1] at row " +
                                            std::to_string(k / n_cols_) + ", col " +
                                            std::to_string(k % n_cols_));
        }
    }

    int n_rows() const { return n_rows_; }
    int n_cols() const { return n_cols_; }
    std::size_t n_cells() const { return h_.size(); }
    double cell_size() const { return cell_size_; }

    bool contains(CellId c) const {
        return c.row >= 0 && c.row < n_rows_ && c.col >= 0 && c.col < n_cols_;
    }

    std::size_t index(CellId c) const {
        require_inside(c);
        return static_cast<std::size_t>(c.row) * n_cols_ + c.col;
    }

    CellId cell(std::size_t index) const {
        if (index >= h_.size()) throw std::invalid_argument("Landscape: cell index out of range");
        return {static_cast<int>(index / n_cols_), static_cast<int>(index % n_cols_)};
    }

    double density(CellId c) const { return h_[index(c)]; }
    double density(std::size_t index) const { return h_.at(index); }
    const std::vector<double>& densities() const { return h_; }

    /// Squared centre distance in cell units; exact integer arithmetic, so
    /// comparisons between distances on the grid carry no rounding.
    long long dist2_cells(CellId a, CellId b) const {
        require_inside(a);
        require_inside(b);
        const long long dr = a.row - b.row, dc = a.col - b.col;
        return dr * dr + dc * dc;
    }

    /// Euclidean distance between cell centres, in km.
    double distance(CellId a, CellId b) const {
        return cell_size_ * std::sqrt(static_cast<double>(dist2_cells(a, b)));
    }

  private:
    void require_inside(CellId c) const {
        if (!contains(c))
            throw std::invalid_argument("Landscape: cell (" + std::to_string(c.row) + "," +
                                        std::to_string(c.col) + ") out of bounds");
    }

    int n_rows_, n_cols_;
    double cell_size_;
    std::vector<double> h_;
};

inline Landscape uniform_landscape(int n_rows, int n_cols, double occupancy, double cell_size) {
    if (!(occupancy >= 0.0 && occupancy <= 1.0))
        throw std::invalid_argument("uniform_landscape: occupancy must be in [0,1]");
    if (n_rows < 1 || n_cols < 1)
        throw std::invalid_argument("uniform_landscape: grid dimensions must be >= 1");
    return Landscape(n_rows, n_cols, cell_size,
                     std::vector<double>(static_cast<std::size_t>(n_rows) * n_cols, occupancy));
}

/// Reads a plain row-major numeric grid (comma-separated, no header).
/// Dimensions are inferred; ragged rows, non-numeric entries and densities
/// outside [0,1] are reported with their row/column position.
inline Landscape load_landscape(const std::string& path, double cell_size = 1.0) {
    auto lines = read_lines(path);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw std::runtime_error(path + ": empty landscape file");

    std::vector<double> h;
    std::size_t n_cols = 0;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        auto fields = split_csv_line(lines[r]);
        if (r == 0) {
            n_cols = fields.size();
        } else if (fields.size() != n_cols) {
            throw std::runtime_error(path + ": ragged row " + std::to_string(r + 1) + " (" +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(n_cols) + ")");
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string where =
                path + ": row " + std::to_string(r + 1) + ", col " + std::to_string(c + 1);
            const double v = parse_double(fields[c], where);
            if (!(v >= 0.0 && v <= 1.0))
                throw std::runtime_error(where + ": density " + format_double(v) +
                                         " outside [0,1]");
            h.push_back(v);
        }
    }
    return Landscape(static_cast<int>(lines.size()), static_cast<int>(n_cols), cell_size,
                     std::move(h));
}

inline void save_landscape(const Landscape& land, const std::string& path) {
    auto out = open_output(path);
    for (int r = 0; r < land.n_rows(); ++r) {
        for (int c = 0; c < land.n_cols(); ++c) {
            if (c > 0) out << ',';
            out << format_double(land.density(CellId{r, c}));
        }
        out << '\n';
    }
}

} // namespace abcrf
