#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fer {

/// Dense row-major 2D grid. Used for raw 8-bit images and normalized float images.
template <typename T>
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("grid dimensions must be nonnegative");
    }
    Grid(int r, int c, std::vector<T> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("grid data size does not match dimensions");
    }

    T& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    const T& operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    [[nodiscard]] std::size_t size() const { return data.size(); }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using GrayImage = Grid<std::uint8_t>;
using FloatImage = Grid<float>;

}  // namespace fer
