#pragma once

#include "stochdp/rational.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace stochdp {

// Dense rational matrix, row major.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Rat> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, Rat(0)) {}

    Rat& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const Rat& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }
};

std::size_t rank(Mat a);

// Basis of the null space {x : a x = 0}.
std::vector<Vec> null_space(Mat a);

// One solution of a x = b, or nullopt if inconsistent.
std::optional<Vec> solve(Mat a, Vec b);

// Minimum-norm solution of a x = b (the solution orthogonal to null(a)),
// or nullopt if inconsistent.
std::optional<Vec> solve_min_norm(const Mat& a, const Vec& b);

// Exact LDL^T pivoting check: true iff the symmetric matrix is PSD.
bool is_psd(const Mat& q);

// Orthogonal projection of x onto span(basis); basis need not be orthogonal.
Vec project_onto_span(const Vec& x, const std::vector<Vec>& basis);

// x minus its projection onto span(basis); exact.
Vec project_orthogonal(const Vec& x, const std::vector<Vec>& basis);

}  // namespace stochdp
