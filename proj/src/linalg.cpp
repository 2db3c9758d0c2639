#include "stochdp/linalg.hpp"

#include <stdexcept>

namespace stochdp {

namespace {

// Row echelon form; returns pivot columns. Operates in place.
std::vector<std::size_t> echelon(Mat& a) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < a.cols && r < a.rows; ++c) {
        std::size_t p = r;
        while (p < a.rows && a(p, c) == 0) ++p;
        if (p == a.rows) continue;
        if (p != r)
            for (std::size_t j = 0; j < a.cols; ++j) std::swap(a(p, j), a(r, j));
        Rat inv = a(r, c);
        for (std::size_t j = c; j < a.cols; ++j) a(r, j) /= inv;
        for (std::size_t i = 0; i < a.rows; ++i) {
            if (i == r || a(i, c) == 0) continue;
            Rat f = a(i, c);
            for (std::size_t j = c; j < a.cols; ++j) a(i, j) -= f * a(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

}  // namespace

std::size_t rank(Mat a) { return echelon(a).size(); }

std::vector<Vec> null_space(Mat a) {
    std::size_t n = a.cols;
    auto pivots = echelon(a);
    std::vector<bool> is_pivot(n, false);
    for (auto c : pivots) is_pivot[c] = true;
    std::vector<Vec> basis;
    for (std::size_t c = 0; c < n; ++c) {
        if (is_pivot[c]) continue;
        Vec v(n, Rat(0));
        v[c] = 1;
        for (std::size_t i = 0; i < pivots.size(); ++i) v[pivots[i]] = -a(i, c);
        basis.push_back(std::move(v));
    }
    return basis;
}

std::optional<Vec> solve(Mat a, Vec b) {
    std::size_t n = a.cols;
    Mat aug(a.rows, n + 1);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
        aug(i, n) = b[i];
    }
    auto pivots = echelon(aug);
    for (auto c : pivots)
        if (c == n) return std::nullopt;  // row 0 = 1
    Vec x(n, Rat(0));
    for (std::size_t i = 0; i < pivots.size(); ++i) x[pivots[i]] = aug(i, n);
    return x;
}

std::optional<Vec> solve_min_norm(const Mat& a, const Vec& b) {
    auto x0 = solve(a, b);
    if (!x0) return std::nullopt;
    auto ns = null_space(a);
    if (ns.empty()) return x0;
    return project_orthogonal(*x0, ns);
}

bool is_psd(const Mat& q) {
    if (q.rows != q.cols) throw std::invalid_argument("is_psd: not square");
    std::size_t n = q.rows;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (q(i, j) != q(j, i)) throw std::invalid_argument("is_psd: not symmetric");
    Mat a = q;
    // Symmetric Gaussian elimination without row exchanges. A PSD matrix with
    // a zero diagonal entry must have the whole row zero.
    for (std::size_t k = 0; k < n; ++k) {
        if (a(k, k) < 0) return false;
        if (a(k, k) == 0) {
            for (std::size_t j = k; j < n; ++j)
                if (a(k, j) != 0) return false;
            continue;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            Rat f = a(i, k) / a(k, k);
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return true;
}

Vec project_onto_span(const Vec& x, const std::vector<Vec>& basis) {
    if (basis.empty()) return Vec(x.size(), Rat(0));
    std::size_t k = basis.size();
    Mat gram(k, k);
    Vec rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) gram(i, j) = dot(basis[i], basis[j]);
        rhs[i] = dot(basis[i], x);
    }
    auto coef = solve(gram, rhs);
    if (!coef) throw std::invalid_argument("project_onto_span: dependent basis");
    Vec p(x.size(), Rat(0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < x.size(); ++j) p[j] += (*coef)[i] * basis[i][j];
    return p;
}

Vec project_orthogonal(const Vec& x, const std::vector<Vec>& basis) {
    Vec p = project_onto_span(x, basis);
    Vec r(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) r[j] = x[j] - p[j];
    return r;
}

}  // namespace stochdp
