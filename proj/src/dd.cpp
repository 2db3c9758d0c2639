#include "stochdp/linalg.hpp"
#include "stochdp/polyfunc.hpp"

#include <algorithm>

namespace stochdp {

namespace {

// Scales a ray so its first nonzero entry has magnitude 1 (sign kept).
void normalize_ray(Vec& r) {
    for (const auto& c : r) {
        if (c == 0) continue;
        Rat s = abs(c);
        for (auto& x : r) x /= s;
        return;
    }
}

struct DdState {
    std::size_t dim;
    std::vector<Vec> lines;
    std::vector<Vec> rays;
    std::vector<Vec> processed;  // halfspace normals a with a.w <= 0

    explicit DdState(std::size_t d) : dim(d) {
        for (std::size_t i = 0; i < d; ++i) {
            Vec e(d, Rat(0));
            e[i] = 1;
            lines.push_back(std::move(e));
        }
    }

    bool extreme(const Vec& r) const {
        std::vector<Vec> tight;
        for (const auto& a : processed)
            if (dot(a, r) == 0) tight.push_back(a);
        Mat m(tight.size(), dim);
        for (std::size_t i = 0; i < tight.size(); ++i)
            for (std::size_t j = 0; j < dim; ++j) m(i, j) = tight[i][j];
        return rank(std::move(m)) == dim - lines.size() - 1;
    }

    void add_halfspace(const Vec& a) {
        // If a line leaves the halfspace, use it to flatten everything else.
        for (std::size_t i = 0; i < lines.size(); ++i) {
            Rat s = dot(a, lines[i]);
            if (s == 0) continue;
            Vec piv = lines[i];
            lines.erase(lines.begin() + static_cast<long>(i));
            for (auto& l : lines) {
                Rat f = dot(a, l) / s;
                for (std::size_t j = 0; j < dim; ++j) l[j] -= f * piv[j];
            }
            for (auto& r : rays) {
                Rat f = dot(a, r) / s;
                for (std::size_t j = 0; j < dim; ++j) r[j] -= f * piv[j];
                normalize_ray(r);
            }
            if (s > 0)
                for (auto& x : piv) x = -x;
            normalize_ray(piv);
            rays.push_back(std::move(piv));
            processed.push_back(a);
            return;
        }
        std::vector<Vec> pos, neg, zero;
        std::vector<Rat> pos_v, neg_v;
        for (auto& r : rays) {
            Rat v = dot(a, r);
            if (v > 0) {
                pos.push_back(std::move(r));
                pos_v.push_back(v);
            } else if (v < 0) {
                neg.push_back(std::move(r));
                neg_v.push_back(v);
            } else {
                zero.push_back(std::move(r));
            }
        }
        processed.push_back(a);
        std::vector<Vec> combos;
        for (std::size_t ip = 0; ip < pos.size(); ++ip) {
            for (std::size_t in = 0; in < neg.size(); ++in) {
                // pos_v > 0, neg_v < 0: positive combination landing on the
                // boundary hyperplane.
                Vec comb(dim);
                for (std::size_t j = 0; j < dim; ++j)
                    comb[j] = pos_v[ip] * neg[in][j] - neg_v[in] * pos[ip][j];
                if (is_zero_vec(comb)) continue;
                normalize_ray(comb);
                combos.push_back(std::move(comb));
            }
        }
        std::vector<Vec> next = std::move(zero);
        for (auto& r : neg) next.push_back(std::move(r));
        for (auto& r : combos)
            if (extreme(r)) next.push_back(std::move(r));
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        rays = std::move(next);
    }
};

}  // namespace

Generators enumerate_generators(const Polyhedron& p) {
    // Homogenize: cone {(w, w0) : a.w - rhs*w0 <= 0, w0 >= 0}.
    std::size_t d = p.dim + 1;
    DdState st(d);
    auto lift = [&](const LinRow& r, bool flip) {
        Vec a(d);
        for (std::size_t j = 0; j < p.dim; ++j) a[j] = flip ? -r.a[j] : r.a[j];
        a[p.dim] = flip ? r.rhs : -r.rhs;
        return a;
    };
    std::vector<Vec> halfspaces;
    {
        Vec w0(d, Rat(0));
        w0[p.dim] = -1;  // -w0 <= 0
        halfspaces.push_back(std::move(w0));
    }
    for (const auto& r : p.ineqs) halfspaces.push_back(lift(r, false));
    for (const auto& r : p.eqs) {
        halfspaces.push_back(lift(r, false));
        halfspaces.push_back(lift(r, true));
    }
    for (const auto& a : halfspaces) st.add_halfspace(a);

    Generators g;
    for (const auto& r : st.rays) {
        if (r[p.dim] > 0) {
            Vec v(p.dim);
            for (std::size_t j = 0; j < p.dim; ++j) v[j] = r[j] / r[p.dim];
            g.vertices.push_back(std::move(v));
        } else {
            Vec v(r.begin(), r.begin() + static_cast<long>(p.dim));
            if (!is_zero_vec(v)) g.rays.push_back(std::move(v));
        }
    }
    for (const auto& l : st.lines) {
        Vec v(l.begin(), l.begin() + static_cast<long>(p.dim));
        if (!is_zero_vec(v)) g.lines.push_back(std::move(v));
    }
    return g;
}

}  // namespace stochdp
