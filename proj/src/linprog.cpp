#include "stochdp/linprog.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>

namespace stochdp {

namespace {

// Dense two-phase simplex on the standard form
//   min c.x  s.t.  A x = b, x >= 0, b >= 0,
// with Bland's rule (termination guaranteed in exact arithmetic).
struct Simplex {
    std::size_t m, ncols;
    std::vector<Vec> t;           // m rows, ncols+1 entries (last = rhs)
    std::vector<std::size_t> basis;

    Simplex(std::size_t m_, std::size_t n_) : m(m_), ncols(n_), t(m_, Vec(n_ + 1, Rat(0))), basis(m_, 0) {}

    void pivot(std::size_t r, std::size_t c, Vec& cost) {
        Rat inv = t[r][c];
        for (auto& x : t[r]) x /= inv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == r || t[i][c] == 0) continue;
            Rat f = t[i][c];
            for (std::size_t j = 0; j <= ncols; ++j) t[i][j] -= f * t[r][j];
        }
        if (cost[c] != 0) {
            Rat f = cost[c];
            for (std::size_t j = 0; j <= ncols; ++j) cost[j] -= f * t[r][j];
        }
        basis[r] = c;
    }

    // Reduced-cost row for objective c (index ncols holds -objective value).
    Vec reduced_costs(const Vec& c) const {
        Vec row(ncols + 1, Rat(0));
        for (std::size_t j = 0; j < c.size(); ++j) row[j] = c[j];
        for (std::size_t i = 0; i < m; ++i) {
            Rat cb = basis[i] < c.size() ? c[basis[i]] : Rat(0);
            if (cb == 0) continue;
            for (std::size_t j = 0; j <= ncols; ++j) row[j] -= cb * t[i][j];
        }
        return row;
    }

    // Returns entering column on unboundedness, or ncols when optimal.
    // Dantzig's rule for speed; falls back to Bland's rule (guaranteed
    // termination) if the pivot count suggests cycling.
    std::size_t optimize(Vec& cost, std::size_t col_limit) {
        std::size_t iters = 0, bland_after = 20 * (m + ncols) + 100;
        for (;;) {
            std::size_t enter = ncols;
            if (++iters < bland_after) {
                for (std::size_t j = 0; j < col_limit; ++j)
                    if (cost[j] < 0 && (enter == ncols || cost[j] < cost[enter])) enter = j;
            } else {
                for (std::size_t j = 0; j < col_limit; ++j)
                    if (cost[j] < 0) { enter = j; break; }
            }
            if (enter == ncols) return ncols;
            std::size_t leave = m;
            for (std::size_t i = 0; i < m; ++i) {
                if (t[i][enter] <= 0) continue;
                if (leave == m) { leave = i; continue; }
                Rat cur = t[i][ncols] / t[i][enter];
                Rat best = t[leave][ncols] / t[leave][enter];
                if (cur < best || (cur == best && basis[i] < basis[leave])) leave = i;
            }
            if (leave == m) return enter;  // unbounded
            pivot(leave, enter, cost);
        }
    }
};

LpResult lp_dense(const Polyhedron& p, const Vec& obj) {
    std::size_t n = p.dim;
    std::size_t mi = p.ineqs.size(), me = p.eqs.size(), m = mi + me;
    // columns: u (n), v (n), slacks (mi), artificials (appended per row)
    std::size_t base_cols = 2 * n + mi;

    // Count artificials: every equality row and every inequality row whose
    // (sign-normalized) rhs forces the slack out of the initial basis.
    std::vector<int> row_sign(m, 1);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < mi; ++i)
        if (p.ineqs[i].rhs < 0) { row_sign[i] = -1; ++n_art; }
    for (std::size_t i = 0; i < me; ++i) {
        if (p.eqs[i].rhs < 0) row_sign[mi + i] = -1;
        ++n_art;
    }

    Simplex sx(m, base_cols + n_art);
    std::size_t art = base_cols;
    std::vector<bool> is_art(sx.ncols, false);
    for (std::size_t i = 0; i < m; ++i) {
        const LinRow& row = i < mi ? p.ineqs[i] : p.eqs[i - mi];
        Rat s(row_sign[i]);
        for (std::size_t j = 0; j < n; ++j) {
            sx.t[i][j] = s * row.a[j];
            sx.t[i][n + j] = -s * row.a[j];
        }
        if (i < mi) sx.t[i][2 * n + i] = s;
        sx.t[i][sx.ncols] = s * row.rhs;
        if (i < mi && row_sign[i] == 1) {
            sx.basis[i] = 2 * n + i;
        } else {
            sx.t[i][art] = 1;
            is_art[art] = true;
            sx.basis[i] = art++;
        }
    }

    LpResult res;
    if (n_art > 0) {
        Vec phase1(sx.ncols, Rat(0));
        for (std::size_t j = base_cols; j < sx.ncols; ++j) phase1[j] = 1;
        Vec cost = sx.reduced_costs(phase1);
        sx.optimize(cost, sx.ncols);
        if (-cost[sx.ncols] > 0) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Drive remaining artificials out of the basis.
        for (std::size_t i = 0; i < sx.m; ++i) {
            if (!is_art[sx.basis[i]]) continue;
            std::size_t c = base_cols;
            for (std::size_t j = 0; j < base_cols; ++j)
                if (sx.t[i][j] != 0) { c = j; break; }
            if (c < base_cols) sx.pivot(i, c, cost);
            // else: redundant row, harmless to leave (rhs is 0)
        }
    }

    Vec phase2(sx.ncols, Rat(0));
    for (std::size_t j = 0; j < n; ++j) {
        phase2[j] = obj[j];
        phase2[n + j] = -obj[j];
    }
    Vec cost = sx.reduced_costs(phase2);
    // Artificial columns are frozen out of phase 2.
    for (std::size_t j = base_cols; j < sx.ncols; ++j) cost[j] = Rat(1);
    std::size_t enter = sx.optimize(cost, base_cols);

    auto extract_point = [&]() {
        Vec x(n, Rat(0));
        for (std::size_t i = 0; i < sx.m; ++i) {
            std::size_t b = sx.basis[i];
            if (b < n)
                x[b] += sx.t[i][sx.ncols];
            else if (b < 2 * n)
                x[b - n] -= sx.t[i][sx.ncols];
        }
        return x;
    };

    if (enter < sx.ncols) {
        res.status = LpStatus::Unbounded;
        res.point = extract_point();
        Vec d(n, Rat(0));
        if (enter < n)
            d[enter] += 1;
        else if (enter < 2 * n)
            d[enter - n] -= 1;
        for (std::size_t i = 0; i < sx.m; ++i) {
            std::size_t b = sx.basis[i];
            if (b < n)
                d[b] -= sx.t[i][enter];
            else if (b < 2 * n)
                d[b - n] += sx.t[i][enter];
        }
        res.ray = std::move(d);
        return res;
    }

    res.status = LpStatus::Optimal;
    res.value = -cost[sx.ncols];
    res.point = extract_point();
    return res;
}

}  // namespace

LpResult lp_standard(std::vector<Vec> A, Vec b, const Vec& c) {
    std::size_t m = A.size(), nv = c.size();
    for (std::size_t i = 0; i < m; ++i) {
        if (A[i].size() != nv) throw std::invalid_argument("lp_standard: row size");
        if (b[i] < 0) {
            for (auto& x : A[i]) x = -x;
            b[i] = -b[i];
        }
    }
    Simplex sx(m, nv + m);  // one artificial per row
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nv; ++j) sx.t[i][j] = A[i][j];
        sx.t[i][nv + i] = 1;
        sx.t[i][sx.ncols] = b[i];
        sx.basis[i] = nv + i;
    }
    LpResult res;
    {
        Vec phase1(sx.ncols, Rat(0));
        for (std::size_t j = nv; j < sx.ncols; ++j) phase1[j] = 1;
        Vec cost = sx.reduced_costs(phase1);
        sx.optimize(cost, sx.ncols);
        if (-cost[sx.ncols] > 0) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (sx.basis[i] < nv) continue;
            std::size_t col = nv;
            for (std::size_t j = 0; j < nv; ++j)
                if (sx.t[i][j] != 0) { col = j; break; }
            if (col < nv) sx.pivot(i, col, cost);
        }
    }
    Vec full(sx.ncols, Rat(0));
    for (std::size_t j = 0; j < nv; ++j) full[j] = c[j];
    Vec cost = sx.reduced_costs(full);
    for (std::size_t j = nv; j < sx.ncols; ++j) cost[j] = Rat(1);
    std::size_t enter = sx.optimize(cost, nv);
    res.point.assign(nv, Rat(0));
    for (std::size_t i = 0; i < m; ++i)
        if (sx.basis[i] < nv) res.point[sx.basis[i]] = sx.t[i][sx.ncols];
    if (enter < sx.ncols) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    res.status = LpStatus::Optimal;
    res.value = -cost[sx.ncols];
    return res;
}

namespace {

// Row generation for large systems: the dense tableau is quadratic in the row
// count, so solve over a growing active subset of the inequalities and pull in
// (a batch of) the most violated rows until the subset optimum is feasible for
// everything. The subset problem is a relaxation, so its optimum/infeasibility
// transfers to the full system exactly.
LpResult lp_lazy(const Polyhedron& p, const Vec& obj) {
    std::size_t m = p.ineqs.size();
    Polyhedron sub(p.dim);
    sub.eqs = p.eqs;
    std::vector<char> active(m, 0);
    for (;;) {
        LpResult r = lp_dense(sub, obj);
        if (r.status == LpStatus::Infeasible) return r;
        std::vector<std::pair<Rat, std::size_t>> bad;  // (violation score, row)
        for (std::size_t i = 0; i < m; ++i) {
            if (active[i]) continue;
            const LinRow& row = p.ineqs[i];
            Rat v = dot(row.a, r.point) - row.rhs;
            if (r.status == LpStatus::Unbounded) {
                Rat along = dot(row.a, r.ray);
                if (along > v) v = along;  // cutting the ray counts too
            }
            if (v > 0) bad.emplace_back(std::move(v), i);
        }
        if (bad.empty()) return r;  // subset optimum feasible for the rest
        const std::size_t batch = 64;
        if (bad.size() > batch)
            std::nth_element(bad.begin(), bad.begin() + batch, bad.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t j = 0; j < std::min(batch, bad.size()); ++j) {
            active[bad[j].second] = 1;
            sub.ineqs.push_back(p.ineqs[bad[j].second]);
        }
    }
}

}  // namespace

LpResult lp_solve(const Polyhedron& p, const Vec& obj) {
    if (obj.size() != p.dim) throw std::invalid_argument("lp_solve: objective dimension");
    if (p.ineqs.size() > 400) return lp_lazy(p, obj);
    return lp_dense(p, obj);
}

Vec lex_min_point(Polyhedron p) {
    Vec out(p.dim, Rat(0));
    for (std::size_t i = 0; i < p.dim; ++i) {
        Vec obj(p.dim, Rat(0));
        obj[i] = 1;
        LpResult lo = lp_solve(p, obj);
        if (lo.status == LpStatus::Infeasible)
            throw std::invalid_argument("lex_min_point: empty polyhedron");
        Rat val;
        if (lo.status == LpStatus::Optimal) {
            val = lo.value;
        } else {
            // No lexicographic minimum in this coordinate; take the feasible
            // value nearest zero.
            LpResult hi = lp_max(p, obj);
            if (hi.status == LpStatus::Optimal && hi.value < 0)
                val = hi.value;
            else
                val = 0;
        }
        out[i] = val;
        Vec row(p.dim, Rat(0));
        row[i] = 1;
        p.add_eq(std::move(row), val);
    }
    return out;
}

}  // namespace stochdp
