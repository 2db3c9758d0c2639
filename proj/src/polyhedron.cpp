#include "stochdp/polyhedron.hpp"
#include "stochdp/linalg.hpp"
#include "stochdp/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>

namespace stochdp {

bool Polyhedron::contains(const Vec& w) const {
    for (const auto& r : ineqs)
        if (dot(r.a, w) > r.rhs) return false;
    for (const auto& r : eqs)
        if (dot(r.a, w) != r.rhs) return false;
    return true;
}

Polyhedron Polyhedron::homogenized() const {
    Polyhedron h(dim);
    h.ineqs = ineqs;
    h.eqs = eqs;
    for (auto& r : h.ineqs) r.rhs = 0;
    for (auto& r : h.eqs) r.rhs = 0;
    return h;
}

std::size_t fm_row_cap() {
    static std::size_t cap = [] {
        if (const char* env = std::getenv("STOCHDP_FM_ROW_CAP")) {
            long v = std::atol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        return static_cast<std::size_t>(20000);
    }();
    return cap;
}

namespace {

// Canonical positive scaling: first nonzero coefficient becomes +-1.
void normalize_row(LinRow& r) {
    for (const auto& c : r.a) {
        if (c == 0) continue;
        Rat s = abs(c);
        for (auto& x : r.a) x /= s;
        r.rhs /= s;
        return;
    }
}

bool row_trivial(const LinRow& r) { return is_zero_vec(r.a) && r.rhs >= 0; }

// Ancestry of a derived row: bitmask over the rows of the system FM started
// from. Kohler's rule says that after eliminating k variables, any row that
// combines more than k+1 of the starting rows is redundant for the projection,
// so it can be dropped without any LP work.
using Mask = std::vector<std::uint64_t>;

void mask_set(Mask& m, std::size_t i) { m[i / 64] |= std::uint64_t(1) << (i % 64); }

Mask mask_union(const Mask& a, const Mask& b) {
    Mask out(a.size());
    for (std::size_t w = 0; w < a.size(); ++w) out[w] = a[w] | b[w];
    return out;
}

std::size_t mask_count(const Mask& m) {
    std::size_t n = 0;
    for (auto w : m) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
}

bool mask_subset(const Mask& a, const Mask& b) {
    for (std::size_t w = 0; w < a.size(); ++w)
        if ((a[w] & b[w]) != a[w]) return false;
    return true;
}

// Chernikov's minimal-history rule: a row whose ancestry strictly contains the
// ancestry of another surviving row is redundant.
void chernikov_filter(std::vector<LinRow>& rows, std::vector<Mask>& masks) {
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return mask_count(masks[a]) < mask_count(masks[b]); });
    std::vector<bool> drop(rows.size(), false);
    for (std::size_t x = 0; x < order.size(); ++x) {
        std::size_t i = order[x];
        if (drop[i]) continue;
        for (std::size_t y = x + 1; y < order.size(); ++y) {
            std::size_t j = order[y];
            if (drop[j] || masks[i] == masks[j]) continue;
            if (mask_subset(masks[i], masks[j])) drop[j] = true;
        }
    }
    std::vector<LinRow> rout;
    std::vector<Mask> mout;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (drop[i]) continue;
        rout.push_back(std::move(rows[i]));
        mout.push_back(std::move(masks[i]));
    }
    rows = std::move(rout);
    masks = std::move(mout);
}

void dominance_prune(std::vector<LinRow>& rows, std::vector<Mask>* anc = nullptr) {
    for (auto& r : rows) normalize_row(r);
    // Identical normal vector: keep the tightest rhs.
    std::map<Vec, std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto it = best.find(rows[i].a);
        if (it == best.end())
            best.emplace(rows[i].a, i);
        else if (rows[i].rhs < rows[it->second].rhs)
            it->second = i;
    }
    std::vector<LinRow> out;
    std::vector<Mask> out_anc;
    out.reserve(best.size());
    for (auto& [a, i] : best) {
        if (is_zero_vec(a) && rows[i].rhs >= 0) continue;
        out.push_back(rows[i]);
        if (anc) out_anc.push_back(std::move((*anc)[i]));
    }
    rows = std::move(out);
    if (anc) *anc = std::move(out_anc);
}

// Eliminate a single coordinate in place (column zeroed, dimension kept),
// carrying ancestry masks and applying Kohler's redundancy bound. `budget` is
// the max ancestry size a kept row may have (k_eliminated + 1). Returns false
// when more than `cap` rows survive the combinatorial filters; p and the masks
// are left moved-from then, so the caller must restore both before retrying.
bool fm_step(Polyhedron& p, std::size_t k, std::vector<Mask>& anc, std::vector<Mask>& anc_eq,
             std::size_t budget, std::size_t cap) {
    // Prefer substitution through an equality containing the variable.
    for (std::size_t i = 0; i < p.eqs.size(); ++i) {
        if (p.eqs[i].a[k] == 0) continue;
        LinRow piv = p.eqs[i];
        Mask pm = std::move(anc_eq[i]);
        p.eqs.erase(p.eqs.begin() + static_cast<long>(i));
        anc_eq.erase(anc_eq.begin() + static_cast<long>(i));
        Rat pk = piv.a[k];
        auto substitute = [&](LinRow& r, Mask& m) {
            if (r.a[k] == 0) return;
            Rat f = r.a[k] / pk;
            for (std::size_t j = 0; j < p.dim; ++j) r.a[j] -= f * piv.a[j];
            r.rhs -= f * piv.rhs;
            m = mask_union(m, pm);
        };
        for (std::size_t j = 0; j < p.ineqs.size(); ++j) substitute(p.ineqs[j], anc[j]);
        for (std::size_t j = 0; j < p.eqs.size(); ++j) substitute(p.eqs[j], anc_eq[j]);
        return true;
    }
    std::vector<LinRow> pos, neg, zero;
    std::vector<Mask> mpos, mneg, mzero;
    for (std::size_t i = 0; i < p.ineqs.size(); ++i) {
        LinRow& r = p.ineqs[i];
        if (r.a[k] > 0) {
            pos.push_back(std::move(r));
            mpos.push_back(std::move(anc[i]));
        } else if (r.a[k] < 0) {
            neg.push_back(std::move(r));
            mneg.push_back(std::move(anc[i]));
        } else {
            zero.push_back(std::move(r));
            mzero.push_back(std::move(anc[i]));
        }
    }
    for (std::size_t ip = 0; ip < pos.size(); ++ip) {
        for (std::size_t in = 0; in < neg.size(); ++in) {
            if (zero.size() > cap) {
                // Compress in place before giving up; the filters usually
                // collapse most of the raw products.
                chernikov_filter(zero, mzero);
                dominance_prune(zero, &mzero);
                if (zero.size() > cap / 2) return false;
            }
            Mask m = mask_union(mpos[ip], mneg[in]);
            if (mask_count(m) > budget) continue;
            const LinRow& rp = pos[ip];
            const LinRow& rn = neg[in];
            LinRow comb;
            comb.a.resize(p.dim);
            Rat cp = rp.a[k], cn = -rn.a[k];
            for (std::size_t j = 0; j < p.dim; ++j) comb.a[j] = cn * rp.a[j] + cp * rn.a[j];
            comb.rhs = cn * rp.rhs + cp * rn.rhs;
            if (row_trivial(comb)) continue;
            zero.push_back(std::move(comb));
            mzero.push_back(std::move(m));
        }
    }
    p.ineqs = std::move(zero);
    anc = std::move(mzero);
    chernikov_filter(p.ineqs, anc);
    dominance_prune(p.ineqs, &anc);
    return true;
}

// --- double-precision scouting ----------------------------------------
// The exact LP tests dominate pruning cost on big systems, and almost all of
// them end in "redundant". A double-precision simplex proposes the outcome
// (a dual certificate, or a maximizer to ray-shoot); everything it proposes
// is re-verified in exact arithmetic before it has any effect, so these
// routines can be sloppy about tolerances without risking soundness.

// Shared pivot loop. Returns 0 optimal, 1 unbounded (entering column in
// *ecol), 2 iteration cap reached.
int float_pivots(std::vector<std::vector<double>>& t, std::vector<std::size_t>& basis,
                 std::vector<double>& cost, std::size_t lim, std::size_t* ecol) {
    const double eps = 1e-9;
    std::size_t m = t.size(), w = m ? t[0].size() : 0;
    for (int iter = 0; iter < 500; ++iter) {
        std::size_t enter = w;
        double best = -eps;
        for (std::size_t j = 0; j < lim; ++j)
            if (cost[j] < best) { best = cost[j]; enter = j; }
        if (enter == w) return 0;
        std::size_t leave = m;
        double br = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][enter] <= eps) continue;
            double r = t[i][w - 1] / t[i][enter];
            if (leave == m || r < br) { leave = i; br = r; }
        }
        if (leave == m) {
            if (ecol) *ecol = enter;
            return 1;
        }
        double inv = t[leave][enter];
        for (auto& x : t[leave]) x /= inv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = t[i][enter];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < w; ++j) t[i][j] -= f * t[leave][j];
        }
        double f = cost[enter];
        if (f != 0.0)
            for (std::size_t j = 0; j < w; ++j) cost[j] -= f * t[leave][j];
        basis[leave] = enter;
    }
    return 2;
}

// min c.x, A x = b, x >= 0 in doubles; returns the final basis columns
// (empty when infeasible/unbounded/stuck). Columns with allowed[j] == 0 are
// zeroed out of the tableau, which keeps them out of the basis for good.
std::vector<std::size_t> float_standard_basis(const std::vector<std::vector<double>>& A,
                                              const std::vector<double>& b,
                                              const std::vector<double>& c,
                                              const std::vector<char>* allowed = nullptr) {
    std::size_t m = A.size(), nv = c.size(), w = nv + m + 1;
    std::vector<std::vector<double>> t(m, std::vector<double>(w, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = b[i] < 0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < nv; ++j)
            if (!allowed || (*allowed)[j]) t[i][j] = s * A[i][j];
        t[i][nv + i] = 1.0;
        t[i][w - 1] = s * b[i];
        basis[i] = nv + i;
    }
    std::vector<double> cost(w, 0.0);
    for (std::size_t j = nv; j < nv + m; ++j) cost[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) cost[j] -= t[i][j];
    if (float_pivots(t, basis, cost, nv, nullptr) != 0) return {};
    if (-cost[w - 1] > 1e-7) return {};  // infeasible
    std::vector<double> c2(w, 0.0);
    for (std::size_t j = 0; j < nv; ++j)
        if (!allowed || (*allowed)[j]) c2[j] = c[j];
    for (std::size_t i = 0; i < m; ++i) {
        double cb = basis[i] < nv ? c[basis[i]] : 0.0;
        if (cb != 0.0)
            for (std::size_t j = 0; j < w; ++j) c2[j] -= cb * t[i][j];
    }
    if (float_pivots(t, basis, c2, nv, nullptr) != 0) return {};
    return basis;
}

struct FloatLp {
    int status = 2;  // 0 optimal, 1 unbounded, 2 gave up
    std::vector<double> x, ray;
};

// max obj.x over p in doubles (free variables via u-v split, slack-seeded
// basis); mirrors the exact solver's construction.
FloatLp float_poly_max(const Polyhedron& p, const Vec& obj) {
    std::size_t n = p.dim, mi = p.ineqs.size(), me = p.eqs.size(), m = mi + me;
    std::size_t base = 2 * n + mi;
    std::vector<int> sign(m, 1);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < mi; ++i)
        if (p.ineqs[i].rhs < 0) { sign[i] = -1; ++n_art; }
    for (std::size_t i = 0; i < me; ++i) {
        if (p.eqs[i].rhs < 0) sign[mi + i] = -1;
        ++n_art;
    }
    std::size_t ncols = base + n_art, w = ncols + 1;
    std::vector<std::vector<double>> t(m, std::vector<double>(w, 0.0));
    std::vector<std::size_t> basis(m);
    std::size_t art = base;
    for (std::size_t i = 0; i < m; ++i) {
        const LinRow& row = i < mi ? p.ineqs[i] : p.eqs[i - mi];
        double s = sign[i];
        for (std::size_t j = 0; j < n; ++j) {
            double v = row.a[j].get_d();
            t[i][j] = s * v;
            t[i][n + j] = -s * v;
        }
        if (i < mi) t[i][2 * n + i] = s;
        t[i][w - 1] = s * row.rhs.get_d();
        if (i < mi && sign[i] == 1) {
            basis[i] = 2 * n + i;
        } else {
            t[i][art] = 1.0;
            basis[i] = art++;
        }
    }
    FloatLp out;
    if (n_art > 0) {
        std::vector<double> cost(w, 0.0);
        for (std::size_t j = base; j < ncols; ++j) cost[j] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (basis[i] < base) continue;
            for (std::size_t j = 0; j < w; ++j) cost[j] -= t[i][j];
        }
        if (float_pivots(t, basis, cost, base, nullptr) != 0) return out;
        if (-cost[w - 1] > 1e-7) return out;
    }
    std::vector<double> c2(w, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        c2[j] = -obj[j].get_d();
        c2[n + j] = obj[j].get_d();
    }
    {
        std::vector<double> red(w, 0.0);
        for (std::size_t j = 0; j < ncols; ++j) red[j] = c2[j];
        for (std::size_t i = 0; i < m; ++i) {
            double cb = basis[i] < 2 * n ? c2[basis[i]] : 0.0;
            if (cb != 0.0)
                for (std::size_t j = 0; j < w; ++j) red[j] -= cb * t[i][j];
        }
        c2 = std::move(red);
    }
    std::size_t ecol = ncols;
    int rc = float_pivots(t, basis, c2, base, &ecol);
    if (rc == 2) return out;
    out.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t b = basis[i];
        if (b < n)
            out.x[b] += t[i][w - 1];
        else if (b < 2 * n)
            out.x[b - n] -= t[i][w - 1];
    }
    if (rc == 1) {
        out.status = 1;
        out.ray.assign(n, 0.0);
        if (ecol < n)
            out.ray[ecol] += 1.0;
        else if (ecol < 2 * n)
            out.ray[ecol - n] -= 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t b = basis[i];
            if (b < n)
                out.ray[b] -= t[i][ecol];
            else if (b < 2 * n)
                out.ray[b - n] += t[i][ecol];
        }
        return out;
    }
    out.status = 0;
    return out;
}

// Greedy order: next variable with the fewest pos*neg products.
std::size_t pick_next(const Polyhedron& p, const std::vector<std::size_t>& remaining) {
    std::size_t best = remaining[0];
    long best_score = -1;
    for (auto k : remaining) {
        for (const auto& e : p.eqs)
            if (e.a[k] != 0) return k;  // substitution is free
        long np = 0, nn = 0;
        for (const auto& r : p.ineqs) {
            if (r.a[k] > 0) ++np;
            else if (r.a[k] < 0) ++nn;
        }
        long score = np * nn - (np + nn);
        if (best_score < 0 || score < best_score) {
            best_score = score;
            best = k;
        }
    }
    return best;
}

// Clarkson's output-sensitive redundancy removal. Every LP runs over the set
// S of rows already proven necessary instead of the whole system; a violation
// point is walked back to the feasible set by exact ray shooting from a
// relative-interior point, and the blocking row joins S. Needs a point with
// strictly positive slack on every inequality; returns false (caller falls
// back to the dense sweep) when none exists.
bool clarkson_drop(const Polyhedron& sp, std::vector<char>& drop) {
    std::size_t n = sp.dim, m = sp.ineqs.size();
    bool dbg = std::getenv("STOCHDP_CLARKSON_DEBUG") != nullptr;
    if (dbg) std::fprintf(stderr, "clarkson m=%zu n=%zu\n", m, n);
    Polyhedron aug(n + 1);
    for (const auto& r : sp.ineqs) {
        Vec a = r.a;
        a.push_back(Rat(1));
        aug.add_ineq(std::move(a), r.rhs);
    }
    {
        Vec cap(n + 1, Rat(0));
        cap[n] = 1;
        aug.add_ineq(std::move(cap), Rat(1));
    }
    for (const auto& r : sp.eqs) {
        Vec a = r.a;
        a.push_back(Rat(0));
        aug.add_eq(std::move(a), r.rhs);
    }
    Vec slack_obj(n + 1, Rat(0));
    slack_obj[n] = 1;
    LpResult interior = lp_max(aug, slack_obj);
    if (dbg) std::fprintf(stderr, "clarkson interior done\n");
    if (interior.status != LpStatus::Optimal || interior.value <= 0) return false;
    Vec z(interior.point.begin(), interior.point.begin() + static_cast<long>(n));

    std::vector<char> in_s(m, 0);
    std::vector<std::size_t> s_list;  // S in insertion order
    std::size_t me = sp.eqs.size();
    auto add_s = [&](std::size_t j) {
        if (!in_s[j]) {
            in_s[j] = 1;
            s_list.push_back(j);
        }
    };
    // Float tier: propose a dual certificate (nonnegative combination of the
    // S-rows matching the candidate's normal with no larger rhs) with a cheap
    // double simplex, then re-verify the proposed basis exactly. Only the
    // verified certificate causes a drop.
    std::vector<std::vector<double>> fa;
    std::vector<double> fc;
    std::size_t fcache = static_cast<std::size_t>(-1);
    auto float_cert = [&](std::size_t i) -> bool {
        std::size_t ns = s_list.size(), nv = ns + 2 * me;
        if (fcache != ns) {
            fa.assign(n, std::vector<double>(nv, 0.0));
            fc.assign(nv, 0.0);
            for (std::size_t col = 0; col < ns; ++col) {
                const LinRow& r0 = sp.ineqs[s_list[col]];
                for (std::size_t row = 0; row < n; ++row) fa[row][col] = r0.a[row].get_d();
                fc[col] = r0.rhs.get_d();
            }
            for (std::size_t k = 0; k < me; ++k) {
                const LinRow& r0 = sp.eqs[k];
                std::size_t col = ns + 2 * k;
                for (std::size_t row = 0; row < n; ++row) {
                    double v = r0.a[row].get_d();
                    fa[row][col] = v;
                    fa[row][col + 1] = -v;
                }
                fc[col] = r0.rhs.get_d();
                fc[col + 1] = -r0.rhs.get_d();
            }
            fcache = ns;
        }
        std::vector<double> bf(n);
        for (std::size_t row = 0; row < n; ++row) bf[row] = sp.ineqs[i].a[row].get_d();
        auto bas = float_standard_basis(fa, bf, fc);
        if (bas.empty()) return false;
        std::vector<std::size_t> cols;
        for (auto c0 : bas)
            if (c0 < nv) cols.push_back(c0);
        if (cols.empty()) return false;
        Mat ae(n, cols.size());
        Vec ce(cols.size(), Rat(0));
        for (std::size_t t2 = 0; t2 < cols.size(); ++t2) {
            std::size_t c0 = cols[t2];
            if (c0 < ns) {
                const LinRow& r0 = sp.ineqs[s_list[c0]];
                for (std::size_t row = 0; row < n; ++row) ae(row, t2) = r0.a[row];
                ce[t2] = r0.rhs;
            } else {
                std::size_t k = (c0 - ns) / 2;
                Rat sgn((c0 - ns) % 2 == 0 ? 1 : -1);
                const LinRow& r0 = sp.eqs[k];
                for (std::size_t row = 0; row < n; ++row) ae(row, t2) = sgn * r0.a[row];
                ce[t2] = sgn * r0.rhs;
            }
        }
        auto lam = solve(ae, sp.ineqs[i].a);
        if (!lam) return false;
        Rat val = 0;
        for (std::size_t t2 = 0; t2 < cols.size(); ++t2) {
            if ((*lam)[t2] < 0) return false;
            val += (*lam)[t2] * ce[t2];
        }
        return val <= sp.ineqs[i].rhs;
    };
    // Exact quick test: row i is implied by S iff its normal is a nonnegative
    // combination of the S-rows (plus free multipliers on the equalities)
    // whose combined rhs stays <= rhs_i. This dual LP has only n rows, so it
    // is far cheaper than the primal test over S; only failures (the rows
    // that feed the ray shoot) pay for a primal solve.
    std::vector<Vec> dual_lhs;
    Vec dual_c;
    std::size_t dual_scount = static_cast<std::size_t>(-1);  // |S| the cache was built for
    auto dual_implied = [&](std::size_t i) {
        std::vector<std::size_t> sidx;
        for (std::size_t j = 0; j < m; ++j)
            if (in_s[j]) sidx.push_back(j);
        if (sidx.size() != dual_scount) {  // S only ever grows
            dual_scount = sidx.size();
            std::size_t me = sp.eqs.size();
            std::size_t nv = sidx.size() + 2 * me;
            dual_lhs.assign(n, Vec(nv, Rat(0)));
            dual_c.assign(nv, Rat(0));
            for (std::size_t col = 0; col < sidx.size(); ++col) {
                const LinRow& r = sp.ineqs[sidx[col]];
                for (std::size_t row = 0; row < n; ++row) dual_lhs[row][col] = r.a[row];
                dual_c[col] = r.rhs;
            }
            for (std::size_t k = 0; k < me; ++k) {
                const LinRow& r = sp.eqs[k];
                std::size_t col = sidx.size() + 2 * k;
                for (std::size_t row = 0; row < n; ++row) {
                    dual_lhs[row][col] = r.a[row];
                    dual_lhs[row][col + 1] = -r.a[row];
                }
                dual_c[col] = r.rhs;
                dual_c[col + 1] = -r.rhs;
            }
        }
        LpResult r = lp_standard(dual_lhs, sp.ineqs[i].a, dual_c);
        return r.status == LpStatus::Optimal && r.value <= sp.ineqs[i].rhs;
    };
    // First constraint hit walking from the interior point toward xs; every
    // row blocking at the minimum is a keeper.
    auto shoot = [&](const Vec& xs, std::optional<Rat>& tmin, std::vector<std::size_t>& arg) {
        Vec w(n);
        for (std::size_t j = 0; j < n; ++j) w[j] = xs[j] - z[j];
        for (std::size_t j = 0; j < m; ++j) {
            if (drop[j]) continue;
            Rat aw = dot(sp.ineqs[j].a, w);
            if (aw <= 0) continue;
            Rat t = (sp.ineqs[j].rhs - dot(sp.ineqs[j].a, z)) / aw;
            if (!tmin || t < *tmin) {
                tmin = t;
                arg.assign(1, j);
            } else if (t == *tmin) {
                arg.push_back(j);
            }
        }
    };
    for (std::size_t i = 0; i < m; ++i) {
        if (in_s[i]) continue;
        for (;;) {
            if (float_cert(i)) {
                drop[i] = 1;
                break;
            }
            if (n <= 8 && dual_implied(i)) {
                drop[i] = 1;
                break;
            }
            Polyhedron s(n);
            s.eqs = sp.eqs;
            for (auto j : s_list) s.ineqs.push_back(sp.ineqs[j]);
            const Rat& rhs = sp.ineqs[i].rhs;
            // Probably necessary. Try a float maximizer first: the exact ray
            // shoot toward it usually grows S without any exact LP. A stale
            // or sloppy maximizer at worst shoots at rows already in S, in
            // which case the exact solver below takes over.
            {
                FloatLp fl = float_poly_max(s, sp.ineqs[i].a);
                bool usable = fl.status <= 1;
                if (usable)
                    for (double v : fl.x)
                        if (!std::isfinite(v)) usable = false;
                if (usable && fl.status == 1)
                    for (double v : fl.ray)
                        if (!std::isfinite(v)) usable = false;
                if (usable) {
                    Vec xs(n);
                    for (std::size_t j = 0; j < n; ++j) xs[j] = Rat(fl.x[j]);
                    if (fl.status == 1) {
                        Rat have = dot(sp.ineqs[i].a, xs);
                        if (have <= rhs) {
                            Vec rd(n);
                            for (std::size_t j = 0; j < n; ++j) rd[j] = Rat(fl.ray[j]);
                            Rat gain = dot(sp.ineqs[i].a, rd);
                            if (gain > 0) {
                                Rat t = (rhs + 1 - have) / gain;
                                for (std::size_t j = 0; j < n; ++j) xs[j] += t * rd[j];
                            }
                        }
                    }
                    std::optional<Rat> tmin;
                    std::vector<std::size_t> arg;
                    shoot(xs, tmin, arg);
                    bool fresh = false;
                    for (auto j : arg)
                        if (!in_s[j]) fresh = true;
                    if (tmin && fresh) {
                        bool self = false;
                        for (auto j : arg) {
                            add_s(j);
                            if (j == i) self = true;
                        }
                        if (self) break;
                        continue;
                    }
                }
            }
            // Exact authority: redundancy verdict and guaranteed progress.
            LpResult r = lp_max(s, sp.ineqs[i].a);
            if (r.status == LpStatus::Optimal && r.value <= rhs) {
                drop[i] = 1;
                break;
            }
            Vec xs = r.point;
            if (r.status == LpStatus::Unbounded) {
                Rat have = dot(sp.ineqs[i].a, xs);
                if (have <= rhs) {
                    Rat gain = dot(sp.ineqs[i].a, r.ray);
                    Rat t = (rhs + 1 - have) / gain;
                    for (std::size_t j = 0; j < n; ++j) xs[j] += t * r.ray[j];
                }
            }
            std::optional<Rat> tmin;
            std::vector<std::size_t> arg;
            shoot(xs, tmin, arg);
            if (!tmin) {
                add_s(i);  // unreachable: row i itself blocks the segment
                break;
            }
            bool self = false;
            for (auto j : arg) {
                add_s(j);
                if (j == i) self = true;
            }
            if (self) break;
        }
    }
    if (dbg) {
        std::size_t ns = 0, nd = 0;
        for (std::size_t i = 0; i < m; ++i) {
            ns += in_s[i];
            nd += drop[i] != 0;
        }
        std::fprintf(stderr, "clarkson done |S|=%zu dropped=%zu\n", ns, nd);
    }
    return true;
}

// Certificate-only mass prune: row i is redundant when its normal is a
// nonnegative combination of the other surviving rows (plus free multipliers
// on the equalities) with combined rhs <= rhs_i. A double simplex proposes
// the combination and the proposed basis is re-verified exactly before the
// row is dropped. Unlike Clarkson this needs no interior point, so it also
// covers cone-shaped systems (every rhs zero) where the interior LP comes up
// empty. Misses are fine; survivors just stay in the system.
void cert_mass_prune(const Polyhedron& sp, std::vector<char>& drop) {
    std::size_t n = sp.dim, m = sp.ineqs.size(), me = sp.eqs.size();
    std::size_t nv = m + 2 * me;
    std::vector<std::vector<double>> fa(n, std::vector<double>(nv, 0.0));
    std::vector<double> fc(nv, 0.0);
    for (std::size_t col = 0; col < m; ++col) {
        const LinRow& r0 = sp.ineqs[col];
        for (std::size_t row = 0; row < n; ++row) fa[row][col] = r0.a[row].get_d();
        fc[col] = r0.rhs.get_d();
    }
    for (std::size_t k = 0; k < me; ++k) {
        const LinRow& r0 = sp.eqs[k];
        std::size_t col = m + 2 * k;
        for (std::size_t row = 0; row < n; ++row) {
            double v = r0.a[row].get_d();
            fa[row][col] = v;
            fa[row][col + 1] = -v;
        }
        fc[col] = r0.rhs.get_d();
        fc[col + 1] = -r0.rhs.get_d();
    }
    std::vector<char> allowed(nv, 1);
    std::vector<double> bf(n);
    for (std::size_t i = 0; i < m; ++i) {
        allowed[i] = 0;  // a row may not certify itself
        for (std::size_t row = 0; row < n; ++row) bf[row] = sp.ineqs[i].a[row].get_d();
        auto bas = float_standard_basis(fa, bf, fc, &allowed);
        allowed[i] = 1;
        if (bas.empty()) continue;
        std::vector<std::size_t> cols;
        for (auto c0 : bas)
            if (c0 < nv) cols.push_back(c0);
        if (cols.empty()) continue;
        Mat ae(n, cols.size());
        Vec ce(cols.size(), Rat(0));
        bool ok = true;
        for (std::size_t t2 = 0; t2 < cols.size() && ok; ++t2) {
            std::size_t c0 = cols[t2];
            if (c0 < m) {
                if (c0 == i || drop[c0]) { ok = false; break; }
                const LinRow& r0 = sp.ineqs[c0];
                for (std::size_t row = 0; row < n; ++row) ae(row, t2) = r0.a[row];
                ce[t2] = r0.rhs;
            } else {
                std::size_t k = (c0 - m) / 2;
                Rat sgn((c0 - m) % 2 == 0 ? 1 : -1);
                const LinRow& r0 = sp.eqs[k];
                for (std::size_t row = 0; row < n; ++row) ae(row, t2) = sgn * r0.a[row];
                ce[t2] = sgn * r0.rhs;
            }
        }
        if (!ok) continue;
        auto lam = solve(ae, sp.ineqs[i].a);
        if (!lam) continue;
        Rat val = 0;
        for (std::size_t t2 = 0; t2 < cols.size() && ok; ++t2) {
            if ((*lam)[t2] < 0) ok = false;
            else val += (*lam)[t2] * ce[t2];
        }
        if (ok && val <= sp.ineqs[i].rhs) {
            drop[i] = 1;
            allowed[i] = 0;  // dropped rows cannot certify later candidates
        }
    }
}

// LP-based exact redundancy removal; `anc` (optional) is erased in lockstep.
void prune_redundant_impl(Polyhedron& p, std::vector<Mask>* anc) {
    dominance_prune(p.ineqs, anc);
    if (p.ineqs.size() <= 1) return;
    // The LP tests only see the columns some row actually uses; everything
    // else is dead weight for the simplex.
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < p.dim; ++j) {
        bool used = false;
        for (const auto& r : p.ineqs)
            if (r.a[j] != 0) { used = true; break; }
        if (!used)
            for (const auto& r : p.eqs)
                if (r.a[j] != 0) { used = true; break; }
        if (used) support.push_back(j);
    }
    auto shrink = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(support.size());
        for (std::size_t j = 0; j < support.size(); ++j) s.a[j] = r.a[support[j]];
        s.rhs = r.rhs;
        return s;
    };
    Polyhedron small(support.size());
    for (const auto& r : p.ineqs) small.ineqs.push_back(shrink(r));
    for (const auto& r : p.eqs) small.eqs.push_back(shrink(r));
    if (small.ineqs.size() > 60) {
        std::vector<char> drop(small.ineqs.size(), 0);
        if (clarkson_drop(small, drop)) {
            std::size_t out = 0;
            for (std::size_t i = 0; i < drop.size(); ++i) {
                if (drop[i]) continue;
                if (out != i) {
                    p.ineqs[out] = std::move(p.ineqs[i]);
                    if (anc) (*anc)[out] = std::move((*anc)[i]);
                }
                ++out;
            }
            p.ineqs.resize(out);
            if (anc) anc->resize(out);
            return;
        }
    }
    for (std::size_t i = 0; i < small.ineqs.size();) {
        LinRow row = small.ineqs[i];
        Polyhedron rest = small;
        rest.ineqs.erase(rest.ineqs.begin() + static_cast<long>(i));
        LpResult r = lp_max(rest, row.a);
        bool redundant = r.status == LpStatus::Infeasible ||
                         (r.status == LpStatus::Optimal && r.value <= row.rhs);
        if (redundant) {
            small.ineqs.erase(small.ineqs.begin() + static_cast<long>(i));
            p.ineqs.erase(p.ineqs.begin() + static_cast<long>(i));
            if (anc) anc->erase(anc->begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
}

}  // namespace

void prune_redundant(Polyhedron& p) { prune_redundant_impl(p, nullptr); }

FmTrace fm_eliminate_traced(const Polyhedron& p, std::vector<std::size_t> coords,
                            std::size_t stall_rows) {
    for (auto c : coords)
        if (c >= p.dim) throw std::invalid_argument("fm_eliminate: coordinate out of range");
    FmTrace tr;
    Polyhedron cur = p;
    std::vector<std::size_t> remaining = std::move(coords);
    std::sort(remaining.begin(), remaining.end());
    remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());
    // Singleton ancestry for every starting row; Kohler's bound grows by one
    // per eliminated variable.
    std::size_t words = (p.ineqs.size() + p.eqs.size() + 63) / 64;
    std::vector<Mask> anc(p.ineqs.size(), Mask(words, 0));
    std::vector<Mask> anc_eq(p.eqs.size(), Mask(words, 0));
    for (std::size_t i = 0; i < anc.size(); ++i) mask_set(anc[i], i);
    for (std::size_t i = 0; i < anc_eq.size(); ++i) mask_set(anc_eq[i], anc.size() + i);
    std::size_t eliminated = 0;
    bool cur_pruned = false;  // nothing changed since the last LP prune of cur
    while (!remaining.empty()) {
        std::size_t k = pick_next(cur, remaining);
        remaining.erase(std::find(remaining.begin(), remaining.end(), k));
        tr.order.push_back(k);
        tr.snapshots.push_back(cur);
        ++eliminated;
        // Ancestry pruning alone usually keeps steps small; when one still
        // blows past the soft cap, roll it back, LP-prune, and retry under
        // the hard cap.
        std::vector<Mask> anc_save = anc, anc_eq_save = anc_eq;
        bool stalled = false;
        if (!fm_step(cur, k, anc, anc_eq, eliminated + 1, 4000)) {
            cur = tr.snapshots.back();
            anc = std::move(anc_save);
            anc_eq = std::move(anc_eq_save);
            stalled = cur.ineqs.size() > stall_rows;
            if (!stalled) {
                if (!cur_pruned) prune_redundant_impl(cur, &anc);
                if (!fm_step(cur, k, anc, anc_eq, eliminated + 1, fm_row_cap()))
                    throw FmRowCapExceeded("Fourier-Motzkin row cap exceeded at " +
                                           std::to_string(fm_row_cap()) +
                                           " rows (STOCHDP_FM_ROW_CAP)");
            }
        }
        if (stalled) {
            // This step was rolled back; report it with the rest.
            tr.order.pop_back();
            tr.snapshots.pop_back();
            remaining.push_back(k);
            tr.uneliminated = std::move(remaining);
            break;
        }
        // Prune while the system is still moderate; letting rows compound
        // for several steps breeds huge coefficients that make every later
        // LP test far more expensive than pruning early. Only worthwhile in
        // low dimension — the LP tests degrade badly as columns pile up.
        cur_pruned = false;
        if (cur.ineqs.size() > 400) {
            std::size_t used = 0;
            std::vector<char> seen(cur.dim, 0);
            for (const auto& r : cur.ineqs)
                for (std::size_t j = 0; j < cur.dim; ++j)
                    if (r.a[j] != 0 && !seen[j]) { seen[j] = 1; ++used; }
            if (used <= 8) {
                prune_redundant_impl(cur, &anc);
                cur_pruned = true;
            }
        }
        if (std::getenv("STOCHDP_FM_DEBUG"))
            std::fprintf(stderr, "fm: elim %zu -> rows=%zu eqs=%zu\n", k, cur.ineqs.size(), cur.eqs.size());
        if (cur.ineqs.size() > stall_rows) {
            tr.uneliminated = std::move(remaining);
            break;
        }
    }
    if (tr.uneliminated.empty()) prune_redundant_impl(cur, &anc);
    tr.final = std::move(cur);
    return tr;
}

Polyhedron fm_eliminate_keep_dim(const Polyhedron& p, const std::vector<std::size_t>& coords) {
    return fm_eliminate_traced(p, coords).final;
}

Polyhedron fm_eliminate(const Polyhedron& p, std::vector<std::size_t> coords) {
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    Polyhedron full = fm_eliminate_keep_dim(p, coords);
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < p.dim; ++j)
        if (!std::binary_search(coords.begin(), coords.end(), j)) keep.push_back(j);
    Polyhedron out(keep.size());
    auto shrink = [&](const LinRow& r) {
        LinRow s;
        s.a.resize(keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j) s.a[j] = r.a[keep[j]];
        s.rhs = r.rhs;
        return s;
    };
    for (const auto& r : full.ineqs) out.ineqs.push_back(shrink(r));
    for (const auto& r : full.eqs) out.eqs.push_back(shrink(r));
    return out;
}

bool is_empty(const Polyhedron& p) {
    Vec zero(p.dim, Rat(0));
    return lp_solve(p, zero).status == LpStatus::Infeasible;
}

bool poly_contains(const Polyhedron& q, const Polyhedron& p) {
    if (p.dim != q.dim) throw std::invalid_argument("poly_contains: dimension mismatch");
    if (is_empty(p)) return true;
    auto implied_le = [&](const Vec& a, const Rat& rhs) {
        LpResult r = lp_max(p, a);
        if (r.status == LpStatus::Unbounded) return false;
        return r.status == LpStatus::Infeasible || r.value <= rhs;
    };
    for (const auto& row : q.ineqs)
        if (!implied_le(row.a, row.rhs)) return false;
    for (const auto& row : q.eqs) {
        Vec neg(row.a.size());
        for (std::size_t j = 0; j < neg.size(); ++j) neg[j] = -row.a[j];
        if (!implied_le(row.a, row.rhs) || !implied_le(neg, -row.rhs)) return false;
    }
    return true;
}

}  // namespace stochdp
