#include "stochdp/quad.hpp"

#include <stdexcept>
#include <string>

namespace stochdp {

namespace {

Mat mat_tr(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Mat mat_mul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("mat_mul: shape mismatch");
    Mat c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            if (a(i, k) == 0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += a(i, k) * b(k, j);
        }
    return c;
}

Mat mat_add(Mat a, const Mat& b, const Rat& s) {
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
    return a;
}

Vec mat_vec(const Mat& a, const Vec& x) {
    Vec y(a.rows, Rat(0));
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) y[i] += a(i, j) * x[j];
    return y;
}

Mat block(const Mat& a, std::size_t r0, std::size_t c0, std::size_t rn, std::size_t cn) {
    Mat b(rn, cn);
    for (std::size_t i = 0; i < rn; ++i)
        for (std::size_t j = 0; j < cn; ++j) b(i, j) = a(r0 + i, c0 + j);
    return b;
}

// g(y) = q(xhat, y) as a quadratic in the trailing block.
QuadFunc fix_leading(const QuadFunc& q, const Vec& xhat) {
    std::size_t nx = xhat.size(), ny = q.n - nx;
    Mat A = block(q.Q, 0, 0, nx, nx);
    Mat B = block(q.Q, 0, nx, nx, ny);
    Mat C = block(q.Q, nx, nx, ny, ny);
    Vec bx(q.b.begin(), q.b.begin() + static_cast<long>(nx));
    Vec by(q.b.begin() + static_cast<long>(nx), q.b.end());
    Vec lin = mat_vec(mat_tr(B), xhat);
    for (std::size_t j = 0; j < ny; ++j) lin[j] = 2 * lin[j] + by[j];
    Rat cst = q.c + dot(xhat, mat_vec(A, xhat)) + dot(bx, xhat);
    QuadFunc g;
    g.n = ny;
    g.Q = std::move(C);
    g.b = std::move(lin);
    g.c = std::move(cst);
    return g;
}

}  // namespace

Rat QuadFunc::operator()(const Vec& x) const {
    if (x.size() != n) throw std::invalid_argument("QuadFunc: argument dimension");
    return dot(x, mat_vec(Q, x)) + dot(b, x) + c;
}

QuadFunc quad_make(Mat Q, Vec b, Rat c) {
    if (Q.rows != Q.cols || Q.rows != b.size())
        throw std::invalid_argument("quad_make: shape mismatch");
    for (std::size_t i = 0; i < Q.rows; ++i)
        for (std::size_t j = i + 1; j < Q.cols; ++j)
            if (Q(i, j) != Q(j, i)) throw std::invalid_argument("quad_make: Q not symmetric");
    if (!is_psd(Q)) throw std::invalid_argument("quad_make: Q not positive semidefinite");
    QuadFunc q;
    q.n = b.size();
    q.Q = std::move(Q);
    q.b = std::move(b);
    q.c = std::move(c);
    return q;
}

QuadMinResult quad_partial_min(const QuadFunc& q, std::size_t trailing) {
    if (trailing > q.n) throw std::invalid_argument("quad_partial_min: block too large");
    QuadMinResult out;
    if (trailing == 0) {
        out.reduced = q;
        return out;
    }
    std::size_t nx = q.n - trailing, ny = trailing;
    Mat A = block(q.Q, 0, 0, nx, nx);
    Mat B = block(q.Q, 0, nx, nx, ny);
    Mat C = block(q.Q, nx, nx, ny, ny);
    Vec bx(q.b.begin(), q.b.begin() + static_cast<long>(nx));
    Vec by(q.b.begin() + static_cast<long>(nx), q.b.end());

    out.null_basis = null_space(C);
    for (const auto& nb : out.null_basis) {
        Rat s = dot(by, nb);
        if (s != 0) {
            // descend along +-nb: value is affine there
            Vec ray(q.n, Rat(0));
            for (std::size_t j = 0; j < ny; ++j) ray[nx + j] = s > 0 ? -nb[j] : nb[j];
            throw UnboundedBelow(std::move(ray));
        }
    }

    // y*(x) = -(M x + v) with C M = B', C v = by/2 (min-norm solves)
    Mat M(ny, nx);
    for (std::size_t j = 0; j < nx; ++j) {
        Vec col(ny);
        for (std::size_t i = 0; i < ny; ++i) col[i] = B(j, i);
        auto sol = solve_min_norm(C, col);
        if (!sol) throw std::logic_error("quad_partial_min: PSD block inconsistency");
        for (std::size_t i = 0; i < ny; ++i) M(i, j) = (*sol)[i];
    }
    Vec half = by;
    for (auto& x : half) x /= 2;
    auto vsol = solve_min_norm(C, half);
    if (!vsol) throw std::logic_error("quad_partial_min: PSD block inconsistency");
    const Vec& v = *vsol;

    Mat Mt = mat_tr(M);
    Mat BM = mat_mul(B, M);
    Mat Qn = mat_add(mat_add(A, mat_mul(Mt, mat_mul(C, M)), Rat(1)),
                     mat_add(BM, mat_tr(BM), Rat(1)), Rat(-1));
    Vec Cv = mat_vec(C, v);
    Vec bn = bx;
    {
        Vec t1 = mat_vec(Mt, Cv);
        Vec t2 = mat_vec(B, v);
        Vec t3 = mat_vec(Mt, by);
        for (std::size_t j = 0; j < nx; ++j) bn[j] += 2 * t1[j] - 2 * t2[j] - t3[j];
    }
    Rat cn = q.c + dot(v, Cv) - dot(by, v);
    out.reduced = quad_make(std::move(Qn), std::move(bn), std::move(cn));
    return out;
}

std::map<NodeId, QuadFunc> quad_cond_exp(const ScenarioTree& tree, std::size_t stage,
                                         const std::map<NodeId, QuadFunc>& child_funcs) {
    std::map<NodeId, QuadFunc> out;
    for (NodeId u : tree.stage_nodes(stage)) {
        const auto& kids = tree.node(u).children;
        if (kids.empty()) throw std::invalid_argument("quad_cond_exp: node has no children");
        QuadFunc acc;
        bool have = false;
        for (NodeId c : kids) {
            const QuadFunc& f = child_funcs.at(c);
            const Rat& p = tree.node(c).cond_prob;
            if (!have) {
                acc = f;
                for (auto& x : acc.Q.data) x *= p;
                for (auto& x : acc.b) x *= p;
                acc.c *= p;
                have = true;
            } else {
                if (f.n != acc.n) throw std::invalid_argument("quad_cond_exp: dimension mismatch");
                acc.Q = mat_add(acc.Q, f.Q, p);
                for (std::size_t j = 0; j < acc.n; ++j) acc.b[j] += p * f.b[j];
                acc.c += p * f.c;
            }
        }
        out.emplace(u, std::move(acc));
    }
    return out;
}

QuadGlobalMin quad_minimize(const QuadFunc& q) {
    for (const auto& nb : null_space(q.Q)) {
        Rat s = dot(q.b, nb);
        if (s != 0) {
            Vec ray(q.n);
            for (std::size_t j = 0; j < q.n; ++j) ray[j] = s > 0 ? -nb[j] : nb[j];
            throw UnboundedBelow(std::move(ray));
        }
    }
    Vec half = q.b;
    for (auto& x : half) x = -x / 2;
    auto sol = solve_min_norm(q.Q, half);
    if (!sol) throw std::logic_error("quad_minimize: inconsistent stationarity system");
    QuadGlobalMin out;
    out.minimizer = std::move(*sol);
    out.value = q(out.minimizer);
    return out;
}

VarianceHedgeResult variance_hedge_solve(const HedgeProblem& hp) {
    const ScenarioTree& tree = hp.tree;
    std::size_t T = tree.horizon();
    if (T == 0) throw std::invalid_argument("variance_hedge_solve: need at least one period");
    std::size_t d = hp.d;
    // variables: x_0 = (V_0, z_0) then z_1..z_{T-1}; trading stops before T
    auto dim_of = [&](std::size_t t) {
        return t == 0 ? d + 1 : (t < T ? d : std::size_t{0});
    };
    auto prefix = [&](std::size_t t) {
        std::size_t n = 0;
        for (std::size_t s = 0; s <= t; ++s) n += dim_of(s);
        return n;
    };
    std::size_t n = prefix(T);

    std::vector<std::map<NodeId, QuadFunc>> h(T + 1);
    for (NodeId l : tree.leaves()) {
        auto p = tree.path(l);
        Vec a(n, Rat(0));
        a[0] = 1;  // V_0
        for (std::size_t t = 0; t < T; ++t) {
            const Vec& s0 = hp.prices.at(p[t]);
            const Vec& s1 = hp.prices.at(p[t + 1]);
            std::size_t off = t == 0 ? 1 : prefix(t - 1);
            for (std::size_t j = 0; j < d; ++j) a[off + j] = s1[j] - s0[j];
        }
        const Rat& u = hp.claim.at(l);
        Mat Q(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) Q(i, j) = a[i] * a[j];
        Vec b(n);
        for (std::size_t j = 0; j < n; ++j) b[j] = -2 * u * a[j];
        h[T].emplace(l, quad_make(std::move(Q), std::move(b), u * u));
    }

    VarianceHedgeResult out;
    for (std::size_t t = T; t >= 1; --t) {
        std::map<NodeId, QuadFunc> pre;
        for (NodeId v : tree.stage_nodes(t)) {
            QuadMinResult m = quad_partial_min(h[t].at(v), dim_of(t));
            out.null_bases.emplace(v, std::move(m.null_basis));
            pre.emplace(v, std::move(m.reduced));
        }
        h[t - 1] = quad_cond_exp(tree, t - 1, pre);
    }

    NodeId root = tree.root();
    out.null_bases.emplace(root, null_space(h[0].at(root).Q));
    QuadGlobalMin gm = quad_minimize(h[0].at(root));
    out.value = gm.value;
    out.v0 = gm.minimizer[0];
    out.z.values[root] = Vec(gm.minimizer.begin() + 1, gm.minimizer.end());

    for (std::size_t t = 1; t < T; ++t)
        for (NodeId v : tree.stage_nodes(t)) {
            Vec up;
            for (NodeId a : tree.path(v)) {
                if (a == v) break;
                if (tree.node(a).stage == 0) {
                    const Vec& z0 = out.z.at(a);
                    up.push_back(out.v0);
                    up.insert(up.end(), z0.begin(), z0.end());
                } else {
                    const Vec& zt = out.z.at(a);
                    up.insert(up.end(), zt.begin(), zt.end());
                }
            }
            QuadGlobalMin m = quad_minimize(fix_leading(h[t].at(v), up));
            out.z.values[v] = std::move(m.minimizer);
        }
    return out;
}

}  // namespace stochdp
