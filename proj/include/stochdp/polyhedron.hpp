#pragma once

#include "stochdp/rational.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stochdp {

// One linear row a . w <= rhs (or a . w = rhs when used as an equality).
struct LinRow {
    Vec a;
    Rat rhs;
};

// H-representation polyhedron {w : ineqs hold, eqs hold}.
struct Polyhedron {
    std::size_t dim = 0;
    std::vector<LinRow> ineqs;
    std::vector<LinRow> eqs;

    Polyhedron() = default;
    explicit Polyhedron(std::size_t d) : dim(d) {}

    void add_ineq(Vec a, Rat rhs) {
        if (a.size() != dim) throw std::invalid_argument("add_ineq: dimension mismatch");
        ineqs.push_back({std::move(a), std::move(rhs)});
    }
    void add_eq(Vec a, Rat rhs) {
        if (a.size() != dim) throw std::invalid_argument("add_eq: dimension mismatch");
        eqs.push_back({std::move(a), std::move(rhs)});
    }

    bool contains(const Vec& w) const;
    // All rhs set to zero: H-rep of the recession cone.
    Polyhedron homogenized() const;
};

struct FmRowCapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row cap for intermediate FM systems, overridable via STOCHDP_FM_ROW_CAP.
std::size_t fm_row_cap();

// Exact projection onto the coordinates not in `coords`. The result lives in
// the reduced dimension; remaining coordinates keep their relative order.
// Redundancy is pruned by pairwise dominance and exact-LP tests.
Polyhedron fm_eliminate(const Polyhedron& p, std::vector<std::size_t> coords);

// Like fm_eliminate but keeps the eliminated coordinates as zero columns so
// indices are stable (used when callers track absolute coordinates).
Polyhedron fm_eliminate_keep_dim(const Polyhedron& p, const std::vector<std::size_t>& coords);

// Snapshots of the system before each single-variable elimination, for
// back-substitution of a feasible point. order[i] is the absolute coordinate
// eliminated at step i; snapshots[i] is the system (full dimension, already
// eliminated coords zeroed) in which that coordinate still occurs.
struct FmTrace {
    std::vector<std::size_t> order;
    std::vector<Polyhedron> snapshots;
    Polyhedron final;  // full dimension, all eliminated coords zeroed out
    std::vector<std::size_t> uneliminated;  // coords left alone after a stall
};

// Eliminates `coords` one at a time. When an intermediate system still has
// more than `stall_rows` rows after exact pruning, the remaining coordinates
// are reported in `uneliminated` instead of ground through; callers that can
// finish the job another way pass a finite budget.
FmTrace fm_eliminate_traced(const Polyhedron& p, std::vector<std::size_t> coords,
                            std::size_t stall_rows = static_cast<std::size_t>(-1));

bool is_empty(const Polyhedron& p);

// P subseteq Q, decided by exact LP on each row of Q.
bool poly_contains(const Polyhedron& q, const Polyhedron& p);

inline bool poly_equal(const Polyhedron& p, const Polyhedron& q) {
    return poly_contains(q, p) && poly_contains(p, q);
}

// Drops rows implied by the others (exact LP test); keeps eqs as-is.
void prune_redundant(Polyhedron& p);

}  // namespace stochdp
