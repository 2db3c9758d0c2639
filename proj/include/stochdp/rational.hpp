#pragma once

#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochdp {

// Exact arbitrary-precision rational. mpq_class keeps values canonical
// (gcd 1, positive denominator) after canonicalize().
using Rat = mpq_class;

using Vec = std::vector<Rat>;

inline Rat rat(long num, long den = 1) {
    if (den == 0) throw std::invalid_argument("rat: zero denominator");
    Rat q(num, den);
    q.canonicalize();
    return q;
}

// Parses the wire grammar -?[0-9]+(/[1-9][0-9]*)?
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("parse_rat: empty string");
    std::size_t pos = 0;
    if (s[0] == '-') pos = 1;
    if (pos >= s.size()) throw std::invalid_argument("parse_rat: '" + s + "'");
    std::size_t slash = s.find('/');
    auto digits = [](const std::string& t) {
        if (t.empty()) return false;
        for (char ch : t)
            if (ch < '0' || ch > '9') return false;
        return true;
    };
    if (slash == std::string::npos) {
        if (!digits(s.substr(pos))) throw std::invalid_argument("parse_rat: '" + s + "'");
        Rat q(s);
        q.canonicalize();
        return q;
    }
    std::string num = s.substr(pos, slash - pos);
    std::string den = s.substr(slash + 1);
    if (!digits(num) || !digits(den) || den[0] == '0')
        throw std::invalid_argument("parse_rat: '" + s + "'");
    Rat q(s);
    if (q.get_den() == 0) throw std::invalid_argument("parse_rat: zero denominator");
    q.canonicalize();
    return q;
}

inline std::string rat_str(const Rat& q) { return q.get_str(); }

// Decimal rendering for human readers; annotation only, never parsed back.
inline std::string rat_decimal(const Rat& q, int digits = 12) {
    mpf_class f(q, 256);
    mp_exp_t exp;
    std::string m = f.get_str(exp, 10, digits);
    bool neg = !m.empty() && m[0] == '-';
    if (neg) m = m.substr(1);
    if (m.empty()) return "0";
    std::string out;
    if (exp <= 0) {
        out = "0." + std::string(static_cast<std::size_t>(-exp), '0') + m;
    } else if (static_cast<std::size_t>(exp) >= m.size()) {
        out = m + std::string(static_cast<std::size_t>(exp) - m.size(), '0');
    } else {
        out = m.substr(0, static_cast<std::size_t>(exp)) + "." + m.substr(static_cast<std::size_t>(exp));
    }
    return neg ? "-" + out : out;
}

inline Rat dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    Rat s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool is_zero_vec(const Vec& v) {
    for (const auto& x : v)
        if (x != 0) return false;
    return true;
}

}  // namespace stochdp
