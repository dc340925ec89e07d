#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "qmedia/error.hpp"

namespace qmedia {

//! A permutation of 0..degree-1, stored as its image array.
using Perm = std::vector<int>;

inline Perm identity_perm(int degree) {
    Perm p(static_cast<size_t>(degree));
    std::iota(p.begin(), p.end(), 0);
    return p;
}

//! (a*b)(x) = a(b(x)): composition matching left actions.
inline Perm compose(const Perm& a, const Perm& b) {
    Perm r(b.size());
    for (size_t x = 0; x < b.size(); ++x) r[x] = a[static_cast<size_t>(b[x])];
    return r;
}

inline Perm invert(const Perm& a) {
    Perm r(a.size());
    for (size_t x = 0; x < a.size(); ++x) r[static_cast<size_t>(a[x])] = static_cast<int>(x);
    return r;
}

inline bool is_bijection(const Perm& p) {
    std::vector<char> seen(p.size(), 0);
    for (int v : p) {
        if (v < 0 || static_cast<size_t>(v) >= p.size() || seen[static_cast<size_t>(v)]) return false;
        seen[static_cast<size_t>(v)] = 1;
    }
    return true;
}

//! Finite group given by its multiplication table.
struct FiniteGroup {
    std::string name;
    int order = 1;
    std::vector<int> table{0};  //!< row-major, table[a*order+b] = a*b
    int identity = 0;
    std::vector<int> inverse{0};
    bool associativity_sampled = false;

    int mul(int a, int b) const { return table[static_cast<size_t>(a * order + b)]; }
    int inv(int a) const { return inverse[static_cast<size_t>(a)]; }
    bool is_identity(int a) const { return a == identity; }

    int element_order(int a) const {
        int k = 1;
        for (int x = a; x != identity; x = mul(x, a)) ++k;
        return k;
    }

    std::vector<std::vector<int>> rows() const {
        std::vector<std::vector<int>> r(static_cast<size_t>(order));
        for (int a = 0; a < order; ++a)
            r[static_cast<size_t>(a)].assign(table.begin() + a * order, table.begin() + (a + 1) * order);
        return r;
    }
};

namespace detail {

inline constexpr int kExhaustiveAssociativityLimit = 512;
inline constexpr int kSampledAssociativityTriples = 100000;

inline bool row_is_perm(const std::vector<int>& t, int n, int row) {
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int b = 0; b < n; ++b) {
        int v = t[static_cast<size_t>(row * n + b)];
        if (seen[static_cast<size_t>(v)]) return false;
        seen[static_cast<size_t>(v)] = 1;
    }
    return true;
}

inline bool col_is_perm(const std::vector<int>& t, int n, int col) {
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int a = 0; a < n; ++a) {
        int v = t[static_cast<size_t>(a * n + col)];
        if (seen[static_cast<size_t>(v)]) return false;
        seen[static_cast<size_t>(v)] = 1;
    }
    return true;
}

} // namespace detail

//! Validates a multiplication table and returns the group it defines.
//! Throws Error("NotAGroup") with a witness describing the first violation.
inline FiniteGroup make_group(const std::vector<std::vector<int>>& rows,
                              std::optional<int> identity_hint = std::nullopt,
                              std::string name = "", std::uint64_t seed = 0x5eed) {
    const int n = static_cast<int>(rows.size());
    if (n == 0) fail("NotAGroup", "empty table", {{"reason", "empty"}});
    FiniteGroup g;
    g.name = std::move(name);
    g.order = n;
    g.table.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0);
    for (int a = 0; a < n; ++a) {
        const auto& row = rows[static_cast<size_t>(a)];
        if (static_cast<int>(row.size()) != n)
            fail("NotAGroup", "table is not square", {{"reason", "not square"}, {"row", a}});
        for (int b = 0; b < n; ++b) {
            int v = row[static_cast<size_t>(b)];
            if (v < 0 || v >= n)
                fail("NotAGroup", "entry out of range", {{"reason", "out of range"}, {"row", a}, {"col", b}});
            g.table[static_cast<size_t>(a * n + b)] = v;
        }
    }
    for (int a = 0; a < n; ++a) {
        if (!detail::row_is_perm(g.table, n, a))
            fail("NotAGroup", "row " + std::to_string(a) + " is not a permutation", {{"reason", "not Latin"}, {"row", a}});
        if (!detail::col_is_perm(g.table, n, a))
            fail("NotAGroup", "column " + std::to_string(a) + " is not a permutation", {{"reason", "not Latin"}, {"col", a}});
    }
    auto is_two_sided_identity = [&](int e) {
        for (int x = 0; x < n; ++x)
            if (g.mul(e, x) != x || g.mul(x, e) != x) return false;
        return true;
    };
    int e = -1;
    if (identity_hint && *identity_hint >= 0 && *identity_hint < n && is_two_sided_identity(*identity_hint)) {
        e = *identity_hint;
    } else {
        for (int c = 0; c < n && e < 0; ++c)
            if (is_two_sided_identity(c)) e = c;
    }
    if (e < 0) fail("NotAGroup", "no identity element", {{"reason", "no identity"}});
    g.identity = e;
    g.inverse.assign(static_cast<size_t>(n), -1);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (g.mul(x, y) == e) g.inverse[static_cast<size_t>(x)] = y;

    auto check = [&](int a, int b, int c) {
        if (g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)))
            fail("NotAGroup", "non-associative triple", {{"reason", "non-associative"}, {"triple", {a, b, c}}});
    };
    if (n <= detail::kExhaustiveAssociativityLimit) {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c) check(a, b, c);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int t = 0; t < detail::kSampledAssociativityTriples; ++t) check(pick(rng), pick(rng), pick(rng));
        g.associativity_sampled = true;
    }
    return g;
}

inline FiniteGroup cyclic_group(int n) {
    std::vector<std::vector<int>> rows(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n)));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) rows[static_cast<size_t>(a)][static_cast<size_t>(b)] = (a + b) % n;
    return make_group(rows, 0, "Z" + std::to_string(n));
}

inline FiniteGroup trivial_group() { return cyclic_group(1); }

//! Relabels so that the identity is element 0 (swapping it with the old 0).
inline FiniteGroup canonical(const FiniteGroup& g) {
    if (g.identity == 0) return g;
    std::vector<int> relabel = identity_perm(g.order);
    std::swap(relabel[0], relabel[static_cast<size_t>(g.identity)]);
    std::vector<std::vector<int>> rows(static_cast<size_t>(g.order), std::vector<int>(static_cast<size_t>(g.order)));
    for (int a = 0; a < g.order; ++a)
        for (int b = 0; b < g.order; ++b)
            rows[static_cast<size_t>(relabel[static_cast<size_t>(a)])][static_cast<size_t>(relabel[static_cast<size_t>(b)])] =
                relabel[static_cast<size_t>(g.mul(a, b))];
    return make_group(rows, 0, g.name);
}

inline bool same_group(const FiniteGroup& a, const FiniteGroup& b) {
    return a.order == b.order && canonical(a).table == canonical(b).table;
}

//! G ⊕ K with (g,k) encoded as g*|K| + k.
inline FiniteGroup direct_sum(const FiniteGroup& G, const FiniteGroup& K) {
    const int n = G.order * K.order;
    std::vector<std::vector<int>> rows(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n)));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            int g = G.mul(a / K.order, b / K.order);
            int k = K.mul(a % K.order, b % K.order);
            rows[static_cast<size_t>(a)][static_cast<size_t>(b)] = g * K.order + k;
        }
    std::string name = G.name.empty() && K.name.empty() ? "" : G.name + "+" + K.name;
    return make_group(rows, G.identity * K.order + K.identity, name);
}

struct PermutationImage {
    FiniteGroup group;
    std::vector<Perm> elements;    //!< element index -> permutation; 0 is the identity
    std::vector<int> image_of;     //!< input index -> element index
    int degree = 0;

    int find(const Perm& p) const {
        for (size_t i = 0; i < elements.size(); ++i)
            if (elements[i] == p) return static_cast<int>(i);
        return -1;
    }
};

inline constexpr std::size_t kDefaultClosureBudget = 1000000;

//! Closure of a set of permutations under composition.
inline PermutationImage permutation_image(const std::vector<Perm>& gens, int degree = -1,
                                          std::size_t budget = kDefaultClosureBudget) {
    if (degree < 0) degree = gens.empty() ? 1 : static_cast<int>(gens.front().size());
    for (const auto& p : gens)
        if (static_cast<int>(p.size()) != degree || !is_bijection(p))
            fail("InvalidInput", "permutations must be bijections of one common degree");

    PermutationImage out;
    out.degree = degree;
    std::map<Perm, int> index;
    auto add = [&](const Perm& p) {
        auto [it, fresh] = index.emplace(p, static_cast<int>(out.elements.size()));
        if (fresh) {
            if (out.elements.size() >= budget)
                fail("ClosureBudgetExceeded", "permutation closure exceeds budget", {{"budget", budget}});
            out.elements.push_back(p);
        }
        return it->second;
    };
    add(identity_perm(degree));
    for (size_t i = 0; i < out.elements.size(); ++i)
        for (const auto& s : gens) add(compose(out.elements[i], s));
    for (const auto& s : gens) out.image_of.push_back(index.at(s));

    const int n = static_cast<int>(out.elements.size());
    std::vector<std::vector<int>> rows(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(n)));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            rows[static_cast<size_t>(a)][static_cast<size_t>(b)] =
                index.at(compose(out.elements[static_cast<size_t>(a)], out.elements[static_cast<size_t>(b)]));
    out.group = make_group(rows, 0);
    return out;
}

struct SubgroupClosure {
    std::vector<int> elements;  //!< sorted
    int index = 1;
};

inline SubgroupClosure subgroup_closure(const FiniteGroup& G, const std::vector<int>& gens) {
    std::vector<char> in(static_cast<size_t>(G.order), 0);
    std::vector<int> queue{G.identity};
    in[static_cast<size_t>(G.identity)] = 1;
    for (size_t i = 0; i < queue.size(); ++i)
        for (int s : gens) {
            int y = G.mul(queue[i], s);
            if (!in[static_cast<size_t>(y)]) {
                in[static_cast<size_t>(y)] = 1;
                queue.push_back(y);
            }
        }
    SubgroupClosure out;
    out.elements = queue;
    std::sort(out.elements.begin(), out.elements.end());
    out.index = G.order / static_cast<int>(out.elements.size());
    return out;
}

struct FreeActionReport {
    bool free = true;
    int orbits = 0;
    std::vector<int> orbit_of;  //!< point -> orbit id, ordered by least point
    json witness = nullptr;     //!< (element, fixed point) when not free
};

//! `assignment[g]` is the permutation of 0..points-1 by which element g acts.
inline FreeActionReport is_free_action(const FiniteGroup& G, const std::vector<Perm>& assignment, int points) {
    if (static_cast<int>(assignment.size()) != G.order)
        fail("InvalidInput", "assignment must list one permutation per element");
    for (const auto& p : assignment)
        if (static_cast<int>(p.size()) != points || !is_bijection(p))
            fail("InvalidInput", "assignment entries must be permutations of the points");
    for (int a = 0; a < G.order; ++a)
        for (int b = 0; b < G.order; ++b)
            if (assignment[static_cast<size_t>(G.mul(a, b))] !=
                compose(assignment[static_cast<size_t>(a)], assignment[static_cast<size_t>(b)]))
                fail("NotAHomomorphism", "assignment does not respect multiplication", {{"pair", {a, b}}});

    FreeActionReport r;
    for (int a = 0; a < G.order && r.free; ++a) {
        if (a == G.identity) continue;
        for (int x = 0; x < points; ++x)
            if (assignment[static_cast<size_t>(a)][static_cast<size_t>(x)] == x) {
                r.free = false;
                r.witness = {{"element", a}, {"point", x}};
                break;
            }
    }
    r.orbit_of.assign(static_cast<size_t>(points), -1);
    for (int x = 0; x < points; ++x) {
        if (r.orbit_of[static_cast<size_t>(x)] >= 0) continue;
        for (const auto& p : assignment) r.orbit_of[static_cast<size_t>(p[static_cast<size_t>(x)])] = r.orbits;
        ++r.orbits;
    }
    return r;
}

inline json to_json(const FiniteGroup& g) {
    return {{"name", g.name}, {"order", g.order}, {"table", g.rows()}};
}

//! Accepts {"name","order","table"} or the shorthand {"cyclic": n}.
inline FiniteGroup group_from_json(const json& j) {
    if (!j.is_object()) fail("InvalidInput", "group must be a JSON object");
    if (j.contains("cyclic")) {
        int n = j.at("cyclic").get<int>();
        if (n < 1) fail("InvalidInput", "cyclic order must be positive");
        auto g = cyclic_group(n);
        if (j.contains("name")) g.name = j.at("name").get<std::string>();
        return g;
    }
    if (!j.contains("table")) fail("InvalidInput", "group object needs a table");
    auto rows = j.at("table").get<std::vector<std::vector<int>>>();
    if (j.contains("order") && j.at("order").get<int>() != static_cast<int>(rows.size()))
        fail("NotAGroup", "declared order does not match table", {{"reason", "order mismatch"}});
    return make_group(rows, std::nullopt, j.value("name", std::string{}));
}

} // namespace qmedia
