// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

#include "qmedia/embed.hpp"
#include "qmedia/ragg.hpp"

using namespace qmedia;

namespace {

// Pinned limits.
constexpr double kAxiomSeconds = 60.0;
constexpr double kPsiSeconds = 120.0;
constexpr int kAxiomRadius = 4;
constexpr int kGatedRadius = 6;
constexpr int kWordLength = 4;
constexpr std::size_t kClosureCap = 10000;
constexpr long kMinIsometryPairs = 1000;
constexpr int kMaxPsiBallVertices = 10000;
constexpr int kRWordBound = 4;

json load(const std::string& rel) {
    std::ifstream in(std::string(QMEDIA_FIXTURES) + "/" + rel);
    if (!in) fail("InvalidInput", "missing fixture " + rel);
    return json::parse(in);
}

GPPresentation presentation(const std::string& name) { return presentation_from_json(load("presentations/" + name + ".json")); }

const std::vector<std::string> kPresentations{"p4_z2", "free_z2_z3", "c4_mixed", "p3_z3",
                                              "paw",   "empty3_z2",  "triangle_z3", "z3_single"};
const std::vector<std::string> kSpecs{"a_rtimes.json", "a_box_b.json", "a_box_a.json", "hnn_double_cover.json",
                                      "g_dot_h.json",  "z3_twist.json"};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Brute-force closure under cancel, amalgamate and shuffle; returns the least shortest word.
Word closure_canonical(const GPPresentation& p, const Word& w, std::size_t& size) {
    std::set<Word> seen{w};
    std::vector<Word> stack{w};
    auto push = [&](Word y) {
        if (seen.insert(y).second) stack.push_back(std::move(y));
    };
    while (!stack.empty()) {
        Word x = stack.back();
        stack.pop_back();
        for (size_t i = 0; i + 1 < x.size(); ++i) {
            if (x[i].vertex == x[i + 1].vertex) {
                Word y = x;
                int c = p.group(x[i].vertex).mul(x[i].element, x[i + 1].element);
                y.erase(y.begin() + static_cast<long>(i), y.begin() + static_cast<long>(i) + 2);
                if (!p.group(x[i].vertex).is_identity(c)) y.insert(y.begin() + static_cast<long>(i), Syllable{x[i].vertex, c});
                push(y);
            } else if (p.adjacent(x[i].vertex, x[i + 1].vertex)) {
                Word y = x;
                std::swap(y[i], y[i + 1]);
                push(y);
            }
        }
        if (seen.size() > kClosureCap) fail("BudgetExceeded", "closure too large");
    }
    size = seen.size();
    Word best = w;
    for (const auto& x : seen)
        if (x.size() < best.size() || (x.size() == best.size() && x < best)) best = x;
    return best;
}

struct Line {
    int id;
    bool ok;
    std::string detail;
};

std::vector<Line> lines;
using V = std::pair<bool, std::string>;

void run(int id, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [ok, detail] = body();
        lines.push_back({id, ok, detail});
    } catch (const std::exception& e) {
        lines.push_back({id, false, std::string("exception: ") + e.what()});
    }
    const auto& l = lines.back();
    std::printf("criterion %d: %s  %s\n", l.id, l.ok ? "PASS" : "FAIL", l.detail.c_str());
    std::fflush(stdout);
}

} // namespace

int main() {
    run(1, [] {
        auto t0 = std::chrono::steady_clock::now();
        int configs = 0;
        for (const auto& name : kPresentations) {
            auto p = presentation(name);
            for (int r = 0; r <= kAxiomRadius; ++r) {
                auto rep = check_quasi_median(cayley_ball(p, r));
                if (!rep.passed()) return V{false, name + " r=" + std::to_string(r) + " " + rep.to_json().dump()};
                ++configs;
            }
        }
        auto k32 = check_quasi_median(graph_from_json(load("graphs/k32.json")));
        if (k32.no_k32 || !k32.witnesses.contains("k32")) return V{false, "K3,2 not detected"};
        if (k32.witnesses["k32"].size() != 5) return V{false, "K3,2 witness is not 5 vertices"};
        auto c6 = check_quasi_median(graph_from_json(load("graphs/c6.json")));
        if (c6.quadrangle && c6.triangle) return V{false, "C6 not rejected"};
        if (c6.quadrangle) return V{false, "C6 rejected for the wrong reason"};
        double s = seconds_since(t0);
        return V{s < kAxiomSeconds, std::to_string(configs) + " balls pass, K3,2 and C6 rejected, " +
                                                 std::to_string(s).substr(0, 5) + " s (limit 60)"};
    });

    run(2, [] {
        long words = 0, mismatches = 0;
        std::size_t largest = 0;
        for (const auto& name : {"p4_z2", "triangle_z3"}) {
            auto p = presentation(name);
            std::vector<Syllable> syl;
            for (int u = 0; u < p.size(); ++u)
                for (int a = 0; a < p.group(u).order; ++a)
                    if (!p.group(u).is_identity(a)) syl.push_back({u, a});
            std::vector<Word> layer{{}};
            for (int n = 0; n <= kWordLength; ++n) {
                for (const auto& w : layer) {
                    std::size_t size = 0;
                    if (reduce(p, w) != closure_canonical(p, w, size)) ++mismatches;
                    largest = std::max(largest, size);
                    ++words;
                }
                std::vector<Word> next;
                for (const auto& w : layer)
                    for (const auto& s : syl) {
                        Word y = w;
                        y.push_back(s);
                        next.push_back(std::move(y));
                    }
                layer = std::move(next);
            }
        }
        return V{mismatches == 0, std::to_string(words) + " words, " + std::to_string(mismatches) +
                                              " mismatches, largest closure " + std::to_string(largest)};
    });

    run(3, [] {
        long checked = 0, bad = 0, pairs = 0;
        std::vector<QMGraph> balls;
        for (const auto& name : kPresentations) balls.push_back(cayley_ball(presentation(name), kGatedRadius));
        for (const auto& f : kSpecs) balls.push_back(frak_x_ball(load_valid_ragg(load(f)), 0, 3));
        for (const auto& g : balls) {
            auto hs = hyperplanes(g);
            for (const auto& J : hs.list) {
                if (!J.window_exact) continue;
                ++checked;
                if (!is_gated(g, J.carrier).gated) ++bad;
                for (const auto& S : J.sectors)
                    if (!is_gated(g, S).gated) ++bad;
            }
            std::map<int, std::vector<std::vector<int>>> by;
            for (const auto& C : cliques(g))
                if (C.vertices.size() >= 2)
                    by[hs.of_edge[static_cast<size_t>(g.edge_id(C.vertices[0], C.vertices[1]))]].push_back(C.vertices);
            for (const auto& [j, list] : by)
                for (size_t a = 0; a < list.size(); ++a)
                    for (size_t b = a + 1; b < list.size(); ++b) {
                        ++pairs;
                        std::vector<int> common;
                        std::set_intersection(list[a].begin(), list[a].end(), list[b].begin(), list[b].end(),
                                              std::back_inserter(common));
                        if (!common.empty()) ++bad;
                    }
        }
        return V{bad == 0, std::to_string(checked) + " window-exact hyperplanes, " + std::to_string(pairs) +
                                       " dual clique pairs, " + std::to_string(bad) + " violations"};
    });

    run(4, [] {
        // Finite groups are covered exhaustively instead of by the pair floor.
        const std::map<std::string, int> radius{{"p4_z2", 6}, {"free_z2_z3", 8}, {"c4_mixed", 5}, {"p3_z3", 5},
                                                {"paw", 6},   {"empty3_z2", 7},  {"triangle_z3", 5}, {"z3_single", 3}};
        std::string detail;
        bool ok = true;
        for (const auto& [name, r] : radius) {
            auto p = presentation(name);
            auto g = cayley_ball(p, r);
            CayleyAction act(p, g, CayleyAction::all_syllables(p));
            auto E = build_embedding(act);
            auto R = verify_embedding(E);
            json w;
            bool same = recovers_presentation(E, p, &w);
            auto cert = g.certified_vertices();
            bool finite = cayley_ball(p, r + 1).n() == g.n() && static_cast<int>(cert.size()) == g.n();
            long all_pairs = static_cast<long>(cert.size()) * static_cast<long>(cert.size() - 1) / 2;
            bool enough = R.isometry_pairs >= kMinIsometryPairs || (finite && R.isometry_pairs == all_pairs);
            bool good = R.passed("isometry") && R.passed("image_gated") && R.all_passed() && same && enough;
            if (!good) {
                ok = false;
                detail += name + " failed " + (same ? R.to_json().dump() : w.dump()) + "; ";
            } else {
                detail += name + ":" + std::to_string(R.isometry_pairs) + (finite ? "(whole group) " : " ");
            }
        }
        return V{ok, "isometry pairs " + detail};
    });

    run(5, [] {
        std::string detail;
        bool ok = true;
        auto expect = [&](const std::string& f, std::array<bool, 4> want) {
            auto s = load_valid_ragg(load(f));
            auto c = check_conditions(s);
            std::array<bool, 4> got{c.distinct_factors, c.commuting_images, c.no_loops, c.trivial_holonomy};
            if (got != want) {
                ok = false;
                detail += f + " verdict mismatch; ";
            }
            auto walk_of = [&](const json& names) {
                std::vector<int> w;
                for (const auto& n : names) w.push_back(s.arrow_id(n.get<std::string>()));
                return w;
            };
            auto node = [&](const std::string& name) {
                auto slash = name.find('/');
                int v = s.vertex_id(name.substr(0, slash));
                return std::pair{v, s.product(v).vertex_id(name.substr(slash + 1))};
            };
            if (c.witnesses.contains("i")) {
                const auto& w = c.witnesses["i"];
                auto [v, F] = node(w["from"]);
                auto [tv, tF] = node(w["to"]);
                auto pm = path_morphism(s, walk_of(w["walk"]), v, F);
                if (pm.empty || pm.vertex != tv || pm.factor != tF || tF == F) {
                    ok = false;
                    detail += f + " (i) walk does not replay; ";
                }
            }
            if (c.witnesses.contains("ii")) {
                const auto& w = c.witnesses["ii"];
                auto [v1, F1] = node(w["commuting"][0]);
                auto [v2, F2] = node(w["commuting"][1]);
                auto p1 = path_morphism(s, walk_of(w["walks"][0]), v1, F1);
                auto p2 = path_morphism(s, walk_of(w["walks"][1]), v2, F2);
                if (p1.empty || p2.empty || p1.vertex != p2.vertex || s.product(p1.vertex).adjacent(p1.factor, p2.factor)) {
                    ok = false;
                    detail += f + " (ii) walks do not replay; ";
                }
            }
        };
        expect("a_rtimes.json", {false, true, false, true});
        expect("a_box_b.json", {true, true, true, true});
        expect("g_dot_h.json", {true, false, true, true});
        expect("hnn_double_cover.json", {true, true, true, true});
        return V{ok, ok ? std::string("A-semidirect fails (i),(iii); AxB passes; G.H fails; HNN cover passes; "
                                              "witness walks replay")
                                : detail};
    });

    run(6, [] {
        auto t0 = std::chrono::steady_clock::now();
        auto psi = build_psi(load_valid_ragg(load("a_box_b.json")));
        json pe = to_json(psi)["edges"];
        bool path = psi.size() == 4 && pe == json::parse(R"([["u/A","u/B"],["u/A","a|a_"],["u/B","b|b_"]])");
        for (int v = 0; v < psi.size(); ++v) path = path && psi.group(v).order == 2;
        auto s = load_valid_ragg(load("a_box_a.json"));
        auto g = frak_x_ball(s, 0, 3);
        RaggAction act(s, g, 0);
        auto E = build_embedding(act);
        auto R = verify_embedding(E);
        int t = g.find(gelem_key(parse_gelem(s, 0, ">e0 >e1")));
        auto phi = t >= 0 ? phi_map(E, t) : std::nullopt;
        std::string image = phi ? format_word(E.target, *phi) : "undefined";
        double secs = seconds_since(t0);
        bool ok = path && g.n() < kMaxPsiBallVertices && R.all_passed() && image == "e0|e0_:1 e1|e1_:1" && secs < kPsiSeconds;
        return V{ok, std::string("target ") + pe.dump() + ", ball " + std::to_string(g.n()) +
                                 " vertices, phi(t) = " + image + ", checks " + (R.all_passed() ? "all pass" : R.to_json().dump()) +
                                 ", " + std::to_string(secs).substr(0, 5) + " s (limit 120)"};
    });

    run(7, [] {
        int sheets = 0;
        auto pb = pullback_cover(load_valid_ragg(load("a_rtimes.json")), load("covers/a_rtimes_double_cover.json"), &sheets);
        bool same = to_json(pb) == to_json(load_valid_ragg(load("a_box_a.json")));
        return V{same && sheets == 2, std::string(same ? "pullback equals" : "pullback differs from") +
                                                  " the A-box-A spec, " + std::to_string(sheets) + " sheets"};
    });

    run(8, [] {
        std::string detail;
        bool ok = true;
        {
            auto z = presentation("z3_single");
            auto g = cayley_ball(z, 3);
            CayleyAction act(z, g, CayleyAction::all_syllables(z));
            auto rc = virtual_retract_certificate(act, {}, {g.basepoint}, kRWordBound);
            ok = ok && rc.passed();
            detail += "z3: peel failures " + std::to_string(rc.domain.peel_failures) + ", returns " +
                      std::to_string(rc.domain.returns_to_Y) + "; ";
        }
        {
            auto p = presentation("p4_z2");
            auto g = cayley_ball(p, 6);
            CayleyAction act(p, g, CayleyAction::all_syllables(p));
            // Y = the <a,b>-orbit of the basepoint inside the ball
            std::vector<int> Y;
            for (int v = 0; v < g.n(); ++v) {
                auto w = word_from_key(g.keys[static_cast<size_t>(v)]);
                if (parabolic_membership(w, {0, 1})) Y.push_back(v);
            }
            auto rc = virtual_retract_certificate(act, {word_key({{0, 1}}), word_key({{1, 1}})}, Y, kRWordBound);
            ok = ok && rc.passed();
            detail += "P4: |Y|=" + std::to_string(Y.size()) + ", peeled " + std::to_string(rc.domain.peeled) +
                      ", peel failures " + std::to_string(rc.domain.peel_failures) + ", R-words " +
                      std::to_string(rc.domain.words_checked) + ", returns " + std::to_string(rc.domain.returns_to_Y);
        }
        return V{ok, detail};
    });

    run(9, [] {
        auto s = load_valid_ragg(load("a_box_a.json"));
        auto g = frak_x_ball(s, 0, 3);
        RaggAction act(s, g, 0);
        EmbedOptions o;
        o.extra_k = 1;
        auto R = verify_embedding(build_embedding(act, o), o);
        bool iso = R.passed("isometry"), lc = R.passed("image_locally_convex"), gated = R.passed("image_gated");
        return V{iso && lc && !gated, std::string("isometry ") + (iso ? "PASS" : "FAIL") + ", local convexity " +
                                                  (lc ? "PASS" : "FAIL") + ", gatedness " + (gated ? "PASS" : "FAIL")};
    });

    bool all = true;
    for (const auto& l : lines) all = all && l.ok;
    return all ? 0 : 1;
}
