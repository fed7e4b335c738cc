#include "madda/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace madda {

namespace {

struct Search {
    const std::vector<int>* small;  // ids on the smaller side
    const std::vector<int>* big;
    bool left_is_small = true;
    const WeightedBipartiteGraph* g = nullptr;

    double best_objective;  // real weight + pair count (padding objective)
    double best_weight;
    std::vector<std::pair<int, int>> best_pairs;
    std::vector<char> used;
    std::vector<std::pair<int, int>> current;
    double current_weight = 0.0;

    double weight(int s, int b) const {
        int m = left_is_small ? s : b;
        int n = left_is_small ? b : s;
        auto it = g->edges.find({m, n});
        return it == g->edges.end() ? std::numeric_limits<double>::quiet_NaN()
                                    : it->second;
    }

    void visit(std::size_t idx) {
        if (idx == small->size()) {
            double obj = current_weight + static_cast<double>(current.size());
            if (obj > best_objective) {
                best_objective = obj;
                best_weight = current_weight;
                best_pairs = current;
            }
            return;
        }
        int s = (*small)[idx];
        // Leave this vertex to a padding edge.
        visit(idx + 1);
        for (std::size_t j = 0; j < big->size(); ++j) {
            if (used[j]) continue;
            double wt = weight(s, (*big)[j]);
            if (std::isnan(wt)) continue;
            used[j] = 1;
            current.emplace_back(left_is_small ? s : (*big)[j],
                                 left_is_small ? (*big)[j] : s);
            current_weight += wt;
            visit(idx + 1);
            current_weight -= wt;
            current.pop_back();
            used[j] = 0;
        }
    }
};

}  // namespace

PerfectMatching brute_force_match(const WeightedBipartiteGraph& g) {
    std::size_t min_side = std::min(g.left.size(), g.right.size());
    if (min_side > 8)
        throw std::invalid_argument("brute_force_match: smaller side exceeds 8 vertices");

    Search s;
    s.left_is_small = g.left.size() <= g.right.size();
    s.small = s.left_is_small ? &g.left : &g.right;
    s.big = s.left_is_small ? &g.right : &g.left;
    s.g = &g;
    s.best_objective = -std::numeric_limits<double>::infinity();
    s.best_weight = 0.0;
    s.used.assign(s.big->size(), 0);
    s.visit(0);

    PerfectMatching out;
    out.pairs = s.best_pairs;
    out.total_weight = s.best_weight;
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

}  // namespace madda
