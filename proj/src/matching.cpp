#include "madda/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace madda {

void WeightedBipartiteGraph::add_edge(int m, int n, double weight) {
    auto [it, inserted] = edges.emplace(std::make_pair(m, n), weight);
    if (!inserted)
        throw std::invalid_argument("add_edge: duplicate edge (" + std::to_string(m) +
                                    "," + std::to_string(n) + ")");
}

bool WeightedBipartiteGraph::has_edge(int m, int n) const {
    return edges.count({m, n}) != 0;
}

bool PerfectMatching::contains(int m, int n) const {
    return std::find(pairs.begin(), pairs.end(), std::make_pair(m, n)) != pairs.end();
}

bool eligible(const VehicularUser& u, const ServiceProvider& p, double rep, double dist) {
    return p.owned.computation >= u.required.computation &&
           p.owned.communication >= u.required.communication &&
           p.owned.storage >= u.required.storage && dist <= u.max_distance &&
           rep >= u.min_reputation;
}

double edge_weight(const VehicularUser& u, const ServiceProvider& p, double rep,
                   double dist, double coverage) {
    return u.attribute_weights[0] * (coverage - dist) + u.attribute_weights[1] * rep +
           u.required.dot(p.owned);
}

WeightedBipartiteGraph build_graph(const Scenario& s,
                                   const std::map<int, double>& reputations) {
    WeightedBipartiteGraph g;
    for (const auto& u : s.users) g.left.push_back(u.id);
    for (const auto& p : s.providers) g.right.push_back(p.id);
    for (const auto& u : s.users) {
        for (const auto& p : s.providers) {
            auto it = reputations.find(p.id);
            double rep = it == reputations.end() ? 0.0 : it->second;
            double dist = distance(u.attached_position, p.position);
            if (eligible(u, p, rep, dist))
                g.add_edge(u.id, p.id, edge_weight(u, p, rep, dist, s.channel.rsu_coverage));
        }
    }
    return g;
}

KmResult km_match(const WeightedBipartiteGraph& g) {
    const int nl = static_cast<int>(g.left.size());
    const int nr = static_cast<int>(g.right.size());
    const int n = std::max(nl, nr);

    KmResult res;
    res.padded_size = n;
    if (n == 0) return res;

    // Balanced complete graph: missing and padding edges get weight -1.
    auto& w = res.padded_weights;
    w.assign(n, std::vector<double>(n, kVirtualEdgeWeight));
    for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nr; ++j) {
            auto it = g.edges.find({g.left[i], g.right[j]});
            if (it != g.edges.end()) w[i][j] = it->second;
        }

    auto& lx = res.left_labels;
    auto& ly = res.right_labels;
    lx.assign(n, -std::numeric_limits<double>::infinity());
    ly.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lx[i] = std::max(lx[i], w[i][j]);

    std::vector<int> match_l(n, -1), match_r(n, -1);
    std::vector<double> slack(n);
    std::vector<int> slack_arg(n), parent_r(n);
    std::vector<char> in_tree_l(n), in_tree_r(n);

    for (int root = 0; root < n; ++root) {
        std::fill(in_tree_l.begin(), in_tree_l.end(), 0);
        std::fill(in_tree_r.begin(), in_tree_r.end(), 0);
        std::fill(parent_r.begin(), parent_r.end(), -1);
        in_tree_l[root] = 1;
        for (int j = 0; j < n; ++j) {
            slack[j] = lx[root] + ly[j] - w[root][j];
            slack_arg[j] = root;
        }
        for (;;) {
            // Next equality-subgraph edge out of the tree, or the minimum
            // label adjustment if none is reachable.
            double delta = std::numeric_limits<double>::infinity();
            int jmin = -1;
            for (int j = 0; j < n; ++j)
                if (!in_tree_r[j] && slack[j] < delta) {
                    delta = slack[j];
                    jmin = j;
                }
            if (delta > 0.0) {
                for (int i = 0; i < n; ++i)
                    if (in_tree_l[i]) lx[i] -= delta;
                for (int j = 0; j < n; ++j) {
                    if (in_tree_r[j])
                        ly[j] += delta;
                    else
                        slack[j] -= delta;
                }
            }
            in_tree_r[jmin] = 1;
            parent_r[jmin] = slack_arg[jmin];
            if (match_r[jmin] == -1) {
                // Augment along the alternating path ending at jmin.
                int j = jmin;
                while (j != -1) {
                    int i = parent_r[j];
                    int next_j = match_l[i];
                    match_l[i] = j;
                    match_r[j] = i;
                    j = next_j;
                }
                break;
            }
            int i = match_r[jmin];
            in_tree_l[i] = 1;
            for (int j = 0; j < n; ++j) {
                if (in_tree_r[j]) continue;
                double s = lx[i] + ly[j] - w[i][j];
                if (s < slack[j]) {
                    slack[j] = s;
                    slack_arg[j] = i;
                }
            }
        }
    }

    res.padded_assignment = match_l;
    for (int i = 0; i < nl; ++i) {
        int j = match_l[i];
        if (j < nr && g.has_edge(g.left[i], g.right[j])) {
            res.matching.pairs.emplace_back(g.left[i], g.right[j]);
            res.matching.total_weight += g.edges.at({g.left[i], g.right[j]});
        }
    }
    std::sort(res.matching.pairs.begin(), res.matching.pairs.end());
    return res;
}

std::string matching_to_dot(const WeightedBipartiteGraph& g, const PerfectMatching& m) {
    std::ostringstream out;
    out << "graph madda {\n  rankdir=LR;\n";
    for (int id : g.left) out << "  u" << id << " [shape=circle];\n";
    for (int id : g.right) out << "  p" << id << " [shape=box];\n";
    for (const auto& [key, wt] : g.edges) {
        bool matched = m.contains(key.first, key.second);
        out << "  u" << key.first << " -- p" << key.second << " [label=\"" << wt
            << "\"" << (matched ? ", penwidth=3, color=red" : "") << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace madda
