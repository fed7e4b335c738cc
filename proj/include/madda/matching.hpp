#pragma once

#include <map>
#include <utility>
#include <vector>

#include "madda/types.hpp"

namespace madda {

// Weight assigned to padding edges when the graph is balanced for the
// matching step. Real edge weights are nonnegative, so padded pairs never
// beat a real edge.
inline constexpr double kVirtualEdgeWeight = -1.0;

struct WeightedBipartiteGraph {
    std::vector<int> left;   // user ids
    std::vector<int> right;  // provider ids
    // (left id, right id) -> weight; map keys double as the duplicate check
    std::map<std::pair<int, int>, double> edges;

    void add_edge(int m, int n, double weight);
    bool has_edge(int m, int n) const;
};

struct PerfectMatching {
    std::vector<std::pair<int, int>> pairs;  // (user id, provider id)
    double total_weight = 0.0;

    bool contains(int m, int n) const;
};

// Termination state of the label-adjusting matcher, kept for the duality
// certificate: labels must be feasible on every padded edge and tight on
// every matched one.
struct KmResult {
    PerfectMatching matching;
    int padded_size = 0;
    std::vector<double> left_labels;      // size padded_size
    std::vector<double> right_labels;     // size padded_size
    std::vector<int> padded_assignment;   // left index -> right index
    std::vector<std::vector<double>> padded_weights;
};

// All five admission conjuncts: resource dominance, distance, reputation.
bool eligible(const VehicularUser& u, const ServiceProvider& p, double rep, double dist);

// w1*(coverage - dist) + w2*rep + R.O
double edge_weight(const VehicularUser& u, const ServiceProvider& p, double rep,
                   double dist, double coverage);

WeightedBipartiteGraph build_graph(const Scenario& s,
                                   const std::map<int, double>& reputations);

KmResult km_match(const WeightedBipartiteGraph& g);

// Exhaustive oracle over injections, padding mirrored as weight -1 edges.
// Capped at min side size 8; implemented independently of km_match.
PerfectMatching brute_force_match(const WeightedBipartiteGraph& g);

std::string matching_to_dot(const WeightedBipartiteGraph& g, const PerfectMatching& m);

}  // namespace madda
