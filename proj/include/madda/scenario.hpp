#pragma once

#include <string>
#include <vector>

#include "madda/types.hpp"

namespace madda {

// Closed sampling ranges. Defaults follow the market settings described
// in the README (resources 40..80, distance tolerance 0.8..1.0 km,
// reputation requirement 0.6..0.8).
struct SamplingConfig {
    double resource_low = 40.0;
    double resource_high = 80.0;
    double max_distance_low = 0.8;
    double max_distance_high = 1.0;
    double min_reputation_low = 0.6;
    double min_reputation_high = 0.8;
    // Providers are placed uniformly in a square of this side length
    // centered on the origin; users attach to a uniformly chosen provider.
    double map_side = 2.0;
};

std::vector<std::string> validate_sampling(const SamplingConfig& cfg);

Scenario generate_scenario(int n_users, int n_providers, const SamplingConfig& cfg,
                           std::uint64_t seed);

// Returns all invariant violations found; empty means valid.
std::vector<std::string> validate_scenario(const Scenario& s);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

// Stable per-cell seed derivation for sweeps and episode harnesses.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace madda
