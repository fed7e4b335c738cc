#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace madda {

// Number of resource types: computation, communication, storage.
inline constexpr int kNumResources = 3;

struct ResourceVector {
    double computation = 0.0;
    double communication = 0.0;
    double storage = 0.0;

    double operator[](int k) const {
        switch (k) {
            case 0: return computation;
            case 1: return communication;
            default: return storage;
        }
    }
    double& operator[](int k) {
        switch (k) {
            case 0: return computation;
            case 1: return communication;
            default: return storage;
        }
    }
    // Componentwise dominance: every component of this covers r.
    bool dominates(const ResourceVector& r) const {
        return computation >= r.computation && communication >= r.communication &&
               storage >= r.storage;
    }
    double dot(const ResourceVector& r) const {
        return computation * r.computation + communication * r.communication +
               storage * r.storage;
    }
};

struct Position {
    double x = 0.0;  // km
    double y = 0.0;  // km
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct VehicularUser {
    int id = 0;
    ResourceVector required;
    Position attached_position;        // RSU the user is currently attached to
    double max_distance = 1.0;         // km, q_m1
    double min_reputation = 0.0;       // q_m2, in [0,1]
    // (distance weight, reputation weight) for the edge-weight attribute terms
    std::array<double, 2> attribute_weights{0.0, 0.0};
    std::array<double, kNumResources> resource_weights{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double requested_bandwidth = 1.0;
    double latency_sensitivity = 0.3;
};

struct ServiceProvider {
    int id = 0;
    ResourceVector owned;
    Position position;
    double cpu_frequency = 1.0;
    double capacitance = 0.001;
    double spectrum_efficiency = 0.1;
    double bandwidth = 1.0;
    double storage_capacity = 1.0;
    double storage_unit_cost = 0.6;
};

struct ChannelParams {
    double tx_power = 500.0;          // W
    double unit_channel_gain = 1.0;   // no value given upstream; configurable
    double path_loss_exponent = 3.0;
    double noise_power = 1e-9;        // W/Hz
    double max_latency = 0.15;        // s
    double rsu_coverage = 1.0;        // km
};

// Affine maps taking raw private values into the clock price range,
// applied uniformly per side. Within-side ordering is preserved.
struct Calibration {
    double buyer_lo = 1.0;
    double buyer_hi = 80.0;
    double seller_lo = 1.2;
    double seller_hi = 100.0;
};

struct MarketParams {
    double price_min = 1.0;
    double price_max = 100.0;
    double price_factor = 0.5;  // alpha in the clearing-price average
    double comm_penalty = 0.01; // zeta, broadcast cost per participant
    Calibration calibration;
};

struct Scenario {
    std::vector<VehicularUser> users;
    std::vector<ServiceProvider> providers;
    ChannelParams channel;
    MarketParams market;
    std::uint64_t seed = 0;
};

}  // namespace madda
