#include "madda/scenario.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace madda {

using nlohmann::json;

std::vector<std::string> validate_sampling(const SamplingConfig& cfg) {
    std::vector<std::string> v;
    auto range = [&](double lo, double hi, const char* name) {
        if (!(lo <= hi)) v.push_back(std::string(name) + ": inverted range");
    };
    range(cfg.resource_low, cfg.resource_high, "resource");
    range(cfg.max_distance_low, cfg.max_distance_high, "max_distance");
    range(cfg.min_reputation_low, cfg.min_reputation_high, "min_reputation");
    if (cfg.resource_low < 0) v.push_back("resource: negative lower bound");
    if (cfg.max_distance_low <= 0) v.push_back("max_distance: must be positive");
    if (cfg.min_reputation_low < 0 || cfg.min_reputation_high > 1)
        v.push_back("min_reputation: outside [0,1]");
    if (cfg.map_side <= 0) v.push_back("map_side: must be positive");
    return v;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    // splitmix64 over base xor salt
    std::uint64_t z = base ^ (salt + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Scenario generate_scenario(int n_users, int n_providers, const SamplingConfig& cfg,
                           std::uint64_t seed) {
    if (n_users <= 0 || n_providers <= 0)
        throw std::invalid_argument("generate_scenario: counts must be positive");
    auto bad = validate_sampling(cfg);
    if (!bad.empty())
        throw std::invalid_argument("generate_scenario: " + bad.front());

    Scenario s;
    s.seed = seed;
    std::mt19937_64 rng(seed);
    const double half = cfg.map_side / 2.0;

    s.providers.resize(n_providers);
    for (int n = 0; n < n_providers; ++n) {
        auto& p = s.providers[n];
        p.id = n;
        p.owned.computation = uniform(rng, cfg.resource_low, cfg.resource_high);
        p.owned.communication = uniform(rng, cfg.resource_low, cfg.resource_high);
        p.owned.storage = uniform(rng, cfg.resource_low, cfg.resource_high);
        p.position = {uniform(rng, -half, half), uniform(rng, -half, half)};
        // The seller's physical parameters track its owned resources: the
        // CPU frequency is the CPU count, bandwidth and storage capacity
        // are the owned communication and storage amounts.
        p.cpu_frequency = p.owned.computation;
        p.bandwidth = p.owned.communication;
        p.storage_capacity = p.owned.storage;
        p.capacitance = 0.001;
        p.spectrum_efficiency = 0.1;
        p.storage_unit_cost = 0.6;
    }

    s.users.resize(n_users);
    for (int m = 0; m < n_users; ++m) {
        auto& u = s.users[m];
        u.id = m;
        u.required.computation = uniform(rng, cfg.resource_low, cfg.resource_high);
        u.required.communication = uniform(rng, cfg.resource_low, cfg.resource_high);
        u.required.storage = uniform(rng, cfg.resource_low, cfg.resource_high);
        u.max_distance = uniform(rng, cfg.max_distance_low, cfg.max_distance_high);
        u.min_reputation = uniform(rng, cfg.min_reputation_low, cfg.min_reputation_high);
        u.attribute_weights = {uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
        double draws[kNumResources];
        double sum = 0.0;
        for (double& d : draws) {
            d = uniform(rng, 0.01, 1.0);
            sum += d;
        }
        for (int k = 0; k < kNumResources; ++k) u.resource_weights[k] = draws[k] / sum;
        std::size_t attach =
            std::uniform_int_distribution<std::size_t>(0, s.providers.size() - 1)(rng);
        u.attached_position = s.providers[attach].position;
        u.requested_bandwidth = u.required.communication;
        u.latency_sensitivity = 0.3;
    }
    return s;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> v;
    auto nonneg = [&](double x, const std::string& what) {
        if (!(x >= 0.0) || !std::isfinite(x)) v.push_back(what + ": must be nonnegative and finite");
    };
    auto positive = [&](double x, const std::string& what) {
        if (!(x > 0.0) || !std::isfinite(x)) v.push_back(what + ": must be positive and finite");
    };

    for (const auto& u : s.users) {
        const std::string tag = "user " + std::to_string(u.id);
        nonneg(u.required.computation, tag + " required.computation");
        nonneg(u.required.communication, tag + " required.communication");
        nonneg(u.required.storage, tag + " required.storage");
        if (!std::isfinite(u.attached_position.x) || !std::isfinite(u.attached_position.y))
            v.push_back(tag + " attached_position: not finite");
        positive(u.max_distance, tag + " max_distance");
        if (!(u.min_reputation >= 0.0 && u.min_reputation <= 1.0))
            v.push_back(tag + " min_reputation: outside [0,1]");
        for (double w : u.attribute_weights)
            if (!(w >= 0.0)) v.push_back(tag + " attribute_weights: negative");
        double sum = 0.0;
        for (double w : u.resource_weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-9)
            v.push_back(tag + " resource_weights: do not sum to 1");
        positive(u.requested_bandwidth, tag + " requested_bandwidth");
        positive(u.latency_sensitivity, tag + " latency_sensitivity");
    }
    for (const auto& p : s.providers) {
        const std::string tag = "provider " + std::to_string(p.id);
        nonneg(p.owned.computation, tag + " owned.computation");
        nonneg(p.owned.communication, tag + " owned.communication");
        nonneg(p.owned.storage, tag + " owned.storage");
        positive(p.cpu_frequency, tag + " cpu_frequency");
        positive(p.capacitance, tag + " capacitance");
        positive(p.spectrum_efficiency, tag + " spectrum_efficiency");
        positive(p.bandwidth, tag + " bandwidth");
        positive(p.storage_capacity, tag + " storage_capacity");
        positive(p.storage_unit_cost, tag + " storage_unit_cost");
    }
    positive(s.channel.tx_power, "channel.tx_power");
    positive(s.channel.unit_channel_gain, "channel.unit_channel_gain");
    positive(s.channel.path_loss_exponent, "channel.path_loss_exponent");
    positive(s.channel.noise_power, "channel.noise_power");
    positive(s.channel.max_latency, "channel.max_latency");
    positive(s.channel.rsu_coverage, "channel.rsu_coverage");
    if (!(s.market.price_min < s.market.price_max))
        v.push_back("market: price_min must be below price_max");
    if (!(s.market.price_factor >= 0.0 && s.market.price_factor <= 1.0))
        v.push_back("market: price_factor outside [0,1]");
    if (!(s.market.comm_penalty >= 0.0))
        v.push_back("market: comm_penalty must be nonnegative");
    const auto& c = s.market.calibration;
    if (c.buyer_lo < s.market.price_min || c.buyer_hi > s.market.price_max ||
        c.seller_lo < s.market.price_min || c.seller_hi > s.market.price_max)
        v.push_back("market.calibration: targets outside [price_min, price_max]");
    return v;
}

namespace {

json to_json(const ResourceVector& r) {
    return {{"computation", r.computation},
            {"communication", r.communication},
            {"storage", r.storage}};
}
ResourceVector resource_from(const json& j) {
    return {j.at("computation").get<double>(), j.at("communication").get<double>(),
            j.at("storage").get<double>()};
}
json to_json(const Position& p) { return {{"x", p.x}, {"y", p.y}}; }
Position position_from(const json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>()};
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json users = json::array();
    for (const auto& u : s.users) {
        users.push_back({{"id", u.id},
                         {"required", to_json(u.required)},
                         {"attached_position", to_json(u.attached_position)},
                         {"max_distance", u.max_distance},
                         {"min_reputation", u.min_reputation},
                         {"attribute_weights", u.attribute_weights},
                         {"resource_weights", u.resource_weights},
                         {"requested_bandwidth", u.requested_bandwidth},
                         {"latency_sensitivity", u.latency_sensitivity}});
    }
    json providers = json::array();
    for (const auto& p : s.providers) {
        providers.push_back({{"id", p.id},
                             {"owned", to_json(p.owned)},
                             {"position", to_json(p.position)},
                             {"cpu_frequency", p.cpu_frequency},
                             {"capacitance", p.capacitance},
                             {"spectrum_efficiency", p.spectrum_efficiency},
                             {"bandwidth", p.bandwidth},
                             {"storage_capacity", p.storage_capacity},
                             {"storage_unit_cost", p.storage_unit_cost}});
    }
    json channel = {{"tx_power", s.channel.tx_power},
                    {"unit_channel_gain", s.channel.unit_channel_gain},
                    {"path_loss_exponent", s.channel.path_loss_exponent},
                    {"noise_power", s.channel.noise_power},
                    {"max_latency", s.channel.max_latency},
                    {"rsu_coverage", s.channel.rsu_coverage}};
    json market = {{"price_min", s.market.price_min},
                   {"price_max", s.market.price_max},
                   {"price_factor", s.market.price_factor},
                   {"comm_penalty", s.market.comm_penalty},
                   {"calibration",
                    {{"buyer_lo", s.market.calibration.buyer_lo},
                     {"buyer_hi", s.market.calibration.buyer_hi},
                     {"seller_lo", s.market.calibration.seller_lo},
                     {"seller_hi", s.market.calibration.seller_hi}}}};
    json doc = {{"users", users},
                {"providers", providers},
                {"channel", channel},
                {"market", market},
                {"seed", s.seed}};
    return doc.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json doc = json::parse(text);
    Scenario s;
    s.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& j : doc.at("users")) {
        VehicularUser u;
        u.id = j.at("id").get<int>();
        u.required = resource_from(j.at("required"));
        u.attached_position = position_from(j.at("attached_position"));
        u.max_distance = j.at("max_distance").get<double>();
        u.min_reputation = j.at("min_reputation").get<double>();
        u.attribute_weights = j.at("attribute_weights").get<std::array<double, 2>>();
        u.resource_weights =
            j.at("resource_weights").get<std::array<double, kNumResources>>();
        u.requested_bandwidth = j.at("requested_bandwidth").get<double>();
        u.latency_sensitivity = j.at("latency_sensitivity").get<double>();
        s.users.push_back(u);
    }
    for (const auto& j : doc.at("providers")) {
        ServiceProvider p;
        p.id = j.at("id").get<int>();
        p.owned = resource_from(j.at("owned"));
        p.position = position_from(j.at("position"));
        p.cpu_frequency = j.at("cpu_frequency").get<double>();
        p.capacitance = j.at("capacitance").get<double>();
        p.spectrum_efficiency = j.at("spectrum_efficiency").get<double>();
        p.bandwidth = j.at("bandwidth").get<double>();
        p.storage_capacity = j.at("storage_capacity").get<double>();
        p.storage_unit_cost = j.at("storage_unit_cost").get<double>();
        s.providers.push_back(p);
    }
    const auto& c = doc.at("channel");
    s.channel.tx_power = c.at("tx_power").get<double>();
    s.channel.unit_channel_gain = c.at("unit_channel_gain").get<double>();
    s.channel.path_loss_exponent = c.at("path_loss_exponent").get<double>();
    s.channel.noise_power = c.at("noise_power").get<double>();
    s.channel.max_latency = c.at("max_latency").get<double>();
    s.channel.rsu_coverage = c.at("rsu_coverage").get<double>();
    const auto& m = doc.at("market");
    s.market.price_min = m.at("price_min").get<double>();
    s.market.price_max = m.at("price_max").get<double>();
    s.market.price_factor = m.at("price_factor").get<double>();
    s.market.comm_penalty = m.at("comm_penalty").get<double>();
    const auto& cal = m.at("calibration");
    s.market.calibration.buyer_lo = cal.at("buyer_lo").get<double>();
    s.market.calibration.buyer_hi = cal.at("buyer_hi").get<double>();
    s.market.calibration.seller_lo = cal.at("seller_lo").get<double>();
    s.market.calibration.seller_hi = cal.at("seller_hi").get<double>();
    return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << scenario_to_json(s) << '\n';
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

}  // namespace madda
