#include "madda/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace madda {

double seller_value(const ServiceProvider& p, const ValueWeights& w) {
    return w.w1 * p.capacitance * p.cpu_frequency * p.cpu_frequency +
           w.w2 * p.spectrum_efficiency * p.bandwidth +
           w.w3 * p.storage_capacity * p.storage_unit_cost;
}

double transmission_rate(double bandwidth, const ChannelParams& channel, double d) {
    if (!(bandwidth > 0.0))
        throw std::invalid_argument("transmission_rate: bandwidth must be positive");
    if (!(d > 0.0))
        throw std::invalid_argument("transmission_rate: distance must be positive");
    double snr = channel.tx_power * channel.unit_channel_gain *
                 std::pow(d, -channel.path_loss_exponent) / channel.noise_power;
    return bandwidth * std::log2(1.0 + snr);
}

double expected_latency(double task_size, double rate) {
    if (!(rate > 0.0))
        throw std::invalid_argument("expected_latency: rate must be positive");
    return task_size / rate;
}

double buyer_value(const VehicularUser& u, const ChannelParams& channel) {
    double rate = transmission_rate(u.requested_bandwidth, channel, u.max_distance);
    double latency = expected_latency(u.required.storage, rate);
    if (latency > channel.max_latency)
        throw InfeasibleLatency("buyer_value: expected latency " + std::to_string(latency) +
                                " s exceeds tolerable " +
                                std::to_string(channel.max_latency) + " s");
    if (latency <= 0.0) latency = std::numeric_limits<double>::min();
    return u.latency_sensitivity * std::log10(channel.max_latency / latency);
}

namespace {

// Maps raw values affinely onto [lo, hi]; a degenerate raw range maps to
// the target midpoint.
void affine_map(std::vector<std::pair<int, double>>& raw, double lo, double hi,
                std::map<int, double>& out) {
    if (raw.empty()) return;
    double rmin = raw.front().second, rmax = raw.front().second;
    for (const auto& [id, v] : raw) {
        rmin = std::min(rmin, v);
        rmax = std::max(rmax, v);
    }
    const double span = rmax - rmin;
    for (const auto& [id, v] : raw) {
        if (span < 1e-12)
            out[id] = 0.5 * (lo + hi);
        else
            out[id] = lo + (v - rmin) / span * (hi - lo);
    }
}

}  // namespace

CalibratedValues calibrated_values(const Scenario& s, const ValueWeights& w) {
    CalibratedValues out;
    std::vector<std::pair<int, double>> raw_b, raw_s;
    raw_b.reserve(s.users.size());
    raw_s.reserve(s.providers.size());
    for (const auto& u : s.users) raw_b.emplace_back(u.id, buyer_value(u, s.channel));
    for (const auto& p : s.providers) raw_s.emplace_back(p.id, seller_value(p, w));
    const auto& c = s.market.calibration;
    affine_map(raw_b, c.buyer_lo, c.buyer_hi, out.buyer);
    affine_map(raw_s, c.seller_lo, c.seller_hi, out.seller);
    return out;
}

}  // namespace madda
