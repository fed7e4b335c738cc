#pragma once

#include <map>
#include <stdexcept>

#include "madda/types.hpp"

namespace madda {

struct ValueWeights {
    double w1 = 1.0 / 3;
    double w2 = 1.0 / 3;
    double w3 = 1.0 / 3;
};

// Raised when a user's expected migration latency exceeds the tolerable bound.
struct InfeasibleLatency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// w1*delta*f^2 + w2*E*B + w3*x*eps
double seller_value(const ServiceProvider& p, const ValueWeights& w = {});

// Shannon-style rate at the user's maximum tolerable distance d.
double transmission_rate(double bandwidth, const ChannelParams& channel, double d);

double expected_latency(double task_size, double rate);

// alpha_hat * log10(T_max / T_bar); throws InfeasibleLatency when T_bar > T_max.
double buyer_value(const VehicularUser& u, const ChannelParams& channel);

struct CalibratedValues {
    std::map<int, double> buyer;   // user id -> buy-bid value
    std::map<int, double> seller;  // provider id -> sell-ask value
};

// Raw private values mapped affinely, per side, into the configured
// target intervals inside the clock price range.
CalibratedValues calibrated_values(const Scenario& s, const ValueWeights& w = {});

}  // namespace madda
