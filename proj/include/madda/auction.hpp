#pragma once

#include <map>
#include <vector>

#include "madda/matching.hpp"

namespace madda {

enum class Side { buyer = 0, seller = 1 };

struct Acceptance {
    Side side;
    int id;
    double price;   // clock value taken as bid/ask
    double regret;  // |private value - price|
};

struct StepEvents {
    std::vector<Acceptance> acceptances;
    int broadcast_count = 0;  // uncommitted participants on the active side
    bool terminated = false;
};

struct AuctionState {
    Side active_side = Side::buyer;
    int round = 1;
    double buyer_clock = 0.0;
    double seller_clock = 0.0;
    double price_min = 0.0;
    double price_max = 0.0;
    double min_increment = 1.0;

    std::vector<int> buy_winners;   // in acceptance order
    std::vector<int> sell_winners;  // in acceptance order
    std::vector<double> clock_history_buy;
    std::vector<double> clock_history_sell;
    std::map<int, double> accepted_bids;   // buyer -> g_m
    std::map<int, double> accepted_asks;   // seller -> k_n
    std::vector<int> buyer_order;          // values nonincreasing, ties by id
    std::vector<int> seller_order;         // values nondecreasing, ties by id
    std::map<int, double> buyer_values;    // participants of the matching only
    std::map<int, double> seller_values;

    bool terminated = false;
    Side crossing_side = Side::buyer;      // active side when crossing was detected
    double pre_cross_buyer_clock = 0.0;    // clocks before the crossing adjustment
    double pre_cross_seller_clock = 0.0;

    int uncommitted_buyers() const;
    int uncommitted_sellers() const;
};

struct Settlement {
    double clearing_price = 0.0;
    std::vector<std::pair<int, int>> candidate_pairs;  // Lambda, buyer accept order
    std::vector<std::pair<int, int>> winning_pairs;    // first kappa of Lambda
    std::map<int, double> buyer_utilities;
    std::map<int, double> seller_utilities;
    std::map<int, double> buyer_charges;
    std::map<int, double> seller_payments;
    double social_welfare = 0.0;
};

// Participants are restricted to the vertices of the matching; values are
// looked up per id and must exist for every matched participant.
AuctionState init_auction(const PerfectMatching& gamma,
                          const std::map<int, double>& buyer_values,
                          const std::map<int, double>& seller_values, double p_min,
                          double p_max, double min_increment = 1.0);

// One broadcast/acceptance/adjustment round on the active side. The clock
// moves only when nobody accepts; sides alternate afterwards.
StepEvents step(AuctionState& st, double step_size);

double clearing_price(const AuctionState& st, double alpha);

Settlement settle(const AuctionState& st, const PerfectMatching& gamma, double alpha);

double exchange_cost(int participants, double zeta);

}  // namespace madda
