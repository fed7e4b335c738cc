#include "madda/auction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace madda {

int AuctionState::uncommitted_buyers() const {
    return static_cast<int>(buyer_order.size() - buy_winners.size());
}

int AuctionState::uncommitted_sellers() const {
    return static_cast<int>(seller_order.size() - sell_winners.size());
}

AuctionState init_auction(const PerfectMatching& gamma,
                          const std::map<int, double>& buyer_values,
                          const std::map<int, double>& seller_values, double p_min,
                          double p_max, double min_increment) {
    if (gamma.pairs.empty())
        throw std::invalid_argument("init_auction: empty matching");
    if (!(p_min < p_max))
        throw std::invalid_argument("init_auction: p_min must be below p_max");
    if (!(min_increment > 0.0))
        throw std::invalid_argument("init_auction: min_increment must be positive");

    AuctionState st;
    st.price_min = p_min;
    st.price_max = p_max;
    st.min_increment = min_increment;
    st.buyer_clock = p_max;
    st.seller_clock = p_min;
    st.active_side = Side::buyer;
    st.round = 1;

    for (const auto& [m, n] : gamma.pairs) {
        auto bv = buyer_values.find(m);
        auto sv = seller_values.find(n);
        if (bv == buyer_values.end() || sv == seller_values.end())
            throw std::invalid_argument("init_auction: missing value for matched participant");
        st.buyer_values[m] = bv->second;
        st.seller_values[n] = sv->second;
    }
    for (const auto& [id, v] : st.buyer_values) st.buyer_order.push_back(id);
    for (const auto& [id, v] : st.seller_values) st.seller_order.push_back(id);
    std::stable_sort(st.buyer_order.begin(), st.buyer_order.end(), [&](int a, int b) {
        if (st.buyer_values.at(a) != st.buyer_values.at(b))
            return st.buyer_values.at(a) > st.buyer_values.at(b);
        return a < b;
    });
    std::stable_sort(st.seller_order.begin(), st.seller_order.end(), [&](int a, int b) {
        if (st.seller_values.at(a) != st.seller_values.at(b))
            return st.seller_values.at(a) < st.seller_values.at(b);
        return a < b;
    });
    return st;
}

StepEvents step(AuctionState& st, double step_size) {
    if (st.terminated) throw std::logic_error("step: auction already terminated");
    if (!(step_size > 0.0))
        throw std::invalid_argument("step: step size must be positive");
    double multiple = step_size / st.min_increment;
    if (std::abs(multiple - std::round(multiple)) > 1e-9)
        throw std::invalid_argument("step: step size must be a multiple of the increment");

    StepEvents ev;
    if (st.active_side == Side::buyer) {
        ev.broadcast_count = st.uncommitted_buyers();
        for (int m : st.buyer_order) {
            if (st.accepted_bids.count(m)) continue;
            double v = st.buyer_values.at(m);
            if (st.buyer_clock <= v) {
                st.accepted_bids[m] = st.buyer_clock;
                st.buy_winners.push_back(m);
                ev.acceptances.push_back(
                    {Side::buyer, m, st.buyer_clock, v - st.buyer_clock});
            }
        }
        if (ev.acceptances.empty()) {
            st.pre_cross_buyer_clock = st.buyer_clock;
            st.pre_cross_seller_clock = st.seller_clock;
            st.buyer_clock -= step_size;
        }
        st.clock_history_buy.push_back(st.buyer_clock);
    } else {
        ev.broadcast_count = st.uncommitted_sellers();
        for (int n : st.seller_order) {
            if (st.accepted_asks.count(n)) continue;
            double v = st.seller_values.at(n);
            if (st.seller_clock >= v) {
                st.accepted_asks[n] = st.seller_clock;
                st.sell_winners.push_back(n);
                ev.acceptances.push_back(
                    {Side::seller, n, st.seller_clock, st.seller_clock - v});
            }
        }
        if (ev.acceptances.empty()) {
            st.pre_cross_buyer_clock = st.buyer_clock;
            st.pre_cross_seller_clock = st.seller_clock;
            st.seller_clock += step_size;
        }
        st.clock_history_sell.push_back(st.seller_clock);
    }

    if (st.buyer_clock < st.seller_clock) {
        st.terminated = true;
        st.crossing_side = st.active_side;
        ev.terminated = true;
    }
    st.active_side = st.active_side == Side::buyer ? Side::seller : Side::buyer;
    st.round += 1;
    return ev;
}

double clearing_price(const AuctionState& st, double alpha) {
    if (!st.terminated) throw std::logic_error("clearing_price: auction still running");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("clearing_price: alpha outside [0,1]");
    return alpha * st.pre_cross_buyer_clock + (1.0 - alpha) * st.pre_cross_seller_clock;
}

Settlement settle(const AuctionState& st, const PerfectMatching& gamma, double alpha) {
    if (!st.terminated) throw std::logic_error("settle: auction still running");

    Settlement out;
    out.clearing_price = clearing_price(st, alpha);

    // Candidate pairs: committed on both sides and matched, ordered by the
    // buyer's acceptance order.
    for (int m : st.buy_winners) {
        for (const auto& [gm, gn] : gamma.pairs) {
            if (gm != m) continue;
            if (st.accepted_asks.count(gn)) out.candidate_pairs.emplace_back(m, gn);
        }
    }
    std::size_t kappa = out.candidate_pairs.size();
    if (st.crossing_side == Side::seller && kappa > 0) kappa -= 1;
    out.winning_pairs.assign(out.candidate_pairs.begin(),
                             out.candidate_pairs.begin() + kappa);

    for (const auto& [m, v] : st.buyer_values) out.buyer_utilities[m] = 0.0;
    for (const auto& [n, v] : st.seller_values) out.seller_utilities[n] = 0.0;
    for (const auto& [m, n] : out.winning_pairs) {
        double g = st.accepted_bids.at(m);
        double k = st.accepted_asks.at(n);
        out.buyer_utilities[m] = g - out.clearing_price;
        out.seller_utilities[n] = out.clearing_price - k;
        out.buyer_charges[m] = out.clearing_price;
        out.seller_payments[n] = out.clearing_price;
        out.social_welfare += (g - out.clearing_price) + (out.clearing_price - k);
    }
    return out;
}

double exchange_cost(int participants, double zeta) {
    if (participants < 0)
        throw std::invalid_argument("exchange_cost: negative participant count");
    return zeta * participants;
}

}  // namespace madda
