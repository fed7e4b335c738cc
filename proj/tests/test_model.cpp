#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "madda/dt_model.hpp"

using namespace madda;

TEST_CASE("causal attention basics") {
    // single token: output is its value row
    std::vector<std::vector<double>> q = {{0.3, -1.0}};
    std::vector<std::vector<double>> v = {{5.0, 7.0}};
    auto out = causal_attention(q, q, v);
    REQUIRE(out.size() == 1);
    CHECK(out[0][0] == doctest::Approx(5.0));
    CHECK(out[0][1] == doctest::Approx(7.0));

    // two identical tokens: the second output averages both values
    std::vector<std::vector<double>> q2 = {{1.0, 2.0}, {1.0, 2.0}};
    std::vector<std::vector<double>> v2 = {{0.0, 0.0}, {4.0, 4.0}};
    auto out2 = causal_attention(q2, q2, v2);
    CHECK(out2[0][0] == doctest::Approx(0.0));
    CHECK(out2[1][0] == doctest::Approx(2.0));
    CHECK(out2[1][1] == doctest::Approx(2.0));
}

TEST_CASE("causal attention ignores future tokens") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto rand_rows = [&](int t, int h) {
        std::vector<std::vector<double>> m(t, std::vector<double>(h));
        for (auto& row : m)
            for (auto& x : row) x = normal(rng);
        return m;
    };
    for (int trial = 0; trial < 20; ++trial) {
        auto q = rand_rows(5, 4), k = rand_rows(5, 4), v = rand_rows(5, 4);
        auto base = causal_attention(q, k, v);
        auto q2 = q, k2 = k, v2 = v;
        for (auto* m : {&q2, &k2, &v2})
            for (auto& x : (*m)[4]) x += normal(rng);
        auto pert = causal_attention(q2, k2, v2);
        for (int t = 0; t < 4; ++t)
            for (int h = 0; h < 4; ++h)
                CHECK(pert[t][h] == doctest::Approx(base[t][h]).epsilon(1e-12));
    }
}

namespace {

DtConfig toy_config() {
    DtConfig cfg;
    cfg.context_len = 3;
    cfg.embed_dim = 8;
    cfg.layers = 1;
    cfg.max_timesteps = 16;
    return cfg;
}

DtWindow toy_window(std::uint64_t seed, int t_len) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DtWindow w;
    for (int t = 0; t < t_len; ++t) {
        w.rtg.push_back(normal(rng));
        EnvState s;
        for (auto& x : s) x = normal(rng);
        w.states.push_back(s);
        w.actions.push_back(1 + (t % 10));
        w.timesteps.push_back(t + 1);
    }
    return w;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
    DtModel model(toy_config(), 7);
    DtWindow w = toy_window(3, 3);

    std::vector<double> grad(model.params().size(), 0.0);
    model.loss_and_grad(w, grad);

    const double eps = 1e-5;
    std::size_t checked = 0;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        double saved = model.params()[i];
        model.params()[i] = saved + eps;
        std::vector<double> sink(model.params().size(), 0.0);
        double up = model.loss_and_grad(w, sink);
        model.params()[i] = saved - eps;
        std::fill(sink.begin(), sink.end(), 0.0);
        double down = model.loss_and_grad(w, sink);
        model.params()[i] = saved;

        double numeric = (up - down) / (2 * eps);
        double denom = std::max({1.0, std::abs(numeric), std::abs(grad[i])});
        REQUIRE_MESSAGE(std::abs(numeric - grad[i]) / denom <= 1e-4,
                        "param ", i, ": analytic ", grad[i], " numeric ",
                        numeric);
        ++checked;
    }
    CHECK(checked == model.params().size());
}

TEST_CASE("future timesteps cannot influence earlier action predictions") {
    DtModel model(toy_config(), 5);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        DtWindow w = toy_window(100 + trial, 3);
        auto base = model.forward(w);
        DtWindow w2 = w;
        w2.rtg[2] += normal(rng);
        for (auto& x : w2.states[2]) x += normal(rng);
        w2.actions[2] = 1 + (w.actions[2] + 3);
        auto pert = model.forward(w2);
        CHECK(pert[0] == doctest::Approx(base[0]).epsilon(1e-12));
        CHECK(pert[1] == doctest::Approx(base[1]).epsilon(1e-12));
    }
}

TEST_CASE("training fits constant-action data") {
    // synthetic trajectories that always pick multiplier 4
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Trajectory> data;
    for (int ep = 0; ep < 8; ++ep) {
        Trajectory tr;
        for (int t = 0; t < 12; ++t) {
            EnvState s;
            for (auto& x : s) x = normal(rng);
            tr.states.push_back(s);
            tr.actions.push_back(4);
            tr.rewards.push_back(-1.0);
        }
        tr.rtg = returns_to_go(tr.rewards);
        tr.terminal = true;
        data.push_back(tr);
    }

    TrainConfig cfg;
    cfg.context_len = 5;
    cfg.embed_dim = 16;
    cfg.layers = 1;
    cfg.batch = 8;
    cfg.epochs = 40;
    cfg.steps_per_epoch = 10;
    cfg.learning_rate = 3e-3;
    cfg.seed = 2;
    TrainReport report;
    DtModel model = dt_train(data, cfg, &report);
    REQUIRE(report.epoch_losses.size() == 40);
    CHECK(report.epoch_losses.back() < 0.1);
    CHECK(report.epoch_losses.back() < report.epoch_losses.front());

    DtWindow w;
    w.rtg = {1.0};
    EnvState s;
    for (auto& x : s) x = normal(rng);
    w.states = {s};
    w.timesteps = {1};
    CHECK(model.act(w) == 4);
}

TEST_CASE("zero epochs leave the seeded initialization untouched") {
    std::vector<Trajectory> data(1);
    for (int t = 0; t < 6; ++t) {
        data[0].states.push_back(EnvState{});
        data[0].actions.push_back(2);
        data[0].rewards.push_back(-1.0);
    }
    data[0].rtg = returns_to_go(data[0].rewards);

    TrainConfig cfg;
    cfg.context_len = 3;
    cfg.embed_dim = 8;
    cfg.layers = 1;
    cfg.epochs = 0;
    cfg.seed = 9;
    DtModel trained = dt_train(data, cfg, nullptr);

    DtConfig expect_cfg = trained.config();
    DtModel fresh(expect_cfg, cfg.seed);
    CHECK(trained.params() == fresh.params());
}

TEST_CASE("training is deterministic") {
    auto make_data = [] {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Trajectory> data;
        for (int ep = 0; ep < 4; ++ep) {
            Trajectory tr;
            for (int t = 0; t < 10; ++t) {
                EnvState s;
                for (auto& x : s) x = normal(rng);
                tr.states.push_back(s);
                tr.actions.push_back(1 + t % 3);
                tr.rewards.push_back(-0.5 * t);
            }
            tr.rtg = returns_to_go(tr.rewards);
            data.push_back(tr);
        }
        return data;
    };
    TrainConfig cfg;
    cfg.context_len = 4;
    cfg.embed_dim = 8;
    cfg.layers = 1;
    cfg.batch = 4;
    cfg.epochs = 3;
    cfg.seed = 13;
    TrainReport r1, r2;
    DtModel m1 = dt_train(make_data(), cfg, &r1);
    DtModel m2 = dt_train(make_data(), cfg, &r2);
    CHECK(r1.epoch_losses == r2.epoch_losses);
    CHECK(m1.params() == m2.params());
}

TEST_CASE("checkpoint round trip") {
    DtModel model(toy_config(), 21);
    std::string path =
        (std::filesystem::temp_directory_path() / "dt_test.json").string();
    model.save(path);
    DtModel back = DtModel::load(path);
    CHECK(back.params() == model.params());
    CHECK(back.config().embed_dim == model.config().embed_dim);
    CHECK(back.config().context_len == model.config().context_len);

    DtWindow w = toy_window(6, 2);
    w.actions.pop_back();  // inference shape
    CHECK(back.act(w) == model.act(w));
    std::remove(path.c_str());

    CHECK_THROWS(DtModel::from_json("{\"format\":\"bogus\"}"));
}

TEST_CASE("policy emits valid actions and honors the context window") {
    DtModel model(toy_config(), 33);
    DtPolicy policy(model, 1.0);
    std::mt19937_64 rng(0);

    EnvState s{0, 1, 100, 1, 0, 0};
    policy.begin_episode(s);
    // run far past the context length; every action must stay in range
    for (int t = 0; t < 40; ++t) {
        int a = policy.act(s, rng);
        CHECK(a >= 1);
        CHECK(a <= 10);
        s[1] += 1;
        policy.on_transition(a, -0.1, s);
    }
}

TEST_CASE("window validation") {
    DtModel model(toy_config(), 2);
    DtWindow bad = toy_window(1, 3);
    bad.timesteps.pop_back();
    CHECK_THROWS(model.forward(bad));
}
